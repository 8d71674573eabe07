use std::collections::HashMap;

use serde::Serialize;

use super::RearrangementResult;
use crate::error::{Error, Result};
use crate::tree::{split_components, Cut, EdgeIdx, EdgeSelector, MarkedTree, TreePoint, VertexIdx};

#[derive(Debug, Clone, Serialize)]
pub struct Condition {
    pub name: String,
    pub passed: bool,
    /// Number of points, pairs or components examined.
    pub checked: usize,
    /// Ids of the points (or components) where the check fails or is tightest.
    pub witness: Vec<String>,
    /// Largest ratio or deviation seen.
    pub worst: Option<f64>,
    pub detail: Option<String>,
}

impl Condition {
    fn new(name: &str) -> Self {
        Condition {
            name: name.to_owned(),
            passed: true,
            checked: 0,
            witness: Vec::new(),
            worst: None,
            detail: None,
        }
    }

    fn fail(&mut self, witness: Vec<String>, detail: String) {
        if self.passed {
            self.passed = false;
            self.witness = witness;
            self.detail = Some(detail);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub conditions: Vec<Condition>,
    pub claimed_constant: f64,
    /// Largest `d(ψp, ψq) / d(p, q)` over pairs of M-points.
    pub empirical_constant: Option<f64>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.passed)
    }
}

fn point_name(t: &MarkedTree, p: TreePoint) -> String {
    match p {
        TreePoint::Vertex(v) => t.vertex(v).id.clone(),
        TreePoint::Edge { edge, offset } => format!("{}@{}", t.edge(edge).id, offset),
    }
}

fn midpoint(t: &MarkedTree, e: EdgeIdx, lo: f64, hi: f64) -> TreePoint {
    t.edge_point(e, (lo + hi) / 2.0).expect("midpoint lies on the edge")
}

/// Checks order preservation on the tree (I), order isomorphism on M (II)
/// and the two-sided distance bound with the claimed constant (III).
pub fn verify_rearrangement(
    src: &MarkedTree,
    res: &RearrangementResult,
    tol: f64,
) -> Result<VerificationReport> {
    res.check_covers(src)?;
    let tgt = &res.target;
    let img = |p: TreePoint| res.image(p);

    let mut base = Condition::new("root and M images");
    base.checked = 1;
    if img(TreePoint::Vertex(src.root())) != TreePoint::Vertex(tgt.root()) {
        base.fail(
            vec![src.vertex(src.root()).id.clone()],
            "the root is not sent to the root".into(),
        );
    }
    let ms = src.m_points();
    let mut seen: HashMap<VertexIdx, VertexIdx> = HashMap::new();
    for &p in &ms {
        base.checked += 1;
        let TreePoint::Vertex(q) = img(TreePoint::Vertex(p)) else {
            base.fail(vec![src.vertex(p).id.clone()], "M-point sent inside an edge".into());
            continue;
        };
        if !tgt.is_m(q) || tgt.label_of(q) != src.label_of(p) {
            base.fail(
                vec![src.vertex(p).id.clone()],
                "M-point image is not the same point of M in the target".into(),
            );
        }
        if let Some(other) = seen.insert(q, p) {
            base.fail(
                vec![src.vertex(other).id.clone(), src.vertex(p).id.clone()],
                "two M-points share an image".into(),
            );
        }
    }

    // (I): ancestors of each vertex, and each edge midpoint between its ends.
    let mut order = Condition::new("I");
    for v in src.vertex_indices() {
        let pv = img(TreePoint::Vertex(v));
        for u in src.root_path_vertices(TreePoint::Vertex(v)) {
            order.checked += 1;
            if !tgt.precedes(img(TreePoint::Vertex(u)), pv) {
                order.fail(
                    vec![src.vertex(u).id.clone(), src.vertex(v).id.clone()],
                    "order between a vertex and its ancestor is lost".into(),
                );
            }
        }
    }
    for e in src.edge_indices() {
        let edge = src.edge(e);
        let mid = img(midpoint(src, e, 0.0, edge.length));
        order.checked += 2;
        if !tgt.precedes(img(TreePoint::Vertex(edge.lower)), mid)
            || !tgt.precedes(mid, img(TreePoint::Vertex(edge.upper)))
        {
            order.fail(vec![edge.id.clone()], "an edge midpoint leaves the order".into());
        }
    }

    let mut iso = Condition::new("II");
    for &p in &ms {
        for &q in &ms {
            if p == q {
                continue;
            }
            iso.checked += 1;
            let before = src.precedes(TreePoint::Vertex(p), TreePoint::Vertex(q));
            let after = tgt.precedes(img(TreePoint::Vertex(p)), img(TreePoint::Vertex(q)));
            if before != after {
                iso.fail(
                    vec![src.vertex(p).id.clone(), src.vertex(q).id.clone()],
                    format!("order {before} becomes {after}"),
                );
            }
        }
    }

    let mut dist = Condition::new("III");
    let mut worst = (1.0f64, Vec::new());
    for (i, &p) in ms.iter().enumerate() {
        for &q in &ms[i + 1..] {
            dist.checked += 1;
            let d = src.distance(TreePoint::Vertex(p), TreePoint::Vertex(q));
            let dd = tgt.distance(img(TreePoint::Vertex(p)), img(TreePoint::Vertex(q)));
            let pair = vec![src.vertex(p).id.clone(), src.vertex(q).id.clone()];
            if d > 0.0 && dd / d > worst.0 {
                worst = (dd / d, pair.clone());
            }
            if dd < d - tol {
                dist.fail(pair, format!("distance shrinks from {d} to {dd}"));
            } else if dd > res.constant * d + tol {
                dist.fail(
                    pair,
                    format!("distance grows from {d} to {dd}, beyond factor {}", res.constant),
                );
            }
        }
    }
    dist.worst = Some(worst.0);
    if dist.passed {
        dist.witness = worst.1;
    }

    Ok(VerificationReport {
        conditions: vec![base, order, iso, dist],
        claimed_constant: res.constant,
        empirical_constant: Some(worst.0),
    })
}

/// Target edges covering the part `[lo, hi]` of a source edge.
fn chain_part(tgt: &MarkedTree, chain: &[EdgeIdx], lo: f64, hi: f64, tol: f64) -> Vec<EdgeIdx> {
    let mut out = Vec::new();
    let mut acc = 0.0;
    for &f in chain {
        let len = tgt.edge(f).length;
        if acc < hi - tol && acc + len > lo + tol {
            out.push(f);
        }
        acc += len;
    }
    out
}

/// Checks that the map is subordinated to its segment `[x, y]`: components
/// of the complement have disjoint images (IV) and move isometrically (V),
/// and the two sides together with the segment stay fixed (VI).
pub fn verify_subordinated(
    src: &MarkedTree,
    res: &RearrangementResult,
    tol: f64,
) -> Result<VerificationReport> {
    let (x, y) = res
        .segment
        .ok_or_else(|| Error::precondition("the result is not subordinated to a segment"))?;
    res.check_covers(src)?;
    let tgt = &res.target;
    let img = |p: TreePoint| res.image(p);
    let length = src.distance(x, y);
    let comps = split_components(src, Cut::Segment(x, y));

    let name = |c: &crate::tree::Component| -> String {
        c.vertices
            .first()
            .map(|&v| src.vertex(v).id.clone())
            .unwrap_or_else(|| "(empty)".into())
    };

    let mut disjoint = Condition::new("IV");
    let mut vertex_owner: HashMap<VertexIdx, usize> = HashMap::new();
    let mut edge_owner: HashMap<EdgeIdx, usize> = HashMap::new();
    for (ci, c) in comps.iter().enumerate() {
        disjoint.checked += 1;
        let mut vs: Vec<VertexIdx> = Vec::new();
        for &v in &c.vertices {
            if let TreePoint::Vertex(w) = img(TreePoint::Vertex(v)) {
                vs.push(w);
            }
        }
        let mut es: Vec<EdgeIdx> = Vec::new();
        for &e in &c.edges {
            es.extend(res.map.edge_images[e.0].iter().copied());
        }
        for p in &c.pieces {
            es.extend(chain_part(tgt, &res.map.edge_images[p.edge.0], p.lo, p.hi, tol));
        }
        for w in vs {
            if let Some(&other) = vertex_owner.get(&w) {
                if other != ci {
                    disjoint.fail(
                        vec![name(&comps[other]), name(c)],
                        format!("images share vertex {:?}", tgt.vertex(w).id),
                    );
                }
            }
            vertex_owner.insert(w, ci);
        }
        for f in es {
            if let Some(&other) = edge_owner.get(&f) {
                if other != ci {
                    disjoint.fail(
                        vec![name(&comps[other]), name(c)],
                        format!("images share edge {:?}", tgt.edge(f).id),
                    );
                }
            }
            edge_owner.insert(f, ci);
        }
    }

    let mut isometry = Condition::new("V");
    let mut worst_dev = 0.0f64;
    for c in &comps {
        let mut pts: Vec<TreePoint> = c.vertices.iter().map(|&v| TreePoint::Vertex(v)).collect();
        pts.extend(
            c.edges
                .iter()
                .map(|&e| midpoint(src, e, 0.0, src.edge(e).length)),
        );
        pts.extend(c.pieces.iter().map(|p| midpoint(src, p.edge, p.lo, p.hi)));
        let images: Vec<TreePoint> = pts.iter().map(|&p| img(p)).collect();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                isometry.checked += 1;
                let d = src.distance(pts[i], pts[j]);
                let dd = tgt.distance(images[i], images[j]);
                let dev = (dd - d).abs();
                worst_dev = worst_dev.max(dev);
                if dev > tol {
                    isometry.fail(
                        vec![point_name(src, pts[i]), point_name(src, pts[j])],
                        format!("distance {d} becomes {dd} inside one component"),
                    );
                }
            }
        }
    }
    isometry.worst = Some(worst_dev);

    let mut fixed = Condition::new("VI");
    let mut pts: Vec<TreePoint> = Vec::new();
    for c in comps
        .iter()
        .filter(|c| c.position <= tol || c.position >= length - tol)
    {
        pts.extend(c.vertices.iter().map(|&v| TreePoint::Vertex(v)));
        pts.extend(
            c.edges
                .iter()
                .map(|&e| midpoint(src, e, 0.0, src.edge(e).length)),
        );
        pts.extend(c.pieces.iter().map(|p| midpoint(src, p.edge, p.lo, p.hi)));
    }
    let seg = src.segment(x, y);
    pts.extend(seg.vertices.iter().map(|&(v, _)| TreePoint::Vertex(v)));
    pts.extend(
        seg.pieces
            .iter()
            .map(|p| midpoint(src, p.edge, p.from_offset.min(p.to_offset), p.from_offset.max(p.to_offset))),
    );
    pts.extend([x, y]);
    let mut worst_shift = 0.0f64;
    for p in pts {
        fixed.checked += 1;
        let q = img(p);
        let shift = (tgt.depth(q) - src.depth(p)).abs();
        worst_shift = worst_shift.max(shift);
        let same = match p {
            TreePoint::Vertex(v) => {
                matches!(q, TreePoint::Vertex(w) if tgt.vertex(w).id == src.vertex(v).id)
            }
            TreePoint::Edge { edge, offset } => {
                let lower = img(TreePoint::Vertex(src.edge(edge).lower));
                matches!(lower, TreePoint::Vertex(w) if tgt.vertex(w).id == src.vertex(src.edge(edge).lower).id)
                    && tgt.precedes(lower, q)
                    && (tgt.distance(lower, q) - offset).abs() <= tol
            }
        };
        if !same || shift > tol {
            fixed.fail(
                vec![point_name(src, p)],
                format!("point moves (depth {} becomes {})", src.depth(p), tgt.depth(q)),
            );
        }
    }
    fixed.worst = Some(worst_shift);

    Ok(VerificationReport {
        conditions: vec![disjoint, isometry, fixed],
        claimed_constant: res.constant,
        empirical_constant: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureReport {
    pub source: f64,
    pub image: f64,
    pub subordinated: bool,
    pub inequality_holds: bool,
    pub equal: bool,
}

impl MeasureReport {
    /// The image measure is at least the source measure, and equal when the
    /// map is subordinated.
    pub fn passed(&self) -> bool {
        self.inequality_holds && (!self.subordinated || self.equal)
    }
}

/// Length measure of M before and after.
pub fn measure_check(src: &MarkedTree, res: &RearrangementResult) -> MeasureReport {
    let source = src
        .length_measure(&EdgeSelector::Marked)
        .expect("marked selection never fails");
    let image = res
        .target
        .length_measure(&EdgeSelector::Marked)
        .expect("marked selection never fails");
    MeasureReport {
        source,
        image,
        subordinated: res.segment.is_some(),
        inequality_holds: image >= source,
        equal: image == source,
    }
}

/// Branching points of the hull of `set`: vertices from which at least three
/// directions lead to a member of `set`.
pub fn branching_of_set(t: &MarkedTree, set: &[VertexIdx]) -> Vec<VertexIdx> {
    let mut count = vec![0usize; t.vertex_count()];
    for &v in set {
        count[v.0] += 1;
    }
    let total: usize = set.len();
    let order = t.subtree_vertices(t.root());
    for &v in order.iter().rev() {
        if let Some(p) = t.parent(v) {
            count[p.0] += count[v.0];
        }
    }
    order
        .into_iter()
        .filter(|&v| {
            let down = t
                .child_edges(v)
                .iter()
                .filter(|&&e| count[t.edge(e).upper.0] > 0)
                .count();
            let up = usize::from(total > count[v.0]);
            down + up >= 3
        })
        .collect()
}
