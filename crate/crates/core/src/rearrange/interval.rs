use std::collections::{BTreeMap, HashSet};

use super::{
    branching_of_set, Attachment, FreshIds, GridPoint, IntervalTrace, PointMap,
    RearrangementResult, Trace,
};
use crate::error::{Error, Result};
use crate::tree::{split_components, Cut, MarkedTree, SegmentPath, TreePoint, Vertex, VertexIdx};

/// Upper bound on the number of grid points a single interval may receive.
pub const MAX_GRID_POINTS: usize = 2_000_000;

pub(crate) struct IntervalParams {
    pub spur: f64,
    pub epsilon: f64,
    pub distance_to_m: f64,
    pub stage: Option<usize>,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::value(format!("epsilon must be positive, got {epsilon}")))
    }
}

fn ordered_segment(t: &MarkedTree, x: TreePoint, y: TreePoint, tol: f64) -> Result<SegmentPath> {
    t.check_point(x)?;
    t.check_point(y)?;
    if !t.precedes(x, y) || t.distance(x, y) <= tol {
        return Err(Error::precondition(
            "the segment endpoints must satisfy x ≺ y strictly",
        ));
    }
    Ok(t.segment(x, y))
}

/// The first point of M met on the segment, closed or open.
fn m_on_segment(t: &MarkedTree, seg: &SegmentPath, closed: bool) -> Option<String> {
    let verts: Vec<(VertexIdx, f64)> = if closed {
        seg.vertices.clone()
    } else {
        seg.interior_vertices().collect()
    };
    if let Some((v, _)) = verts.into_iter().find(|&(v, _)| t.is_m(v)) {
        return Some(format!("M-point {:?}", t.label_of(v)));
    }
    seg.pieces
        .iter()
        .find(|p| t.edge(p.edge).marked)
        .map(|p| format!("marked edge {:?}", t.edge(p.edge).id))
}

fn interior_components(
    t: &MarkedTree,
    x: TreePoint,
    y: TreePoint,
    length: f64,
    tol: f64,
) -> Vec<crate::tree::Component> {
    split_components(t, Cut::Segment(x, y))
        .into_iter()
        .filter(|c| c.position > tol && c.position < length - tol)
        .collect()
}

fn subordinated_identity(t: &MarkedTree, x: TreePoint, y: TreePoint) -> RearrangementResult {
    let mut r = RearrangementResult::identity(t);
    r.segment = Some((x, y));
    r
}

/// Equally spaced grid on `[0, length]` with spacing at most `spur`, no
/// interior point within `tol` of a branching position. On a collision the
/// grid is refined by one step and each colliding point is pushed upward by
/// less than the spare spacing.
fn grid_positions(
    length: f64,
    spur: f64,
    branching: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, Vec<bool>)> {
    let steps_for = |m: usize| -> Result<Vec<f64>> {
        if m + 1 > MAX_GRID_POINTS {
            return Err(Error::Numerical {
                message: format!("interval needs {} grid points", m + 1),
                residual: spur,
            });
        }
        Ok((0..=m).map(|k| length * k as f64 / m as f64).collect())
    };
    let collides = |s: f64| branching.iter().any(|&b| (s - b).abs() <= tol);
    let mut m = ((length / spur) - 1e-9).ceil().max(1.0) as usize;
    let mut s = steps_for(m)?;
    let mut shifted = vec![false; m + 1];
    if s[1..m].iter().any(|&z| collides(z)) {
        m += 1;
        s = steps_for(m)?;
        shifted = vec![false; m + 1];
        let spare = spur - length / m as f64;
        for k in 1..m {
            if !collides(s[k]) {
                continue;
            }
            let mut room = (s[k + 1] - s[k]).min(s[k] - s[k - 1]);
            for &b in branching {
                if (s[k] - b).abs() > tol {
                    room = room.min((b - s[k]).abs());
                }
            }
            let delta = (spare / 2.0).min(room / 2.0);
            if delta <= 2.0 * tol {
                return Err(Error::Numerical {
                    message: "no room to move a grid point off a branching point".into(),
                    residual: delta,
                });
            }
            s[k] += delta;
            shifted[k] = true;
        }
        if s[1..m].iter().any(|&z| collides(z)) {
            return Err(Error::Numerical {
                message: "grid still meets a branching point".into(),
                residual: tol,
            });
        }
    }
    Ok((s, shifted))
}

/// The separated-interval construction with an explicit spur length: each
/// component hanging from the open segment is cut off and re-hung, through a
/// new edge of length `spur`, from the first grid point above its attachment.
pub(crate) fn separated_core(
    t: &MarkedTree,
    x: TreePoint,
    y: TreePoint,
    params: IntervalParams,
    tol: f64,
) -> Result<RearrangementResult> {
    let seg = ordered_segment(t, x, y, tol)?;
    if let Some(what) = m_on_segment(t, &seg, true) {
        return Err(Error::precondition(format!("[x, y] meets M at {what}")));
    }
    for p in [x, y] {
        if let TreePoint::Vertex(v) = p {
            if t.degree(v) >= 3 {
                return Err(Error::precondition(format!(
                    "segment endpoint {:?} is a branching point",
                    t.vertex(v).id
                )));
            }
        }
    }
    if !(params.spur.is_finite() && params.spur > 0.0) {
        return Err(Error::value(format!("spur length must be positive, got {}", params.spur)));
    }
    let length = seg.length;
    let comps = interior_components(t, x, y, length, tol);
    if comps.is_empty() {
        return Ok(subordinated_identity(t, x, y));
    }
    let branching: Vec<f64> = seg
        .interior_vertices()
        .filter(|&(v, _)| t.degree(v) >= 3)
        .map(|(_, s)| s)
        .collect();
    let (grid, shifted) = grid_positions(length, params.spur, &branching, tol)?;

    let mut fresh = FreshIds::new(t);
    let mut vertices: Vec<Vertex> = t.vertices().to_vec();
    let mut edges = t.edges().to_vec();
    let mut chains: Vec<Vec<crate::tree::EdgeIdx>> = t.edge_indices().map(|e| vec![e]).collect();

    // Place grid points: reuse vertices, otherwise split edges.
    let mut grid_vertex: Vec<Option<VertexIdx>> = vec![None; grid.len()];
    let mut splits: BTreeMap<usize, Vec<(f64, usize)>> = BTreeMap::new();
    for (k, &s) in grid.iter().enumerate() {
        if let Some(&(v, _)) = seg.vertices.iter().find(|&&(_, p)| (p - s).abs() <= tol) {
            grid_vertex[k] = Some(v);
            continue;
        }
        let piece = seg
            .pieces
            .iter()
            .find(|p| p.start - tol <= s && s <= p.end + tol)
            .ok_or_else(|| Error::Invariant {
                stage: params.stage.unwrap_or(0),
                message: format!("grid position {s} is not on the segment"),
            })?;
        let offset = if piece.ascending() {
            piece.from_offset + (s - piece.start)
        } else {
            piece.from_offset - (s - piece.start)
        };
        splits.entry(piece.edge.0).or_default().push((offset, k));
    }
    for (e, mut cuts) in splits {
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let upper = edges[e].upper;
        let total = edges[e].length;
        let mut prev = (edges[e].lower, 0.0);
        for (i, &(offset, k)) in cuts.iter().enumerate() {
            let g = VertexIdx(vertices.len());
            vertices.push(Vertex::steiner(fresh.vertex("z")));
            grid_vertex[k] = Some(g);
            if i == 0 {
                edges[e].upper = g;
                edges[e].length = offset;
                edges[e].literal = None;
            } else {
                chains[e].push(crate::tree::EdgeIdx(edges.len()));
                edges.push(crate::tree::Edge::new(fresh.edge("f"), prev.0, g, offset - prev.1));
            }
            prev = (g, offset);
        }
        chains[e].push(crate::tree::EdgeIdx(edges.len()));
        edges.push(crate::tree::Edge::new(fresh.edge("f"), prev.0, upper, total - prev.1));
    }
    let grid_vertex: Vec<VertexIdx> = grid_vertex
        .into_iter()
        .map(|g| g.expect("every grid point placed"))
        .collect();

    let mut attachments = Vec::with_capacity(comps.len());
    for comp in &comps {
        let TreePoint::Vertex(b) = comp.attachment else {
            return Err(Error::Invariant {
                stage: params.stage.unwrap_or(0),
                message: "a component hangs from inside an edge".into(),
            });
        };
        let root_edge = comp
            .edges
            .iter()
            .copied()
            .find(|&e| t.edge(e).lower == b)
            .ok_or_else(|| Error::Invariant {
                stage: params.stage.unwrap_or(0),
                message: "component is not above its attachment".into(),
            })?;
        let k = grid.partition_point(|&z| z <= comp.position);
        let w = VertexIdx(vertices.len());
        let spur_vertex = fresh.vertex("w");
        vertices.push(Vertex::steiner(spur_vertex.clone()));
        let spur_edge = fresh.edge("sp");
        edges.push(crate::tree::Edge::new(
            spur_edge.clone(),
            grid_vertex[k],
            w,
            params.spur,
        ));
        edges[root_edge.0].lower = w;
        attachments.push(Attachment {
            component: t.vertex(t.edge(root_edge).upper).id.clone(),
            from: t.vertex(b).id.clone(),
            from_position: comp.position,
            grid_index: k,
            grid_id: vertices[grid_vertex[k].0].id.clone(),
            spur_vertex,
            spur_edge,
            spur_length: params.spur,
        });
    }

    let target = MarkedTree::new(vertices, edges, t.root())?;
    let grid_trace = grid
        .iter()
        .zip(&grid_vertex)
        .zip(&shifted)
        .map(|((&position, &g), &shifted)| GridPoint {
            id: target.vertex(g).id.clone(),
            position,
            shifted,
        })
        .collect();
    let trace = Trace {
        intervals: vec![IntervalTrace {
            stage: params.stage,
            lower: t.point_document(x),
            upper: t.point_document(y),
            length,
            distance_to_m: params.distance_to_m,
            epsilon: params.epsilon,
            spur: params.spur,
            steps: grid.len() - 1,
            grid: grid_trace,
            attachments,
        }],
        ..Trace::default()
    };
    Ok(RearrangementResult {
        target,
        map: PointMap {
            vertex_images: t.vertex_indices().collect(),
            edge_images: chains,
        },
        constant: 1.0 + params.epsilon,
        segment: Some((x, y)),
        trace,
    })
}

fn distance_to_m(t: &MarkedTree, a: TreePoint, b: TreePoint) -> f64 {
    t.m_points()
        .into_iter()
        .map(|v| t.distance_to_segment(TreePoint::Vertex(v), a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Re-hangs the components attached to the open segment `(x, y)` so that
/// their attachment points fall on a finite grid, with distortion at most
/// `1 + epsilon`. Requires `x ≺ y`, `[x, y]` disjoint from M and neither
/// endpoint a branching point.
pub fn rearrange_separated_interval(
    t: &MarkedTree,
    x: TreePoint,
    y: TreePoint,
    epsilon: f64,
    tol: f64,
) -> Result<RearrangementResult> {
    check_epsilon(epsilon)?;
    let seg = ordered_segment(t, x, y, tol)?;
    if let Some(what) = m_on_segment(t, &seg, true) {
        return Err(Error::precondition(format!("[x, y] meets M at {what}")));
    }
    let dm = distance_to_m(t, x, y);
    separated_core(
        t,
        x,
        y,
        IntervalParams {
            spur: dm * epsilon / 3.0,
            epsilon,
            distance_to_m: dm,
            stage: None,
        },
        tol,
    )
}

/// Gap version without the requirement that the endpoints lie in M.
pub(crate) fn gap_core(
    t: &MarkedTree,
    x: TreePoint,
    y: TreePoint,
    epsilon: f64,
    tol: f64,
    stage: Option<usize>,
) -> Result<RearrangementResult> {
    check_epsilon(epsilon)?;
    let seg = ordered_segment(t, x, y, tol)?;
    if let Some(what) = m_on_segment(t, &seg, false) {
        return Err(Error::precondition(format!("(x, y) meets M at {what}")));
    }
    let length = seg.length;
    let mut anchors: Vec<f64> = interior_components(t, x, y, length, tol)
        .iter()
        .map(|c| c.position)
        .collect();
    anchors.sort_by(f64::total_cmp);
    anchors.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let mut cur = subordinated_identity(t, x, y);
    if anchors.is_empty() {
        return Ok(cur);
    }
    // Cut points halfway between consecutive attachments and the ends.
    let mut cuts = Vec::with_capacity(anchors.len() + 1);
    cuts.push(anchors[0] / 2.0);
    for w in anchors.windows(2) {
        cuts.push((w[0] + w[1]) / 2.0);
    }
    cuts.push((anchors[anchors.len() - 1] + length) / 2.0);

    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let a0 = t.point_along(x, y, lo);
        let b0 = t.point_along(x, y, hi);
        let dk = distance_to_m(t, a0, b0);
        let ek = epsilon * f64::min(dk / (dk + lo), dk / (dk + (length - hi)));
        let xi = cur.image(x);
        let yi = cur.image(y);
        let a = cur.target.point_along(xi, yi, lo);
        let b = cur.target.point_along(xi, yi, hi);
        let step = separated_core(
            &cur.target,
            a,
            b,
            IntervalParams {
                spur: dk * ek / 3.0,
                epsilon: ek,
                distance_to_m: dk,
                stage,
            },
            tol,
        )?;
        cur = cur.then(step);
    }
    cur.constant = 1.0 + epsilon;
    Ok(cur)
}

/// Gap rearrangement: `x ≺ y` are M-points and the open segment
/// between them avoids M. The open segment is cut into pieces, one per
/// attachment point, each handled by the separated construction with a
/// weight shrinking near the endpoints.
pub fn rearrange_gap_interval(
    t: &MarkedTree,
    x: TreePoint,
    y: TreePoint,
    epsilon: f64,
    tol: f64,
) -> Result<RearrangementResult> {
    for p in [x, y] {
        match p {
            TreePoint::Vertex(v) if t.is_m(v) => {}
            _ => return Err(Error::precondition("gap endpoints must be M-points")),
        }
    }
    gap_core(t, x, y, epsilon, tol, None)
}

/// Maximal open stretches of `(0, length)` free of M, as distance pairs.
pub(crate) fn gaps(t: &MarkedTree, seg: &SegmentPath, tol: f64) -> Vec<(f64, f64)> {
    let mut blocked: Vec<(f64, f64)> = seg
        .vertices
        .iter()
        .filter(|&&(v, _)| t.is_m(v))
        .map(|&(_, s)| (s, s))
        .chain(
            seg.pieces
                .iter()
                .filter(|p| t.edge(p.edge).marked)
                .map(|p| (p.start, p.end)),
        )
        .collect();
    blocked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let mut cursor = 0.0f64;
    for (lo, hi) in blocked {
        if lo - cursor > tol {
            out.push((cursor, lo));
        }
        cursor = cursor.max(hi);
    }
    if seg.length - cursor > tol {
        out.push((cursor, seg.length));
    }
    out
}

pub(crate) fn closed_core(
    t: &MarkedTree,
    x: TreePoint,
    y: TreePoint,
    epsilon: f64,
    tol: f64,
    stage: Option<usize>,
) -> Result<RearrangementResult> {
    check_epsilon(epsilon)?;
    let seg = ordered_segment(t, x, y, tol)?;
    let mut cur = subordinated_identity(t, x, y);
    for (lo, hi) in gaps(t, &seg, tol) {
        let xi = cur.image(x);
        let yi = cur.image(y);
        let a = cur.target.point_along(xi, yi, lo);
        let b = cur.target.point_along(xi, yi, hi);
        let step = gap_core(&cur.target, a, b, epsilon, tol, stage)?;
        cur = cur.then(step);
    }
    let moved = cur.trace.moved();
    cur.constant = if moved > 0 { 1.0 + epsilon } else { 1.0 };

    // Branching points off M created on the open segment must be grid points.
    let target = &cur.target;
    let (xi, yi) = (cur.image(x), cur.image(y));
    let br: HashSet<VertexIdx> = branching_of_set(target, &target.m_points())
        .into_iter()
        .collect();
    let grid: HashSet<&str> = cur.trace.grid_ids().collect();
    let tseg = target.segment(xi, yi);
    let mut created = Vec::new();
    for (v, _) in tseg.interior_vertices() {
        if br.contains(&v) && !target.is_m(v) {
            let id = target.vertex(v).id.clone();
            if !grid.contains(id.as_str()) {
                return Err(Error::Invariant {
                    stage: stage.unwrap_or(0),
                    message: format!("branching point {id:?} is not a grid point"),
                });
            }
            created.push(id);
        }
    }
    cur.trace.new_branching = created;
    Ok(cur)
}

/// Rearrangement subordinated to `[x, y]` for arbitrary `x ≺ y`: each maximal
/// open gap of the segment outside M is handled by the gap construction.
pub fn rearrange_closed_interval(
    t: &MarkedTree,
    x: TreePoint,
    y: TreePoint,
    epsilon: f64,
    tol: f64,
) -> Result<RearrangementResult> {
    closed_core(t, x, y, epsilon, tol, None)
}
