//! Finite weighted trees standing in for R-trees.
//!
//! A [`MarkedTree`] is rooted at its base point. Vertices are either points of
//! the subset `M` or Steiner points; an edge may additionally be marked as
//! lying entirely inside `M`, which is how segments of positive length
//! measure are represented. A [`TreePoint`] addresses any point of the
//! geometric tree, including the interior of an edge.

mod components;
mod io;
mod realize;

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::FiniteMetric;
use crate::DEFAULT_TOL;

pub use components::{split_components, Component, Cut, EdgePiece};
pub use io::{PointDocument, TreeDocument};
pub use realize::realize_tree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexIdx(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeIdx(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexKind {
    MPoint,
    Steiner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: String,
    pub label: Option<String>,
    pub kind: VertexKind,
}

impl Vertex {
    pub fn m_point(label: impl Into<String>) -> Self {
        let label = label.into();
        Vertex {
            id: label.clone(),
            label: Some(label),
            kind: VertexKind::MPoint,
        }
    }

    pub fn steiner(id: impl Into<String>) -> Self {
        Vertex {
            id: id.into(),
            label: None,
            kind: VertexKind::Steiner,
        }
    }

    pub fn is_m(&self) -> bool {
        self.kind == VertexKind::MPoint
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    /// Endpoint closer to the root.
    pub lower: VertexIdx,
    pub upper: VertexIdx,
    pub length: f64,
    /// The whole edge belongs to `M`.
    pub marked: bool,
    /// Decimal text the length was read from, kept so that export reproduces
    /// it verbatim.
    pub(crate) literal: Option<String>,
}

impl Edge {
    pub fn new(id: impl Into<String>, lower: VertexIdx, upper: VertexIdx, length: f64) -> Self {
        Edge {
            id: id.into(),
            lower,
            upper,
            length,
            marked: false,
            literal: None,
        }
    }

    pub fn marked(mut self, marked: bool) -> Self {
        self.marked = marked;
        self
    }
}

/// A point of the tree: a vertex, or a position strictly inside an edge
/// measured from its lower endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreePoint {
    Vertex(VertexIdx),
    Edge { edge: EdgeIdx, offset: f64 },
}

impl From<VertexIdx> for TreePoint {
    fn from(v: VertexIdx) -> Self {
        TreePoint::Vertex(v)
    }
}

/// Which edges [`MarkedTree::length_measure`] adds up.
#[derive(Debug, Clone)]
pub enum EdgeSelector {
    All,
    Marked,
    Explicit(Vec<String>),
}

/// One traversed stretch of an edge along a segment `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentPiece {
    pub edge: EdgeIdx,
    /// Offsets on the edge where the piece starts and ends, in the direction
    /// of travel from `a` to `b`.
    pub from_offset: f64,
    pub to_offset: f64,
    /// Distance from `a` at which the piece starts and ends.
    pub start: f64,
    pub end: f64,
}

impl SegmentPiece {
    pub fn ascending(&self) -> bool {
        self.to_offset > self.from_offset
    }
}

/// The segment `[a, b]` unrolled: traversed edge pieces and the vertices met,
/// each with its distance from `a`.
#[derive(Debug, Clone)]
pub struct SegmentPath {
    pub a: TreePoint,
    pub b: TreePoint,
    pub length: f64,
    pub pieces: Vec<SegmentPiece>,
    /// Vertices on `[a, b]` in order, endpoints included when they are vertices.
    pub vertices: Vec<(VertexIdx, f64)>,
}

impl SegmentPath {
    /// Vertices strictly between the endpoints.
    pub fn interior_vertices(&self) -> impl Iterator<Item = (VertexIdx, f64)> + '_ {
        let a = self.a;
        let b = self.b;
        self.vertices
            .iter()
            .copied()
            .filter(move |&(v, _)| TreePoint::Vertex(v) != a && TreePoint::Vertex(v) != b)
    }
}

#[derive(Debug, Clone)]
pub struct MarkedTree {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    root: VertexIdx,
    parent_edge: Vec<Option<EdgeIdx>>,
    children: Vec<Vec<EdgeIdx>>,
    depth: Vec<f64>,
    hops: Vec<usize>,
    vertex_by_id: HashMap<String, VertexIdx>,
    vertex_by_label: HashMap<String, VertexIdx>,
    edge_by_id: HashMap<String, EdgeIdx>,
}

impl PartialEq for MarkedTree {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges && self.root == other.root
    }
}

impl MarkedTree {
    /// Assembles a tree, orienting every edge away from `root`.
    ///
    /// Rejects duplicate ids or labels, dangling endpoints, cycles,
    /// disconnected vertex sets, non-positive lengths, unlabelled M-points
    /// and marked edges with a Steiner endpoint.
    pub fn new(vertices: Vec<Vertex>, mut edges: Vec<Edge>, root: VertexIdx) -> Result<Self> {
        let n = vertices.len();
        if root.0 >= n {
            return Err(Error::structural("root is not a vertex"));
        }
        if edges.len() + 1 != n {
            return Err(Error::structural(format!(
                "a tree on {} vertices needs {} edges, got {}",
                n,
                n - 1,
                edges.len()
            )));
        }
        let mut vertex_by_id = HashMap::with_capacity(n);
        let mut vertex_by_label = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if vertex_by_id.insert(v.id.clone(), VertexIdx(i)).is_some() {
                return Err(Error::structural(format!("duplicate vertex id {:?}", v.id)));
            }
            match (&v.label, v.kind) {
                (Some(l), _) => {
                    if vertex_by_label.insert(l.clone(), VertexIdx(i)).is_some() {
                        return Err(Error::structural(format!("duplicate label {l:?}")));
                    }
                }
                (None, VertexKind::MPoint) => {
                    return Err(Error::structural(format!("M-point {:?} has no label", v.id)))
                }
                (None, VertexKind::Steiner) => {}
            }
        }
        if !vertices[root.0].is_m() {
            return Err(Error::structural("the root must be a point of M"));
        }
        let mut edge_by_id = HashMap::with_capacity(edges.len());
        let mut adjacency: Vec<Vec<EdgeIdx>> = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if edge_by_id.insert(e.id.clone(), EdgeIdx(i)).is_some() {
                return Err(Error::structural(format!("duplicate edge id {:?}", e.id)));
            }
            if e.lower.0 >= n || e.upper.0 >= n {
                return Err(Error::structural(format!("edge {:?} has a dangling endpoint", e.id)));
            }
            if e.lower == e.upper {
                return Err(Error::structural(format!("edge {:?} is a loop", e.id)));
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::value(format!(
                    "edge {:?} has non-positive length {}",
                    e.id, e.length
                )));
            }
            if e.marked && !(vertices[e.lower.0].is_m() && vertices[e.upper.0].is_m()) {
                return Err(Error::structural(format!(
                    "marked edge {:?} must join two M-points",
                    e.id
                )));
            }
            adjacency[e.lower.0].push(EdgeIdx(i));
            adjacency[e.upper.0].push(EdgeIdx(i));
        }

        let mut parent_edge = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut depth = vec![0.0; n];
        let mut hops = vec![0usize; n];
        let mut seen = vec![false; n];
        seen[root.0] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &ei in &adjacency[v.0] {
                if parent_edge[v.0] == Some(ei) {
                    continue;
                }
                let e = &mut edges[ei.0];
                let other = if e.lower == v { e.upper } else { e.lower };
                if seen[other.0] {
                    return Err(Error::structural(format!("edge {:?} closes a cycle", e.id)));
                }
                if e.lower != v {
                    std::mem::swap(&mut e.lower, &mut e.upper);
                }
                seen[other.0] = true;
                parent_edge[other.0] = Some(ei);
                children[v.0].push(ei);
                depth[other.0] = depth[v.0] + e.length;
                hops[other.0] = hops[v.0] + 1;
                queue.push_back(other);
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::structural(format!(
                "vertex {:?} is not connected to the root",
                vertices[i].id
            )));
        }
        Ok(MarkedTree {
            vertices,
            edges,
            root,
            parent_edge,
            children,
            depth,
            hops,
            vertex_by_id,
            vertex_by_label,
            edge_by_id,
        })
    }

    /// Checks that the tree is the minimal tree spanned by its M-points:
    /// every leaf is an M-point and every Steiner vertex has degree at least 3.
    pub fn check_minimal(&self) -> Result<()> {
        for v in self.vertex_indices() {
            let deg = self.degree(v);
            let vx = &self.vertices[v.0];
            if !vx.is_m() && deg < 3 {
                return Err(Error::structural(format!(
                    "Steiner vertex {:?} has degree {}",
                    vx.id, deg
                )));
            }
            if deg <= 1 && !vx.is_m() {
                return Err(Error::structural(format!("leaf {:?} is not in M", vx.id)));
            }
        }
        Ok(())
    }

    // -- accessors ---------------------------------------------------------

    pub fn root(&self) -> VertexIdx {
        self.root
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, v: VertexIdx) -> &Vertex {
        &self.vertices[v.0]
    }

    pub fn edge(&self, e: EdgeIdx) -> &Edge {
        &self.edges[e.0]
    }

    pub fn vertex_indices(&self) -> impl Iterator<Item = VertexIdx> {
        (0..self.vertices.len()).map(VertexIdx)
    }

    pub fn edge_indices(&self) -> impl Iterator<Item = EdgeIdx> {
        (0..self.edges.len()).map(EdgeIdx)
    }

    pub fn vertex_by_id(&self, id: &str) -> Option<VertexIdx> {
        self.vertex_by_id.get(id).copied()
    }

    pub fn vertex_by_label(&self, label: &str) -> Option<VertexIdx> {
        self.vertex_by_label.get(label).copied()
    }

    pub fn edge_by_id(&self, id: &str) -> Option<EdgeIdx> {
        self.edge_by_id.get(id).copied()
    }

    /// Looks up an M-point by label, failing with a structural error.
    pub fn m_point(&self, label: &str) -> Result<VertexIdx> {
        self.vertex_by_label(label)
            .filter(|v| self.vertices[v.0].is_m())
            .ok_or_else(|| Error::structural(format!("{label:?} is not an M-point of the tree")))
    }

    pub fn parent_edge(&self, v: VertexIdx) -> Option<EdgeIdx> {
        self.parent_edge[v.0]
    }

    pub fn parent(&self, v: VertexIdx) -> Option<VertexIdx> {
        self.parent_edge[v.0].map(|e| self.edges[e.0].lower)
    }

    pub fn child_edges(&self, v: VertexIdx) -> &[EdgeIdx] {
        &self.children[v.0]
    }

    pub fn degree(&self, v: VertexIdx) -> usize {
        self.children[v.0].len() + usize::from(self.parent_edge[v.0].is_some())
    }

    pub fn is_m(&self, v: VertexIdx) -> bool {
        self.vertices[v.0].is_m()
    }

    /// M-points in vertex order.
    pub fn m_points(&self) -> Vec<VertexIdx> {
        self.vertex_indices().filter(|&v| self.is_m(v)).collect()
    }

    pub fn label_of(&self, v: VertexIdx) -> &str {
        self.vertices[v.0].label.as_deref().unwrap_or(&self.vertices[v.0].id)
    }

    // -- points ------------------------------------------------------------

    /// The point at `offset` from the lower endpoint of `edge`, snapped to
    /// an endpoint when within tolerance of it.
    pub fn edge_point(&self, edge: EdgeIdx, offset: f64) -> Result<TreePoint> {
        let e = self
            .edges
            .get(edge.0)
            .ok_or_else(|| Error::structural(format!("edge index {} out of range", edge.0)))?;
        if !offset.is_finite() || offset < -DEFAULT_TOL || offset > e.length + DEFAULT_TOL {
            return Err(Error::structural(format!(
                "offset {} outside edge {:?} of length {}",
                offset, e.id, e.length
            )));
        }
        Ok(if offset <= DEFAULT_TOL {
            TreePoint::Vertex(e.lower)
        } else if offset >= e.length - DEFAULT_TOL {
            TreePoint::Vertex(e.upper)
        } else {
            TreePoint::Edge { edge, offset }
        })
    }

    pub fn check_point(&self, p: TreePoint) -> Result<()> {
        match p {
            TreePoint::Vertex(v) if v.0 < self.vertices.len() => Ok(()),
            TreePoint::Edge { edge, offset }
                if edge.0 < self.edges.len()
                    && offset > 0.0
                    && offset < self.edges[edge.0].length =>
            {
                Ok(())
            }
            _ => Err(Error::structural(format!("{p:?} does not locate in the tree"))),
        }
    }

    /// Distance from the root.
    pub fn depth(&self, p: TreePoint) -> f64 {
        match p {
            TreePoint::Vertex(v) => self.depth[v.0],
            TreePoint::Edge { edge, offset } => self.depth[self.edges[edge.0].lower.0] + offset,
        }
    }

    pub fn vertex_depth(&self, v: VertexIdx) -> f64 {
        self.depth[v.0]
    }

    /// Lowest vertex `u` with `p ⪯ u`: `p` itself or the upper end of its edge.
    fn ceiling_vertex(&self, p: TreePoint) -> VertexIdx {
        match p {
            TreePoint::Vertex(v) => v,
            TreePoint::Edge { edge, .. } => self.edges[edge.0].upper,
        }
    }

    pub fn lca(&self, mut a: VertexIdx, mut b: VertexIdx) -> VertexIdx {
        while self.hops[a.0] > self.hops[b.0] {
            a = self.parent(a).expect("non-root vertex has a parent");
        }
        while self.hops[b.0] > self.hops[a.0] {
            b = self.parent(b).expect("non-root vertex has a parent");
        }
        while a != b {
            a = self.parent(a).expect("distinct vertices at equal height");
            b = self.parent(b).expect("distinct vertices at equal height");
        }
        a
    }

    /// The meet `p ∧ q`: the highest point below both. Returns `p` itself
    /// (structurally) whenever `p ⪯ q`, and likewise for `q`.
    pub fn meet(&self, p: TreePoint, q: TreePoint) -> TreePoint {
        if let (
            TreePoint::Edge { edge: e1, offset: o1 },
            TreePoint::Edge { edge: e2, offset: o2 },
        ) = (p, q)
        {
            if e1 == e2 {
                return if o1 <= o2 { p } else { q };
            }
        }
        let cp = self.ceiling_vertex(p);
        let cq = self.ceiling_vertex(q);
        let l = self.lca(cp, cq);
        if l == cp && l == cq {
            // Same ceiling vertex; at most one of them is an edge point below it.
            return if matches!(p, TreePoint::Edge { .. }) { p } else { q };
        }
        if l == cp {
            // cp ⪯ cq, so p ⪯ q unless p sits on an edge whose upper end is cp
            // and q is not above cp (impossible: cq above cp).
            return p;
        }
        if l == cq {
            return q;
        }
        TreePoint::Vertex(l)
    }

    /// `p ⪯ q`: `p` lies on the segment from the root to `q`.
    pub fn precedes(&self, p: TreePoint, q: TreePoint) -> bool {
        self.meet(p, q) == p
    }

    pub fn distance(&self, p: TreePoint, q: TreePoint) -> f64 {
        let m = self.meet(p, q);
        let d = self.depth(p) + self.depth(q) - 2.0 * self.depth(m);
        d.max(0.0)
    }

    /// The ancestor of `p` at distance `height` from the root.
    pub fn ancestor_at_depth(&self, p: TreePoint, height: f64) -> TreePoint {
        let target = height.clamp(0.0, self.depth(p));
        let mut cur = p;
        loop {
            match cur {
                TreePoint::Edge { edge, offset } => {
                    let lower = self.edges[edge.0].lower;
                    let base = self.depth[lower.0];
                    if target >= base + offset - DEFAULT_TOL {
                        return cur;
                    }
                    if target > base + DEFAULT_TOL {
                        return TreePoint::Edge {
                            edge,
                            offset: target - base,
                        };
                    }
                    cur = TreePoint::Vertex(lower);
                }
                TreePoint::Vertex(v) => {
                    if target >= self.depth[v.0] - DEFAULT_TOL {
                        return cur;
                    }
                    let e = self.parent_edge[v.0].expect("target height below the root");
                    cur = TreePoint::Edge {
                        edge: e,
                        offset: self.edges[e.0].length,
                    };
                }
            }
        }
    }

    /// The point of `[a, b]` at distance `s` from `a` (the inverse of the
    /// segment parameterization).
    pub fn point_along(&self, a: TreePoint, b: TreePoint, s: f64) -> TreePoint {
        let m = self.meet(a, b);
        let down = self.depth(a) - self.depth(m);
        if s <= down {
            self.ancestor_at_depth(a, self.depth(a) - s)
        } else {
            self.ancestor_at_depth(b, self.depth(m) + (s - down))
        }
    }

    /// Metric projection of `p` onto `[a, b]`: the median of `p`, `a`, `b`,
    /// which in a rooted tree is the deepest of the three pairwise meets.
    pub fn project_to_segment(&self, p: TreePoint, a: TreePoint, b: TreePoint) -> TreePoint {
        let candidates = [self.meet(a, b), self.meet(a, p), self.meet(b, p)];
        candidates
            .into_iter()
            .max_by(|x, y| self.depth(*x).total_cmp(&self.depth(*y)))
            .expect("three candidates")
    }

    /// Distance from `p` to the segment `[a, b]`.
    pub fn distance_to_segment(&self, p: TreePoint, a: TreePoint, b: TreePoint) -> f64 {
        self.distance(p, self.project_to_segment(p, a, b))
    }

    /// Pieces from `p` down to its ancestor `anc`, as
    /// `(edge, offset where the piece starts, offset where it ends)`.
    fn descent(&self, p: TreePoint, anc: TreePoint) -> Vec<(EdgeIdx, f64, f64)> {
        let mut out = Vec::new();
        let mut cur = p;
        loop {
            if cur == anc {
                break;
            }
            match cur {
                TreePoint::Edge { edge, offset } => {
                    if let TreePoint::Edge { edge: ae, offset: ao } = anc {
                        if ae == edge {
                            out.push((edge, offset, ao));
                            break;
                        }
                    }
                    out.push((edge, offset, 0.0));
                    cur = TreePoint::Vertex(self.edges[edge.0].lower);
                }
                TreePoint::Vertex(v) => {
                    let Some(e) = self.parent_edge[v.0] else {
                        break;
                    };
                    let len = self.edges[e.0].length;
                    if let TreePoint::Edge { edge: ae, offset: ao } = anc {
                        if ae == e {
                            out.push((e, len, ao));
                            break;
                        }
                    }
                    out.push((e, len, 0.0));
                    cur = TreePoint::Vertex(self.edges[e.0].lower);
                }
            }
        }
        out
    }

    /// Unrolls `[a, b]` into traversed edge pieces and the vertices on it.
    pub fn segment(&self, a: TreePoint, b: TreePoint) -> SegmentPath {
        let m = self.meet(a, b);
        let mut raw: Vec<(EdgeIdx, f64, f64)> = self.descent(a, m);
        let mut up = self.descent(b, m);
        up.reverse();
        raw.extend(up.into_iter().map(|(e, from, to)| (e, to, from)));

        let mut pieces = Vec::with_capacity(raw.len());
        let mut vertices = Vec::new();
        if let TreePoint::Vertex(v) = a {
            vertices.push((v, 0.0));
        }
        let mut pos = 0.0;
        for (edge, from_offset, to_offset) in raw {
            let len = (to_offset - from_offset).abs();
            let piece = SegmentPiece {
                edge,
                from_offset,
                to_offset,
                start: pos,
                end: pos + len,
            };
            pos += len;
            let e = &self.edges[edge.0];
            if to_offset == 0.0 {
                vertices.push((e.lower, pos));
            } else if to_offset == e.length {
                vertices.push((e.upper, pos));
            }
            pieces.push(piece);
        }
        SegmentPath {
            a,
            b,
            length: pos,
            pieces,
            vertices,
        }
    }

    // -- structure ---------------------------------------------------------

    /// Vertices of degree at least 3.
    pub fn branching_points(&self) -> Vec<VertexIdx> {
        self.vertex_indices().filter(|&v| self.degree(v) >= 3).collect()
    }

    /// Sum of the selected edge lengths. Lengths are added in increasing
    /// order so that equal multisets of lengths give bit-identical totals.
    pub fn length_measure(&self, selector: &EdgeSelector) -> Result<f64> {
        let mut lengths: Vec<f64> = match selector {
            EdgeSelector::All => self.edges.iter().map(|e| e.length).collect(),
            EdgeSelector::Marked => self
                .edges
                .iter()
                .filter(|e| e.marked)
                .map(|e| e.length)
                .collect(),
            EdgeSelector::Explicit(ids) => {
                let mut seen = HashSet::new();
                let mut out = Vec::new();
                for id in ids {
                    let e = self
                        .edge_by_id(id)
                        .ok_or_else(|| Error::structural(format!("unknown edge id {id:?}")))?;
                    if seen.insert(e) {
                        out.push(self.edges[e.0].length);
                    }
                }
                out
            }
        };
        Ok(stable_sum(&mut lengths))
    }

    /// Vertices of the subtree rooted at `v` (including `v`), in preorder.
    pub fn subtree_vertices(&self, v: VertexIdx) -> Vec<VertexIdx> {
        let mut out = vec![v];
        let mut i = 0;
        while i < out.len() {
            let u = out[i];
            out.extend(self.children[u.0].iter().map(|e| self.edges[e.0].upper));
            i += 1;
        }
        out
    }

    /// Edges of the subtree rooted at `v`.
    pub fn subtree_edges(&self, v: VertexIdx) -> Vec<EdgeIdx> {
        self.subtree_vertices(v)
            .into_iter()
            .flat_map(|u| self.children[u.0].iter().copied())
            .collect()
    }

    /// Vertices on the segment from the root to `p` (root first).
    pub fn root_path_vertices(&self, p: TreePoint) -> Vec<VertexIdx> {
        let mut v = match p {
            TreePoint::Vertex(v) => v,
            TreePoint::Edge { edge, .. } => self.edges[edge.0].lower,
        };
        let mut out = vec![v];
        while let Some(u) = self.parent(v) {
            out.push(u);
            v = u;
        }
        out.reverse();
        out
    }

    /// Edges on the segment from the root to `p`, the last one possibly
    /// only partially covered.
    pub fn root_path_edges(&self, p: TreePoint) -> Vec<EdgeIdx> {
        let verts = self.root_path_vertices(p);
        let mut out: Vec<EdgeIdx> = verts[1..]
            .iter()
            .map(|&v| self.parent_edge[v.0].expect("non-root"))
            .collect();
        if let TreePoint::Edge { edge, .. } = p {
            out.push(edge);
        }
        out
    }

    /// Path distances between all M-points, as a finite metric rooted at the
    /// tree root.
    pub fn to_metric(&self) -> FiniteMetric {
        let pts = self.m_points();
        let labels: Vec<String> = pts.iter().map(|&v| self.label_of(v).to_owned()).collect();
        let root = self.label_of(self.root).to_owned();
        FiniteMetric::from_fn(labels, &root, |i, j| {
            self.distance(TreePoint::Vertex(pts[i]), TreePoint::Vertex(pts[j]))
        })
        .expect("tree distances form a valid matrix")
    }

    /// The minimal tree spanned by the M-points: Steiner leaves are pruned
    /// repeatedly and Steiner vertices of degree 2 are smoothed out.
    pub fn hull(&self) -> MarkedTree {
        let n = self.vertices.len();
        let mut alive = vec![true; n];
        let mut deg: Vec<usize> = self.vertex_indices().map(|v| self.degree(v)).collect();
        let mut stack: Vec<VertexIdx> = self
            .vertex_indices()
            .filter(|&v| !self.is_m(v) && deg[v.0] <= 1)
            .collect();
        while let Some(v) = stack.pop() {
            if !alive[v.0] {
                continue;
            }
            alive[v.0] = false;
            if let Some(p) = self.parent(v) {
                deg[p.0] -= 1;
                if !self.is_m(p) && deg[p.0] <= 1 && alive[p.0] {
                    stack.push(p);
                }
            }
        }
        let smooth = |v: VertexIdx| alive[v.0] && !self.is_m(v) && deg[v.0] == 2 && v != self.root;

        let mut new_index = vec![None; n];
        let mut vertices = Vec::new();
        for v in self.vertex_indices() {
            if alive[v.0] && !smooth(v) {
                new_index[v.0] = Some(VertexIdx(vertices.len()));
                vertices.push(self.vertices[v.0].clone());
            }
        }
        let mut edges = Vec::new();
        for v in self.vertex_indices() {
            let Some(nv) = new_index[v.0] else { continue };
            if v == self.root {
                continue;
            }
            // Walk down through smoothed vertices to the next kept ancestor.
            let first = self.parent_edge[v.0].expect("non-root");
            let mut length = self.edges[first.0].length;
            let mut lower = self.edges[first.0].lower;
            let mut merged = false;
            while smooth(lower) {
                let e = self.parent_edge[lower.0].expect("smoothed vertex is not the root");
                length += self.edges[e.0].length;
                lower = self.edges[e.0].lower;
                merged = true;
            }
            let src = &self.edges[first.0];
            let mut e = Edge::new(
                src.id.clone(),
                new_index[lower.0].expect("kept"),
                nv,
                length,
            )
            .marked(src.marked && !merged);
            if !merged {
                e.literal = src.literal.clone();
            }
            edges.push(e);
        }
        MarkedTree::new(vertices, edges, new_index[self.root.0].expect("root kept"))
            .expect("hull of a valid tree is valid")
    }
}

/// Sums after sorting, so that permutations of the same values agree exactly.
pub(crate) fn stable_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().fold(0.0, |acc, v| acc + v)
}
