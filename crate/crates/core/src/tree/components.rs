use std::collections::{BTreeMap, HashMap};

use super::{EdgeIdx, MarkedTree, TreePoint, VertexIdx};

/// What to remove from the tree.
#[derive(Debug, Clone, Copy)]
pub enum Cut {
    Point(TreePoint),
    Segment(TreePoint, TreePoint),
}

/// The part `[lo, hi]` (offsets from the lower endpoint) of an edge that is
/// cut by a segment endpoint and belongs to a component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePiece {
    pub edge: EdgeIdx,
    pub lo: f64,
    pub hi: f64,
}

/// A connected component of the tree minus the cut, together with the point
/// of the cut it hangs from.
#[derive(Debug, Clone)]
pub struct Component {
    pub attachment: TreePoint,
    /// Distance of the attachment point from the first end of the cut.
    pub position: f64,
    pub vertices: Vec<VertexIdx>,
    /// Edges lying entirely in the component, except possibly for the
    /// endpoint at the attachment.
    pub edges: Vec<EdgeIdx>,
    pub pieces: Vec<EdgePiece>,
    pub contains_root: bool,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components of the tree with the cut removed, ordered by the
/// position of their attachment point and then by smallest vertex index.
pub fn split_components(t: &MarkedTree, cut: Cut) -> Vec<Component> {
    let (a, b) = match cut {
        Cut::Point(p) => (p, p),
        Cut::Segment(a, b) => (a, b),
    };
    let seg = t.segment(a, b);
    let on_segment: HashMap<VertexIdx, f64> = seg.vertices.iter().copied().collect();

    // Covered offset range of each edge the segment touches.
    let mut covered: BTreeMap<EdgeIdx, (f64, f64)> = BTreeMap::new();
    let mut touch = |e: EdgeIdx, lo: f64, hi: f64| {
        let r = covered.entry(e).or_insert((lo, hi));
        r.0 = r.0.min(lo);
        r.1 = r.1.max(hi);
    };
    for piece in &seg.pieces {
        let (lo, hi) = if piece.ascending() {
            (piece.from_offset, piece.to_offset)
        } else {
            (piece.to_offset, piece.from_offset)
        };
        touch(piece.edge, lo, hi);
    }
    for p in [a, b] {
        if let TreePoint::Edge { edge, offset } = p {
            touch(edge, offset, offset);
        }
    }

    let n = t.vertex_count();
    let mut uf = UnionFind((0..n).collect());
    for e in t.edge_indices() {
        if covered.contains_key(&e) {
            continue;
        }
        let edge = t.edge(e);
        if !on_segment.contains_key(&edge.lower) && !on_segment.contains_key(&edge.upper) {
            uf.union(edge.lower.0, edge.upper.0);
        }
    }

    // First pass: where each component hangs from, and the cut edge pieces.
    let mut comps: BTreeMap<usize, Component> = BTreeMap::new();
    let mut owner: Vec<(EdgeIdx, usize)> = Vec::new();
    for e in t.edge_indices() {
        let edge = t.edge(e);
        if let Some(&(lo, hi)) = covered.get(&e) {
            if lo > 0.0 {
                let at = t.edge_point(e, lo).expect("covered offset lies on the edge");
                let key = hang(&mut comps, &mut uf, t, a, edge.lower, at);
                comps.get_mut(&key).unwrap().pieces.push(EdgePiece { edge: e, lo: 0.0, hi: lo });
            }
            if hi < edge.length {
                let at = t.edge_point(e, hi).expect("covered offset lies on the edge");
                let key = hang(&mut comps, &mut uf, t, a, edge.upper, at);
                comps.get_mut(&key).unwrap().pieces.push(EdgePiece {
                    edge: e,
                    lo: hi,
                    hi: edge.length,
                });
            }
            continue;
        }
        match (
            on_segment.contains_key(&edge.lower),
            on_segment.contains_key(&edge.upper),
        ) {
            (true, true) => {}
            (true, false) => {
                let key = hang(&mut comps, &mut uf, t, a, edge.upper, TreePoint::Vertex(edge.lower));
                owner.push((e, key));
            }
            (false, true) => {
                let key = hang(&mut comps, &mut uf, t, a, edge.lower, TreePoint::Vertex(edge.upper));
                owner.push((e, key));
            }
            (false, false) => owner.push((e, uf.find(edge.lower.0))),
        }
    }
    for (e, key) in owner {
        comps
            .get_mut(&key)
            .expect("every off-segment edge reaches an attachment")
            .edges
            .push(e);
    }

    for v in t.vertex_indices() {
        if on_segment.contains_key(&v) {
            continue;
        }
        let key = uf.find(v.0);
        let c = comps.get_mut(&key).expect("every off-segment vertex is attached");
        c.vertices.push(v);
        if v == t.root() {
            c.contains_root = true;
        }
    }

    let mut out: Vec<Component> = comps.into_values().collect();
    out.sort_by(|x, y| {
        x.position
            .total_cmp(&y.position)
            .then_with(|| x.vertices.first().cmp(&y.vertices.first()))
    });
    out
}

fn hang(
    comps: &mut BTreeMap<usize, Component>,
    uf: &mut UnionFind,
    t: &MarkedTree,
    a: TreePoint,
    v: VertexIdx,
    at: TreePoint,
) -> usize {
    let key = uf.find(v.0);
    comps.entry(key).or_insert_with(|| Component {
        attachment: at,
        position: t.distance(a, at),
        vertices: Vec::new(),
        edges: Vec::new(),
        pieces: Vec::new(),
        contains_root: false,
    });
    key
}
