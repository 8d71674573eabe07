//! Reproducible instance generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::metric::FiniteMetric;
use crate::tree::{Edge, MarkedTree, Vertex, VertexIdx};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Path `0 - 1 - … - k` with M-points at every vertex.
pub fn path(k: usize, spacing: f64) -> MarkedTree {
    let vertices = (0..=k).map(|i| Vertex::m_point(i.to_string())).collect();
    let edges = (1..=k)
        .map(|i| Edge::new(format!("e{i}"), VertexIdx(i - 1), VertexIdx(i), spacing))
        .collect();
    MarkedTree::new(vertices, edges, VertexIdx(0)).expect("a path is a tree")
}

/// Star whose root `0` is a leaf, with `leaves` further leaves `a1, a2, …`
/// at unit distance from the center `c`.
pub fn star(leaves: usize, center_in_m: bool) -> MarkedTree {
    let center = if center_in_m {
        Vertex::m_point("c")
    } else {
        Vertex::steiner("c")
    };
    let mut vertices = vec![Vertex::m_point("0"), center];
    let mut edges = vec![Edge::new("e0", VertexIdx(0), VertexIdx(1), 1.0)];
    for i in 1..=leaves {
        vertices.push(Vertex::m_point(format!("a{i}")));
        edges.push(Edge::new(format!("e{i}"), VertexIdx(1), VertexIdx(i + 1), 1.0));
    }
    MarkedTree::new(vertices, edges, VertexIdx(0)).expect("a star is a tree")
}

/// The first `n` rationals of `(0, 1)` in Calkin-Wilf order, as
/// `(numerator, denominator)`.
pub fn calkin_wilf_unit(n: usize) -> Vec<(u64, u64)> {
    let mut out = Vec::with_capacity(n);
    let (mut a, mut b) = (1u64, 1u64);
    while out.len() < n {
        // Successor of a/b is b / (2⌊a/b⌋b − a + b).
        let q = a / b;
        let next = (b, 2 * q * b + b - a);
        (a, b) = next;
        if a < b {
            out.push((a, b));
        }
    }
    out
}

/// A spine of length 1 from the root `0` to `end`, with a branch of length
/// `n` ending at `p{n}` attached at distance `q_n` from the root, where
/// `q_1, q_2, …` is the Calkin-Wilf order on `(0, 1)`. M is the set of leaves.
pub fn comb(n: usize) -> MarkedTree {
    let qs = calkin_wilf_unit(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = qs[i];
        let (c, d) = qs[j];
        (a * d).cmp(&(c * b))
    });
    let mut vertices = vec![Vertex::m_point("0"), Vertex::m_point("end")];
    let mut edges = Vec::new();
    let mut prev = (VertexIdx(0), 0.0);
    for (k, &i) in order.iter().enumerate() {
        let q = qs[i].0 as f64 / qs[i].1 as f64;
        let s = VertexIdx(vertices.len());
        vertices.push(Vertex::steiner(format!("q{}", i + 1)));
        edges.push(Edge::new(format!("spine{}", k + 1), prev.0, s, q - prev.1));
        let tip = VertexIdx(vertices.len());
        vertices.push(Vertex::m_point(format!("p{}", i + 1)));
        edges.push(Edge::new(format!("b{}", i + 1), s, tip, (i + 1) as f64));
        prev = (s, q);
    }
    edges.push(Edge::new(format!("spine{}", n + 1), prev.0, VertexIdx(1), 1.0 - prev.1));
    MarkedTree::new(vertices, edges, VertexIdx(0)).expect("the instance is a tree")
}

/// Options for [`random_marked_tree`].
#[derive(Debug, Clone, Copy)]
pub struct RandomTreeOptions {
    pub leaves: usize,
    /// Probability that an internal vertex is a point of M.
    pub internal_m: f64,
    /// Probability that an edge between two M-points is marked.
    pub marked: f64,
}

/// Random recursive tree: each new vertex hangs from a uniformly chosen
/// existing non-root vertex by an edge of length uniform in `[0.1, 2]`,
/// until `leaves` leaves exist besides the root. The root `0` is a leaf;
/// Steiner vertices of degree 2 are smoothed out at the end.
pub fn random_marked_tree(rng: &mut impl Rng, opts: RandomTreeOptions) -> MarkedTree {
    let target = opts.leaves.max(1);
    let mut parent: Vec<usize> = vec![usize::MAX, 0];
    let mut length: Vec<f64> = vec![0.0, rng.random_range(0.1..=2.0)];
    let mut children = vec![1usize, 0];
    let mut leaf_count = 1;
    while leaf_count < target {
        let p = rng.random_range(1..parent.len());
        if children[p] > 0 {
            leaf_count += 1;
        }
        children[p] += 1;
        parent.push(p);
        length.push(rng.random_range(0.1..=2.0));
        children.push(0);
    }
    let n = parent.len();
    let mut vertices = Vec::with_capacity(n);
    let mut labelled = 0;
    for (v, &kids) in children.iter().enumerate() {
        let in_m = v == 0 || kids == 0 || rng.random_bool(opts.internal_m);
        vertices.push(if v == 0 {
            Vertex::m_point("0")
        } else if in_m {
            labelled += 1;
            Vertex::m_point(format!("x{labelled}"))
        } else {
            Vertex::steiner(format!("s{v}"))
        });
    }
    let edges = (1..n)
        .map(|v| {
            let marked = vertices[v].is_m()
                && vertices[parent[v]].is_m()
                && opts.marked > 0.0
                && rng.random_bool(opts.marked);
            Edge::new(format!("e{v}"), VertexIdx(parent[v]), VertexIdx(v), length[v]).marked(marked)
        })
        .collect();
    MarkedTree::new(vertices, edges, VertexIdx(0))
        .expect("generated structure is a tree")
        .hull()
}

/// Random tree with M the set of leaves (root included).
pub fn random_tree(rng: &mut impl Rng, leaves: usize) -> MarkedTree {
    random_marked_tree(
        rng,
        RandomTreeOptions {
            leaves,
            internal_m: 0.0,
            marked: 0.0,
        },
    )
}

/// Path distances between the M-points of `t`.
pub fn leaf_metric(t: &MarkedTree) -> FiniteMetric {
    t.to_metric()
}
