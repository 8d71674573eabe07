#![allow(dead_code)]

use lipfree::gen::{random_marked_tree, RandomTreeOptions};
use lipfree::tree::EdgeIdx;
use lipfree::{FiniteMetric, MarkedTree, Molecule, TreePoint};
use rand::seq::IndexedRandom;
use rand::Rng;

pub const TOL: f64 = 1e-9;

pub fn marked_tree(rng: &mut impl Rng, leaves: usize, internal_m: f64) -> MarkedTree {
    random_marked_tree(
        rng,
        RandomTreeOptions {
            leaves,
            internal_m,
            marked: 0.0,
        },
    )
}

/// Random molecule on `labels` with integer coefficients in `[-3, 3]`,
/// nonzero somewhere off the root of `t`.
pub fn molecule(rng: &mut impl Rng, t: &MarkedTree, labels: &[String]) -> Molecule {
    let root = t.label_of(t.root());
    loop {
        let mu = Molecule::from_pairs(
            labels
                .iter()
                .map(|l| (l.clone(), rng.random_range(-3i32..=3) as f64)),
        );
        if mu.iter().any(|(l, a)| l != root && a != 0.0) {
            return mu;
        }
    }
}

pub fn m_labels(t: &MarkedTree) -> Vec<String> {
    t.m_points()
        .into_iter()
        .map(|v| t.label_of(v).to_owned())
        .collect()
}

/// Restriction of the tree metric to `labels` (root always included).
pub fn metric_on(t: &MarkedTree, labels: &[String]) -> FiniteMetric {
    let root = t.label_of(t.root()).to_owned();
    let mut keep = vec![root.clone()];
    keep.extend(labels.iter().filter(|l| **l != root).cloned());
    let pts: Vec<TreePoint> = keep
        .iter()
        .map(|l| TreePoint::Vertex(t.m_point(l).expect("label is an M-point")))
        .collect();
    FiniteMetric::from_fn(keep, &root, |i, j| t.distance(pts[i], pts[j]))
        .expect("tree distances form a metric")
}

/// A segment `x ≺ y` through Steiner vertices only, with both ends strictly
/// inside edges. Needs a tree whose M is the set of leaves.
pub fn separated_segment(rng: &mut impl Rng, t: &MarkedTree) -> Option<(TreePoint, TreePoint)> {
    let steiner: Vec<_> = t.vertex_indices().filter(|&v| !t.is_m(v)).collect();
    let &u = steiner.choose(rng)?;
    let top = t.parent_edge(u)?;
    let x = inside(rng, t, top);
    let mut w = u;
    for _ in 0..rng.random_range(0..3) {
        let next: Vec<EdgeIdx> = t
            .child_edges(w)
            .iter()
            .copied()
            .filter(|&e| !t.is_m(t.edge(e).upper))
            .collect();
        match next.choose(rng) {
            Some(&e) => w = t.edge(e).upper,
            None => break,
        }
    }
    let &bottom = t.child_edges(w).choose(rng)?;
    Some((x, inside(rng, t, bottom)))
}

fn inside(rng: &mut impl Rng, t: &MarkedTree, e: EdgeIdx) -> TreePoint {
    let len = t.edge(e).length;
    t.edge_point(e, len * rng.random_range(0.2..0.8))
        .expect("offset inside the edge")
}
