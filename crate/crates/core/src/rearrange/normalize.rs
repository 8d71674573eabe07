use std::collections::HashSet;

use super::interval::closed_core;
use super::{branching_of_set, RearrangementResult, StageTrace};
use crate::error::{Error, Result};
use crate::tree::{MarkedTree, TreePoint, VertexIdx};

/// Budget of stage `n` (from 1): `(1 + ε)^(2^-n) − 1`, so that the product of
/// `1 + ε_n` over all stages is `1 + ε`.
pub fn stage_epsilon(epsilon: f64, n: usize) -> f64 {
    (epsilon.ln_1p() * 0.5f64.powi(n as i32)).exp_m1()
}

fn invariant(stage: usize, message: String) -> Error {
    Error::Invariant { stage, message }
}

fn describe(t: &MarkedTree, p: TreePoint) -> String {
    match p {
        TreePoint::Vertex(v) => t.vertex(v).id.clone(),
        TreePoint::Edge { edge, offset } => format!("{}@{}", t.edge(edge).id, offset),
    }
}

/// Later stages must leave the root paths of earlier points untouched.
fn check_paths_fixed(
    before: &MarkedTree,
    step: &RearrangementResult,
    earlier: &[TreePoint],
    stage: usize,
    tol: f64,
) -> Result<()> {
    let after = &step.target;
    for &p in earlier {
        for v in before.root_path_vertices(p) {
            let TreePoint::Vertex(w) = step.image(TreePoint::Vertex(v)) else {
                return Err(invariant(stage, format!("vertex {:?} lands inside an edge", before.vertex(v).id)));
            };
            if after.vertex(w).id != before.vertex(v).id
                || (after.vertex_depth(w) - before.vertex_depth(v)).abs() > tol
            {
                return Err(invariant(
                    stage,
                    format!("root path vertex {:?} moved", before.vertex(v).id),
                ));
            }
        }
        for e in before.root_path_edges(p) {
            let chain = &step.map.edge_images[e.0];
            let total: f64 = chain.iter().map(|&f| after.edge(f).length).sum();
            let anchored = after.vertex(after.edge(chain[0]).lower).id
                == before.vertex(before.edge(e).lower).id;
            if !anchored || (total - before.edge(e).length).abs() > tol {
                return Err(invariant(
                    stage,
                    format!("root path edge {:?} moved", before.edge(e).id),
                ));
            }
        }
    }
    Ok(())
}

/// Runs the stage-by-stage construction over the M-points in vertex order
/// (skipping points below an earlier one), concentrating the branching points
/// off M on finite grids with total distortion at most `1 + epsilon`.
///
/// Each stage re-checks that earlier root paths stay fixed, that the stage
/// interval meets no earlier root path, and that every new branching point
/// off M is accounted for by a stage grid. A failed check is an
/// [`Error::Invariant`].
pub fn normalize_tree(t: &MarkedTree, epsilon: f64, tol: f64) -> Result<RearrangementResult> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::value(format!("epsilon must be positive, got {epsilon}")));
    }
    let root = t.root();
    let candidates: Vec<VertexIdx> = t.m_points().into_iter().filter(|&v| v != root).collect();
    let xs: Vec<VertexIdx> = candidates
        .iter()
        .enumerate()
        .filter(|&(i, &p)| {
            !candidates[..i]
                .iter()
                .any(|&q| t.precedes(TreePoint::Vertex(p), TreePoint::Vertex(q)))
        })
        .map(|(_, &p)| p)
        .collect();

    let mut cur = RearrangementResult::identity(t);
    let mut created: HashSet<String> = HashSet::new();
    let mut grid_ids: HashSet<String> = HashSet::new();
    for (i, &xn) in xs.iter().enumerate() {
        let n = i + 1;
        let tree = cur.target.clone();
        let point = cur.image(TreePoint::Vertex(xn));
        let earlier: Vec<TreePoint> = xs[..i]
            .iter()
            .map(|&x| cur.image(TreePoint::Vertex(x)))
            .collect();
        let meet = earlier
            .iter()
            .map(|&e| tree.meet(point, e))
            .max_by(|a, b| tree.depth(*a).total_cmp(&tree.depth(*b)))
            .unwrap_or(TreePoint::Vertex(tree.root()));
        for &e in &earlier {
            let m = tree.meet(point, e);
            if tree.depth(m) > tree.depth(meet) + tol {
                return Err(invariant(
                    n,
                    format!(
                        "stage interval overlaps the root path of {}",
                        describe(&tree, e)
                    ),
                ));
            }
        }

        let eps = stage_epsilon(epsilon, n);
        let step = closed_core(&tree, meet, point, eps, tol, Some(n))?;
        check_paths_fixed(&tree, &step, &earlier, n, tol)?;
        let new_branching = step.trace.new_branching.clone();
        let moved = step.trace.moved();
        grid_ids.extend(step.trace.grid_ids().map(str::to_owned));
        created.extend(new_branching.iter().cloned());
        cur = cur.then(step);

        // Branching of the points handled so far stays within M and the
        // recorded sets.
        let handled: Vec<VertexIdx> = std::iter::once(root)
            .chain(t.m_points().into_iter().filter(|&q| {
                xs[..=i]
                    .iter()
                    .any(|&x| t.precedes(TreePoint::Vertex(q), TreePoint::Vertex(x)))
            }))
            .map(|q| cur.map.vertex_images[q.0])
            .collect();
        for v in branching_of_set(&cur.target, &handled) {
            let id = &cur.target.vertex(v).id;
            if !cur.target.is_m(v) && !created.contains(id) {
                return Err(invariant(
                    n,
                    format!("branching point {id:?} is neither in M nor recorded"),
                ));
            }
        }

        cur.trace.stages.push(StageTrace {
            stage: n,
            point: t.label_of(xn).to_owned(),
            meet: describe(&tree, meet),
            interval: (describe(&tree, meet), describe(&tree, point)),
            epsilon: eps,
            new_branching,
            moved,
        });
    }

    let target = &cur.target;
    for v in branching_of_set(target, &target.m_points()) {
        let id = &target.vertex(v).id;
        if !target.is_m(v) && !grid_ids.contains(id) {
            return Err(invariant(
                xs.len(),
                format!("branching point {id:?} is off every stage grid"),
            ));
        }
    }
    cur.segment = None;
    Ok(cur)
}
