mod common;

use std::collections::HashSet;

use common::{separated_segment, TOL};
use lipfree::gen::{self, random_marked_tree, RandomTreeOptions};
use lipfree::rearrange::{
    branching_of_set, measure_check, normalize_tree, rearrange_closed_interval,
    rearrange_gap_interval, rearrange_separated_interval, stage_epsilon, verify_rearrangement,
    verify_subordinated, RearrangementResult,
};
use lipfree::tree::VertexIdx;
use lipfree::{MarkedTree, TreePoint};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;

fn tree(rng: &mut impl Rng, leaves: usize, internal_m: f64, marked: f64) -> MarkedTree {
    random_marked_tree(
        rng,
        RandomTreeOptions {
            leaves,
            internal_m,
            marked,
        },
    )
}

fn assert_verified(src: &MarkedTree, res: &RearrangementResult, bound: f64) {
    let rep = verify_rearrangement(src, res, TOL).unwrap();
    let failed: Vec<_> = rep.failures().map(|c| &c.name).collect();
    assert!(failed.is_empty(), "failed conditions {failed:?}");
    assert!(rep.empirical_constant.unwrap_or(1.0) <= bound + 1e-9);
    if res.segment.is_some() {
        let sub = verify_subordinated(src, res, TOL).unwrap();
        let failed: Vec<_> = sub.failures().map(|c| &c.name).collect();
        assert!(failed.is_empty(), "failed subordination {failed:?}");
    }
    assert!(measure_check(src, res).passed());
}

/// A pair `x ≺ y` of M-points.
fn ordered_m_pair(rng: &mut impl Rng, t: &MarkedTree) -> Option<(VertexIdx, VertexIdx)> {
    let below: Vec<_> = t.m_points().into_iter().filter(|&v| v != t.root()).collect();
    let &y = below.choose(rng)?;
    let above: Vec<_> = t
        .m_points()
        .into_iter()
        .filter(|&v| v != y && t.precedes(TreePoint::Vertex(v), TreePoint::Vertex(y)))
        .collect();
    Some((*above.choose(rng)?, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn separated_outputs_meet_all_conditions(seed: u64, leaves in 3usize..10, eps in 0.01f64..1.0) {
        let mut rng = gen::rng(seed);
        let t = tree(&mut rng, leaves, 0.3, 0.5);
        let seg = separated_segment(&mut rng, &t);
        prop_assume!(seg.is_some());
        let (x, y) = seg.unwrap();
        let res = rearrange_separated_interval(&t, x, y, eps, TOL).unwrap();
        prop_assert!(res.constant <= 1.0 + eps + 1e-12);
        assert_verified(&t, &res, 1.0 + eps);
        prop_assert!(measure_check(&t, &res).equal);
    }

    #[test]
    fn chains_compose(seed: u64, leaves in 3usize..8, steps in 1usize..=5) {
        let mut rng = gen::rng(seed);
        let t = tree(&mut rng, leaves, 0.2, 0.3);
        let mut acc = RearrangementResult::identity(&t);
        for _ in 0..steps {
            let Some((x, y)) = separated_segment(&mut rng, &acc.target) else { break };
            let eps = rng.random_range(0.05..0.3);
            let step = rearrange_separated_interval(&acc.target, x, y, eps, TOL).unwrap();
            assert_verified(&acc.target, &step, 1.0 + eps);
            acc = acc.then(step);
        }
        let bound = acc.constant;
        acc.segment = None;
        assert_verified(&t, &acc, bound);
    }

    #[test]
    fn gap_outputs_meet_all_conditions(seed: u64, leaves in 2usize..9, eps in 0.05f64..0.5) {
        let mut rng = gen::rng(seed);
        let t = tree(&mut rng, leaves, 0.0, 0.0);
        let pair = ordered_m_pair(&mut rng, &t);
        prop_assume!(pair.is_some());
        let (x, y) = pair.unwrap();
        // Only the root lies above a leaf, so the open segment avoids M.
        let res = rearrange_gap_interval(&t, TreePoint::Vertex(x), TreePoint::Vertex(y), eps, TOL).unwrap();
        assert_verified(&t, &res, 1.0 + eps);
    }

    #[test]
    fn closed_outputs_have_straddling_witnesses(seed: u64, leaves in 2usize..9, eps in 0.05f64..0.5) {
        let mut rng = gen::rng(seed);
        let t = tree(&mut rng, leaves, 0.5, 0.3);
        let pair = ordered_m_pair(&mut rng, &t);
        prop_assume!(pair.is_some());
        let (x, y) = pair.unwrap();
        let (px, py) = (TreePoint::Vertex(x), TreePoint::Vertex(y));
        let res = rearrange_closed_interval(&t, px, py, eps, TOL).unwrap();
        assert_verified(&t, &res, 1.0 + eps);

        // New branching points on the segment come from the grids.
        let grid: HashSet<&str> = res.trace.grid_ids().collect();
        for id in &res.trace.new_branching {
            prop_assert!(grid.contains(id.as_str()));
        }

        // Pairs whose projections are separated by an M-point of the segment
        // route through that point both before and after.
        let seg_m: Vec<(VertexIdx, f64)> = t
            .m_points()
            .into_iter()
            .map(|v| (v, t.distance(px, TreePoint::Vertex(v))))
            .filter(|&(v, _)| t.distance_to_segment(TreePoint::Vertex(v), px, py) <= TOL)
            .collect();
        let ms = t.m_points();
        for &p in &ms {
            for &q in &ms {
                let (tp, tq) = (TreePoint::Vertex(p), TreePoint::Vertex(q));
                let sp = t.distance(px, t.project_to_segment(tp, px, py));
                let sq = t.distance(px, t.project_to_segment(tq, px, py));
                let (lo, hi) = (sp.min(sq), sp.max(sq));
                let Some(&(z, _)) = seg_m.iter().find(|&&(_, s)| s > lo + TOL && s < hi - TOL) else {
                    continue;
                };
                let tz = TreePoint::Vertex(z);
                prop_assert!((t.distance(tp, tz) + t.distance(tz, tq) - t.distance(tp, tq)).abs() <= 1e-9);
                let (ip, iq, iz) = (res.image(tp), res.image(tq), res.image(tz));
                let tt = &res.target;
                let through = tt.distance(ip, iz) + tt.distance(iz, iq);
                prop_assert!((through - tt.distance(ip, iq)).abs() <= 1e-9);
                prop_assert!(through <= (1.0 + eps) * t.distance(tp, tq) + 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normalization_invariants_hold(seed: u64, leaves in 2usize..7, eps in 0.1f64..0.5) {
        let mut rng = gen::rng(seed);
        let t = tree(&mut rng, leaves, 0.3, 0.3);
        let res = normalize_tree(&t, eps, TOL).unwrap();
        assert_verified(&t, &res, 1.0 + eps);
        prop_assert!(measure_check(&t, &res).equal);
        let target = &res.target;
        let grid: HashSet<&str> = res.trace.grid_ids().collect();
        for v in branching_of_set(target, &target.m_points()) {
            prop_assert!(target.is_m(v) || grid.contains(target.vertex(v).id.as_str()));
        }
        let product: f64 = res.trace.stages.iter().map(|s| 1.0 + s.epsilon).product();
        prop_assert!(product <= 1.0 + eps + 1e-12);
    }
}

#[test]
fn subordinated_measure_is_preserved() {
    let mut rng = gen::rng(11);
    let mut runs = 0;
    while runs < 100 {
        let leaves = rng.random_range(3..10);
        let t = tree(&mut rng, leaves, 0.3, 0.6);
        let Some((x, y)) = separated_segment(&mut rng, &t) else {
            continue;
        };
        runs += 1;
        let res = rearrange_separated_interval(&t, x, y, 0.2, TOL).unwrap();
        let m = measure_check(&t, &res);
        assert!(m.subordinated && m.equal, "run {runs}: {} vs {}", m.source, m.image);
    }
}

#[test]
fn stage_budget_telescopes() {
    for eps in [0.01, 0.25, 1.0, 5.0] {
        let mut product = 1.0;
        for n in 1..=64 {
            product *= 1.0 + stage_epsilon(eps, n);
            assert!(product <= 1.0 + eps + 1e-12);
        }
        assert!((product - (1.0 + eps)).abs() <= 1e-12 * (1.0 + eps));
    }
}

#[test]
fn comb_instance_normalizes() {
    let t = gen::comb(12);
    let res = normalize_tree(&t, 0.25, TOL).unwrap();
    assert_verified(&t, &res, 1.25);
    assert!(res.trace.stages.iter().all(|s| s.moved > 0 || s.new_branching.is_empty()));
}
