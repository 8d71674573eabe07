mod common;

use common::TOL;
use lipfree::gen::{self, random_tree};
use lipfree::metric::{four_point_check, parse_metric_csv, validate_metric, write_metric_csv};
use lipfree::oracle::{brute_four_point, violating_point_sets};
use lipfree::tree::realize_tree;
use lipfree::FiniteMetric;
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn max_diff(a: &FiniteMetric, b: &FiniteMetric) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.len() {
        let bi = b.index_of(a.label(i)).unwrap();
        for j in 0..a.len() {
            let bj = b.index_of(a.label(j)).unwrap();
            worst = worst.max((a.d(i, j) - b.d(bi, bj)).abs());
        }
    }
    worst
}

/// Symmetric matrices with entries in `[1, 2]` always satisfy the triangle
/// inequality, so the four-point condition is the only thing that can fail.
fn near_uniform_metric() -> impl Strategy<Value = FiniteMetric> {
    (2usize..=6)
        .prop_flat_map(|n| (Just(n), proptest::collection::vec(1u8..=4, n * (n - 1) / 2)))
        .prop_map(|(n, entries)| {
            // Upper-triangle entries in row order.
            let index = |a: usize, b: usize| a * n - a * (a + 1) / 2 + (b - a - 1);
            let labels = (0..n).map(|i| format!("p{i}")).collect();
            FiniteMetric::from_fn(labels, "p0", |i, j| {
                1.0 + entries[index(i.min(j), i.max(j))] as f64 / 4.0
            })
            .unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_metrics_satisfy_four_points(seed: u64, leaves in 1usize..12) {
        let m = gen::leaf_metric(&random_tree(&mut gen::rng(seed), leaves));
        prop_assert!(validate_metric(&m, TOL).is_ok());
        prop_assert!(four_point_check(&m, TOL).is_none());
    }

    #[test]
    fn four_point_matches_brute_force(m in near_uniform_metric()) {
        let fast = four_point_check(&m, TOL);
        let brute = brute_four_point(&m, TOL);
        prop_assert_eq!(fast.is_none(), brute.is_empty());
        if let Some(w) = fast {
            let max = brute.iter().map(|v| v.excess).fold(f64::MIN, f64::max);
            prop_assert!((w.excess - max).abs() <= 1e-12);
            prop_assert!((w.violation - w.excess / 2.0).abs() <= 1e-15);
            let mut set = w.indices.to_vec();
            set.sort_unstable();
            set.dedup();
            prop_assert!(violating_point_sets(&brute).contains(&set));
        }
    }

    #[test]
    fn realization_round_trip(seed: u64, leaves in 1usize..24) {
        let t = random_tree(&mut gen::rng(seed), leaves);
        let m = gen::leaf_metric(&t);
        let r = realize_tree(&m, TOL).unwrap();
        prop_assert!(r.check_minimal().is_ok());
        prop_assert!(max_diff(&m, &r.to_metric()) <= 1e-9);
        prop_assert_eq!(r.branching_points().len(), t.branching_points().len());
    }

    #[test]
    fn realization_ignores_label_order(seed: u64, leaves in 2usize..12) {
        let mut rng = gen::rng(seed);
        let m = gen::leaf_metric(&random_tree(&mut rng, leaves));
        let mut perm: Vec<usize> = (0..m.len()).collect();
        perm.shuffle(&mut rng);
        let shuffled = m.permuted(&perm).unwrap();
        let a = realize_tree(&m, TOL).unwrap().to_metric();
        let b = realize_tree(&shuffled, TOL).unwrap().to_metric();
        prop_assert!(max_diff(&a, &b) <= 1e-9);
        let total = |m: &FiniteMetric| realize_tree(m, TOL).unwrap().edges().iter().map(|e| e.length).sum::<f64>();
        prop_assert!((total(&m) - total(&shuffled)).abs() <= 1e-9);
    }

    #[test]
    fn realization_scales(seed: u64, leaves in 1usize..10, factor in 0.1f64..10.0) {
        let m = gen::leaf_metric(&random_tree(&mut gen::rng(seed), leaves));
        let a = realize_tree(&m, TOL).unwrap();
        let b = realize_tree(&m.scaled(factor).unwrap(), TOL).unwrap();
        let la: f64 = a.edges().iter().map(|e| e.length).sum();
        let lb: f64 = b.edges().iter().map(|e| e.length).sum();
        prop_assert!((la * factor - lb).abs() <= 1e-9 * lb.max(1.0));
    }

    #[test]
    fn csv_round_trip(seed: u64, leaves in 1usize..8) {
        let m = gen::leaf_metric(&random_tree(&mut gen::rng(seed), leaves));
        let back = parse_metric_csv(&write_metric_csv(&m), None).unwrap();
        prop_assert_eq!(back.labels(), m.labels());
        prop_assert_eq!(back.root_label(), m.root_label());
        prop_assert!(max_diff(&m, &back) == 0.0);
    }
}

#[test]
fn unit_four_cycle_is_rejected_everywhere() {
    let labels = ["a", "b", "c", "d"].map(String::from).to_vec();
    let rows = vec![
        vec![0.0, 1.0, 2.0, 1.0],
        vec![1.0, 0.0, 1.0, 2.0],
        vec![2.0, 1.0, 0.0, 1.0],
        vec![1.0, 2.0, 1.0, 0.0],
    ];
    let m = FiniteMetric::from_rows(labels, rows, "a").unwrap();
    let w = four_point_check(&m, TOL).unwrap();
    assert_eq!(w.excess, 2.0);
    assert_eq!(w.violation, 1.0);
    assert!(realize_tree(&m, TOL).is_err());
}
