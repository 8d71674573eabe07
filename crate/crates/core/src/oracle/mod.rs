//! Slow reference implementations, kept free of the fast paths' code so that
//! agreement between the two is meaningful.

mod simplex;

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::free_space::Molecule;
use crate::metric::FiniteMetric;

pub use simplex::{solve_standard, LpOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadrupleViolation {
    pub indices: [usize; 4],
    pub excess: f64,
}

/// Every ordered quadruple `(x, y, z, w)` with
/// `d(x,y) + d(z,w) > max(d(x,z) + d(y,w), d(x,w) + d(y,z)) + tol`.
pub fn brute_four_point(m: &FiniteMetric, tol: f64) -> Vec<QuadrupleViolation> {
    let n = m.len();
    let d = |i: usize, j: usize| m.d(i, j);
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for w in 0..n {
                    let lhs = d(x, y) + d(z, w);
                    let rhs = f64::max(d(x, z) + d(y, w), d(x, w) + d(y, z));
                    if lhs > rhs + tol {
                        out.push(QuadrupleViolation {
                            indices: [x, y, z, w],
                            excess: lhs - rhs,
                        });
                    }
                }
            }
        }
    }
    out
}

/// The point sets of the violating quadruples, each listed once.
pub fn violating_point_sets(violations: &[QuadrupleViolation]) -> BTreeSet<Vec<usize>> {
    violations
        .iter()
        .map(|v| {
            let mut s = v.indices.to_vec();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect()
}

fn index(m: &FiniteMetric, label: &str) -> Result<usize> {
    m.index_of(label)
        .ok_or_else(|| Error::structural(format!("unknown label {label:?}")))
}

/// The norm as the Lipschitz-dual LP
/// `max Σ aᵢ fᵢ` subject to `fᵢ − fⱼ ≤ d(i, j)` and `f(root) = 0`.
pub fn lp_dense(m: &FiniteMetric, mu: &Molecule) -> Result<f64> {
    let n = m.len();
    if n > 12 {
        return Err(Error::precondition("lp_dense handles at most 12 points"));
    }
    let root = m.root();
    let free: Vec<usize> = (0..n).filter(|&i| i != root).collect();
    let k = free.len();
    let mut coeff = vec![0.0; n];
    for (label, a) in mu.iter() {
        coeff[index(m, label)?] += a;
    }
    // Variables: f⁺ (k), f⁻ (k), one slack per constraint.
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let cols = 2 * k + pairs.len();
    let pos = |v: usize| free.iter().position(|&f| f == v);
    let mut a = Vec::with_capacity(pairs.len());
    let mut b = Vec::with_capacity(pairs.len());
    for (r, &(i, j)) in pairs.iter().enumerate() {
        let mut row = vec![0.0; cols];
        if let Some(p) = pos(i) {
            row[p] += 1.0;
            row[k + p] -= 1.0;
        }
        if let Some(p) = pos(j) {
            row[p] -= 1.0;
            row[k + p] += 1.0;
        }
        row[2 * k + r] = 1.0;
        a.push(row);
        b.push(m.d(i, j));
    }
    let mut c = vec![0.0; cols];
    for (p, &v) in free.iter().enumerate() {
        c[p] = coeff[v];
        c[k + p] = -coeff[v];
    }
    match solve_standard(&a, &b, &c)? {
        LpOutcome::Optimal { value, .. } => Ok(value),
        other => Err(Error::Numerical {
            message: format!("Lipschitz LP ended as {other:?}"),
            residual: f64::NAN,
        }),
    }
}

/// The norm by exhausting the vertices of the Lipschitz polytope: each vertex
/// has every non-root value tied to a neighbour by `fᵢ = fⱼ ± d(i, j)` along
/// a spanning tree rooted at the base point. For at most 5 points.
pub fn brute_lipschitz_norm(m: &FiniteMetric, mu: &Molecule) -> Result<f64> {
    let n = m.len();
    if n > 5 {
        return Err(Error::precondition("brute_lipschitz_norm handles at most 5 points"));
    }
    let root = m.root();
    let mut coeff = vec![0.0; n];
    for (label, a) in mu.iter() {
        coeff[index(m, label)?] += a;
    }
    let free: Vec<usize> = (0..n).filter(|&i| i != root).collect();
    // Each free point picks a parent (any other point) and a sign.
    let choices = 2 * (n - 1).max(1);
    let total = choices.pow(free.len() as u32);
    let mut best = f64::NEG_INFINITY;
    for code in 0..total {
        let mut parent = vec![usize::MAX; n];
        let mut sign = vec![0.0; n];
        let mut c = code;
        for &v in &free {
            let pick = c % choices;
            c /= choices;
            let others: Vec<usize> = (0..n).filter(|&u| u != v).collect();
            parent[v] = others[pick / 2];
            sign[v] = if pick.is_multiple_of(2) { 1.0 } else { -1.0 };
        }
        let mut f = vec![f64::NAN; n];
        f[root] = 0.0;
        let mut ok = true;
        for &v in &free {
            // Resolve by following parents; reject cycles.
            let mut chain = vec![v];
            let mut u = parent[v];
            while f[u].is_nan() {
                if chain.contains(&u) || chain.len() > n {
                    ok = false;
                    break;
                }
                chain.push(u);
                u = parent[u];
            }
            if !ok {
                break;
            }
            for &w in chain.iter().rev() {
                f[w] = f[parent[w]] + sign[w] * m.d(w, parent[w]);
            }
        }
        if !ok {
            continue;
        }
        let feasible = (0..n).all(|i| (0..n).all(|j| f[i] - f[j] <= m.d(i, j) + 1e-9));
        if feasible {
            let value: f64 = (0..n).map(|i| coeff[i] * f[i]).sum();
            best = best.max(value);
        }
    }
    Ok(best)
}

/// Coordinates of `(δ(x) − δ(y)) / d(x, y)` over the non-root points.
fn molecule_vector(m: &FiniteMetric, x: usize, y: usize) -> Vec<f64> {
    let root = m.root();
    let d = m.d(x, y);
    (0..m.len())
        .filter(|&i| i != root)
        .map(|i| {
            let mut v = 0.0;
            if i == x {
                v += 1.0 / d;
            }
            if i == y {
                v -= 1.0 / d;
            }
            v
        })
        .collect()
}

/// Ordered pairs `(x, y)` whose molecule is a vertex of the convex hull of all
/// `±(δ(x) − δ(y)) / d(x, y)`, found by testing each candidate for being a
/// convex combination of the others. For at most 5 points.
pub fn ball_vertices(m: &FiniteMetric) -> Result<Vec<(String, String)>> {
    let n = m.len();
    if n > 5 {
        return Err(Error::precondition("ball_vertices handles at most 5 points"));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y)))
        .collect();
    let vectors: Vec<Vec<f64>> = pairs.iter().map(|&(x, y)| molecule_vector(m, x, y)).collect();
    let dim = n - 1;
    let mut out = Vec::new();
    for (ci, target) in vectors.iter().enumerate() {
        let others: Vec<&Vec<f64>> = vectors
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != ci)
            .map(|(_, v)| v)
            .collect();
        // Σ λⱼ vⱼ = target, Σ λⱼ = 1, λ ≥ 0.
        let mut a = vec![vec![0.0; others.len()]; dim + 1];
        for (j, v) in others.iter().enumerate() {
            for r in 0..dim {
                a[r][j] = v[r];
            }
            a[dim][j] = 1.0;
        }
        let mut b = target.clone();
        b.push(1.0);
        let c = vec![0.0; others.len()];
        if solve_standard(&a, &b, &c)? == LpOutcome::Infeasible {
            let (x, y) = pairs[ci];
            out.push((m.label(x).to_owned(), m.label(y).to_owned()));
        }
    }
    Ok(out)
}

/// Extremality read off the matrix: no third point `p` satisfies
/// `d(x, p) + d(p, y) = d(x, y)` within `tol`.
pub fn extreme_by_metric(m: &FiniteMetric, x: usize, y: usize, tol: f64) -> bool {
    (0..m.len())
        .filter(|&p| p != x && p != y)
        .all(|p| m.d(x, p) + m.d(p, y) > m.d(x, y) + tol)
}
