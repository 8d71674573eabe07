//! Dense two-phase simplex with Bland's rule.

use crate::error::{Error, Result};

const EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// rows × (cols + 1); the last column is the right-hand side.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c];
        for v in self.a[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `obj · x` over columns `0..allowed`; returns `false` when
    /// unbounded.
    fn optimize(&mut self, obj: &[f64], allowed: usize, cap: usize) -> Result<bool> {
        for _ in 0..cap {
            // Reduced costs: obj_j − obj_B · column_j.
            let reduced = |j: usize, t: &Tableau| -> f64 {
                obj[j]
                    - t.basis
                        .iter()
                        .zip(&t.a)
                        .map(|(&b, row)| obj[b] * row[j])
                        .sum::<f64>()
            };
            let Some(enter) = (0..allowed).find(|&j| !self.basis.contains(&j) && reduced(j, self) > EPS)
            else {
                return Ok(true);
            };
            let rhs = self.cols;
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.a.iter().enumerate() {
                if row[enter] > EPS {
                    let ratio = row[rhs] / row[enter];
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - EPS
                                || (ratio <= lr + EPS && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, enter),
            }
        }
        Err(Error::Numerical {
            message: "simplex iteration cap reached".into(),
            residual: f64::NAN,
        })
    }
}

/// Maximizes `c · x` subject to `A x = b`, `x ≥ 0`.
pub fn solve_standard(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpOutcome> {
    let m = a.len();
    let n = c.len();
    let cols = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (ai, &bi)) in a.iter().zip(b).enumerate() {
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; cols + 1];
        for (j, &v) in ai.iter().enumerate() {
            row[j] = sign * v;
        }
        row[n + i] = 1.0;
        row[cols] = sign * bi;
        rows.push(row);
    }
    let mut t = Tableau {
        a: rows,
        basis: (n..n + m).collect(),
        cols,
    };
    let cap = 50 * (cols + m + 10) * (m + 1);

    // Phase 1: minimize the artificial sum.
    let mut phase1 = vec![0.0; cols];
    for v in &mut phase1[n..] {
        *v = -1.0;
    }
    t.optimize(&phase1, cols, cap)?;
    let infeasibility: f64 = t
        .basis
        .iter()
        .zip(&t.a)
        .filter(|(&bv, _)| bv >= n)
        .map(|(_, row)| row[cols])
        .sum();
    if infeasibility > 1e-8 {
        return Ok(LpOutcome::Infeasible);
    }
    // Drive remaining zero-level artificials out of the basis where possible.
    for r in 0..m {
        if t.basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| t.a[r][j].abs() > EPS && !t.basis.contains(&j)) {
                t.pivot(r, j);
            }
        }
    }

    let mut obj = vec![0.0; cols];
    obj[..n].copy_from_slice(c);
    if !t.optimize(&obj, n, cap)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = vec![0.0; n];
    for (r, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            x[bv] = t.a[r][cols];
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpOutcome::Optimal { value, x })
}
