use super::Molecule;
use crate::error::{Error, Result};
use crate::metric::FiniteMetric;

struct Arc {
    to: usize,
    cap: f64,
    cost: f64,
}

/// Min-cost flow by successive shortest paths with Bellman-Ford.
struct Network {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Network {
            arcs: Vec::new(),
            out: vec![Vec::new(); nodes],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: f64, cost: f64) {
        self.out[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap, cost });
        self.out[to].push(self.arcs.len());
        self.arcs.push(Arc {
            to: from,
            cap: 0.0,
            cost: -cost,
        });
    }

    /// Pushes `amount` from `s` to `t`; returns the total cost.
    fn min_cost_flow(&mut self, s: usize, t: usize, amount: f64, eps: f64) -> Result<f64> {
        let n = self.out.len();
        let mut remaining = amount;
        let mut cost = 0.0;
        let cap_iters = 4 * self.arcs.len() * n + 16;
        // Relaxations smaller than this are rounding noise; accepting them can
        // close a cycle in the predecessor links.
        let max_cost = self.arcs.iter().map(|a| a.cost.abs()).fold(0.0, f64::max);
        let slack = 1e-12 * max_cost.max(1.0) * n as f64;
        for _ in 0..cap_iters {
            if remaining <= eps {
                return Ok(cost);
            }
            let mut dist = vec![f64::INFINITY; n];
            let mut via = vec![usize::MAX; n];
            dist[s] = 0.0;
            for _ in 0..n {
                let mut changed = false;
                for u in 0..n {
                    if dist[u].is_infinite() {
                        continue;
                    }
                    for &ai in &self.out[u] {
                        let arc = &self.arcs[ai];
                        if arc.cap > eps && dist[u] + arc.cost < dist[arc.to] - slack {
                            dist[arc.to] = dist[u] + arc.cost;
                            via[arc.to] = ai;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[t].is_infinite() {
                return Err(Error::Numerical {
                    message: "transport network ran out of augmenting paths".into(),
                    residual: remaining,
                });
            }
            let mut push = remaining;
            let mut v = t;
            let mut hops = 0;
            while v != s {
                let ai = via[v];
                push = push.min(self.arcs[ai].cap);
                v = self.arcs[ai ^ 1].to;
                hops += 1;
                if hops > n {
                    return Err(Error::Numerical {
                        message: "transport network has a cycle of negative cost".into(),
                        residual: remaining,
                    });
                }
            }
            let mut v = t;
            while v != s {
                let ai = via[v];
                self.arcs[ai].cap -= push;
                self.arcs[ai ^ 1].cap += push;
                v = self.arcs[ai ^ 1].to;
            }
            remaining -= push;
            cost += push * dist[t];
        }
        Err(Error::Numerical {
            message: "transport solver hit its iteration cap".into(),
            residual: remaining,
        })
    }
}

/// The free-space norm of `mu` computed directly from the metric, as the
/// cheapest way to move the positive mass onto the negative mass with the
/// root absorbing any imbalance. Uses no tree structure.
pub fn lp_norm_oracle(m: &FiniteMetric, mu: &Molecule) -> Result<f64> {
    let n = m.len();
    let mut balance = vec![0.0; n];
    for (label, a) in mu.iter() {
        let i = m
            .index_of(label)
            .ok_or_else(|| Error::structural(format!("unknown label {label:?}")))?;
        if i != m.root() {
            balance[i] += a;
        }
    }
    let total: f64 = balance.iter().sum();
    balance[m.root()] = -total;

    let scale = balance.iter().map(|b| b.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let eps = 1e-13 * scale;
    let (s, t) = (n, n + 1);
    let mut net = Network::new(n + 2);
    let mut supply = 0.0;
    for (i, &b) in balance.iter().enumerate() {
        if b > eps {
            net.add(s, i, b, 0.0);
            supply += b;
        } else if b < -eps {
            net.add(i, t, -b, 0.0);
        }
    }
    for (i, &bi) in balance.iter().enumerate() {
        if bi <= eps {
            continue;
        }
        for (j, &bj) in balance.iter().enumerate() {
            if bj < -eps {
                net.add(i, j, f64::INFINITY, m.d(i, j));
            }
        }
    }
    net.min_cost_flow(s, t, supply, eps * n as f64)
}
