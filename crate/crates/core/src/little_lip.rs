//! Separating functions that are locally flat and flat at infinity.
//!
//! A [`TreeLipschitzFn`] factors through the projection onto a segment
//! `[x, y]`: a point is sent to its distance from `x` after projecting, then
//! through a piecewise linear profile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rearrange::gaps;
use crate::tree::{MarkedTree, TreePoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeLipschitzFn {
    /// Labels of the segment endpoints.
    pub segment: (String, String),
    /// Profile on `[0, d(x, y)]` as `(position, value)`, positions increasing.
    pub breakpoints: Vec<(f64, f64)>,
    /// Subtracted so that the root evaluates to zero.
    pub root_offset: f64,
}

impl TreeLipschitzFn {
    pub fn new(
        x: impl Into<String>,
        y: impl Into<String>,
        breakpoints: Vec<(f64, f64)>,
        root_offset: f64,
    ) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::value("a profile needs at least one breakpoint"));
        }
        if breakpoints.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::value("breakpoint positions must increase"));
        }
        Ok(TreeLipschitzFn {
            segment: (x.into(), y.into()),
            breakpoints,
            root_offset,
        })
    }

    /// The profile at distance `s` from `x`, constant beyond the ends.
    pub fn profile(&self, s: f64) -> f64 {
        let bp = &self.breakpoints;
        if s <= bp[0].0 {
            return bp[0].1;
        }
        let last = bp[bp.len() - 1];
        if s >= last.0 {
            return last.1;
        }
        let i = bp.partition_point(|&(p, _)| p <= s);
        let (p0, v0) = bp[i - 1];
        let (p1, v1) = bp[i];
        if p1 == p0 {
            v1
        } else {
            v0 + (v1 - v0) * (s - p0) / (p1 - p0)
        }
    }

    fn ends(&self, t: &MarkedTree) -> Result<(TreePoint, TreePoint)> {
        Ok((
            TreePoint::Vertex(t.m_point(&self.segment.0)?),
            TreePoint::Vertex(t.m_point(&self.segment.1)?),
        ))
    }

    pub fn eval(&self, t: &MarkedTree, p: TreePoint) -> Result<f64> {
        let (x, y) = self.ends(t)?;
        let proj = t.project_to_segment(p, x, y);
        Ok(self.profile(t.distance(x, proj)) - self.root_offset)
    }

    /// Values at every M-point, in vertex order.
    pub fn values_on_m(&self, t: &MarkedTree) -> Result<Vec<f64>> {
        t.m_points()
            .into_iter()
            .map(|v| self.eval(t, TreePoint::Vertex(v)))
            .collect()
    }

    /// Largest slope of the profile between consecutive breakpoints.
    pub fn profile_slope(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .filter(|w| w[1].0 > w[0].0)
            .map(|w| (w[1].1 - w[0].1).abs() / (w[1].0 - w[0].0))
            .fold(0.0, f64::max)
    }
}

/// A gap of `[x, y]` outside M, as distances from `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gap {
    pub start: f64,
    pub end: f64,
    pub retained: bool,
}

impl Gap {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparatingFunction {
    pub function: TreeLipschitzFn,
    /// All gaps in order along the segment.
    pub gaps: Vec<Gap>,
    /// Total length of the gaps left out.
    pub discarded: f64,
    /// Sum of the retained gap lengths in position order; equals `f(y) − f(x)`.
    pub separation: f64,
    /// Length of `[x, y] ∩ M`.
    pub marked_length: f64,
    /// Set when `[x, y] ∩ M` has positive length, where separation up to
    /// `ε` cannot be expected.
    pub degraded: bool,
}

impl SeparatingFunction {
    pub fn min_retained_half_length(&self) -> Option<f64> {
        self.gaps
            .iter()
            .filter(|g| g.retained)
            .map(|g| g.length() / 2.0)
            .min_by(f64::total_cmp)
    }
}

/// A 1-Lipschitz function on the tree, constant near every point of M and
/// on every component off `[x, y]`, with `f(y) − f(x)` equal to the retained
/// gap length. Gaps are retained longest first (ties by position) until the
/// rest add up to at most `epsilon`; the profile climbs with slope 1 across
/// each retained gap and is flat elsewhere.
pub fn separating_function(
    t: &MarkedTree,
    x: &str,
    y: &str,
    epsilon: f64,
    tol: f64,
) -> Result<SeparatingFunction> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::value(format!("epsilon must be positive, got {epsilon}")));
    }
    if x == y {
        return Err(Error::value("the two points must differ"));
    }
    let xv = TreePoint::Vertex(t.m_point(x)?);
    let yv = TreePoint::Vertex(t.m_point(y)?);
    let seg = t.segment(xv, yv);
    let length = seg.length;
    let raw = gaps(t, &seg, tol);
    let mut marked: Vec<f64> = seg
        .pieces
        .iter()
        .filter(|p| t.edge(p.edge).marked)
        .map(|p| p.end - p.start)
        .collect();
    let marked_length = crate::tree::stable_sum(&mut marked);

    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&i, &j| {
        let li = raw[i].1 - raw[i].0;
        let lj = raw[j].1 - raw[j].0;
        lj.total_cmp(&li).then(raw[i].0.total_cmp(&raw[j].0))
    });
    let lengths: Vec<f64> = order.iter().map(|&i| raw[i].1 - raw[i].0).collect();
    // Smallest prefix of the sorted gaps whose complement is at most epsilon.
    let mut keep = lengths.len();
    for k in 0..=lengths.len() {
        let rest: f64 = lengths[k..].iter().sum();
        if rest <= epsilon {
            keep = k;
            break;
        }
    }
    let mut retained = vec![false; raw.len()];
    for &i in &order[..keep] {
        retained[i] = true;
    }
    let discarded: f64 = lengths[keep..].iter().sum();

    let mut breakpoints = vec![(0.0, 0.0)];
    let mut level = 0.0;
    for (i, &(a, b)) in raw.iter().enumerate() {
        if !retained[i] {
            continue;
        }
        breakpoints.push((a, level));
        level += b - a;
        breakpoints.push((b, level));
    }
    breakpoints.push((length, level));
    breakpoints.dedup_by(|b, a| b.0 == a.0 && b.1 == a.1);

    let mut function = TreeLipschitzFn::new(x, y, breakpoints, 0.0)?;
    function.root_offset = function.eval(t, TreePoint::Vertex(t.root()))?;
    let gaps = raw
        .iter()
        .zip(&retained)
        .map(|(&(start, end), &retained)| Gap {
            start,
            end,
            retained,
        })
        .collect();
    Ok(SeparatingFunction {
        function,
        gaps,
        discarded,
        separation: level,
        marked_length,
        degraded: marked_length > tol,
    })
}

/// Largest `|f(p) − f(q)| / d(p, q)` over pairs of M-points.
pub fn lipschitz_constant(t: &MarkedTree, f: &TreeLipschitzFn) -> Result<f64> {
    let ms = t.m_points();
    let vals = f.values_on_m(t)?;
    let mut best = 0.0f64;
    for i in 0..ms.len() {
        for j in (i + 1)..ms.len() {
            let d = t.distance(TreePoint::Vertex(ms[i]), TreePoint::Vertex(ms[j]));
            if d > 0.0 {
                best = best.max((vals[i] - vals[j]).abs() / d);
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalFlatness {
    pub point: String,
    /// Lipschitz constant on the closed ball around the point, per radius.
    pub constants: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatnessReport {
    pub radii: Vec<f64>,
    pub local: Vec<LocalFlatness>,
    /// Constant on M outside the ball of each radius around the root.
    pub tail_from_root: Vec<f64>,
    /// Constant on the M-points farther than each radius from the segment.
    pub tail_off_segment: Vec<f64>,
}

impl FlatnessReport {
    /// Largest local constant at radius index `k`.
    pub fn worst_local(&self, k: usize) -> f64 {
        self.local
            .iter()
            .map(|l| l.constants[k])
            .fold(0.0, f64::max)
    }
}

fn constant_on(idx: &[usize], vals: &[f64], dist: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            if dist[i][j] > 0.0 {
                best = best.max((vals[i] - vals[j]).abs() / dist[i][j]);
            }
        }
    }
    best
}

/// Local Lipschitz constants around each M-point and tail constants, one per
/// radius.
pub fn flatness_report(t: &MarkedTree, f: &TreeLipschitzFn, radii: &[f64]) -> Result<FlatnessReport> {
    if radii.iter().any(|&r| !(r.is_finite() && r > 0.0)) {
        return Err(Error::value("radii must be positive"));
    }
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::value("radii must be sorted"));
    }
    let ms = t.m_points();
    let n = ms.len();
    let vals = f.values_on_m(t)?;
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| t.distance(TreePoint::Vertex(ms[i]), TreePoint::Vertex(ms[j])))
                .collect()
        })
        .collect();
    let (x, y) = f.ends(t)?;
    let root = t.root();
    let from_root: Vec<f64> = ms
        .iter()
        .map(|&v| t.distance(TreePoint::Vertex(root), TreePoint::Vertex(v)))
        .collect();
    let from_segment: Vec<f64> = ms
        .iter()
        .map(|&v| t.distance_to_segment(TreePoint::Vertex(v), x, y))
        .collect();

    let local = (0..n)
        .map(|i| LocalFlatness {
            point: t.label_of(ms[i]).to_owned(),
            constants: radii
                .iter()
                .map(|&r| {
                    let ball: Vec<usize> = (0..n).filter(|&j| dist[i][j] <= r).collect();
                    constant_on(&ball, &vals, &dist)
                })
                .collect(),
        })
        .collect();
    let tail = |far: &[f64]| -> Vec<f64> {
        radii
            .iter()
            .map(|&r| {
                let out: Vec<usize> = (0..n).filter(|&j| far[j] > r).collect();
                constant_on(&out, &vals, &dist)
            })
            .collect()
    };
    Ok(FlatnessReport {
        radii: radii.to_vec(),
        local,
        tail_from_root: tail(&from_root),
        tail_off_segment: tail(&from_segment),
    })
}
