use serde::Serialize;

use super::{godard_coordinates, Molecule};
use crate::error::{Error, Result};
use crate::tree::MarkedTree;

/// Coordinates of `v` below this magnitude count as zero.
const ZERO_COORD: f64 = 1e-12;
/// Breakpoints closer than this are merged.
const MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

/// Second derivative of a piecewise-linear convex function: point masses at
/// strictly increasing positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakpointMeasure {
    pub atoms: Vec<Atom>,
}

impl BreakpointMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }
}

/// `t ↦ ‖u − t·v‖` as a convex piecewise-linear function.
#[derive(Debug, Clone, Serialize)]
pub struct NormProfile {
    pub breakpoints: BreakpointMeasure,
    /// Function value at each breakpoint.
    pub values: Vec<f64>,
    /// Slope left of the first breakpoint.
    pub slope_left: f64,
    /// Slope right of each breakpoint.
    pub slopes: Vec<f64>,
    #[serde(skip)]
    terms: Vec<(f64, f64, f64)>,
}

impl NormProfile {
    /// Evaluates the profile from its breakpoint data.
    pub fn eval(&self, t: f64) -> f64 {
        let atoms = &self.breakpoints.atoms;
        let k = atoms.partition_point(|a| a.position <= t);
        if k == 0 {
            self.values[0] + self.slope_left * (t - atoms[0].position)
        } else {
            self.values[k - 1] + self.slopes[k - 1] * (t - atoms[k - 1].position)
        }
    }

    /// Evaluates `Σ length·|c(u) − t·c(v)|` term by term.
    pub fn eval_direct(&self, t: f64) -> f64 {
        direct(&self.terms, t)
    }

    pub fn positions(&self) -> Vec<f64> {
        self.breakpoints.atoms.iter().map(|a| a.position).collect()
    }
}

fn direct(terms: &[(f64, f64, f64)], t: f64) -> f64 {
    terms.iter().map(|&(l, cu, cv)| l * (cu - t * cv).abs()).sum()
}

pub fn norm_profile(t: &MarkedTree, u: &Molecule, v: &Molecule) -> Result<NormProfile> {
    let cu = godard_coordinates(t, u)?;
    let cv = godard_coordinates(t, v)?;
    let terms: Vec<(f64, f64, f64)> = cu
        .lengths
        .iter()
        .zip(cu.coords.iter().zip(&cv.coords))
        .map(|(&l, (&a, &b))| (l, a, if b.abs() > ZERO_COORD { b } else { 0.0 }))
        .collect();

    let mut raw: Vec<(f64, f64)> = terms
        .iter()
        .filter(|(_, _, b)| *b != 0.0)
        .map(|&(l, a, b)| (a / b, 2.0 * l * b.abs()))
        .collect();
    if raw.is_empty() {
        return Err(Error::value("v is zero, so the profile has no breakpoints"));
    }
    raw.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut atoms: Vec<Atom> = Vec::new();
    for (position, mass) in raw {
        match atoms.last_mut() {
            Some(last) if position - last.position <= MERGE_TOL => last.mass += mass,
            _ => atoms.push(Atom { position, mass }),
        }
    }

    let slope_left = -terms.iter().map(|(l, _, b)| l * b.abs()).sum::<f64>();
    let mut slopes = Vec::with_capacity(atoms.len());
    let mut s = slope_left;
    for a in &atoms {
        s += a.mass;
        slopes.push(s);
    }
    let values = atoms.iter().map(|a| direct(&terms, a.position)).collect();
    Ok(NormProfile {
        breakpoints: BreakpointMeasure { atoms },
        values,
        slope_left,
        slopes,
        terms,
    })
}
