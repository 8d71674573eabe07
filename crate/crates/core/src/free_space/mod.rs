//! Norms in the free space over a marked tree.
//!
//! The free space of a subset of a tree embeds isometrically into a weighted
//! ℓ₁ over the edges: a finitely supported molecule `Σ aᵢ δ(xᵢ)` maps to the
//! vector whose coordinate on an edge is the total coefficient carried by the
//! points at or above the edge's upper end.

mod extreme;
mod profile;
mod transport;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{EdgeIdx, MarkedTree, VertexIdx};

pub use extreme::{enumerate_extreme_points, is_extreme_molecule};
pub use profile::{norm_profile, Atom, BreakpointMeasure, NormProfile};
pub use transport::lp_norm_oracle;

/// A finitely supported combination of point evaluations, keyed by label.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Molecule {
    coeffs: BTreeMap<String, f64>,
}

impl Molecule {
    pub fn new() -> Self {
        Self::default()
    }

    /// `δ(label)`.
    pub fn delta(label: impl Into<String>) -> Self {
        let mut m = Self::new();
        m.add(label, 1.0);
        m
    }

    /// `(δ(x) − δ(y)) / scale`.
    pub fn elementary(x: &str, y: &str, scale: f64) -> Self {
        let mut m = Self::new();
        m.add(x, 1.0 / scale);
        m.add(y, -1.0 / scale);
        m
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Self {
        let mut m = Self::new();
        for (l, a) in pairs {
            m.add(l, a);
        }
        m
    }

    pub fn add(&mut self, label: impl Into<String>, coeff: f64) {
        *self.coeffs.entry(label.into()).or_insert(0.0) += coeff;
    }

    pub fn coeff(&self, label: &str) -> f64 {
        self.coeffs.get(label).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.coeffs.iter().map(|(l, &a)| (l.as_str(), a))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|&a| a == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Molecule {
            coeffs: self.coeffs.iter().map(|(l, &a)| (l.clone(), a * factor)).collect(),
        }
    }

    /// `self + factor · other`.
    pub fn plus(&self, other: &Molecule, factor: f64) -> Self {
        let mut out = self.clone();
        for (l, a) in other.iter() {
            out.add(l, factor * a);
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Molecule = serde_json::from_str(text)?;
        if let Some((l, a)) = m.iter().find(|(_, a)| !a.is_finite()) {
            return Err(Error::value(format!("coefficient of {l:?} is {a}")));
        }
        Ok(m)
    }
}

/// Edge coordinates of a molecule, indexed like the tree's edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeVector {
    pub coords: Vec<f64>,
    pub lengths: Vec<f64>,
}

impl EdgeVector {
    pub fn coord(&self, e: EdgeIdx) -> f64 {
        self.coords[e.0]
    }

    /// Weighted ℓ₁ norm `Σ length · |c|`.
    pub fn norm(&self) -> f64 {
        self.coords
            .iter()
            .zip(&self.lengths)
            .map(|(c, l)| l * c.abs())
            .sum()
    }
}

/// Resolves the support of `mu` to vertices, dropping the root.
pub(crate) fn support(t: &MarkedTree, mu: &Molecule) -> Result<Vec<(VertexIdx, f64)>> {
    let mut out = Vec::new();
    for (label, a) in mu.iter() {
        let v = t.m_point(label)?;
        if v != t.root() {
            out.push((v, a));
        }
    }
    Ok(out)
}

pub fn godard_coordinates(t: &MarkedTree, mu: &Molecule) -> Result<EdgeVector> {
    let mut mass = vec![0.0; t.vertex_count()];
    for (v, a) in support(t, mu)? {
        mass[v.0] += a;
    }
    let mut coords = vec![0.0; t.edge_count()];
    for v in t.subtree_vertices(t.root()).into_iter().rev() {
        if let Some(e) = t.parent_edge(v) {
            coords[e.0] = mass[v.0];
            let p = t.edge(e).lower;
            mass[p.0] += mass[v.0];
        }
    }
    Ok(EdgeVector {
        coords,
        lengths: t.edges().iter().map(|e| e.length).collect(),
    })
}

pub fn free_norm(t: &MarkedTree, mu: &Molecule) -> Result<f64> {
    Ok(godard_coordinates(t, mu)?.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::fixtures::{path_013, star};
    use crate::tree::TreePoint;

    #[test]
    fn delta_of_a_leaf_is_its_root_path() {
        let t = star();
        let c = godard_coordinates(&t, &Molecule::delta("a")).unwrap();
        for e in t.edge_indices() {
            let expected = if t.edge(e).id == "eb" { 0.0 } else { 1.0 };
            assert_eq!(c.coord(e), expected);
        }
        assert_eq!(free_norm(&t, &Molecule::delta("a")).unwrap(), 2.0);
    }

    #[test]
    fn elementary_molecule_cancels_below_meet() {
        let t = star();
        let mu = Molecule::elementary("a", "b", 1.0);
        let c = godard_coordinates(&t, &mu).unwrap();
        let by_id = |id: &str| c.coord(t.edge_by_id(id).unwrap());
        assert_eq!((by_id("e0"), by_id("ea"), by_id("eb")), (0.0, 1.0, -1.0));
        assert_eq!(free_norm(&t, &mu).unwrap(), 2.0);
    }

    #[test]
    fn star_sum_of_leaves() {
        let t = star();
        let mu = Molecule::from_pairs([("a", 1.0), ("b", 1.0)]);
        let c = godard_coordinates(&t, &mu).unwrap();
        let by_id = |id: &str| c.coord(t.edge_by_id(id).unwrap());
        assert_eq!((by_id("e0"), by_id("ea"), by_id("eb")), (2.0, 1.0, 1.0));
        assert_eq!(free_norm(&t, &mu).unwrap(), 4.0);
    }

    #[test]
    fn root_coefficient_is_ignored() {
        let t = path_013();
        let mu = Molecule::from_pairs([("0", 7.0), ("b", 1.0)]);
        assert_eq!(free_norm(&t, &mu).unwrap(), 3.0);
    }

    #[test]
    fn delta_embeds_isometrically() {
        let t = star();
        for x in ["0", "a", "b"] {
            for y in ["0", "a", "b"] {
                let d = t.distance(
                    TreePoint::Vertex(t.vertex_by_label(x).unwrap()),
                    TreePoint::Vertex(t.vertex_by_label(y).unwrap()),
                );
                let mu = Molecule::delta(x).plus(&Molecule::delta(y), -1.0);
                assert_eq!(free_norm(&t, &mu).unwrap(), d);
            }
        }
    }

    #[test]
    fn unknown_label_is_structural() {
        let t = star();
        assert!(matches!(
            free_norm(&t, &Molecule::delta("zz")),
            Err(Error::Structural(_))
        ));
        // Steiner vertices are not points of M.
        assert!(free_norm(&t, &Molecule::delta("c")).is_err());
    }

    #[test]
    fn molecule_json() {
        let m = Molecule::from_json(r#"{"a": 1.5, "b": -2}"#).unwrap();
        assert_eq!(m.coeff("a"), 1.5);
        assert_eq!(m.coeff("b"), -2.0);
        assert!(Molecule::from_json(r#"{"a": "x"}"#).is_err());
    }
}
