//! Finite pointed metric spaces and the four-point condition.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite pointed metric space: labelled points, a full distance matrix and
/// a designated base point (the root).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MetricFile", into = "MetricFile")]
pub struct FiniteMetric {
    labels: Vec<String>,
    dist: Vec<f64>,
    root: usize,
}

#[derive(Serialize, Deserialize)]
struct MetricFile {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
    root: String,
}

impl TryFrom<MetricFile> for FiniteMetric {
    type Error = Error;

    fn try_from(file: MetricFile) -> Result<Self> {
        FiniteMetric::from_rows(file.labels, file.dist, &file.root)
    }
}

impl From<FiniteMetric> for MetricFile {
    fn from(m: FiniteMetric) -> Self {
        MetricFile {
            dist: m.rows(),
            root: m.labels[m.root].clone(),
            labels: m.labels,
        }
    }
}

impl FiniteMetric {
    /// Builds a metric from a square matrix given row by row.
    ///
    /// Only structural problems (shape, duplicate labels, unknown root) and
    /// inadmissible values (NaN, infinite or negative entries) are rejected
    /// here; metric axioms are checked by [`validate_metric`].
    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<f64>>, root: &str) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::structural("metric has no points"));
        }
        if rows.len() != n {
            return Err(Error::structural(format!(
                "distance matrix has {} rows but there are {} labels",
                rows.len(),
                n
            )));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::structural(format!("duplicate label {l:?}")));
            }
        }
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::structural(format!(
                    "row {} ({}) has {} entries, expected {}",
                    i,
                    labels[i],
                    row.len(),
                    n
                )));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() {
                    return Err(Error::value(format!(
                        "d({}, {}) is not a finite number",
                        labels[i], labels[j]
                    )));
                }
                if d < 0.0 {
                    return Err(Error::value(format!(
                        "d({}, {}) = {} is negative",
                        labels[i], labels[j], d
                    )));
                }
                dist.push(d);
            }
        }
        let root = labels
            .iter()
            .position(|l| l == root)
            .ok_or_else(|| Error::structural(format!("root label {root:?} is not a point")))?;
        Ok(FiniteMetric { labels, dist, root })
    }

    /// Builds a metric from a distance function evaluated on every pair.
    pub fn from_fn(
        labels: Vec<String>,
        root: &str,
        mut d: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let n = labels.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { d(i, j) }).collect())
            .collect();
        Self::from_rows(labels, rows, root)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn root_label(&self) -> &str {
        &self.labels[self.root]
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.labels.len() + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.labels.len()).map(<[f64]>::to_vec).collect()
    }

    /// Sets a single entry (both orientations).
    pub fn with_entry(&self, i: usize, j: usize, value: f64) -> Result<Self> {
        let mut rows = self.rows();
        rows[i][j] = value;
        rows[j][i] = value;
        Self::from_rows(self.labels.clone(), rows, self.root_label())
    }

    /// The same space with every distance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let rows = self
            .rows()
            .into_iter()
            .map(|r| r.into_iter().map(|d| d * factor).collect())
            .collect();
        Self::from_rows(self.labels.clone(), rows, self.root_label())
    }

    /// Reorders the points: point `i` of the result is point `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        let rows = perm
            .iter()
            .map(|&a| perm.iter().map(|&b| self.d(a, b)).collect())
            .collect();
        Self::from_rows(labels, rows, self.root_label())
    }

    /// Restriction to a subset of points (given by index, in the given order).
    pub fn restricted(&self, keep: &[usize]) -> Result<Self> {
        if !keep.contains(&self.root) {
            return Err(Error::structural("restriction must keep the root"));
        }
        self.permuted(keep)
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairIssue {
    pub a: String,
    pub b: String,
    pub detail: f64,
}

/// `d(a, c) > d(a, b) + d(b, c)`; `excess` is the amount by which it fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleViolation {
    pub a: String,
    pub b: String,
    pub c: String,
    pub excess: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub nonzero_diagonal: Vec<PairIssue>,
    pub asymmetric: Vec<PairIssue>,
    pub non_positive: Vec<PairIssue>,
    pub triangle: Vec<TriangleViolation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.nonzero_diagonal.is_empty()
            && self.asymmetric.is_empty()
            && self.non_positive.is_empty()
            && self.triangle.is_empty()
    }
}

/// Lists every violation of the metric axioms larger than `tol`.
pub fn validate_metric(m: &FiniteMetric, tol: f64) -> ValidationReport {
    let n = m.len();
    let mut report = ValidationReport::default();
    for i in 0..n {
        if m.d(i, i).abs() > tol {
            report.nonzero_diagonal.push(PairIssue {
                a: m.label(i).to_owned(),
                b: m.label(i).to_owned(),
                detail: m.d(i, i),
            });
        }
        for j in i + 1..n {
            let diff = (m.d(i, j) - m.d(j, i)).abs();
            if diff > tol {
                report.asymmetric.push(PairIssue {
                    a: m.label(i).to_owned(),
                    b: m.label(j).to_owned(),
                    detail: diff,
                });
            }
            if m.d(i, j) <= tol || m.d(j, i) <= tol {
                report.non_positive.push(PairIssue {
                    a: m.label(i).to_owned(),
                    b: m.label(j).to_owned(),
                    detail: m.d(i, j).min(m.d(j, i)),
                });
            }
        }
    }
    for a in 0..n {
        for c in a + 1..n {
            for b in 0..n {
                if b == a || b == c {
                    continue;
                }
                let excess = m.d(a, c) - (m.d(a, b) + m.d(b, c));
                if excess > tol {
                    report.triangle.push(TriangleViolation {
                        a: m.label(a).to_owned(),
                        b: m.label(b).to_owned(),
                        c: m.label(c).to_owned(),
                        excess,
                    });
                }
            }
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Four-point condition

/// A quadruple `(x, y, z, w)` with
/// `d(x,y) + d(z,w) > max{d(x,z) + d(y,w), d(y,z) + d(x,w)}`.
///
/// `excess` is the left side minus the right side. `violation` is half of it,
/// the gap between the two smallest Gromov products, which is the scale on
/// which a metric fails to be a tree metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourPointWitness {
    pub indices: [usize; 4],
    pub labels: [String; 4],
    pub excess: f64,
    pub violation: f64,
}

impl fmt::Display for FourPointWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, z, w] = &self.labels;
        write!(
            f,
            "quadruple ({x}, {y}, {z}, {w}) violates the four-point condition by {}",
            self.violation
        )
    }
}

/// Excess of the four-point inequality for one ordered quadruple.
#[inline]
pub(crate) fn four_point_excess(m: &FiniteMetric, x: usize, y: usize, z: usize, w: usize) -> f64 {
    let lhs = m.d(x, y) + m.d(z, w);
    let rhs = (m.d(x, z) + m.d(y, w)).max(m.d(y, z) + m.d(x, w));
    lhs - rhs
}

/// Checks the four-point condition on every quadruple (repeated points
/// allowed).
///
/// Returns `None` when every excess is within `tol`. Otherwise returns the
/// lexicographically smallest quadruple among those with maximal excess. The
/// excess is invariant under swapping `x` and `y`, swapping `z` and `w`, and
/// exchanging the two pairs, so only the canonical representative of each
/// orbit (`x <= y`, `z <= w`, `(x, y) <= (z, w)`) is visited.
pub fn four_point_check(m: &FiniteMetric, tol: f64) -> Option<FourPointWitness> {
    let n = m.len();
    let mut best: Option<([usize; 4], f64)> = None;
    for x in 0..n {
        for y in x..n {
            for z in x..n {
                let w_start = if z == x { y.max(z) } else { z };
                for w in w_start..n {
                    let e = four_point_excess(m, x, y, z, w);
                    if e > tol && best.is_none_or(|(_, b)| e > b) {
                        best = Some(([x, y, z, w], e));
                    }
                }
            }
        }
    }
    best.map(|(q, excess)| FourPointWitness {
        indices: q,
        labels: q.map(|i| m.label(i).to_owned()),
        excess,
        violation: excess / 2.0,
    })
}

// ---------------------------------------------------------------------------
// File formats

/// Parses the CSV matrix format: a header row of labels followed by the full
/// matrix, one row per label. A line `#root: <label>` selects the root;
/// `root_override` takes precedence, and without either the first label is
/// the root.
pub fn parse_metric_csv(text: &str, root_override: Option<&str>) -> Result<FiniteMetric> {
    let mut root_line = None;
    for line in text.lines() {
        if let Some(rest) = line.trim().strip_prefix("#root:") {
            root_line = Some(rest.trim().to_owned());
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let labels: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(&e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&e))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(record.len());
        for (field, raw) in record.iter().enumerate() {
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                location: format!("line {line}, field {}", field + 1),
                message: format!("{raw:?} is not a number"),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    let root = match (root_override, root_line.as_deref()) {
        (Some(r), _) => r.to_owned(),
        (None, Some(r)) => r.to_owned(),
        (None, None) => labels
            .first()
            .cloned()
            .ok_or_else(|| Error::structural("empty header row"))?,
    };
    FiniteMetric::from_rows(labels, rows, &root)
}

fn csv_error(e: &csv::Error) -> Error {
    let location = e
        .position()
        .map_or_else(|| "input".to_owned(), |p| format!("line {}", p.line()));
    Error::Parse {
        location,
        message: e.to_string(),
    }
}

/// Writes the CSV matrix format (with a `#root:` line).
pub fn write_metric_csv(m: &FiniteMetric) -> String {
    let mut out = format!("#root: {}\n", m.root_label());
    out.push_str(&m.labels.join(","));
    out.push('\n');
    for i in 0..m.len() {
        let row: Vec<String> = (0..m.len()).map(|j| format!("{}", m.d(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
