use crate::error::{Error, Result};
use crate::tree::{MarkedTree, TreePoint, VertexIdx};

fn extreme_by_index(t: &MarkedTree, x: VertexIdx, y: VertexIdx) -> bool {
    let seg = t.segment(TreePoint::Vertex(x), TreePoint::Vertex(y));
    !(seg.interior_vertices().any(|(v, _)| t.is_m(v))
        || seg.pieces.iter().any(|p| t.edge(p.edge).marked))
}

/// Whether `(δ(x) − δ(y)) / d(x, y)` is an extreme point of the unit ball:
/// the open segment `(x, y)` meets neither an M-point nor a marked edge.
pub fn is_extreme_molecule(t: &MarkedTree, x: &str, y: &str) -> Result<bool> {
    if x == y {
        return Err(Error::value("an elementary molecule needs two distinct points"));
    }
    let (vx, vy) = (t.m_point(x)?, t.m_point(y)?);
    Ok(extreme_by_index(t, vx, vy))
}

/// All ordered pairs `(x, y)` whose elementary molecule is extreme, listed
/// in M-point order.
pub fn enumerate_extreme_points(t: &MarkedTree) -> Vec<(String, String)> {
    let pts = t.m_points();
    let mut out = Vec::new();
    for &x in &pts {
        for &y in &pts {
            if x != y && extreme_by_index(t, x, y) {
                out.push((t.label_of(x).to_owned(), t.label_of(y).to_owned()));
            }
        }
    }
    out
}
