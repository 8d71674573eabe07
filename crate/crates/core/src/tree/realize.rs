use std::collections::HashSet;

use super::{Edge, MarkedTree, TreePoint, Vertex, VertexIdx, VertexKind};
use crate::error::{Error, Result};
use crate::metric::{four_point_check, FiniteMetric};

/// Growing tree used during insertion: nodes point at their parent.
struct Builder {
    vertices: Vec<Vertex>,
    parent: Vec<Option<usize>>,
    /// Id of the edge from a node to its parent.
    edge_id: Vec<String>,
    depth: Vec<f64>,
    taken: HashSet<String>,
    next_steiner: usize,
    next_edge: usize,
}

impl Builder {
    fn fresh_steiner_id(&mut self) -> String {
        loop {
            self.next_steiner += 1;
            let id = format!("s{}", self.next_steiner);
            if self.taken.insert(id.clone()) {
                return id;
            }
        }
    }

    fn fresh_edge_id(&mut self) -> String {
        self.next_edge += 1;
        format!("e{}", self.next_edge)
    }

    fn push(&mut self, vertex: Vertex, parent: Option<usize>, depth: f64) -> usize {
        let edge = if parent.is_some() {
            self.fresh_edge_id()
        } else {
            String::new()
        };
        self.vertices.push(vertex);
        self.parent.push(parent);
        self.edge_id.push(edge);
        self.depth.push(depth);
        self.vertices.len() - 1
    }

    /// Inserts `vertex` at `height` on the edge above `child`; the lower half
    /// keeps the edge id.
    fn split(&mut self, child: usize, height: f64, vertex: Vertex) -> usize {
        let parent = self.parent[child];
        let old = std::mem::take(&mut self.edge_id[child]);
        self.vertices.push(vertex);
        self.parent.push(parent);
        self.edge_id.push(old);
        self.depth.push(height);
        let w = self.vertices.len() - 1;
        self.parent[child] = Some(w);
        self.edge_id[child] = self.fresh_edge_id();
        w
    }

    /// The node at `height` on the root path of `from`, splitting an edge
    /// when the height falls strictly inside one.
    fn locate(&mut self, from: usize, height: f64, tol: f64, as_m: Option<&str>) -> usize {
        let mut v = from;
        loop {
            if (self.depth[v] - height).abs() <= tol {
                return v;
            }
            let p = self.parent[v].expect("height is above the root");
            if self.depth[p] >= height - tol {
                v = p;
                continue;
            }
            let vertex = match as_m {
                Some(label) => Vertex::m_point(label),
                None => {
                    let id = self.fresh_steiner_id();
                    Vertex::steiner(id)
                }
            };
            return self.split(v, height, vertex);
        }
    }
}

/// Builds the minimal tree spanned by a tree metric, by inserting points one
/// at a time at the height given by their largest Gromov product with the
/// points already placed.
///
/// The root is inserted first, then the remaining labels in input order.
/// Rejects inputs whose realization disagrees with the matrix beyond `tol`,
/// returning the canonical four-point witness when there is one.
pub fn realize_tree(m: &FiniteMetric, tol: f64) -> Result<MarkedTree> {
    let n = m.len();
    let root = m.root();
    let mut order = vec![root];
    order.extend((0..n).filter(|&i| i != root));

    let mut b = Builder {
        vertices: Vec::with_capacity(2 * n),
        parent: Vec::with_capacity(2 * n),
        edge_id: Vec::with_capacity(2 * n),
        depth: Vec::with_capacity(2 * n),
        taken: m.labels().iter().cloned().collect(),
        next_steiner: 0,
        next_edge: 0,
    };
    // node index of each metric point
    let mut node = vec![usize::MAX; n];
    node[root] = b.push(Vertex::m_point(m.label(root)), None, 0.0);

    for (k, &p) in order.iter().enumerate().skip(1) {
        let dp = m.d(root, p);
        let label = m.label(p);
        let mut best = (f64::NEG_INFINITY, root);
        for &q in &order[..k] {
            let g = (dp + m.d(root, q) - m.d(p, q)) / 2.0;
            if g > best.0 {
                best = (g, q);
            }
        }
        let (g, q) = best;
        let height = g.clamp(0.0, dp.min(m.d(root, q)));
        let residual = dp - height;
        if residual <= tol {
            let w = b.locate(node[q], height, tol, Some(label));
            if b.vertices[w].is_m() && b.vertices[w].label.as_deref() != Some(label) {
                if let Some(w) = four_point_check(m, tol) {
                    return Err(Error::NotTreeMetric(Box::new(w)));
                }
                return Err(Error::value(format!(
                    "points {:?} and {:?} coincide",
                    b.vertices[w].label.as_deref().unwrap_or_default(),
                    label
                )));
            }
            if b.vertices[w].kind == VertexKind::Steiner {
                b.taken.remove(&b.vertices[w].id);
                b.vertices[w] = Vertex::m_point(label);
            }
            node[p] = w;
        } else {
            let w = b.locate(node[q], height, tol, None);
            node[p] = b.push(Vertex::m_point(label), Some(w), dp);
        }
    }

    let Builder {
        vertices,
        parent,
        edge_id,
        depth,
        ..
    } = b;
    let edges: Vec<Edge> = (0..vertices.len())
        .filter_map(|v| {
            parent[v].map(|p| {
                Edge::new(
                    edge_id[v].clone(),
                    VertexIdx(p),
                    VertexIdx(v),
                    depth[v] - depth[p],
                )
            })
        })
        .collect();
    let tree = MarkedTree::new(vertices, edges, VertexIdx(node[root]))?;

    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = tree.distance(
                TreePoint::Vertex(VertexIdx(node[i])),
                TreePoint::Vertex(VertexIdx(node[j])),
            );
            worst = worst.max((d - m.d(i, j)).abs());
        }
    }
    if worst > tol {
        return Err(match four_point_check(m, tol) {
            Some(w) => Error::NotTreeMetric(Box::new(w)),
            None => Error::Numerical {
                message: "realized distances drift from the input".into(),
                residual: worst,
            },
        });
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::FiniteMetric;

    fn metric(labels: &[&str], rows: Vec<Vec<f64>>) -> FiniteMetric {
        FiniteMetric::from_rows(labels.iter().map(|s| s.to_string()).collect(), rows, labels[0])
            .unwrap()
    }

    #[test]
    fn collinear_points_give_a_path() {
        let m = metric(
            &["0", "a", "b"],
            vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 2.0], vec![3.0, 2.0, 0.0]],
        );
        let t = realize_tree(&m, 1e-9).unwrap();
        assert_eq!(t.vertex_count(), 3);
        assert!(t.vertices().iter().all(|v| v.is_m()));
        let a = t.vertex_by_label("a").unwrap();
        let b = t.vertex_by_label("b").unwrap();
        assert_eq!(t.parent(b), Some(a));
        assert_eq!(t.vertex_depth(a), 1.0);
        t.check_minimal().unwrap();
    }

    #[test]
    fn equilateral_triple_gives_a_star() {
        let m = metric(
            &["0", "a", "b"],
            vec![vec![0.0, 2.0, 2.0], vec![2.0, 0.0, 2.0], vec![2.0, 2.0, 0.0]],
        );
        let t = realize_tree(&m, 1e-9).unwrap();
        assert_eq!(t.vertex_count(), 4);
        let br = t.branching_points();
        assert_eq!(br.len(), 1);
        assert_eq!(t.vertex(br[0]).id, "s1");
        for l in ["0", "a", "b"] {
            let v = t.vertex_by_label(l).unwrap();
            assert_eq!(
                t.distance(TreePoint::Vertex(v), TreePoint::Vertex(br[0])),
                1.0
            );
        }
        t.check_minimal().unwrap();
    }

    #[test]
    fn four_cycle_is_rejected_with_witness() {
        let m = metric(
            &["0", "a", "b", "c"],
            vec![
                vec![0.0, 1.0, 2.0, 1.0],
                vec![1.0, 0.0, 1.0, 2.0],
                vec![2.0, 1.0, 0.0, 1.0],
                vec![1.0, 2.0, 1.0, 0.0],
            ],
        );
        match realize_tree(&m, 1e-9) {
            Err(Error::NotTreeMetric(w)) => assert_eq!(w.indices, [0, 2, 1, 3]),
            other => panic!("expected witness, got {other:?}"),
        }
    }

    #[test]
    fn steiner_ids_avoid_labels() {
        let m = metric(
            &["0", "s1", "b"],
            vec![vec![0.0, 2.0, 2.0], vec![2.0, 0.0, 2.0], vec![2.0, 2.0, 0.0]],
        );
        let t = realize_tree(&m, 1e-9).unwrap();
        assert_eq!(t.vertex(t.branching_points()[0]).id, "s2");
    }

    #[test]
    fn point_inside_an_edge_becomes_an_m_vertex() {
        // b lies between 0 and a, but is inserted after a.
        let m = metric(
            &["0", "a", "b"],
            vec![vec![0.0, 3.0, 1.0], vec![3.0, 0.0, 2.0], vec![1.0, 2.0, 0.0]],
        );
        let t = realize_tree(&m, 1e-9).unwrap();
        assert_eq!(t.vertex_count(), 3);
        let b = t.vertex_by_label("b").unwrap();
        assert_eq!(t.degree(b), 2);
        assert_eq!(t.vertex_depth(b), 1.0);
    }
}
