use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::{Edge, MarkedTree, TreePoint, Vertex, VertexIdx, VertexKind};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
pub struct VertexDocument {
    pub id: String,
    #[serde(default)]
    pub label: Option<String>,
    pub kind: VertexKind,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EdgeDocument {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Kept as raw JSON text so that lengths round-trip digit for digit.
    pub length: Box<RawValue>,
    #[serde(default)]
    pub marked: bool,
}

/// On-disk form of a [`MarkedTree`].
#[derive(Debug, Serialize, Deserialize)]
pub struct TreeDocument {
    pub vertices: Vec<VertexDocument>,
    pub edges: Vec<EdgeDocument>,
    pub root: String,
}

impl TryFrom<TreeDocument> for MarkedTree {
    type Error = Error;

    fn try_from(doc: TreeDocument) -> Result<Self> {
        let vertices: Vec<Vertex> = doc
            .vertices
            .into_iter()
            .map(|v| Vertex {
                id: v.id,
                label: v.label,
                kind: v.kind,
            })
            .collect();
        let index = |id: &str| -> Result<VertexIdx> {
            vertices
                .iter()
                .position(|v| v.id == id)
                .map(VertexIdx)
                .ok_or_else(|| Error::structural(format!("unknown vertex id {id:?}")))
        };
        let mut edges = Vec::with_capacity(doc.edges.len());
        for e in doc.edges {
            let text = e.length.get().trim().to_owned();
            let length: f64 = text.parse().map_err(|_| Error::Parse {
                location: format!("edge {:?}", e.id),
                message: format!("length {text} is not a number"),
            })?;
            let mut edge = Edge::new(e.id, index(&e.from)?, index(&e.to)?, length).marked(e.marked);
            edge.literal = Some(text);
            edges.push(edge);
        }
        let root = index(&doc.root)?;
        MarkedTree::new(vertices, edges, root)
    }
}

impl From<&MarkedTree> for TreeDocument {
    fn from(t: &MarkedTree) -> Self {
        let vertices = t
            .vertices()
            .iter()
            .map(|v| VertexDocument {
                id: v.id.clone(),
                label: v.label.clone(),
                kind: v.kind,
            })
            .collect();
        let edges = t
            .edges()
            .iter()
            .map(|e| {
                let text = match &e.literal {
                    Some(l) if l.parse::<f64>().ok() == Some(e.length) => l.clone(),
                    _ => serde_json::to_string(&e.length).expect("lengths are finite"),
                };
                EdgeDocument {
                    id: e.id.clone(),
                    from: t.vertex(e.lower).id.clone(),
                    to: t.vertex(e.upper).id.clone(),
                    length: RawValue::from_string(text).expect("a number is valid JSON"),
                    marked: e.marked,
                }
            })
            .collect();
        TreeDocument {
            vertices,
            edges,
            root: t.vertex(t.root()).id.clone(),
        }
    }
}

impl MarkedTree {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDocument = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TreeDocument::from(self)).expect("tree serializes")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(TreeDocument::from(self)).expect("tree serializes")
    }
}

/// A point of a tree by id: a vertex, or an offset from the lower end of an edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointDocument {
    Vertex { vertex: String },
    Edge { edge: String, offset: f64 },
}

impl MarkedTree {
    pub fn point_document(&self, p: TreePoint) -> PointDocument {
        match p {
            TreePoint::Vertex(v) => PointDocument::Vertex {
                vertex: self.vertex(v).id.clone(),
            },
            TreePoint::Edge { edge, offset } => PointDocument::Edge {
                edge: self.edge(edge).id.clone(),
                offset,
            },
        }
    }

    pub fn resolve_point(&self, doc: &PointDocument) -> Result<TreePoint> {
        match doc {
            PointDocument::Vertex { vertex } => self
                .vertex_by_id(vertex)
                .map(TreePoint::Vertex)
                .ok_or_else(|| Error::structural(format!("unknown vertex id {vertex:?}"))),
            PointDocument::Edge { edge, offset } => {
                let e = self
                    .edge_by_id(edge)
                    .ok_or_else(|| Error::structural(format!("unknown edge id {edge:?}")))?;
                self.edge_point(e, *offset)
            }
        }
    }
}
