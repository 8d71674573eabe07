//! Rearrangements: order-preserving maps of a tree into a larger tree that
//! move the parts hanging off a segment outwards, with bounded distortion of
//! the distances between points of M.
//!
//! The constructions here keep every source vertex at the same index and id
//! in the target, so a map is recorded by where vertices and edges go.

mod interval;
mod normalize;
mod verify;

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tree::{EdgeIdx, MarkedTree, PointDocument, TreePoint, VertexIdx};

pub use interval::{
    rearrange_closed_interval, rearrange_gap_interval, rearrange_separated_interval,
    MAX_GRID_POINTS,
};
pub(crate) use interval::gaps;
pub use normalize::{normalize_tree, stage_epsilon};
pub use verify::{
    branching_of_set, measure_check, verify_rearrangement, verify_subordinated, Condition,
    MeasureReport, VerificationReport,
};

/// Images of source vertices and edges. An edge goes to a chain of target
/// edges listed from the end nearest the root; an interior point at offset
/// `s` goes to the point at distance `s` along the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMap {
    pub vertex_images: Vec<VertexIdx>,
    pub edge_images: Vec<Vec<EdgeIdx>>,
}

impl PointMap {
    pub fn identity(t: &MarkedTree) -> Self {
        PointMap {
            vertex_images: t.vertex_indices().collect(),
            edge_images: t.edge_indices().map(|e| vec![e]).collect(),
        }
    }

    pub fn image(&self, target: &MarkedTree, p: TreePoint) -> TreePoint {
        match p {
            TreePoint::Vertex(v) => TreePoint::Vertex(self.vertex_images[v.0]),
            TreePoint::Edge { edge, offset } => {
                let chain = &self.edge_images[edge.0];
                let mut acc = 0.0;
                for (i, &f) in chain.iter().enumerate() {
                    let len = target.edge(f).length;
                    if offset <= acc + len || i + 1 == chain.len() {
                        let local = (offset - acc).clamp(0.0, len);
                        return target
                            .edge_point(f, local)
                            .expect("offset clamped to the edge");
                    }
                    acc += len;
                }
                unreachable!("edge images are non-empty")
            }
        }
    }

    /// The map `next ∘ self`.
    pub fn then(&self, next: &PointMap) -> PointMap {
        PointMap {
            vertex_images: self
                .vertex_images
                .iter()
                .map(|v| next.vertex_images[v.0])
                .collect(),
            edge_images: self
                .edge_images
                .iter()
                .map(|chain| {
                    chain
                        .iter()
                        .flat_map(|f| next.edge_images[f.0].iter().copied())
                        .collect()
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub id: String,
    /// Distance from the lower end of the interval.
    pub position: f64,
    /// Moved off a branching point.
    pub shifted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Attachment {
    /// First vertex of the moved component.
    pub component: String,
    /// Vertex the component hung from.
    pub from: String,
    pub from_position: f64,
    pub grid_index: usize,
    pub grid_id: String,
    pub spur_vertex: String,
    pub spur_edge: String,
    pub spur_length: f64,
}

/// One application of the separated-interval construction.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalTrace {
    pub stage: Option<usize>,
    pub lower: PointDocument,
    pub upper: PointDocument,
    pub length: f64,
    pub distance_to_m: f64,
    pub epsilon: f64,
    pub spur: f64,
    pub steps: usize,
    pub grid: Vec<GridPoint>,
    pub attachments: Vec<Attachment>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTrace {
    pub stage: usize,
    pub point: String,
    pub meet: String,
    pub interval: (String, String),
    pub epsilon: f64,
    /// Non-M branching points created inside the stage interval.
    pub new_branching: Vec<String>,
    pub moved: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Trace {
    pub intervals: Vec<IntervalTrace>,
    pub stages: Vec<StageTrace>,
    /// Non-M branching points created on the open segment, for closed
    /// interval runs.
    pub new_branching: Vec<String>,
}

impl Trace {
    pub fn moved(&self) -> usize {
        self.intervals.iter().map(|i| i.attachments.len()).sum()
    }

    pub fn grid_ids(&self) -> impl Iterator<Item = &str> {
        self.intervals
            .iter()
            .flat_map(|i| i.grid.iter().map(|g| g.id.as_str()))
    }

    fn append(&mut self, other: Trace) {
        self.intervals.extend(other.intervals);
        self.stages.extend(other.stages);
        self.new_branching.extend(other.new_branching);
    }
}

#[derive(Debug, Clone)]
pub struct RearrangementResult {
    pub target: MarkedTree,
    pub map: PointMap,
    /// Claimed distortion constant.
    pub constant: f64,
    /// Segment of the source tree the map is subordinated to.
    pub segment: Option<(TreePoint, TreePoint)>,
    pub trace: Trace,
}

impl RearrangementResult {
    pub fn identity(t: &MarkedTree) -> Self {
        RearrangementResult {
            target: t.clone(),
            map: PointMap::identity(t),
            constant: 1.0,
            segment: None,
            trace: Trace::default(),
        }
    }

    /// `next` applied after `self`; `next` must start from `self.target`.
    /// Keeps the segment of `self`.
    pub fn then(self, next: RearrangementResult) -> RearrangementResult {
        let mut trace = self.trace;
        trace.append(next.trace);
        RearrangementResult {
            map: self.map.then(&next.map),
            target: next.target,
            constant: self.constant * next.constant,
            segment: self.segment,
            trace,
        }
    }

    /// Image of a point of the source tree.
    pub fn image(&self, p: TreePoint) -> TreePoint {
        self.map.image(&self.target, p)
    }

    /// Source vertex ids to target points.
    pub fn point_map_document(
        &self,
        src: &MarkedTree,
    ) -> std::collections::BTreeMap<String, PointDocument> {
        src.vertex_indices()
            .map(|v| {
                (
                    src.vertex(v).id.clone(),
                    self.target.point_document(self.image(TreePoint::Vertex(v))),
                )
            })
            .collect()
    }

    pub(crate) fn check_covers(&self, src: &MarkedTree) -> Result<()> {
        if self.map.vertex_images.len() != src.vertex_count()
            || self.map.edge_images.len() != src.edge_count()
        {
            return Err(Error::structural(
                "point map does not cover the source vertices and edges",
            ));
        }
        let nv = self.target.vertex_count();
        let ne = self.target.edge_count();
        if self.map.vertex_images.iter().any(|v| v.0 >= nv)
            || self
                .map
                .edge_images
                .iter()
                .any(|c| c.is_empty() || c.iter().any(|f| f.0 >= ne))
        {
            return Err(Error::structural("point map refers outside the target tree"));
        }
        Ok(())
    }
}

/// Ids not yet used in a tree, numbered per prefix.
pub(crate) struct FreshIds {
    vertices: HashSet<String>,
    edges: HashSet<String>,
    counter: std::collections::HashMap<&'static str, usize>,
}

impl FreshIds {
    pub(crate) fn new(t: &MarkedTree) -> Self {
        FreshIds {
            vertices: t.vertices().iter().map(|v| v.id.clone()).collect(),
            edges: t.edges().iter().map(|e| e.id.clone()).collect(),
            counter: Default::default(),
        }
    }

    fn next(&mut self, prefix: &'static str, vertex: bool) -> String {
        loop {
            let c = self.counter.entry(prefix).or_insert(0);
            *c += 1;
            let id = format!("{prefix}{c}");
            let taken = if vertex {
                &mut self.vertices
            } else {
                &mut self.edges
            };
            if taken.insert(id.clone()) {
                return id;
            }
        }
    }

    pub(crate) fn vertex(&mut self, prefix: &'static str) -> String {
        self.next(prefix, true)
    }

    pub(crate) fn edge(&mut self, prefix: &'static str) -> String {
        self.next(prefix, false)
    }
}
