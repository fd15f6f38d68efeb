//! Graph vocabulary shared by roadmaps, explicit test graphs and the search.

use crate::coverage::CoverageSet;

pub type VertexId = usize;
pub type EdgeId = usize;

/// Cached collision status of an edge. Only `Unknown → Valid` and
/// `Unknown → Invalid` transitions happen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeStatus {
    Unknown,
    Valid,
    Invalid,
}

/// An edge seen from one of its endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRef {
    pub id: EdgeId,
    pub from: VertexId,
    pub to: VertexId,
    pub length: f64,
}

/// What the inspection search needs from a graph.
///
/// Edges may be evaluated lazily: [`SearchGraph::validate_edge`] resolves an
/// `Unknown` edge once and caches the answer.
pub trait SearchGraph {
    fn num_vertices(&self) -> usize;
    fn num_pois(&self) -> usize;
    fn vertex_coverage(&self, v: VertexId) -> &CoverageSet;
    /// Union of all vertex coverages.
    fn total_coverage(&self) -> &CoverageSet;
    /// Appends the edges incident to `v` that are not known to be invalid,
    /// ordered by neighbor id, oriented away from `v`.
    fn neighbors_into(&self, v: VertexId, out: &mut Vec<EdgeRef>);
    /// The edge oriented away from `from`, or `None` if `from` is not an endpoint.
    fn edge_from(&self, e: EdgeId, from: VertexId) -> Option<EdgeRef>;
    fn edge_status(&self, e: EdgeId) -> EdgeStatus;
    /// Resolves the edge's status, running the collision check at most once.
    fn validate_edge(&mut self, e: EdgeId) -> EdgeStatus;
}
