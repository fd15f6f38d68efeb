//! Exact inspection plans on small explicit graphs.
//!
//! [`optimal_inspection_plan`] runs a uniform-cost search over
//! `(vertex, covered subset)` states. It is exponential in the POI count and
//! only meant for checking the approximate search on tiny instances.

use crate::coverage::CoverageSet;
use crate::graph::{EdgeId, EdgeRef, EdgeStatus, SearchGraph, VertexId};
use rand::Rng;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

pub const MAX_ORACLE_POIS: usize = 20;
pub const MAX_ORACLE_VERTICES: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("graph too large for the exact oracle ({vertices} vertices, {pois} POIs)")]
    TooLarge { vertices: usize, pois: usize },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
struct ExplicitEdge {
    u: VertexId,
    v: VertexId,
    weight: f64,
    valid: bool,
}

/// A weighted undirected graph with per-vertex coverage and a hidden
/// ground-truth validity for each edge.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitGraph {
    num_pois: usize,
    start: VertexId,
    coverage: Vec<CoverageSet>,
    total: CoverageSet,
    edges: Vec<ExplicitEdge>,
    status: Vec<EdgeStatus>,
    adjacency: Vec<Vec<(VertexId, EdgeId)>>,
    validations: u64,
}

impl ExplicitGraph {
    pub fn new(num_pois: usize, start: VertexId) -> Self {
        ExplicitGraph {
            num_pois,
            start,
            coverage: Vec::new(),
            total: CoverageSet::new(num_pois),
            edges: Vec::new(),
            status: Vec::new(),
            adjacency: Vec::new(),
            validations: 0,
        }
    }

    pub fn start(&self) -> VertexId {
        self.start
    }

    pub fn add_vertex(&mut self, coverage: CoverageSet) -> VertexId {
        assert_eq!(
            coverage.width(),
            self.num_pois,
            "coverage width must match the POI count"
        );
        self.total.union_with(&coverage);
        self.coverage.push(coverage);
        self.adjacency.push(Vec::new());
        self.coverage.len() - 1
    }

    /// Adds edge `u−v`; `valid` is the ground truth revealed on validation.
    pub fn add_edge(
        &mut self,
        u: VertexId,
        v: VertexId,
        weight: f64,
        valid: bool,
    ) -> Result<EdgeId, OracleError> {
        let n = self.coverage.len();
        if u >= n || v >= n || u == v {
            return Err(OracleError::InvalidGraph(format!("bad endpoints {u}−{v}")));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(OracleError::InvalidGraph(format!(
                "edge {u}−{v} has weight {weight}"
            )));
        }
        if self.find_edge(u, v).is_some() {
            return Err(OracleError::InvalidGraph(format!("duplicate edge {u}−{v}")));
        }
        let id = self.edges.len();
        self.edges.push(ExplicitEdge {
            u,
            v,
            weight,
            valid,
        });
        self.status.push(EdgeStatus::Unknown);
        for (a, b) in [(u, v), (v, u)] {
            let pos = self.adjacency[a].partition_point(|&(w, _)| w < b);
            self.adjacency[a].insert(pos, (b, id));
        }
        Ok(id)
    }

    pub fn find_edge(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.adjacency
            .get(u)?
            .iter()
            .find(|(w, _)| *w == v)
            .map(|(_, e)| *e)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_weight(&self, e: EdgeId) -> f64 {
        self.edges[e].weight
    }

    pub fn edge_is_valid(&self, e: EdgeId) -> bool {
        self.edges[e].valid
    }

    pub fn edge_endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        (self.edges[e].u, self.edges[e].v)
    }

    /// Number of ground-truth lookups performed through [`SearchGraph::validate_edge`].
    pub fn validations(&self) -> u64 {
        self.validations
    }

    /// Copy with the same structure and all edge statuses reset to `Unknown`.
    pub fn fresh(&self) -> Self {
        let mut g = self.clone();
        g.status.iter_mut().for_each(|s| *s = EdgeStatus::Unknown);
        g.validations = 0;
        g
    }

    /// Same graph with vertices renumbered by `perm` (old id → new id).
    pub fn relabeled(&self, perm: &[VertexId]) -> Self {
        let n = self.coverage.len();
        let mut inverse = vec![0; n];
        for (old, &new) in perm.iter().enumerate() {
            inverse[new] = old;
        }
        let mut g = ExplicitGraph::new(self.num_pois, perm[self.start]);
        for &old in &inverse {
            g.add_vertex(self.coverage[old].clone());
        }
        for e in &self.edges {
            g.add_edge(perm[e.u], perm[e.v], e.weight, e.valid)
                .expect("relabeled edge");
        }
        g
    }

    fn check_size(&self) -> Result<(), OracleError> {
        if self.num_pois > MAX_ORACLE_POIS || self.coverage.len() > MAX_ORACLE_VERTICES {
            return Err(OracleError::TooLarge {
                vertices: self.coverage.len(),
                pois: self.num_pois,
            });
        }
        Ok(())
    }

    fn mask(&self, v: VertexId) -> u32 {
        self.coverage[v].iter().fold(0, |m, i| m | (1 << i))
    }

    /// Parses the line-oriented graph format:
    ///
    /// ```text
    /// pois 2
    /// start 0
    /// vertex            # vertex 0, no POIs
    /// vertex 0          # vertex 1 sees POI 0
    /// vertex 1
    /// edge 0 1 1.5
    /// edge 1 2 2.0 invalid  # ground truth: in collision
    /// ```
    pub fn parse(text: &str) -> Result<Self, OracleError> {
        let err = |line: usize, message: String| OracleError::Parse { line, message };
        let mut pois = None;
        let mut start = None;
        let mut g: Option<ExplicitGraph> = None;
        for (ix, raw) in text.lines().enumerate() {
            let line = ix + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut words = content.split_whitespace();
            let keyword = words.next().unwrap_or("");
            let rest: Vec<&str> = words.collect();
            let parse_usize = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| err(line, format!("expected an integer, got {s:?}")))
            };
            match keyword {
                "pois" | "start" => {
                    if g.is_some() {
                        return Err(err(line, format!("{keyword} must precede vertices")));
                    }
                    let [value] = rest.as_slice() else {
                        return Err(err(line, format!("{keyword} takes one value")));
                    };
                    let value = parse_usize(value)?;
                    if keyword == "pois" {
                        pois = Some(value);
                    } else {
                        start = Some(value);
                    }
                }
                "vertex" => {
                    let n = pois.ok_or_else(|| err(line, "pois must be declared first".into()))?;
                    let graph = g.get_or_insert_with(|| ExplicitGraph::new(n, start.unwrap_or(0)));
                    let mut c = CoverageSet::new(n);
                    for w in rest {
                        let i = parse_usize(w)?;
                        if i >= n {
                            return Err(err(line, format!("POI {i} out of range")));
                        }
                        c.insert(i);
                    }
                    graph.add_vertex(c);
                }
                "edge" => {
                    let graph = g
                        .as_mut()
                        .ok_or_else(|| err(line, "edge before any vertex".into()))?;
                    let (u, v, w, valid) = match rest.as_slice() {
                        [u, v, w] => (u, v, w, true),
                        [u, v, w, "invalid"] => (u, v, w, false),
                        _ => return Err(err(line, "expected: edge U V WEIGHT [invalid]".into())),
                    };
                    let weight: f64 = w
                        .parse()
                        .map_err(|_| err(line, format!("bad weight {w:?}")))?;
                    graph
                        .add_edge(parse_usize(u)?, parse_usize(v)?, weight, valid)
                        .map_err(|e| err(line, e.to_string()))?;
                }
                other => return Err(err(line, format!("unknown keyword {other:?}"))),
            }
        }
        let g = g.ok_or_else(|| err(0, "no vertices".into()))?;
        if g.start >= g.coverage.len() {
            return Err(OracleError::InvalidGraph(format!(
                "start {} is not a vertex",
                g.start
            )));
        }
        Ok(g)
    }
}

impl SearchGraph for ExplicitGraph {
    fn num_vertices(&self) -> usize {
        self.coverage.len()
    }

    fn num_pois(&self) -> usize {
        self.num_pois
    }

    fn vertex_coverage(&self, v: VertexId) -> &CoverageSet {
        &self.coverage[v]
    }

    fn total_coverage(&self) -> &CoverageSet {
        &self.total
    }

    fn neighbors_into(&self, v: VertexId, out: &mut Vec<EdgeRef>) {
        out.extend(
            self.adjacency[v]
                .iter()
                .filter(|(_, e)| self.status[*e] != EdgeStatus::Invalid)
                .map(|&(w, e)| EdgeRef {
                    id: e,
                    from: v,
                    to: w,
                    length: self.edges[e].weight,
                }),
        );
    }

    fn edge_from(&self, e: EdgeId, from: VertexId) -> Option<EdgeRef> {
        let edge = self.edges.get(e)?;
        let to = if edge.u == from {
            edge.v
        } else if edge.v == from {
            edge.u
        } else {
            return None;
        };
        Some(EdgeRef {
            id: e,
            from,
            to,
            length: edge.weight,
        })
    }

    fn edge_status(&self, e: EdgeId) -> EdgeStatus {
        self.status[e]
    }

    fn validate_edge(&mut self, e: EdgeId) -> EdgeStatus {
        if self.status[e] == EdgeStatus::Unknown {
            self.validations += 1;
            self.status[e] = if self.edges[e].valid {
                EdgeStatus::Valid
            } else {
                EdgeStatus::Invalid
            };
        }
        self.status[e]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPlan {
    pub vertices: Vec<VertexId>,
    pub coverage: CoverageSet,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Label {
    vertex: VertexId,
    mask: u32,
    length: f64,
    parent: Option<usize>,
}

#[derive(Debug, PartialEq)]
struct Queued(f64, usize);

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest walk from the start over truly valid edges that sees every POI
/// reachable at all.
pub fn optimal_inspection_plan(g: &ExplicitGraph) -> Result<OptimalPlan, OracleError> {
    g.check_size()?;
    let n = g.coverage.len();

    let mut reach = vec![false; n];
    let mut stack = vec![g.start];
    reach[g.start] = true;
    let mut target = 0u32;
    while let Some(u) = stack.pop() {
        target |= g.mask(u);
        for &(w, e) in &g.adjacency[u] {
            if g.edges[e].valid && !reach[w] {
                reach[w] = true;
                stack.push(w);
            }
        }
    }

    let mut labels = vec![Label {
        vertex: g.start,
        mask: g.mask(g.start),
        length: 0.0,
        parent: None,
    }];
    let mut settled: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    let mut heap = BinaryHeap::from([Reverse(Queued(0.0, 0))]);
    while let Some(Reverse(Queued(_, ix))) = heap.pop() {
        let label = labels[ix];
        if settled[label.vertex]
            .iter()
            .any(|&(m, l)| m & label.mask == label.mask && l <= label.length)
        {
            continue;
        }
        if label.mask == target {
            let mut vertices = Vec::new();
            let mut cur = Some(ix);
            while let Some(c) = cur {
                vertices.push(labels[c].vertex);
                cur = labels[c].parent;
            }
            vertices.reverse();
            return Ok(OptimalPlan {
                vertices,
                coverage: CoverageSet::from_indices(
                    g.num_pois,
                    (0..g.num_pois).filter(|i| target >> i & 1 == 1),
                ),
                length: label.length,
            });
        }
        settled[label.vertex].push((label.mask, label.length));
        for &(w, e) in &g.adjacency[label.vertex] {
            if !g.edges[e].valid {
                continue;
            }
            let next = Label {
                vertex: w,
                mask: label.mask | g.mask(w),
                length: label.length + g.edges[e].weight,
                parent: Some(ix),
            };
            if settled[w]
                .iter()
                .any(|&(m, l)| m & next.mask == next.mask && l <= next.length)
            {
                continue;
            }
            labels.push(next);
            heap.push(Reverse(Queued(next.length, labels.len() - 1)));
        }
    }
    unreachable!("the target mask is reachable by construction")
}

/// Coverage and length of a vertex walk, checked against ground-truth edges.
pub fn evaluate_plan(
    g: &ExplicitGraph,
    plan: &[VertexId],
) -> Result<(CoverageSet, f64), OracleError> {
    let first = *plan
        .first()
        .ok_or_else(|| OracleError::InvalidPlan("empty plan".into()))?;
    if first != g.start {
        return Err(OracleError::InvalidPlan(format!(
            "plan starts at {first}, not {}",
            g.start
        )));
    }
    let mut coverage = CoverageSet::new(g.num_pois);
    let mut length = 0.0;
    for (k, &v) in plan.iter().enumerate() {
        if v >= g.coverage.len() {
            return Err(OracleError::InvalidPlan(format!(
                "vertex {v} does not exist"
            )));
        }
        coverage.union_with(&g.coverage[v]);
        if k > 0 {
            let u = plan[k - 1];
            let e = g
                .find_edge(u, v)
                .ok_or_else(|| OracleError::InvalidPlan(format!("no edge {u}−{v}")))?;
            if !g.edges[e].valid {
                return Err(OracleError::InvalidPlan(format!(
                    "edge {u}−{v} is in collision"
                )));
            }
            length += g.edges[e].weight;
        }
    }
    Ok((coverage, length))
}

/// `|S(plan)| ≥ p·|S(π*)|` and `ℓ(plan) ≤ (1+ε)·ℓ(π*)`, with 1e-9 slack.
pub fn verify_near_optimal(
    g: &ExplicitGraph,
    plan: &[VertexId],
    eps: f64,
    p: f64,
) -> Result<bool, OracleError> {
    let (coverage, length) = evaluate_plan(g, plan)?;
    let opt = optimal_inspection_plan(g)?;
    Ok(
        coverage.count() as f64 + 1e-9 >= p * opt.coverage.count() as f64
            && length <= (1.0 + eps) * opt.length + 1e-9,
    )
}

/// Shape of graphs drawn by [`random_graph`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomGraphSpec {
    pub vertices: usize,
    pub pois: usize,
    /// Chance a POI is visible from a vertex.
    pub coverage_prob: f64,
    /// Chance of each non-tree edge.
    pub extra_edge_prob: f64,
    /// Chance a non-tree edge is in collision.
    pub invalid_prob: f64,
    pub min_weight: f64,
    pub max_weight: f64,
}

impl Default for RandomGraphSpec {
    fn default() -> Self {
        RandomGraphSpec {
            vertices: 8,
            pois: 6,
            coverage_prob: 0.25,
            extra_edge_prob: 0.35,
            invalid_prob: 0.0,
            min_weight: 0.1,
            max_weight: 5.0,
        }
    }
}

fn random_coverage<R: Rng + ?Sized>(spec: &RandomGraphSpec, rng: &mut R) -> CoverageSet {
    CoverageSet::from_indices(
        spec.pois,
        (0..spec.pois).filter(|_| rng.random_bool(spec.coverage_prob)),
    )
}

/// Connected graph rooted at vertex 0: a random spanning tree of valid edges
/// plus extra edges that may be in collision.
pub fn random_graph<R: Rng + ?Sized>(spec: &RandomGraphSpec, rng: &mut R) -> ExplicitGraph {
    let mut g = ExplicitGraph::new(spec.pois, 0);
    g.add_vertex(random_coverage(spec, rng));
    for _ in 1..spec.vertices {
        densify(&mut g, spec, rng);
    }
    g
}

/// Adds one vertex attached by a valid edge to a random existing vertex,
/// plus random extra edges to the others, mimicking roadmap growth.
pub fn densify<R: Rng + ?Sized>(
    g: &mut ExplicitGraph,
    spec: &RandomGraphSpec,
    rng: &mut R,
) -> VertexId {
    let n = g.num_vertices();
    let v = g.add_vertex(random_coverage(spec, rng));
    let parent = rng.random_range(0..n);
    let w = rng.random_range(spec.min_weight..=spec.max_weight);
    g.add_edge(parent, v, w, true).expect("fresh vertex");
    for u in (0..n).filter(|&u| u != parent) {
        if rng.random_bool(spec.extra_edge_prob) {
            let w = rng.random_range(spec.min_weight..=spec.max_weight);
            let valid = !rng.random_bool(spec.invalid_prob);
            g.add_edge(u, v, w, valid).expect("fresh vertex");
        }
    }
    v
}
