//! Incrementally densified roadmap.
//!
//! An explicit RRT is grown from the start configuration; its edges are
//! collision-checked as they are added. Every pair of vertices within the
//! connection radius is additionally joined by an unevaluated edge, giving
//! an RRG whose extra edges are validated only when the search needs them.
//!
//! The connection radius is fixed for the lifetime of the roadmap. Because of
//! that, edges between two existing vertices never appear later; only edges
//! touching newly added vertices do.

use crate::coverage::CoverageSet;
use crate::cspace::{Configuration, RobotModel};
use crate::graph::{EdgeId, EdgeRef, EdgeStatus, SearchGraph, VertexId};
use crate::scene::{Scene, SceneError};
use crate::work::{Work, WorkCosts};
use rand::Rng;
use std::collections::HashMap;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoadmapError {
    #[error("start configuration is in collision or outside the workspace")]
    InvalidStart,
    #[error("no vertex with id {0}")]
    NoSuchVertex(VertexId),
    #[error("roadmap parameter {name} = {value} is invalid")]
    BadParameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Cspace(#[from] crate::cspace::CspaceError),
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub id: VertexId,
    pub config: Configuration,
    pub coverage: CoverageSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub length: f64,
    pub status: EdgeStatus,
}

/// Growth parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadmapParams {
    pub steer_step: f64,
    pub connect_radius: f64,
    /// Collision-check spacing along edges (meters).
    pub resolution: f64,
    /// Vertices to insert per expansion call.
    pub batch: usize,
    /// Sampling attempts allowed per requested vertex.
    pub attempts_per_vertex: usize,
}

impl RoadmapParams {
    pub fn new(steer_step: f64, resolution: f64) -> Self {
        RoadmapParams {
            steer_step,
            connect_radius: 4.0 * steer_step,
            resolution,
            batch: 1,
            attempts_per_vertex: 100,
        }
    }

    fn validate(&self) -> Result<(), RoadmapError> {
        for (name, value) in [
            ("steer_step", self.steer_step),
            ("connect_radius", self.connect_radius),
            ("resolution", self.resolution),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(RoadmapError::BadParameter { name, value });
            }
        }
        if self.batch == 0 {
            return Err(RoadmapError::BadParameter {
                name: "batch",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// Coverage-informed acceptance test for a candidate vertex.
///
/// A coin with success probability `p_accept` is always drawn, so the random
/// stream advances identically whatever the candidate covers.
pub fn accept_sample<R: Rng + ?Sized>(
    candidate: &CoverageSet,
    total: &CoverageSet,
    p_accept: f64,
    rng: &mut R,
) -> bool {
    let coin: f64 = rng.random();
    coin < p_accept || total.union_count(candidate) > total.count()
}

/// Counters for the sampling funnel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SamplingStats {
    pub attempts: u64,
    /// Steered candidates that were collision-free.
    pub collision_free: u64,
    /// Candidates that passed the acceptance test.
    pub accepted: u64,
    /// Accepted candidates whose tree edge was valid and which were inserted.
    pub inserted: u64,
    /// Inserted vertices that enlarged the roadmap coverage.
    pub inserted_with_gain: u64,
}

/// Edge-evaluation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalStats {
    /// Collision checks of edges requested through [`Roadmap::ensure_edge_validated`].
    pub edge_validations: u64,
    pub elapsed: Duration,
    pub work: Work,
}

/// Uniform grid over the translational coordinates for radius and
/// nearest-vertex queries.
#[derive(Debug, Clone)]
struct SpatialGrid {
    cell: f64,
    dims: usize,
    cells: HashMap<[i64; 3], Vec<VertexId>>,
    max_ring: i64,
}

impl SpatialGrid {
    fn new(cell: f64, dims: usize, extent: f64) -> Self {
        SpatialGrid {
            cell,
            dims,
            cells: HashMap::new(),
            max_ring: (extent / cell).ceil() as i64 + 1,
        }
    }

    fn key(&self, q: &Configuration) -> [i64; 3] {
        let v = q.values();
        let mut k = [0i64; 3];
        for a in 0..self.dims {
            k[a] = (v[a] / self.cell).floor() as i64;
        }
        k
    }

    fn insert(&mut self, q: &Configuration, id: VertexId) {
        let k = self.key(q);
        self.cells.entry(k).or_default().push(id);
    }

    /// Calls `f` for every vertex in cells at Chebyshev ring distance `ring`.
    fn for_ring(&self, center: [i64; 3], ring: i64, mut f: impl FnMut(VertexId)) {
        let zr = if self.dims == 3 { ring } else { 0 };
        for dx in -ring..=ring {
            for dy in -ring..=ring {
                for dz in -zr..=zr {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                        continue;
                    }
                    let k = [center[0] + dx, center[1] + dy, center[2] + dz];
                    if let Some(ids) = self.cells.get(&k) {
                        ids.iter().copied().for_each(&mut f);
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Roadmap {
    params: RoadmapParams,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(VertexId, EdgeId)>>,
    parent: Vec<Option<(VertexId, EdgeId)>>,
    total_coverage: CoverageSet,
    grid: SpatialGrid,
    costs: WorkCosts,
    sampling: SamplingStats,
    eval: EvalStats,
    build_work: Work,
}

impl Roadmap {
    /// Roadmap holding only the start configuration (vertex 0).
    pub fn new(
        scene: &Scene,
        model: &RobotModel,
        start: Configuration,
        params: RoadmapParams,
    ) -> Result<Self, RoadmapError> {
        params.validate()?;
        model.validate(scene.workspace())?;
        model.check(&start)?;
        match model.is_collision_free(scene, &start) {
            Ok(true) => {}
            _ => return Err(RoadmapError::InvalidStart),
        }
        let ws = scene.workspace();
        let extent = (0..ws.dim())
            .map(|a| ws.upper()[a] - ws.lower()[a])
            .fold(0.0, f64::max);
        let mut grid = SpatialGrid::new(params.connect_radius, ws.dim(), extent);
        grid.insert(&start, 0);
        let coverage = scene.visible_pois(&model.sensor_pose(&start));
        Ok(Roadmap {
            params,
            total_coverage: coverage.clone(),
            vertices: vec![Vertex {
                id: 0,
                config: start,
                coverage,
            }],
            edges: Vec::new(),
            adjacency: vec![Vec::new()],
            parent: vec![None],
            grid,
            costs: WorkCosts::default(),
            sampling: SamplingStats::default(),
            eval: EvalStats::default(),
            build_work: Work::default(),
        })
    }

    pub fn with_costs(mut self, costs: WorkCosts) -> Self {
        self.costs = costs;
        self
    }

    pub fn params(&self) -> &RoadmapParams {
        &self.params
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: VertexId) -> Result<&Vertex, RoadmapError> {
        self.vertices.get(v).ok_or(RoadmapError::NoSuchVertex(v))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn rrt_parent(&self, v: VertexId) -> Option<(VertexId, EdgeId)> {
        self.parent[v]
    }

    pub fn total_coverage(&self) -> &CoverageSet {
        &self.total_coverage
    }

    pub fn sampling_stats(&self) -> SamplingStats {
        self.sampling
    }

    pub fn eval_stats(&self) -> EvalStats {
        self.eval
    }

    pub fn build_work(&self) -> Work {
        self.build_work
    }

    /// Edge between `u` and `v`, if registered.
    pub fn find_edge(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.adjacency
            .get(u)?
            .iter()
            .find(|(w, _)| *w == v)
            .map(|(_, e)| *e)
    }

    /// Incident edges of `u` that are not known to be invalid, by neighbor id.
    pub fn neighbors(&self, u: VertexId) -> Result<Vec<EdgeRef>, RoadmapError> {
        if u >= self.vertices.len() {
            return Err(RoadmapError::NoSuchVertex(u));
        }
        let mut out = Vec::new();
        self.neighbors_into(u, &mut out);
        Ok(out)
    }

    fn neighbors_into(&self, u: VertexId, out: &mut Vec<EdgeRef>) {
        out.extend(
            self.adjacency[u]
                .iter()
                .filter(|(_, e)| self.edges[*e].status != EdgeStatus::Invalid)
                .map(|&(w, e)| EdgeRef {
                    id: e,
                    from: u,
                    to: w,
                    length: self.edges[e].length,
                }),
        );
    }

    /// Resolves an edge's status, running the motion check only for `Unknown` edges.
    pub fn ensure_edge_validated(
        &mut self,
        scene: &Scene,
        model: &RobotModel,
        e: EdgeId,
    ) -> EdgeStatus {
        let edge = &self.edges[e];
        if edge.status != EdgeStatus::Unknown {
            return edge.status;
        }
        let started = Instant::now();
        let (a, b) = (&self.vertices[edge.u].config, &self.vertices[edge.v].config);
        let (ok, samples) = model
            .validate_motion_counted(scene, a, b, self.params.resolution)
            .unwrap_or((false, 0));
        let status = if ok {
            EdgeStatus::Valid
        } else {
            EdgeStatus::Invalid
        };
        self.edges[e].status = status;
        self.eval.edge_validations += 1;
        self.eval.elapsed += started.elapsed();
        self.eval.work.add(samples * self.collision_cost(scene));
        status
    }

    fn collision_cost(&self, scene: &Scene) -> u64 {
        (1 + scene.obstacles().len() as u64) * self.costs.collision_per_obstacle
    }

    fn visibility_cost(&self, scene: &Scene) -> u64 {
        let occ = if scene.sensor().occlusion_enabled {
            scene.obstacles().len() as u64 * self.costs.occlusion_per_obstacle
        } else {
            0
        };
        scene.num_pois() as u64 * (self.costs.visibility_per_poi + occ)
    }

    fn nearest(&mut self, model: &RobotModel, q: &Configuration) -> (VertexId, f64) {
        let center = self.grid.key(q);
        let mut best: Option<(f64, VertexId)> = None;
        let mut evaluated = 0u64;
        for ring in 0..=self.grid.max_ring {
            if let Some((d, _)) = best {
                if (ring - 1) as f64 * self.grid.cell > d {
                    break;
                }
            }
            let vertices = &self.vertices;
            self.grid.for_ring(center, ring, |id| {
                evaluated += 1;
                let d = model.distance_unchecked(&vertices[id].config, q);
                if best.is_none_or(|(bd, bid)| d < bd || (d == bd && id < bid)) {
                    best = Some((d, id));
                }
            });
        }
        self.build_work.add(evaluated * self.costs.metric);
        let (d, id) = best.unwrap_or_else(|| {
            // Query far outside the grid extent; fall back to a scan.
            self.vertices
                .iter()
                .map(|v| (model.distance_unchecked(&v.config, q), v.id))
                .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
        });
        (id, d)
    }

    fn within_radius(&mut self, model: &RobotModel, q: &Configuration) -> Vec<(VertexId, f64)> {
        let r = self.params.connect_radius;
        let center = self.grid.key(q);
        let rings = (r / self.grid.cell).ceil() as i64;
        let mut out = Vec::new();
        let mut evaluated = 0u64;
        for ring in 0..=rings {
            let vertices = &self.vertices;
            self.grid.for_ring(center, ring, |id| {
                evaluated += 1;
                if model.translational_distance(&vertices[id].config, q) <= r {
                    let d = model.distance_unchecked(&vertices[id].config, q);
                    if d <= r {
                        out.push((id, d));
                    }
                }
            });
        }
        self.build_work.add(evaluated * self.costs.metric);
        out.sort_by_key(|&(id, _)| id);
        out
    }

    fn insert_vertex(
        &mut self,
        model: &RobotModel,
        config: Configuration,
        coverage: CoverageSet,
        parent: VertexId,
        parent_len: f64,
    ) -> VertexId {
        let id = self.vertices.len();
        let near = self.within_radius(model, &config);
        self.adjacency.push(Vec::new());
        let mut parent_edge = None;
        let mut linked_parent = false;
        let link = |rm: &mut Roadmap, w: VertexId, len: f64, status: EdgeStatus| {
            let e = rm.edges.len();
            rm.edges.push(Edge {
                u: w,
                v: id,
                length: len,
                status,
            });
            rm.adjacency[id].push((w, e));
            rm.adjacency[w].push((id, e));
            e
        };
        for (w, d) in near {
            if w == parent {
                parent_edge = Some(link(self, w, parent_len, EdgeStatus::Valid));
                linked_parent = true;
            } else if d > 0.0 {
                link(self, w, d, EdgeStatus::Unknown);
            }
        }
        if !linked_parent {
            // Tree edge longer than the connection radius.
            parent_edge = Some(link(self, parent, parent_len, EdgeStatus::Valid));
            self.adjacency[id].sort_by_key(|&(w, _)| w);
        }
        self.build_work
            .add(self.adjacency[id].len() as u64 * self.costs.edge_insert);
        self.parent
            .push(Some((parent, parent_edge.expect("tree edge registered"))));
        self.grid.insert(&config, id);
        self.total_coverage.union_with(&coverage);
        self.vertices.push(Vertex {
            id,
            config,
            coverage,
        });
        id
    }

    /// Grows the tree by up to `params.batch` vertices.
    ///
    /// Each attempt samples a configuration, steers the nearest vertex toward
    /// it, rejects colliding candidates, applies [`accept_sample`] to the
    /// candidate's coverage, and collision-checks the tree edge before
    /// inserting. Attempts are capped at `batch × attempts_per_vertex`.
    pub fn expand<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &mut self,
        scene: &Scene,
        model: &RobotModel,
        p_accept: f64,
        sample_rng: &mut R1,
        coin_rng: &mut R2,
    ) -> Vec<VertexId> {
        let mut inserted = Vec::new();
        let max_attempts = self.params.batch * self.params.attempts_per_vertex;
        let collision_cost = self.collision_cost(scene);
        let visibility_cost = self.visibility_cost(scene);
        let mut attempts = 0;
        while inserted.len() < self.params.batch && attempts < max_attempts {
            attempts += 1;
            self.sampling.attempts += 1;
            let target = model.sample_uniform(scene.workspace(), sample_rng);
            let (near, d) = self.nearest(model, &target);
            if d == 0.0 {
                continue;
            }
            let candidate =
                match model.steer(&self.vertices[near].config, &target, self.params.steer_step) {
                    Ok(c) => c,
                    Err(_) => continue,
                };
            self.build_work.add(collision_cost);
            if !matches!(model.is_collision_free(scene, &candidate), Ok(true)) {
                continue;
            }
            self.sampling.collision_free += 1;
            self.build_work.add(visibility_cost);
            let coverage = scene.visible_pois(&model.sensor_pose(&candidate));
            if !accept_sample(&coverage, &self.total_coverage, p_accept, coin_rng) {
                continue;
            }
            self.sampling.accepted += 1;
            let parent_len = model.distance_unchecked(&self.vertices[near].config, &candidate);
            if parent_len == 0.0 {
                continue;
            }
            let (ok, samples) = model
                .validate_motion_counted(
                    scene,
                    &self.vertices[near].config,
                    &candidate,
                    self.params.resolution,
                )
                .unwrap_or((false, 0));
            self.build_work.add(samples * collision_cost);
            if !ok {
                continue;
            }
            let gain = self.total_coverage.gains_from(&coverage);
            let id = self.insert_vertex(model, candidate, coverage, near, parent_len);
            self.sampling.inserted += 1;
            self.sampling.inserted_with_gain += u64::from(gain);
            inserted.push(id);
        }
        inserted
    }

    /// Borrow as a [`SearchGraph`] that validates edges against `scene`.
    pub fn view<'a>(&'a mut self, scene: &'a Scene, model: &'a RobotModel) -> RoadmapView<'a> {
        RoadmapView {
            roadmap: self,
            scene,
            model,
            eager: false,
        }
    }
}

/// A roadmap bound to its scene and robot model for searching.
pub struct RoadmapView<'a> {
    pub roadmap: &'a mut Roadmap,
    scene: &'a Scene,
    model: &'a RobotModel,
    eager: bool,
}

impl RoadmapView<'_> {
    /// Validate every edge as soon as the search asks for neighbors.
    pub fn eager(mut self, eager: bool) -> Self {
        self.eager = eager;
        self
    }
}

impl SearchGraph for RoadmapView<'_> {
    fn num_vertices(&self) -> usize {
        self.roadmap.vertices.len()
    }

    fn num_pois(&self) -> usize {
        self.scene.num_pois()
    }

    fn vertex_coverage(&self, v: VertexId) -> &CoverageSet {
        &self.roadmap.vertices[v].coverage
    }

    fn total_coverage(&self) -> &CoverageSet {
        &self.roadmap.total_coverage
    }

    fn neighbors_into(&self, v: VertexId, out: &mut Vec<EdgeRef>) {
        self.roadmap.neighbors_into(v, out);
    }

    fn edge_from(&self, e: EdgeId, from: VertexId) -> Option<EdgeRef> {
        let edge = self.roadmap.edges.get(e)?;
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
            length: edge.length,
        })
    }

    fn edge_status(&self, e: EdgeId) -> EdgeStatus {
        self.roadmap.edges[e].status
    }

    fn validate_edge(&mut self, e: EdgeId) -> EdgeStatus {
        self.roadmap
            .ensure_edge_validated(self.scene, self.model, e)
    }
}

impl RoadmapView<'_> {
    pub fn is_eager(&self) -> bool {
        self.eager
    }
}
