//! The planning loop: grow the roadmap, tighten the approximation, decide
//! whether to search, and keep the best plan found so far.

use crate::cspace::{Configuration, RngStreams, RobotModel, Stream};
use crate::roadmap::{Roadmap, RoadmapError, RoadmapParams, SamplingStats};
use crate::scene::Scene;
use crate::search::{KeyOrder, Plan, Search, SearchConfig, SearchStats};
use crate::work::{ClockMode, Work, WorkCosts};
use rayon::prelude::*;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("start configuration is in collision or outside the workspace")]
    InvalidStart,
    #[error("scene has no points of interest")]
    DegenerateScene,
    #[error("planner parameter {name} = {value} is out of range")]
    BadParameter { name: &'static str, value: f64 },
    #[error("unknown variant {0:?}")]
    UnknownVariant(String),
    #[error(transparent)]
    Roadmap(RoadmapError),
}

impl From<RoadmapError> for PlannerError {
    fn from(e: RoadmapError) -> Self {
        match e {
            RoadmapError::InvalidStart => PlannerError::InvalidStart,
            other => PlannerError::Roadmap(other),
        }
    }
}

/// Current approximation factors.
///
/// `p` is stored as its gap `1 - p` so that repeated tightening stays
/// accurate as `p` approaches 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxParams {
    pub eps: f64,
    gap: f64,
    pub f: f64,
}

impl ApproxParams {
    pub fn new(p: f64, eps: f64, f: f64) -> Result<Self, PlannerError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(PlannerError::BadParameter {
                name: "p0",
                value: p,
            });
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(PlannerError::BadParameter {
                name: "eps0",
                value: eps,
            });
        }
        if !(f > 0.0 && f < 1.0) {
            return Err(PlannerError::BadParameter {
                name: "f",
                value: f,
            });
        }
        Ok(ApproxParams {
            eps,
            gap: 1.0 - p,
            f,
        })
    }

    pub fn p(&self) -> f64 {
        1.0 - self.gap
    }

    /// Distance of `p` from 1.
    pub fn gap(&self) -> f64 {
        self.gap
    }
}

/// One tightening step: `p += f(1 - p)`, `eps += f(0 - eps)`.
pub fn update_approximation(params: ApproxParams) -> ApproxParams {
    let f = params.f;
    ApproxParams {
        eps: params.eps - f * params.eps,
        gap: params.gap - f * params.gap,
        f,
    }
}

/// Search gate: replan when the current plan falls below `omega * p` of the
/// roadmap coverage, or after `n_max` vertices without a search.
pub fn need_new_search(
    prev_plan_coverage: usize,
    p: f64,
    roadmap_coverage: usize,
    omega: f64,
    samples_since_search: u64,
    n_max: u64,
) -> bool {
    (prev_plan_coverage as f64) < omega * p * roadmap_coverage as f64
        || samples_since_search >= n_max
}

/// Enhancement flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Variant {
    pub coverage_sampling: bool,
    pub refined_lazy: bool,
    pub incremental_reuse: bool,
}

impl Variant {
    pub const IRIS: Variant = Variant::flags(false, false, false);
    pub const C: Variant = Variant::flags(true, false, false);
    pub const L: Variant = Variant::flags(false, true, false);
    pub const CL: Variant = Variant::flags(true, true, false);
    pub const CLI: Variant = Variant::flags(true, true, true);

    /// The baseline and the four enhanced combinations.
    pub const ALL: [Variant; 5] = [
        Variant::IRIS,
        Variant::C,
        Variant::L,
        Variant::CL,
        Variant::CLI,
    ];

    const fn flags(coverage_sampling: bool, refined_lazy: bool, incremental_reuse: bool) -> Self {
        Variant {
            coverage_sampling,
            refined_lazy,
            incremental_reuse,
        }
    }

    /// Accepts `iris`, any ordered subset of `c`, `l`, `i` (such as `cl` or
    /// `cli`), and the aliases `cle` and `cile`.
    pub fn parse(s: &str) -> Result<Self, PlannerError> {
        let name = s.to_ascii_lowercase();
        let letters = match name.as_str() {
            "iris" => return Ok(Variant::IRIS),
            "cle" => "cl",
            "cile" => "cli",
            other => other,
        };
        let mut v = Variant::IRIS;
        let mut rest = letters;
        for (ch, flag) in [
            ('c', &mut v.coverage_sampling),
            ('l', &mut v.refined_lazy),
            ('i', &mut v.incremental_reuse),
        ] {
            if let Some(r) = rest.strip_prefix(ch) {
                *flag = true;
                rest = r;
            }
        }
        if !rest.is_empty() || letters.is_empty() {
            return Err(PlannerError::UnknownVariant(s.to_string()));
        }
        Ok(v)
    }

    pub fn name(&self) -> String {
        if *self == Variant::IRIS {
            return "iris".into();
        }
        let mut s = String::new();
        for (ch, on) in [
            ('c', self.coverage_sampling),
            ('l', self.refined_lazy),
            ('i', self.incremental_reuse),
        ] {
            if on {
                s.push(ch);
            }
        }
        s
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub p0: f64,
    pub eps0: f64,
    pub f: f64,
    pub p_accept: f64,
    pub omega: f64,
    pub n_max: u64,
    pub budget: Duration,
    /// Stop after this many iterations even if budget remains.
    pub max_iters: Option<u64>,
    /// Stop once the plan covers at least this many POIs.
    pub target_coverage: Option<usize>,
    pub seed: u64,
    pub variant: Variant,
    pub clock: ClockMode,
    pub roadmap: RoadmapParams,
    pub key: KeyOrder,
    pub costs: WorkCosts,
    /// Run the search with its internal audits enabled.
    pub debug: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            p0: 0.85,
            eps0: 10.0,
            f: 1e-4,
            p_accept: 0.05,
            omega: 0.9,
            n_max: 200,
            budget: Duration::from_secs(60),
            max_iters: None,
            target_coverage: None,
            seed: 0,
            variant: Variant::CLI,
            clock: ClockMode::Wall,
            roadmap: RoadmapParams::new(0.1, 0.01),
            key: KeyOrder::LengthFirst,
            costs: WorkCosts::default(),
            debug: false,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        ApproxParams::new(self.p0, self.eps0, self.f)?;
        if !(self.p_accept > 0.0 && self.p_accept <= 1.0) {
            return Err(PlannerError::BadParameter {
                name: "p_accept",
                value: self.p_accept,
            });
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(PlannerError::BadParameter {
                name: "omega",
                value: self.omega,
            });
        }
        if self.n_max == 0 {
            return Err(PlannerError::BadParameter {
                name: "n_max",
                value: 0.0,
            });
        }
        Ok(())
    }

    /// Gate factor actually applied: the configured `omega` with coverage
    /// sampling, 1 without.
    pub fn effective_omega(&self) -> f64 {
        if self.variant.coverage_sampling {
            self.omega
        } else {
            1.0
        }
    }

    /// Acceptance probability actually applied: accept-all without coverage sampling.
    pub fn effective_p_accept(&self) -> f64 {
        if self.variant.coverage_sampling {
            self.p_accept
        } else {
            1.0
        }
    }
}

/// One planner iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: u64,
    /// Elapsed planner time at the end of the iteration.
    pub time: Duration,
    pub num_vertices: usize,
    /// |S(V)|.
    pub roadmap_coverage: usize,
    /// Coverage count of the current plan.
    pub coverage_count: usize,
    pub plan_length: f64,
    pub build: Duration,
    /// Search time, excluding edge evaluation.
    pub search: Duration,
    pub eval: Duration,
    pub searched: bool,
    /// Whether the search returned a plan.
    pub replanned: bool,
    pub eps: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanTrace {
    pub variant: Variant,
    pub seed: u64,
    pub clock: ClockMode,
    pub num_pois: usize,
    pub omega: f64,
    pub rows: Vec<TraceRow>,
}

impl PlanTrace {
    pub fn searches(&self) -> usize {
        self.rows.iter().filter(|r| r.searched).count()
    }

    /// Checks the per-row guarantees: strictly increasing time, non-decreasing
    /// roadmap coverage, plans meeting `p * |S(V)|` when just found, and the
    /// gate bound `omega * p * |S(V)|` when the search was skipped.
    pub fn audit(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let slack = 1e-9;
        let mut prev: Option<&TraceRow> = None;
        for r in &self.rows {
            if let Some(q) = prev {
                if r.time <= q.time {
                    issues.push(format!("iter {}: time did not increase", r.iter));
                }
                if r.roadmap_coverage < q.roadmap_coverage {
                    issues.push(format!("iter {}: roadmap coverage decreased", r.iter));
                }
                if r.eps > q.eps || r.p < q.p {
                    issues.push(format!("iter {}: approximation loosened", r.iter));
                }
            }
            let bound = if r.replanned {
                r.p * r.roadmap_coverage as f64
            } else if !r.searched {
                self.omega * r.p * r.roadmap_coverage as f64
            } else {
                0.0
            };
            if (r.coverage_count as f64) < bound - slack {
                issues.push(format!(
                    "iter {}: plan covers {} below bound {bound}",
                    r.iter, r.coverage_count
                ));
            }
            prev = Some(r);
        }
        issues
    }
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub trace: PlanTrace,
    pub plan: Plan,
    pub sampling: SamplingStats,
    pub search: SearchStats,
    /// Invariant violations recorded by a debug-mode search.
    pub violations: Vec<String>,
}

struct Clock {
    mode: ClockMode,
    started: Instant,
}

impl Clock {
    fn now(&self, work: Work) -> Duration {
        match self.mode {
            ClockMode::Wall => self.started.elapsed(),
            ClockMode::Work => work.as_duration(),
        }
    }
}

fn total_work(roadmap: &Roadmap, search: &Search, costs: &WorkCosts) -> Work {
    Work(
        roadmap.build_work().0 + roadmap.eval_stats().work.0 + search.stats().ops * costs.search_op,
    )
}

/// Runs the planning loop until the budget (or `max_iters`) is exhausted.
pub fn plan(
    scene: &Scene,
    model: &RobotModel,
    start: &Configuration,
    config: &PlannerConfig,
) -> Result<PlanOutcome, PlannerError> {
    plan_with(scene, model, start, config, |_| {})
}

/// Like [`plan`], calling `on_row` as each trace row is produced.
pub fn plan_with(
    scene: &Scene,
    model: &RobotModel,
    start: &Configuration,
    config: &PlannerConfig,
    mut on_row: impl FnMut(&TraceRow),
) -> Result<PlanOutcome, PlannerError> {
    config.validate()?;
    if scene.num_pois() == 0 {
        return Err(PlannerError::DegenerateScene);
    }
    let clock = Clock {
        mode: config.clock,
        started: Instant::now(),
    };
    let mut roadmap =
        Roadmap::new(scene, model, start.clone(), config.roadmap.clone())?.with_costs(config.costs);
    let streams = RngStreams::new(config.seed);
    let mut sample_rng = streams.stream(Stream::Sampling);
    let mut coin_rng = streams.stream(Stream::Acceptance);
    let variant = config.variant;
    let omega = config.effective_omega();
    let p_accept = config.effective_p_accept();
    let mut search = Search::new(SearchConfig {
        key: config.key,
        lazy: variant.refined_lazy,
        debug: config.debug,
    });
    let mut approx = ApproxParams::new(config.p0, config.eps0, config.f)?;
    let mut current = Plan {
        vertices: vec![0],
        edges: Vec::new(),
        length: 0.0,
        coverage: roadmap.vertices()[0].coverage.clone(),
    };
    let mut trace = PlanTrace {
        variant,
        seed: config.seed,
        clock: config.clock,
        num_pois: scene.num_pois(),
        omega,
        rows: Vec::new(),
    };
    let mut since_search: u64 = 0;
    let mut ever_searched = false;
    let mut last_time = Duration::ZERO;
    let mut iter = 0;
    loop {
        if clock.now(total_work(&roadmap, &search, &config.costs)) >= config.budget
            || config.max_iters.is_some_and(|m| iter >= m)
            || config
                .target_coverage
                .is_some_and(|t| ever_searched && current.coverage.count() >= t)
        {
            break;
        }
        iter += 1;

        let build_start = (Instant::now(), roadmap.build_work());
        let inserted = roadmap.expand(scene, model, p_accept, &mut sample_rng, &mut coin_rng);
        let build = match config.clock {
            ClockMode::Wall => build_start.0.elapsed(),
            ClockMode::Work => roadmap.build_work().since(build_start.1).as_duration(),
        };
        since_search += inserted.len() as u64;

        approx = update_approximation(approx);
        let (eps, p) = (approx.eps, approx.p());
        let roadmap_coverage = roadmap.total_coverage().count();

        let searched = !ever_searched
            || need_new_search(
                current.coverage.count(),
                p,
                roadmap_coverage,
                omega,
                since_search,
                config.n_max,
            );
        let mut replanned = false;
        let (mut search_t, mut eval_t) = (Duration::ZERO, Duration::ZERO);
        if searched {
            ever_searched = true;
            since_search = 0;
            if !variant.incremental_reuse {
                search.reset();
            }
            let eval_before = roadmap.eval_stats();
            let ops_before = search.stats().ops;
            let wall = Instant::now();
            let found = {
                let mut view = roadmap.view(scene, model);
                search.run(&mut view, 0, eps, p)
            };
            let wall = wall.elapsed();
            let eval_after = roadmap.eval_stats();
            match config.clock {
                ClockMode::Wall => {
                    eval_t = eval_after.elapsed - eval_before.elapsed;
                    search_t = wall.saturating_sub(eval_t);
                }
                ClockMode::Work => {
                    eval_t = eval_after.work.since(eval_before.work).as_duration();
                    search_t = Duration::from_nanos(
                        (search.stats().ops - ops_before) * config.costs.search_op,
                    );
                }
            }
            if let Some(found) = found {
                current = found;
                replanned = true;
            }
        }

        let mut time = clock.now(total_work(&roadmap, &search, &config.costs));
        if time <= last_time {
            time = last_time + Duration::from_nanos(1);
        }
        last_time = time;
        let row = TraceRow {
            iter,
            time,
            num_vertices: roadmap.num_vertices(),
            roadmap_coverage,
            coverage_count: current.coverage.count(),
            plan_length: current.length,
            build,
            search: search_t,
            eval: eval_t,
            searched,
            replanned,
            eps,
            p,
        };
        log::debug!(
            target: "iris::planner",
            "iter {iter} |V|={} |S(V)|={roadmap_coverage} plan={}/{:.4} searched={searched}",
            row.num_vertices,
            row.coverage_count,
            row.plan_length
        );
        on_row(&row);
        trace.rows.push(row);
    }
    Ok(PlanOutcome {
        trace,
        plan: current,
        sampling: roadmap.sampling_stats(),
        search: search.stats(),
        violations: search.take_violations(),
    })
}

/// Runs every (variant, seed) cell on up to `jobs` threads. Results are in
/// variant-major order.
pub fn run_variant_matrix(
    scene: &Scene,
    model: &RobotModel,
    start: &Configuration,
    config: &PlannerConfig,
    variants: &[Variant],
    seeds: &[u64],
    jobs: usize,
) -> Result<Vec<PlanOutcome>, PlannerError> {
    let cells: Vec<(Variant, u64)> = variants
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let run = |&(variant, seed): &(Variant, u64)| {
        let cfg = PlannerConfig {
            variant,
            seed,
            ..config.clone()
        };
        plan(scene, model, start, &cfg)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| cells.par_iter().map(run).collect())
}
