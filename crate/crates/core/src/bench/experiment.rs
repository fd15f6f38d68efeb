//! Experiment orchestration and CSV output.

use super::scenario::Loaded;
use crate::planner::{run_variant_matrix, PlanOutcome, PlanTrace, PlannerError, Variant};
use crate::work::format_seconds;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;
use thiserror::Error;

pub const TRACE_HEADER: &str =
    "iter,wall_s,num_vertices,coverage_count,coverage_frac,plan_length,build_s,search_s,eval_s";

pub const TIMING_HEADER: &str =
    "iter,total_s,build_s,search_s,eval_s,residual_s,build_frac,search_frac,eval_frac,residual_frac";

pub const SUMMARY_HEADER: &str =
    "variant,seed,num_pois,final_coverage,final_length,iterations,searches,\
threshold,time_to_threshold_s,search_to_threshold_s,total_build_s,total_search_s,total_eval_s";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One row per iteration, with the header line first.
pub fn trace_csv(trace: &PlanTrace) -> String {
    let mut s = String::with_capacity(64 * (trace.rows.len() + 1));
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in &trace.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.6},{:.6},{},{},{}",
            r.iter,
            format_seconds(r.time),
            r.num_vertices,
            r.coverage_count,
            r.coverage_count as f64 / trace.num_pois as f64,
            r.plan_length,
            format_seconds(r.build),
            format_seconds(r.search),
            format_seconds(r.eval)
        );
    }
    s
}

/// Per-iteration share of build, search and edge evaluation, plus residual overhead.
///
/// Shares are in millionths, rounded down, so the three phases never sum to
/// more than one; the residual takes the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimingRow {
    pub iter: u64,
    pub total: Duration,
    pub build: Duration,
    pub search: Duration,
    pub eval: Duration,
    pub residual: Duration,
    pub build_ppm: u64,
    pub search_ppm: u64,
    pub eval_ppm: u64,
    pub residual_ppm: u64,
}

/// `part / total` in millionths, rounded down; zero when `total` is zero.
pub fn share_ppm(part: Duration, total: Duration) -> u64 {
    (part.as_nanos() * 1_000_000).checked_div(total.as_nanos()).unwrap_or(0) as u64
}

pub fn timing_decomposition(trace: &PlanTrace) -> Vec<TimingRow> {
    let mut prev = Duration::ZERO;
    trace
        .rows
        .iter()
        .map(|r| {
            let total = r.time - prev;
            prev = r.time;
            let used = r.build + r.search + r.eval;
            let (build_ppm, search_ppm, eval_ppm) = (
                share_ppm(r.build, total),
                share_ppm(r.search, total),
                share_ppm(r.eval, total),
            );
            let phases = build_ppm + search_ppm + eval_ppm;
            TimingRow {
                iter: r.iter,
                total,
                build: r.build,
                search: r.search,
                eval: r.eval,
                residual: total.saturating_sub(used),
                build_ppm,
                search_ppm,
                eval_ppm,
                residual_ppm: if total.is_zero() {
                    0
                } else {
                    1_000_000u64.saturating_sub(phases)
                },
            }
        })
        .collect()
}

fn ppm(x: u64) -> String {
    format!("{}.{:06}", x / 1_000_000, x % 1_000_000)
}

pub fn emit_timing_decomposition(trace: &PlanTrace) -> String {
    let mut s = String::from(TIMING_HEADER);
    s.push('\n');
    for t in timing_decomposition(trace) {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            t.iter,
            format_seconds(t.total),
            format_seconds(t.build),
            format_seconds(t.search),
            format_seconds(t.eval),
            format_seconds(t.residual),
            ppm(t.build_ppm),
            ppm(t.search_ppm),
            ppm(t.eval_ppm),
            ppm(t.residual_ppm)
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub variant: Variant,
    pub seed: u64,
    pub num_pois: usize,
    pub final_coverage: usize,
    pub final_length: f64,
    pub iterations: usize,
    pub searches: usize,
    pub threshold: usize,
    /// Planner time at the first iteration whose plan reaches `threshold`.
    pub time_to_threshold: Option<Duration>,
    /// Search time accumulated up to and including that iteration.
    pub search_to_threshold: Option<Duration>,
    pub total_build: Duration,
    pub total_search: Duration,
    pub total_eval: Duration,
}

/// First iteration reaching `threshold`, as (planner time, cumulative search time).
pub fn time_to_threshold(trace: &PlanTrace, threshold: usize) -> Option<(Duration, Duration)> {
    let mut search = Duration::ZERO;
    for r in &trace.rows {
        search += r.search;
        if r.coverage_count >= threshold {
            return Some((r.time, search));
        }
    }
    None
}

/// Summarizes every outcome against a per-seed coverage threshold of
/// `ceil(frac * reference)`, where the reference is the final coverage of the
/// baseline variant for that seed, or the best final coverage among the seed's
/// cells when the baseline was not run.
pub fn summarize(outcomes: &[PlanOutcome], frac: f64) -> Vec<SummaryRow> {
    let reference = |seed: u64| {
        let same_seed = || outcomes.iter().filter(move |o| o.trace.seed == seed);
        same_seed()
            .find(|o| o.trace.variant == Variant::IRIS)
            .map(|o| o.plan.coverage.count())
            .unwrap_or_else(|| {
                same_seed()
                    .map(|o| o.plan.coverage.count())
                    .max()
                    .unwrap_or(0)
            })
    };
    outcomes
        .iter()
        .map(|o| {
            let t = &o.trace;
            let threshold = (frac * reference(t.seed) as f64 - 1e-9).ceil().max(0.0) as usize;
            let hit = time_to_threshold(t, threshold);
            SummaryRow {
                variant: t.variant,
                seed: t.seed,
                num_pois: t.num_pois,
                final_coverage: o.plan.coverage.count(),
                final_length: o.plan.length,
                iterations: t.rows.len(),
                searches: t.searches(),
                threshold,
                time_to_threshold: hit.map(|h| h.0),
                search_to_threshold: hit.map(|h| h.1),
                total_build: t.rows.iter().map(|r| r.build).sum(),
                total_search: t.rows.iter().map(|r| r.search).sum(),
                total_eval: t.rows.iter().map(|r| r.eval).sum(),
            }
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let opt = |d: Option<Duration>| d.map(format_seconds).unwrap_or_default();
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.6},{},{},{},{},{},{},{},{}",
            r.variant,
            r.seed,
            r.num_pois,
            r.final_coverage,
            r.final_length,
            r.iterations,
            r.searches,
            r.threshold,
            opt(r.time_to_threshold),
            opt(r.search_to_threshold),
            format_seconds(r.total_build),
            format_seconds(r.total_search),
            format_seconds(r.total_eval)
        );
    }
    s
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub budget: Duration,
    pub jobs: usize,
    /// Coverage threshold as a fraction of the reference coverage.
    pub threshold_frac: f64,
}

#[derive(Debug)]
pub struct ExperimentResult {
    pub outcomes: Vec<PlanOutcome>,
    pub summary: Vec<SummaryRow>,
    /// Files written, in creation order.
    pub files: Vec<PathBuf>,
}

pub fn trace_file_name(variant: Variant, seed: u64) -> String {
    format!("trace_{variant}_seed{seed}.csv")
}

pub fn timing_file_name(variant: Variant, seed: u64) -> String {
    format!("timing_{variant}_seed{seed}.csv")
}

fn write(path: PathBuf, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), ExperimentError> {
    std::fs::write(&path, contents).map_err(|source| ExperimentError::Io {
        path: path.clone(),
        source,
    })?;
    files.push(path);
    Ok(())
}

/// Runs every (variant, seed) cell and, when `out` is given, writes one trace
/// CSV and one timing CSV per cell plus `summary.csv`.
pub fn run_experiment(
    loaded: &Loaded,
    spec: &ExperimentSpec,
    out: Option<&Path>,
) -> Result<ExperimentResult, ExperimentError> {
    let config = crate::planner::PlannerConfig {
        budget: spec.budget,
        ..loaded.config.clone()
    };
    let outcomes = run_variant_matrix(
        &loaded.scene,
        &loaded.model,
        &loaded.start,
        &config,
        &spec.variants,
        &spec.seeds,
        spec.jobs,
    )?;
    let summary = summarize(&outcomes, spec.threshold_frac);
    let mut files = Vec::new();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for o in &outcomes {
            let (v, s) = (o.trace.variant, o.trace.seed);
            write(
                dir.join(trace_file_name(v, s)),
                &trace_csv(&o.trace),
                &mut files,
            )?;
            write(
                dir.join(timing_file_name(v, s)),
                &emit_timing_decomposition(&o.trace),
                &mut files,
            )?;
        }
        write(dir.join("summary.csv"), &summary_csv(&summary), &mut files)?;
    }
    Ok(ExperimentResult {
        outcomes,
        summary,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::TraceRow;
    use crate::work::ClockMode;

    fn row(
        iter: u64,
        time_ns: u64,
        cov: usize,
        b: u64,
        s: u64,
        e: u64,
        searched: bool,
    ) -> TraceRow {
        TraceRow {
            iter,
            time: Duration::from_nanos(time_ns),
            num_vertices: iter as usize + 1,
            roadmap_coverage: cov,
            coverage_count: cov,
            plan_length: 1.5,
            build: Duration::from_nanos(b),
            search: Duration::from_nanos(s),
            eval: Duration::from_nanos(e),
            searched,
            replanned: searched,
            eps: 1.0,
            p: 0.9,
        }
    }

    fn trace(rows: Vec<TraceRow>) -> PlanTrace {
        PlanTrace {
            variant: Variant::CLI,
            seed: 3,
            clock: ClockMode::Work,
            num_pois: 4,
            omega: 0.9,
            rows,
        }
    }

    #[test]
    fn trace_csv_layout() {
        let t = trace(vec![row(1, 1_000_000_500, 3, 10, 20, 30, true)]);
        assert_eq!(
            trace_csv(&t),
            format!("{TRACE_HEADER}\n1,1.000000500,2,3,0.750000,1.500000,0.000000010,0.000000020,0.000000030\n")
        );
    }

    #[test]
    fn single_row_decomposition_sums_to_at_most_one() {
        let t = trace(vec![row(1, 300, 1, 100, 100, 99, true)]);
        let d = timing_decomposition(&t);
        assert_eq!(d.len(), 1);
        let r = d[0];
        assert!(r.build_ppm + r.search_ppm + r.eval_ppm <= 1_000_000);
        assert_eq!(
            r.build_ppm + r.search_ppm + r.eval_ppm + r.residual_ppm,
            1_000_000
        );
        assert_eq!(r.residual, Duration::from_nanos(1));
    }

    #[test]
    fn unsearched_trace_reports_zero_search() {
        let t = trace(
            (1..=5)
                .map(|i| row(i, i * 100, 1, 50, 0, 0, false))
                .collect(),
        );
        let csv = emit_timing_decomposition(&t);
        for line in csv.lines().skip(1) {
            assert_eq!(line.split(',').nth(3), Some("0.000000000"));
        }
    }

    #[test]
    fn threshold_uses_cumulative_search() {
        let t = trace(vec![
            row(1, 100, 1, 10, 5, 0, true),
            row(2, 200, 2, 10, 7, 0, true),
            row(3, 300, 4, 10, 9, 0, true),
        ]);
        assert_eq!(
            time_to_threshold(&t, 2),
            Some((Duration::from_nanos(200), Duration::from_nanos(12)))
        );
        assert_eq!(time_to_threshold(&t, 5), None);
    }
}
