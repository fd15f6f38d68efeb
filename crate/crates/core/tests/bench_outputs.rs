use iris_planner::bench::{
    emit_timing_decomposition, load_scenario, run_experiment, summarize, trace_csv, ExperimentSpec,
    Scenario, ScenarioError, SUMMARY_HEADER, TIMING_HEADER, TRACE_HEADER,
};
use iris_planner::planner::{plan, PlannerConfig, Variant};
use std::path::{Path, PathBuf};
use std::time::Duration;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/golden")
            .join(name),
    )
    .unwrap()
}

fn tiny_config(
    variant: Variant,
    seed: u64,
    iters: u64,
) -> (iris_planner::bench::Loaded, PlannerConfig) {
    let (_, loaded) = load_scenario(&data("tiny.scn")).unwrap();
    let cfg = PlannerConfig {
        variant,
        seed,
        max_iters: Some(iters),
        ..loaded.config.clone()
    };
    (loaded, cfg)
}

#[test]
fn csv_headers_match_golden_files() {
    assert_eq!(format!("{TRACE_HEADER}\n"), golden("trace_header.csv"));
    assert_eq!(format!("{TIMING_HEADER}\n"), golden("timing_header.csv"));
    assert_eq!(format!("{SUMMARY_HEADER}\n"), golden("summary_header.csv"));
}

#[test]
fn work_clock_trace_matches_golden_file() {
    let (l, cfg) = tiny_config(Variant::CLI, 5, 40);
    let out = plan(&l.scene, &l.model, &l.start, &cfg).unwrap();
    assert_eq!(trace_csv(&out.trace), golden("tiny_cli_seed5_trace.csv"));
    assert_eq!(
        emit_timing_decomposition(&out.trace),
        golden("tiny_cli_seed5_timing.csv")
    );
}

#[test]
fn shipped_scenarios_round_trip() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let (s, _) = load_scenario(&path).unwrap();
        let again = Scenario::parse(&s.to_canonical()).unwrap();
        assert_eq!(s, again, "{}", path.display());
        n += 1;
    }
    let (s, _) = load_scenario(&data("tiny.scn")).unwrap();
    assert_eq!(Scenario::parse(&s.to_canonical()).unwrap(), s);
    assert!(n >= 1);
}

#[test]
fn missing_file_reports_its_path() {
    match load_scenario(Path::new("/nonexistent/x.scn")) {
        Err(ScenarioError::Io { path, .. }) => assert_eq!(path, "/nonexistent/x.scn"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn coverage_fraction_respects_the_lower_bound() {
    for v in Variant::ALL {
        let (l, cfg) = tiny_config(v, 2, 300);
        let out = plan(&l.scene, &l.model, &l.start, &cfg).unwrap();
        let t = &out.trace;
        assert!(t.audit().is_empty(), "{v}: {:?}", t.audit());
        let csv = trace_csv(t);
        for (line, r) in csv.lines().skip(1).zip(&t.rows) {
            let frac: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
            let bound = if r.searched { r.p } else { t.omega * r.p } * r.roadmap_coverage as f64
                / t.num_pois as f64;
            assert!(
                frac + 1e-6 >= bound,
                "{v} iter {}: {frac} < {bound}",
                r.iter
            );
        }
    }
}

#[test]
fn timing_fractions_recompute_from_trace_columns() {
    let (l, cfg) = tiny_config(Variant::L, 9, 120);
    let out = plan(&l.scene, &l.model, &l.start, &cfg).unwrap();
    let trace = trace_csv(&out.trace);
    let timing = emit_timing_decomposition(&out.trace);
    let ns = |s: &str| {
        let (a, b) = s.split_once('.').unwrap();
        a.parse::<u128>().unwrap() * 1_000_000_000 + b.parse::<u128>().unwrap()
    };
    let ppm = |s: &str| {
        let (a, b) = s.split_once('.').unwrap();
        a.parse::<u128>().unwrap() * 1_000_000 + b.parse::<u128>().unwrap()
    };
    let mut prev = 0;
    for (t, d) in trace.lines().skip(1).zip(timing.lines().skip(1)) {
        let t: Vec<&str> = t.split(',').collect();
        let d: Vec<&str> = d.split(',').collect();
        let total = ns(t[1]) - prev;
        prev = ns(t[1]);
        assert_eq!(ns(d[1]), total);
        let mut sum = 0;
        for (col, frac) in [(6, 6), (7, 7), (8, 8)] {
            let raw = ns(t[col]);
            assert_eq!(ns(d[col - 4]), raw);
            let expected = raw * 1_000_000 / total;
            assert_eq!(ppm(d[frac]), expected);
            sum += expected;
        }
        assert!(sum <= 1_000_000);
        assert_eq!(sum + ppm(d[9]), 1_000_000);
    }
}

#[test]
fn experiment_writes_one_trace_per_cell_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (l, _) = tiny_config(Variant::CLI, 0, 0);
    let spec = ExperimentSpec {
        variants: vec![Variant::IRIS, Variant::CLI],
        seeds: vec![1, 2],
        budget: Duration::from_millis(1),
        jobs: 2,
        threshold_frac: 0.9,
    };
    let r = run_experiment(&l, &spec, Some(dir.path())).unwrap();
    assert_eq!(r.outcomes.len(), 4);
    assert_eq!(r.files.len(), 9);
    for v in ["iris", "cli"] {
        for s in [1, 2] {
            let text =
                std::fs::read_to_string(dir.path().join(format!("trace_{v}_seed{s}.csv"))).unwrap();
            assert!(text.starts_with(TRACE_HEADER));
        }
    }
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
    let rows = summarize(&r.outcomes, 0.9);
    for row in rows.iter().filter(|r| r.variant == Variant::IRIS) {
        assert!(row.time_to_threshold.is_some());
    }
}

#[test]
fn repeated_experiments_give_identical_files() {
    let (l, _) = tiny_config(Variant::CLI, 0, 0);
    let spec = ExperimentSpec {
        variants: Variant::ALL.to_vec(),
        seeds: vec![4],
        budget: Duration::from_millis(2),
        jobs: 3,
        threshold_frac: 0.9,
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_experiment(&l, &spec, Some(a.path())).unwrap();
    run_experiment(&l, &spec, Some(b.path())).unwrap();
    for f in &ra.files {
        let name = f.file_name().unwrap();
        assert_eq!(
            std::fs::read(f).unwrap(),
            std::fs::read(b.path().join(name)).unwrap()
        );
    }
}
