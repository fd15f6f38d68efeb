use iris_planner::bench::{load_scenario, Loaded};
use iris_planner::planner::{plan, PlannerConfig, Variant};
use proptest::prelude::*;
use std::path::Path;

fn tiny() -> Loaded {
    load_scenario(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/tiny.scn"))
        .unwrap()
        .1
}

fn bridge() -> Loaded {
    load_scenario(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/desk_bridge_2d.scn"))
        .unwrap()
        .1
}

fn run(
    l: &Loaded,
    variant: Variant,
    seed: u64,
    iters: u64,
    debug: bool,
) -> iris_planner::planner::PlanOutcome {
    let cfg = PlannerConfig {
        variant,
        seed,
        max_iters: Some(iters),
        debug,
        ..l.config.clone()
    };
    plan(&l.scene, &l.model, &l.start, &cfg).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn debug_runs_keep_every_invariant(seed in 0u64..1000, v in 0usize..5, n_max in 1u64..30) {
        let l = tiny();
        let cfg = PlannerConfig {
            variant: Variant::ALL[v],
            seed,
            n_max,
            max_iters: Some(120),
            debug: true,
            ..l.config.clone()
        };
        let out = plan(&l.scene, &l.model, &l.start, &cfg).unwrap();
        prop_assert!(out.violations.is_empty(), "{:?}", out.violations);
        prop_assert!(out.trace.audit().is_empty(), "{:?}", out.trace.audit());
    }
}

#[test]
fn gating_bound_is_monotone_and_plans_meet_it() {
    let l = bridge();
    for v in [Variant::IRIS, Variant::CLI] {
        let out = run(&l, v, 3, 600, false);
        let t = &out.trace;
        assert!(t.audit().is_empty());
        let mut prev = 0.0;
        for r in &t.rows {
            let bound = t.omega * r.p * r.roadmap_coverage as f64;
            assert!(bound + 1e-9 >= prev, "{v} iter {}", r.iter);
            prev = bound;
        }
    }
}

#[test]
fn baseline_ignores_omega_and_accepts_every_free_sample() {
    let l = bridge();
    for v in [Variant::IRIS, Variant::L] {
        let out = run(&l, v, 8, 400, false);
        assert_eq!(out.trace.omega, 1.0);
        assert_eq!(out.sampling.accepted, out.sampling.collision_free);
        assert!(out.sampling.collision_free > 0);
    }
    let out = run(&l, Variant::CL, 8, 400, false);
    assert_eq!(out.trace.omega, 0.9);
    assert!(out.sampling.accepted < out.sampling.collision_free);
}

#[test]
fn reuse_searches_less_than_fresh_lists() {
    let l = bridge();
    let fresh = run(&l, Variant::CL, 1, 1500, false);
    let reuse = run(&l, Variant::CLI, 1, 1500, false);
    assert_eq!(
        fresh
            .trace
            .rows
            .iter()
            .map(|r| r.num_vertices)
            .collect::<Vec<_>>(),
        reuse
            .trace
            .rows
            .iter()
            .map(|r| r.num_vertices)
            .collect::<Vec<_>>()
    );
    assert!(
        reuse.search.pops < fresh.search.pops,
        "{} vs {}",
        reuse.search.pops,
        fresh.search.pops
    );
    assert!(reuse.search.released > 0 || reuse.search.episodes > 1);
}
