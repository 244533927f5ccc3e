use kanlab::experiments::{
    ari_sequence_build, basin_budget_stability, birkhoff_density_scan, candidate_pool, classify_grid,
    default_intervals, horseshoe_counterexample_demo, intermingled_basins_scan, pliss_reindex, transitivity_probe,
    AriSetup, CounterexampleSetup, ExperimentError, GridSpec,
};
use kanlab::fiber::{ClosedInterval, Mobius};
use kanlab::skew::{birkhoff_sum, perturb_flow, Boundary, SkewProduct};
use kanlab::torus::{ExactPoint, PeriodicOrbit};
use proptest::prelude::*;

fn kan() -> SkewProduct {
    SkewProduct::kan_cat(0.3).unwrap()
}

fn orbit(f: &SkewProduct, p: &[(i64, i64)]) -> PeriodicOrbit {
    PeriodicOrbit::through(f.base(), &ExactPoint::from_fractions(p), 64).unwrap()
}

fn small_grid(iterations: u64, seed: u64) -> GridSpec {
    GridSpec { base_cells: 4, fiber_cells: 2, samples_per_cell: 8, iterations, seed, ..Default::default() }
}

fn in_pool(threads: usize, job: impl FnOnce() -> kanlab::experiments::BasinReport + Send) -> kanlab::experiments::BasinReport {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(job)
}

#[test]
fn basin_counts_do_not_depend_on_the_worker_count() {
    let f = kan();
    let grid = small_grid(20_000, 5);
    let one = in_pool(1, || intermingled_basins_scan(&f, &grid).unwrap());
    let four = in_pool(4, || intermingled_basins_scan(&f, &grid).unwrap());
    assert_eq!(one, four);
    for c in &one.cells {
        assert_eq!(c.total() as usize, grid.samples_per_cell);
    }
    for x in [one.bottom_fraction, one.top_fraction, one.union_fraction] {
        assert!((0.0..=1.0).contains(&x));
    }
}

#[test]
fn basin_fractions_survive_budget_doubling() {
    let f = kan();
    let a = intermingled_basins_scan(&f, &small_grid(20_000, 1)).unwrap();
    let b = intermingled_basins_scan(&f, &small_grid(40_000, 1)).unwrap();
    let s = basin_budget_stability(&a, &b);
    assert!(s.stable, "{s:?}");
}

#[test]
fn product_system_leaves_everything_unresolved() {
    let f = SkewProduct::kan_cat(0.0).unwrap();
    // layers of height 1/20 match the threshold 0.05, so only the two
    // outer layers can classify
    let grid = GridSpec { fiber_cells: 20, ..small_grid(2_000, 0) };
    let r = classify_grid(&f, &grid).unwrap();
    for (_, layer, c) in r.rows(2) {
        if layer != 0 && layer != 19 {
            assert_eq!(c.unresolved, c.total(), "layer {layer}");
        }
    }
    assert!(matches!(
        intermingled_basins_scan(&f, &small_grid(2_000, 0)),
        Err(ExperimentError::NotMostlyContracting { .. }) | Err(ExperimentError::Skew(_))
    ));
}

#[test]
fn strong_flow_sends_everything_to_the_bottom() {
    let (g, _) = perturb_flow(&kan(), 0.5, &[]).unwrap();
    let r = classify_grid(&g, &small_grid(20_000, 2)).unwrap();
    assert_eq!(r.bottom_fraction, 1.0);
    assert!(matches!(
        intermingled_basins_scan(&g, &small_grid(20_000, 2)),
        Err(ExperimentError::NotMostlyContracting { boundary: Boundary::Top, .. })
    ));
}

#[test]
fn invalid_grids_are_rejected() {
    let f = kan();
    let bad = GridSpec { threshold: 0.7, ..small_grid(10, 0) };
    assert!(matches!(classify_grid(&f, &bad), Err(ExperimentError::InvalidGrid { field: "threshold", .. })));
    let bad = GridSpec { base_cells: 0, ..small_grid(10, 0) };
    assert!(matches!(transitivity_probe(&f, &bad), Err(ExperimentError::InvalidGrid { field: "base_cells", .. })));
}

#[test]
fn product_orbit_stays_in_its_layer() {
    let f = SkewProduct::kan_cat(0.0).unwrap();
    let grid = GridSpec { base_cells: 8, fiber_cells: 8, iterations: 200_000, ..Default::default() };
    let r = transitivity_probe(&f, &grid).unwrap();
    assert!(r.visited_fraction < 0.2);
    assert_eq!(r.layer_fractions.iter().filter(|&&x| x > 0.0).count(), 1);
}

#[test]
fn density_needs_both_signs() {
    let f = kan();
    let r = birkhoff_density_scan(&f, Boundary::Bottom, 8, 1 << 20, 1.0, 0.1, 20).unwrap();
    assert!(r.negative > 0 && r.positive > 0);
    let flat = SkewProduct::kan_cat(0.0).unwrap();
    assert!(matches!(
        birkhoff_density_scan(&flat, Boundary::Bottom, 4, 1 << 20, 1.0, 0.1, 20),
        Err(ExperimentError::HypothesisUnmet { .. })
    ));
}

#[test]
fn pliss_rotation_of_the_contracting_orbit() {
    let f = kan();
    let p = orbit(&f, &[(2, 5), (4, 5)]);
    let lc = birkhoff_sum(&f, &p, Boundary::Bottom).exponent;
    let r = pliss_reindex(&f, &p, Boundary::Bottom, lc / 3.0).unwrap();
    assert!(r.shift < 2);
    assert!(r.partial_averages.iter().all(|&a| a <= lc / 3.0));
    assert!(r.contracting_center >= r.center_bound);
    assert!(matches!(
        pliss_reindex(&f, &orbit(&f, &[(0, 1), (0, 1)]), Boundary::Bottom, -0.01),
        Err(ExperimentError::NoPlissTime { .. })
    ));
}

#[test]
fn ari_levels_are_verified_and_sandwiched() {
    let f = kan();
    let setup = AriSetup { m_max: 3, ..Default::default() };
    let pool = candidate_pool(&f, &setup).unwrap();
    let p0 = orbit(&f, &[(2, 5), (4, 5)]);
    let q0 = orbit(&f, &[(0, 1), (0, 1)]);
    let r = ari_sequence_build(&f, &p0, &q0, &pool, &setup).unwrap();
    assert_eq!(r.steps.len(), 3);
    for s in &r.steps {
        assert!(s.verified.iter().all(|&v| v), "m = {}", s.m);
        let chosen = PeriodicOrbit::through(f.base(), &s.chosen_base, 1 << 20).unwrap();
        assert!(chosen.verify(f.base()));
        assert!((birkhoff_sum(&f, &chosen, Boundary::Bottom).sum - s.chosen_sum).abs() < 1e-9);
        let lower = 0.5f64.powi(s.m as i32 + 1);
        let upper = 0.5f64.powi(s.m as i32 - 2);
        assert!(s.sandwich_holds && lower < s.sandwich && s.sandwich < upper, "{s:?}");
    }
    assert!(r.independence_decreasing);
}

#[test]
fn horseshoe_demo_keeps_u_away_from_v() {
    let phi = Mobius { alpha: 0.5 };
    let (u, v) = default_intervals(&phi);
    let setup = CounterexampleSetup { iterations: 2_000, orbits: 8, ..Default::default() };
    let r = horseshoe_counterexample_demo(&phi, u, v, &setup).unwrap();
    assert!(r.sign_pattern_holds && r.separated());
    assert_eq!(r.entries_into_v, 0);
    let w = ClosedInterval::new(0.2, 0.3).unwrap();
    assert!(matches!(
        horseshoe_counterexample_demo(&phi, w, w, &setup),
        Err(ExperimentError::IntervalsNotSeparated { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn coverage_grows_with_the_budget(seed in 0u64..1000, iterations in 1_000u64..50_000) {
        let f = kan();
        let grid = GridSpec { base_cells: 8, fiber_cells: 4, iterations, seed, ..Default::default() };
        let short = transitivity_probe(&f, &grid).unwrap();
        let long = transitivity_probe(&f, &GridSpec { iterations: 2 * iterations, ..grid }).unwrap();
        prop_assert!(long.visited >= short.visited);
        prop_assert!((0.0..=1.0).contains(&short.visited_fraction));
        prop_assert_eq!(short.seed, seed);
    }
}
