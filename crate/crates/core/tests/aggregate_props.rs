mod common;

use proptest::prelude::*;

use common::{device_strategy, dykstra_projection, stacked_flexibility};
use flexsum::aggregate::{
    disaggregate, exact_linear_cost, sample_population, synth_signal, track_signal, Disaggregation, FwVariant,
    LinearOracle, Population, PopulationFile, Range, SamplerConfig, SignalConfig, TrackingConfig, DISAGGREGATION_TOL,
};
use flexsum::gpoly::{aggregate, greedy_linmax, SetFunctionPair, Subset};
use flexsum::model::simulate_temperature_clamped;
use flexsum::polytope::{contains_point, lp_solve, OptSense};

fn population_strategy(max_n: usize, max_t: usize) -> impl Strategy<Value = Population> {
    (1usize..=max_t).prop_flat_map(move |t| {
        prop::collection::vec(device_strategy(t), 1..=max_n)
            .prop_map(move |ms| Population::from_params(ms.into_iter().map(|m| m.0).collect(), t).unwrap())
    })
}

fn cost(t: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, t)
}

/// Asserts the dispatch sums to `target`, keeps every device inside its
/// flexibility set, and keeps every simulated temperature in the dead-band.
fn check_dispatch(pop: &Population, target: &[f64], d: &Disaggregation) -> Result<(), TestCaseError> {
    let profiles = d.profiles().ok_or_else(|| TestCaseError::fail(format!("infeasible: {d:?}")))?;
    prop_assert_eq!(profiles.len(), pop.len());
    for t in 0..pop.horizon {
        let s: f64 = profiles.iter().map(|p| p[t]).sum();
        prop_assert!((s - target[t]).abs() <= DISAGGREGATION_TOL * (1.0 + target[t].abs()));
    }
    for (m, p) in pop.members.iter().zip(profiles) {
        prop_assert!(contains_point(&m.device.flexibility_halfspaces(), p, 1e-6));
        let theta = simulate_temperature_clamped(&m.params, p, 1e-6).unwrap();
        let (lo, hi) = m.params.dead_band();
        for th in theta {
            prop_assert!(th >= lo - 1e-6 && th <= hi + 1e-6, "θ = {} outside [{}, {}]", th, lo, hi);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exact_cost_equals_stacked_lp((pop, c) in population_strategy(4, 4).prop_flat_map(|p| { let t = p.horizon; (Just(p), cost(t)) })) {
        let stacked = stacked_flexibility(&pop);
        let obj: Vec<f64> = (0..pop.len()).flat_map(|_| c.iter().copied()).collect();
        for sense in [OptSense::Min, OptSense::Max] {
            let want = lp_solve(&stacked, &obj, sense).unwrap().value;
            let got = exact_linear_cost(&pop, &c, sense).unwrap();
            prop_assert!((got - want).abs() <= 1e-7 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn inner_approximation_never_beats_exact((pop, c) in population_strategy(4, 6).prop_flat_map(|p| { let t = p.horizon; (Just(p), cost(t)) })) {
        let agg = aggregate(&pop.approximations()).unwrap();
        let inner = greedy_linmax(&agg, &c).value;
        let exact = exact_linear_cost(&pop, &c, OptSense::Max).unwrap();
        prop_assert!(inner <= exact + 1e-7 * (1.0 + exact.abs()));
    }

    #[test]
    fn greedy_optimizers_disaggregate((pop, c) in population_strategy(5, 6).prop_flat_map(|p| { let t = p.horizon; (Just(p), cost(t)) })) {
        let agg = aggregate(&pop.approximations()).unwrap();
        let target = greedy_linmax(&agg, &c).point;
        let d = disaggregate(&pop, &target, DISAGGREGATION_TOL).unwrap();
        check_dispatch(&pop, &target, &d)?;
    }

    #[test]
    fn tracked_points_disaggregate(pop in population_strategy(4, 5), amplitude in 0.0f64..1.5) {
        let agg = aggregate(&pop.approximations()).unwrap();
        let g = synth_signal(&agg, &SignalConfig { amplitude, ..SignalConfig::default() });
        let r = track_signal(&agg, &g, &TrackingConfig::default()).unwrap();
        let d = disaggregate(&pop, &r.aggregate, DISAGGREGATION_TOL).unwrap();
        check_dispatch(&pop, &r.aggregate, &d)?;
    }

    #[test]
    fn tracking_matches_projection_oracle(
        (pop, g) in population_strategy(3, 4).prop_flat_map(|p| { let t = p.horizon; (Just(p), prop::collection::vec(0.0f64..15.0, t)) }),
    ) {
        let agg = aggregate(&pop.approximations()).unwrap();
        let n = pop.horizon;
        let slabs: Vec<(Vec<f64>, f64, f64)> = Subset::all(n)
            .filter(|a| !a.is_empty())
            .map(|a| (a.indicator(n), agg.eval_p(a), agg.eval_b(a)))
            .collect();
        let proj = dykstra_projection(&slabs, &g, 20_000);
        let oracle = proj.iter().zip(&g).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let r = track_signal(&agg, &g, &TrackingConfig::default()).unwrap();
        prop_assert!(r.converged);
        prop_assert!((r.objective - oracle).abs() <= 1e-3 * (1.0 + oracle), "FW {} vs oracle {}", r.objective, oracle);
        prop_assert!(r.aggregate.iter().zip(&proj).all(|(p, q)| (p - q).abs() <= 1e-2 * (1.0 + q.abs())));
    }

    #[test]
    fn zero_target_matches_projection_oracle(pop in population_strategy(3, 4)) {
        let agg = aggregate(&pop.approximations()).unwrap();
        let n = pop.horizon;
        let slabs: Vec<(Vec<f64>, f64, f64)> = Subset::all(n)
            .filter(|a| !a.is_empty())
            .map(|a| (a.indicator(n), agg.eval_p(a), agg.eval_b(a)))
            .collect();
        let g = vec![0.0; n];
        let proj = dykstra_projection(&slabs, &g, 20_000);
        let oracle = proj.iter().map(|p| p * p).sum::<f64>().sqrt();
        let r = track_signal(&agg, &g, &TrackingConfig::default()).unwrap();
        prop_assert!((r.objective - oracle).abs() <= 1e-3 * (1.0 + oracle));
    }
}

#[test]
fn extreme_point_target_is_tracked_exactly() {
    let pop = sample_population(20, 8, &SamplerConfig::default(), 3).unwrap();
    let agg = aggregate(&pop.approximations()).unwrap();
    let c: Vec<f64> = (0..8).map(|t| if t % 3 == 0 { -0.7 } else { 0.4 + 0.05 * t as f64 }).collect();
    let g = LinearOracle::maximize(&agg, &c).aggregate;
    let r = track_signal(&agg, &g, &TrackingConfig::default()).unwrap();
    assert!(r.converged);
    assert!(r.objective < 1e-9, "objective {}", r.objective);
    let members: Vec<f64> = (0..8).map(|t| r.members.iter().map(|m| m[t]).sum()).collect();
    assert!(members.iter().zip(&r.aggregate).all(|(p, q)| (p - q).abs() < 1e-9));
}

#[test]
fn start_vertex_target_needs_no_iterations() {
    let pop = sample_population(20, 8, &SamplerConfig::default(), 3).unwrap();
    let agg = aggregate(&pop.approximations()).unwrap();
    // a vertex that is the greedy answer for its own direction
    let mut g = LinearOracle::maximize(&agg, &[1.0; 8]).aggregate;
    for _ in 0..20 {
        let next = LinearOracle::maximize(&agg, &g).aggregate;
        if next == g {
            break;
        }
        g = next;
    }
    assert_eq!(LinearOracle::maximize(&agg, &g).aggregate, g);
    let r = track_signal(&agg, &g, &TrackingConfig::default()).unwrap();
    assert!(r.iterations <= 2, "iterations {}", r.iterations);
    assert!(r.objective < 1e-9);
}

#[test]
fn min_norm_point_reaches_gap_tolerance_on_large_fleet() {
    let pop = sample_population(100, 12, &SamplerConfig::default(), 1).unwrap();
    let agg = aggregate(&pop.approximations()).unwrap();
    let g = synth_signal(&agg, &SignalConfig::default());
    let r = track_signal(&agg, &g, &TrackingConfig::default()).unwrap();
    assert!(r.converged);
    assert!(r.gap <= 1e-4, "gap {}", r.gap);
    let h = &r.gap_history;
    let smoothed: Vec<f64> = h.chunks(10).map(|w| w.iter().sum::<f64>() / w.len() as f64).collect();
    assert!(smoothed.windows(2).all(|w| w[1] <= w[0]), "{smoothed:?}");
}

#[test]
fn frank_wolfe_variants_agree_on_small_instance() {
    let pop = sample_population(5, 4, &SamplerConfig::default(), 2).unwrap();
    let agg = aggregate(&pop.approximations()).unwrap();
    let g = vec![3.0; 4];
    let objective = |variant| {
        let cfg = TrackingConfig { max_iter: 20_000, gap_tol: 1e-6, variant };
        track_signal(&agg, &g, &cfg).unwrap().objective
    };
    let mnp = objective(FwVariant::MinNormPoint);
    for v in [FwVariant::Vanilla, FwVariant::AwaySteps] {
        assert!((objective(v) - mnp).abs() < 1e-2 * (1.0 + mnp));
    }
}

#[test]
fn sampler_is_deterministic() {
    let cfg = SamplerConfig::default();
    let a = sample_population(30, 10, &cfg, 11).unwrap();
    let b = sample_population(30, 10, &cfg, 11).unwrap();
    assert_eq!(a, b);
    let c = sample_population(30, 10, &cfg, 12).unwrap();
    assert_ne!(a, c);
}

#[test]
fn degenerate_ranges_give_identical_devices() {
    let cfg = SamplerConfig {
        a: Range::fixed(0.9),
        b: Range::fixed(2.0),
        theta_r: Range::fixed(20.0),
        delta: Range::fixed(2.0),
        p_max: Range::fixed(6.0),
        ..SamplerConfig::default()
    };
    let pop = sample_population(6, 5, &cfg, 4).unwrap();
    for m in &pop.members {
        let p = &m.params;
        assert_eq!((p.a, p.b, p.theta_r, p.delta, p.p_max), (0.9, 2.0, 20.0, 2.0, 6.0));
    }
}

#[test]
fn invalid_sampler_ranges_are_rejected() {
    let cfg = SamplerConfig { a: Range::new(0.9, 0.8), ..SamplerConfig::default() };
    assert!(sample_population(3, 4, &cfg, 1).is_err());
    assert!(sample_population(0, 4, &SamplerConfig::default(), 1).is_err());
}

#[test]
fn population_file_round_trips() {
    let pop = sample_population(12, 6, &SamplerConfig::default(), 8).unwrap();
    let file = PopulationFile::from_population(&pop, "v0.0.0");
    let text = serde_json::to_string(&file).unwrap();
    let back: PopulationFile = serde_json::from_str(&text).unwrap();
    let restored = back.into_population().unwrap();
    assert_eq!(restored.horizon, pop.horizon);
    assert_eq!(restored.seed, pop.seed);
    for (a, b) in restored.members.iter().zip(&pop.members) {
        assert_eq!(a.params, b.params);
        assert_eq!(a.approx.y_lb, b.approx.y_lb);
        assert_eq!(a.approx.y_ub, b.approx.y_ub);
        assert_eq!(a.device, b.device);
    }
}

#[test]
fn unreachable_target_is_reported_infeasible() {
    let pop = sample_population(4, 3, &SamplerConfig::default(), 5).unwrap();
    let cap: f64 = pop.members.iter().map(|m| m.params.p_max).sum();
    let d = disaggregate(&pop, &vec![cap + 1.0; 3], DISAGGREGATION_TOL).unwrap();
    assert!(!d.is_feasible());
}
