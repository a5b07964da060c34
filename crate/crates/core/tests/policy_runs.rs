use olp_core::dual_lp::{solve_sampled_dual, SampledDualProblem, DEFAULT_TOL};
use olp_core::input_gen::{generate_instance, CapacityBounds, InputModel, Instance, OrderBatch};
use olp_core::metrics::{analytic_dual_price_input1, violation};
use olp_core::policies::{run_policy, GuardMode, PolicyConfig, PolicyKind, PolicyState, StepSchedule};
use rand::seq::index::sample;

fn instance(t: usize, m: usize, seed: u64) -> Instance {
    generate_instance(t, m, InputModel::InputI, seed, CapacityBounds::default()).unwrap()
}

#[test]
fn ahdl_prices_match_an_independent_resolve() {
    let inst = instance(400, 2, 21);
    let mut state = PolicyState::for_instance(&inst, PolicyConfig::new(PolicyKind::Ahdl)).unwrap();
    let mut rng = olp_core::input_gen::stream_rng(99, 0);
    let checks: Vec<usize> = sample(&mut rng, inst.horizon - 1, 10).into_iter().map(|k| k + 1).collect();
    let mut used = vec![0.0; inst.resource_count];
    for (k, order) in inst.orders.iter().enumerate() {
        let t = k + 1;
        if state.step(order).unwrap().accepted {
            for (u, a) in used.iter_mut().zip(&order.demand) {
                *u += a;
            }
        }
        if checks.contains(&t) {
            let left = (inst.horizon - t) as f64;
            let d_t: Vec<f64> = inst.capacity.iter().zip(&used).map(|(b, u)| (b - u) / left).collect();
            let batch = OrderBatch::from_orders(inst.resource_count, &inst.orders[..t]);
            let problem = SampledDualProblem::new(&d_t, batch.view()).unwrap();
            let expected = solve_sampled_dual(&problem, DEFAULT_TOL).unwrap();
            for (p, q) in state.prices.values().iter().zip(&expected.prices) {
                assert!((p - q).abs() <= 1e-9 * (1.0 + q.abs()), "t={t}: {p} vs {q}");
            }
        }
    }
}

#[test]
fn solve_counts() {
    let inst = instance(1000, 2, 4);
    let ahdl = run_policy(&inst, &PolicyConfig::new(PolicyKind::Ahdl)).unwrap();
    assert_eq!(ahdl.lp_solve_count, 999);
    for f in [1, 7, 10, 333, 1000] {
        for kind in [PolicyKind::Hybrid, PolicyKind::EnhancedHybrid] {
            let run = run_policy(&inst, &PolicyConfig::new(kind).with_frequency(f)).unwrap();
            assert_eq!(run.lp_solve_count, 1000 / f, "{kind} f={f}");
        }
    }
    let fo = run_policy(&inst, &PolicyConfig::new(PolicyKind::FirstOrder)).unwrap();
    assert_eq!(fo.lp_solve_count, 0);
}

#[test]
fn hybrid_at_full_period_is_first_order() {
    for seed in 0..5 {
        let inst = instance(500, 3, seed);
        let hybrid = run_policy(&inst, &PolicyConfig::new(PolicyKind::Hybrid).with_frequency(500)).unwrap();
        let fo =
            run_policy(&inst, &PolicyConfig::new(PolicyKind::FirstOrder).with_steps(StepSchedule::ConstantPerBatch))
                .unwrap();
        assert_eq!(hybrid.decisions, fo.decisions);
    }
}

#[test]
fn hybrid_with_unit_period_is_ahdl() {
    let inst = instance(300, 2, 8);
    let hybrid = run_policy(&inst, &PolicyConfig::new(PolicyKind::Hybrid).with_frequency(1)).unwrap();
    let ahdl = run_policy(&inst, &PolicyConfig::new(PolicyKind::Ahdl)).unwrap();
    assert_eq!(hybrid.decisions, ahdl.decisions);
}

#[test]
fn runs_are_deterministic() {
    let a = instance(800, 2, 13);
    let b = instance(800, 2, 13);
    assert_eq!(a, b);
    let cfg = PolicyConfig::new(PolicyKind::Hybrid).with_frequency(10);
    assert_eq!(run_policy(&a, &cfg).unwrap().decisions, run_policy(&b, &cfg).unwrap().decisions);
}

#[test]
fn hard_guard_never_overdraws() {
    for kind in [PolicyKind::Ahdl, PolicyKind::FirstOrder, PolicyKind::Hybrid, PolicyKind::EnhancedHybrid] {
        let inst = instance(600, 3, 17);
        let cfg = PolicyConfig::new(kind).with_frequency(9);
        let run = run_policy(&inst, &cfg).unwrap();
        assert_eq!(violation(&run, &inst), 0.0, "{kind}");
    }
}

#[test]
fn theoretical_guard_with_band_stops_accepting() {
    let inst = instance(2000, 1, 5);
    let cfg = PolicyConfig::new(PolicyKind::FirstOrder).with_guard(GuardMode::Theoretical).with_delta(0.01);
    let run = run_policy(&inst, &cfg).unwrap();
    let trip = run.guard_trip_time.expect("band this narrow is left early");
    assert!(run.decisions[trip - 1..].iter().all(|x| !x));
}

fn fixed_half(t: usize, seed: u64) -> Instance {
    generate_instance(t, 1, InputModel::InputI, seed, CapacityBounds::fixed(0.5)).unwrap()
}

/// `α_t = c / (t + 1)`. For Input I with d = 0.5 the expected dual has
/// curvature 2/15, so `c = 15` is the schedule `2 / (curvature · (t + 1))`.
fn scaled_harmonic(c: f64, horizon: usize) -> StepSchedule {
    StepSchedule::Custom((1..=horizon).map(|t| c / (t as f64 + 1.0)).collect())
}

fn mean_final_price(steps: StepSchedule, horizon: usize) -> f64 {
    let cfg = PolicyConfig::new(PolicyKind::FirstOrder).with_steps(steps);
    (0..20).map(|seed| run_policy(&fixed_half(horizon, seed), &cfg).unwrap().final_prices.values()[0]).sum::<f64>()
        / 20.0
}

/// Mean squared distance to `p*` after 10³ and 10⁴ steps.
fn squared_errors(steps: StepSchedule, trials: u64) -> (f64, f64) {
    let p_star = analytic_dual_price_input1(0.5).unwrap();
    let cfg = PolicyConfig::new(PolicyKind::FirstOrder).with_steps(steps);
    let (mut early, mut late) = (0.0, 0.0);
    for seed in 0..trials {
        let inst = fixed_half(10_000, 1000 + seed);
        let mut state = PolicyState::for_instance(&inst, cfg.clone()).unwrap();
        for (k, order) in inst.orders.iter().enumerate() {
            state.step(order).unwrap();
            let err = (state.prices.values()[0] - p_star).powi(2);
            match k + 1 {
                1_000 => early += err,
                10_000 => late += err,
                _ => {}
            }
        }
    }
    (early / trials as f64, late / trials as f64)
}

#[test]
fn first_order_with_curvature_scaled_steps_reaches_the_analytic_price() {
    let p_star = analytic_dual_price_input1(0.5).unwrap();
    let mean = mean_final_price(scaled_harmonic(15.0, 10_000), 10_000);
    assert!((mean - p_star).abs() <= 1.0, "mean final price {mean}");
    let (early, late) = squared_errors(scaled_harmonic(15.0, 10_000), 60);
    assert!(late <= 0.5 * early, "late {late} early {early}");
}

#[test]
fn first_order_with_unit_harmonic_steps_follows_the_mean_ode() {
    // With α_t = 1/(t+1) the mean price follows dp/ds = 0.5 − 2p/15 in
    // s = Σ α_t, so p ≈ 3.75 (1 − exp(−2s/15)) stays well short of p*.
    let s: f64 = (1..=10_000).map(|t| 1.0 / (t as f64 + 1.0)).sum();
    let predicted = 3.75 * (1.0 - (-2.0 * s / 15.0).exp());
    let mean = mean_final_price(StepSchedule::Harmonic, 10_000);
    assert!((mean - predicted).abs() <= 0.4, "mean {mean} predicted {predicted}");
    let (early, late) = squared_errors(StepSchedule::Harmonic, 60);
    assert!(late < early, "late {late} early {early}");
}
