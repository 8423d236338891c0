use proptest::prelude::*;

use proxsgd::data::{gen_synthetic, solve_reference, SyntheticSpec};
use proxsgd::estimators::{AssumptionConstants, GradientEstimator, LSvrg, MConvention, Saga, Sega};
use proxsgd::problem::Loss;
use proxsgd::sampling::{expected_residual_b_nice, expected_smoothness_b_nice};
use proxsgd::theory::*;

fn argmin(n: usize, k: impl Fn(usize) -> f64) -> usize {
    (1..=n).min_by(|&a, &b| k(a).total_cmp(&k(b)).then(a.cmp(&b))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn optimal_b_matches_grid_search(n in 2usize..400, l in 0.01..10.0f64, t in 0.0..1.0f64) {
        let l_max = l * (1.0 + t * (n as f64 - 1.0));
        let bs = optimal_b_saga(l, l_max, n).unwrap();
        let gs = argmin(n, |b| k_saga(b, l, l_max, n, 1.0, 1.0).unwrap());
        prop_assert!(bs.abs_diff(gs) <= 1, "saga b*={} grid={}", bs, gs);
        let bv = optimal_b_svrg(l, l_max, n).unwrap();
        let gv = argmin(n, |b| k_svrg(b, l, l_max, n, 1.0, 1.0).unwrap());
        prop_assert!(bv.abs_diff(gv) <= 1, "svrg b*={} grid={}", bv, gv);
    }

    #[test]
    fn saga_complexity_is_batch_times_iterations(n in 2usize..300, l in 0.01..10.0f64, t in 0.0..1.0f64, bf in 0.0..1.0f64) {
        let l_max = l * (1.0 + t * (n as f64 - 1.0));
        let b = 1 + ((n - 1) as f64 * bf) as usize;
        let cal = expected_smoothness_b_nice(n, b, l_max, l);
        let zeta = expected_residual_b_nice(n, b, l_max);
        let rho = b as f64 / n as f64;
        let c = AssumptionConstants { a: 2.0 * cal, b: 2.0, rho, c: rho * zeta, d1: 0.0, d2: 0.0, g: Some(zeta * l) };
        let iters = vr_iteration_complexity(&c, 1.0, 1.0).unwrap();
        let k = k_saga(b, l, l_max, n, 1.0, 1.0).unwrap();
        prop_assert!((b as f64 * iters - k).abs() <= 1e-9 * k);
    }

    #[test]
    fn svrg_complexity_is_cost_times_iterations(n in 2usize..300, l in 0.01..10.0f64, t in 0.0..1.0f64, bf in 0.0..1.0f64) {
        let l_max = l * (1.0 + t * (n as f64 - 1.0));
        let b = 1 + ((n - 1) as f64 * bf) as usize;
        let cal = expected_smoothness_b_nice(n, b, l_max, l);
        let p = 1.0 / n as f64;
        let c = AssumptionConstants { a: 2.0 * cal, b: 2.0, rho: p, c: p * cal, d1: 0.0, d2: 0.0, g: Some(cal * l) };
        let iters = vr_iteration_complexity(&c, 1.0, 1.0).unwrap();
        let k = k_svrg(b, l, l_max, n, 1.0, 1.0).unwrap();
        prop_assert!(((1.0 + 2.0 * b as f64) * iters - k).abs() <= 1e-9 * k);
        // 12𝓛(b) + nL/6 per gradient unit.
        prop_assert!((iters - (12.0 * cal + n as f64 * l / 6.0)).abs() <= 1e-9 * iters);
    }

    #[test]
    fn default_steps_match_closed_forms(n in 2usize..300, l in 0.01..10.0f64, t in 0.0..1.0f64, bf in 0.0..1.0f64) {
        let l_max = l * (1.0 + t * (n as f64 - 1.0));
        let b = 1 + ((n - 1) as f64 * bf) as usize;
        let cal = expected_smoothness_b_nice(n, b, l_max, l);
        let zeta = expected_residual_b_nice(n, b, l_max);
        let rho = b as f64 / n as f64;
        let saga = AssumptionConstants { a: 2.0 * cal, b: 2.0, rho, c: rho * zeta, d1: 0.0, d2: 0.0, g: None };
        let g = default_constant_step(&saga, l, MConvention::Smooth).unwrap();
        prop_assert!((g - saga_step(n, b, l_max, l)).abs() <= 1e-12 * g);
        let p = 1.0 / n as f64;
        let svrg = AssumptionConstants { a: 2.0 * cal, b: 2.0, rho: p, c: p * cal, d1: 0.0, d2: 0.0, g: None };
        let g = default_constant_step(&svrg, l, MConvention::Smooth).unwrap();
        prop_assert!((g - svrg_step(n, b, l_max, l)).abs() <= 1e-12 * g);
    }

    #[test]
    fn sega_step_matches_default(d in 1usize..100, bf in 0.0..1.0f64, l in 0.01..10.0f64) {
        let b = 1 + ((d - 1) as f64 * bf) as usize;
        let r = b as f64 / d as f64;
        let c = AssumptionConstants { a: 2.0 * l / r, b: 2.0 * (1.0 / r - 1.0), rho: r, c: r * l, d1: 0.0, d2: 0.0, g: Some(0.0) };
        let g = default_constant_step(&c, l, MConvention::Smooth).unwrap();
        prop_assert!((g - sega_step(d, b, l)).abs() <= 1e-12 * g);
    }
}

#[test]
fn svrg_worked_values() {
    // b = n: 𝓛 = L, so K = (1 + 2n)(12L + nL/6).
    let (n, l) = (10, 0.5);
    let k = k_svrg(n, l, 2.0, n, 1.0, 1.0).unwrap();
    let expected = (1.0 + 2.0 * n as f64) * (12.0 * l + n as f64 * l / 6.0);
    assert!((k - expected).abs() < 1e-12 * expected);
    // L_max = L: every component has the same curvature, so b* = 1.
    assert_eq!(optimal_b_svrg(1.0, 1.0, 50).unwrap(), 1);
}

#[test]
fn saga_large_l_max_picks_full_batch() {
    // 2nL/3 ≤ L_max.
    let (n, l) = (30, 0.1);
    assert_eq!(optimal_b_saga(l, 2.0 * n as f64 * l / 3.0, n).unwrap(), n);
    assert_eq!(optimal_b_saga(l, 0.9 * n as f64 * l, n).unwrap(), n);
}

#[test]
fn hand_evaluated_bound() {
    // ‖x0-x*‖² = 1, δ0 = 0.1, γ = 0.25 twice, A = D1 = 1, B = D2 = 0:
    // (1 + 2·0.25·0.1 + 2·1·0.125) / (2·2·0.5·0.25) = 1.3 / 0.5 = 2.6.
    let c = AssumptionConstants { a: 1.0, b: 0.0, rho: 1.0, c: 0.0, d1: 1.0, d2: 0.0, g: None };
    let inputs = BoundInputs { dist0_sq: 1.0, delta0: 0.1, sigma0_sq: 0.0, constants: c, l: 0.1, regularized: false };
    let v = theorem1_bound(&inputs, &[0.25, 0.25]).unwrap();
    assert!((v - 2.6).abs() < 1e-12);
}

#[test]
fn estimator_constants_reproduce_complexities() {
    let p = gen_synthetic(&SyntheticSpec::new(Loss::Logistic, 40, 5, Some(8.0), 3)).unwrap();
    let r = solve_reference(&p, 1e-10).unwrap();
    let (n, l, l_max) = (p.n(), p.objective.l(), p.objective.l_max());
    let x0 = vec![0.0; p.d()];
    for b in [1, 3, 40] {
        let mut saga = Saga::new(b);
        saga.initialize(&p, &x0).unwrap();
        let c = saga.constants(&p, Some(&r)).unwrap();
        let k = b as f64 * vr_iteration_complexity(&c, 1.0, 1.0).unwrap();
        assert!((k - k_saga(b, l, l_max, n, 1.0, 1.0).unwrap()).abs() < 1e-9 * k);
        assert!((default_constant_step(&c, l, MConvention::Smooth).unwrap() - saga_step(n, b, l_max, l)).abs() < 1e-12);

        let mut svrg = LSvrg::new(b);
        svrg.initialize(&p, &x0).unwrap();
        let c = svrg.constants(&p, Some(&r)).unwrap();
        let k = (1.0 + 2.0 * b as f64) * vr_iteration_complexity(&c, 1.0, 1.0).unwrap();
        assert!((k - k_svrg(b, l, l_max, n, 1.0, 1.0).unwrap()).abs() < 1e-9 * k);
    }
    let mut sega = Sega::new(2);
    sega.initialize(&p, &x0).unwrap();
    let c = sega.constants(&p, Some(&r)).unwrap();
    let step = default_constant_step(&c, l, MConvention::Smooth).unwrap();
    assert!((step - sega_step(p.d(), 2, l)).abs() < 1e-12 * step);
}

#[test]
fn constant_step_bound_tends_to_neighborhood() {
    let c = AssumptionConstants { a: 2.0, b: 0.0, rho: 1.0, c: 0.0, d1: 0.5, d2: 0.0, g: None };
    let inputs = BoundInputs { dist0_sq: 4.0, delta0: 1.0, sigma0_sq: 0.0, constants: c, l: 1.0, regularized: false };
    let gamma = 0.1;
    let far = constant_step_bound(&inputs, gamma, 10_000_000).unwrap();
    assert!((far - neighborhood_radius(&c, gamma)).abs() < 1e-5);
    assert!((neighborhood_radius(&c, gamma) - 2.0 * gamma * 0.5).abs() < 1e-15);
    // Dominates the general bound when γ² ≤ 1/2.
    for t in [2u64, 10, 1000] {
        let general = theorem1_bound(&inputs, &vec![gamma; t as usize]).unwrap();
        assert!(constant_step_bound(&inputs, gamma, t).unwrap() >= general);
        let decreasing = StepSizePolicy::InvSqrt { gamma0: gamma }.prefix(t);
        assert!(inv_sqrt_bound(&inputs, gamma, t).unwrap() >= theorem1_bound(&inputs, &decreasing).unwrap());
    }
}
