//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Tolerances are pinned in the assertions.
//!
//! Two checks are known-red and kept that way deliberately; their
//! assertion messages carry the measured value and the test comments the
//! analysis:
//!
//! * `criterion_04b`: the target value 0.1932 for the small-range limit
//!   of the two-stage coefficient belongs to the error-constant
//!   minimizer, not to the minimax problem the selector solves. The minimax optimum tends to
//!   `(3 - sqrt(5))/4 = 0.190983...` as the range shrinks (the root of
//!   `4b² - 6b + 1`, where the leading term of the energy-error function
//!   vanishes), and the two disagree by 0.0022 — outside the 1e-3 band.
//! * `criterion_06b`: the target of 82% one-step acceptance is a
//!   single-trajectory realization (50 transitions, standard deviation
//!   about 6 points). The ensemble mean at the stated configuration is
//!   74.6% — confirmed by an independent rotation-parameter Monte Carlo —
//!   which sits outside the +-5-point band.

use std::path::PathBuf;

use splithmc::bridge::{
    ou_exact_covariance, ou_exact_sample, run_bridge_chain, BridgeModel, BridgeState,
    OuNonlinearity, StepCount,
};
use splithmc::harmonic::{
    harmonic_step_matrix, phmc_rho_closed, phmc_stable, rho, rho_two_stage_closed,
    stability_interval, sup_rho,
};
use splithmc::integrators::{aia_select_b, leg, PhaseState, SeparableSystem};
use splithmc::math;
use splithmc::rng::{derive_seed, Rng};
use splithmc::sampler::{
    exact_hmc_transition, hmc_transition, run_chain, run_exact_chain, ChainConfig, ChainVariant,
    DurationMode, ExactDuration,
};
use splithmc::schemes::SplittingScheme;
use splithmc::targets::GaussianTarget;
use splithmc::tuning::{optimal_acceptance, scaling_experiment};

fn pass(criterion: &str, detail: String) {
    println!("[PASS] {criterion}: {detail}");
}

fn tmp(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("splithmc-acceptance-{}-{name}", std::process::id()));
    path
}

fn round_3_sig(x: f64) -> f64 {
    let exp = x.abs().log10().floor();
    let scale = 10f64.powf(exp - 2.0);
    (x / scale).round() * scale
}

#[test]
fn criterion_01_table1_reproduction() {
    let started = std::time::Instant::now();
    let out = tmp("table1.csv");
    let rows = splithmc_cli::commands::cmd_table1(&out).unwrap();
    std::fs::remove_file(&out).ok();
    let expected = [
        6.49e-1, 2.00e0, 1.60e-1, 1.48e0, 4.03e-2, 4.00e-1, 1.01e-2, 1.01e-1,
    ];
    assert_eq!(rows.len(), 8);
    for (row, want) in rows.iter().zip(expected.iter()) {
        let got = round_3_sig(row.relative_error);
        assert!(
            (got - want).abs() < 1e-12 * want.abs().max(1.0),
            "T/{} over {} periods: {} rounds to {got}, expected {want}",
            row.steps_per_period,
            row.periods,
            row.relative_error
        );
    }
    assert!(started.elapsed().as_secs_f64() < 1.0, "must run in < 1 s");
    pass(
        "criterion 1",
        "all 8 table entries match to 3 significant figures".into(),
    );
}

#[test]
fn criterion_02_instability_magnitudes() {
    let sys = GaussianTarget::standard_normal(1);
    let scheme = SplittingScheme::velocity_verlet();
    let start = PhaseState::new(vec![1.0], vec![0.0]);

    let one = leg(&sys, &scheme, math::PI, 2, &start);
    let err_one = ((one.state.q[0] - 1.0).powi(2) + one.state.p[0].powi(2)).sqrt();
    assert!(
        (err_one - 46.4).abs() / 46.4 < 0.01,
        "one-period error {err_one}, expected about 46.4"
    );

    // Ten periods overflow the sampler's divergence guard, so drive the
    // raw flows directly: kick(h/2) drift(h) kick(h/2) per step.
    let h = math::PI;
    let mut state = start.clone();
    splithmc::integrators::kick(&sys, 0.5 * h, &mut state);
    for step in 0..20 {
        splithmc::integrators::drift(&sys, h, &mut state);
        let t = if step == 19 { 0.5 * h } else { h };
        splithmc::integrators::kick(&sys, t, &mut state);
    }
    let err_ten = ((state.q[0] - 1.0).powi(2) + state.p[0].powi(2)).sqrt();
    assert!(
        (err_ten - 4.68e17).abs() / 4.68e17 < 0.05,
        "ten-period error {err_ten}, expected about 4.68e17"
    );
    pass(
        "criterion 2",
        format!("h = pi errors: {err_one:.3} after one period, {err_ten:.3e} after ten"),
    );
}

#[test]
fn criterion_03_optimized_scheme_constants() {
    let blanes2 = sup_rho(&SplittingScheme::blanes_two_stage(), 2.0, 4000);
    assert!(
        (3e-4..7e-4).contains(&blanes2),
        "two-stage minimax sup: {blanes2}"
    );
    let quarter = sup_rho(&SplittingScheme::two_stage(0.25).unwrap(), 2.0, 4000);
    assert!((3e-2..5e-2).contains(&quarter), "b = 1/4 sup: {quarter}");
    let blanes3 = sup_rho(&SplittingScheme::blanes_three_stage(), 3.0, 4000);
    assert!(
        (5e-5..9e-5).contains(&blanes3),
        "three-stage sup: {blanes3}"
    );
    let scan = stability_interval(&SplittingScheme::blanes_three_stage(), 6.0, 1e-8);
    assert!(!scan.censored);
    assert!(
        (scan.h_max - 4.67).abs() < 0.05,
        "three-stage stability interval length {}",
        scan.h_max
    );
    pass(
        "criterion 3",
        format!(
            "sup rho: {blanes2:.2e} / {quarter:.2e} / {blanes3:.2e}; stability length {:.3}",
            scan.h_max
        ),
    );
}

#[test]
fn criterion_04a_aia_at_two() {
    let b = aia_select_b(2.0).unwrap();
    assert!((b - 0.21178).abs() < 1e-4, "b(2) = {b}");
    pass("criterion 4a", format!("b(2) = {b:.6}"));
}

#[test]
fn criterion_04b_aia_small_range() {
    // Known red; see the module docs. The minimax optimum approaches
    // (3 - sqrt(5))/4 = 0.190983, not the error-constant value 0.1932.
    let b = aia_select_b(0.05).unwrap();
    assert!(
        (b - 0.1932).abs() < 1e-3,
        "b(0.05) = {b}; the minimax limit is (3 - sqrt(5))/4 = 0.190983, \
         which differs from the error-constant minimizer 0.1932 by more than 1e-3"
    );
    pass("criterion 4b", format!("b(0.05) = {b:.6}"));
}

#[test]
fn criterion_04c_aia_wide_range() {
    for c in [2.0 * math::SQRT_2, 3.0, 3.9] {
        assert_eq!(aia_select_b(c).unwrap(), 0.25, "c = {c}");
    }
    pass("criterion 4c", "b = 1/4 for every c >= 2*sqrt(2)".into());
}

#[test]
fn criterion_05_mean_energy_positivity_and_order_doubling() {
    // Standard normal at stationarity, velocity Verlet, legs of duration
    // about pi/2 with n = floor(lambda/h) steps.
    let sys = GaussianTarget::standard_normal(1);
    let scheme = SplittingScheme::velocity_verlet();
    let lambda = math::PI / 2.0;
    let mut rng = Rng::from_seed(50_001);

    let mut ln_h = Vec::new();
    let mut ln_mean = Vec::new();
    let mut ln_abs = Vec::new();
    for i in 0..9 {
        let h = 0.2 + 0.1 * i as f64;
        let n = ((lambda / h).floor() as u64).max(1);
        // More samples at small h, where the mean is tiny relative to the
        // per-sample spread.
        let ratio: f64 = 0.45 / h;
        let samples = ((1e5 * ratio.powi(4).max(1.0)) as u64).min(2_000_000);
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut sum_abs = 0.0;
        for _ in 0..samples {
            let state = PhaseState::new(vec![rng.normal()], vec![rng.normal()]);
            let delta = leg(&sys, &scheme, h, n, &state).delta_h;
            sum += delta;
            sum2 += delta * delta;
            sum_abs += delta.abs();
        }
        let mean = sum / samples as f64;
        let se = ((sum2 / samples as f64 - mean * mean) / samples as f64).sqrt();
        assert!(
            mean > -3.0 * se,
            "h={h}: E(delta H) = {mean} (se {se}) must be nonnegative"
        );
        ln_h.push(h.ln());
        ln_mean.push(mean.ln());
        ln_abs.push((sum_abs / samples as f64).ln());
    }

    let slope = |xs: &[f64], ys: &[f64]| {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    };
    let mean_slope = slope(&ln_h, &ln_mean);
    let abs_slope = slope(&ln_h, &ln_abs);
    assert!(
        (mean_slope - 4.0).abs() < 0.3,
        "log-log slope of E(delta H) vs h: {mean_slope}"
    );
    assert!(
        (abs_slope - 2.0).abs() < 0.2,
        "log-log slope of E|delta H| vs h: {abs_slope}"
    );
    pass(
        "criterion 5",
        format!("mean slope {mean_slope:.3} (target 4), pointwise slope {abs_slope:.3} (target 2)"),
    );
}

/// Mean acceptance over 200 seeded runs from (9, 9) with a 100-force-eval
/// budget: 10 transitions for HMC (10 evaluations per leg), 50 for the
/// one-step configuration (2 per leg).
fn bivariate_budget_acceptance(lambda: f64, transitions: u64, root: u64) -> f64 {
    let sys = GaussianTarget::new(vec![50.5, -49.5, -49.5, 50.5], 2).unwrap();
    let scheme = SplittingScheme::velocity_verlet();
    let mut total = 0.0;
    let seeds = 200;
    for seed in 0..seeds {
        let cfg = ChainConfig::new(lambda, 0.15, derive_seed(root, seed));
        let mut rng = Rng::from_seed(cfg.seed);
        let mut state = PhaseState::new(vec![9.0, 9.0], vec![0.0, 0.0]);
        let mut accepted = 0u64;
        for _ in 0..transitions {
            let rec = hmc_transition(&sys, &scheme, &cfg, &state, &mut rng);
            if rec.accepted {
                accepted += 1;
            }
            state = rec.state;
        }
        total += accepted as f64 / transitions as f64;
    }
    total / seeds as f64
}

#[test]
fn criterion_06a_bivariate_hmc_acceptance() {
    let acceptance = bivariate_budget_acceptance(1.35, 10, 60_001);
    assert!(
        (acceptance - 0.93).abs() < 0.05,
        "HMC mean acceptance {acceptance}, expected 0.93 +- 0.05"
    );
    pass("criterion 6a", format!("HMC acceptance {acceptance:.4}"));
}

#[test]
fn criterion_06b_bivariate_mala_acceptance() {
    // Known red; see the module docs. The ensemble mean is 0.746, which an
    // independent rotation-parameter Monte Carlo confirms; 0.82 is a
    // single-run value with a standard deviation of about 0.06.
    let acceptance = bivariate_budget_acceptance(0.15, 50, 60_002);
    assert!(
        (acceptance - 0.82).abs() < 0.05,
        "MALA mean acceptance {acceptance}, expected 0.82 +- 0.05; \
         the ensemble mean of this configuration is 0.746"
    );
    pass("criterion 6b", format!("MALA acceptance {acceptance:.4}"));
}

#[test]
fn criterion_07_exact_hmc_anticorrelation() {
    let sys = GaussianTarget::standard_normal(1);
    let mut rng = Rng::from_seed(70_001);
    // lambda = pi flips the position exactly.
    for _ in 0..50 {
        let q0 = 3.0 * rng.normal();
        let state = PhaseState::new(vec![q0], vec![0.0]);
        let rec = exact_hmc_transition(&sys, ExactDuration::Fixed(math::PI), &state, &mut rng);
        assert!(
            (rec.state.q[0] + q0).abs() < 1e-10,
            "q1 = {} vs -q0 = {}",
            rec.state.q[0],
            -q0
        );
        assert!(rec.delta_h.abs() < 1e-10);
    }
    // lambda = pi/2 decorrelates consecutive positions.
    let mut q = vec![0.0];
    sys.sample_position(&mut rng, &mut q);
    let stats = run_exact_chain(
        &sys,
        ExactDuration::Fixed(math::PI / 2.0),
        70_002,
        PhaseState::new(q, vec![0.0]),
        100_000,
        1,
        |_, _| {},
    );
    let corr = stats.autocorrelation(1).unwrap();
    assert!(corr.abs() < 0.02, "lag-1 correlation {corr}");
    pass(
        "criterion 7",
        format!("position flip exact at pi; lag-1 correlation {corr:.4} at pi/2"),
    );
}

#[test]
fn criterion_08a_ou_bridge_prhmc() {
    // c = 1, ds = 0.02 (d = 49), h = 2, mean duration 20.
    let model = BridgeModel::new(1.0, 49, 1.0, OuNonlinearity);
    let mut rng = Rng::from_seed(80_001);
    let init = BridgeState {
        u: ou_exact_sample(model.lap(), &mut rng),
        v: vec![0.0; 49],
    };
    let stats = run_bridge_chain(
        &model,
        2.0,
        StepCount::GeometricMean(10.0),
        80_002,
        init.clone(),
        10_000,
        |_, _| {},
    );
    let acceptance = stats.acceptance_rate();
    assert!(
        (acceptance - 0.95).abs() < 0.02,
        "c = 1 acceptance {acceptance}, expected 0.95 +- 0.02"
    );

    // Long-run per-node variances against the dense covariance oracle.
    let long = run_bridge_chain(
        &model,
        2.0,
        StepCount::GeometricMean(10.0),
        80_003,
        init,
        1_000_000,
        |_, _| {},
    );
    let cov = ou_exact_covariance(model.lap());
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..49 {
        let diff = long.component_variance(j) - cov[j * 49 + j];
        num += diff * diff;
        den += cov[j * 49 + j] * cov[j * 49 + j];
    }
    let rel_l2 = (num / den).sqrt();
    assert!(rel_l2 <= 0.01, "variance relative L2 error {rel_l2}");

    pass(
        "criterion 8a",
        format!(
            "c=1 acceptance {acceptance:.4}, variance L2 error {:.3}%",
            rel_l2 * 100.0
        ),
    );
}

fn degraded_bridge_acceptance(c: f64, seed: u64) -> f64 {
    let model = BridgeModel::new(1.0, 49, c, OuNonlinearity);
    let mut rng = Rng::from_seed(seed);
    let init = BridgeState {
        u: ou_exact_sample(model.lap(), &mut rng),
        v: vec![0.0; 49],
    };
    let stats = run_bridge_chain(
        &model,
        2.0,
        StepCount::GeometricMean(10.0),
        seed ^ 0xF,
        init,
        10_000,
        |_, _| {},
    );
    stats.acceptance_rate()
}

#[test]
fn criterion_08b_unpreconditioned_split_collapses() {
    // c = 0 at h = 2 is beyond the stability threshold of the lowest mode.
    let acceptance = degraded_bridge_acceptance(0.0, 80_004);
    assert!(acceptance < 0.02, "c = 0: acceptance {acceptance}");
    pass("criterion 8b", format!("c=0 acceptance {acceptance:.4}"));
}

#[test]
fn criterion_08c_half_split_acceptance() {
    // Known red by a whisker: the configuration is stable but sits next to
    // the stability edge of the lowest mode, and the stationary acceptance
    // works out to about 2.5%, slightly above the pinned 2% reading of
    // "virtually zero".
    let acceptance = degraded_bridge_acceptance(0.5, 80_005);
    assert!(acceptance < 0.02, "c = 0.5: acceptance {acceptance}");
    pass("criterion 8c", format!("c=0.5 acceptance {acceptance:.4}"));
}

/// Mean one-leg energy error from exact stationary draws.
fn bridge_mean_delta(
    c: f64,
    d: usize,
    h: f64,
    n_steps: u64,
    samples: u64,
    seed: u64,
) -> (f64, f64) {
    let model = BridgeModel::new(1.0, d, c, OuNonlinearity);
    let mut rng = Rng::from_seed(seed);
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..samples {
        let state = BridgeState {
            u: ou_exact_sample(model.lap(), &mut rng),
            v: model.sample_v(&mut rng),
        };
        let delta = model.strang_leg(h, n_steps, &state).delta_h;
        sum += delta;
        sum2 += delta * delta;
    }
    let mean = sum / samples as f64;
    let se = ((sum2 / samples as f64 - mean * mean) / samples as f64).sqrt();
    (mean, se)
}

#[test]
fn criterion_09_dimension_robustness() {
    // c = 1: the mean energy error is essentially independent of the grid.
    let samples = 100_000;
    let (small, se_small) = bridge_mean_delta(1.0, 49, 1.8, 3, samples, 90_001);
    let (large, se_large) = bridge_mean_delta(1.0, 199, 1.8, 3, samples, 90_002);
    let ratio = large / small;
    assert!(
        (ratio - 1.0).abs() <= 0.2,
        "c=1: mean delta {small} (se {se_small}) vs {large} (se {se_large}), ratio {ratio}"
    );

    // c = 0: it grows linearly with the number of grid points.
    let (small0, _) = bridge_mean_delta(0.0, 49, 0.5, 3, samples, 90_003);
    let (large0, _) = bridge_mean_delta(0.0, 199, 0.5, 3, samples, 90_004);
    let ratio0 = large0 / small0;
    let dim_ratio = 199.0 / 49.0;
    assert!(
        (ratio0 - dim_ratio).abs() <= 0.3 * dim_ratio,
        "c=0: ratio {ratio0} vs dimension ratio {dim_ratio}"
    );
    pass(
        "criterion 9",
        format!("c=1 ratio {ratio:.3} (flat), c=0 ratio {ratio0:.3} vs {dim_ratio:.3}"),
    );
}

#[test]
fn criterion_10_tuning_optimum_and_scaling() {
    let astar = optimal_acceptance(2);
    assert!(
        (astar - 0.651).abs() < 0.005,
        "optimal acceptance for order 2: {astar}"
    );

    // lambda = ell makes the scaled step counts exact at m = 16 and 256.
    let base = GaussianTarget::standard_normal(1);
    let scheme = SplittingScheme::velocity_verlet();
    let ell = 1.3;
    let (sigma_hat, rows) =
        scaling_experiment(&base, &scheme, ell, 2, &[16, 256], ell, 20_000, 100_003).unwrap();
    assert!(rows[0].predicted > 0.4 && rows[0].predicted < 0.9);
    for row in &rows {
        assert!(
            (row.observed - row.predicted).abs() <= 0.03,
            "m = {}: observed {} vs predicted {}",
            row.m,
            row.observed,
            row.predicted
        );
    }
    pass(
        "criterion 10",
        format!(
            "optimal acceptance {astar:.4}; sigma {sigma_hat:.4}; m=16: {:.3} vs {:.3}; m=256: {:.3} vs {:.3}",
            rows[0].observed, rows[0].predicted, rows[1].observed, rows[1].predicted
        ),
    );
}

#[test]
fn criterion_11_property_suites() {
    // Reversibility to 1e-10.
    let dw = splithmc::targets::DemoTarget::double_well();
    let scheme = SplittingScheme::blanes_two_stage();
    let mut rng = Rng::from_seed(110_001);
    for _ in 0..50 {
        let state = PhaseState::new(vec![rng.normal()], vec![rng.normal()]);
        let fwd = leg(&dw, &scheme, 0.2, 3, &state).state;
        let back = leg(&dw, &scheme, 0.2, 3, &fwd.flip_momentum()).state;
        let round = back.flip_momentum();
        assert!(
            (round.q[0] - state.q[0]).abs() < 1e-10 && (round.p[0] - state.p[0]).abs() < 1e-10,
            "reversibility violated"
        );
    }

    // Volume preservation to 1e-6 via a finite-difference Jacobian.
    let eps = 1e-5;
    for _ in 0..10 {
        let x = PhaseState::new(vec![rng.normal()], vec![rng.normal()]);
        let map = |s: &PhaseState| leg(&dw, &scheme, 0.2, 3, s).state;
        let mut jac = [0.0f64; 4];
        for j in 0..2 {
            let mut plus = x.clone();
            let mut minus = x.clone();
            if j == 0 {
                plus.q[0] += eps;
                minus.q[0] -= eps;
            } else {
                plus.p[0] += eps;
                minus.p[0] -= eps;
            }
            let fp = map(&plus);
            let fm = map(&minus);
            jac[j] = (fp.q[0] - fm.q[0]) / (2.0 * eps);
            jac[2 + j] = (fp.p[0] - fm.p[0]) / (2.0 * eps);
        }
        let det = jac[0] * jac[3] - jac[1] * jac[2];
        assert!((det - 1.0).abs() < 1e-6, "jacobian determinant {det}");
    }

    // Energy-error antisymmetry to 1e-10.
    for _ in 0..50 {
        let state = PhaseState::new(vec![rng.normal()], vec![rng.normal()]);
        let there = leg(&dw, &scheme, 0.15, 4, &state);
        let mirrored = leg(&dw, &scheme, 0.15, 4, &there.state.flip_momentum());
        assert!(
            (there.delta_h + mirrored.delta_h).abs() < 1e-10,
            "antisymmetry violated"
        );
    }

    // Closed forms against matrix constructions.
    for ib in 0..=10 {
        let b = 0.17 + 0.1 * ib as f64 / 10.0;
        let scheme_b = SplittingScheme::two_stage(b).unwrap();
        for ih in 1..=30 {
            let h = 2.0 * ih as f64 / 30.0;
            if let (Ok(closed), Ok(matrix)) = (rho_two_stage_closed(b, h), rho(&scheme_b, h)) {
                assert!((closed - matrix).abs() <= 1e-10 * (1.0 + matrix));
            }
        }
    }
    for &c in &[0.0, 0.5, 1.0] {
        for &omega in &[1.0, 3.14, 10.0] {
            for ih in 1..=20 {
                let h = 2.5 * ih as f64 / 20.0;
                if !phmc_stable(c, omega, h) {
                    continue;
                }
                if let Ok(closed) = phmc_rho_closed(c, omega, h) {
                    // independent construction of the one-dof step matrix
                    let w2 = omega * omega;
                    let tilde2 = 1.0 + (1.0 - c * c) * w2;
                    let (ar, br) = if c == 0.0 {
                        (1.0, h / w2)
                    } else {
                        ((c * h).cos(), (c * h).sin() / (c * w2))
                    };
                    let k = -0.5 * h * tilde2;
                    let a = ar + br * k;
                    let b_entry = br;
                    let sin_theta = (1.0 - a * a).sqrt();
                    let chi = b_entry / sin_theta;
                    let chi_hat2 = (w2 + w2 * w2) * chi * chi;
                    let oracle = 0.5 * (chi_hat2 + 1.0 / chi_hat2 - 2.0);
                    assert!(
                        (closed - oracle).abs() <= 1e-9 * (1.0 + oracle),
                        "c={c} omega={omega} h={h}"
                    );
                }
            }
        }
    }

    // Chebyshev identity to 1e-12.
    fn chebyshev_t(n: usize, x: f64) -> f64 {
        let (mut t0, mut t1) = (1.0, x);
        if n == 0 {
            return t0;
        }
        for _ in 1..n {
            let t2 = 2.0 * x * t1 - t0;
            t0 = t1;
            t1 = t2;
        }
        t1
    }
    for n in 2..=5usize {
        let concat = SplittingScheme::verlet_concat(n).unwrap();
        for i in 1..=50 {
            let h = 2.0 * n as f64 * i as f64 / 51.0;
            let m = harmonic_step_matrix(&concat, h);
            let t = chebyshev_t(n, 1.0 - h * h / (2.0 * (n * n) as f64));
            assert!((m.a - t).abs() < 1e-12, "n={n} h={h}");
        }
    }

    // Stationarity moments within 4 SE for every sampler variant.
    let sys = GaussianTarget::new(vec![50.5, -49.5, -49.5, 50.5], 2).unwrap();
    let vv = SplittingScheme::velocity_verlet();
    let (_, cov) = sys.moments();
    let variants: [(&str, ChainVariant, ChainConfig); 5] = [
        (
            "hmc",
            ChainVariant::Hmc,
            ChainConfig::new(1.35, 0.15, 111_001),
        ),
        (
            "rhmc",
            ChainVariant::Rhmc,
            ChainConfig {
                duration: DurationMode::GeometricSteps,
                ..ChainConfig::new(1.35, 0.15, 111_002)
            },
        ),
        (
            "uniform_h",
            ChainVariant::UniformStep,
            ChainConfig {
                duration: DurationMode::UniformStep { delta: 0.1 },
                ..ChainConfig::new(1.35, 0.15, 111_003)
            },
        ),
        (
            "ghmc",
            ChainVariant::Ghmc,
            ChainConfig {
                ghmc_phi: math::PI / 4.0,
                ..ChainConfig::new(1.35, 0.15, 111_004)
            },
        ),
        (
            "xhmc",
            ChainVariant::Xhmc,
            ChainConfig {
                extra_chances: 2,
                ..ChainConfig::new(1.35, 0.15, 111_005)
            },
        ),
    ];
    for (label, variant, cfg) in variants {
        let mut rng = Rng::from_seed(cfg.seed ^ 0x5A5A);
        let mut q0 = vec![0.0; 2];
        assert!(sys.sample_position(&mut rng, &mut q0));
        let n: u64 = 60_000;
        let batch = 500usize;
        let mut batches: Vec<Vec<f64>> = vec![Vec::new(); 4];
        let mut acc = [0.0f64; 4];
        let mut count = 0usize;
        run_chain(
            &sys,
            &vv,
            variant,
            &cfg,
            PhaseState::new(q0, vec![0.0; 2]),
            n,
            |_, rec| {
                acc[0] += rec.state.q[0];
                acc[1] += rec.state.q[1];
                acc[2] += rec.state.q[0] * rec.state.q[0];
                acc[3] += rec.state.q[1] * rec.state.q[1];
                count += 1;
                if count == batch {
                    for (slot, value) in acc.iter_mut().enumerate() {
                        batches[slot].push(*value / batch as f64);
                        *value = 0.0;
                    }
                    count = 0;
                }
            },
        );
        for slot in 0..4 {
            let series = &batches[slot];
            let nb = series.len() as f64;
            let mean = series.iter().sum::<f64>() / nb;
            let var = series.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (nb - 1.0);
            let se = (var / nb).sqrt();
            let target = if slot < 2 {
                0.0
            } else {
                cov[(slot - 2) * 2 + (slot - 2)]
            };
            assert!(
                (mean - target).abs() < 4.0 * se,
                "{label}: moment {slot}: {mean} vs {target} (se {se})"
            );
        }
    }

    pass(
        "criterion 11",
        "reversibility, volume, antisymmetry, closed forms, Chebyshev, stationarity".into(),
    );
}
