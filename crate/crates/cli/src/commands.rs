//! The seven subcommands: harmonic analysis tables, the Verlet error
//! table, sampler runs, bridge sweeps, coefficient optimisation, step-size
//! tuning and the dimension-scaling experiment.

use std::path::Path;

use serde_json::json;

use splithmc::bridge::{
    ou_exact_covariance, ou_exact_sample, run_bridge_chain, BridgeModel, BridgeStability,
    BridgeState, OuNonlinearity, StepCount,
};
use splithmc::harmonic::{harmonic_step_matrix, rotation_params, StabilityClass};
use splithmc::integrators::{aia_select_b, leg, optimize_three_stage, PhaseState};
use splithmc::math;
use splithmc::rng::{derive_seed, Rng};
use splithmc::sampler::{
    run_chain_observing, run_exact_chain, ChainVariant, ExactDuration, TransitionRecord,
};
use splithmc::schemes::SplittingScheme;
use splithmc::stats::RunStats;
use splithmc::tuning::{acceptance_limit, scaling_experiment, tune_h, TuneOptions};

use crate::config::{
    BuiltTarget, HarmonicConfig, PhmcConfig, SampleConfig, ScalingConfig, TuneConfig,
};
use crate::output::{fmt, Report};
use crate::{run_indexed, CliError};

/// `harmonic`: rotation parameters and the energy-error function of a
/// scheme over a step-size grid.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN configuration values
pub fn cmd_harmonic(cfg: &HarmonicConfig) -> Result<(), CliError> {
    if !(cfg.h_max > 0.0) {
        return Err(CliError::Config("h_max: must be positive".into()));
    }
    let scheme = cfg.scheme.build()?;
    let mut report = Report::create(Path::new(&cfg.out), cfg)?;
    report.header(&["h", "a_h", "theta", "chi", "rho", "stable"])?;
    for i in 1..=cfg.points {
        let h = cfg.h_max * i as f64 / cfg.points as f64;
        let m = harmonic_step_matrix(&scheme, h);
        let params = rotation_params(&m);
        let stable = params.class.is_stable();
        let (theta, chi, rho) = if stable {
            let x = params.chi - 1.0 / params.chi;
            (fmt(params.theta), fmt(params.chi), fmt(0.5 * x * x))
        } else {
            (String::new(), String::new(), String::new())
        };
        report.row(&[
            fmt(h),
            fmt(m.a),
            theta,
            chi,
            rho,
            match params.class {
                StabilityClass::Stable => "stable".into(),
                StabilityClass::StableDegenerate => "stable_degenerate".into(),
                StabilityClass::WeaklyUnstable => "weakly_unstable".into(),
                StabilityClass::Unstable => "unstable".into(),
            },
        ])?;
    }
    report.finish(&[])
}

/// One row of the Verlet/harmonic error table.
#[derive(Clone, Copy, Debug)]
pub struct TableOneRow {
    pub steps_per_period: u64,
    pub periods: u64,
    pub relative_error: f64,
}

/// `table1`: relative errors of velocity Verlet on the unit oscillator
/// from `(1, 0)` after one and ten periods, for four step sizes.
pub fn cmd_table1(out: &Path) -> Result<Vec<TableOneRow>, CliError> {
    let sys = splithmc::targets::GaussianTarget::standard_normal(1);
    let scheme = SplittingScheme::velocity_verlet();
    let mut rows = Vec::new();
    for steps_per_period in [4u64, 8, 16, 32] {
        let h = math::TAU / steps_per_period as f64;
        for periods in [1u64, 10] {
            let n = steps_per_period * periods;
            let result = leg(&sys, &scheme, h, n, &PhaseState::new(vec![1.0], vec![0.0]));
            let dq = result.state.q[0] - 1.0;
            let dp = result.state.p[0];
            rows.push(TableOneRow {
                steps_per_period,
                periods,
                relative_error: (dq * dq + dp * dp).sqrt(),
            });
        }
    }
    #[derive(serde::Serialize)]
    struct Meta {
        description: &'static str,
    }
    let mut report = Report::create(
        out,
        &Meta {
            description: "velocity Verlet on the unit oscillator from (1,0)",
        },
    )?;
    report.header(&["steps_per_period", "h", "periods", "relative_error"])?;
    for row in &rows {
        report.row(&[
            row.steps_per_period.to_string(),
            fmt(math::TAU / row.steps_per_period as f64),
            row.periods.to_string(),
            fmt(row.relative_error),
        ])?;
    }
    report.finish(&[])?;
    Ok(rows)
}

/// Summary of a `sample` run (aggregated over chains).
#[derive(Clone, Debug)]
pub struct SampleSummary {
    pub acceptance: f64,
    pub mean_delta_h: f64,
    pub component_mean: Vec<f64>,
    pub component_variance: Vec<f64>,
    pub lag1_autocorr: Option<f64>,
}

#[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN configuration values
fn run_one_chain(
    cfg: &SampleConfig,
    target: &BuiltTarget,
    scheme: &SplittingScheme,
    chain_index: u64,
    sink: &mut dyn FnMut(u64, &TransitionRecord),
) -> Result<RunStats, CliError> {
    let seed = derive_seed(cfg.seed, chain_index);
    let exact = matches!(cfg.chain.variant.as_str(), "exact" | "exact_rhmc");
    // Exact flows only use the duration; the step-size constraints of the
    // discretized variants do not apply.
    let chain_cfg = if exact {
        if !(cfg.chain.lambda > 0.0) {
            return Err(CliError::Config("chain.lambda: must be positive".into()));
        }
        None
    } else {
        Some(cfg.chain.chain_config(seed)?)
    };
    let sys = target.as_system();
    let dim = sys.dim();

    let init_q = match &cfg.chain.init {
        Some(q) => {
            if q.len() != dim {
                return Err(CliError::Config(format!(
                    "chain.init: has {} entries but the target dimension is {dim}",
                    q.len()
                )));
            }
            q.clone()
        }
        None => {
            let mut rng = Rng::from_seed(derive_seed(seed, u64::MAX / 2));
            let mut q = vec![0.0; dim];
            if !sys.sample_position(&mut rng, &mut q) {
                q.fill(0.0);
            }
            q
        }
    };
    let init = PhaseState::new(init_q, vec![0.0; dim]);

    let stats = match cfg.chain.variant.as_str() {
        "exact" | "exact_rhmc" => {
            let gaussian = target.as_gaussian().ok_or_else(|| {
                CliError::Config(
                    "chain.variant: exact flows are only available for gaussian targets".into(),
                )
            })?;
            let duration = if cfg.chain.variant == "exact" {
                ExactDuration::Fixed(cfg.chain.lambda)
            } else {
                ExactDuration::Exponential(cfg.chain.lambda)
            };
            run_exact_chain(gaussian, duration, seed, init, cfg.transitions, 8, sink)
        }
        variant => {
            let kind = match variant {
                "hmc" | "mala" => ChainVariant::Hmc,
                "rhmc" => ChainVariant::Rhmc,
                "uniform_h" => ChainVariant::UniformStep,
                "ghmc" => ChainVariant::Ghmc,
                "xhmc" => ChainVariant::Xhmc,
                other => {
                    return Err(CliError::Config(format!(
                        "chain.variant: unknown variant '{other}'"
                    )))
                }
            };
            run_chain_observing(
                sys,
                scheme,
                kind,
                chain_cfg.as_ref().expect("validated above"),
                init,
                cfg.transitions,
                0,
                8,
                sink,
            )
        }
    };
    Ok(stats)
}

/// `sample`: stream one or more chains as CSV with per-chain and aggregate
/// statistics footers.
pub fn cmd_sample(cfg: &SampleConfig, threads: usize) -> Result<SampleSummary, CliError> {
    if cfg.transitions == 0 {
        return Err(CliError::Config("transitions: must be at least 1".into()));
    }
    if cfg.chains == 0 {
        return Err(CliError::Config("chains: must be at least 1".into()));
    }
    let target = cfg.target.build()?;
    let scheme = cfg.scheme.build()?;
    // Validate the chain section once before fanning out.
    if !matches!(cfg.chain.variant.as_str(), "exact" | "exact_rhmc") {
        cfg.chain.chain_config(cfg.seed)?;
    }

    let dim = target.as_system().dim();
    let mut report = Report::create(Path::new(&cfg.out), cfg)?;
    let mut columns = vec![
        "chain".to_string(),
        "transition".into(),
        "accepted".into(),
        "delta_h".into(),
    ];
    for j in 0..dim {
        columns.push(format!("q{j}"));
    }
    report.header(&columns.iter().map(|s| s.as_str()).collect::<Vec<_>>())?;

    let row_fields = |chain_index: usize, i: u64, rec: &TransitionRecord| {
        let mut fields = vec![
            chain_index.to_string(),
            i.to_string(),
            if rec.accepted { "1".into() } else { "0".into() },
            fmt(rec.delta_h),
        ];
        fields.extend(rec.state.q.iter().map(|x| fmt(*x)));
        fields
    };

    let mut merged: Option<RunStats> = None;
    let mut footers = Vec::new();
    if cfg.chains == 1 {
        // Single chains stream rows straight to the file instead of
        // buffering the whole run.
        let mut write_err: Option<CliError> = None;
        let stats = {
            let report = &mut report;
            let write_err = &mut write_err;
            let mut sink = move |i: u64, rec: &TransitionRecord| {
                if write_err.is_none() {
                    if let Err(e) = report.row(&row_fields(0, i, rec)) {
                        *write_err = Some(e);
                    }
                }
            };
            run_one_chain(cfg, &target, &scheme, 0, &mut sink)?
        };
        if let Some(e) = write_err {
            return Err(e);
        }
        footers.push(json!({
            "chain": 0,
            "acceptance": stats.acceptance_rate(),
            "mean_delta_h": stats.mean_delta_h(),
            "diverged": stats.n_diverged(),
        }));
        merged = Some(stats);
    } else {
        let outputs = run_indexed(cfg.chains as usize, threads, |i| {
            let mut rows: Vec<(u64, TransitionRecord)> = Vec::new();
            let mut sink = |t: u64, rec: &TransitionRecord| rows.push((t, rec.clone()));
            run_one_chain(cfg, &target, &scheme, i as u64, &mut sink).map(|stats| (rows, stats))
        });
        for (chain_index, output) in outputs.into_iter().enumerate() {
            let (rows, stats) = output?;
            for (i, rec) in &rows {
                report.row(&row_fields(chain_index, *i, rec))?;
            }
            footers.push(json!({
                "chain": chain_index,
                "acceptance": stats.acceptance_rate(),
                "mean_delta_h": stats.mean_delta_h(),
                "diverged": stats.n_diverged(),
            }));
            match merged.as_mut() {
                None => merged = Some(stats),
                Some(sum) => sum.merge(&stats),
            }
        }
    }
    let stats = merged.expect("at least one chain");
    let summary = SampleSummary {
        acceptance: stats.acceptance_rate(),
        mean_delta_h: stats.mean_delta_h(),
        component_mean: (0..dim).map(|j| stats.component_mean(j)).collect(),
        component_variance: (0..dim).map(|j| stats.component_variance(j)).collect(),
        lag1_autocorr: stats.autocorrelation(1),
    };
    footers.push(json!({
        "aggregate": true,
        "acceptance": summary.acceptance,
        "mean_delta_h": summary.mean_delta_h,
        "component_mean": summary.component_mean,
        "component_variance": summary.component_variance,
        "lag1_autocorr": summary.lag1_autocorr,
    }));
    report.finish(&footers)?;
    Ok(summary)
}

fn interior_points(s_len: f64, ds: f64) -> Result<usize, CliError> {
    if !(ds > 0.0 && ds < s_len) {
        return Err(CliError::Config("ds: must lie in (0, s_len)".into()));
    }
    let cells = s_len / ds;
    let rounded = cells.round();
    if (cells - rounded).abs() > 1e-9 * cells {
        return Err(CliError::Config(format!(
            "ds: {ds} does not divide the interval length {s_len}"
        )));
    }
    Ok(rounded as usize - 1)
}

/// `phmc`: acceptance-versus-step-size sweep of the preconditioned path
/// sampler on the Ornstein–Uhlenbeck bridge, with an optional long-run
/// variance study.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN configuration values
pub fn cmd_phmc(cfg: &PhmcConfig, threads: usize) -> Result<(), CliError> {
    if cfg.h_points == 0 || !(cfg.h_min > 0.0) || cfg.h_max < cfg.h_min {
        return Err(CliError::Config(
            "h_min/h_max/h_points: need 0 < h_min <= h_max and at least one point".into(),
        ));
    }
    let fixed_steps = cfg.mode == "phmc";
    if !fixed_steps && cfg.mode != "prhmc" {
        return Err(CliError::Config(format!(
            "mode: expected 'phmc' or 'prhmc', got '{}'",
            cfg.mode
        )));
    }

    struct Job {
        c: f64,
        ds: f64,
        d: usize,
        h: f64,
    }
    let mut jobs = Vec::new();
    for &c in &cfg.c {
        for &ds in &cfg.ds {
            let d = interior_points(cfg.s_len, ds)?;
            for i in 0..cfg.h_points {
                let h = if cfg.h_points == 1 {
                    cfg.h_min
                } else {
                    cfg.h_min + (cfg.h_max - cfg.h_min) * i as f64 / (cfg.h_points - 1) as f64
                };
                jobs.push(Job { c, ds, d, h });
            }
        }
    }

    let results = run_indexed(jobs.len(), threads, |idx| {
        let job = &jobs[idx];
        let model = BridgeModel::new(cfg.s_len, job.d, job.c, OuNonlinearity);
        let seed = derive_seed(cfg.seed, idx as u64);
        let mut rng = Rng::from_seed(derive_seed(seed, 7));
        let init = BridgeState {
            u: ou_exact_sample(model.lap(), &mut rng),
            v: vec![0.0; job.d],
        };
        let steps = if fixed_steps {
            StepCount::Fixed(((cfg.lambda / job.h).floor() as u64).max(1))
        } else {
            StepCount::GeometricMean((cfg.lambda / job.h).max(1.0))
        };
        let stats = run_bridge_chain(&model, job.h, steps, seed, init, cfg.transitions, |_, _| {});
        let stable = matches!(model.stability_check(job.h), BridgeStability::Stable);
        (stats.acceptance_rate(), stats.mean_delta_h(), stable)
    });

    let mut report = Report::create(Path::new(&cfg.out), cfg)?;
    report.header(&["c", "ds", "d", "h", "acceptance", "mean_delta_h", "stable"])?;
    for (job, (acceptance, mean_delta, stable)) in jobs.iter().zip(results.iter()) {
        report.row(&[
            fmt(job.c),
            fmt(job.ds),
            job.d.to_string(),
            fmt(job.h),
            fmt(*acceptance),
            fmt(*mean_delta),
            if *stable { "1".into() } else { "0".into() },
        ])?;
    }
    report.finish(&[])?;

    if let Some(variance) = &cfg.variance_run {
        let d = interior_points(cfg.s_len, variance.ds)?;
        let model = BridgeModel::new(cfg.s_len, d, variance.c, OuNonlinearity);
        let seed = derive_seed(cfg.seed, 0xF00D);
        let mut rng = Rng::from_seed(derive_seed(seed, 7));
        let init = BridgeState {
            u: ou_exact_sample(model.lap(), &mut rng),
            v: vec![0.0; d],
        };
        let steps = if fixed_steps {
            StepCount::Fixed(((cfg.lambda / variance.h).floor() as u64).max(1))
        } else {
            StepCount::GeometricMean((cfg.lambda / variance.h).max(1.0))
        };
        let stats = run_bridge_chain(
            &model,
            variance.h,
            steps,
            seed,
            init,
            variance.transitions,
            |_, _| {},
        );
        let cov = ou_exact_covariance(model.lap());

        let variance_path = variance_table_path(&cfg.out);
        let mut table = Report::create(Path::new(&variance_path), cfg)?;
        table.header(&["node", "s", "empirical_variance", "exact_variance"])?;
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..d {
            let empirical = stats.component_variance(j);
            let exact = cov[j * d + j];
            num += (empirical - exact) * (empirical - exact);
            den += exact * exact;
            table.row(&[
                (j + 1).to_string(),
                fmt(model.node(j)),
                fmt(empirical),
                fmt(exact),
            ])?;
        }
        let rel_l2 = (num / den).sqrt();
        table.finish(&[json!({
            "acceptance": stats.acceptance_rate(),
            "relative_l2_error": rel_l2,
            "transitions": variance.transitions,
        })])?;
    }
    Ok(())
}

/// Path of the companion variance table written by `phmc`.
pub fn variance_table_path(out: &str) -> String {
    match out.strip_suffix(".csv") {
        Some(stem) => format!("{stem}_variance.csv"),
        None => format!("{out}_variance.csv"),
    }
}

/// Outcome of `optimize`.
#[derive(Clone, Copy, Debug)]
pub struct OptimizeReport {
    pub a: Option<f64>,
    pub b: f64,
    pub sup_rho: f64,
}

/// `optimize`: worst-case-error-minimizing coefficients for the two- or
/// three-stage family over the nondimensional step range `(0, c]`.
pub fn cmd_optimize(c: f64, stages: u32, out: Option<&Path>) -> Result<OptimizeReport, CliError> {
    let report = match stages {
        2 => {
            let b = aia_select_b(c).map_err(|e| CliError::Config(format!("--c: {e}")))?;
            let scheme = SplittingScheme::two_stage(b).expect("finite");
            OptimizeReport {
                a: None,
                b,
                sup_rho: splithmc::harmonic::sup_rho(&scheme, c, 2000),
            }
        }
        3 => {
            let (a, b) =
                optimize_three_stage(c).map_err(|e| CliError::Config(format!("--c: {e}")))?;
            let scheme = SplittingScheme::three_stage(a, b).expect("finite");
            OptimizeReport {
                a: Some(a),
                b,
                sup_rho: splithmc::harmonic::sup_rho(&scheme, c, 2000),
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "--stages: expected 2 or 3, got {other}"
            )))
        }
    };
    if let Some(path) = out {
        #[derive(serde::Serialize)]
        struct Meta {
            c: f64,
            stages: u32,
        }
        let mut file = Report::create(path, &Meta { c, stages })?;
        file.header(&["a", "b", "sup_rho"])?;
        file.row(&[
            report.a.map(fmt).unwrap_or_default(),
            fmt(report.b),
            fmt(report.sup_rho),
        ])?;
        file.finish(&[])?;
    }
    Ok(report)
}

/// Outcome of `tune`.
#[derive(Clone, Copy, Debug)]
pub struct TuneReport {
    pub h: f64,
    pub observed: f64,
    pub bracketed: bool,
}

/// `tune`: stochastic bisection of the step size toward a target
/// acceptance rate (default 0.651, the second-order efficiency optimum).
pub fn cmd_tune(cfg: &TuneConfig) -> Result<TuneReport, CliError> {
    let target = cfg.target.build()?;
    let scheme = cfg.scheme.build()?;
    if !(cfg.target_acceptance > 0.0 && cfg.target_acceptance < 1.0) {
        return Err(CliError::Config(
            "target_acceptance: must lie in (0, 1)".into(),
        ));
    }
    let opts = TuneOptions {
        pilot_transitions: cfg.pilot_transitions,
        h_init: cfg.h_init,
        ..TuneOptions::default()
    };
    let result = tune_h(
        target.as_system(),
        &scheme,
        cfg.lambda,
        cfg.target_acceptance,
        cfg.seed,
        opts,
    )
    .map_err(|e| match e {
        splithmc::tuning::TuningError::NoExactSampler => CliError::Config(
            "target: tuning starts pilots at stationarity and needs a gaussian target".into(),
        ),
        other => CliError::Numerical(other.to_string()),
    })?;

    let mut report = Report::create(Path::new(&cfg.out), cfg)?;
    report.header(&["h", "observed_acceptance", "bracketed", "n_pilots"])?;
    report.row(&[
        fmt(result.h),
        fmt(result.observed),
        if result.bracketed {
            "1".into()
        } else {
            "0".into()
        },
        result.n_pilots.to_string(),
    ])?;
    report.finish(&[])?;
    Ok(TuneReport {
        h: result.h,
        observed: result.observed,
        bracketed: result.bracketed,
    })
}

/// `scaling`: observed acceptance of the product target under the step
/// scaling law against the predicted limit.
pub fn cmd_scaling(cfg: &ScalingConfig) -> Result<Vec<(usize, f64, f64, f64)>, CliError> {
    let base = match cfg.target.build()? {
        BuiltTarget::Gaussian(t) => t,
        _ => {
            return Err(CliError::Config(
                "target: the scaling experiment needs a gaussian base target".into(),
            ))
        }
    };
    let scheme = cfg.scheme.build()?;
    if cfg.m_list.is_empty() {
        return Err(CliError::Config("m_list: must not be empty".into()));
    }
    let (sigma_big, rows) = scaling_experiment(
        &base,
        &scheme,
        cfg.ell,
        cfg.nu,
        &cfg.m_list,
        cfg.lambda,
        cfg.transitions,
        cfg.seed,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;

    let mut report = Report::create(Path::new(&cfg.out), cfg)?;
    report.header(&[
        "m",
        "h",
        "observed_acceptance",
        "predicted_limit",
        "deviation",
        "fixed_h_acceptance",
    ])?;
    let mut summary = Vec::new();
    for row in &rows {
        let deviation = row.observed - row.predicted;
        report.row(&[
            row.m.to_string(),
            fmt(row.h),
            fmt(row.observed),
            fmt(row.predicted),
            fmt(deviation),
            fmt(row.fixed_h_observed),
        ])?;
        summary.push((row.m, row.observed, row.predicted, row.fixed_h_observed));
    }
    report.finish(&[json!({
        "sigma_hat": sigma_big,
        "acceptance_limit_at_ell": acceptance_limit(cfg.ell, cfg.nu, sigma_big),
    })])?;
    Ok(summary)
}
