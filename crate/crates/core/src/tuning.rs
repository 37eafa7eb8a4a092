//! Step-size tuning and high-dimension acceptance theory.
//!
//! For a target made of `m` independent copies and an integrator of order
//! `nu`, scaling the step size as `h = ℓ m^{-1/(2ν)}` keeps the total
//! energy error of an integration leg distributionally bounded, and the
//! stationary acceptance rate converges to `A(ℓ) = 2Φ(-ℓ^ν √Σ / 2)`, where
//! `Σ` is the small-`h` limit of `σ²(h)/h^{2ν}` for the one-component
//! energy error. Maximizing work efficiency over `ℓ` gives a target
//! acceptance rate that depends only on `nu`; for second-order schemes it
//! is about 0.651.

use alloc::vec;
use alloc::vec::Vec;

use crate::integrators::{leg, PhaseState, SeparableSystem};
use crate::math;
use crate::rng::{derive_seed, Rng};
use crate::sampler::{hmc_transition, refresh_momentum, ChainConfig};
use crate::schemes::SplittingScheme;

/// The step-size scaling `h = ℓ m^{-1/(2ν)}`.
#[derive(Clone, Copy, Debug)]
pub struct ScalingLaw {
    pub ell: f64,
    pub nu: u32,
    pub m: usize,
}

impl ScalingLaw {
    pub fn h(&self) -> f64 {
        self.ell * math::exp(-math::ln(self.m as f64) / (2.0 * self.nu as f64))
    }
}

/// Errors from the tuning operations.
#[derive(Clone, Debug, PartialEq)]
pub enum TuningError {
    /// The system cannot produce exact stationary draws.
    NoExactSampler,
    /// Invalid argument.
    Domain(&'static str),
}

impl core::fmt::Display for TuningError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TuningError::NoExactSampler => {
                write!(f, "target does not support exact stationary draws")
            }
            TuningError::Domain(what) => write!(f, "domain error: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TuningError {}

/// Monte Carlo moments of the one-leg energy error.
#[derive(Clone, Copy, Debug)]
pub struct EnergyErrorMoments {
    /// Mean energy error at the probe step size.
    pub mu_hat: f64,
    /// Variance of the energy error.
    pub sigma2_hat: f64,
    /// `Σ̂ = σ²(h) / h^{2ν}`, the quantity entering the acceptance limit.
    pub sigma_big_hat: f64,
    /// `μ(h)/h^{2ν}`, which should approach `Σ̂/2`.
    pub mu_scaled: f64,
    pub se_mu: f64,
    pub se_sigma2: f64,
    /// Set when the half-step probe disagrees with the `h^{2ν}` scaling by
    /// more than five combined standard errors; signals either a wrong
    /// order claim or a probe step size outside the asymptotic regime.
    pub consistency_warning: bool,
}

fn one_leg_moments<S: SeparableSystem + ?Sized>(
    sys: &S,
    scheme: &SplittingScheme,
    lambda: f64,
    h: f64,
    n_samples: u64,
    rng: &mut Rng,
) -> Result<(f64, f64, f64, u64), TuningError> {
    let d = sys.dim();
    let n_steps = math::floor(lambda / h).max(1.0) as u64;
    let mut q = vec![0.0; d];
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    let mut sum4 = 0.0;
    let mut kept = 0u64;
    let mut deltas = Vec::with_capacity(n_samples as usize);
    for _ in 0..n_samples {
        if !sys.sample_position(rng, &mut q) {
            return Err(TuningError::NoExactSampler);
        }
        let p = refresh_momentum(sys, rng);
        let start = PhaseState { q: q.clone(), p };
        let result = leg(sys, scheme, h, n_steps, &start);
        if result.delta_h.is_finite() {
            deltas.push(result.delta_h);
            sum += result.delta_h;
            kept += 1;
        }
    }
    if kept < 2 {
        return Err(TuningError::Domain("all probe legs diverged"));
    }
    let mean = sum / kept as f64;
    for &dlt in &deltas {
        let cen = dlt - mean;
        sum2 += cen * cen;
        sum4 += cen * cen * cen * cen;
    }
    let var = sum2 / kept as f64;
    let m4 = sum4 / kept as f64;
    Ok((mean, var, m4, kept))
}

/// Estimate `Σ` from one-leg energy errors at a small probe step.
///
/// Draws `(q, p)` exactly from the Boltzmann–Gibbs distribution (so the
/// target must support exact position draws), integrates one leg of
/// duration `lambda`, and forms `Σ̂ = σ̂²/h^{2ν}`. A second probe at `h/2`
/// cross-checks the claimed order: if the rescaled variances disagree
/// beyond five standard errors the `consistency_warning` flag is set.
pub fn estimate_sigma<S: SeparableSystem + ?Sized>(
    sys: &S,
    scheme: &SplittingScheme,
    lambda: f64,
    nu: u32,
    h_small: f64,
    n_samples: u64,
    rng: &mut Rng,
) -> Result<EnergyErrorMoments, TuningError> {
    if !(h_small > 0.0 && lambda > 0.0) {
        return Err(TuningError::Domain("lambda and h_small must be positive"));
    }
    if nu == 0 {
        return Err(TuningError::Domain("nu must be at least 1"));
    }
    let (mu, var, m4, kept) = one_leg_moments(sys, scheme, lambda, h_small, n_samples, rng)?;
    let n = kept as f64;
    let se_mu = math::sqrt(var / n);
    let se_var = math::sqrt((m4 - var * var).max(0.0) / n);

    let h2nu = power(h_small, 2 * nu);
    let sigma_big = var / h2nu;

    // Half-step probe: under the claimed order the rescaled variance is
    // unchanged; a mismatch of claimed and actual order multiplies it by
    // 2^{2(ν_claim - ν_true)}.
    let (_, var_half, m4_half, kept_half) =
        one_leg_moments(sys, scheme, lambda, h_small / 2.0, n_samples, rng)?;
    let h2nu_half = power(h_small / 2.0, 2 * nu);
    let sigma_big_half = var_half / h2nu_half;
    let se_half =
        math::sqrt((m4_half - var_half * var_half).max(0.0) / kept_half as f64) / h2nu_half;
    let se_combined = math::sqrt(se_half * se_half + (se_var / h2nu) * (se_var / h2nu));
    let consistency_warning = math::abs(sigma_big_half - sigma_big) > 5.0 * se_combined;

    Ok(EnergyErrorMoments {
        mu_hat: mu,
        sigma2_hat: var,
        sigma_big_hat: sigma_big,
        mu_scaled: mu / h2nu,
        se_mu,
        se_sigma2: se_var,
        consistency_warning,
    })
}

fn power(x: f64, n: u32) -> f64 {
    let mut out = 1.0;
    for _ in 0..n {
        out *= x;
    }
    out
}

/// Limiting acceptance rate `A(ℓ) = 2Φ(-ℓ^ν √Σ / 2)`.
pub fn acceptance_limit(ell: f64, nu: u32, sigma_big: f64) -> f64 {
    assert!(ell > 0.0 && sigma_big > 0.0);
    2.0 * math::normal_cdf(-power(ell, nu) * math::sqrt(sigma_big) / 2.0)
}

/// The acceptance rate maximizing work efficiency for integrators of order
/// `nu`; independent of the target.
pub fn optimal_acceptance(nu: u32) -> f64 {
    assert!((1..=4).contains(&nu));
    // maximize A (Φ⁻¹(1 - A/2))^{1/ν} on (0, 1) by golden section
    let objective = |a: f64| {
        let q = math::normal_quantile(1.0 - a / 2.0);
        -a * math::exp(math::ln(q) / nu as f64)
    };
    let golden = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (1e-6, 1.0 - 1e-6);
    let mut x1 = hi - golden * (hi - lo);
    let mut x2 = lo + golden * (hi - lo);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    while hi - lo > 1e-9 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = objective(x2);
        }
    }
    0.5 * (lo + hi)
}

/// One row of a scaling experiment.
#[derive(Clone, Copy, Debug)]
pub struct ScalingRow {
    pub m: usize,
    pub h: f64,
    /// Observed acceptance rate under the scaled step size.
    pub observed: f64,
    /// Predicted limit `A(ℓ)` from the pipeline-estimated `Σ`.
    pub predicted: f64,
    /// Control column: acceptance at the unscaled (largest-`m`-of-one)
    /// step size, which decays as `m` grows.
    pub fixed_h_observed: f64,
}

/// Acceptance of an HMC chain at stationarity.
fn observed_acceptance<S: SeparableSystem + ?Sized>(
    sys: &S,
    scheme: &SplittingScheme,
    lambda: f64,
    h: f64,
    transitions: u64,
    seed: u64,
) -> Result<f64, TuningError> {
    let mut rng = Rng::from_seed(seed);
    let d = sys.dim();
    let mut q = vec![0.0; d];
    if !sys.sample_position(&mut rng, &mut q) {
        return Err(TuningError::NoExactSampler);
    }
    // Step sizes beyond the duration degrade to one-step legs.
    let cfg = ChainConfig::new(lambda.max(h), h, seed);
    let mut state = PhaseState { q, p: vec![0.0; d] };
    let mut accepted = 0u64;
    for _ in 0..transitions {
        let rec = hmc_transition(sys, scheme, &cfg, &state, &mut rng);
        if rec.accepted {
            accepted += 1;
        }
        state = rec.state;
    }
    Ok(accepted as f64 / transitions as f64)
}

/// Run the product-target scaling experiment.
///
/// For each copy count the step size follows the scaling law, the chain is
/// started at stationarity, and the observed acceptance is compared with
/// the limit predicted from `Σ̂` estimated on the base target.
#[allow(clippy::too_many_arguments)]
pub fn scaling_experiment<T>(
    base: &T,
    scheme: &SplittingScheme,
    ell: f64,
    nu: u32,
    m_list: &[usize],
    lambda: f64,
    n_samples: u64,
    seed: u64,
) -> Result<(f64, Vec<ScalingRow>), TuningError>
where
    T: SeparableSystem + Clone,
{
    let mut rng = Rng::from_seed(derive_seed(seed, 0));
    let probe_h = lambda / 64.0;
    let moments = estimate_sigma(
        base,
        scheme,
        lambda,
        nu,
        probe_h,
        n_samples.max(20_000),
        &mut rng,
    )?;
    let sigma_big = moments.sigma_big_hat;

    let fixed_h = ScalingLaw {
        ell,
        nu,
        m: m_list.first().copied().unwrap_or(1),
    }
    .h();

    let mut rows = Vec::with_capacity(m_list.len());
    for (i, &m) in m_list.iter().enumerate() {
        let law = ScalingLaw { ell, nu, m };
        let h = law.h();
        let product = crate::targets::ProductTarget::new(base.clone(), m);
        let observed = observed_acceptance(
            &product,
            scheme,
            lambda,
            h,
            n_samples,
            derive_seed(seed, 1 + i as u64),
        )?;
        let fixed_h_observed = observed_acceptance(
            &product,
            scheme,
            lambda,
            fixed_h,
            n_samples,
            derive_seed(seed, 101 + i as u64),
        )?;
        rows.push(ScalingRow {
            m,
            h,
            observed,
            predicted: acceptance_limit(ell, nu, sigma_big),
            fixed_h_observed,
        });
    }
    Ok((sigma_big, rows))
}

/// Options for the empirical step-size tuner.
#[derive(Clone, Copy, Debug)]
pub struct TuneOptions {
    pub pilot_transitions: u64,
    pub max_pilots: u32,
    /// Starting guess for the step size.
    pub h_init: f64,
    /// Bracket width below which the search stops.
    pub width_tol: f64,
    /// z-score for the acceptance confidence interval.
    pub z: f64,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            pilot_transitions: 2000,
            max_pilots: 60,
            h_init: 0.5,
            width_tol: 1e-3,
            z: 2.0,
        }
    }
}

/// Result of [`tune_h`].
#[derive(Clone, Copy, Debug)]
pub struct TuneResult {
    pub h: f64,
    pub observed: f64,
    /// False when the search failed to bracket the target acceptance; the
    /// returned `h` is then the best pilot seen.
    pub bracketed: bool,
    pub n_pilots: u32,
}

/// Stochastic bisection on the step size until the observed acceptance of
/// short pilot runs matches the target.
///
/// Acceptance is treated as decreasing in `h`; a violated bracket is
/// widened rather than trusted. Each pilot uses a seed derived from `seed`
/// so the whole search is reproducible.
pub fn tune_h<S: SeparableSystem + ?Sized>(
    sys: &S,
    scheme: &SplittingScheme,
    lambda: f64,
    target_acceptance: f64,
    seed: u64,
    opts: TuneOptions,
) -> Result<TuneResult, TuningError> {
    if !(target_acceptance > 0.0 && target_acceptance < 1.0) {
        return Err(TuningError::Domain("target acceptance must lie in (0, 1)"));
    }
    let mut pilots = 0u32;
    let mut best = (opts.h_init, f64::INFINITY, 0.0);
    let run = |h: f64, pilots: &mut u32| -> Result<f64, TuningError> {
        let acc = observed_acceptance(
            sys,
            scheme,
            lambda,
            h,
            opts.pilot_transitions,
            derive_seed(seed, *pilots as u64),
        )?;
        *pilots += 1;
        Ok(acc)
    };

    // Find the bracket: lo with acceptance above target, hi below.
    let mut h_lo = opts.h_init;
    let mut acc_lo = run(h_lo, &mut pilots)?;
    while acc_lo < target_acceptance && pilots < opts.max_pilots {
        h_lo /= 2.0;
        acc_lo = run(h_lo, &mut pilots)?;
    }
    if acc_lo < target_acceptance {
        return Ok(TuneResult {
            h: h_lo,
            observed: acc_lo,
            bracketed: false,
            n_pilots: pilots,
        });
    }
    let mut h_hi = h_lo * 2.0;
    let mut acc_hi = run(h_hi, &mut pilots)?;
    while acc_hi >= target_acceptance && pilots < opts.max_pilots {
        h_hi *= 2.0;
        acc_hi = run(h_hi, &mut pilots)?;
    }
    if acc_hi >= target_acceptance {
        // Acceptance never dropped below the target within the cap.
        return Ok(TuneResult {
            h: h_hi,
            observed: acc_hi,
            bracketed: false,
            n_pilots: pilots,
        });
    }

    let se_cap = opts.z * math::sqrt(0.25 / opts.pilot_transitions as f64);
    let mut result = (0.5 * (h_lo + h_hi), f64::NAN);
    while pilots < opts.max_pilots {
        let mid = 0.5 * (h_lo + h_hi);
        let acc = run(mid, &mut pilots)?;
        let gap = math::abs(acc - target_acceptance);
        if gap < math::abs(best.1) {
            best = (mid, acc - target_acceptance, acc);
        }
        result = (mid, acc);
        let se =
            opts.z * math::sqrt((acc * (1.0 - acc)).max(1e-12) / opts.pilot_transitions as f64);
        if gap <= se.max(se_cap / 4.0) || (h_hi - h_lo) < opts.width_tol {
            return Ok(TuneResult {
                h: mid,
                observed: acc,
                bracketed: true,
                n_pilots: pilots,
            });
        }
        if acc > target_acceptance {
            h_lo = mid;
        } else {
            h_hi = mid;
        }
    }
    Ok(TuneResult {
        h: result.0,
        observed: if result.1.is_nan() { best.2 } else { result.1 },
        bracketed: true,
        n_pilots: pilots,
    })
}
