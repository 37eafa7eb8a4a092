//! The HMC Markov-chain family.
//!
//! All variants share the same skeleton: refresh the momentum, integrate a
//! leg with a reversible volume-preserving scheme, accept the endpoint with
//! probability `min(1, exp(-ΔH))` and on rejection keep the position while
//! flipping the refreshed momentum. The variants differ in how the leg
//! length is chosen (fixed, geometric step count, randomized step size),
//! how the momentum is refreshed (full or partial), and whether extension
//! legs grant extra acceptance chances.

use alloc::vec;
use alloc::vec::Vec;

use crate::integrators::{leg, LegResult, PhaseState, SeparableSystem};
use crate::math;
use crate::rng::Rng;
use crate::stats::RunStats;
use crate::targets::GaussianTarget;

/// How the duration of an integration leg is randomized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DurationMode {
    /// `n = floor(lambda/h)` steps at step size `h`.
    FixedSteps,
    /// Fixed step count, step size drawn uniformly from
    /// `[(1-delta) h, (1+delta) h]` once per leg.
    UniformStep { delta: f64 },
    /// Geometric number of steps on `{1, 2, ...}` with mean `lambda/h`.
    GeometricSteps,
}

/// Sampler parameters shared by the chain variants.
#[derive(Clone, Copy, Debug)]
pub struct ChainConfig {
    /// Leg duration in time units.
    pub lambda: f64,
    /// Step size.
    pub h: f64,
    pub duration: DurationMode,
    /// Partial-refresh angle for GHMC; `pi/2` recovers full refresh.
    pub ghmc_phi: f64,
    /// Number of extension legs for XHMC; 0 recovers plain HMC.
    pub extra_chances: usize,
    pub seed: u64,
}

impl ChainConfig {
    pub fn new(lambda: f64, h: f64, seed: u64) -> Self {
        ChainConfig {
            lambda,
            h,
            duration: DurationMode::FixedSteps,
            ghmc_phi: math::PI / 2.0,
            extra_chances: 0,
            seed,
        }
    }

    /// The one-step-per-leg special case.
    pub fn mala(h: f64, seed: u64) -> Self {
        ChainConfig::new(h, h, seed)
    }

    pub fn n_steps(&self) -> u64 {
        math::floor(self.lambda / self.h) as u64
    }

    // `!(x > 0)` rather than `x <= 0` so that NaN inputs are rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.lambda > 0.0) {
            return Err(ConfigError::new("lambda", "must be positive"));
        }
        if !(self.h > 0.0) {
            return Err(ConfigError::new("h", "must be positive"));
        }
        if self.n_steps() < 1 {
            return Err(ConfigError::new("h", "floor(lambda/h) must be at least 1"));
        }
        if let DurationMode::UniformStep { delta } = self.duration {
            if !(0.0..1.0).contains(&delta) {
                return Err(ConfigError::new("delta", "must lie in [0, 1)"));
            }
        }
        if !(self.ghmc_phi > 0.0 && self.ghmc_phi <= math::PI / 2.0) {
            return Err(ConfigError::new(
                "ghmc_phi",
                "must lie in (0, pi/2]; zero is excluded because the chain would never mix momenta",
            ));
        }
        Ok(())
    }
}

/// A named-field validation error.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub field: &'static str,
    pub message: &'static str,
}

impl ConfigError {
    fn new(field: &'static str, message: &'static str) -> Self {
        ConfigError { field, message }
    }
}

impl core::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "invalid {}: {}", self.field, self.message)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ConfigError {}

/// Outcome of one Markov transition.
#[derive(Clone, Debug)]
pub struct TransitionRecord {
    pub accepted: bool,
    /// Energy error of the evaluated proposal (`+inf` when diverged).
    pub delta_h: f64,
    pub state: PhaseState,
    pub n_force_evals: u64,
}

/// Draw a fresh momentum `ξ ~ N(0, M)`.
pub fn refresh_momentum<S: SeparableSystem + ?Sized>(sys: &S, rng: &mut Rng) -> Vec<f64> {
    let mut xi = vec![0.0; sys.dim()];
    rng.fill_normal(&mut xi);
    sys.momentum_factor(&mut xi);
    xi
}

/// Partial momentum refresh `p <- cos(phi) p + sin(phi) ξ`.
///
/// `phi = pi/2` recovers the full refresh; `phi = 0` is rejected at
/// configuration time because it would freeze the momenta.
pub fn ghmc_refresh<S: SeparableSystem + ?Sized>(
    sys: &S,
    p: &[f64],
    phi: f64,
    rng: &mut Rng,
) -> Vec<f64> {
    let xi = refresh_momentum(sys, rng);
    if phi >= math::PI / 2.0 {
        return xi;
    }
    let (c, s) = (math::cos(phi), math::sin(phi));
    p.iter()
        .zip(xi.iter())
        .map(|(pi, xii)| c * pi + s * xii)
        .collect()
}

fn accept_reject(
    rng: &mut Rng,
    start_q: &[f64],
    xi: &[f64],
    result: LegResult,
) -> TransitionRecord {
    let alpha = if result.delta_h <= 0.0 {
        1.0
    } else {
        math::exp(-result.delta_h)
    };
    let accepted = rng.uniform() < alpha;
    let state = if accepted {
        result.state
    } else {
        PhaseState {
            q: start_q.to_vec(),
            p: xi.iter().map(|x| -x).collect(),
        }
    };
    TransitionRecord {
        accepted,
        delta_h: result.delta_h,
        state,
        n_force_evals: result.n_force_evals,
    }
}

/// One transition of plain HMC (or GHMC when `cfg.ghmc_phi < pi/2`).
pub fn hmc_transition<S: SeparableSystem + ?Sized>(
    sys: &S,
    scheme: &crate::schemes::SplittingScheme,
    cfg: &ChainConfig,
    state: &PhaseState,
    rng: &mut Rng,
) -> TransitionRecord {
    let xi = if cfg.ghmc_phi >= math::PI / 2.0 {
        refresh_momentum(sys, rng)
    } else {
        ghmc_refresh(sys, &state.p, cfg.ghmc_phi, rng)
    };
    let start = PhaseState {
        q: state.q.clone(),
        p: xi.clone(),
    };
    let result = leg(sys, scheme, cfg.h, cfg.n_steps(), &start);
    accept_reject(rng, &state.q, &xi, result)
}

/// One transition with a geometric number of steps (mean `lambda/h`).
pub fn rhmc_transition<S: SeparableSystem + ?Sized>(
    sys: &S,
    scheme: &crate::schemes::SplittingScheme,
    cfg: &ChainConfig,
    state: &PhaseState,
    rng: &mut Rng,
) -> TransitionRecord {
    let m = rng.geometric_from_one(cfg.h / cfg.lambda);
    let xi = refresh_momentum(sys, rng);
    let start = PhaseState {
        q: state.q.clone(),
        p: xi.clone(),
    };
    let result = leg(sys, scheme, cfg.h, m, &start);
    accept_reject(rng, &state.q, &xi, result)
}

/// One transition with the step size drawn uniformly from
/// `[(1-delta) h, (1+delta) h]` and a fixed step count.
pub fn uniform_h_transition<S: SeparableSystem + ?Sized>(
    sys: &S,
    scheme: &crate::schemes::SplittingScheme,
    cfg: &ChainConfig,
    state: &PhaseState,
    rng: &mut Rng,
) -> TransitionRecord {
    let delta = match cfg.duration {
        DurationMode::UniformStep { delta } => delta,
        _ => 0.1,
    };
    // delta = 0 reduces exactly to the fixed-step transition, including the
    // random stream.
    let step = if delta == 0.0 {
        cfg.h
    } else {
        rng.uniform_in((1.0 - delta) * cfg.h, (1.0 + delta) * cfg.h)
    };
    let xi = refresh_momentum(sys, rng);
    let start = PhaseState {
        q: state.q.clone(),
        p: xi.clone(),
    };
    // A drawn step beyond any stability bound is still run; instability
    // surfaces as a rejected (possibly diverged) proposal.
    let result = leg(sys, scheme, step, cfg.n_steps(), &start);
    accept_reject(rng, &state.q, &xi, result)
}

/// One extra-chance transition: extension legs `Ψ^j` are evaluated lazily
/// and the `j`-th is selected with probability `Γ^j - Γ^{j-1}`, where
/// `Γ^j` is the running maximum of the acceptance ratios.
pub fn xhmc_transition<S: SeparableSystem + ?Sized>(
    sys: &S,
    scheme: &crate::schemes::SplittingScheme,
    cfg: &ChainConfig,
    state: &PhaseState,
    rng: &mut Rng,
) -> TransitionRecord {
    let chances = cfg.extra_chances.max(1);
    let xi = refresh_momentum(sys, rng);
    let start = PhaseState {
        q: state.q.clone(),
        p: xi.clone(),
    };
    let n = cfg.n_steps();
    let u = rng.uniform();

    let mut gamma = 0.0f64;
    let mut current = start;
    let mut delta_total = 0.0f64;
    let mut force_evals = 0u64;
    let mut last_delta = f64::INFINITY;

    for _ in 1..=chances {
        let result = leg(sys, scheme, cfg.h, n, &current);
        force_evals += result.n_force_evals;
        if result.diverged {
            // A diverged extension contributes nothing to Γ, and neither
            // would any later one; stop extending.
            last_delta = f64::INFINITY;
            break;
        }
        delta_total += result.delta_h;
        current = result.state;
        last_delta = delta_total;
        let alpha = if delta_total <= 0.0 {
            1.0
        } else {
            math::exp(-delta_total)
        };
        gamma = gamma.max(alpha);
        if u < gamma {
            return TransitionRecord {
                accepted: true,
                delta_h: delta_total,
                state: current,
                n_force_evals: force_evals,
            };
        }
    }

    TransitionRecord {
        accepted: false,
        delta_h: last_delta,
        state: PhaseState {
            q: state.q.clone(),
            p: xi.iter().map(|x| -x).collect(),
        },
        n_force_evals: force_evals,
    }
}

/// Duration convention for the exact-flow sampler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExactDuration {
    Fixed(f64),
    /// Exponential with the given mean.
    Exponential(f64),
}

/// Exact-flow HMC transition, available for Gaussian targets only.
///
/// The flow conserves the Hamiltonian, so every proposal is accepted; the
/// reported `delta_h` is the round-off residual.
pub fn exact_hmc_transition(
    target: &GaussianTarget,
    duration: ExactDuration,
    state: &PhaseState,
    rng: &mut Rng,
) -> TransitionRecord {
    let time = match duration {
        ExactDuration::Fixed(lambda) => lambda,
        ExactDuration::Exponential(lambda) => rng.exponential(lambda),
    };
    let xi = refresh_momentum(target, rng);
    let start = PhaseState {
        q: state.q.clone(),
        p: xi,
    };
    let h0 = target.hamiltonian(&start);
    let moved = target.exact_flow(time, &start);
    let delta_h = target.hamiltonian(&moved) - h0;
    TransitionRecord {
        accepted: true,
        delta_h,
        state: moved,
        n_force_evals: 0,
    }
}

/// Which transition kernel a chain uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainVariant {
    Hmc,
    Rhmc,
    UniformStep,
    Ghmc,
    Xhmc,
}

pub fn transition<S: SeparableSystem + ?Sized>(
    sys: &S,
    scheme: &crate::schemes::SplittingScheme,
    variant: ChainVariant,
    cfg: &ChainConfig,
    state: &PhaseState,
    rng: &mut Rng,
) -> TransitionRecord {
    match variant {
        ChainVariant::Hmc | ChainVariant::Ghmc => hmc_transition(sys, scheme, cfg, state, rng),
        ChainVariant::Rhmc => rhmc_transition(sys, scheme, cfg, state, rng),
        ChainVariant::UniformStep => uniform_h_transition(sys, scheme, cfg, state, rng),
        ChainVariant::Xhmc => xhmc_transition(sys, scheme, cfg, state, rng),
    }
}

/// Iterate a chain for `n` transitions, streaming each record to `sink`
/// and accumulating summary statistics.
///
/// The observable tracked for autocorrelation is the first coordinate of
/// `q`; use [`run_chain_observing`] to choose another one.
pub fn run_chain<S, F>(
    sys: &S,
    scheme: &crate::schemes::SplittingScheme,
    variant: ChainVariant,
    cfg: &ChainConfig,
    init: PhaseState,
    n: u64,
    sink: F,
) -> RunStats
where
    S: SeparableSystem + ?Sized,
    F: FnMut(u64, &TransitionRecord),
{
    run_chain_observing(sys, scheme, variant, cfg, init, n, 0, 1, sink)
}

#[allow(clippy::too_many_arguments)]
pub fn run_chain_observing<S, F>(
    sys: &S,
    scheme: &crate::schemes::SplittingScheme,
    variant: ChainVariant,
    cfg: &ChainConfig,
    init: PhaseState,
    n: u64,
    observable_index: usize,
    max_lag: usize,
    mut sink: F,
) -> RunStats
where
    S: SeparableSystem + ?Sized,
    F: FnMut(u64, &TransitionRecord),
{
    cfg.validate().expect("invalid chain configuration");
    // The min(1, e^{-dH}) acceptance rule is only correct for reversible,
    // volume-preserving proposals.
    debug_assert!(
        scheme.is_palindromic(),
        "chain transitions need a palindromic scheme"
    );
    let mut rng = Rng::from_seed(cfg.seed);
    let mut stats = RunStats::new(sys.dim(), observable_index, max_lag);
    let mut state = init;
    for i in 0..n {
        let record = transition(sys, scheme, variant, cfg, &state, &mut rng);
        stats.record(record.accepted, record.delta_h, &record.state.q);
        sink(i, &record);
        state = record.state;
    }
    stats
}

/// Exact-flow chain for Gaussian targets (always accepts).
pub fn run_exact_chain<F>(
    target: &GaussianTarget,
    duration: ExactDuration,
    seed: u64,
    init: PhaseState,
    n: u64,
    max_lag: usize,
    mut sink: F,
) -> RunStats
where
    F: FnMut(u64, &TransitionRecord),
{
    let mut rng = Rng::from_seed(seed);
    let mut stats = RunStats::new(target.dim(), 0, max_lag);
    let mut state = init;
    for i in 0..n {
        let record = exact_hmc_transition(target, duration, &state, &mut rng);
        stats.record(record.accepted, record.delta_h, &record.state.q);
        sink(i, &record);
        state = record.state;
    }
    stats
}
