//! Splitting schemes as ordered drift/kick coefficient sequences.
//!
//! A scheme is stored in application order: the first entry is the flow
//! applied first within a step. Coefficients are dimensionless fractions of
//! the step size; consistency requires the drift fractions and the kick
//! fractions to each sum to one.

use alloc::vec::Vec;

use crate::math;

/// Which split flow a coefficient belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowKind {
    /// Position update `q <- q + t M⁻¹ p`.
    Drift,
    /// Momentum update `p <- p + t F(q)`.
    Kick,
}

/// Errors from scheme construction.
#[derive(Clone, Debug, PartialEq)]
pub enum SchemeError {
    /// Drift or kick fractions do not sum to one.
    Inconsistent { drift_sum: f64, kick_sum: f64 },
    /// A named constructor was given a parameter outside its domain.
    InvalidParameter(&'static str),
}

impl core::fmt::Display for SchemeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SchemeError::Inconsistent {
                drift_sum,
                kick_sum,
            } => write!(
                f,
                "inconsistent scheme: drift fractions sum to {drift_sum}, kick fractions to {kick_sum}"
            ),
            SchemeError::InvalidParameter(what) => write!(f, "invalid scheme parameter: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SchemeError {}

const CONSISTENCY_TOL: f64 = 1e-14;

/// An ordered splitting scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct SplittingScheme {
    flows: Vec<(FlowKind, f64)>,
}

impl SplittingScheme {
    /// Build a scheme from flows in application order, checking consistency.
    pub fn from_flows(flows: Vec<(FlowKind, f64)>) -> Result<Self, SchemeError> {
        let drift_sum: f64 = flows
            .iter()
            .filter(|(k, _)| *k == FlowKind::Drift)
            .map(|(_, c)| *c)
            .sum();
        let kick_sum: f64 = flows
            .iter()
            .filter(|(k, _)| *k == FlowKind::Kick)
            .map(|(_, c)| *c)
            .sum();
        if math::abs(drift_sum - 1.0) > CONSISTENCY_TOL
            || math::abs(kick_sum - 1.0) > CONSISTENCY_TOL
        {
            return Err(SchemeError::Inconsistent {
                drift_sum,
                kick_sum,
            });
        }
        Ok(SplittingScheme { flows })
    }

    /// Flows in application order.
    pub fn flows(&self) -> &[(FlowKind, f64)] {
        &self.flows
    }

    /// The sequence with zero coefficients dropped and adjacent flows of the
    /// same kind merged.
    pub fn canonical_flows(&self) -> Vec<(FlowKind, f64)> {
        let mut out: Vec<(FlowKind, f64)> = Vec::with_capacity(self.flows.len());
        for &(kind, c) in &self.flows {
            if c == 0.0 {
                continue;
            }
            match out.last_mut() {
                Some((k, acc)) if *k == kind => *acc += c,
                _ => out.push((kind, c)),
            }
        }
        out
    }

    /// Number of force evaluations per step in steady state, i.e. with the
    /// trailing kick of one step merged into the leading kick of the next.
    pub fn stages(&self) -> usize {
        let canon = self.canonical_flows();
        let kicks = canon.iter().filter(|(k, _)| *k == FlowKind::Kick).count();
        let wraps = matches!(canon.first(), Some((FlowKind::Kick, _)))
            && matches!(canon.last(), Some((FlowKind::Kick, _)))
            && canon.len() > 1;
        if wraps {
            kicks - 1
        } else {
            kicks
        }
    }

    /// True when the canonical sequence reads the same in both directions.
    ///
    /// Palindromic schemes are symmetric, hence reversible and of even order.
    pub fn is_palindromic(&self) -> bool {
        let canon = self.canonical_flows();
        let n = canon.len();
        for i in 0..n / 2 {
            let (ka, ca) = canon[i];
            let (kb, cb) = canon[n - 1 - i];
            if ka != kb || math::abs(ca - cb) > CONSISTENCY_TOL {
                return false;
            }
        }
        true
    }

    /// Lie–Trotter: one full drift followed by one full kick.
    pub fn lie_trotter() -> Self {
        SplittingScheme {
            flows: alloc::vec![(FlowKind::Drift, 1.0), (FlowKind::Kick, 1.0)],
        }
    }

    /// Strang splitting starting and ending with a kick.
    pub fn velocity_verlet() -> Self {
        SplittingScheme {
            flows: alloc::vec![
                (FlowKind::Kick, 0.5),
                (FlowKind::Drift, 1.0),
                (FlowKind::Kick, 0.5),
            ],
        }
    }

    /// Strang splitting starting and ending with a drift.
    pub fn position_verlet() -> Self {
        SplittingScheme {
            flows: alloc::vec![
                (FlowKind::Drift, 0.5),
                (FlowKind::Kick, 1.0),
                (FlowKind::Drift, 0.5),
            ],
        }
    }

    /// Palindromic two-stage family `(b, 1/2, 1-2b, 1/2, b)`.
    pub fn two_stage(b: f64) -> Result<Self, SchemeError> {
        if !b.is_finite() {
            return Err(SchemeError::InvalidParameter("two_stage b must be finite"));
        }
        Ok(SplittingScheme {
            flows: alloc::vec![
                (FlowKind::Kick, b),
                (FlowKind::Drift, 0.5),
                (FlowKind::Kick, 1.0 - 2.0 * b),
                (FlowKind::Drift, 0.5),
                (FlowKind::Kick, b),
            ],
        })
    }

    /// Palindromic three-stage family `(b, a, 1/2-b, 1-2a, 1/2-b, a, b)`.
    pub fn three_stage(a: f64, b: f64) -> Result<Self, SchemeError> {
        if !a.is_finite() || !b.is_finite() {
            return Err(SchemeError::InvalidParameter(
                "three_stage a, b must be finite",
            ));
        }
        Ok(SplittingScheme {
            flows: alloc::vec![
                (FlowKind::Kick, b),
                (FlowKind::Drift, a),
                (FlowKind::Kick, 0.5 - b),
                (FlowKind::Drift, 1.0 - 2.0 * a),
                (FlowKind::Kick, 0.5 - b),
                (FlowKind::Drift, a),
                (FlowKind::Kick, b),
            ],
        })
    }

    /// Two-stage scheme with the minimax coefficient `b = (3-sqrt(3))/6`.
    pub fn blanes_two_stage() -> Self {
        let b = (3.0 - math::sqrt(3.0)) / 6.0;
        Self::two_stage(b).expect("coefficient is finite")
    }

    /// Three-stage scheme minimizing the worst-case energy-error function
    /// over step sizes up to three.
    pub fn blanes_three_stage() -> Self {
        Self::three_stage(0.296_195_042_611_26, 0.118_880_109_665_48).expect("finite")
    }

    /// `n` velocity-Verlet substeps of length `h/n` merged into one scheme.
    pub fn verlet_concat(n: usize) -> Result<Self, SchemeError> {
        if n < 1 {
            return Err(SchemeError::InvalidParameter("verlet_concat needs n >= 1"));
        }
        let nf = n as f64;
        let mut flows = Vec::with_capacity(2 * n + 1);
        flows.push((FlowKind::Kick, 0.5 / nf));
        for i in 0..n {
            flows.push((FlowKind::Drift, 1.0 / nf));
            let kick = if i + 1 == n { 0.5 / nf } else { 1.0 / nf };
            flows.push((FlowKind::Kick, kick));
        }
        Ok(SplittingScheme { flows })
    }
}
