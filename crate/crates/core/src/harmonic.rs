//! Closed-form analysis of splitting integrators on the harmonic oscillator.
//!
//! For the unit oscillator `dq/dt = p`, `dp/dt = -q` every scheme advances
//! the solution by a 2×2 matrix. Stable steps admit rotation parameters
//! `theta` (angle per step) and `chi` (axis ratio of the invariant ellipse);
//! `rho = (chi - 1/chi)²/2` bounds the expected energy error at
//! stationarity and is the quantity the optimized schemes minimize.

use crate::math;
use crate::schemes::{FlowKind, SplittingScheme};

/// One-step propagation matrix `[[a, b], [c, d]]` on the unit oscillator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl StepMatrix {
    pub const IDENTITY: StepMatrix = StepMatrix {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// `self * rhs` (apply `rhs` first).
    pub fn mul(&self, rhs: &StepMatrix) -> StepMatrix {
        StepMatrix {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn apply(&self, q: f64, p: f64) -> (f64, f64) {
        (self.a * q + self.b * p, self.c * q + self.d * p)
    }

    fn drift(t: f64) -> StepMatrix {
        StepMatrix {
            a: 1.0,
            b: t,
            c: 0.0,
            d: 1.0,
        }
    }

    fn kick(t: f64) -> StepMatrix {
        StepMatrix {
            a: 1.0,
            b: 0.0,
            c: -t,
            d: 1.0,
        }
    }
}

/// Stability classification of a step matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StabilityClass {
    /// `|a| < 1`: powers stay bounded, rotation parameters exist.
    Stable,
    /// `|a| = 1` with `b = c = 0`: the matrix is `±I`; `chi` is
    /// indeterminate and is reported by a one-sided limit when a scheme
    /// context is available.
    StableDegenerate,
    /// `|a| = 1` with `|b| + |c| > 0`: powers grow linearly.
    WeaklyUnstable,
    /// `|a| > 1`: powers grow exponentially.
    Unstable,
}

impl StabilityClass {
    pub fn is_stable(self) -> bool {
        matches!(
            self,
            StabilityClass::Stable | StabilityClass::StableDegenerate
        )
    }
}

/// Rotation parameters of a stable reversible symplectic step.
#[derive(Clone, Copy, Debug)]
pub struct RotationParams {
    /// Rotation angle per step, in `(0, pi)` for the plainly stable case.
    pub theta: f64,
    /// Axis ratio of the invariant ellipse; 1 means no energy error.
    pub chi: f64,
    pub class: StabilityClass,
}

/// Errors from the harmonic-analysis operations.
#[derive(Clone, Debug, PartialEq)]
pub enum HarmonicError {
    /// The scheme is unstable at the requested step size.
    Unstable { h: f64 },
    /// One frequency of a multivariate bound is unstable.
    UnstableMode { index: usize, scaled_h: f64 },
    /// Parameters outside the admissible domain.
    Domain(&'static str),
}

impl core::fmt::Display for HarmonicError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            HarmonicError::Unstable { h } => write!(f, "unstable at step size h = {h}"),
            HarmonicError::UnstableMode { index, scaled_h } => {
                write!(f, "mode {index} unstable (scaled step {scaled_h})")
            }
            HarmonicError::Domain(what) => write!(f, "domain error: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for HarmonicError {}

/// Propagation matrix of a splitting scheme on the unit oscillator.
pub fn harmonic_step_matrix(scheme: &SplittingScheme, h: f64) -> StepMatrix {
    let mut m = StepMatrix::IDENTITY;
    for &(kind, coeff) in scheme.flows() {
        if coeff == 0.0 {
            continue;
        }
        let factor = match kind {
            FlowKind::Drift => StepMatrix::drift(coeff * h),
            FlowKind::Kick => StepMatrix::kick(coeff * h),
        };
        m = factor.mul(&m);
    }
    m
}

/// Reference one-step methods kept for comparison purposes only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceMethod {
    /// Explicit Euler; unstable for every positive step size.
    Euler,
    /// Implicit midpoint; stable for every step size.
    Midpoint,
}

pub fn reference_matrix(method: ReferenceMethod, h: f64) -> StepMatrix {
    match method {
        ReferenceMethod::Euler => StepMatrix {
            a: 1.0,
            b: h,
            c: -h,
            d: 1.0,
        },
        ReferenceMethod::Midpoint => {
            let s = 1.0 + h * h / 4.0;
            StepMatrix {
                a: (1.0 - h * h / 4.0) / s,
                b: h / s,
                c: -h / s,
                d: (1.0 - h * h / 4.0) / s,
            }
        }
    }
}

/// Classify a step matrix without computing rotation parameters.
pub fn classify(m: &StepMatrix) -> StabilityClass {
    let abs_a = math::abs(m.a);
    if abs_a < 1.0 {
        StabilityClass::Stable
    } else if abs_a == 1.0 {
        if m.b == 0.0 && m.c == 0.0 {
            StabilityClass::StableDegenerate
        } else {
            StabilityClass::WeaklyUnstable
        }
    } else {
        StabilityClass::Unstable
    }
}

/// Rotation parameters of a step matrix.
///
/// In the degenerate `±I` case `chi` carries no information from the matrix
/// alone and is reported as 1; [`scheme_rotation_params`] resolves it by a
/// one-sided limit instead.
pub fn rotation_params(m: &StepMatrix) -> RotationParams {
    let class = classify(m);
    match class {
        StabilityClass::Stable => {
            let theta = math::acos(m.a);
            // For a unit-determinant matrix with a = d, 1 - a² = -bc, which
            // avoids the cancellation in 1 - a² as h -> 0.
            let reversible = math::abs(m.det() - 1.0) <= 1e-9 && math::abs(m.a - m.d) <= 1e-9;
            let chi = if reversible && m.b * m.c < 0.0 {
                let magnitude = math::sqrt(-m.b / m.c);
                if m.b >= 0.0 {
                    magnitude
                } else {
                    -magnitude
                }
            } else {
                m.b / math::sin(theta)
            };
            RotationParams { theta, chi, class }
        }
        StabilityClass::StableDegenerate => RotationParams {
            theta: if m.a > 0.0 { 0.0 } else { math::PI },
            chi: 1.0,
            class,
        },
        _ => RotationParams {
            theta: f64::NAN,
            chi: f64::NAN,
            class,
        },
    }
}

/// Rotation parameters of a scheme at step size `h`.
///
/// When the step matrix is exactly `±I` the indeterminate `chi` is resolved
/// by evaluating just below `h`; the returned class still flags the
/// degeneracy.
pub fn scheme_rotation_params(scheme: &SplittingScheme, h: f64) -> RotationParams {
    let m = harmonic_step_matrix(scheme, h);
    let params = rotation_params(&m);
    if params.class == StabilityClass::StableDegenerate {
        let m_minus = harmonic_step_matrix(scheme, h * (1.0 - 1e-7));
        let limit = rotation_params(&m_minus);
        if limit.class == StabilityClass::Stable {
            return RotationParams {
                theta: params.theta,
                chi: limit.chi,
                class: StabilityClass::StableDegenerate,
            };
        }
    }
    params
}

fn rho_of_chi(chi: f64) -> f64 {
    let x = chi - 1.0 / chi;
    0.5 * x * x
}

/// Expected-energy-error function `rho(h) = (chi - 1/chi)²/2`.
pub fn rho(scheme: &SplittingScheme, h: f64) -> Result<f64, HarmonicError> {
    let params = scheme_rotation_params(scheme, h);
    if params.class.is_stable() {
        Ok(rho_of_chi(params.chi))
    } else {
        Err(HarmonicError::Unstable { h })
    }
}

/// Closed form of `rho` for the palindromic two-stage family.
///
/// Valid where all three denominator factors are positive, which is exactly
/// the stability region of the family.
pub fn rho_two_stage_closed(b: f64, h: f64) -> Result<f64, HarmonicError> {
    let h2 = h * h;
    let d1 = 2.0 - b * h2;
    let d2 = 2.0 - (0.5 - b) * h2;
    let d3 = 1.0 - b * (0.5 - b) * h2;
    if d1 <= 0.0 || d2 <= 0.0 || d3 <= 0.0 {
        return Err(HarmonicError::Unstable { h });
    }
    let num = 2.0 * b * b * (0.5 - b) * h2 + 4.0 * b * b - 6.0 * b + 1.0;
    let h4 = h2 * h2;
    Ok(h4 * num * num / (8.0 * d1 * d2 * d3))
}

/// Which boundary of `|A_h| = 1` terminates the stability interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StabilityBoundary {
    /// Stability lost through `A_h = +1`.
    Plus,
    /// Stability lost through `A_h = -1`.
    Minus,
}

/// Result of a stability-interval scan.
#[derive(Clone, Copy, Debug)]
pub struct StabilityScan {
    /// Largest step size below which all scanned steps are stable.
    pub h_max: f64,
    /// Boundary crossed at `h_max`; `None` when censored.
    pub boundary: Option<StabilityBoundary>,
    /// True when no instability was found below the scan limit.
    pub censored: bool,
}

pub const STABILITY_SCAN_POINTS: usize = 10_000;

fn is_unstable_matrix(m: &StepMatrix) -> bool {
    !classify(m).is_stable()
}

/// Locate the stability interval `(0, h_max)` by a dense scan followed by
/// bisection to tolerance `tol`.
pub fn stability_interval(scheme: &SplittingScheme, scan_limit: f64, tol: f64) -> StabilityScan {
    assert!(scan_limit > 0.0 && tol > 0.0);
    let n = STABILITY_SCAN_POINTS;
    let mut prev = 0.0;
    let mut hit: Option<f64> = None;
    for i in 1..=n {
        let h = scan_limit * i as f64 / n as f64;
        if is_unstable_matrix(&harmonic_step_matrix(scheme, h)) {
            hit = Some(h);
            break;
        }
        prev = h;
    }
    let Some(mut hi) = hit else {
        return StabilityScan {
            h_max: scan_limit,
            boundary: None,
            censored: true,
        };
    };
    let mut lo = prev;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if is_unstable_matrix(&harmonic_step_matrix(scheme, mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let boundary = if harmonic_step_matrix(scheme, hi).a >= 1.0 {
        StabilityBoundary::Plus
    } else {
        StabilityBoundary::Minus
    };
    StabilityScan {
        h_max: 0.5 * (lo + hi),
        boundary: Some(boundary),
        censored: false,
    }
}

/// Maximum of `rho` over a uniform grid on `(0, c]`.
///
/// Returns `+inf` if any grid point is unstable, so the value can be
/// minimized without special-casing instability.
pub fn sup_rho(scheme: &SplittingScheme, c: f64, grid: usize) -> f64 {
    assert!(c > 0.0 && grid >= 1, "sup_rho needs c > 0 and grid >= 1");
    let mut sup = 0.0f64;
    for i in 1..=grid {
        let h = c * i as f64 / grid as f64;
        match rho(scheme, h) {
            Ok(r) => sup = sup.max(r),
            Err(_) => return f64::INFINITY,
        }
    }
    sup
}

/// Sum of `rho(omega_j h)` over the modes of a multivariate Gaussian model.
pub fn multivariate_energy_bound(
    scheme: &SplittingScheme,
    freqs: &[f64],
    h: f64,
) -> Result<f64, HarmonicError> {
    let mut total = 0.0;
    for (index, &w) in freqs.iter().enumerate() {
        if w <= 0.0 {
            return Err(HarmonicError::Domain("frequencies must be positive"));
        }
        let scaled = w * h;
        total += rho(scheme, scaled).map_err(|_| HarmonicError::UnstableMode {
            index,
            scaled_h: scaled,
        })?;
    }
    Ok(total)
}

/// `R(z) = (1 - z cot z)/z²`, continuously extended by `R(0) = 1/3`.
///
/// A short series is used for small arguments to avoid the cancellation in
/// the direct formula.
pub fn cot_deficit(z: f64) -> f64 {
    let az = math::abs(z);
    if az < 1e-2 {
        let z2 = z * z;
        1.0 / 3.0 + z2 / 45.0 + 2.0 * z2 * z2 / 945.0
    } else {
        (1.0 - z * math::cos(z) / math::sin(z)) / (z * z)
    }
}

/// Stability condition of the preconditioned one-dof model at frequency
/// `omega` with splitting parameter `c`.
pub fn phmc_stable(c: f64, omega: f64, h: f64) -> bool {
    if c == 0.0 {
        h < 2.0 * omega / math::sqrt(1.0 + omega * omega)
    } else {
        let w2 = omega * omega;
        let tilde = 1.0 + (1.0 - c * c) * w2;
        c * h + 2.0 * math::atan(h * tilde / (2.0 * c * w2)) < math::PI
    }
}

/// Closed-form `rho(c, omega, h)` of the preconditioned splitting applied
/// to the one-dof bridge model.
pub fn phmc_rho_closed(c: f64, omega: f64, h: f64) -> Result<f64, HarmonicError> {
    if !(0.0..=1.0).contains(&c) {
        return Err(HarmonicError::Domain("c must lie in [0, 1]"));
    }
    if omega <= 0.0 || h <= 0.0 {
        return Err(HarmonicError::Domain("omega and h must be positive"));
    }
    if !phmc_stable(c, omega, h) {
        return Err(HarmonicError::Unstable { h });
    }
    let wi2 = 1.0 / (omega * omega);
    let base = 1.0 - c * c + wi2;
    let r = 0.25 * base * base + c * c * base * cot_deficit(c * h);
    let one = 1.0 + wi2;
    let denom = one * (one - h * h * r);
    if denom <= 0.0 {
        return Err(HarmonicError::Unstable { h });
    }
    let h2 = h * h;
    Ok(0.5 * h2 * h2 * r * r / denom)
}
