//! Preconditioned HMC for discretized diffusion-bridge path distributions.
//!
//! Paths `u(s)` on `[0, S]` with homogeneous Dirichlet conditions are
//! discretized on `d` interior nodes. The target density is proportional to
//! `exp(-Δs(-u'Lu/2 + Σ g(s_j, u_j)))` with `L` the central-difference
//! Laplacian. Preconditioning with mass matrix `M = -L` turns the free
//! dynamics into unit-frequency oscillations, and the integration runs in
//! the velocity variable `v = -L⁻¹p`: the split system (A) rotates `(u, v)`
//! with frequency `c`, the split system (B) kicks `v` with one tridiagonal
//! solve, and the Strang composition of the two is reversible and
//! volume-preserving.

use alloc::vec;
use alloc::vec::Vec;

use crate::harmonic::{phmc_rho_closed, phmc_stable, HarmonicError};
use crate::linalg::{tridiag_matvec, TriDiagChol};
use crate::math;
use crate::rng::Rng;
use crate::stats::RunStats;

/// Pointwise nonlinearity `g(s, u)` of the path potential, with its
/// `u`-derivative.
pub trait Nonlinearity {
    fn g(&self, s: f64, u: f64) -> f64;
    fn g_prime(&self, s: f64, u: f64) -> f64;
}

/// Ornstein–Uhlenbeck bridge: `g(u) = u²/2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct OuNonlinearity;

impl Nonlinearity for OuNonlinearity {
    fn g(&self, _s: f64, u: f64) -> f64 {
        0.5 * u * u
    }
    fn g_prime(&self, _s: f64, u: f64) -> f64 {
        u
    }
}

/// Free Brownian bridge: `g = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroNonlinearity;

impl Nonlinearity for ZeroNonlinearity {
    fn g(&self, _s: f64, _u: f64) -> f64 {
        0.0
    }
    fn g_prime(&self, _s: f64, _u: f64) -> f64 {
        0.0
    }
}

/// `g` evaluated on a linearly lifted path; see [`boundary_lift`].
#[derive(Clone, Debug)]
pub struct LiftedNonlinearity<G> {
    inner: G,
    x_minus: f64,
    slope: f64,
}

impl<G: Nonlinearity> Nonlinearity for LiftedNonlinearity<G> {
    fn g(&self, s: f64, u: f64) -> f64 {
        self.inner.g(s, u + self.x_minus + self.slope * s)
    }
    fn g_prime(&self, s: f64, u: f64) -> f64 {
        self.inner.g_prime(s, u + self.x_minus + self.slope * s)
    }
}

/// The discrete Laplacian with homogeneous Dirichlet conditions, its
/// factorization and spectrum.
#[derive(Clone, Debug)]
pub struct LaplacianOp {
    d: usize,
    ds: f64,
    /// Diagonal and subdiagonal of `-L` (SPD).
    neg_l_diag: Vec<f64>,
    neg_l_sub: Vec<f64>,
    /// Cholesky factorization of `-L`.
    chol: TriDiagChol,
    /// Eigenvalues of `-L`: `ω_j² = 4/Δs² sin²(jπ/(2(d+1)))`, ascending.
    omega2: Vec<f64>,
}

impl LaplacianOp {
    pub fn new(s_len: f64, d: usize) -> Self {
        assert!(d >= 1 && s_len > 0.0);
        let ds = s_len / (d as f64 + 1.0);
        let neg_l_diag = vec![2.0 / (ds * ds); d];
        let neg_l_sub = vec![-1.0 / (ds * ds); d.saturating_sub(1)];
        let chol = TriDiagChol::new(&neg_l_diag, &neg_l_sub)
            .expect("-L is positive definite for any grid");
        let omega2: Vec<f64> = (1..=d)
            .map(|j| {
                let s = math::sin(j as f64 * math::PI / (2.0 * (d as f64 + 1.0)));
                4.0 / (ds * ds) * s * s
            })
            .collect();
        // The lowest frequency is bounded below by 2/S, so stability does
        // not degrade as the grid is refined.
        debug_assert!(math::sqrt(omega2[0]) >= 2.0 / s_len - 1e-12);
        LaplacianOp {
            d,
            ds,
            neg_l_diag,
            neg_l_sub,
            chol,
            omega2,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn omega2(&self) -> &[f64] {
        &self.omega2
    }

    pub fn omega1(&self) -> f64 {
        math::sqrt(self.omega2[0])
    }

    /// `out = (-L) x`.
    pub fn apply_neg_l(&self, x: &[f64], out: &mut [f64]) {
        tridiag_matvec(&self.neg_l_diag, &self.neg_l_sub, x, out);
    }

    /// Solve `(-L) x = b` in place.
    pub fn solve_neg_l(&self, b: &mut [f64]) {
        self.chol.solve(b);
    }

    /// Quadratic form `xᵀ(-L)x`.
    pub fn quad_neg_l(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.d];
        self.apply_neg_l(x, &mut y);
        crate::linalg::dot(x, &y)
    }

    fn chol(&self) -> &TriDiagChol {
        &self.chol
    }
}

/// Discretized path-sampling problem.
#[derive(Clone, Debug)]
pub struct BridgeModel<G> {
    s_len: f64,
    c: f64,
    g: G,
    lap: LaplacianOp,
    /// Linear-lift values at interior nodes; zero when absent.
    lift: Option<Vec<f64>>,
}

/// Path state in the velocity variables.
#[derive(Clone, Debug, PartialEq)]
pub struct BridgeState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl BridgeState {
    pub fn zeros(d: usize) -> Self {
        BridgeState {
            u: vec![0.0; d],
            v: vec![0.0; d],
        }
    }

    pub fn flip_velocity(&self) -> BridgeState {
        BridgeState {
            u: self.u.clone(),
            v: self.v.iter().map(|x| -x).collect(),
        }
    }
}

/// Stability classification of the bridge splitting at a step size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BridgeStability {
    Stable,
    /// The lowest mode violates the one-dof stability condition.
    Unstable {
        omega1: f64,
    },
}

/// Outcome of a bridge transition.
#[derive(Clone, Debug)]
pub struct BridgeTransition {
    pub accepted: bool,
    pub delta_h: f64,
    pub state: BridgeState,
    pub n_steps: u64,
}

/// Step-count convention for a bridge leg.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepCount {
    Fixed(u64),
    /// Geometric on `{1, 2, ...}` with the given mean.
    GeometricMean(f64),
}

impl<G: Nonlinearity> BridgeModel<G> {
    /// Build the model for interval length `s_len`, `d` interior nodes,
    /// splitting parameter `c in [0, 1]` and nonlinearity `g`.
    pub fn new(s_len: f64, d: usize, c: f64, g: G) -> Self {
        assert!((0.0..=1.0).contains(&c), "c must lie in [0, 1]");
        BridgeModel {
            s_len,
            c,
            g,
            lap: LaplacianOp::new(s_len, d),
            lift: None,
        }
    }

    pub fn lap(&self) -> &LaplacianOp {
        &self.lap
    }

    pub fn d(&self) -> usize {
        self.lap.d
    }

    pub fn ds(&self) -> f64 {
        self.lap.ds
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn s_len(&self) -> f64 {
        self.s_len
    }

    /// `s`-coordinate of interior node `j` (0-based).
    pub fn node(&self, j: usize) -> f64 {
        (j as f64 + 1.0) * self.lap.ds
    }

    /// Lift values at the interior nodes, when a boundary lift is present.
    pub fn lift_values(&self) -> Option<&[f64]> {
        self.lift.as_deref()
    }

    /// Draw `v ~ N(0, Δs⁻¹(-L)⁻¹)` through the factorization of `-L`.
    pub fn sample_v(&self, rng: &mut Rng) -> Vec<f64> {
        let mut z = vec![0.0; self.d()];
        rng.fill_normal(&mut z);
        self.lap.chol().solve_upper(&mut z);
        let scale = 1.0 / math::sqrt(self.lap.ds);
        for x in z.iter_mut() {
            *x *= scale;
        }
        z
    }

    /// Exact flow of the split system (A): rotation of `(u, v)` with
    /// frequency `c` (pure drift when `c = 0`).
    pub fn a_flow(&self, t: f64, state: &mut BridgeState) {
        let c = self.c;
        if c == 0.0 {
            for (ui, vi) in state.u.iter_mut().zip(state.v.iter()) {
                *ui += t * vi;
            }
            return;
        }
        let (s, co) = (math::sin(c * t), math::cos(c * t));
        for (ui, vi) in state.u.iter_mut().zip(state.v.iter_mut()) {
            let (u0, v0) = (*ui, *vi);
            *ui = co * u0 + s * v0 / c;
            *vi = -c * s * u0 + co * v0;
        }
    }

    /// Kick of the split system (B):
    /// `v <- v - t ((1-c²) u + (-L)⁻¹ ∇G_d(u))`, one tridiagonal solve.
    pub fn b_kick(&self, t: f64, state: &mut BridgeState) {
        let d = self.d();
        let mut grad = vec![0.0; d];
        for (j, g) in grad.iter_mut().enumerate() {
            *g = self.g.g_prime(self.node(j), state.u[j]);
        }
        self.lap.solve_neg_l(&mut grad);
        let w = 1.0 - self.c * self.c;
        for ((vi, ui), gi) in state.v.iter_mut().zip(&state.u).zip(&grad) {
            *vi -= t * (w * ui + gi);
        }
    }

    /// `ℋ_d = Δs (vᵀ(-L)v/2 + uᵀ(-L)u/2 + Σ g(s_j, u_j))`.
    pub fn hamiltonian(&self, state: &BridgeState) -> f64 {
        let mut g_sum = 0.0;
        for (j, &u) in state.u.iter().enumerate() {
            g_sum += self.g.g(self.node(j), u);
        }
        self.lap.ds
            * (0.5 * self.lap.quad_neg_l(&state.v) + 0.5 * self.lap.quad_neg_l(&state.u) + g_sum)
    }

    fn diverged(state: &BridgeState) -> bool {
        state
            .u
            .iter()
            .chain(state.v.iter())
            .any(|x| !x.is_finite() || math::abs(*x) > crate::integrators::DIVERGENCE_THRESHOLD)
    }

    /// `n` Strang steps `B(h/2) A(h) B(h/2)` with merged kicks.
    pub fn strang_leg(&self, h: f64, n: u64, start: &BridgeState) -> BridgeTransition {
        assert!(h > 0.0 && n >= 1);
        let h0 = self.hamiltonian(start);
        let mut state = start.clone();
        let mut diverged = false;
        self.b_kick(0.5 * h, &mut state);
        for step in 0..n {
            self.a_flow(h, &mut state);
            let kick = if step + 1 == n { 0.5 * h } else { h };
            self.b_kick(kick, &mut state);
            if Self::diverged(&state) {
                diverged = true;
                break;
            }
        }
        let delta_h = if diverged {
            f64::INFINITY
        } else {
            let h1 = self.hamiltonian(&state);
            if h1.is_finite() {
                h1 - h0
            } else {
                f64::INFINITY
            }
        };
        BridgeTransition {
            accepted: false,
            delta_h,
            state,
            n_steps: n,
        }
    }

    /// One preconditioned HMC (or randomized-duration) transition.
    pub fn phmc_transition(
        &self,
        h: f64,
        steps: StepCount,
        state: &BridgeState,
        rng: &mut Rng,
    ) -> BridgeTransition {
        let n = match steps {
            StepCount::Fixed(n) => n,
            StepCount::GeometricMean(mean) => rng.geometric_from_one(1.0 / mean.max(1.0)),
        };
        let v0 = self.sample_v(rng);
        let start = BridgeState {
            u: state.u.clone(),
            v: v0.clone(),
        };
        let mut result = self.strang_leg(h, n, &start);
        let alpha = if result.delta_h <= 0.0 {
            1.0
        } else {
            math::exp(-result.delta_h)
        };
        let accepted = rng.uniform() < alpha;
        if !accepted {
            result.state = BridgeState {
                u: state.u.clone(),
                v: v0.iter().map(|x| -x).collect(),
            };
        }
        result.accepted = accepted;
        result
    }

    /// Stability of the splitting at step size `h`, evaluated at the
    /// lowest frequency (higher modes are less restrictive).
    pub fn stability_check(&self, h: f64) -> BridgeStability {
        let omega1 = self.lap.omega1();
        if phmc_stable(self.c, omega1, h) {
            BridgeStability::Stable
        } else {
            BridgeStability::Unstable { omega1 }
        }
    }

    /// Upper bound on the stationary mean energy error: the sum of the
    /// closed-form one-dof errors over the modes of `-L`. Exact (as a
    /// bound) for the Ornstein–Uhlenbeck nonlinearity.
    pub fn mean_energy_bound(&self, h: f64) -> Result<f64, HarmonicError> {
        let mut total = 0.0;
        for (j, &w2) in self.lap.omega2.iter().enumerate() {
            let omega = math::sqrt(w2);
            total +=
                phmc_rho_closed(self.c, omega, h).map_err(|_| HarmonicError::UnstableMode {
                    index: j,
                    scaled_h: h,
                })?;
        }
        Ok(total)
    }
}

/// Reduce a bridge with boundary values `x⁻`, `x⁺` to homogeneous
/// conditions with the linear lift `ℓ(s) = x⁻ + (x⁺ - x⁻) s/S`.
///
/// The second difference of a linear function vanishes at every interior
/// node, so the only change is the shifted nonlinearity; samples of the
/// original path are recovered as `u = ū + ℓ`.
pub fn boundary_lift<G: Nonlinearity>(
    s_len: f64,
    d: usize,
    x_minus: f64,
    x_plus: f64,
    c: f64,
    g: G,
) -> BridgeModel<LiftedNonlinearity<G>> {
    let slope = (x_plus - x_minus) / s_len;
    let lifted = LiftedNonlinearity {
        inner: g,
        x_minus,
        slope,
    };
    let mut model = BridgeModel::new(s_len, d, c, lifted);
    let ds = model.ds();
    model.lift = Some((1..=d).map(|j| x_minus + slope * (j as f64) * ds).collect());
    model
}

/// Exact covariance of the Ornstein–Uhlenbeck bridge target:
/// `[Δs(-L + I)]⁻¹`, dense row-major.
pub fn ou_exact_covariance(lap: &LaplacianOp) -> Vec<f64> {
    let d = lap.d();
    let ds = lap.ds();
    let diag: Vec<f64> = lap.neg_l_diag.iter().map(|x| ds * (x + 1.0)).collect();
    let sub: Vec<f64> = lap.neg_l_sub.iter().map(|x| ds * x).collect();
    let chol = TriDiagChol::new(&diag, &sub).expect("-L + I is positive definite");
    let mut cov = vec![0.0; d * d];
    for col in 0..d {
        let mut e = vec![0.0; d];
        e[col] = 1.0;
        chol.solve(&mut e);
        for r in 0..d {
            cov[r * d + col] = e[r];
        }
    }
    cov
}

/// Draw `u` exactly from the Ornstein–Uhlenbeck bridge target.
pub fn ou_exact_sample(lap: &LaplacianOp, rng: &mut Rng) -> Vec<f64> {
    let d = lap.d();
    let ds = lap.ds();
    let diag: Vec<f64> = lap.neg_l_diag.iter().map(|x| ds * (x + 1.0)).collect();
    let sub: Vec<f64> = lap.neg_l_sub.iter().map(|x| ds * x).collect();
    let chol = TriDiagChol::new(&diag, &sub).expect("-L + I is positive definite");
    let mut z = vec![0.0; d];
    rng.fill_normal(&mut z);
    chol.solve_upper(&mut z);
    z
}

/// Run a bridge chain for `n` transitions.
pub fn run_bridge_chain<G: Nonlinearity, F>(
    model: &BridgeModel<G>,
    h: f64,
    steps: StepCount,
    seed: u64,
    init: BridgeState,
    n: u64,
    mut sink: F,
) -> RunStats
where
    F: FnMut(u64, &BridgeTransition),
{
    let mut rng = Rng::from_seed(seed);
    let mut stats = RunStats::new(model.d(), 0, 1);
    let mut state = init;
    for i in 0..n {
        let record = model.phmc_transition(h, steps, &state, &mut rng);
        stats.record(record.accepted, record.delta_h, &record.state.u);
        sink(i, &record);
        state = record.state;
    }
    stats
}
