//! Concrete target distributions.
//!
//! [`GaussianTarget`] carries a stiffness matrix `K` and an optional mass
//! matrix `M` and precomputes the normal-mode transform, so the exact
//! Hamiltonian flow, the mode frequencies, the covariance and exact target
//! draws are all available. [`ProductTarget`] juxtaposes independent copies
//! of a base target for the high-dimension experiments, and [`DemoTarget`]
//! holds the one-dimensional demonstration potentials.

use alloc::vec;
use alloc::vec::Vec;

use crate::integrators::{PhaseState, SeparableSystem};
use crate::linalg;
use crate::math;
use crate::rng::Rng;

/// Construction errors for Gaussian targets.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetError {
    NotPositiveDefinite(&'static str),
    DimensionMismatch,
}

impl core::fmt::Display for TargetError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TargetError::NotPositiveDefinite(which) => {
                write!(f, "{which} matrix is not symmetric positive definite")
            }
            TargetError::DimensionMismatch => write!(f, "matrix dimensions do not match"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TargetError {}

/// Gaussian target with density proportional to `exp(-qᵀKq/2)` and kinetic
/// energy `pᵀM⁻¹p/2`.
#[derive(Clone, Debug)]
pub struct GaussianTarget {
    dim: usize,
    k: Vec<f64>,
    /// Cholesky factor of `K`, for exact draws and the covariance.
    k_chol: Vec<f64>,
    /// Cholesky factor of `M`; `None` means the identity mass matrix.
    m_chol: Option<Vec<f64>>,
    /// Mode frequencies, ascending.
    freqs: Vec<f64>,
    /// Normal-mode maps: `Q = Ω Uᵀ Lᵀ q`, `P = Uᵀ L⁻¹ p` and back.
    to_mode_q: Vec<f64>,
    to_mode_p: Vec<f64>,
    from_mode_q: Vec<f64>,
    from_mode_p: Vec<f64>,
}

impl GaussianTarget {
    /// Unit mass matrix.
    pub fn new(k: Vec<f64>, dim: usize) -> Result<Self, TargetError> {
        Self::with_mass(k, None, dim)
    }

    /// Standard normal target in `dim` dimensions.
    pub fn standard_normal(dim: usize) -> Self {
        let mut k = vec![0.0; dim * dim];
        for i in 0..dim {
            k[i * dim + i] = 1.0;
        }
        Self::new(k, dim).expect("identity is positive definite")
    }

    /// General mass matrix `M = L Lᵀ` (pass `None` for the identity).
    pub fn with_mass(k: Vec<f64>, m: Option<Vec<f64>>, dim: usize) -> Result<Self, TargetError> {
        if k.len() != dim * dim {
            return Err(TargetError::DimensionMismatch);
        }
        let k_chol =
            linalg::cholesky(&k, dim).ok_or(TargetError::NotPositiveDefinite("stiffness"))?;
        let m_chol = match &m {
            None => None,
            Some(mat) => {
                if mat.len() != dim * dim {
                    return Err(TargetError::DimensionMismatch);
                }
                Some(linalg::cholesky(mat, dim).ok_or(TargetError::NotPositiveDefinite("mass"))?)
            }
        };

        // w = L⁻¹ K L⁻ᵀ, the matrix whose eigenvalues are the squared
        // frequencies.
        let w = match &m_chol {
            None => k.clone(),
            Some(l) => {
                let mut z = k.clone();
                // columns of z <- L⁻¹ K
                for col in 0..dim {
                    let mut column: Vec<f64> = (0..dim).map(|r| z[r * dim + col]).collect();
                    linalg::solve_lower(l, dim, &mut column);
                    for r in 0..dim {
                        z[r * dim + col] = column[r];
                    }
                }
                // w = z L⁻ᵀ  <=>  wᵀ = L⁻¹ zᵀ
                let mut w = vec![0.0; dim * dim];
                for col in 0..dim {
                    let mut column: Vec<f64> = (0..dim).map(|r| z[col * dim + r]).collect();
                    linalg::solve_lower(l, dim, &mut column);
                    for r in 0..dim {
                        w[col * dim + r] = column[r];
                    }
                }
                // symmetrize against roundoff
                for i in 0..dim {
                    for j in 0..i {
                        let avg = 0.5 * (w[i * dim + j] + w[j * dim + i]);
                        w[i * dim + j] = avg;
                        w[j * dim + i] = avg;
                    }
                }
                w
            }
        };
        let (evals, u) = linalg::sym_eigen(&w, dim);
        if evals[0] <= 0.0 {
            return Err(TargetError::NotPositiveDefinite("stiffness"));
        }
        let freqs: Vec<f64> = evals.iter().map(|&x| math::sqrt(x)).collect();

        // Assemble the mode maps column by column.
        // to_mode_q = Ω Uᵀ Lᵀ, from_mode_q = L⁻ᵀ U Ω⁻¹,
        // to_mode_p = Uᵀ L⁻¹,  from_mode_p = L U.
        let mut to_mode_q = vec![0.0; dim * dim];
        let mut to_mode_p = vec![0.0; dim * dim];
        let mut from_mode_q = vec![0.0; dim * dim];
        let mut from_mode_p = vec![0.0; dim * dim];
        for j in 0..dim {
            // u_j = column j of U
            let uj: Vec<f64> = (0..dim).map(|r| u[r * dim + j]).collect();

            // from_mode_q column j: L⁻ᵀ u_j / ω_j
            let mut col = uj.clone();
            if let Some(l) = &m_chol {
                linalg::solve_lower_transpose(l, dim, &mut col);
            }
            for r in 0..dim {
                from_mode_q[r * dim + j] = col[r] / freqs[j];
            }

            // from_mode_p column j: L u_j
            let mut col = uj.clone();
            if let Some(l) = &m_chol {
                let mut lu = vec![0.0; dim];
                for r in 0..dim {
                    let mut sum = 0.0;
                    for c in 0..=r {
                        sum += l[r * dim + c] * col[c];
                    }
                    lu[r] = sum;
                }
                col = lu;
            }
            for r in 0..dim {
                from_mode_p[r * dim + j] = col[r];
            }

            // to_mode_q row j: (Ω Uᵀ Lᵀ)_{j,r} = ω_j Σ_k U_{k,j} L_{r,k}
            for r in 0..dim {
                let mut sum = 0.0;
                match &m_chol {
                    None => sum = uj[r],
                    Some(l) => {
                        for (k, ujk) in uj.iter().enumerate().take(r + 1) {
                            sum += ujk * l[r * dim + k];
                        }
                    }
                }
                to_mode_q[j * dim + r] = freqs[j] * sum;
            }
        }
        // to_mode_p row j: (Uᵀ L⁻¹)_{j,r} = (L⁻ᵀ u_j)_r.
        for j in 0..dim {
            let mut col: Vec<f64> = (0..dim).map(|r| u[r * dim + j]).collect();
            if let Some(l) = &m_chol {
                linalg::solve_lower_transpose(l, dim, &mut col);
            }
            for r in 0..dim {
                to_mode_p[j * dim + r] = col[r];
            }
        }

        Ok(GaussianTarget {
            dim,
            k,
            k_chol,
            m_chol,
            freqs,
            to_mode_q,
            to_mode_p,
            from_mode_q,
            from_mode_p,
        })
    }

    /// Mode frequencies (square roots of the eigenvalues of `L⁻¹KL⁻ᵀ`),
    /// ascending.
    pub fn frequencies(&self) -> &[f64] {
        &self.freqs
    }

    /// Exact flow of the Hamiltonian dynamics over `time`.
    ///
    /// Each normal mode rotates by `ω_j · time`; the map is exact up to
    /// round-off and conserves the Hamiltonian.
    pub fn exact_flow(&self, time: f64, state: &PhaseState) -> PhaseState {
        let d = self.dim;
        let mut mode_q = vec![0.0; d];
        let mut mode_p = vec![0.0; d];
        linalg::matvec(&self.to_mode_q, d, &state.q, &mut mode_q);
        linalg::matvec(&self.to_mode_p, d, &state.p, &mut mode_p);
        for j in 0..d {
            let angle = self.freqs[j] * time;
            let (s, c) = (math::sin(angle), math::cos(angle));
            let (qj, pj) = (mode_q[j], mode_p[j]);
            mode_q[j] = c * qj + s * pj;
            mode_p[j] = -s * qj + c * pj;
        }
        let mut q = vec![0.0; d];
        let mut p = vec![0.0; d];
        linalg::matvec(&self.from_mode_q, d, &mode_q, &mut q);
        linalg::matvec(&self.from_mode_p, d, &mode_p, &mut p);
        PhaseState { q, p }
    }

    /// Exact moments of the target: zero mean and covariance `K⁻¹`.
    pub fn moments(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let mut cov = vec![0.0; d * d];
        for col in 0..d {
            let mut e = vec![0.0; d];
            e[col] = 1.0;
            linalg::solve_lower(&self.k_chol, d, &mut e);
            linalg::solve_lower_transpose(&self.k_chol, d, &mut e);
            for r in 0..d {
                cov[r * d + col] = e[r];
            }
        }
        (vec![0.0; d], cov)
    }
}

impl SeparableSystem for GaussianTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn potential(&self, q: &[f64]) -> f64 {
        let mut kq = vec![0.0; self.dim];
        linalg::matvec(&self.k, self.dim, q, &mut kq);
        0.5 * linalg::dot(q, &kq)
    }

    fn force(&self, q: &[f64], out: &mut [f64]) {
        linalg::matvec(&self.k, self.dim, q, out);
        for x in out.iter_mut() {
            *x = -*x;
        }
    }

    fn apply_inv_mass(&self, p: &[f64], out: &mut [f64]) {
        out.copy_from_slice(p);
        if let Some(l) = &self.m_chol {
            linalg::solve_lower(l, self.dim, out);
            linalg::solve_lower_transpose(l, self.dim, out);
        }
    }

    fn momentum_factor(&self, z: &mut [f64]) {
        if let Some(l) = &self.m_chol {
            let d = self.dim;
            for r in (0..d).rev() {
                let mut sum = 0.0;
                for c in 0..=r {
                    sum += l[r * d + c] * z[c];
                }
                z[r] = sum;
            }
        }
    }

    fn sample_position(&self, rng: &mut Rng, out: &mut [f64]) -> bool {
        // q = R⁻ᵀ z with K = R Rᵀ gives covariance K⁻¹.
        rng.fill_normal(out);
        linalg::solve_lower_transpose(&self.k_chol, self.dim, out);
        true
    }
}

/// `m` independent copies of a base target, laid out blockwise.
#[derive(Clone, Debug)]
pub struct ProductTarget<T> {
    base: T,
    copies: usize,
}

impl<T: SeparableSystem> ProductTarget<T> {
    pub fn new(base: T, copies: usize) -> Self {
        assert!(copies >= 1);
        ProductTarget { base, copies }
    }

    pub fn base(&self) -> &T {
        &self.base
    }

    pub fn copies(&self) -> usize {
        self.copies
    }
}

impl<T: SeparableSystem> SeparableSystem for ProductTarget<T> {
    fn dim(&self) -> usize {
        self.base.dim() * self.copies
    }

    fn potential(&self, q: &[f64]) -> f64 {
        let d = self.base.dim();
        q.chunks(d).map(|block| self.base.potential(block)).sum()
    }

    fn force(&self, q: &[f64], out: &mut [f64]) {
        let d = self.base.dim();
        for (qb, ob) in q.chunks(d).zip(out.chunks_mut(d)) {
            self.base.force(qb, ob);
        }
    }

    fn apply_inv_mass(&self, p: &[f64], out: &mut [f64]) {
        let d = self.base.dim();
        for (pb, ob) in p.chunks(d).zip(out.chunks_mut(d)) {
            self.base.apply_inv_mass(pb, ob);
        }
    }

    fn momentum_factor(&self, z: &mut [f64]) {
        let d = self.base.dim();
        for zb in z.chunks_mut(d) {
            self.base.momentum_factor(zb);
        }
    }

    fn sample_position(&self, rng: &mut Rng, out: &mut [f64]) -> bool {
        let d = self.base.dim();
        for ob in out.chunks_mut(d) {
            if !self.base.sample_position(rng, ob) {
                return false;
            }
        }
        true
    }
}

/// One-dimensional demonstration potentials.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DemoKind {
    /// `U(q) = (q² - 1)²/4`, two probability modes at `q = ±1`.
    DoubleWell,
    /// `U(q) = q⁴/4`, tails lighter than Gaussian.
    Quartic,
}

#[derive(Clone, Copy, Debug)]
pub struct DemoTarget {
    kind: DemoKind,
}

impl DemoTarget {
    pub fn double_well() -> Self {
        DemoTarget {
            kind: DemoKind::DoubleWell,
        }
    }

    pub fn quartic() -> Self {
        DemoTarget {
            kind: DemoKind::Quartic,
        }
    }

    pub fn kind(&self) -> DemoKind {
        self.kind
    }
}

impl SeparableSystem for DemoTarget {
    fn dim(&self) -> usize {
        1
    }

    fn potential(&self, q: &[f64]) -> f64 {
        let x = q[0];
        match self.kind {
            DemoKind::DoubleWell => {
                let w = x * x - 1.0;
                0.25 * w * w
            }
            DemoKind::Quartic => 0.25 * x * x * x * x,
        }
    }

    fn force(&self, q: &[f64], out: &mut [f64]) {
        let x = q[0];
        out[0] = match self.kind {
            DemoKind::DoubleWell => -x * (x * x - 1.0),
            DemoKind::Quartic => -x * x * x,
        };
    }
}
