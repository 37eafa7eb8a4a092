//! Small dense and tridiagonal linear algebra kernels.
//!
//! Everything here is deterministic: the symmetric eigensolver uses
//! Householder tridiagonalization followed by the implicit-shift QL
//! iteration, and eigenpairs are returned sorted by ascending eigenvalue so
//! mode ordering is reproducible across runs and platforms.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Dense row-major Cholesky factorization `a = l lᵀ`.
///
/// Returns the lower factor, or `None` when `a` is not positive definite.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * n + j] = math::sqrt(sum);
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solve `l x = b` with `l` lower triangular (row-major, n×n).
pub fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * b[k];
        }
        b[i] = sum / l[i * n + i];
    }
}

/// Solve `lᵀ x = b` with `l` lower triangular (row-major, n×n).
pub fn solve_lower_transpose(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * b[k];
        }
        b[i] = sum / l[i * n + i];
    }
}

/// `y = a x` for a dense row-major n×n matrix.
pub fn matvec(a: &[f64], n: usize, x: &[f64], y: &mut [f64]) {
    for i in 0..n {
        let row = &a[i * n..(i + 1) * n];
        let mut sum = 0.0;
        for (aij, xj) in row.iter().zip(x.iter()) {
            sum += aij * xj;
        }
        y[i] = sum;
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}

/// Eigendecomposition of a symmetric matrix.
///
/// Returns `(values, vectors)` with ascending eigenvalues; `vectors` is
/// row-major with the eigenvector of `values[j]` stored in column `j`.
pub fn sym_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut z = a.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut z, n, &mut d, &mut e);
    tql2(&mut z, n, &mut d, &mut e);
    sort_eigenpairs(&mut d, &mut z, n);
    (d, z)
}

/// Householder reduction of a symmetric matrix to tridiagonal form.
/// On exit `d` holds the diagonal, `e` the subdiagonal (e[0] unused) and
/// `z` the accumulated orthogonal transform.
fn tred2(z: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        let mut scale = 0.0;
        if l > 0 {
            for k in 0..=l {
                scale += math::abs(z[i * n + k]);
            }
            if scale == 0.0 {
                e[i] = z[i * n + l];
            } else {
                for k in 0..=l {
                    z[i * n + k] /= scale;
                    h += z[i * n + k] * z[i * n + k];
                }
                let mut f = z[i * n + l];
                let g = if f >= 0.0 {
                    -math::sqrt(h)
                } else {
                    math::sqrt(h)
                };
                e[i] = scale * g;
                h -= f * g;
                z[i * n + l] = f - g;
                f = 0.0;
                for j in 0..=l {
                    z[j * n + i] = z[i * n + j] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += z[j * n + k] * z[i * n + k];
                    }
                    for k in j + 1..=l {
                        g += z[k * n + j] * z[i * n + k];
                    }
                    e[j] = g / h;
                    f += e[j] * z[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = z[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z[j * n + k] -= f * e[k] + g * z[i * n + k];
                    }
                }
            }
        } else {
            e[i] = z[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        let l = i;
        if d[i] != 0.0 {
            for j in 0..l {
                let mut g = 0.0;
                for k in 0..l {
                    g += z[i * n + k] * z[k * n + j];
                }
                for k in 0..l {
                    z[k * n + j] -= g * z[k * n + i];
                }
            }
        }
        d[i] = z[i * n + i];
        z[i * n + i] = 1.0;
        for j in 0..l {
            z[j * n + i] = 0.0;
            z[i * n + j] = 0.0;
        }
    }
}

/// Implicit-shift QL iteration on the tridiagonal form produced by `tred2`.
fn tql2(z: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    if n <= 1 {
        return;
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = math::abs(d[m]) + math::abs(d[m + 1]);
                if math::abs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "QL iteration failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + sign(r, g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if r == 0.0 && m > l {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

fn sort_eigenpairs(d: &mut [f64], z: &mut [f64], n: usize) {
    // Selection sort keeps the permutation deterministic.
    for i in 0..n {
        let mut k = i;
        for j in i + 1..n {
            if d[j] < d[k] {
                k = j;
            }
        }
        if k != i {
            d.swap(i, k);
            for row in 0..n {
                z.swap(row * n + i, row * n + k);
            }
        }
    }
}

#[inline]
fn hypot(a: f64, b: f64) -> f64 {
    let (a, b) = (math::abs(a), math::abs(b));
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == 0.0 {
        return 0.0;
    }
    let r = lo / hi;
    hi * math::sqrt(1.0 + r * r)
}

#[inline]
fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        math::abs(a)
    } else {
        -math::abs(a)
    }
}

/// Cholesky factorization of a symmetric positive-definite tridiagonal
/// matrix, stored as `diag` and `sub` (subdiagonal).
///
/// The factor `g` is lower bidiagonal; solves run in `O(n)`.
#[derive(Clone, Debug)]
pub struct TriDiagChol {
    g_diag: Vec<f64>,
    g_sub: Vec<f64>,
}

impl TriDiagChol {
    pub fn new(diag: &[f64], sub: &[f64]) -> Option<Self> {
        let n = diag.len();
        assert_eq!(sub.len(), n.saturating_sub(1));
        let mut g_diag = vec![0.0; n];
        let mut g_sub = vec![0.0; n.saturating_sub(1)];
        let mut prev_sub = 0.0;
        for i in 0..n {
            let mut v = diag[i] - prev_sub * prev_sub;
            if v <= 0.0 || !v.is_finite() {
                return None;
            }
            v = math::sqrt(v);
            g_diag[i] = v;
            if i + 1 < n {
                g_sub[i] = sub[i] / v;
                prev_sub = g_sub[i];
            }
        }
        Some(TriDiagChol { g_diag, g_sub })
    }

    pub fn len(&self) -> usize {
        self.g_diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g_diag.is_empty()
    }

    /// Solve `g x = b` in place (forward substitution).
    pub fn solve_lower(&self, b: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut v = b[i];
            if i > 0 {
                v -= self.g_sub[i - 1] * b[i - 1];
            }
            b[i] = v / self.g_diag[i];
        }
    }

    /// Solve `gᵀ x = b` in place (back substitution).
    pub fn solve_upper(&self, b: &mut [f64]) {
        let n = self.len();
        for i in (0..n).rev() {
            let mut v = b[i];
            if i + 1 < n {
                v -= self.g_sub[i] * b[i + 1];
            }
            b[i] = v / self.g_diag[i];
        }
    }

    /// Solve the full system `(g gᵀ) x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        self.solve_lower(b);
        self.solve_upper(b);
    }
}

/// `y = t x` for a symmetric tridiagonal matrix given by its diagonals.
pub fn tridiag_matvec(diag: &[f64], sub: &[f64], x: &[f64], y: &mut [f64]) {
    let n = diag.len();
    for i in 0..n {
        let mut v = diag[i] * x[i];
        if i > 0 {
            v += sub[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            v += sub[i] * x[i + 1];
        }
        y[i] = v;
    }
}
