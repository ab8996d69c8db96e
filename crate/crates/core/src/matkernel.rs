//! Dense complex `p x p` matrices and the spectral primitives built on them.
//!
//! Everything here is sized for small `p` (a handful of rows): the Hermitian
//! eigensolver is cyclic Jacobi, inversion is Gauss-Jordan with partial
//! pivoting, and singular values come from the eigenvalues of `A A*`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Relative off-diagonal mass at which the Jacobi sweep stops.
const JACOBI_TOL: f64 = 1e-14;
/// Pivots below this fraction of `||A||_2` make a matrix singular.
const PIVOT_TOL: f64 = 1e-14;
/// Allowed `||A - A*||` relative to `1 + ||A||` for Hermitian input.
const HERMITIAN_TOL: f64 = 1e-10;
/// Negative eigenvalues above `-PSD_CLAMP * (1 + ||A||_2)` are clamped to zero.
pub const PSD_CLAMP: f64 = 1e-12;

/// Dense square complex matrix, stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<C64>,
}

/// Eigen-decomposition of a Hermitian matrix: `A = V diag(lambda) V*`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomp {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: CMat,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn scalar(value: C64) -> Self {
        Self {
            dim: 1,
            data: vec![value],
        }
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let diag: Vec<C64> = diag.iter().map(|&d| C64::new(d, 0.0)).collect();
        Self::from_diag(&diag)
    }

    /// Builds a matrix from rows, rejecting ragged, empty or non-finite input.
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend(row);
        }
        let m = Self { dim, data };
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }

    /// Real-valued rows; convenient in tests and examples.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    /// Conjugate transpose `A*`.
    pub fn herm_transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        Ok(())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `(A + A*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// Frobenius norm of `A - A*`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    ///
    /// A pivot whose magnitude falls below `1e-14 * ||A||_2` is reported as
    /// [`Error::SingularMatrix`].
    pub fn inverse(&self) -> Result<Self> {
        let n = self.dim;
        let threshold = PIVOT_TOL * self.spectral_norm()?;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let (pivot_row, pivot_abs) = (col..n)
                .map(|r| (r, a[(r, col)].norm()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_abs <= threshold {
                return Err(Error::SingularMatrix {
                    column: col,
                    pivot: pivot_abs,
                });
            }
            if pivot_row != col {
                a.swap_rows(pivot_row, col);
                inv.swap_rows(pivot_row, col);
            }
            let pivot_inv = ONE / a[(col, col)];
            for j in 0..n {
                a[(col, j)] *= pivot_inv;
                inv[(col, j)] *= pivot_inv;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[(r, col)];
                if factor == ZERO {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                    a[(r, j)] -= factor * ac;
                    inv[(r, j)] -= factor * ic;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, r1: usize, r2: usize) {
        let n = self.dim;
        for j in 0..n {
            self.data.swap(r1 * n + j, r2 * n + j);
        }
    }

    /// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
    ///
    /// The input is symmetrized as `(A + A*) / 2` after checking that it is
    /// Hermitian to `1e-10 (1 + ||A||)` (Frobenius norms on both sides).
    pub fn herm_eig(&self) -> Result<SpectralDecomp> {
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_TOL * (1.0 + self.frobenius_norm()) {
            return Err(Error::NotHermitian { deviation });
        }
        jacobi_eigen(self.hermitian_part())
    }

    /// Hermitian PSD square root. Eigenvalues in `[-1e-12 (1 + ||A||_2), 0)`
    /// are clamped to zero; anything more negative is rejected.
    pub fn psd_sqrt(&self) -> Result<Self> {
        let eig = self.herm_eig()?;
        let norm = eig.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
        let lambda_min = eig.eigenvalues[0];
        if lambda_min < -PSD_CLAMP * (1.0 + norm) {
            return Err(Error::NotPsd { lambda_min });
        }
        let roots: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
        Ok(eig.recompose(&roots).hermitian_part())
    }

    /// Singular values in descending order, `sigma_i = lambda_i(A A*)^{1/2}`.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let gram = (self * &self.herm_transpose()).hermitian_part();
        let eig = jacobi_eigen(gram)?;
        Ok(eig
            .eigenvalues
            .iter()
            .rev()
            .map(|&l| l.max(0.0).sqrt())
            .collect())
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> Result<f64> {
        if self.dim == 1 {
            return Ok(self.data[0].norm());
        }
        Ok(self.singular_values()?[0])
    }

    /// `||A A* - I||_2 <= tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let dev = &(self * &self.herm_transpose()) - &Self::identity(self.dim);
        dev.spectral_norm().map(|d| d <= tol).unwrap_or(false)
    }
}

impl SpectralDecomp {
    /// `V diag(values) V*`.
    pub fn recompose(&self, values: &[f64]) -> CMat {
        let v = &self.eigenvectors;
        let n = v.dim();
        CMat::from_fn(n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * values[k] * v[(j, k)].conj())
                .sum()
        })
    }
}

fn off_diagonal_norm(a: &CMat) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi_eigen(mut a: CMat) -> Result<SpectralDecomp> {
    let n = a.dim();
    let mut v = CMat::identity(n);
    let budget = 30 * n * n;
    let target = JACOBI_TOL * a.frobenius_norm();
    let mut rotations = 0;
    while off_diagonal_norm(&a) > target {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                if rotations == budget {
                    return Err(Error::NoConvergence { rotations });
                }
                rotations += 1;
                rotate(&mut a, &mut v, p, q, apq / r, r);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let values: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = CMat::from_fn(n, |i, k| v[(i, order[k])]);
    Ok(SpectralDecomp {
        eigenvalues,
        eigenvectors,
    })
}

/// One complex Jacobi rotation annihilating `a[p][q] = r e^{i phi}`.
///
/// The block is first made real by `D = diag(1, e^{-i phi})`, then rotated by
/// the real Jacobi rotation; `G = D P` is applied as `A <- G* A G`, `V <- V G`.
fn rotate(a: &mut CMat, v: &mut CMat, p: usize, q: usize, phase: C64, r: f64) {
    let n = a.dim();
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let back = phase.conj();
    let g00 = C64::new(c, 0.0);
    let g01 = C64::new(s, 0.0);
    let g10 = back * (-s);
    let g11 = back * c;

    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp * g00 + akq * g10;
        a[(k, q)] = akp * g01 + akq * g11;
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * g00 + vkq * g10;
        v[(k, q)] = vkp * g01 + vkq * g11;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = g00.conj() * apk + g10.conj() * aqk;
        a[(q, k)] = g01.conj() * apk + g11.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

// Operator forms panic on dimension mismatch; use the `checked_*` methods
// when the dimensions come from untrusted input.
impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        self.checked_mul(rhs).expect("matrix dimension mismatch")
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        self.checked_add(rhs).expect("matrix dimension mismatch")
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        self.checked_sub(rhs).expect("matrix dimension mismatch")
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.scale_real(-1.0)
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl Serialize for CMat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .data
            .chunks(self.dim)
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CMat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect();
        CMat::from_rows(rows).map_err(serde::de::Error::custom)
    }
}
