//! Matrix polynomials `P(z) = sum_k C_k z^k` with `p x p` complex coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matkernel::{CMat, C64};

/// Matrix polynomial with an explicit formal degree.
///
/// `coeffs[k]` multiplies `z^k`; the formal degree is `coeffs.len() - 1` and
/// may exceed the index of the last nonzero coefficient. Reversal is always
/// taken at a formal degree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatPoly {
    p: usize,
    deg: usize,
    coeffs: Vec<CMat>,
}

#[derive(Deserialize)]
struct RawPoly {
    p: usize,
    deg: usize,
    coeffs: Vec<CMat>,
}

impl<'de> Deserialize<'de> for MatPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPoly::deserialize(d)?;
        if raw.coeffs.len() != raw.deg + 1 {
            return Err(serde::de::Error::custom(format!(
                "deg {} needs {} coefficients, got {}",
                raw.deg,
                raw.deg + 1,
                raw.coeffs.len()
            )));
        }
        let poly = MatPoly::new(raw.coeffs).map_err(serde::de::Error::custom)?;
        if poly.p != raw.p {
            return Err(serde::de::Error::custom(format!(
                "p = {} but coefficients are {}x{}",
                raw.p, poly.p, poly.p
            )));
        }
        Ok(poly)
    }
}

impl MatPoly {
    pub fn new(coeffs: Vec<CMat>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::InvalidArgument("polynomial needs at least one coefficient".into()))?;
        let p = first.dim();
        if let Some(bad) = coeffs.iter().find(|c| c.dim() != p) {
            return Err(Error::DimMismatch {
                expected: p,
                actual: bad.dim(),
            });
        }
        Ok(Self {
            p,
            deg: coeffs.len() - 1,
            coeffs,
        })
    }

    pub fn constant(c: CMat) -> Self {
        Self {
            p: c.dim(),
            deg: 0,
            coeffs: vec![c],
        }
    }

    pub fn zero(p: usize, deg: usize) -> Self {
        Self {
            p,
            deg,
            coeffs: vec![CMat::zeros(p); deg + 1],
        }
    }

    /// `c z^k`.
    pub fn monomial(k: usize, c: CMat) -> Self {
        let mut out = Self::zero(c.dim(), k);
        out.coeffs[k] = c;
        out
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    /// Formal degree.
    pub fn deg(&self) -> usize {
        self.deg
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &CMat {
        &self.coeffs[k]
    }

    /// Coefficient at the formal degree.
    pub fn leading(&self) -> &CMat {
        &self.coeffs[self.deg]
    }

    pub fn constant_coeff(&self) -> &CMat {
        &self.coeffs[0]
    }

    /// Index of the last nonzero coefficient (0 for the zero polynomial).
    pub fn support_degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
    }

    pub fn coeffs_mut(&mut self) -> &mut [CMat] {
        &mut self.coeffs
    }

    /// Horner evaluation.
    pub fn eval(&self, z: C64) -> CMat {
        let mut acc = self.coeffs[self.deg].clone();
        for c in self.coeffs[..self.deg].iter().rev() {
            acc = &acc.scale(z) + c;
        }
        acc
    }

    /// Compensated Horner evaluation, entrywise: as accurate as Horner's rule
    /// in twice the working precision, so the result is within about
    /// `u ||P(z)||` of the exact value of the stored coefficients.
    pub fn eval_compensated(&self, z: C64) -> CMat {
        CMat::from_fn(self.p, |i, j| {
            let mut r = self.coeffs[self.deg][(i, j)];
            let mut c = C64::new(0.0, 0.0);
            for coeff in self.coeffs[..self.deg].iter().rev() {
                let (prod, e1, e2) = two_prod(r, z);
                let (sum, e3) = two_sum(prod, coeff[(i, j)]);
                r = sum;
                c = c * z + (e1 + e2 + e3);
            }
            r + c
        })
    }

    /// Conservative error bound of [`eval_compensated`](Self::eval_compensated)
    /// given its result `value`: `2u ||value||_F + 8 gamma_{4n+4}^2 sum_k ||C_k||_F |z|^k`.
    pub fn compensated_error_bound(&self, z: C64, value: &CMat) -> f64 {
        let k = (4 * self.deg + 4) as f64 * f64::EPSILON;
        let gamma = k / (1.0 - k);
        2.0 * f64::EPSILON * value.frobenius_norm() + 8.0 * gamma * gamma * self.abs_magnitude(z)
    }

    /// `sum_k ||C_k||_F |z|^k`, the amplification factor of Horner's rule.
    pub fn abs_magnitude(&self, z: C64) -> f64 {
        let r = z.norm();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * r + c.frobenius_norm())
    }

    /// Reversed polynomial `z^n P(1/conj(z))*` at formal degree `n`:
    /// coefficient `k` is `C_{n-k}*`.
    pub fn reverse(&self, n: usize) -> Result<Self> {
        let support = self.support_degree();
        if support > n {
            return Err(Error::DegreeExceedsFormal {
                degree: support,
                formal: n,
            });
        }
        let coeffs = (0..=n)
            .map(|k| match self.coeffs.get(n - k) {
                Some(c) => c.herm_transpose(),
                None => CMat::zeros(self.p),
            })
            .collect();
        Ok(Self {
            p: self.p,
            deg: n,
            coeffs,
        })
    }

    /// `z P(z)`.
    pub fn mul_z(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.deg + 2);
        coeffs.push(CMat::zeros(self.p));
        coeffs.extend(self.coeffs.iter().cloned());
        Self {
            p: self.p,
            deg: self.deg + 1,
            coeffs,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a.checked_add(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a.checked_sub(b))
    }

    fn combine(&self, other: &Self, op: impl Fn(&CMat, &CMat) -> Result<CMat>) -> Result<Self> {
        if self.p != other.p {
            return Err(Error::DimMismatch {
                expected: self.p,
                actual: other.p,
            });
        }
        let deg = self.deg.max(other.deg);
        let zero = CMat::zeros(self.p);
        let coeffs = (0..=deg)
            .map(|k| op(self.coeffs.get(k).unwrap_or(&zero), other.coeffs.get(k).unwrap_or(&zero)))
            .collect::<Result<_>>()?;
        Ok(Self { p: self.p, deg, coeffs })
    }

    /// `A P(z)`.
    pub fn left_mul(&self, a: &CMat) -> Result<Self> {
        let coeffs = self.coeffs.iter().map(|c| a.checked_mul(c)).collect::<Result<_>>()?;
        Ok(Self { p: self.p, deg: self.deg, coeffs })
    }

    /// `P(z) A`.
    pub fn right_mul(&self, a: &CMat) -> Result<Self> {
        let coeffs = self.coeffs.iter().map(|c| c.checked_mul(a)).collect::<Result<_>>()?;
        Ok(Self { p: self.p, deg: self.deg, coeffs })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            p: self.p,
            deg: self.deg,
            coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// Largest `||C_k||_2 - ||D_k||_2`-style coefficient distance, in max-abs entries.
    pub fn max_coeff_distance(&self, other: &Self) -> f64 {
        let zero = CMat::zeros(self.p);
        (0..=self.deg.max(other.deg))
            .map(|k| {
                let a = self.coeffs.get(k).unwrap_or(&zero);
                let b = other.coeffs.get(k).unwrap_or(&zero);
                (a - b).max_abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `a + b = s + e` exactly, componentwise.
fn two_sum(a: C64, b: C64) -> (C64, C64) {
    let f = |x: f64, y: f64| {
        let s = x + y;
        let t = s - x;
        (s, (x - (s - t)) + (y - t))
    };
    let (re, ere) = f(a.re, b.re);
    let (im, eim) = f(a.im, b.im);
    (C64::new(re, im), C64::new(ere, eim))
}

/// `a b = p + e + f` exactly.
fn two_prod(a: C64, b: C64) -> (C64, C64, C64) {
    let tp = |x: f64, y: f64| {
        let p = x * y;
        (p, x.mul_add(y, -p))
    };
    let (p1, e1) = tp(a.re, b.re);
    let (p2, e2) = tp(a.im, b.im);
    let (p3, e3) = tp(a.re, b.im);
    let (p4, e4) = tp(a.im, b.re);
    let (p, f) = two_sum(C64::new(p1, p3), C64::new(-p2, p4));
    (p, C64::new(e1 - e2, e3 + e4), f)
}
