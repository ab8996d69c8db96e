//! Synthesis from prescribed reflection coefficients and Bernstein-Szegő measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matkernel::{CMat, C64};
use crate::measure::{MatMeasure, WeightSpec};
use crate::mpoly::MatPoly;
use crate::opuc::{build_system, Normalization, OPUCSystem};
use crate::random::{random_reflections, seeded};

/// Largest admissible `||H_n||_2`.
pub const MAX_REFLECTION_NORM: f64 = 1.0 - 1e-8;

/// Node cap when refining the quadrature of a Bernstein-Szegő weight.
pub const MAX_BS_QUAD_POINTS: usize = 1 << 18;

/// Reflection coefficients `H_1..H_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSequence", into = "RawSequence")]
pub struct ReflectionSequence {
    p: usize,
    h: Vec<CMat>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSequence {
    p: usize,
    #[serde(rename = "H")]
    h: Vec<CMat>,
}

impl TryFrom<RawSequence> for ReflectionSequence {
    type Error = Error;
    fn try_from(raw: RawSequence) -> Result<Self> {
        ReflectionSequence::new(raw.p, raw.h)
    }
}

impl From<ReflectionSequence> for RawSequence {
    fn from(s: ReflectionSequence) -> Self {
        RawSequence { p: s.p, h: s.h }
    }
}

impl ReflectionSequence {
    pub fn new(p: usize, h: Vec<CMat>) -> Result<Self> {
        if p == 0 {
            return Err(Error::EmptyMatrix);
        }
        for (i, hn) in h.iter().enumerate() {
            if hn.dim() != p {
                return Err(Error::DimMismatch {
                    expected: p,
                    actual: hn.dim(),
                });
            }
            if !hn.is_finite() {
                return Err(Error::NonFinite);
            }
            let norm = hn.spectral_norm()?;
            if norm > MAX_REFLECTION_NORM {
                return Err(Error::InvalidReflection { index: i + 1, norm });
            }
        }
        Ok(Self { p, h })
    }

    /// Scalar sequence from real values.
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::new(1, values.iter().map(|&v| CMat::scalar(C64::new(v, 0.0))).collect())
    }

    pub fn zeros(p: usize, n: usize) -> Self {
        Self {
            p,
            h: vec![CMat::zeros(p); n],
        }
    }

    /// `n` coefficients drawn from a seeded stream with `||H_k||_2 <= max_norm`.
    pub fn random(seed: u64, p: usize, n: usize, max_norm: f64) -> Result<Self> {
        if !(0.0..=MAX_REFLECTION_NORM).contains(&max_norm) {
            return Err(Error::InvalidArgument(format!("max_norm must lie in [0, 1 - 1e-8], got {max_norm}")));
        }
        Self::new(p, random_reflections(&mut seeded(seed), p, n, max_norm))
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn as_slice(&self) -> &[CMat] {
        &self.h
    }
}

/// `((I - H H*)^{-1/2}, (I - H* H)^{-1/2})`.
pub(crate) fn defect_inverses(h: &CMat, index: usize) -> Result<(CMat, CMat)> {
    let norm = h.spectral_norm()?;
    if !(norm < MAX_REFLECTION_NORM) {
        return Err(Error::ReflectionTooLarge { index, norm });
    }
    let i = CMat::identity(h.dim());
    let hs = h.herm_transpose();
    let left = (&i - &(h * &hs)).psd_sqrt()?.inverse()?;
    let right = (&i - &(&hs * h)).psd_sqrt()?.inverse()?;
    Ok((left, right))
}

/// One degree-raising step
/// `phi_n^L = (I - H H*)^{-1/2} (z phi_{n-1}^L + H tilde phi_{n-1}^R)`,
/// `phi_n^R = (z phi_{n-1}^R + tilde phi_{n-1}^L H) (I - H* H)^{-1/2}`.
pub fn szego_step(phi_l: &MatPoly, phi_r: &MatPoly, h: &CMat) -> Result<(MatPoly, MatPoly)> {
    let deg = phi_l.deg();
    if phi_r.deg() != deg {
        return Err(Error::InvalidArgument(format!(
            "left and right inputs have degrees {deg} and {}",
            phi_r.deg()
        )));
    }
    let (a, b) = defect_inverses(h, deg + 1)?;
    let next_l = phi_l.mul_z().add(&phi_r.reverse(deg)?.left_mul(h)?)?.left_mul(&a)?;
    let next_r = phi_r.mul_z().add(&phi_l.reverse(deg)?.right_mul(h)?)?.right_mul(&b)?;
    Ok((next_l, next_r))
}

/// Orthonormal system with the given reflection coefficients, starting from
/// a common Hermitian positive definite `phi_0` (`phi_0 = I` for `mu_0 = I`).
pub fn favard_synthesize(seq: &ReflectionSequence, phi0: &CMat) -> Result<OPUCSystem> {
    if phi0.dim() != seq.p() {
        return Err(Error::DimMismatch {
            expected: seq.p(),
            actual: phi0.dim(),
        });
    }
    let eig = phi0.herm_eig().map_err(|_| Error::InvalidArgument("phi_0 must be Hermitian".into()))?;
    if eig.eigenvalues[0] <= 0.0 {
        return Err(Error::InvalidArgument("phi_0 must be positive definite".into()));
    }
    let mut phi_l = vec![MatPoly::constant(phi0.hermitian_part())];
    let mut phi_r = phi_l.clone();
    for h in seq.as_slice() {
        let (l, r) = szego_step(phi_l.last().unwrap(), phi_r.last().unwrap(), h)?;
        phi_l.push(l);
        phi_r.push(r);
    }
    OPUCSystem::new(Normalization::RecurrenceNormalized, phi_l, phi_r, seq.as_slice().to_vec())
}

/// `d rho_n = ([phi_n^L]* phi_n^L)^{-1} dtheta / 2 pi`, with quadrature nodes
/// doubled from the default until moments to order `2n + 2` are resolved.
pub fn bernstein_szego_measure(sys: &OPUCSystem, n: usize) -> Result<MatMeasure> {
    if n > sys.degree() {
        return Err(Error::InvalidArgument(format!("n = {n} exceeds system degree {}", sys.degree())));
    }
    let mut measure = MatMeasure::new(
        WeightSpec::BernsteinSzego {
            poly: sys.phi_l(n).clone(),
        },
        Vec::new(),
    )?;
    // Zeros of phi_n near the circle make the weight sharply peaked.
    loop {
        match measure.check_resolution(2 * n + 2) {
            Err(Error::QuadratureUnderResolved { .. }) if measure.quad_points() < MAX_BS_QUAD_POINTS => {
                let q = 2 * measure.quad_points();
                measure = measure.with_quad_points(q)?;
            }
            other => return other.map(|_| measure),
        }
    }
}

/// Largest pointwise gap between the left form `([phi^L]* phi^L)^{-1}` and
/// the right form `(phi^R [phi^R]*)^{-1}` of the Bernstein-Szegő weight.
pub fn bernstein_szego_forms_residual(sys: &OPUCSystem, n: usize, grid: &[C64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &z in grid {
        let l = sys.phi_l(n).eval(z);
        let r = sys.phi_r(n).eval(z);
        let wl = (&l.herm_transpose() * &l).inverse()?;
        let wr = (&r * &r.herm_transpose()).inverse()?;
        worst = worst.max((&wl - &wr).spectral_norm()?);
    }
    Ok(worst)
}

/// Synthesize from `seq`, rebuild from the Bernstein-Szegő measure of order
/// `N = seq.len()`, and return the largest singular-value discrepancy
/// between recovered and prescribed coefficients.
pub fn roundtrip(seq: &ReflectionSequence) -> Result<f64> {
    let n = seq.len();
    let sys = favard_synthesize(seq, &CMat::identity(seq.p()))?;
    let measure = bernstein_szego_measure(&sys, n)?;
    let rebuilt = build_system(&measure, n)?;
    let mut worst = 0.0f64;
    for (given, got) in seq.as_slice().iter().zip(rebuilt.reflections()) {
        let (a, b) = (given.singular_values()?, got.singular_values()?);
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}
