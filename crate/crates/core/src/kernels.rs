//! Christoffel-Darboux kernels and the circle identities of an orthonormal system.
//!
//! Polynomials are evaluated with compensated Horner, so the identities are
//! checked on the stored coefficients with rounding of order `u` relative to
//! the polynomial values, even when the coefficients are much larger than
//! the values. Every check returns a [`Residual`] that carries, per grid
//! point, the measured defect, a magnitude scale and a floating-point floor
//! propagated from those rounding bounds.

use crate::error::{Error, Result};
use crate::matkernel::{CMat, C64};
use crate::mpoly::MatPoly;
use crate::opuc::OPUCSystem;
use crate::quadrature::circle_grid;

const U: f64 = f64::EPSILON;

/// A matrix value with an absolute error bound in Frobenius norm.
#[derive(Clone, Debug)]
pub(crate) struct Approx {
    pub v: CMat,
    pub err: f64,
}

impl Approx {
    pub fn eval(poly: &MatPoly, z: C64) -> Self {
        let v = poly.eval_compensated(z);
        Self {
            err: poly.compensated_error_bound(z, &v),
            v,
        }
    }

    /// `tilde phi(z) = z^n phi(z)*` for `z` on the unit circle, from `phi(z)`.
    pub fn tilde_on_circle(phi: &Self, z: C64, n: usize) -> Self {
        let v = phi.v.herm_transpose().scale(z.powi(n as i32));
        Self {
            err: phi.err + (n as f64 + 2.0) * U * v.frobenius_norm(),
            v,
        }
    }

    pub fn exact(v: CMat) -> Self {
        Self { v, err: 0.0 }
    }

    fn norm(&self) -> f64 {
        self.v.frobenius_norm()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            v: self.v.herm_transpose(),
            err: self.err,
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let (na, nb) = (self.norm(), o.norm());
        let p = self.v.dim() as f64;
        Self {
            v: &self.v * &o.v,
            err: self.err * nb + na * o.err + self.err * o.err + 2.0 * p * U * na * nb,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            v: &self.v + &o.v,
            err: self.err + o.err + U * (self.norm() + o.norm()),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            v: &self.v - &o.v,
            err: self.err + o.err + U * (self.norm() + o.norm()),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            v: self.v.scale(c),
            err: c.norm() * (self.err + U * self.norm()),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self.v.inverse()?;
        let ni = inv.frobenius_norm();
        let p = self.v.dim() as f64;
        Ok(Self {
            err: ni * ni * (self.err + 4.0 * p * U * self.norm()),
            v: inv,
        })
    }
}

/// Pointwise defects of an identity over a grid.
#[derive(Clone, Debug, Default)]
pub struct Residual {
    points: Vec<(f64, f64, f64)>,
}

impl Residual {
    pub(crate) fn push(&mut self, value: f64, scale: f64, floor: f64) {
        self.points.push((value, scale, floor));
    }

    /// Largest defect.
    pub fn value(&self) -> f64 {
        self.points.iter().map(|p| p.0).fold(0.0, f64::max)
    }

    /// Largest floating-point floor.
    pub fn floor(&self) -> f64 {
        self.points.iter().map(|p| p.2).fold(0.0, f64::max)
    }

    /// Largest magnitude scale.
    pub fn scale(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(0.0, f64::max)
    }

    /// Largest `floor / scale`.
    pub fn relative_floor(&self) -> f64 {
        self.points.iter().map(|p| p.2 / p.1).fold(0.0, f64::max)
    }

    /// Largest `defect / scale`.
    pub fn relative(&self) -> f64 {
        self.points.iter().map(|p| p.0 / p.1).fold(0.0, f64::max)
    }

    /// `defect <= tol * scale + floor` at every point.
    pub fn passes(&self, tol: f64) -> bool {
        self.points.iter().all(|&(v, s, f)| v <= tol * s + f)
    }

    /// `defect <= bound + floor` at every point.
    pub fn below(&self, bound: f64) -> bool {
        self.points.iter().all(|&(v, _, f)| v <= bound + f)
    }

    pub fn merge(mut self, other: Residual) -> Self {
        self.points.extend(other.points);
        self
    }
}

/// `sum_{k <= n} [phi_k^L(z)]* phi_k^L(xi)`.
pub fn cd_kernel_left(sys: &OPUCSystem, n: usize, z: C64, xi: C64) -> CMat {
    cd_left_approx(sys, n, z, xi).0.v
}

/// `sum_{k <= n} phi_k^R(xi) [phi_k^R(z)]*`.
pub fn cd_kernel_right(sys: &OPUCSystem, n: usize, z: C64, xi: C64) -> CMat {
    cd_right_approx(sys, n, z, xi).0.v
}

fn cd_left_approx(sys: &OPUCSystem, n: usize, z: C64, xi: C64) -> (Approx, f64) {
    let mut acc = Approx::exact(CMat::zeros(sys.p()));
    let mut mag = 0.0;
    for k in 0..=n {
        let a = Approx::eval(sys.phi_l(k), z);
        let b = Approx::eval(sys.phi_l(k), xi);
        mag += a.norm() * b.norm();
        acc = acc.add(&a.adjoint().mul(&b));
    }
    (acc, mag)
}

fn cd_right_approx(sys: &OPUCSystem, n: usize, z: C64, xi: C64) -> (Approx, f64) {
    let mut acc = Approx::exact(CMat::zeros(sys.p()));
    let mut mag = 0.0;
    for k in 0..=n {
        let a = Approx::eval(sys.phi_r(k), xi);
        let b = Approx::eval(sys.phi_r(k), z);
        mag += a.norm() * b.norm();
        acc = acc.add(&a.mul(&b.adjoint()));
    }
    (acc, mag)
}

/// Default `(z, xi)` grid: a 16 x 16 tensor of circle points and 16
/// interior pairs with `|z|, |xi| <= 0.9`.
pub fn default_cd_pairs() -> Vec<(C64, C64)> {
    let circle = circle_grid(16);
    let mut pairs: Vec<(C64, C64)> = circle
        .iter()
        .flat_map(|&z| circle.iter().map(move |&xi| (z, xi)))
        .collect();
    for k in 0..16 {
        let t = k as f64;
        let z = C64::from_polar(0.9 * (0.2 + 0.8 * ((t * 0.37).sin().abs())), 0.7 * t + 0.1);
        let xi = C64::from_polar(0.9 * (0.1 + 0.9 * ((t * 0.61 + 0.5).cos().abs())), -1.3 * t + 0.4);
        pairs.push((z, xi));
    }
    pairs
}

/// Defects of the Christoffel-Darboux formula
/// `(1 - xi conj(z)) K_n(z, xi) = [tilde phi_n^R(z)]* tilde phi_n^R(xi) - xi conj(z) [phi_n^L(z)]* phi_n^L(xi)`
/// and of its dual for the right kernel, with scale `1 + magnitudes`.
pub fn verify_cd(sys: &OPUCSystem, n: usize, pairs: &[(C64, C64)]) -> Result<Residual> {
    let mut res = Residual::default();
    let (tl, tr) = (sys.tilde_l(n), sys.tilde_r(n));
    for &(z, xi) in pairs {
        let w = xi * z.conj();
        let one_minus = C64::new(1.0, 0.0) - w;

        let (kl, mag_l) = cd_left_approx(sys, n, z, xi);
        let lhs = kl.scale(one_minus);
        let (trz, trx) = (Approx::eval(&tr, z), Approx::eval(&tr, xi));
        let (lz, lx) = (Approx::eval(sys.phi_l(n), z), Approx::eval(sys.phi_l(n), xi));
        let rhs = trz.adjoint().mul(&trx).sub(&lz.adjoint().mul(&lx).scale(w));
        let d = lhs.sub(&rhs);
        let scale = 1.0 + one_minus.norm() * mag_l + trz.norm() * trx.norm() + w.norm() * lz.norm() * lx.norm();
        res.push(d.v.spectral_norm()?, scale, d.err);

        let (kr, mag_r) = cd_right_approx(sys, n, z, xi);
        let lhs = kr.scale(one_minus);
        let (tlx, tlz) = (Approx::eval(&tl, xi), Approx::eval(&tl, z));
        let (rx, rz) = (Approx::eval(sys.phi_r(n), xi), Approx::eval(sys.phi_r(n), z));
        let rhs = tlx.mul(&tlz.adjoint()).sub(&rx.mul(&rz.adjoint()).scale(w));
        let d = lhs.sub(&rhs);
        let scale = 1.0 + one_minus.norm() * mag_r + tlx.norm() * tlz.norm() + w.norm() * rx.norm() * rz.norm();
        res.push(d.v.spectral_norm()?, scale, d.err);
    }
    Ok(res)
}

fn check_circle(grid: &[C64]) -> Result<()> {
    match grid.iter().find(|z| (z.norm() - 1.0).abs() > 1e-12) {
        Some(z) => Err(Error::InvalidArgument(format!("grid point {z} is not on the unit circle"))),
        None => Ok(()),
    }
}

/// Defect of `phi_n^R tilde phi_n^R = tilde phi_n^L phi_n^L` on circle points,
/// where `tilde phi_n(z) = z^n phi_n(z)*`.
pub fn circle_identity_residual(sys: &OPUCSystem, n: usize, grid: &[C64]) -> Result<Residual> {
    check_circle(grid)?;
    let mut res = Residual::default();
    for &z in grid {
        let (r, l) = (Approx::eval(sys.phi_r(n), z), Approx::eval(sys.phi_l(n), z));
        let (trz, tlz) = (Approx::tilde_on_circle(&r, z, n), Approx::tilde_on_circle(&l, z, n));
        let d = r.mul(&trz).sub(&tlz.mul(&l));
        let scale = 1.0 + r.norm() * trz.norm() + tlz.norm() * l.norm();
        res.push(d.v.spectral_norm()?, scale, d.err);
    }
    Ok(res)
}

/// Unitarity of `R(z) = tilde phi_n^R(z) phi_n^L(z)^{-1}` on circle points,
/// together with the agreement `R = phi_n^R(z)^{-1} tilde phi_n^L(z)`.
#[derive(Clone, Debug)]
pub struct RatioUnitarity {
    /// `||R R* - I||_2`.
    pub deviation: Residual,
    /// `||R - phi_n^R^{-1} tilde phi_n^L||_2`.
    pub consistency: Residual,
}

impl RatioUnitarity {
    pub fn passes(&self, tol: f64) -> bool {
        self.deviation.passes(tol) && self.consistency.passes(tol)
    }
}

pub fn ratio_unitarity(sys: &OPUCSystem, n: usize, grid: &[C64]) -> Result<RatioUnitarity> {
    check_circle(grid)?;
    let mut deviation = Residual::default();
    let mut consistency = Residual::default();
    let eye = Approx::exact(CMat::identity(sys.p()));
    for &z in grid {
        let (l, rr) = (Approx::eval(sys.phi_l(n), z), Approx::eval(sys.phi_r(n), z));
        let (tl, tr) = (Approx::tilde_on_circle(&l, z, n), Approx::tilde_on_circle(&rr, z, n));
        let r = tr.mul(&l.inverse()?);
        let alt = rr.inverse()?.mul(&tl);
        let d = r.mul(&r.adjoint()).sub(&eye);
        deviation.push(d.v.spectral_norm()?, 1.0, d.err);
        let c = r.sub(&alt);
        consistency.push(c.v.spectral_norm()?, 1.0, c.err);
    }
    Ok(RatioUnitarity { deviation, consistency })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{MatMeasure, WeightSpec};
    use crate::opuc::build_system;
    use crate::recurrence::{favard_synthesize, ReflectionSequence};
    use std::f64::consts::PI;

    fn synthesized(seed: u64, p: usize, n: usize) -> OPUCSystem {
        favard_synthesize(&ReflectionSequence::random(seed, p, n, 0.9).unwrap(), &CMat::identity(p)).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let lebesgue = build_system(&MatMeasure::lebesgue(2), 4).unwrap();
        let z = C64::new(0.3, 0.4);
        let xi = C64::new(-0.5, 0.2);
        assert!((&cd_kernel_left(&lebesgue, 0, z, xi) - &CMat::identity(2)).max_abs() < 1e-14);
        let w = z.conj() * xi;
        let geometric: C64 = (0..=4).map(|k| w.powu(k)).sum();
        assert!((&cd_kernel_left(&lebesgue, 4, z, xi) - &CMat::identity(2).scale(geometric)).max_abs() < 1e-14);
        assert!((&cd_kernel_right(&lebesgue, 4, z, xi) - &CMat::identity(2).scale(geometric)).max_abs() < 1e-14);
    }

    #[test]
    fn diagonal_kernel_is_psd_and_monotone() {
        let sys = synthesized(51, 2, 6);
        for z in circle_grid(12) {
            let mut prev = CMat::zeros(2);
            for n in 0..=6 {
                let k = cd_kernel_left(&sys, n, z, z);
                assert!(k.hermitian_deviation() < 1e-12);
                let eig = k.herm_eig().unwrap();
                assert!(eig.eigenvalues[0] > 0.0);
                assert!(k.trace().re >= 2.0 - 1e-12);
                assert!((&k - &prev).herm_eig().unwrap().eigenvalues[0] >= -1e-12);
                prev = k;
            }
        }
    }

    #[test]
    fn cd_identities_hold() {
        let lebesgue = build_system(&MatMeasure::lebesgue(2), 3).unwrap();
        let r = verify_cd(&lebesgue, 2, &default_cd_pairs()).unwrap();
        assert!(r.value() < 1e-14);
        for n in 0..=6 {
            let r = verify_cd(&synthesized(52, 2, 6), n, &default_cd_pairs()).unwrap();
            assert!(r.passes(1e-9), "n={n} value={:e}", r.value());
            assert!(r.value() < 1e-12);
        }
    }

    #[test]
    fn perturbed_coefficient_breaks_cd() {
        let sys = synthesized(53, 2, 4);
        let mut json: serde_json::Value = serde_json::to_value(&sys).unwrap();
        let entry = &mut json["phiL"][3]["coeffs"][1][0][1][0];
        *entry = serde_json::json!(entry.as_f64().unwrap() + 1e-6);
        let broken: OPUCSystem = serde_json::from_value(json).unwrap();
        assert!(!verify_cd(&broken, 4, &default_cd_pairs()).unwrap().passes(1e-9));
    }

    #[test]
    fn circle_identity_and_ratio_unitarity() {
        let grid = circle_grid(128);
        for n in 0..=5 {
            let sys = synthesized(54, 3, 5);
            let c = circle_identity_residual(&sys, n, &grid).unwrap();
            assert!(c.passes(1e-10) && c.value() < 1e-12);
            let u = ratio_unitarity(&synthesized(55, 2, 5), n, &grid).unwrap();
            assert!(u.passes(1e-10) && u.deviation.value() < 1e-12);
        }
        let lebesgue = build_system(&MatMeasure::lebesgue(2), 3).unwrap();
        let u = ratio_unitarity(&lebesgue, 3, &grid).unwrap();
        assert!(u.deviation.value() < 1e-14);
        let scalar = build_system(&MatMeasure::new(WeightSpec::scalar_trig(&[1.0, 0.5]), vec![]).unwrap(), 4).unwrap();
        let u = ratio_unitarity(&scalar, 4, &grid).unwrap();
        assert!(u.deviation.value() < 1e-13);
    }

    #[test]
    fn identities_hold_with_large_coefficients() {
        let arc = MatMeasure::new(WeightSpec::scalar_arc(0.0, PI, 0.0), vec![]).unwrap();
        let sys = build_system(&arc, 20).unwrap();
        assert!(sys.phi_l(20).coeffs().iter().any(|c| c.max_abs() > 1e6));
        let grid = circle_grid(256);
        let u = ratio_unitarity(&sys, 20, &grid).unwrap();
        assert!(u.deviation.value() < 1e-13, "{:e}", u.deviation.value());
        assert!(u.deviation.floor() < 1e-13);
        assert!(u.passes(1e-10));
        // Rounding of the stored coefficients alone is of relative size ~1e-10 here.
        let cd = verify_cd(&sys, 20, &default_cd_pairs()).unwrap();
        assert!(cd.relative() < 1e-9, "{:e}", cd.relative());
        assert!(cd.floor() < 1e-9 * cd.scale());
        assert!(circle_identity_residual(&sys, 20, &grid).unwrap().passes(1e-10));
    }
}
