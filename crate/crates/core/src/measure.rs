//! Matrix measures on the unit circle: a PSD weight against `dtheta / 2 pi`
//! plus finitely many point masses. Moments are `mu_m = int e^{-i m theta} d rho`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matkernel::{CMat, C64, PSD_CLAMP};
use crate::mpoly::MatPoly;
use crate::quadrature::{panel_nodes, DiscreteRule};

const TWO_PI: f64 = 2.0 * PI;
pub const DEFAULT_QUAD_POINTS: usize = 4096;
const PSD_GRID: usize = 1024;
const DOUBLING_TOL: f64 = 1e-9;

/// Density of the absolutely continuous part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum WeightSpec {
    /// `W = I_p`.
    IdentityLebesgue { p: usize },
    /// `W = diag(w_1, ..., w_p)` from scalar weights.
    DiagonalScalar { entries: Vec<WeightSpec> },
    /// `W(theta) = sum_{|k| <= K} W_k e^{i k theta}` from `W_0..W_K`, with `W_{-k} = W_k*`.
    TrigPoly { coeffs: Vec<CMat> },
    /// `inside` on the arc from `start` to `end` (counterclockwise, `0 < end - start <= 2 pi`),
    /// `eps * outside` elsewhere.
    ArcIndicator {
        start: f64,
        end: f64,
        eps: f64,
        inside: CMat,
        outside: CMat,
    },
    /// `U W U*`.
    Conjugated { inner: Box<WeightSpec>, u: CMat },
    /// `([P(z)]* P(z))^{-1}` for a polynomial `P` without zeros on the circle.
    BernsteinSzego { poly: MatPoly },
}

impl WeightSpec {
    /// Scalar trigonometric weight `sum_k c_k e^{ik theta} + conj`, `c_0` real.
    pub fn scalar_trig(coeffs: &[f64]) -> Self {
        WeightSpec::TrigPoly {
            coeffs: coeffs.iter().map(|&c| CMat::scalar(C64::new(c, 0.0))).collect(),
        }
    }

    /// Scalar indicator of the arc `[start, end]`.
    pub fn scalar_arc(start: f64, end: f64, eps: f64) -> Self {
        WeightSpec::ArcIndicator {
            start,
            end,
            eps,
            inside: CMat::identity(1),
            outside: CMat::identity(1),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            WeightSpec::IdentityLebesgue { p } => *p,
            WeightSpec::DiagonalScalar { entries } => entries.len(),
            WeightSpec::TrigPoly { coeffs } => coeffs.first().map_or(0, CMat::dim),
            WeightSpec::ArcIndicator { inside, .. } => inside.dim(),
            WeightSpec::Conjugated { u, .. } => u.dim(),
            WeightSpec::BernsteinSzego { poly } => poly.dim(),
        }
    }

    /// Structural checks; pointwise positivity is checked by [`MatMeasure::new`].
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidWeight(msg));
        match self {
            WeightSpec::IdentityLebesgue { p } => {
                if *p == 0 {
                    return invalid("IdentityLebesgue needs p >= 1".into());
                }
            }
            WeightSpec::DiagonalScalar { entries } => {
                if entries.is_empty() {
                    return invalid("DiagonalScalar needs at least one entry".into());
                }
                for e in entries {
                    e.validate()?;
                    if e.dim() != 1 {
                        return invalid(format!("DiagonalScalar entries must be scalar, got p = {}", e.dim()));
                    }
                }
            }
            WeightSpec::TrigPoly { coeffs } => {
                let w0 = coeffs.first().ok_or_else(|| Error::InvalidWeight("TrigPoly needs W_0".into()))?;
                if let Some(bad) = coeffs.iter().find(|c| c.dim() != w0.dim()) {
                    return Err(Error::DimMismatch {
                        expected: w0.dim(),
                        actual: bad.dim(),
                    });
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::NonFinite);
                }
                let dev = w0.hermitian_deviation();
                if dev > 1e-14 * (1.0 + w0.frobenius_norm()) {
                    return invalid(format!("TrigPoly W_0 is not Hermitian (deviation {dev:e})"));
                }
            }
            WeightSpec::ArcIndicator {
                start,
                end,
                eps,
                inside,
                outside,
            } => {
                if !(start.is_finite() && end.is_finite() && eps.is_finite()) {
                    return Err(Error::NonFinite);
                }
                let len = end - start;
                if !(len > 0.0 && len <= TWO_PI) {
                    return invalid(format!("ArcIndicator needs 0 < end - start <= 2 pi, got {len}"));
                }
                if *eps < 0.0 {
                    return invalid(format!("ArcIndicator floor eps must be >= 0, got {eps}"));
                }
                if inside.dim() != outside.dim() {
                    return Err(Error::DimMismatch {
                        expected: inside.dim(),
                        actual: outside.dim(),
                    });
                }
                for m in [inside, outside] {
                    check_psd(m).map_err(|e| Error::InvalidWeight(format!("ArcIndicator matrix: {e}")))?;
                }
            }
            WeightSpec::Conjugated { inner, u } => {
                inner.validate()?;
                if inner.dim() != u.dim() {
                    return Err(Error::DimMismatch {
                        expected: inner.dim(),
                        actual: u.dim(),
                    });
                }
                if !u.is_finite() || !u.is_unitary(1e-10) {
                    return invalid("Conjugated needs a unitary U".into());
                }
            }
            WeightSpec::BernsteinSzego { poly } => {
                if poly.coeffs().iter().any(|c| !c.is_finite()) {
                    return Err(Error::NonFinite);
                }
            }
        }
        Ok(())
    }

    /// `W(theta)`.
    pub fn value(&self, theta: f64) -> Result<CMat> {
        Ok(match self {
            WeightSpec::IdentityLebesgue { p } => CMat::identity(*p),
            WeightSpec::DiagonalScalar { entries } => {
                let diag = entries
                    .iter()
                    .map(|e| e.value(theta).map(|v| v[(0, 0)]))
                    .collect::<Result<Vec<_>>>()?;
                CMat::from_diag(&diag)
            }
            WeightSpec::TrigPoly { coeffs } => {
                let mut acc = coeffs[0].clone();
                for (k, c) in coeffs.iter().enumerate().skip(1) {
                    let e = C64::from_polar(1.0, k as f64 * theta);
                    acc = &(&acc + &c.scale(e)) + &c.herm_transpose().scale(e.conj());
                }
                acc
            }
            WeightSpec::ArcIndicator {
                start,
                end,
                eps,
                inside,
                outside,
            } => {
                if arc_contains(*start, *end, theta) {
                    inside.clone()
                } else {
                    outside.scale_real(*eps)
                }
            }
            WeightSpec::Conjugated { inner, u } => &(u * &inner.value(theta)?) * &u.herm_transpose(),
            WeightSpec::BernsteinSzego { poly } => {
                let v = poly.eval(C64::from_polar(1.0, theta));
                (&v.herm_transpose() * &v).inverse()?.hermitian_part()
            }
        })
    }

    /// Panel breakpoints in `[0, 2 pi)`, unsorted, possibly repeated.
    fn raw_breakpoints(&self) -> Vec<f64> {
        match self {
            WeightSpec::ArcIndicator { start, end, .. } => {
                if end - start >= TWO_PI {
                    Vec::new()
                } else {
                    vec![start.rem_euclid(TWO_PI), end.rem_euclid(TWO_PI)]
                }
            }
            WeightSpec::DiagonalScalar { entries } => entries.iter().flat_map(|e| e.raw_breakpoints()).collect(),
            WeightSpec::Conjugated { inner, .. } => inner.raw_breakpoints(),
            _ => Vec::new(),
        }
    }

    /// Sorted, deduplicated panel breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.raw_breakpoints();
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, c| (*a - *c).abs() < 1e-14);
        b
    }

    /// Exact Fourier coefficient when the weight is a trigonometric polynomial.
    pub fn analytic_moment(&self, m: i64) -> Option<CMat> {
        match self {
            WeightSpec::IdentityLebesgue { p } => Some(if m == 0 { CMat::identity(*p) } else { CMat::zeros(*p) }),
            WeightSpec::TrigPoly { coeffs } => {
                let k = m.unsigned_abs() as usize;
                let p = coeffs[0].dim();
                Some(match coeffs.get(k) {
                    None => CMat::zeros(p),
                    Some(c) if m == 0 => c.hermitian_part(),
                    Some(c) if m > 0 => c.clone(),
                    Some(c) => c.herm_transpose(),
                })
            }
            WeightSpec::DiagonalScalar { entries } => {
                let diag = entries
                    .iter()
                    .map(|e| e.analytic_moment(m).map(|v| v[(0, 0)]))
                    .collect::<Option<Vec<_>>>()?;
                Some(CMat::from_diag(&diag))
            }
            WeightSpec::Conjugated { inner, u } => {
                inner.analytic_moment(m).map(|v| &(u * &v) * &u.herm_transpose())
            }
            _ => None,
        }
    }

    /// Trigonometric degree `K` when the weight is a trigonometric polynomial.
    pub fn trig_degree(&self) -> Option<usize> {
        match self {
            WeightSpec::IdentityLebesgue { .. } => Some(0),
            WeightSpec::TrigPoly { coeffs } => Some(coeffs.len() - 1),
            WeightSpec::DiagonalScalar { entries } => entries
                .iter()
                .map(WeightSpec::trig_degree)
                .collect::<Option<Vec<_>>>()
                .map(|v| v.into_iter().max().unwrap_or(0)),
            WeightSpec::Conjugated { inner, .. } => inner.trig_degree(),
            _ => None,
        }
    }
}

fn arc_contains(start: f64, end: f64, theta: f64) -> bool {
    let len = end - start;
    len >= TWO_PI || (theta - start).rem_euclid(TWO_PI) <= len
}

fn check_psd(m: &CMat) -> Result<()> {
    let eig = m.herm_eig()?;
    let scale = 1.0 + eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let lambda_min = eig.eigenvalues[0];
    if lambda_min < -PSD_CLAMP * scale {
        return Err(Error::NotPsd { lambda_min });
    }
    Ok(())
}

/// Point mass `mass` at angle `theta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub theta: f64,
    pub mass: CMat,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    p: usize,
    weight: Option<WeightSpec>,
    #[serde(default)]
    atoms: Vec<Atom>,
    #[serde(rename = "quadPoints", default = "default_quad_points")]
    quad_points: usize,
}

fn default_quad_points() -> usize {
    DEFAULT_QUAD_POINTS
}

/// `d rho = W(theta) dtheta / 2 pi + sum_j M_j delta_{theta_j}`.
///
/// A missing weight means a purely atomic measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct MatMeasure {
    p: usize,
    weight: Option<WeightSpec>,
    atoms: Vec<Atom>,
    quad_points: usize,
}

impl TryFrom<RawMeasure> for MatMeasure {
    type Error = Error;
    fn try_from(raw: RawMeasure) -> Result<Self> {
        let m = MatMeasure::build(raw.weight, raw.atoms, raw.quad_points)?;
        if m.p != raw.p {
            return Err(Error::InvalidMeasure(format!("p = {} but components have dimension {}", raw.p, m.p)));
        }
        Ok(m)
    }
}

impl From<MatMeasure> for RawMeasure {
    fn from(m: MatMeasure) -> Self {
        RawMeasure {
            p: m.p,
            weight: m.weight,
            atoms: m.atoms,
            quad_points: m.quad_points,
        }
    }
}

impl MatMeasure {
    pub fn new(weight: WeightSpec, atoms: Vec<Atom>) -> Result<Self> {
        Self::build(Some(weight), atoms, DEFAULT_QUAD_POINTS)
    }

    pub fn atomic(atoms: Vec<Atom>) -> Result<Self> {
        Self::build(None, atoms, DEFAULT_QUAD_POINTS)
    }

    pub fn lebesgue(p: usize) -> Self {
        Self::new(WeightSpec::IdentityLebesgue { p }, Vec::new()).expect("identity weight is valid")
    }

    pub fn with_quad_points(self, quad_points: usize) -> Result<Self> {
        Self::build(self.weight, self.atoms, quad_points)
    }

    fn build(weight: Option<WeightSpec>, atoms: Vec<Atom>, quad_points: usize) -> Result<Self> {
        if quad_points < 2 {
            return Err(Error::InvalidMeasure(format!("quadPoints must be >= 2, got {quad_points}")));
        }
        let p = match (&weight, atoms.first()) {
            (Some(w), _) => w.dim(),
            (None, Some(a)) => a.mass.dim(),
            (None, None) => return Err(Error::InvalidMeasure("measure has neither weight nor atoms".into())),
        };
        if p == 0 {
            return Err(Error::EmptyMatrix);
        }
        if let Some(w) = &weight {
            w.validate()?;
            check_weight_on_grid(w)?;
        }
        let mut normalized = Vec::with_capacity(atoms.len());
        for a in atoms {
            if !a.theta.is_finite() || !a.mass.is_finite() {
                return Err(Error::NonFinite);
            }
            if a.mass.dim() != p {
                return Err(Error::DimMismatch {
                    expected: p,
                    actual: a.mass.dim(),
                });
            }
            check_psd(&a.mass).map_err(|e| Error::InvalidMeasure(format!("atom mass at {}: {e}", a.theta)))?;
            normalized.push(Atom {
                theta: a.theta.rem_euclid(TWO_PI),
                mass: a.mass.hermitian_part(),
            });
        }
        for (i, a) in normalized.iter().enumerate() {
            if normalized[..i].iter().any(|b| b.theta == a.theta) {
                return Err(Error::InvalidMeasure(format!("duplicate atom angle {}", a.theta)));
            }
        }
        Ok(Self {
            p,
            weight,
            atoms: normalized,
            quad_points,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn weight(&self) -> Option<&WeightSpec> {
        self.weight.as_ref()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn quad_points(&self) -> usize {
        self.quad_points
    }

    /// Panel breakpoints of the weight; empty for a single periodic panel.
    pub fn panels(&self) -> Vec<f64> {
        self.weight.as_ref().map(WeightSpec::breakpoints).unwrap_or_default()
    }

    /// True when every moment is available in closed form.
    pub fn is_analytic(&self) -> bool {
        self.weight.as_ref().is_none_or(|w| w.trig_degree().is_some())
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn spec_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("measure serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Quadrature rule for the absolutely continuous part with `q` nodes per
    /// panel; nodes where the weight vanishes are dropped.
    pub fn ac_rule(&self, q: usize) -> Result<DiscreteRule> {
        let mut rule = DiscreteRule::default();
        if let Some(w) = &self.weight {
            for node in panel_nodes(&w.breakpoints(), q) {
                let mass = w.value(node.theta)?.scale_real(node.weight);
                if !mass.is_zero() {
                    rule.push(node.theta, mass);
                }
            }
        }
        Ok(rule)
    }

    /// Discrete rule for the whole measure (weight nodes followed by atoms).
    pub fn rule(&self, q: usize) -> Result<DiscreteRule> {
        let mut rule = self.ac_rule(q)?;
        for a in &self.atoms {
            rule.push(a.theta, a.mass.clone());
        }
        Ok(rule)
    }

    /// Rule used to build polynomials up to degree `n`: the configured
    /// resolution, raised for trigonometric weights so that every inner
    /// product of degree-`n` polynomials is integrated exactly.
    pub fn rule_for_degree(&self, n: usize) -> Result<DiscreteRule> {
        let q = match self.weight.as_ref().and_then(WeightSpec::trig_degree) {
            Some(k) => self.quad_points.max(2 * n + k + 4),
            None => self.quad_points,
        };
        self.rule(q)
    }

    fn atom_moment(&self, m: i64) -> CMat {
        let mut acc = CMat::zeros(self.p);
        for a in &self.atoms {
            acc = &acc + &a.mass.scale(C64::from_polar(1.0, -(m as f64) * a.theta));
        }
        acc
    }

    fn quadrature_moments(&self, q: usize, order: usize) -> Result<Vec<CMat>> {
        let rule = self.ac_rule(q)?;
        Ok((0..=order as i64)
            .map(|m| {
                let mut acc = CMat::zeros(self.p);
                for (theta, mass) in rule.thetas.iter().zip(&rule.masses) {
                    acc = &acc + &mass.scale(C64::from_polar(1.0, -(m as f64) * theta));
                }
                acc
            })
            .collect())
    }

    /// Moments of the absolutely continuous part for `m = 0..=order`, checked
    /// against a doubled resolution.
    fn weight_moments(&self, order: usize) -> Result<Vec<CMat>> {
        let Some(w) = &self.weight else {
            return Ok(vec![CMat::zeros(self.p); order + 1]);
        };
        if w.trig_degree().is_some() {
            return Ok((0..=order as i64).map(|m| w.analytic_moment(m).unwrap()).collect());
        }
        let coarse = self.quadrature_moments(self.quad_points, order)?;
        let fine = self.quadrature_moments(2 * self.quad_points, order)?;
        let scale = 1.0 + coarse[0].spectral_norm()?;
        for (m, (c, f)) in coarse.iter().zip(&fine).enumerate() {
            let change = (c - f).spectral_norm()?;
            if change > DOUBLING_TOL * scale {
                return Err(Error::QuadratureUnderResolved { order: m as i64, change });
            }
        }
        Ok(coarse)
    }

    /// Check that moments up to `order` are resolved by the configured quadrature.
    pub fn check_resolution(&self, order: usize) -> Result<()> {
        self.weight_moments(order).map(|_| ())
    }

    /// `mu_m`.
    pub fn moment(&self, m: i64) -> Result<CMat> {
        let w = self.weight_moments(m.unsigned_abs() as usize)?;
        let wm = &w[m.unsigned_abs() as usize];
        let wm = if m < 0 { wm.herm_transpose() } else { wm.clone() };
        Ok(&wm + &self.atom_moment(m))
    }

    /// `mu_{-order} .. mu_order`.
    pub fn moment_table(&self, order: usize) -> Result<MomentTable> {
        let w = self.weight_moments(order)?;
        let moments = w
            .iter()
            .enumerate()
            .map(|(m, wm)| wm + &self.atom_moment(m as i64))
            .collect();
        Ok(MomentTable::from_nonnegative(moments))
    }
}

fn check_weight_on_grid(w: &WeightSpec) -> Result<()> {
    let mut thetas: Vec<f64> = (0..PSD_GRID).map(|k| TWO_PI * k as f64 / PSD_GRID as f64).collect();
    let b = w.breakpoints();
    for (i, &a) in b.iter().enumerate() {
        let next = b.get(i + 1).copied().unwrap_or(b[0] + TWO_PI);
        thetas.push((a + next) / 2.0);
    }
    for theta in thetas {
        let v = w.value(theta)?;
        if !v.is_finite() {
            return Err(Error::NonFinite);
        }
        check_psd(&v).map_err(|e| Error::InvalidWeight(format!("W({theta:.6}) is not PSD: {e}")))?;
    }
    Ok(())
}

/// `mu_m` for `|m| <= M`, stored for `m >= 0` with `mu_{-m} = mu_m*`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    moments: Vec<CMat>,
}

#[derive(Serialize)]
struct MomentTableJson<'a> {
    p: usize,
    #[serde(rename = "M")]
    order: usize,
    /// `mu_{-M} .. mu_M`
    moments: Vec<std::borrow::Cow<'a, CMat>>,
}

impl Serialize for MomentTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let order = self.order() as i64;
        MomentTableJson {
            p: self.p(),
            order: self.order(),
            moments: (-order..=order)
                .map(|m| {
                    if m < 0 {
                        std::borrow::Cow::Owned(self.get(m))
                    } else {
                        std::borrow::Cow::Borrowed(&self.moments[m as usize])
                    }
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl MomentTable {
    /// From `mu_0 .. mu_M`; `mu_0` is replaced by its Hermitian part.
    pub fn from_nonnegative(mut moments: Vec<CMat>) -> Self {
        assert!(!moments.is_empty(), "moment table needs mu_0");
        moments[0] = moments[0].hermitian_part();
        Self { moments }
    }

    pub fn p(&self) -> usize {
        self.moments[0].dim()
    }

    /// `M`.
    pub fn order(&self) -> usize {
        self.moments.len() - 1
    }

    /// `mu_m`, panicking when `|m| > M`.
    pub fn get(&self, m: i64) -> CMat {
        let c = &self.moments[m.unsigned_abs() as usize];
        if m < 0 {
            c.herm_transpose()
        } else {
            c.clone()
        }
    }

    fn require(&self, needed: usize) -> Result<()> {
        if needed > self.order() {
            return Err(Error::InsufficientMoments {
                required: needed,
                available: self.order(),
            });
        }
        Ok(())
    }

    /// Block-Toeplitz Gram matrix of size `(n+1) p`: block `(j, k)` is
    /// `<z^j I, z^k I>_L = mu_{k-j}`, or `<z^j I, z^k I>_R = mu_{j-k}` when `right`.
    pub fn block_toeplitz(&self, n: usize, right: bool) -> Result<CMat> {
        self.require(n)?;
        let p = self.p();
        let blocks: Vec<CMat> = (-(n as i64)..=n as i64).map(|m| self.get(m)).collect();
        Ok(CMat::from_fn((n + 1) * p, |r, c| {
            let (j, k) = ((r / p) as i64, (c / p) as i64);
            let m = if right { j - k } else { k - j };
            blocks[(m + n as i64) as usize][(r % p, c % p)]
        }))
    }

    /// Smallest eigenvalue of the left Gram section of degree `n`.
    pub fn min_section_eigenvalue(&self, n: usize) -> Result<f64> {
        Ok(self.block_toeplitz(n, false)?.herm_eig()?.eigenvalues[0])
    }
}

/// `<P, Q>_L = int P d rho Q* = sum_{j,k} P_j mu_{k-j} Q_k*`.
pub fn inner_left(p: &MatPoly, q: &MatPoly, t: &MomentTable) -> Result<CMat> {
    check_dims(p, q, t)?;
    t.require(p.deg() + q.deg())?;
    let mut acc = CMat::zeros(t.p());
    for (j, pj) in p.coeffs().iter().enumerate() {
        for (k, qk) in q.coeffs().iter().enumerate() {
            let mu = t.get(k as i64 - j as i64);
            acc = &acc + &(&(pj * &mu) * &qk.herm_transpose());
        }
    }
    Ok(acc)
}

/// `<P, Q>_R = int P* d rho Q = sum_{j,k} P_j* mu_{j-k} Q_k`.
pub fn inner_right(p: &MatPoly, q: &MatPoly, t: &MomentTable) -> Result<CMat> {
    check_dims(p, q, t)?;
    t.require(p.deg() + q.deg())?;
    let mut acc = CMat::zeros(t.p());
    for (j, pj) in p.coeffs().iter().enumerate() {
        for (k, qk) in q.coeffs().iter().enumerate() {
            let mu = t.get(j as i64 - k as i64);
            acc = &acc + &(&(&pj.herm_transpose() * &mu) * qk);
        }
    }
    Ok(acc)
}

fn check_dims(p: &MatPoly, q: &MatPoly, t: &MomentTable) -> Result<()> {
    for d in [p.dim(), q.dim()] {
        if d != t.p() {
            return Err(Error::DimMismatch {
                expected: t.p(),
                actual: d,
            });
        }
    }
    Ok(())
}
