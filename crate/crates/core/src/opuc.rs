//! Left and right orthonormal matrix polynomial systems and their
//! reflection coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matkernel::{CMat, C64};
use crate::measure::{inner_left, MatMeasure, MomentTable};
use crate::mpoly::MatPoly;
use crate::quadrature::DiscreteRule;
use crate::recurrence::{defect_inverses, szego_step};

/// How the unitary freedom of each `phi_n` is fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// `phi_0 = mu_0^{-1/2}`, then the Szegő recurrences.
    RecurrenceNormalized,
    /// Hermitian positive definite leading coefficient at every degree.
    HPDNormalized,
}

/// `phi_0^L..phi_N^L`, `phi_0^R..phi_N^R` and `H_1..H_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystem", into = "RawSystem")]
pub struct OPUCSystem {
    p: usize,
    normalization: Normalization,
    phi_l: Vec<MatPoly>,
    phi_r: Vec<MatPoly>,
    h: Vec<CMat>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    p: usize,
    #[serde(rename = "N")]
    n: usize,
    normalization: Normalization,
    #[serde(rename = "phiL")]
    phi_l: Vec<MatPoly>,
    #[serde(rename = "phiR")]
    phi_r: Vec<MatPoly>,
    #[serde(rename = "H")]
    h: Vec<CMat>,
}

impl TryFrom<RawSystem> for OPUCSystem {
    type Error = Error;
    fn try_from(raw: RawSystem) -> Result<Self> {
        let sys = OPUCSystem::new(raw.normalization, raw.phi_l, raw.phi_r, raw.h)?;
        if sys.p != raw.p || sys.degree() != raw.n {
            return Err(Error::InvalidArgument(format!(
                "header says p = {}, N = {} but data has p = {}, N = {}",
                raw.p,
                raw.n,
                sys.p,
                sys.degree()
            )));
        }
        Ok(sys)
    }
}

impl From<OPUCSystem> for RawSystem {
    fn from(s: OPUCSystem) -> Self {
        RawSystem {
            p: s.p,
            n: s.degree(),
            normalization: s.normalization,
            phi_l: s.phi_l,
            phi_r: s.phi_r,
            h: s.h,
        }
    }
}

impl OPUCSystem {
    /// Checks shapes: `N + 1` polynomials per family with formal degrees
    /// `0..=N`, `N` coefficients, one common dimension.
    pub fn new(normalization: Normalization, phi_l: Vec<MatPoly>, phi_r: Vec<MatPoly>, h: Vec<CMat>) -> Result<Self> {
        let first = phi_l
            .first()
            .ok_or_else(|| Error::InvalidArgument("system needs phi_0".into()))?;
        let p = first.dim();
        if phi_r.len() != phi_l.len() || h.len() + 1 != phi_l.len() {
            return Err(Error::InvalidArgument(format!(
                "expected N+1 left, N+1 right polynomials and N coefficients, got {}, {}, {}",
                phi_l.len(),
                phi_r.len(),
                h.len()
            )));
        }
        for (k, (l, r)) in phi_l.iter().zip(&phi_r).enumerate() {
            for poly in [l, r] {
                if poly.dim() != p {
                    return Err(Error::DimMismatch {
                        expected: p,
                        actual: poly.dim(),
                    });
                }
                if poly.deg() != k {
                    return Err(Error::InvalidArgument(format!("phi_{k} has formal degree {}", poly.deg())));
                }
            }
        }
        if let Some(bad) = h.iter().find(|m| m.dim() != p) {
            return Err(Error::DimMismatch {
                expected: p,
                actual: bad.dim(),
            });
        }
        Ok(Self {
            p,
            normalization,
            phi_l,
            phi_r,
            h,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `N`.
    pub fn degree(&self) -> usize {
        self.h.len()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn phi_l(&self, n: usize) -> &MatPoly {
        &self.phi_l[n]
    }

    pub fn phi_r(&self, n: usize) -> &MatPoly {
        &self.phi_r[n]
    }

    /// `H_n`, 1-based.
    pub fn h(&self, n: usize) -> &CMat {
        &self.h[n - 1]
    }

    /// `[H_1, .., H_N]`.
    pub fn reflections(&self) -> &[CMat] {
        &self.h
    }

    /// `||H_1||_2, .., ||H_N||_2`.
    pub fn reflection_norms(&self) -> Result<Vec<f64>> {
        self.h.iter().map(CMat::spectral_norm).collect()
    }

    /// `tilde phi_n^L` at formal degree `n`.
    pub fn tilde_l(&self, n: usize) -> MatPoly {
        self.phi_l[n].reverse(n).expect("phi_n has formal degree n")
    }

    /// `tilde phi_n^R` at formal degree `n`.
    pub fn tilde_r(&self, n: usize) -> MatPoly {
        self.phi_r[n].reverse(n).expect("phi_n has formal degree n")
    }

    /// The first `n + 1` polynomials and `n` coefficients.
    pub fn truncate(&self, n: usize) -> Self {
        Self {
            p: self.p,
            normalization: self.normalization,
            phi_l: self.phi_l[..=n].to_vec(),
            phi_r: self.phi_r[..=n].to_vec(),
            h: self.h[..n].to_vec(),
        }
    }
}

/// Lower Cholesky factor `G = L L*`; a pivot below `tol` reports the
/// failing row.
fn cholesky(g: &CMat, tol: f64) -> std::result::Result<CMat, usize> {
    let n = g.dim();
    let mut l = CMat::zeros(n);
    for j in 0..n {
        let mut d = g[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > tol) {
            return Err(j);
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Inverse of a lower triangular matrix by forward substitution.
fn lower_inverse(l: &CMat) -> CMat {
    let n = l.dim();
    let mut inv = CMat::zeros(n);
    for c in 0..n {
        inv[(c, c)] = l[(c, c)].inv();
        for r in c + 1..n {
            let mut s = C64::new(0.0, 0.0);
            for k in c..r {
                s += l[(r, k)] * inv[(k, c)];
            }
            inv[(r, c)] = -s / l[(r, r)];
        }
    }
    inv
}

fn block(m: &CMat, p: usize, bi: usize, bj: usize) -> CMat {
    CMat::from_fn(p, |i, j| m[(bi * p + i, bj * p + j)])
}

fn gram_factor(t: &MomentTable, n: usize, right: bool) -> Result<CMat> {
    let g = t.block_toeplitz(n, right)?;
    let tol = 1e-12 * t.get(0).spectral_norm()?.max(f64::MIN_POSITIVE);
    let l = cholesky(&g, tol).map_err(|row| Error::DegenerateMeasure { degree: row / t.p() })?;
    Ok(lower_inverse(&l))
}

/// Left orthonormal polynomials `phi_0^L..phi_N^L` with Hermitian positive
/// definite leading coefficients, from a Cholesky factorization of the
/// block-Toeplitz Gram matrix.
pub fn gram_schmidt_left(t: &MomentTable, n: usize) -> Result<Vec<MatPoly>> {
    let p = t.p();
    let linv = gram_factor(t, n, false)?;
    (0..=n)
        .map(|row| {
            let d = block(&linv, p, row, row);
            let s = (&d.herm_transpose() * &d).psd_sqrt()?;
            let u = &s * &d.inverse()?;
            MatPoly::new((0..=row).map(|k| &u * &block(&linv, p, row, k)).collect())
        })
        .collect()
}

/// Right orthonormal polynomials with Hermitian positive definite leading coefficients.
pub fn gram_schmidt_right(t: &MomentTable, n: usize) -> Result<Vec<MatPoly>> {
    let p = t.p();
    let linv = gram_factor(t, n, true)?;
    (0..=n)
        .map(|col| {
            let d = block(&linv, p, col, col).herm_transpose();
            let s = (&d * &d.herm_transpose()).psd_sqrt()?;
            let v = &d.inverse()? * &s;
            MatPoly::new(
                (0..=col)
                    .map(|k| &block(&linv, p, col, k).herm_transpose() * &v)
                    .collect(),
            )
        })
        .collect()
}

/// HPD-normalized system from Gram-Schmidt, with `H_n` taken from the coefficients.
pub fn gram_schmidt_system(t: &MomentTable, n: usize) -> Result<OPUCSystem> {
    let phi_l = gram_schmidt_left(t, n)?;
    let phi_r = gram_schmidt_right(t, n)?;
    let h = (1..=n)
        .map(|k| reflection_from_coeffs(&phi_l[k], &phi_r[k]))
        .collect::<Result<Vec<_>>>()?;
    OPUCSystem::new(Normalization::HPDNormalized, phi_l, phi_r, h)
}

/// `H_n = (L_{n,n}*)^{-1} K_{n,0}` where `L`, `K` are the coefficients of
/// `phi_n^L`, `phi_n^R`, after checking `L_{n,0}* L_{n,n} = K_{n,n} K_{n,0}*`.
pub fn reflection_from_coeffs(phi_l: &MatPoly, phi_r: &MatPoly) -> Result<CMat> {
    let n = phi_l.deg();
    if phi_r.deg() != n || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "need two polynomials of equal degree n >= 1, got {} and {}",
            n,
            phi_r.deg()
        )));
    }
    let (l0, ln) = (phi_l.coeff(0), phi_l.coeff(n));
    let (k0, kn) = (phi_r.coeff(0), phi_r.coeff(n));
    let lhs = &l0.herm_transpose() * ln;
    let rhs = kn * &k0.herm_transpose();
    let residual = (&lhs - &rhs).spectral_norm()?;
    let scale = 1.0 + l0.spectral_norm()? * ln.spectral_norm()? + kn.spectral_norm()? * k0.spectral_norm()?;
    if residual > 1e-9 * scale {
        return Err(Error::IncompatiblePair { residual });
    }
    Ok(&ln.herm_transpose().inverse()? * k0)
}

/// `H_{n+1} = -<z phi_n^L, tilde phi_n^R>_L` from the moment table.
pub fn reflection_from_moments(phi_l: &MatPoly, phi_r: &MatPoly, t: &MomentTable) -> Result<CMat> {
    let n = phi_l.deg();
    let tilde = phi_r.reverse(n)?;
    Ok(-&inner_left(&phi_l.mul_z(), &tilde, t)?)
}

/// Polynomial values at the nodes of a discrete rule, stored flat
/// (`p * p` entries per node).
#[derive(Clone)]
struct NodeField {
    p: usize,
    data: Vec<C64>,
}

impl NodeField {
    fn constant(c: &CMat, nodes: usize) -> Self {
        let mut data = Vec::with_capacity(nodes * c.dim() * c.dim());
        for _ in 0..nodes {
            data.extend_from_slice(c.as_slice());
        }
        Self { p: c.dim(), data }
    }

    fn at(&self, i: usize) -> &[C64] {
        let pp = self.p * self.p;
        &self.data[i * pp..(i + 1) * pp]
    }

    fn nodes(&self) -> usize {
        self.data.len() / (self.p * self.p)
    }
}

/// `out = a * b` for flat `p x p` blocks.
fn mul_into(p: usize, a: &[C64], b: &[C64], out: &mut [C64]) {
    for i in 0..p {
        for j in 0..p {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..p {
                s += a[i * p + k] * b[k * p + j];
            }
            out[i * p + j] = s;
        }
    }
}

/// Node route for the recurrence: all inner products are evaluated on a
/// discrete rule from node values.
struct NodeRecursion<'a> {
    p: usize,
    rule: &'a DiscreteRule,
    masses: Vec<C64>,
}

impl<'a> NodeRecursion<'a> {
    fn new(rule: &'a DiscreteRule, p: usize) -> Self {
        let masses = rule.masses.iter().flat_map(|m| m.as_slice().iter().copied()).collect();
        Self { p, rule, masses }
    }

    /// `sum_i w_i A_i M_i B_i^dagger`, where `dagger` is `*` for `left`
    /// and `A_i* M_i B_i` otherwise; `w_i` is an optional scalar node factor.
    fn inner(&self, a: &NodeField, b: &NodeField, left: bool, factor: Option<&[C64]>) -> CMat {
        let p = self.p;
        let pp = p * p;
        let mut acc = vec![C64::new(0.0, 0.0); pp];
        let mut t = vec![C64::new(0.0, 0.0); pp];
        for i in 0..a.nodes() {
            let (ai, bi, mi) = (a.at(i), b.at(i), &self.masses[i * pp..(i + 1) * pp]);
            let w = factor.map_or(C64::new(1.0, 0.0), |f| f[i]);
            if left {
                mul_into(p, ai, mi, &mut t);
                for r in 0..p {
                    for c in 0..p {
                        let mut s = C64::new(0.0, 0.0);
                        for k in 0..p {
                            s += t[r * p + k] * bi[c * p + k].conj();
                        }
                        acc[r * p + c] += w * s;
                    }
                }
            } else {
                for r in 0..p {
                    for c in 0..p {
                        let mut s = C64::new(0.0, 0.0);
                        for k in 0..p {
                            s += ai[k * p + r].conj() * mi[k * p + c];
                        }
                        t[r * p + c] = s;
                    }
                }
                for r in 0..p {
                    for c in 0..p {
                        let mut s = C64::new(0.0, 0.0);
                        for k in 0..p {
                            s += t[r * p + k] * bi[k * p + c];
                        }
                        acc[r * p + c] += w * s;
                    }
                }
            }
        }
        CMat::from_fn(p, |r, c| acc[r * p + c])
    }

    /// `f_i <- f_i - C g_i` (left) or `f_i <- f_i - g_i C` (right).
    fn subtract(&self, f: &mut NodeField, c: &CMat, g: &NodeField, left: bool) {
        let p = self.p;
        let pp = p * p;
        let cs = c.as_slice();
        let mut t = vec![C64::new(0.0, 0.0); pp];
        for i in 0..f.nodes() {
            let gi = g.at(i);
            if left {
                mul_into(p, cs, gi, &mut t);
            } else {
                mul_into(p, gi, cs, &mut t);
            }
            for (x, y) in f.data[i * pp..(i + 1) * pp].iter_mut().zip(&t) {
                *x -= y;
            }
        }
    }

    /// `f_i <- C f_i` (left) or `f_i <- f_i C` (right).
    fn apply(&self, f: &mut NodeField, c: &CMat, left: bool) {
        let p = self.p;
        let pp = p * p;
        let cs = c.as_slice();
        let mut t = vec![C64::new(0.0, 0.0); pp];
        for i in 0..f.nodes() {
            let fi = &mut f.data[i * pp..(i + 1) * pp];
            if left {
                mul_into(p, cs, fi, &mut t);
            } else {
                mul_into(p, fi, cs, &mut t);
            }
            fi.copy_from_slice(&t);
        }
    }

    /// One Szegő step on node values: returns the new left and right fields.
    fn step(&self, l: &NodeField, r: &NodeField, n: usize, h: &CMat, a: &CMat, b: &CMat) -> (NodeField, NodeField) {
        let p = self.p;
        let pp = p * p;
        let hs = h.as_slice();
        let mut nl = l.clone();
        let mut nr = r.clone();
        let mut tilde = vec![C64::new(0.0, 0.0); pp];
        let mut prod = vec![C64::new(0.0, 0.0); pp];
        for i in 0..l.nodes() {
            let z = self.rule.points[i];
            let zn = C64::from_polar(1.0, n as f64 * self.rule.thetas[i]);
            // left: z L + H tilde R, tilde R = z^n R*
            let ri = r.at(i);
            for x in 0..p {
                for y in 0..p {
                    tilde[x * p + y] = zn * ri[y * p + x].conj();
                }
            }
            mul_into(p, hs, &tilde, &mut prod);
            let li = l.at(i);
            for k in 0..pp {
                nl.data[i * pp + k] = z * li[k] + prod[k];
            }
            // right: z R + tilde L H
            for x in 0..p {
                for y in 0..p {
                    tilde[x * p + y] = zn * li[y * p + x].conj();
                }
            }
            mul_into(p, &tilde, hs, &mut prod);
            for k in 0..pp {
                nr.data[i * pp + k] = z * ri[k] + prod[k];
            }
        }
        self.apply(&mut nl, a, true);
        self.apply(&mut nr, b, false);
        (nl, nr)
    }
}

/// Canonical constructor: Szegő recursion from `phi_0 = mu_0^{-1/2}` with
/// `H_{n+1} = -<z phi_n^L, tilde phi_n^R>_L`.
///
/// The inner products are evaluated on the measure's discrete rule from node
/// values of the polynomials, re-orthogonalized at every degree; the stored
/// coefficients follow from the computed `H_n` by the exact recurrence.
pub fn build_system(measure: &MatMeasure, n: usize) -> Result<OPUCSystem> {
    let p = measure.p();
    measure.check_resolution(2 * n + 2)?;
    let rule = measure.rule_for_degree(n + 1)?;
    if rule.is_empty() {
        return Err(Error::DegenerateMeasure { degree: 0 });
    }
    let mu0 = rule.total_mass().hermitian_part();
    let eig = mu0.herm_eig()?;
    let top = eig.eigenvalues[p - 1];
    if !(eig.eigenvalues[0] > 1e-12 * top.max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateMeasure { degree: 0 });
    }
    let phi0 = eig.recompose(&eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).collect::<Vec<_>>());

    let rec = NodeRecursion::new(&rule, p);
    let mut left = NodeField::constant(&phi0, rule.len());
    let mut right = left.clone();
    let mut hist_l = vec![left.clone()];
    let mut hist_r = vec![right.clone()];
    let mut phi_l = vec![MatPoly::constant(phi0.clone())];
    let mut phi_r = phi_l.clone();
    let mut hs = Vec::with_capacity(n);

    for k in 0..n {
        // -sum_i z_i^{1-k} L_i M_i R_i
        let factor: Vec<C64> = rule
            .thetas
            .iter()
            .map(|t| -C64::from_polar(1.0, (1.0 - k as f64) * t))
            .collect();
        let h = rec.inner_plain_lr(&left, &right, &factor);
        let (a, b) = defect_inverses(&h, k + 1)?;
        let (mut nl, mut nr) = rec.step(&left, &right, k, &h, &a, &b);
        for _ in 0..2 {
            for q in &hist_l {
                let c = rec.inner(&nl, q, true, None);
                rec.subtract(&mut nl, &c, q, true);
            }
            for q in &hist_r {
                let c = rec.inner(q, &nr, false, None);
                rec.subtract(&mut nr, &c, q, false);
            }
        }
        let gl = rec.inner(&nl, &nl, true, None).hermitian_part();
        let gr = rec.inner(&nr, &nr, false, None).hermitian_part();
        rec.apply(&mut nl, &gl.psd_sqrt()?.inverse()?, true);
        rec.apply(&mut nr, &gr.psd_sqrt()?.inverse()?, false);

        let (pl, pr) = szego_step(&phi_l[k], &phi_r[k], &h)?;
        phi_l.push(pl);
        phi_r.push(pr);
        hs.push(h);
        hist_l.push(nl.clone());
        hist_r.push(nr.clone());
        left = nl;
        right = nr;
    }
    OPUCSystem::new(Normalization::RecurrenceNormalized, phi_l, phi_r, hs)
}

impl NodeRecursion<'_> {
    /// `sum_i w_i L_i M_i R_i`.
    fn inner_plain_lr(&self, l: &NodeField, r: &NodeField, w: &[C64]) -> CMat {
        let p = self.p;
        let pp = p * p;
        let mut acc = vec![C64::new(0.0, 0.0); pp];
        let mut t = vec![C64::new(0.0, 0.0); pp];
        let mut u = vec![C64::new(0.0, 0.0); pp];
        for i in 0..l.nodes() {
            mul_into(p, l.at(i), &self.masses[i * pp..(i + 1) * pp], &mut t);
            mul_into(p, &t, r.at(i), &mut u);
            for (x, y) in acc.iter_mut().zip(&u) {
                *x += w[i] * y;
            }
        }
        CMat::from_fn(p, |a, b| acc[a * p + b])
    }
}

/// `max_n` of the two leading-coefficient ladder residuals
/// `||(I - H_n* H_n)^{1/2} - K_{n,n}^{-1} K_{n-1,n-1}||_2` and
/// `||(I - H_n H_n*)^{1/2} - (L_{n,n}*)^{-1} L_{n-1,n-1}*||_2`.
/// A failed inversion reports an infinite residual. The ladder holds in
/// recurrence normalization only.
pub fn leading_ladder_check(sys: &OPUCSystem) -> f64 {
    let ladder = |n: usize| -> Result<f64> {
        let h = sys.h(n);
        let i = CMat::identity(sys.p());
        let hs = h.herm_transpose();
        let right = (&i - &(&hs * h)).psd_sqrt()?;
        let left = (&i - &(h * &hs)).psd_sqrt()?;
        let k = &sys.phi_r(n).leading().inverse()? * sys.phi_r(n - 1).leading();
        let l = &sys.phi_l(n).leading().herm_transpose().inverse()? * &sys.phi_l(n - 1).leading().herm_transpose();
        Ok((&right - &k).spectral_norm()?.max((&left - &l).spectral_norm()?))
    };
    (1..=sys.degree())
        .map(|n| ladder(n).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

/// Orthonormality residuals on a discrete rule: entry `n` is
/// `max_{m <= n} ||<phi_n, phi_m> - delta_{mn} I||_2` over both families,
/// evaluating the stored coefficients.
pub fn orthonormality_residuals(sys: &OPUCSystem, rule: &DiscreteRule) -> Result<Vec<f64>> {
    let p = sys.p();
    let n = sys.degree();
    let rec = NodeRecursion::new(rule, p);
    let eval_field = |poly: &MatPoly| NodeField {
        p,
        data: rule
            .points
            .iter()
            .flat_map(|&z| poly.eval(z).as_slice().to_vec())
            .collect(),
    };
    let lf: Vec<NodeField> = (0..=n).map(|k| eval_field(sys.phi_l(k))).collect();
    let rf: Vec<NodeField> = (0..=n).map(|k| eval_field(sys.phi_r(k))).collect();
    let eye = CMat::identity(p);
    (0..=n)
        .map(|a| {
            let mut worst = 0.0f64;
            for b in 0..=a {
                let target = if a == b { eye.clone() } else { CMat::zeros(p) };
                let gl = rec.inner(&lf[a], &lf[b], true, None);
                let gr = rec.inner(&rf[b], &rf[a], false, None);
                worst = worst.max((&gl - &target).spectral_norm()?).max((&gr - &target).spectral_norm()?);
            }
            Ok(worst)
        })
        .collect()
}
