//! Ratio-asymptotics diagnostics: the averaged defect
//! `(1/2pi) int ||A A* - I||_2 dtheta` with `A = phi_n^L phi_{n+l}^L^{-1}`,
//! the bound it places on `||H_{n+1}||_2`, the ratio deviation, and the
//! per-degree scan report.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{Approx, Residual};
use crate::matkernel::{CMat, C64};
use crate::measure::MatMeasure;
use crate::opuc::{build_system, orthonormality_residuals, Normalization, OPUCSystem};
use crate::quadrature::circle_grid;

/// Smallest admissible circle grid for the averaged defect.
pub const MIN_RESOLUTION: usize = 512;
/// Slack of the `||H_{n+1}|| <= integral` bound.
pub const HN_BOUND_SLACK: f64 = 1e-9;

/// `phi_k^L` and its inverse on a uniform circle grid for selected degrees.
struct CircleValues {
    values: Vec<Option<Vec<Approx>>>,
    inverses: Vec<Option<Vec<Approx>>>,
}

impl CircleValues {
    fn new(sys: &OPUCSystem, grid: &[C64], degrees: &[usize]) -> Result<Self> {
        let upto = degrees.iter().copied().max().unwrap_or(0);
        let per_degree: Vec<Option<(Vec<Approx>, Vec<Approx>)>> = (0..=upto)
            .into_par_iter()
            .map(|k| {
                if !degrees.contains(&k) {
                    return Ok(None);
                }
                let vals: Vec<Approx> = grid.iter().map(|&z| Approx::eval(sys.phi_l(k), z)).collect();
                let invs = vals.iter().map(Approx::inverse).collect::<Result<Vec<_>>>()?;
                Ok(Some((vals, invs)))
            })
            .collect::<Result<_>>()?;
        let (values, inverses) = per_degree.into_iter().map(|o| o.map_or((None, None), |(v, i)| (Some(v), Some(i)))).unzip();
        Ok(Self { values, inverses })
    }

    fn all(sys: &OPUCSystem, grid: &[C64], upto: usize) -> Result<Self> {
        Self::new(sys, grid, &(0..=upto).collect::<Vec<_>>())
    }

    /// Trapezoid value of the averaged defect and the mean error floor.
    fn nevai(&self, n: usize, ell: usize) -> Result<(f64, f64)> {
        let (mut sum, mut floor) = (0.0, 0.0);
        let (values, inverses) = (self.values[n].as_ref().unwrap(), self.inverses[n + ell].as_ref().unwrap());
        let count = values.len();
        for (a, b) in values.iter().zip(inverses) {
            let m = a.mul(b);
            let d = m.mul(&m.adjoint()).sub(&Approx::exact(CMat::identity(m.v.dim())));
            sum += d.v.spectral_norm()?;
            floor += d.err;
        }
        Ok((sum / count as f64, floor / count as f64))
    }
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "circle grid resolution must be >= {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    Ok(())
}

fn check_lag(sys: &OPUCSystem, n: usize, ell: usize) -> Result<()> {
    if ell == 0 || n + ell > sys.degree() {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= l and n + l <= N, got n = {n}, l = {ell}, N = {}",
            sys.degree()
        )));
    }
    Ok(())
}

/// `(1/2pi) int ||phi_n phi_{n+l}^{-1} [phi_{n+l}^*]^{-1} phi_n^* - I||_2 dtheta`
/// by the trapezoid rule on `resolution` equispaced points.
pub fn nevai_integral(sys: &OPUCSystem, n: usize, ell: usize, resolution: usize) -> Result<f64> {
    check_resolution(resolution)?;
    check_lag(sys, n, ell)?;
    let grid = circle_grid(resolution);
    let vals = CircleValues::new(sys, &grid, &[n, n + ell])?;
    Ok(vals.nevai(n, ell)?.0)
}

/// `||H_{n+1}||_2 <= nevai_integral(n, l) + 1e-9` for every `1 <= l <= lmax`.
pub fn hn_bound_check(sys: &OPUCSystem, n: usize, lmax: usize, resolution: usize) -> Result<bool> {
    check_resolution(resolution)?;
    check_lag(sys, n, lmax)?;
    let grid = circle_grid(resolution);
    let degrees: Vec<usize> = std::iter::once(n).chain(n + 1..=n + lmax).collect();
    let vals = CircleValues::new(sys, &grid, &degrees)?;
    let h = sys.h(n + 1).spectral_norm()?;
    for ell in 1..=lmax {
        let (value, floor) = vals.nevai(n, ell)?;
        if h > value + HN_BOUND_SLACK + floor {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `||(I - H_n H_n*)^{1/2} phi_n^L(z) phi_{n-1}^L(z)^{-1} - z I||_2` at
/// each grid point. On the circle it never exceeds `||H_n||_2`. Only
/// meaningful in recurrence normalization.
pub fn ratio_deviation(sys: &OPUCSystem, n: usize, grid: &[C64]) -> Result<Residual> {
    if sys.normalization() != Normalization::RecurrenceNormalized {
        return Err(Error::InvalidArgument("ratio deviation needs a recurrence-normalized system".into()));
    }
    if n == 0 || n > sys.degree() {
        return Err(Error::InvalidArgument(format!("need 1 <= n <= N, got n = {n}")));
    }
    let h = sys.h(n);
    let p = sys.p();
    let rho = (&CMat::identity(p) - &(h * &h.herm_transpose())).psd_sqrt()?;
    let rho = Approx::exact(rho);
    let mut res = Residual::default();
    for &z in grid {
        let m = rho
            .mul(&Approx::eval(sys.phi_l(n), z))
            .mul(&Approx::eval(sys.phi_l(n - 1), z).inverse()?);
        let d = m.sub(&Approx::exact(CMat::identity(p).scale(z)));
        res.push(d.v.spectral_norm()?, 1.0, d.err);
    }
    Ok(res)
}

/// Descriptive classification of a scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Decaying,
    NonDecaying,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Decaying => "decaying",
            Verdict::NonDecaying => "non-decaying",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// One report row; `nevai_by_ell[l - 1]` is the averaged defect for lag `l`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayRow {
    pub n: usize,
    pub hn_norm: f64,
    pub nevai_by_ell: Vec<f64>,
    pub nevai_inf: f64,
    pub nevai_sup: f64,
    pub ratio_dev: f64,
    pub ortho_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportMeta {
    pub measure_hash: String,
    pub p: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "Lmax")]
    pub lmax: usize,
    pub resolution: usize,
    pub quad_points: usize,
    pub system_degree: usize,
    /// inf/sup over lags are taken over `1 <= l <= Lmax` only.
    pub lag_range: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub metadata: ReportMeta,
    pub verdict: Verdict,
    pub rows: Vec<DecayRow>,
}

pub const CSV_HEADER: &str = "n,hn_norm,nevai_inf,nevai_sup,ratio_dev,ortho_residual";

impl DecayReport {
    /// CSV with 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.n, r.hn_norm, r.nevai_inf, r.nevai_sup, r.ratio_dev, r.ortho_residual
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn row(&self, n: usize) -> Option<&DecayRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Quartile heuristic: "decaying" when the last-quartile medians of
/// `hn_norm` and `nevai_sup` are below half the first-quartile medians (or
/// below 1e-12), "non-decaying" when `hn_norm` stays >= 0.05 over the
/// second half of the rows, otherwise (and below four rows) "inconclusive".
pub fn verdict(rows: &[DecayRow]) -> Verdict {
    if rows.len() < 4 {
        return Verdict::Inconclusive;
    }
    let q = rows.len() / 4;
    let halves = |f: fn(&DecayRow) -> f64| {
        let first: Vec<f64> = rows[..q].iter().map(f).collect();
        let last: Vec<f64> = rows[rows.len() - q..].iter().map(f).collect();
        let (a, b) = (median(&first), median(&last));
        b <= 1e-12 || b < 0.5 * a
    };
    if halves(|r| r.hn_norm) && halves(|r| r.nevai_sup) {
        return Verdict::Decaying;
    }
    let floor = rows[rows.len() / 2..].iter().map(|r| r.hn_norm).fold(f64::INFINITY, f64::min);
    if floor >= 0.05 {
        Verdict::NonDecaying
    } else {
        Verdict::Inconclusive
    }
}

/// Build the system to degree `N + Lmax` and tabulate rows `n = 1..=N`.
pub fn scan(measure: &MatMeasure, n: usize, lmax: usize, resolution: usize) -> Result<DecayReport> {
    if n == 0 || lmax == 0 {
        return Err(Error::InvalidArgument(format!("need N >= 1 and Lmax >= 1, got N = {n}, Lmax = {lmax}")));
    }
    check_resolution(resolution)?;
    let degree = n + lmax;
    let sys = build_system(measure, degree)?;
    scan_system(measure, &sys, n, lmax, resolution)
}

/// Scan rows from an already built system of degree at least `N + Lmax`.
pub fn scan_system(measure: &MatMeasure, sys: &OPUCSystem, n: usize, lmax: usize, resolution: usize) -> Result<DecayReport> {
    check_resolution(resolution)?;
    let degree = n + lmax;
    if sys.degree() < degree {
        return Err(Error::InvalidArgument(format!("system degree {} < N + Lmax = {degree}", sys.degree())));
    }
    let sys = sys.truncate(degree);
    let grid = circle_grid(resolution);
    let vals = CircleValues::all(&sys, &grid, degree)?;
    let ortho = orthonormality_residuals(&sys, &measure.rule_for_degree(degree)?)?;
    let rows = (1..=n)
        .into_par_iter()
        .map(|k| {
            let nevai_by_ell = (1..=lmax).map(|ell| vals.nevai(k, ell).map(|v| v.0)).collect::<Result<Vec<_>>>()?;
            Ok(DecayRow {
                n: k,
                hn_norm: sys.h(k).spectral_norm()?,
                nevai_inf: nevai_by_ell.iter().copied().fold(f64::INFINITY, f64::min),
                nevai_sup: nevai_by_ell.iter().copied().fold(0.0, f64::max),
                nevai_by_ell,
                ratio_dev: ratio_deviation(&sys, k, &grid)?.value(),
                ortho_residual: ortho[k],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayReport {
        metadata: ReportMeta {
            measure_hash: measure.spec_hash(),
            p: measure.p(),
            n,
            lmax,
            resolution,
            quad_points: measure.quad_points(),
            system_degree: degree,
            lag_range: format!("truncated: 1 <= l <= {lmax}"),
        },
        verdict: verdict(&rows),
        rows,
    })
}
