//! Quadrature on the circle. All rules are normalized to `dtheta / 2 pi`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::matkernel::{CMat, C64};

const TWO_PI: f64 = 2.0 * PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&n) {
        return hit.clone();
    }
    let rule = Arc::new(compute_gauss_legendre(n));
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut t = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, t);
            dp = d;
            let step = p / d;
            t -= step;
            if step.abs() <= 1e-16 * t.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, t);
        dp = if d.is_finite() { d } else { dp };
        let weight = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// A node on the circle: angle and scalar quadrature weight (sums to 1 over a full turn).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub theta: f64,
    pub weight: f64,
}

/// `q` equispaced nodes `2 pi k / q`, each with weight `1/q`.
pub fn trapezoid_nodes(q: usize) -> Vec<Node> {
    (0..q)
        .map(|k| Node {
            theta: TWO_PI * k as f64 / q as f64,
            weight: 1.0 / q as f64,
        })
        .collect()
}

/// Gauss-Legendre with `q` nodes on each panel between consecutive
/// breakpoints (cyclically, the last panel wraps through `2 pi`).
/// Breakpoints must be sorted and lie in `[0, 2 pi)`.
pub fn panel_nodes(breakpoints: &[f64], q: usize) -> Vec<Node> {
    if breakpoints.is_empty() {
        return trapezoid_nodes(q);
    }
    let gl = gauss_legendre(q);
    let (x, w) = (&gl.0, &gl.1);
    let mut nodes = Vec::with_capacity(breakpoints.len() * q);
    for (i, &a) in breakpoints.iter().enumerate() {
        let b = breakpoints.get(i + 1).copied().unwrap_or(breakpoints[0] + TWO_PI);
        let half = (b - a) / 2.0;
        for (xi, wi) in x.iter().zip(w) {
            nodes.push(Node {
                theta: (a + half * (xi + 1.0)).rem_euclid(TWO_PI),
                weight: half * wi / TWO_PI,
            });
        }
    }
    nodes
}

/// Discrete matrix measure `sum_i M_i delta_{theta_i}`.
#[derive(Clone, Debug, Default)]
pub struct DiscreteRule {
    pub thetas: Vec<f64>,
    pub points: Vec<C64>,
    pub masses: Vec<CMat>,
}

impl DiscreteRule {
    pub fn push(&mut self, theta: f64, mass: CMat) {
        self.thetas.push(theta);
        self.points.push(C64::from_polar(1.0, theta));
        self.masses.push(mass);
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total_mass(&self) -> CMat {
        sum_in_order(self.masses.iter().cloned(), self.masses[0].dim())
    }

    /// `sum_i A_i M_i B_i*` for node values `A_i, B_i`.
    pub fn inner_left(&self, a: &[CMat], b: &[CMat]) -> CMat {
        let p = self.masses[0].dim();
        sum_in_order(
            self.masses
                .iter()
                .zip(a.iter().zip(b))
                .map(|(m, (ai, bi))| &(ai * m) * &bi.herm_transpose()),
            p,
        )
    }

    /// `sum_i A_i* M_i B_i`.
    pub fn inner_right(&self, a: &[CMat], b: &[CMat]) -> CMat {
        let p = self.masses[0].dim();
        sum_in_order(
            self.masses
                .iter()
                .zip(a.iter().zip(b))
                .map(|(m, (ai, bi))| &(&ai.herm_transpose() * m) * bi),
            p,
        )
    }
}

fn sum_in_order(items: impl Iterator<Item = CMat>, p: usize) -> CMat {
    let mut acc = CMat::zeros(p);
    for item in items {
        acc = &acc + &item;
    }
    acc
}

/// Mean of samples taken on a uniform grid `theta_k = 2 pi k / q`: the
/// periodic trapezoid value of `(1/2pi) int f dtheta`, summed in ascending
/// `theta` order.
pub fn integrate_circle(samples: &[CMat]) -> Result<CMat> {
    let first = samples.first().ok_or(Error::EmptyGrid)?;
    let p = first.dim();
    if let Some(bad) = samples.iter().find(|s| s.dim() != p) {
        return Err(Error::DimMismatch {
            expected: p,
            actual: bad.dim(),
        });
    }
    Ok(sum_in_order(samples.iter().cloned(), p).scale_real(1.0 / samples.len() as f64))
}

/// Scalar version of [`integrate_circle`].
pub fn integrate_circle_scalar(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Points `e^{2 pi i k / q}`.
pub fn circle_grid(q: usize) -> Vec<C64> {
    (0..q)
        .map(|k| C64::from_polar(1.0, TWO_PI * k as f64 / q as f64))
        .collect()
}
