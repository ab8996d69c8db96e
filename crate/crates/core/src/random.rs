//! Seeded random fixtures: matrices, unitaries, reflection sequences and
//! trigonometric weights. All draws come from a ChaCha stream so a seed
//! reproduces the same fixture on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matkernel::{CMat, C64};

pub type FixtureRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> FixtureRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries with real and imaginary parts uniform in `[-1, 1)`.
pub fn random_cmat<R: Rng>(rng: &mut R, p: usize) -> CMat {
    CMat::from_fn(p, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Unitary from modified Gram-Schmidt on the columns of a random matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, p: usize) -> CMat {
    loop {
        let a = random_cmat(rng, p);
        let mut cols: Vec<Vec<C64>> = (0..p).map(|j| (0..p).map(|i| a[(i, j)]).collect()).collect();
        let mut ok = true;
        for j in 0..p {
            for k in 0..j {
                let dot: C64 = (0..p).map(|i| cols[k][i].conj() * cols[j][i]).sum();
                for i in 0..p {
                    let v = cols[k][i];
                    cols[j][i] -= dot * v;
                }
            }
            let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-3 {
                ok = false;
                break;
            }
            cols[j].iter_mut().for_each(|z| *z /= norm);
        }
        if ok {
            return CMat::from_fn(p, |i, j| cols[j][i]);
        }
    }
}

/// Random matrix with spectral norm drawn uniformly from `[0.1, 1] * max_norm`.
pub fn random_contraction<R: Rng>(rng: &mut R, p: usize, max_norm: f64) -> CMat {
    let a = random_cmat(rng, p);
    let norm = a.spectral_norm().expect("random matrix is finite");
    let target = max_norm * rng.gen_range(0.1..=1.0);
    a.scale_real(target / norm)
}

/// `n` reflection coefficients with `||H_k||_2 <= max_norm`.
pub fn random_reflections<R: Rng>(rng: &mut R, p: usize, n: usize, max_norm: f64) -> Vec<CMat> {
    (0..n).map(|_| random_contraction(rng, p, max_norm)).collect()
}

/// Fourier coefficients `W_0..W_K` of a positive definite trigonometric weight:
/// `W_0 = G G* + (1 + sum_k 2 ||W_k||) I`, so `W(theta) >= I` everywhere.
pub fn random_trig_weight<R: Rng>(rng: &mut R, p: usize, degree: usize) -> Vec<CMat> {
    let tail: Vec<CMat> = (0..degree)
        .map(|_| random_cmat(rng, p).scale_real(0.4 / degree.max(1) as f64))
        .collect();
    let g = random_cmat(rng, p).scale_real(0.5);
    let tail_norm: f64 = tail.iter().map(|w| 2.0 * w.spectral_norm().unwrap()).sum();
    let w0 = &(&g * &g.herm_transpose()) + &CMat::identity(p).scale_real(1.0 + tail_norm);
    std::iter::once(w0.hermitian_part()).chain(tail).collect()
}
