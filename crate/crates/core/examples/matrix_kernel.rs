//! Small dense Hermitian linear algebra: Jacobi eigendecomposition, PSD
//! square root, singular values and the trace inequalities they satisfy.

use mopuc::random::{random_cmat, seeded};
use mopuc::CMat;

fn main() -> mopuc::Result<()> {
    let mut rng = seeded(5);
    let a = random_cmat(&mut rng, 3);
    let b = random_cmat(&mut rng, 3);
    let psd = &a * &a.herm_transpose();

    let eig = psd.herm_eig()?;
    println!("eigenvalues      {:?}", eig.eigenvalues);
    println!("singular values  {:?}", psd.singular_values()?);
    let root = psd.psd_sqrt()?;
    println!("||R R - A||      {:.2e}", (&(&root * &root) - &psd).spectral_norm()?);
    println!("||A||, Tr A      {:.6} {:.6}", psd.spectral_norm()?, psd.trace().re);

    let (sa, sb, sab) = (a.singular_values()?, b.singular_values()?, (&a * &b).singular_values()?);
    for q in [0.5, 1.0] {
        let lhs: f64 = sab.iter().map(|s| s.powf(q)).sum();
        let rhs: f64 = sa.iter().zip(&sb).map(|(x, y)| (x * y).powf(q)).sum();
        println!("q = {q}: sum s^q(AB) = {lhs:.6} <= {rhs:.6}");
    }
    let inv = a.inverse()?;
    println!("||A A^-1 - I||   {:.2e}", (&(&a * &inv) - &CMat::identity(3)).spectral_norm()?);
    Ok(())
}
