//! Normalized Lebesgue measure on the circle, p = 2: every reflection
//! coefficient vanishes and `phi_n = z^n I`.

use mopuc::{build_system, CMat, MatMeasure, MatPoly};

fn main() -> mopuc::Result<()> {
    let sys = build_system(&MatMeasure::lebesgue(2), 12)?;
    let worst_h = sys.reflection_norms()?.into_iter().fold(0.0, f64::max);
    let worst_coeff = (0..=12)
        .map(|n| sys.phi_l(n).max_coeff_distance(&MatPoly::monomial(n, CMat::identity(2))))
        .fold(0.0, f64::max);
    println!("max ||H_n||             {worst_h:.3e}");
    println!("max |phi_n - z^n I|     {worst_coeff:.3e}");
    Ok(())
}
