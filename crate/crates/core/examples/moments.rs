//! Matrix moments of a measure with an absolutely continuous part and an
//! atom, the block Toeplitz section they form, and the left inner product.

use mopuc::measure::inner_left;
use mopuc::{Atom, CMat, MatMeasure, MatPoly, WeightSpec, C64};

fn main() -> mopuc::Result<()> {
    let atom = Atom {
        theta: 0.5,
        mass: CMat::from_real_diag(&[0.25, 0.0]),
    };
    let measure = MatMeasure::new(WeightSpec::IdentityLebesgue { p: 2 }, vec![atom])?;
    let table = measure.moment_table(3)?;
    for m in -1..=2 {
        println!("mu_{m} =\n{:?}", table.get(m));
    }
    println!("smallest eigenvalue of the degree-3 section: {:.6}", table.min_section_eigenvalue(3)?);

    let p = MatPoly::new(vec![CMat::identity(2), CMat::identity(2).scale(C64::new(0.0, 1.0))])?;
    println!("<P, P>_L =\n{:?}", inner_left(&p, &p, &table)?);
    Ok(())
}
