//! Christoffel-Darboux kernels of a trigonometric 2x2 weight and the
//! defects of the identities they satisfy.

use mopuc::kernels::{cd_kernel_left, circle_identity_residual, default_cd_pairs, ratio_unitarity, verify_cd};
use mopuc::quadrature::circle_grid;
use mopuc::random::{random_trig_weight, seeded};
use mopuc::{build_system, MatMeasure, WeightSpec, C64};

fn main() -> mopuc::Result<()> {
    let weight = WeightSpec::TrigPoly {
        coeffs: random_trig_weight(&mut seeded(3), 2, 2),
    };
    let sys = build_system(&MatMeasure::new(weight, vec![])?, 8)?;

    let z = C64::new(0.3, -0.2);
    println!("K_8(z, z) =\n{:?}", cd_kernel_left(&sys, 8, z, z));

    let grid = circle_grid(128);
    let pairs = default_cd_pairs();
    println!("{:>3} {:>12} {:>12} {:>12}", "n", "CD (rel)", "circle", "unitarity");
    for n in 0..=8 {
        let cd = verify_cd(&sys, n, &pairs)?;
        let ci = circle_identity_residual(&sys, n, &grid)?;
        let ru = ratio_unitarity(&sys, n, &grid)?;
        println!("{n:>3} {:>12.2e} {:>12.2e} {:>12.2e}", cd.relative(), ci.value(), ru.deviation.value());
    }
    Ok(())
}
