//! The averaged defect `(1/2pi) int ||A A* - I|| dtheta`, `A = phi_n phi_{n+l}^{-1}`,
//! next to `||H_{n+1}||`, which it bounds, and the ratio deviation
//! `sup |(I - H_n H_n*)^{1/2} phi_n phi_{n-1}^{-1} - z|`, bounded by `||H_n||`.

use mopuc::quadrature::circle_grid;
use mopuc::rakhmanov::{nevai_integral, ratio_deviation};
use mopuc::{build_system, MatMeasure, WeightSpec};

fn main() -> mopuc::Result<()> {
    let measure = MatMeasure::new(WeightSpec::scalar_trig(&[1.0, 0.5]), vec![])?;
    let sys = build_system(&measure, 24)?;
    let grid = circle_grid(512);
    println!("{:>3} {:>12} {:>12} {:>12} {:>12}", "n", "||H_n+1||", "defect l=1", "defect l=4", "ratio dev");
    for n in (2..=20).step_by(3) {
        println!(
            "{n:>3} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            sys.h(n + 1).spectral_norm()?,
            nevai_integral(&sys, n, 1, 2048)?,
            nevai_integral(&sys, n, 4, 2048)?,
            ratio_deviation(&sys, n, &grid)?.value(),
        );
    }
    Ok(())
}
