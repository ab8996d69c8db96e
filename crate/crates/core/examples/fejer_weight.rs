//! Scalar weight `1 + cos(theta)`. Its reflection coefficients are
//! `(-1)^n / (n + 1)`; the table compares them with the computed values.

use mopuc::{build_system, MatMeasure, WeightSpec};

fn main() -> mopuc::Result<()> {
    let measure = MatMeasure::new(WeightSpec::scalar_trig(&[1.0, 0.5]), vec![])?;
    let sys = build_system(&measure, 10)?;
    println!("{:>3} {:>22} {:>22}", "n", "H_n", "(-1)^n/(n+1)");
    for n in 1..=10 {
        let h = sys.h(n)[(0, 0)];
        let exact = if n % 2 == 0 { 1.0 } else { -1.0 } / (n as f64 + 1.0);
        println!("{n:>3} {:>22.16} {exact:>22.16}", h.re);
    }
    Ok(())
}
