//! Synthesize polynomials from prescribed 2x2 reflection coefficients, build
//! the Bernstein-Szegő measure they are orthonormal for, and recover the
//! coefficients from that measure.

use mopuc::recurrence::bernstein_szego_measure;
use mopuc::{build_system, favard_synthesize, CMat, ReflectionSequence};

fn main() -> mopuc::Result<()> {
    let seq = ReflectionSequence::random(0, 2, 6, 0.9)?;
    let sys = favard_synthesize(&seq, &CMat::identity(2))?;
    let measure = bernstein_szego_measure(&sys, 6)?;
    let rebuilt = build_system(&measure, 6)?;

    println!("{:>3} {:>30} {:>30}", "n", "singular values given", "recovered");
    for n in 1..=6 {
        let a = seq.as_slice()[n - 1].singular_values()?;
        let b = rebuilt.h(n).singular_values()?;
        println!("{n:>3} {:>14.10} {:>14.10}  {:>14.10} {:>14.10}", a[0], a[1], b[0], b[1]);
    }
    Ok(())
}
