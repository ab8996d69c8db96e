//! Conjugating a weight by a unitary leaves the singular values of the
//! reflection coefficients unchanged; a diagonal weight decouples into its
//! scalar entries.

use std::f64::consts::PI;

use mopuc::random::{random_trig_weight, random_unitary, seeded};
use mopuc::{build_system, MatMeasure, WeightSpec};

fn main() -> mopuc::Result<()> {
    let base = WeightSpec::TrigPoly {
        coeffs: random_trig_weight(&mut seeded(11), 2, 2),
    };
    let rotated = WeightSpec::Conjugated {
        inner: Box::new(base.clone()),
        u: random_unitary(&mut seeded(12), 2),
    };
    let a = build_system(&MatMeasure::new(base, vec![])?, 6)?;
    let b = build_system(&MatMeasure::new(rotated, vec![])?, 6)?;
    for n in 1..=6 {
        println!("n={n} {:?} {:?}", a.h(n).singular_values()?, b.h(n).singular_values()?);
    }

    let entries = vec![WeightSpec::scalar_trig(&[1.0, 0.5]), WeightSpec::scalar_arc(0.0, PI, 0.2)];
    let diag = build_system(&MatMeasure::new(WeightSpec::DiagonalScalar { entries }, vec![])?, 4)?;
    for n in 1..=4 {
        let h = diag.h(n);
        println!("n={n} diag H = ({:.10}, {:.10}), off-diagonal {:.1e}", h[(0, 0)], h[(1, 1)], h[(0, 1)].norm());
    }
    Ok(())
}
