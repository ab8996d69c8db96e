//! Decay scan for two measures: Lebesgue plus a point mass, whose
//! coefficients decay, and the indicator of a half circle, whose do not.
//! The first report is also printed as CSV.

use std::f64::consts::PI;

use mopuc::rakhmanov::scan;
use mopuc::{Atom, CMat, MatMeasure, WeightSpec};

fn main() -> mopuc::Result<()> {
    let atom = Atom {
        theta: 1.0,
        mass: CMat::identity(2).scale_real(0.5),
    };
    let with_atom = MatMeasure::new(WeightSpec::IdentityLebesgue { p: 2 }, vec![atom])?;
    let report = scan(&with_atom, 20, 8, 1024)?;
    print!("{}", report.to_csv());
    println!("verdict: {}", report.verdict.as_str());

    let arc = MatMeasure::new(WeightSpec::scalar_arc(0.0, PI, 0.0), vec![])?;
    let report = scan(&arc, 16, 4, 1024)?;
    let last = report.rows.last().unwrap();
    println!("half circle: ||H_16|| = {:.6}, verdict: {}", last.hn_norm, report.verdict.as_str());
    Ok(())
}
