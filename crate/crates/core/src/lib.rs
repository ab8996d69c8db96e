//! Orthogonal matrix polynomials on the unit circle.

pub mod cli;
pub mod error;
pub mod kernels;
pub mod matkernel;
pub mod mpoly;
pub mod measure;
pub mod opuc;
pub mod quadrature;
pub mod rakhmanov;
pub mod recurrence;
pub mod random;

pub use error::{Error, Result};
pub use matkernel::{CMat, C64};
pub use measure::{Atom, MatMeasure, MomentTable, WeightSpec};
pub use mpoly::MatPoly;
pub use opuc::{build_system, Normalization, OPUCSystem};
pub use recurrence::{favard_synthesize, ReflectionSequence};
