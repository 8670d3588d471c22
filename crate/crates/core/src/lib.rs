//! Exact symbolic computation of the Lax description of the intermediate long
//! wave hierarchy, in the truncated ring `Q(i)[τ][ε]/(ε^{K+1})`.

pub mod diffpoly;
pub mod dispersionless;
pub mod hierarchy;
pub mod report;
pub mod scalars;
pub mod shiftops;

pub use diffpoly::{DiffMonomial, DiffPoly, LocalFunctional};
pub use hierarchy::{build_lax, HierarchyConfig, LaxData};
pub use report::VerificationReport;
pub use scalars::{Rational, Scalar};
pub use shiftops::ShiftOperator;
