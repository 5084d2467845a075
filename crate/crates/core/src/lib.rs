//! Two-state free probability toolkit.
//!
//! Computes the states `Φ_t` and `Ψ_t` on the tensor algebra of a noncommutative
//! probability space both by noncrossing-partition sums and by truncated
//! Fock-space matrices, moment-cumulant transforms for the free, Boolean and
//! conditionally free families, and the closed-form free binomial, `Ψ` and
//! `t`-Gaussian type measures with quadrature and Stieltjes inversion.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod cumulants;
pub mod error;
pub mod fockspace;
pub mod partitions;
pub mod quadrature;
pub mod spectral;
pub mod states;
pub mod verify;

pub use algebra::spec::{load_spec, parse_spec};
pub use algebra::{Letter, MatrixModel, NCPoly, StateOracle, Word, C64};
pub use cumulants::{CumulantTable, Family, Handle, MomentFunctional};
pub use error::{Error, Result};
pub use fockspace::{FockModel, FockOperator, Variant};
pub use partitions::{enumerate, PartitionClass, SetPartition};
pub use spectral::{CauchyTransform, SpectralMeasure};
pub use states::{phi_t, psi_t};
