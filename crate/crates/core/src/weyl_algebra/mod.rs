//! Exact algebra of canonical operators.
//!
//! Operators are kept in normal order; Weyl-ordered monomials form a derived
//! basis used to take expectation values. [`bracket_oracle`] computes moment
//! brackets from commutators and serves as the reference for every faster
//! bracket formula in the crate.

mod basis;
mod coefficient;
mod operator;
mod oracle;

pub use basis::{expectation, expectation_complex, to_weyl_basis, weyl_symmetrize};
pub use coefficient::{Coefficient, CoefficientValue};
pub use operator::OperatorPoly;
pub use oracle::{bracket_oracle, oracle_cache_size};
