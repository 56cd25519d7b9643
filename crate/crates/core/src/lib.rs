pub mod adiabatic;
pub mod casimir_darboux;
pub mod dynamics;
pub mod effective_hamiltonian;
pub mod error;
pub mod index;
pub mod moment_algebra;
pub mod poly;
pub mod scenarios;
pub mod schrodinger_oracle;
pub mod weyl_algebra;

pub use error::{Error, Result};
pub use index::MomentIndex;
pub use poly::{MomentPolynomial, MomentSymbol, Rational};
