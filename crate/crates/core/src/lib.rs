//! Characteristic functions of row contractions, colligations and
//! contractive liftings, computed on truncated full Fock spaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`numlin`]: dense complex kernels (Jacobi eigensolver, square roots,
//!   pseudo-inverses, polar factors, Procrustes).
//! * [`fock`]: words, truncated noncommutative series, creation operators.
//! * [`rowcon`]: row contractions, defects, the c.n.c. test and the
//!   characteristic symbol.
//! * [`colligation`]: colligations, transfer functions, observability and
//!   the structure decomposition of co-isometric observable colligations.
//! * [`lifting`]: liftings `E = [[C, 0], [B, A]]`, the link contraction,
//!   the unitary `σ` and both formulas for the characteristic function.
//! * [`equiv`]: solvers deciding equivalence and coincidence of symbols and
//!   unitary equivalence of row contractions.
//! * [`mobius`]: Möbius transforms of single contractions and liftings.
//!
//! [`io`] holds the JSON schema, [`testgen`] seeded random generators and
//! [`worked`] the worked-example fixtures.

pub mod colligation;
pub mod equiv;
pub mod error;
pub mod fock;
pub mod io;
pub mod lifting;
pub mod mobius;
pub mod numlin;
pub mod rowcon;
pub mod suites;
pub mod testgen;
pub mod worked;

pub use colligation::Colligation;
pub use error::{Error, Result};
pub use fock::{NCSeries, TruncatedFock, Word};
pub use lifting::Lifting;
pub use numlin::{CMatrix, OrthonormalBasis};
pub use rowcon::RowContraction;
