//! Correlation scenarios, locality checks and local hidden variable models.
//!
//! Behaviors are conditional probability tables `P(λ|s)` over a finite
//! multi-party scenario. All algorithms are generic over [`Scalar`] and run
//! either exactly over big rationals or in `f64` with a tolerance.

pub mod error;
pub mod feasibility;
pub mod io;
pub mod lhv;
pub mod locality;
pub mod quantum;
pub mod random;
pub mod scalar;
pub mod scenario;
mod tensor;

pub use error::{Error, Result};
pub use scalar::{ArithmeticMode, Rational, Scalar};
pub use scenario::{Behavior, Scenario};
