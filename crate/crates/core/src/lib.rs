//! Two-step sparse regression: Lasso, nonnegative garrote, adaptive Lasso and
//! hard thresholding on top of OLS, ridge, univariate or Lasso initial
//! estimates, together with sign-recovery diagnostics and the Monte Carlo
//! machinery used to compare them.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod exhaustive;
pub mod features;
pub mod fixtures;
pub mod initial;
pub mod numerics;
pub mod path;
pub mod rng;
pub mod selectors;
pub mod sim;
pub mod solver;
pub mod sweep;

pub use data::{Dataset, SignVector, Standardization, SupportSet, TrueModel};
pub use error::{Error, Result};
pub use initial::{InitialEstimate, InitialMethod};
pub use path::PathSolution;
pub use selectors::{InitialSpec, Procedure};
