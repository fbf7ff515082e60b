//! Second-stage selectors: nonnegative garrote, adaptive Lasso and hard
//! thresholding of an initial estimate, plus λ selection.

mod alasso;
mod cv;
mod garrote;
mod procedure;
mod threshold;

pub use alasso::{alasso_fit, alasso_lambda_max, alasso_path, alasso_penalty};
pub use cv::{
    make_folds, select_lambda_cv, select_lambda_cv_cached, select_lambda_oracle, CvResult, InitialCache, OracleChoice,
};
pub use garrote::{garrote_fit, garrote_lambda_max, garrote_path, garrote_problem, GarroteSolution};
pub use procedure::{InitialSpec, PointFit, Procedure};
pub use threshold::{hard_threshold, hard_threshold_grid, hard_threshold_path};

/// Initial coefficients smaller than this are excluded from the second step.
pub const ZERO_INIT_TOL: f64 = 1e-12;
