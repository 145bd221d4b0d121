//! Certified Euclidean error bounds for maximum-determinant problems.
//!
//! A feasible suboptimal solution `X_f` of a maxdet problem sits within
//! `||X_f||_2^2 * g(eps)` of the true optimizer in squared Frobenius
//! norm, where `eps` is the log-determinant optimality gap and `g` is a
//! closed-form gain built from bounds on the principal branch of the
//! Lambert W function. This crate provides:
//!
//! * [`linalg`]: the dense symmetric kernel (Jacobi eigensolver,
//!   Cholesky, matrix square root, norms);
//! * [`lambert`]: both real W branches plus the bound and inequality
//!   machinery behind the certificate;
//! * [`certificate`]: the error gains, the Frobenius certificate, `Q`
//!   matrix diagnostics and a brute-force oracle for `g`;
//! * [`mvee`]: a minimum-volume enclosing ellipsoid solver producing
//!   feasible suboptimal solutions at requested tolerances;
//! * [`experiment`]: the tolerance-ladder study validating the bound
//!   end-to-end on random instances.

// Dense kernels index row/column pairs; iterator forms obscure them.
#![allow(clippy::needless_range_loop)]

pub mod certificate;
pub mod error;
pub mod experiment;
pub mod lambert;
pub mod linalg;
pub mod mvee;
pub mod rng;

pub use certificate::{
    brute_force_g, frobenius_certificate, g_candidates, g_closed, g_exact, lambda_star,
    q_diagnostics, Certificate, QDiagnostics,
};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentRow};
pub use lambert::{
    branch_ratio_inequality, log_gap_bounds, w0, w0_bounds, w0_log_form_bounds, wm1, Branch,
    LambertEval,
};
pub use linalg::{
    eigh, frobenius_norm, logdet_posdef, solve_posdef, spectral_norm, sym_sqrt, EigenDecomp,
    Matrix, MatrixJson, SymMatrix,
};
pub use mvee::{
    normalized_error, optimality_gap, solve_mvee, Ellipsoid, EllipsoidJson, PointSet, SolveReport,
};
