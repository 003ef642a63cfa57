//! Regularized empirical risk minimization with Lipschitz losses.
//!
//! * [`losses`]: hinge, logistic, quantile and squared losses with proximal maps.
//! * [`prox`]: soft thresholding, singular value thresholding, sorted-ℓ1 norm.
//! * [`admm`]: nuclear-norm penalized matrix completion by ADMM.
//! * [`prox_grad`]: accelerated proximal gradient for logistic LASSO / SLOPE.
//! * [`theory`]: regularization parameters and rate formulas.
//! * [`simulation`]: synthetic completion experiments and error metrics.
//! * [`data_io`]: rating triplet files, splits and run reports.
//! * [`cv`]: K-fold cross-validation over a λ grid.

pub mod admm;
pub mod cli;
pub mod cv;
pub mod data_io;
pub mod error;
pub mod experiments;
pub mod losses;
pub mod observations;
pub mod prox;
pub mod prox_grad;
pub mod simulation;
pub mod solver;
pub mod theory;

pub use admm::{admm_solve, AdmmConfig, AdmmInit, MatrixProblem};
pub use error::{Error, Result};
pub use losses::{BernsteinConstants, LossKind};
pub use observations::{ObservationSet, Sample};
pub use prox_grad::{prox_grad_solve, FistaConfig, Penalty, VectorProblem};
pub use solver::SolverReport;
