//! Bayesian shrinkage estimation of covariance matrices under hierarchical
//! inverse-Wishart priors.
//!
//! The crate provides the dense linear algebra the samplers need, exact
//! samplers for the Gamma, Wishart and inverse-Wishart laws, the three prior
//! hierarchies and their full conditionals, a Metropolis-within-Gibbs sampler,
//! Bayes estimators with their loss functions, and a reproducible risk study.
//!
//! ```
//! use covshrink::{bayes_estimate, run_chain, BayesLoss, Matrix, ModelSpec, RngStream, SamplerConfig};
//!
//! let s = Matrix::from_diag(&[4.0, 5.0, 6.0]);
//! let config = SamplerConfig { iterations: 400, burn_in: 100, ..Default::default() };
//! let mut rng = RngStream::new(1);
//! let trace = run_chain(&ModelSpec::model1(2).unwrap(), &s, 5, &config, &mut rng).unwrap();
//! let estimate = bayes_estimate(&trace, BayesLoss::L2).unwrap();
//! assert_eq!(estimate.dim(), 3);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod gibbs;
pub mod io;
pub mod matrix;
pub mod models;
pub mod random;
pub mod study;

pub use error::{Error, Result};
pub use estimators::{
    bayes_estimate, bayes_estimate_l1, bayes_estimate_l2, loss_eigen_rel, loss_frobenius, loss_stein,
    loss_stein_or_infinite, mle_estimate, shrunk_eigenvalues, BayesLoss, EstimatorKind, LossKind,
};
pub use gibbs::{run_chain, ChainTrace, GibbsSampler, SamplerConfig, TraceRecord};
pub use matrix::{
    cholesky, givens_rotation_product, log_det, spd_inverse, symmetric_eigen, DiagMatrix, EigenDecomp, Matrix,
    SpdMatrix,
};
pub use models::{ChainState, HyperState, ModelSpec, ModelVariant, DEFAULT_DK_BOUND};
pub use random::{
    sample_gamma, sample_inverse_wishart, sample_mvn_zero, sample_wishart, scatter_matrix, RngStream, WishartParams,
};
pub use study::{build_true_matrix, run_study, RiskReport, RiskRow, StudyConfig, TrueMatrixId};
