//! Bayes estimators, the MLE baseline and the loss functions used to score
//! them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gibbs::ChainTrace;
use crate::matrix::{solve_lower, Matrix, SpdMatrix};
use crate::models::ModelVariant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LossKind {
    /// `tr(Σ̂Σ⁻¹) - log det(Σ̂Σ⁻¹) - p`
    Stein,
    /// Sum of squared entrywise differences.
    Frobenius,
    /// Relative error of the smallest eigenvalue.
    EigenMinRel,
    /// Relative error of the largest eigenvalue.
    EigenMaxRel,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::Stein,
        LossKind::Frobenius,
        LossKind::EigenMinRel,
        LossKind::EigenMaxRel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Stein => "Stein",
            LossKind::Frobenius => "Frobenius",
            LossKind::EigenMinRel => "EigenMinRel",
            LossKind::EigenMaxRel => "EigenMaxRel",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown loss '{s}'")))
    }
}

/// Which Bayes estimator to form from a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BayesLoss {
    /// Stein loss: `E(Σ⁻¹ | S)⁻¹`.
    L1,
    /// Frobenius loss: `E(Σ | S)`.
    L2,
}

impl FromStr for BayesLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "stein" => Ok(BayesLoss::L1),
            "l2" | "frobenius" => Ok(BayesLoss::L2),
            other => Err(Error::InvalidParameter(format!(
                "unknown loss '{other}' (expected l1 or l2)"
            ))),
        }
    }
}

impl fmt::Display for BayesLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BayesLoss::L1 => "l1",
            BayesLoss::L2 => "l2",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    Model1L1,
    Model1L2,
    Model2L1,
    Model2L2,
    DkL1,
    DkL2,
    Mle,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 7] = [
        EstimatorKind::Model1L1,
        EstimatorKind::Model1L2,
        EstimatorKind::Model2L1,
        EstimatorKind::Model2L2,
        EstimatorKind::DkL1,
        EstimatorKind::DkL2,
        EstimatorKind::Mle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Model1L1 => "Model1_L1",
            EstimatorKind::Model1L2 => "Model1_L2",
            EstimatorKind::Model2L1 => "Model2_L1",
            EstimatorKind::Model2L2 => "Model2_L2",
            EstimatorKind::DkL1 => "DK_L1",
            EstimatorKind::DkL2 => "DK_L2",
            EstimatorKind::Mle => "MLE",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn bayes(variant: ModelVariant, loss: BayesLoss) -> Self {
        match (variant, loss) {
            (ModelVariant::Model1, BayesLoss::L1) => EstimatorKind::Model1L1,
            (ModelVariant::Model1, BayesLoss::L2) => EstimatorKind::Model1L2,
            (ModelVariant::Model2, BayesLoss::L1) => EstimatorKind::Model2L1,
            (ModelVariant::Model2, BayesLoss::L2) => EstimatorKind::Model2L2,
            (ModelVariant::ModelDK, BayesLoss::L1) => EstimatorKind::DkL1,
            (ModelVariant::ModelDK, BayesLoss::L2) => EstimatorKind::DkL2,
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimator '{s}'")))
    }
}

/// Posterior mean `E(Σ | S)`, the Bayes estimator under Frobenius loss.
///
/// A mean that fails SPD validation means the chain was too short; the error
/// is surfaced rather than repaired.
pub fn bayes_estimate_l2(trace: &ChainTrace) -> Result<SpdMatrix> {
    SpdMatrix::new(trace.sigma_mean.symmetrized())
}

/// `E(Σ⁻¹ | S)⁻¹`, the Bayes estimator under Stein loss.
pub fn bayes_estimate_l1(trace: &ChainTrace) -> Result<SpdMatrix> {
    Ok(SpdMatrix::new(trace.sigma_inv_mean.symmetrized())?.inverse())
}

pub fn bayes_estimate(trace: &ChainTrace, loss: BayesLoss) -> Result<SpdMatrix> {
    match loss {
        BayesLoss::L1 => bayes_estimate_l1(trace),
        BayesLoss::L2 => bayes_estimate_l2(trace),
    }
}

/// `S / n`. Not validated: it is singular whenever `n < p`.
pub fn mle_estimate(s: &Matrix, n: usize) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    Ok(s.scale(1.0 / n as f64))
}

pub fn loss_frobenius(est: &Matrix, truth: &Matrix) -> Result<f64> {
    let diff = est.sub(truth)?;
    Ok(diff.as_slice().iter().map(|d| d * d).sum())
}

/// Stein (entropy) loss, evaluated on `M = L⁻¹·Σ̂·L⁻ᵀ` with `Σ = L·Lᵀ` so that
/// `Σ⁻¹` is never formed.
pub fn loss_stein(est: &SpdMatrix, truth: &SpdMatrix) -> Result<f64> {
    if est.dim() != truth.dim() {
        return Err(Error::DimensionMismatch {
            expected: truth.dim(),
            found: est.dim(),
        });
    }
    let l = truth.cholesky();
    let x = solve_lower(l, est.matrix())?;
    let m = solve_lower(l, &x.transpose())?;
    let m = SpdMatrix::new(m.symmetrized())?;
    let loss = m.trace() - m.log_det() - est.dim() as f64;
    // Rounding can leave a tiny negative value at est == truth.
    Ok(loss.max(0.0))
}

/// Stein loss for an estimate that may be singular; `+∞` when it is not
/// positive definite.
pub fn loss_stein_or_infinite(est: &Matrix, truth: &SpdMatrix) -> Result<f64> {
    match SpdMatrix::new(est.symmetrized()).and_then(|e| loss_stein(&e, truth)) {
        Err(Error::NotPositiveDefinite { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}

/// `|λ - λ̂| / λ`.
pub fn loss_eigen_rel(truth_eig: f64, est_eig: f64) -> Result<f64> {
    if !(truth_eig > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "true eigenvalue must be positive, got {truth_eig}"
        )));
    }
    Ok((truth_eig - est_eig).abs() / truth_eig)
}

/// Eigenvalues `gᵢ = ((β-p-1)·d + n·lᵢ) / (β+n-p-1)` of the posterior mean
/// for a fixed `(β, D = d·I)`, given the MLE eigenvalues `lᵢ`.
pub fn shrunk_eigenvalues(beta: f64, d: f64, n: usize, mle_eigs: &[f64]) -> Result<Vec<f64>> {
    let p = mle_eigs.len() as f64;
    if !(beta > p + 1.0) {
        return Err(Error::InvalidParameter(format!("beta must exceed p + 1, got {beta}")));
    }
    let nf = n as f64;
    let prior = beta - p - 1.0;
    Ok(mle_eigs.iter().map(|&l| (prior * d + nf * l) / (prior + nf)).collect())
}
