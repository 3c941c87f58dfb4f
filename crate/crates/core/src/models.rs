//! Hierarchical inverse-Wishart priors and their posteriors.
//!
//! All three models put `Σ | β, D ~ IW(β, D)` with a diagonal `D` and differ
//! in how `D` and `β` are parametrized:
//!
//! | model   | scale `D`              | prior on `β`                 |
//! |---------|------------------------|------------------------------|
//! | Model1  | `φ·I`                  | `β^(-δ)` on `(p+1, ∞)`       |
//! | Model2  | `Φ = diag(φ₁,…,φ_p)`   | `β^(-δ)` on `(p+1, ∞)`       |
//! | ModelDK | `A = diag(α₁,…,α_p)`   | `β^(-1)` on `(p-1, b]`       |
//!
//! The scale entries carry the scale-invariant `1/φ` prior in every model.
//! Model1 and Model2 are written in the reparametrized scale
//! (`φ = α(β-p-1)`, `Φ = (β-p-1)A`), so their scale enters the conditional of
//! `Σ` unchanged, exactly like the D&K scale `A`.
//!
//! Log-densities here are unnormalized and return `-∞` outside the support
//! rather than failing, so a Metropolis step can reject such points without
//! branching on errors.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::{DiagMatrix, Matrix, SpdMatrix};
use crate::random::{GammaParams, WishartParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelVariant {
    Model1,
    Model2,
    ModelDK,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 3] = [ModelVariant::Model1, ModelVariant::Model2, ModelVariant::ModelDK];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Model1 => "model1",
            ModelVariant::Model2 => "model2",
            ModelVariant::ModelDK => "dk",
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "model1" | "1" => Ok(ModelVariant::Model1),
            "model2" | "2" => Ok(ModelVariant::Model2),
            "dk" | "modeldk" | "model_dk" => Ok(ModelVariant::ModelDK),
            other => Err(Error::InvalidParameter(format!(
                "unknown model '{other}' (expected model1, model2 or dk)"
            ))),
        }
    }
}

/// Prior in force plus its hyper-hyperparameter.
///
/// `delta` is the exponent of the `β^(-δ)` prior for Model1/Model2 and is
/// fixed at 1 for ModelDK; `b` bounds `β` from above for ModelDK only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSpec {
    pub variant: ModelVariant,
    pub delta: u32,
    pub b: f64,
}

/// Default upper bound on `β` for the D&K prior.
pub const DEFAULT_DK_BOUND: f64 = 1e6;

impl ModelSpec {
    pub fn model1(delta: u32) -> Result<Self> {
        Self::check_delta(delta)?;
        Ok(Self {
            variant: ModelVariant::Model1,
            delta,
            b: f64::INFINITY,
        })
    }

    pub fn model2(delta: u32) -> Result<Self> {
        Self::check_delta(delta)?;
        Ok(Self {
            variant: ModelVariant::Model2,
            delta,
            b: f64::INFINITY,
        })
    }

    pub fn dk(b: f64) -> Result<Self> {
        if !(b > 0.0) || b.is_nan() {
            return Err(Error::InvalidParameter(format!("dk bound must be positive, got {b}")));
        }
        Ok(Self {
            variant: ModelVariant::ModelDK,
            delta: 1,
            b,
        })
    }

    pub fn new(variant: ModelVariant, delta: u32, dk_bound: f64) -> Result<Self> {
        match variant {
            ModelVariant::Model1 => Self::model1(delta),
            ModelVariant::Model2 => Self::model2(delta),
            ModelVariant::ModelDK => Self::dk(dk_bound),
        }
    }

    fn check_delta(delta: u32) -> Result<()> {
        // δ = 1 gives an improper posterior.
        if delta < 2 {
            return Err(Error::InvalidParameter(format!(
                "delta must be at least 2 for a proper posterior, got {delta}"
            )));
        }
        Ok(())
    }

    /// Checks the dimension-dependent constraints.
    pub fn validate(&self, p: usize) -> Result<()> {
        match self.variant {
            ModelVariant::Model1 | ModelVariant::Model2 => Self::check_delta(self.delta),
            ModelVariant::ModelDK if !(self.b > p as f64 - 1.0) => Err(Error::InvalidParameter(
                format!("dk bound {} must exceed p - 1 = {}", self.b, p - 1),
            )),
            ModelVariant::ModelDK => Ok(()),
        }
    }

    /// Exclusive lower end of the `β` support.
    pub fn beta_lower(&self, p: usize) -> f64 {
        match self.variant {
            ModelVariant::Model1 | ModelVariant::Model2 => p as f64 + 1.0,
            ModelVariant::ModelDK => p as f64 - 1.0,
        }
    }

    /// Inclusive upper end of the `β` support (infinite for Model1/Model2).
    pub fn beta_upper(&self) -> f64 {
        match self.variant {
            ModelVariant::ModelDK => self.b,
            _ => f64::INFINITY,
        }
    }

    pub fn beta_in_support(&self, p: usize, beta: f64) -> bool {
        beta > self.beta_lower(p) && beta <= self.beta_upper()
    }

    /// Power of `β` in the prior denominator.
    pub fn beta_exponent(&self) -> f64 {
        match self.variant {
            ModelVariant::ModelDK => 1.0,
            _ => self.delta as f64,
        }
    }
}

/// Degrees of freedom and diagonal scale of the inverse-Wishart layer.
///
/// For Model1 every `scale_diag` entry holds the common `φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperState {
    pub beta: f64,
    pub scale_diag: DiagMatrix,
}

impl HyperState {
    pub fn new(beta: f64, scale_diag: DiagMatrix) -> Self {
        Self { beta, scale_diag }
    }

    /// Model1 state `(β, φ·I_p)`.
    pub fn isotropic(beta: f64, phi: f64, p: usize) -> Result<Self> {
        Ok(Self::new(beta, DiagMatrix::scalar(p, phi)?))
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        let p = self.scale_diag.dim();
        if !spec.beta_in_support(p, self.beta) {
            return Err(Error::InvalidParameter(format!(
                "beta = {} outside ({}, {}]",
                self.beta,
                spec.beta_lower(p),
                spec.beta_upper()
            )));
        }
        if spec.variant == ModelVariant::Model1 {
            let d = self.scale_diag.values();
            if d.iter().any(|&v| v != d[0]) {
                return Err(Error::InvalidParameter("model1 needs an isotropic scale".into()));
            }
        }
        Ok(())
    }
}

/// One state `(Σ, scale, β)` of the Gibbs sampler.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub sigma: SpdMatrix,
    pub hyper: HyperState,
}

impl ChainState {
    pub fn new(spec: &ModelSpec, sigma: SpdMatrix, hyper: HyperState) -> Result<Self> {
        if sigma.dim() != hyper.scale_diag.dim() {
            return Err(Error::DimensionMismatch {
                expected: sigma.dim(),
                found: hyper.scale_diag.dim(),
            });
        }
        hyper.validate(spec)?;
        Ok(Self { sigma, hyper })
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }
}

/// `Σ | rest ~ IW(β + n, S + D)`.
pub fn conditional_sigma(_spec: &ModelSpec, hyper: &HyperState, s: &Matrix, n: usize) -> Result<WishartParams> {
    let scale = SpdMatrix::new(s.add_diag(hyper.scale_diag.values())?)?;
    WishartParams::new(hyper.beta + n as f64, scale)
}

/// Model1: `φ | rest ~ G(p·β/2, tr(Σ⁻¹)/2)`.
pub fn conditional_scale_model1(beta: f64, sigma_inv: &SpdMatrix) -> Result<GammaParams> {
    let p = sigma_inv.dim() as f64;
    GammaParams::new(p * beta / 2.0, sigma_inv.trace() / 2.0)
}

/// Model2: `φⱼ | rest ~ G(β/2, (Σ⁻¹)ⱼⱼ/2)`.
///
/// The shape comes from the `|Φ|^(β/2 - 1)` factor of the joint posterior;
/// it is not the `p·β/2` of the isotropic model.
pub fn conditional_scale_model2(beta: f64, sigma_inv: &SpdMatrix, j: usize) -> Result<GammaParams> {
    GammaParams::new(beta / 2.0, sigma_inv[(j, j)] / 2.0)
}

/// ModelDK: `αⱼ | rest ~ G(β/2, (Σ⁻¹)ⱼⱼ/2)`.
pub fn conditional_scale_dk(beta: f64, sigma_inv: &SpdMatrix, j: usize) -> Result<GammaParams> {
    GammaParams::new(beta / 2.0, sigma_inv[(j, j)] / 2.0)
}

/// `log Γ_p(a) = p(p-1)/4·log π + Σⱼ log Γ(a + (1-j)/2)`.
pub fn log_multivariate_gamma(p: usize, a: f64) -> Result<f64> {
    if !(a > (p as f64 - 1.0) / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "multivariate gamma of order {p} needs a > {}, got {a}",
            (p as f64 - 1.0) / 2.0
        )));
    }
    Ok(ln_mvgamma(p, a))
}

fn ln_mvgamma(p: usize, a: f64) -> f64 {
    let pf = p as f64;
    let mut acc = pf * (pf - 1.0) / 4.0 * PI.ln();
    for j in 0..p {
        acc += libm::lgamma(a - j as f64 / 2.0);
    }
    acc
}

/// Full conditional of `β` given `(Σ, D)`:
/// `β·C - δ·log β - log Γ_p(β/2)` with `C = (log|Σ⁻¹| + log|D| - p·log 2)/2`.
///
/// The sample size does not enter: `Σ` already carries the data.
#[derive(Clone, Copy, Debug)]
pub struct BetaConditional {
    p: usize,
    c: f64,
    exponent: f64,
    lower: f64,
    upper: f64,
}

impl BetaConditional {
    pub fn new(spec: &ModelSpec, sigma: &SpdMatrix, scale_diag: &DiagMatrix) -> Self {
        let p = sigma.dim();
        let c = (-sigma.log_det() + scale_diag.log_det() - p as f64 * LN_2) / 2.0;
        Self {
            p,
            c,
            exponent: spec.beta_exponent(),
            lower: spec.beta_lower(p),
            upper: spec.beta_upper(),
        }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn log_density(&self, beta: f64) -> f64 {
        if !(beta > self.lower && beta <= self.upper) {
            return f64::NEG_INFINITY;
        }
        beta * self.c - self.exponent * beta.ln() - ln_mvgamma(self.p, beta / 2.0)
    }
}

/// Unnormalized log full conditional of `β`; `-∞` outside the support.
pub fn beta_log_conditional(spec: &ModelSpec, sigma: &SpdMatrix, scale_diag: &DiagMatrix, beta: f64) -> f64 {
    BetaConditional::new(spec, sigma, scale_diag).log_density(beta)
}

/// Unnormalized log joint posterior of `(Σ, scale, β)` given the scatter `s`
/// of `n` observations. The `(2π)^(-pn/2)` constant is dropped.
pub fn log_joint_posterior(spec: &ModelSpec, state: &ChainState, s: &Matrix, n: usize) -> f64 {
    let p = state.dim();
    assert_eq!(s.rows(), p, "scatter dimension must match the state");
    let beta = state.hyper.beta;
    if !spec.beta_in_support(p, beta) {
        return f64::NEG_INFINITY;
    }
    let pf = p as f64;
    let scale = state.hyper.scale_diag.values();
    let sigma_inv = state.sigma.inverse();
    let post_scale = s.add_diag(scale).expect("dimensions checked");
    let mut tr = 0.0;
    for i in 0..p {
        for j in 0..p {
            tr += sigma_inv[(i, j)] * post_scale[(j, i)];
        }
    }
    let log_det_scale = state.hyper.scale_diag.log_det();
    let scale_term = match spec.variant {
        // |φI|^(β/2) / φ
        ModelVariant::Model1 => beta / 2.0 * pf * scale[0].ln() - scale[0].ln(),
        ModelVariant::Model2 | ModelVariant::ModelDK => (beta / 2.0 - 1.0) * log_det_scale,
    };
    -(beta + n as f64 + pf + 1.0) / 2.0 * state.sigma.log_det() - tr / 2.0 + scale_term
        - pf * beta / 2.0 * LN_2
        - spec.beta_exponent() * beta.ln()
        - ln_mvgamma(p, beta / 2.0)
}

/// Log marginal posterior of `β` when the scatter matrix is isotropic,
/// `S = λ·I`, with `Σ` and the scale integrated out analytically.
///
/// This is the dominating density used to show properness: `λ` only shifts
/// the result by a constant, and the tail behaves like `β^(-δ)`.
pub fn isotropic_beta_marginal_log_density(spec: &ModelSpec, p: usize, n: usize, beta: f64) -> f64 {
    if !spec.beta_in_support(p, beta) {
        return f64::NEG_INFINITY;
    }
    let pf = p as f64;
    let nf = n as f64;
    let ln_beta_fn = |a: f64, b: f64| libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b);
    let scale_integral = match spec.variant {
        ModelVariant::Model1 => ln_beta_fn(pf * beta / 2.0, pf * nf / 2.0),
        ModelVariant::Model2 | ModelVariant::ModelDK => pf * ln_beta_fn(beta / 2.0, nf / 2.0),
    };
    ln_mvgamma(p, (beta + nf) / 2.0) - ln_mvgamma(p, beta / 2.0) + scale_integral
        - spec.beta_exponent() * beta.ln()
}

/// Log kernel of `IW(df, scale)` at `sigma`, dropping terms free of `sigma`.
pub fn inverse_wishart_log_kernel(df: f64, scale: &Matrix, sigma: &SpdMatrix) -> f64 {
    let p = sigma.dim();
    let inv = sigma.inverse();
    let mut tr = 0.0;
    for i in 0..p {
        for j in 0..p {
            tr += inv[(i, j)] * scale[(j, i)];
        }
    }
    -(df + p as f64 + 1.0) / 2.0 * sigma.log_det() - tr / 2.0
}
