//! Metropolis-within-Gibbs samplers for the three hierarchical models.
//!
//! One sweep draws, in order:
//!
//! 1. `Σ | β, D ~ IW(β + n, S + D)`;
//! 2. the scale: one `G(pβ/2, tr(Σ⁻¹)/2)` draw for Model1, or `p` independent
//!    `G(β/2, (Σ⁻¹)ⱼⱼ/2)` draws for Model2 and ModelDK;
//! 3. `β` by a random-walk Metropolis step on `γ = log(β - β_lower)`.
//!
//! The proposal is `N(γ, 2σ̂²)` where `σ̂²` is the variance of `γ` under its
//! full conditional, found by trapezoidal quadrature. The acceptance ratio is
//! the ratio of conditional densities in `γ`-space, Jacobian `e^γ` included.

use crate::error::{Error, Result};
use crate::matrix::{DiagMatrix, Matrix, SpdMatrix};
use crate::models::{
    conditional_scale_dk, conditional_scale_model1, conditional_scale_model2, conditional_sigma,
    BetaConditional, ChainState, HyperState, ModelSpec, ModelVariant,
};
use crate::random::{sample_inverse_wishart_pair, RngStream};

/// A chain whose `β` climbs past this is reported as diverged.
pub const BETA_DIVERGENCE_LIMIT: f64 = 1e12;

/// Points in the coarse scan that locates the `γ` mode.
pub const PRESCAN_POINTS: usize = 64;
/// Range `[-PRESCAN_RANGE, PRESCAN_RANGE]` of the coarse `γ` scan.
pub const PRESCAN_RANGE: f64 = 30.0;

/// Refinements allowed when the conditional is too narrow for the grid.
const MAX_REFINEMENTS: usize = 6;
/// Grid points per standard deviation below which the window is refined.
const MIN_POINTS_PER_SD: f64 = 4.0;
/// Relative weight at a window edge above which the window is judged to
/// truncate the conditional.
const EDGE_WEIGHT_LIMIT: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub quad_points: usize,
    /// Half-width of the first quadrature window, in units of `γ`.
    pub quad_halfwidth: f64,
    /// Recompute `σ̂²` every this many iterations.
    pub variance_refresh: usize,
    /// Keep every post-burn-in `Σ` draw in the trace.
    pub retain_sigma: bool,
    pub update_scale: bool,
    pub update_beta: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            burn_in: 5_000,
            seed: 0,
            quad_points: 512,
            quad_halfwidth: 12.0,
            variance_refresh: 1,
            retain_sigma: false,
            update_scale: true,
            update_beta: true,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidParameter(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.quad_points < 64 {
            return Err(Error::InvalidParameter(format!(
                "quad_points must be at least 64, got {}",
                self.quad_points
            )));
        }
        if !(self.quad_halfwidth > 0.0) {
            return Err(Error::InvalidParameter("quad_halfwidth must be positive".into()));
        }
        if self.variance_refresh == 0 {
            return Err(Error::InvalidParameter("variance_refresh must be at least 1".into()));
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        self.iterations - self.burn_in
    }
}

/// One retained iteration, as written to trace dumps.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub beta: f64,
    pub accepted: bool,
    pub sigma_diag: Vec<f64>,
}

/// Post-burn-in summary of a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainTrace {
    pub sigma_mean: Matrix,
    pub sigma_inv_mean: Matrix,
    pub beta_draws: Vec<f64>,
    pub accept_count: usize,
    pub records: Vec<TraceRecord>,
    pub sigma_draws: Option<Vec<SpdMatrix>>,
    /// `β` steps that fell back to unit proposal variance.
    pub quadrature_fallbacks: usize,
}

impl ChainTrace {
    /// Trace built directly from a set of `Σ` draws, with no `β` information.
    pub fn from_draws(draws: &[SpdMatrix]) -> Result<Self> {
        let first = draws
            .first()
            .ok_or_else(|| Error::InvalidParameter("trace needs at least one draw".into()))?;
        let p = first.dim();
        let mut acc = Accumulator::new(p);
        for d in draws {
            acc.add(d, &d.inverse())?;
        }
        let (sigma_mean, sigma_inv_mean) = acc.means();
        Ok(Self {
            sigma_mean,
            sigma_inv_mean,
            beta_draws: Vec::new(),
            accept_count: 0,
            records: Vec::new(),
            sigma_draws: Some(draws.to_vec()),
            quadrature_fallbacks: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma_mean.rows()
    }

    pub fn retained(&self) -> usize {
        self.records.len().max(self.sigma_draws.as_ref().map_or(0, Vec::len))
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.beta_draws.is_empty() {
            return 0.0;
        }
        self.accept_count as f64 / self.beta_draws.len() as f64
    }
}

struct Accumulator {
    count: usize,
    sigma_sum: Matrix,
    inv_sum: Matrix,
}

impl Accumulator {
    fn new(p: usize) -> Self {
        Self {
            count: 0,
            sigma_sum: Matrix::zeros(p, p),
            inv_sum: Matrix::zeros(p, p),
        }
    }

    fn add(&mut self, sigma: &SpdMatrix, sigma_inv: &SpdMatrix) -> Result<()> {
        self.sigma_sum.add_scaled(sigma.matrix(), 1.0)?;
        self.inv_sum.add_scaled(sigma_inv.matrix(), 1.0)?;
        self.count += 1;
        Ok(())
    }

    fn means(&self) -> (Matrix, Matrix) {
        let k = 1.0 / self.count as f64;
        (
            self.sigma_sum.scale(k).symmetrized(),
            self.inv_sum.scale(k).symmetrized(),
        )
    }
}

/// Outcome of one Metropolis update of `β`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaStep {
    pub beta: f64,
    pub accepted: bool,
    /// The quadrature was degenerate and unit variance was used instead.
    pub fallback: bool,
}

/// `log π(β(γ)) + γ`, the conditional of `β` expressed in `γ`.
fn gamma_log_target(target: &BetaConditional, gamma: f64) -> f64 {
    target.log_density(target.lower() + gamma.exp()) + gamma
}

/// Metropolis acceptance probability for a move `γ → γ'`.
pub fn acceptance_probability(target: &BetaConditional, gamma_from: f64, gamma_to: f64) -> f64 {
    let ratio = gamma_log_target(target, gamma_to) - gamma_log_target(target, gamma_from);
    if ratio.is_nan() {
        return 0.0;
    }
    ratio.exp().min(1.0)
}

/// Random-walk step on `γ` with proposal variance `2·variance`.
pub fn random_walk_beta_step(target: &BetaConditional, beta: f64, variance: f64, rng: &mut RngStream) -> (f64, bool) {
    let gamma = (beta - target.lower()).ln();
    let proposal = gamma + (2.0 * variance).sqrt() * rng.standard_normal();
    let log_ratio = gamma_log_target(target, proposal) - gamma_log_target(target, gamma);
    let u = rng.uniform();
    if u.ln() < log_ratio {
        (target.lower() + proposal.exp(), true)
    } else {
        (beta, false)
    }
}

/// Mean and variance of a density on the real line given by its log,
/// computed by trapezoidal quadrature.
///
/// The mode is located by a coarse scan of `[-30, 30]`; the first window is
/// `mode ± halfwidth`. When the density is too narrow for that grid the
/// window is re-centred on the mean with half-width `halfwidth` standard
/// deviations, until the grid resolves it.
pub fn quadrature_moments<F: Fn(f64) -> f64>(log_density: F, points: usize, halfwidth: f64) -> Result<(f64, f64)> {
    let step = 2.0 * PRESCAN_RANGE / (PRESCAN_POINTS - 1) as f64;
    let mut mode = None;
    let mut best = f64::NEG_INFINITY;
    for i in 0..PRESCAN_POINTS {
        let g = -PRESCAN_RANGE + step * i as f64;
        let h = log_density(g);
        if h.is_nan() {
            return Err(Error::QuadratureDegenerate(format!("log-density is NaN at {g}")));
        }
        if h > best {
            best = h;
            mode = Some(g);
        }
    }
    let mode = mode.ok_or_else(|| Error::QuadratureDegenerate("no finite point in the scan".into()))?;

    let mut lo = mode - halfwidth;
    let mut hi = mode + halfwidth;
    for round in 0..=MAX_REFINEMENTS {
        let (mean, var, edge) = trapezoid_moments(&log_density, lo, hi, points)?;
        let spacing = (hi - lo) / (points - 1) as f64;
        let sd = var.sqrt();
        if sd >= MIN_POINTS_PER_SD * spacing || round == MAX_REFINEMENTS {
            if edge > EDGE_WEIGHT_LIMIT {
                return Err(Error::QuadratureDegenerate(format!(
                    "window [{lo}, {hi}] truncates the density (edge weight {edge:e})"
                )));
            }
            if !(var > 0.0) || !var.is_finite() {
                return Err(Error::QuadratureDegenerate(format!("variance {var}")));
            }
            return Ok((mean, var));
        }
        let width = halfwidth * sd.max(spacing);
        lo = mean - width;
        hi = mean + width;
    }
    unreachable!("the last round always returns")
}

/// Returns (mean, variance, largest relative weight at either end point).
fn trapezoid_moments<F: Fn(f64) -> f64>(log_density: &F, lo: f64, hi: f64, points: usize) -> Result<(f64, f64, f64)> {
    let step = (hi - lo) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
    let logs: Vec<f64> = grid.iter().map(|&g| log_density(g)).collect();
    if logs.iter().any(|h| h.is_nan()) {
        return Err(Error::QuadratureDegenerate("log-density is NaN in the window".into()));
    }
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(Error::QuadratureDegenerate("no finite point in the window".into()));
    }
    let weights: Vec<f64> = logs
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let w = (h - peak).exp();
            if i == 0 || i == points - 1 {
                0.5 * w
            } else {
                w
            }
        })
        .collect();
    let mass: f64 = weights.iter().sum();
    let mean = weights.iter().zip(&grid).map(|(w, g)| w * g).sum::<f64>() / mass;
    let var = weights.iter().zip(&grid).map(|(w, g)| w * (g - mean).powi(2)).sum::<f64>() / mass;
    let edge = 2.0 * weights[0].max(weights[points - 1]);
    Ok((mean, var, edge))
}

/// Variance of `γ = log(β - β_lower)` under the `β` full conditional at `state`.
pub fn estimate_gamma_variance(spec: &ModelSpec, state: &ChainState, config: &SamplerConfig) -> Result<f64> {
    let target = BetaConditional::new(spec, &state.sigma, &state.hyper.scale_diag);
    conditional_gamma_variance(&target, config)
}

pub fn conditional_gamma_variance(target: &BetaConditional, config: &SamplerConfig) -> Result<f64> {
    quadrature_moments(|g| gamma_log_target(target, g), config.quad_points, config.quad_halfwidth).map(|(_, v)| v)
}

/// One Metropolis update of `β` at `state`, recomputing `σ̂²`.
pub fn metropolis_beta_step(
    spec: &ModelSpec,
    state: &ChainState,
    config: &SamplerConfig,
    rng: &mut RngStream,
) -> Result<BetaStep> {
    let target = BetaConditional::new(spec, &state.sigma, &state.hyper.scale_diag);
    let (variance, fallback) = variance_or_fallback(&target, config)?;
    let (beta, accepted) = random_walk_beta_step(&target, state.hyper.beta, variance, rng);
    Ok(BetaStep {
        beta,
        accepted,
        fallback,
    })
}

fn variance_or_fallback(target: &BetaConditional, config: &SamplerConfig) -> Result<(f64, bool)> {
    match conditional_gamma_variance(target, config) {
        Ok(v) => Ok((v, false)),
        Err(Error::QuadratureDegenerate(_)) => Ok((1.0, true)),
        Err(e) => Err(e),
    }
}

/// Stateful sampler; [`run_chain`] is the one-shot entry point.
pub struct GibbsSampler<'a> {
    spec: ModelSpec,
    s: &'a Matrix,
    n: usize,
    config: &'a SamplerConfig,
    state: ChainState,
    cached_variance: f64,
    iteration: usize,
    fallbacks: usize,
}

impl<'a> GibbsSampler<'a> {
    /// Starts from `Σ₀ = S/n + 0.1·I`, scale entries from the diagonal of `Σ₀`
    /// (their mean for Model1) and `β₀ = p + 3`, or the middle of the support
    /// when a D&K bound lies below that.
    pub fn new(spec: ModelSpec, s: &'a Matrix, n: usize, config: &'a SamplerConfig) -> Result<Self> {
        config.validate()?;
        if !s.is_square() {
            return Err(Error::DimensionMismatch {
                expected: s.rows(),
                found: s.cols(),
            });
        }
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be at least 1".into()));
        }
        let p = s.rows();
        spec.validate(p)?;
        let sigma0 = SpdMatrix::new(s.scale(1.0 / n as f64).add_diag(&vec![0.1; p])?)?;
        let diag = sigma0.diag();
        let scale = match spec.variant {
            ModelVariant::Model1 => DiagMatrix::scalar(p, diag.iter().sum::<f64>() / p as f64)?,
            _ => DiagMatrix::new(diag)?,
        };
        let mut beta0 = p as f64 + 3.0;
        if !spec.beta_in_support(p, beta0) {
            beta0 = 0.5 * (spec.beta_lower(p) + spec.beta_upper());
        }
        let state = ChainState::new(&spec, sigma0, HyperState::new(beta0, scale))?;
        Ok(Self {
            spec,
            s,
            n,
            config,
            state,
            cached_variance: 1.0,
            iteration: 0,
            fallbacks: 0,
        })
    }

    /// Replaces the starting hyperparameters.
    pub fn with_hyper(mut self, hyper: HyperState) -> Result<Self> {
        self.state = ChainState::new(&self.spec, self.state.sigma.clone(), hyper)?;
        Ok(self)
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    /// One full sweep. Returns the fresh `Σ⁻¹` and whether `β` moved.
    pub fn step(&mut self, rng: &mut RngStream) -> Result<(SpdMatrix, bool)> {
        let p = self.state.dim();
        let params = conditional_sigma(&self.spec, &self.state.hyper, self.s, self.n)?;
        let (sigma, sigma_inv) = sample_inverse_wishart_pair(rng, params.df, &params.scale)?;
        self.state.sigma = sigma;

        if self.config.update_scale {
            let beta = self.state.hyper.beta;
            let scale = match self.spec.variant {
                ModelVariant::Model1 => {
                    DiagMatrix::scalar(p, conditional_scale_model1(beta, &sigma_inv)?.sample(rng))?
                }
                ModelVariant::Model2 => DiagMatrix::new(
                    (0..p)
                        .map(|j| conditional_scale_model2(beta, &sigma_inv, j).map(|g| g.sample(rng)))
                        .collect::<Result<_>>()?,
                )?,
                ModelVariant::ModelDK => DiagMatrix::new(
                    (0..p)
                        .map(|j| conditional_scale_dk(beta, &sigma_inv, j).map(|g| g.sample(rng)))
                        .collect::<Result<_>>()?,
                )?,
            };
            self.state.hyper.scale_diag = scale;
        }

        let mut accepted = false;
        if self.config.update_beta {
            let target = BetaConditional::new(&self.spec, &self.state.sigma, &self.state.hyper.scale_diag);
            if self.iteration.is_multiple_of(self.config.variance_refresh) {
                let (v, fallback) = variance_or_fallback(&target, self.config)?;
                self.cached_variance = v;
                self.fallbacks += fallback as usize;
            }
            let (beta, acc) = random_walk_beta_step(&target, self.state.hyper.beta, self.cached_variance, rng);
            if beta > BETA_DIVERGENCE_LIMIT || !beta.is_finite() {
                return Err(Error::ChainDiverged {
                    iteration: self.iteration,
                    beta,
                });
            }
            self.state.hyper.beta = beta;
            accepted = acc;
        }
        self.iteration += 1;
        Ok((sigma_inv, accepted))
    }

    pub fn run(mut self, rng: &mut RngStream) -> Result<ChainTrace> {
        let p = self.state.dim();
        let retained = self.config.retained();
        let mut acc = Accumulator::new(p);
        let mut beta_draws = Vec::with_capacity(retained);
        let mut records = Vec::with_capacity(retained);
        let mut sigma_draws = self.config.retain_sigma.then(|| Vec::with_capacity(retained));
        let mut accept_count = 0;
        let mut post_burn_fallbacks = 0;

        for iter in 0..self.config.iterations {
            let before = self.fallbacks;
            let (sigma_inv, accepted) = self.step(rng)?;
            if iter < self.config.burn_in {
                continue;
            }
            post_burn_fallbacks += self.fallbacks - before;
            acc.add(&self.state.sigma, &sigma_inv)?;
            accept_count += accepted as usize;
            beta_draws.push(self.state.hyper.beta);
            records.push(TraceRecord {
                iter,
                beta: self.state.hyper.beta,
                accepted,
                sigma_diag: self.state.sigma.diag(),
            });
            if let Some(draws) = sigma_draws.as_mut() {
                draws.push(self.state.sigma.clone());
            }
        }
        let (sigma_mean, sigma_inv_mean) = acc.means();
        Ok(ChainTrace {
            sigma_mean,
            sigma_inv_mean,
            beta_draws,
            accept_count,
            records,
            sigma_draws,
            quadrature_fallbacks: post_burn_fallbacks,
        })
    }
}

/// Runs one chain for `spec` on scatter matrix `s` of `n` observations.
pub fn run_chain(
    spec: &ModelSpec,
    s: &Matrix,
    n: usize,
    config: &SamplerConfig,
    rng: &mut RngStream,
) -> Result<ChainTrace> {
    GibbsSampler::new(*spec, s, n, config)?.run(rng)
}
