//! Seedable random streams and the samplers built on them.
//!
//! # Streams
//!
//! [`RngStream`] wraps xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). Substreams are derived as
//! `seed ^ splitmix64(index)`, so any replication can be regenerated from the
//! master seed and its index alone.
//!
//! # Samplers
//!
//! * standard normal: ziggurat from `rand_distr`;
//! * Gamma (shape–rate): Marsaglia–Tsang squeeze, with the
//!   `G(a) = G(a + 1)·U^(1/a)` boost for shape below one;
//! * Wishart: Bartlett decomposition, valid for any real `df > p - 1`;
//! * inverse-Wishart: inverse of a `Wishart(df, scale⁻¹)` draw.
//!
//! [`scatter_matrix`] does not subtract the sample mean: the model fixes the
//! mean at zero, and centering would bias every estimator downstream.

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, SpdMatrix};

/// SplitMix64 finalizer, used to derive substream seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic single-owner random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    rng: Xoshiro256PlusPlus,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream `seed ^ splitmix64(index)`.
    pub fn substream(&self, index: u64) -> Self {
        Self::new(self.seed ^ splitmix64(index))
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        loop {
            // 53 random mantissa bits.
            let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

pub fn sample_standard_normal(rng: &mut RngStream) -> f64 {
    rng.standard_normal()
}

/// Gamma distribution with density ∝ `x^(shape-1)·exp(-rate·x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl GammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma needs positive finite shape and rate, got shape={shape}, rate={rate}"
            )));
        }
        Ok(Self { shape, rate })
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    /// Log-density up to an additive constant in `x`.
    pub fn log_kernel(&self, x: f64) -> f64 {
        (self.shape - 1.0) * x.ln() - self.rate * x
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        standard_gamma(rng, self.shape) / self.rate
    }
}

pub fn sample_gamma(rng: &mut RngStream, shape: f64, rate: f64) -> Result<f64> {
    Ok(GammaParams::new(shape, rate)?.sample(rng))
}

/// Unit-rate Gamma draw by Marsaglia–Tsang.
fn standard_gamma(rng: &mut RngStream, shape: f64) -> f64 {
    if shape < 1.0 {
        let boosted = standard_gamma(rng, shape + 1.0);
        return boosted * rng.uniform().powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = rng.standard_normal();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.uniform();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Parameters of `Wishart(df, scale)` or, in the samplers' conditional, of
/// `IW(df, scale)`.
#[derive(Clone, Debug)]
pub struct WishartParams {
    pub df: f64,
    pub scale: SpdMatrix,
}

impl WishartParams {
    pub fn new(df: f64, scale: SpdMatrix) -> Result<Self> {
        let p = scale.dim() as f64;
        if !(df > p - 1.0) || !df.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "degrees of freedom {df} must exceed p - 1 = {}",
                p - 1.0
            )));
        }
        Ok(Self { df, scale })
    }

    pub fn dim(&self) -> usize {
        self.scale.dim()
    }
}

/// Bartlett factor `A`: lower triangular, `A[i][i]² ~ χ²(df - i)`, standard
/// normal below the diagonal.
fn bartlett_factor(rng: &mut RngStream, df: f64, p: usize) -> Matrix {
    let mut a = Matrix::zeros(p, p);
    for i in 0..p {
        // χ²(k) = 2·Gamma(k/2, 1)
        let chi2 = 2.0 * standard_gamma(rng, 0.5 * (df - i as f64));
        a[(i, i)] = chi2.sqrt();
        for j in 0..i {
            a[(i, j)] = rng.standard_normal();
        }
    }
    a
}

pub fn sample_wishart(rng: &mut RngStream, params: &WishartParams) -> SpdMatrix {
    let p = params.dim();
    let a = bartlett_factor(rng, params.df, p);
    let la = params
        .scale
        .cholesky()
        .matmul(&a)
        .expect("factor dimensions agree");
    SpdMatrix::from_trusted_factor(la)
}

/// Draw from `IW(df, scale)`, density ∝ `|Σ|^(-(df+p+1)/2)·exp(-tr(Σ⁻¹·scale)/2)`.
pub fn sample_inverse_wishart(rng: &mut RngStream, df: f64, scale: &SpdMatrix) -> Result<SpdMatrix> {
    Ok(sample_inverse_wishart_pair(rng, df, scale)?.0)
}

/// Inverse-Wishart draw together with its inverse (the underlying Wishart
/// draw), which the Gibbs sweep needs anyway.
pub fn sample_inverse_wishart_pair(
    rng: &mut RngStream,
    df: f64,
    scale: &SpdMatrix,
) -> Result<(SpdMatrix, SpdMatrix)> {
    let params = WishartParams::new(df, scale.inverse())?;
    let w = sample_wishart(rng, &params);
    Ok((w.inverse(), w))
}

/// `n` rows drawn i.i.d. from `N_p(0, cov)` as `L·z`.
pub fn sample_mvn_zero(rng: &mut RngStream, cov: &SpdMatrix, n: usize) -> Matrix {
    let p = cov.dim();
    let l = cov.cholesky();
    let mut out = Matrix::zeros(n, p);
    let mut z = vec![0.0; p];
    for r in 0..n {
        z.iter_mut().for_each(|zi| *zi = rng.standard_normal());
        for i in 0..p {
            out[(r, i)] = (0..=i).map(|k| l[(i, k)] * z[k]).sum();
        }
    }
    out
}

/// `S = Σᵢ xᵢ·xᵢᵀ` over the rows of `data`, without mean-centering.
pub fn scatter_matrix(data: &Matrix) -> Matrix {
    let p = data.cols();
    let mut s = Matrix::zeros(p, p);
    for r in 0..data.rows() {
        let x = data.row(r);
        for i in 0..p {
            for j in 0..=i {
                s[(i, j)] += x[i] * x[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            s[(j, i)] = s[(i, j)];
        }
    }
    s
}
