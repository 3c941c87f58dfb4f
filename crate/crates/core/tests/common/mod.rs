//! Reference computations shared by the integration tests. Everything here is
//! deliberately independent of the library's own quadrature and samplers.

#![allow(dead_code)]

use covshrink::models::isotropic_beta_marginal_log_density;
use covshrink::{Matrix, ModelSpec, SpdMatrix};

/// Distribution function of a density on `(lower, upper]` known up to a
/// constant through its log, tabulated on a fine grid in `log(x - lower)`.
pub struct TabulatedCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl TabulatedCdf {
    pub fn new<F: Fn(f64) -> f64>(log_density: F, lower: f64, points: usize) -> Self {
        let in_gamma = |g: f64| log_density(lower + g.exp()) + g;
        // Beyond e^25 the log-gamma differences lose all precision.
        let scan: Vec<f64> = (0..=6500).map(|i| -40.0 + 0.01 * i as f64).collect();
        let vals: Vec<f64> = scan.iter().map(|&g| in_gamma(g)).collect();
        let peak = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(peak.is_finite(), "density has no finite point in the scan");
        let keep: Vec<usize> = (0..scan.len()).filter(|&i| vals[i] > peak - 45.0).collect();
        let lo = scan[keep[0].saturating_sub(1)];
        let hi = scan[(keep[keep.len() - 1] + 1).min(scan.len() - 1)];

        let step = (hi - lo) / (points - 1) as f64;
        let gs: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
        let dens: Vec<f64> = gs.iter().map(|&g| (in_gamma(g) - peak).exp()).collect();
        let mut cdf = vec![0.0; points];
        for i in 1..points {
            cdf[i] = cdf[i - 1] + 0.5 * step * (dens[i] + dens[i - 1]);
        }
        let total = cdf[points - 1];
        cdf.iter_mut().for_each(|c| *c /= total);
        Self {
            xs: gs.iter().map(|g| lower + g.exp()).collect(),
            cdf,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[self.xs.len() - 1] {
            return 1.0;
        }
        let k = self.xs.partition_point(|&v| v < x);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let t = (x - x0) / (x1 - x0);
        self.cdf[k - 1] + t * (self.cdf[k] - self.cdf[k - 1])
    }

    /// Probability of `(a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.eval(b) - self.eval(a)
    }
}

/// Kolmogorov–Smirnov distance between a sample and a distribution function.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// A fixed, well-conditioned but non-diagonal covariance of dimension `p`.
pub fn test_covariance(p: usize) -> SpdMatrix {
    let mut rows = vec![vec![0.0; p]; p];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = 0.4f64.powi((i as i32 - j as i32).abs()) * (1.0 + 0.25 * (i + j) as f64);
        }
    }
    SpdMatrix::new(Matrix::from_rows(&rows).unwrap().symmetrized()).unwrap()
}

/// Entrywise mean and standard error of the mean over matrices.
pub fn mean_and_se<'a, I: IntoIterator<Item = &'a Matrix>>(draws: I) -> (Matrix, Matrix) {
    let mut sum: Vec<f64> = Vec::new();
    let mut sq: Vec<f64> = Vec::new();
    let mut p = 0;
    let mut n = 0.0;
    for d in draws {
        if sum.is_empty() {
            p = d.rows();
            sum = vec![0.0; p * p];
            sq = vec![0.0; p * p];
        }
        for (k, v) in d.as_slice().iter().enumerate() {
            sum[k] += v;
            sq[k] += v * v;
        }
        n += 1.0;
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let se: Vec<f64> = mean
        .iter()
        .zip(&sq)
        .map(|(m, q)| ((q / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt())
        .collect();
    (Matrix::from_vec(p, p, mean).unwrap(), Matrix::from_vec(p, p, se).unwrap())
}

/// `E[β | β ≤ t]` under the isotropic marginal, by trapezoidal quadrature in
/// `log(β - lower)`.
pub fn truncated_mean(spec: &ModelSpec, p: usize, n: usize, t: f64) -> f64 {
    let lower = spec.beta_lower(p);
    let (lo, hi) = (-25.0, (t - lower).ln());
    let m = 200_000;
    let h = (hi - lo) / m as f64;
    let (mut mass, mut first) = (0.0, 0.0);
    for i in 0..=m {
        let g = lo + h * i as f64;
        let beta = lower + g.exp();
        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
        let f = w * (isotropic_beta_marginal_log_density(spec, p, n, beta) + g).exp();
        mass += f;
        first += f * beta;
    }
    first / mass
}

pub fn normalized_tail_slope(spec: &ModelSpec, p: usize, n: usize, (lo, hi): (f64, f64)) -> f64 {
    let f = |b: f64| isotropic_beta_marginal_log_density(spec, p, n, b);
    (f(hi) - f(lo)) / (hi.ln() - lo.ln())
}
