//! Frequentist risk simulation over the seven canonical true matrices.
//!
//! Each replication draws one dataset, runs the three chains on it and scores
//! all seven estimators under all four losses. Replications are seeded from
//! `(master_seed, matrix, n, replication)` alone, so any subset of the study
//! can be re-run and will match the full run bit for bit.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    bayes_estimate, loss_eigen_rel, loss_frobenius, loss_stein_or_infinite, mle_estimate, BayesLoss,
    EstimatorKind, LossKind,
};
use crate::gibbs::{run_chain, SamplerConfig};
use crate::matrix::{givens_angle_count, givens_rotation_product, symmetric_eigen, Matrix, SpdMatrix};
use crate::models::{ModelSpec, ModelVariant, DEFAULT_DK_BOUND};
use crate::random::{sample_mvn_zero, scatter_matrix, splitmix64, RngStream};

/// Dimension of the canonical study.
pub const STUDY_DIM: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrueMatrixId {
    A,
    B,
    C,
    B1,
    B2,
    C1,
    C2,
}

impl TrueMatrixId {
    pub const ALL: [TrueMatrixId; 7] = [
        TrueMatrixId::A,
        TrueMatrixId::B,
        TrueMatrixId::B1,
        TrueMatrixId::B2,
        TrueMatrixId::C,
        TrueMatrixId::C1,
        TrueMatrixId::C2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrueMatrixId::A => "A",
            TrueMatrixId::B => "B",
            TrueMatrixId::C => "C",
            TrueMatrixId::B1 => "B1",
            TrueMatrixId::B2 => "B2",
            TrueMatrixId::C1 => "C1",
            TrueMatrixId::C2 => "C2",
        }
    }

    /// Eigenvalues of the matrix, descending. Rotated variants share the
    /// spectrum of their diagonal parent.
    pub fn spectrum(self) -> [f64; STUDY_DIM] {
        let q = 0.75f64;
        match self {
            TrueMatrixId::A => [1.0; STUDY_DIM],
            TrueMatrixId::B | TrueMatrixId::B1 | TrueMatrixId::B2 => [1.0, q, q.powi(2), q.powi(3), q.powi(4)],
            TrueMatrixId::C | TrueMatrixId::C1 | TrueMatrixId::C2 => {
                [1.0, q, q.powi(2), q.powi(10), q.powi(20)]
            }
        }
    }

    /// Givens angles of the rotation applied to the diagonal parent, if any.
    pub fn givens_angles(self) -> Option<Vec<f64>> {
        let m = givens_angle_count(STUDY_DIM);
        match self {
            TrueMatrixId::B1 | TrueMatrixId::C1 => Some(vec![FRAC_PI_4; m]),
            TrueMatrixId::B2 | TrueMatrixId::C2 => Some(
                (0..m)
                    .map(|k| -FRAC_PI_4 + 2.0 * FRAC_PI_4 * k as f64 / (m - 1) as f64)
                    .collect(),
            ),
            _ => None,
        }
    }

    fn seed_tag(self) -> u64 {
        match self {
            TrueMatrixId::A => 0,
            TrueMatrixId::B => 1,
            TrueMatrixId::C => 2,
            TrueMatrixId::B1 => 3,
            TrueMatrixId::B2 => 4,
            TrueMatrixId::C1 => 5,
            TrueMatrixId::C2 => 6,
        }
    }
}

impl fmt::Display for TrueMatrixId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrueMatrixId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TrueMatrixId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown true matrix '{s}'")))
    }
}

/// `diag(spectrum)`, conjugated as `QᵀDQ` for the rotated variants.
pub fn build_true_matrix(id: TrueMatrixId) -> SpdMatrix {
    let d = Matrix::from_diag(&id.spectrum());
    let m = match id.givens_angles() {
        None => d,
        Some(angles) => {
            let q = givens_rotation_product(STUDY_DIM, &angles).expect("angle count matches");
            q.transpose().matmul(&d).and_then(|qd| qd.matmul(&q)).expect("square")
        }
    };
    SpdMatrix::new(m.symmetrized()).expect("canonical matrices are SPD")
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub matrices: Vec<TrueMatrixId>,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub sampler: SamplerConfig,
    pub delta: u32,
    pub dk_bound: f64,
    pub master_seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            matrices: TrueMatrixId::ALL.to_vec(),
            n_values: vec![5, 100],
            replications: 100,
            sampler: SamplerConfig::default(),
            delta: 2,
            dk_bound: DEFAULT_DK_BOUND,
            master_seed: 0,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::InvalidParameter(format!(
                "replications must be at least 2, got {}",
                self.replications
            )));
        }
        if self.matrices.is_empty() || self.n_values.is_empty() {
            return Err(Error::InvalidParameter("matrices and n_values must be non-empty".into()));
        }
        if self.n_values.contains(&0) {
            return Err(Error::InvalidParameter("n_values must be positive".into()));
        }
        self.sampler.validate()?;
        for spec in self.model_specs()? {
            spec.validate(STUDY_DIM)?;
        }
        Ok(())
    }

    pub fn model_specs(&self) -> Result<[ModelSpec; 3]> {
        Ok([
            ModelSpec::model1(self.delta)?,
            ModelSpec::model2(self.delta)?,
            ModelSpec::dk(self.dk_bound)?,
        ])
    }
}

/// `master_seed ^ splitmix64(splitmix64(splitmix64(tag) ^ n) ^ replication)`,
/// where `tag` numbers the matrices A, B, C, B1, B2, C1, C2 from 0.
pub fn replication_seed(master_seed: u64, id: TrueMatrixId, n: usize, replication: usize) -> u64 {
    let h = splitmix64(id.seed_tag());
    let h = splitmix64(h ^ n as u64);
    master_seed ^ splitmix64(h ^ replication as u64)
}

/// Losses of every estimator in one replication, indexed
/// `[EstimatorKind::index()][LossKind::index()]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationLosses {
    pub values: [[f64; 4]; 7],
}

impl ReplicationLosses {
    pub fn get(&self, estimator: EstimatorKind, loss: LossKind) -> f64 {
        self.values[estimator.index()][loss.index()]
    }
}

fn score(estimate: &Matrix, truth: &SpdMatrix, spectrum: &[f64]) -> Result<[f64; 4]> {
    let eig = symmetric_eigen(estimate)?;
    let stein = loss_stein_or_infinite(estimate, truth)?;
    let mut out = [0.0; 4];
    out[LossKind::Stein.index()] = stein;
    out[LossKind::Frobenius.index()] = loss_frobenius(estimate, truth.matrix())?;
    out[LossKind::EigenMinRel.index()] = loss_eigen_rel(spectrum[spectrum.len() - 1], eig.values[eig.values.len() - 1])?;
    out[LossKind::EigenMaxRel.index()] = loss_eigen_rel(spectrum[0], eig.values[0])?;
    Ok(out)
}

/// One dataset, three chains, seven estimators, four losses.
pub fn run_replication(
    id: TrueMatrixId,
    n: usize,
    config: &StudyConfig,
    rng: &mut RngStream,
) -> Result<ReplicationLosses> {
    let truth = build_true_matrix(id);
    let spectrum = id.spectrum();
    let data = sample_mvn_zero(rng, &truth, n);
    let s = scatter_matrix(&data);

    let mut values = [[0.0; 4]; 7];
    for spec in config.model_specs()? {
        let trace = run_chain(&spec, &s, n, &config.sampler, rng)?;
        for loss in [BayesLoss::L1, BayesLoss::L2] {
            let est = bayes_estimate(&trace, loss)?;
            let kind = EstimatorKind::bayes(spec.variant, loss);
            values[kind.index()] = score(est.matrix(), &truth, &spectrum)?;
        }
    }
    let mle = mle_estimate(&s, n)?;
    let mut mle_losses = score(&mle, &truth, &spectrum)?;
    if n < truth.dim() {
        // rank(S) <= n, so rounding is the only reason a finite value can appear
        mle_losses[LossKind::Stein.index()] = f64::INFINITY;
    }
    values[EstimatorKind::Mle.index()] = mle_losses;
    Ok(ReplicationLosses { values })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiskRow {
    pub matrix: TrueMatrixId,
    pub n: usize,
    pub estimator: EstimatorKind,
    pub loss: LossKind,
    pub mean_risk: f64,
    pub std_error: f64,
    /// Replications dropped because the loss was infinite.
    pub excluded_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationRecord {
    pub matrix: TrueMatrixId,
    pub n: usize,
    pub replication: usize,
    pub losses: ReplicationLosses,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RiskReport {
    pub rows: Vec<RiskRow>,
    pub replications: Vec<ReplicationRecord>,
}

pub const RISK_CSV_HEADER: &str = "matrix,n,estimator,loss,mean,stderr,excluded";
pub const RAW_CSV_HEADER: &str = "matrix,n,replication,estimator,loss,value";

impl RiskReport {
    /// Aggregates per-replication losses. Rows follow the first-appearance
    /// order of `(matrix, n)` in `records`, then estimator, then loss.
    pub fn from_replications(records: Vec<ReplicationRecord>) -> Self {
        let mut groups: Vec<(TrueMatrixId, usize)> = Vec::new();
        for r in &records {
            if !groups.contains(&(r.matrix, r.n)) {
                groups.push((r.matrix, r.n));
            }
        }
        let mut rows = Vec::with_capacity(groups.len() * 28);
        for &(matrix, n) in &groups {
            let group: Vec<&ReplicationRecord> = records.iter().filter(|r| r.matrix == matrix && r.n == n).collect();
            for estimator in EstimatorKind::ALL {
                for loss in LossKind::ALL {
                    let all: Vec<f64> = group.iter().map(|r| r.losses.get(estimator, loss)).collect();
                    let finite: Vec<f64> = all.iter().copied().filter(|v| v.is_finite()).collect();
                    let (mean_risk, std_error) = mean_and_stderr(&finite);
                    rows.push(RiskRow {
                        matrix,
                        n,
                        estimator,
                        loss,
                        mean_risk,
                        std_error,
                        excluded_count: all.len() - finite.len(),
                    });
                }
            }
        }
        Self {
            rows,
            replications: records,
        }
    }

    pub fn get(&self, matrix: TrueMatrixId, n: usize, estimator: EstimatorKind, loss: LossKind) -> Option<&RiskRow> {
        self.rows
            .iter()
            .find(|r| r.matrix == matrix && r.n == n && r.estimator == estimator && r.loss == loss)
    }

    /// Mean risk, panicking when the row is absent.
    pub fn risk(&self, matrix: TrueMatrixId, n: usize, estimator: EstimatorKind, loss: LossKind) -> f64 {
        self.get(matrix, n, estimator, loss)
            .unwrap_or_else(|| panic!("no row for {matrix} n={n} {estimator} {loss}"))
            .mean_risk
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{RISK_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.matrix, r.n, r.estimator, r.loss, r.mean_risk, r.std_error, r.excluded_count
            )?;
        }
        Ok(())
    }

    /// Per-replication losses, one line per (replication, estimator, loss).
    pub fn write_raw_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{RAW_CSV_HEADER}")?;
        for r in &self.replications {
            for estimator in EstimatorKind::ALL {
                for loss in LossKind::ALL {
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        r.matrix,
                        r.n,
                        r.replication,
                        estimator,
                        loss,
                        r.losses.get(estimator, loss)
                    )?;
                }
            }
        }
        Ok(())
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Runs every `(matrix, n, replication)` task on the current rayon pool and
/// folds the results in task order, so the report does not depend on the
/// number of threads.
pub fn run_study(config: &StudyConfig) -> Result<RiskReport> {
    config.validate()?;
    let tasks: Vec<(TrueMatrixId, usize, usize)> = config
        .matrices
        .iter()
        .flat_map(|&m| {
            config
                .n_values
                .iter()
                .flat_map(move |&n| (0..config.replications).map(move |r| (m, n, r)))
        })
        .collect();

    let records = tasks
        .into_par_iter()
        .map(|(matrix, n, replication)| {
            let mut rng = RngStream::new(replication_seed(config.master_seed, matrix, n, replication));
            run_replication(matrix, n, config, &mut rng)
                .map(|losses| ReplicationRecord {
                    matrix,
                    n,
                    replication,
                    losses,
                })
                .map_err(|e| Error::Replication {
                    matrix: matrix.to_string(),
                    n,
                    replication,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RiskReport::from_replications(records))
}

/// Convenience for callers that only need one model's spec from a study
/// configuration.
pub fn study_spec(config: &StudyConfig, variant: ModelVariant) -> Result<ModelSpec> {
    ModelSpec::new(variant, config.delta, config.dk_bound)
}
