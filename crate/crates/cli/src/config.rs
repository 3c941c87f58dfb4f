//! Configuration file handling and flag merging.
//!
//! The file is TOML with the keys `iterations`, `burn_in`, `seed`,
//! `replications`, `delta`, `dk_bound`, `matrices`, `n_values`, `model`,
//! `loss` and `output`. A run-metadata file written by a previous run is also
//! accepted; its `[config]` table is used.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use covshrink::{BayesLoss, ModelSpec, ModelVariant, SamplerConfig, StudyConfig, TrueMatrixId, DEFAULT_DK_BOUND};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Values from a file or from flags; unset fields fall through to the next
/// layer.
#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub delta: Option<u32>,
    pub dk_bound: Option<f64>,
    pub matrices: Option<Vec<String>>,
    pub n_values: Option<Vec<usize>>,
    pub model: Option<String>,
    pub loss: Option<String>,
    pub output: Option<PathBuf>,
}

impl PartialConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|msg| CliError::config(format!("{}: {msg}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        let table = match table.get("config") {
            Some(toml::Value::Table(inner)) => inner.clone(),
            _ => table,
        };
        table.try_into().map_err(|e: toml::de::Error| e.to_string())
    }

    /// `self` overridden by every field set in `over`.
    pub fn overridden_by(self, over: PartialConfig) -> Self {
        Self {
            iterations: over.iterations.or(self.iterations),
            burn_in: over.burn_in.or(self.burn_in),
            seed: over.seed.or(self.seed),
            replications: over.replications.or(self.replications),
            delta: over.delta.or(self.delta),
            dk_bound: over.dk_bound.or(self.dk_bound),
            matrices: over.matrices.or(self.matrices),
            n_values: over.n_values.or(self.n_values),
            model: over.model.or(self.model),
            loss: over.loss.or(self.loss),
            output: over.output.or(self.output),
        }
    }
}

/// Fully resolved configuration, echoed into the run-metadata file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EffectiveConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub replications: usize,
    pub delta: u32,
    pub dk_bound: f64,
    pub matrices: Vec<String>,
    pub n_values: Vec<usize>,
    pub model: String,
    pub loss: String,
    pub output: PathBuf,
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::config(format!("{field}: {msg}"))
}

impl EffectiveConfig {
    pub fn resolve(partial: PartialConfig, default_output: &str) -> Result<Self, CliError> {
        let sampler = SamplerConfig::default();
        let study = StudyConfig::default();
        let cfg = Self {
            iterations: partial.iterations.unwrap_or(sampler.iterations),
            burn_in: partial.burn_in.unwrap_or(sampler.burn_in),
            seed: partial.seed.unwrap_or(0),
            replications: partial.replications.unwrap_or(study.replications),
            delta: partial.delta.unwrap_or(study.delta),
            dk_bound: partial.dk_bound.unwrap_or(DEFAULT_DK_BOUND),
            matrices: partial
                .matrices
                .unwrap_or_else(|| TrueMatrixId::ALL.iter().map(|m| m.to_string()).collect()),
            n_values: partial.n_values.unwrap_or(study.n_values),
            model: partial.model.unwrap_or_else(|| ModelVariant::Model1.to_string()),
            loss: partial.loss.unwrap_or_else(|| "l2".into()),
            output: partial.output.unwrap_or_else(|| default_output.into()),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.iterations == 0 {
            return Err(field_error("iterations", "must be positive"));
        }
        if self.burn_in >= self.iterations {
            return Err(field_error(
                "burn_in",
                format!("must be smaller than iterations ({} >= {})", self.burn_in, self.iterations),
            ));
        }
        if self.seed > i64::MAX as u64 {
            return Err(field_error("seed", format!("must be at most {}", i64::MAX)));
        }
        if self.replications < 2 {
            return Err(field_error("replications", "must be at least 2"));
        }
        if self.delta < 2 {
            return Err(field_error("delta", "must be at least 2"));
        }
        if !(self.dk_bound.is_finite() && self.dk_bound > 0.0) {
            return Err(field_error("dk_bound", "must be a positive finite number"));
        }
        if self.matrices.is_empty() {
            return Err(field_error("matrices", "must not be empty"));
        }
        self.true_matrices()?;
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(field_error("n_values", "must be a non-empty list of positive sample sizes"));
        }
        self.variant()?;
        self.bayes_loss()?;
        Ok(())
    }

    pub fn variant(&self) -> Result<ModelVariant, CliError> {
        ModelVariant::from_str(&self.model).map_err(|_| {
            field_error("model", format!("unknown model '{}' (expected model1, model2 or dk)", self.model))
        })
    }

    pub fn bayes_loss(&self) -> Result<BayesLoss, CliError> {
        BayesLoss::from_str(&self.loss)
            .map_err(|_| field_error("loss", format!("unknown loss '{}' (expected l1 or l2)", self.loss)))
    }

    pub fn true_matrices(&self) -> Result<Vec<TrueMatrixId>, CliError> {
        self.matrices
            .iter()
            .map(|m| TrueMatrixId::from_str(m).map_err(|_| field_error("matrices", format!("unknown matrix '{m}'"))))
            .collect()
    }

    /// Spec of the selected model; `dim` is checked against its support.
    pub fn model_spec(&self, dim: usize) -> Result<ModelSpec, CliError> {
        let variant = self.variant()?;
        let spec = ModelSpec::new(variant, self.delta, self.dk_bound).map_err(|e| field_error("delta", e))?;
        spec.validate(dim).map_err(|e| field_error("dk_bound", e))?;
        Ok(spec)
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            seed: self.seed,
            ..Default::default()
        }
    }

    pub fn study(&self) -> Result<StudyConfig, CliError> {
        let study = StudyConfig {
            matrices: self.true_matrices()?,
            n_values: self.n_values.clone(),
            replications: self.replications,
            sampler: self.sampler(),
            delta: self.delta,
            dk_bound: self.dk_bound,
            master_seed: self.seed,
        };
        study.validate().map_err(|e| field_error("dk_bound", e))?;
        Ok(study)
    }
}
