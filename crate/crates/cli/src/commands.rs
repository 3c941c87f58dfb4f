use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use covshrink::io::{read_data_csv, write_matrix_csv, write_trace_csv};
use covshrink::{
    bayes_estimate, run_chain, run_study, scatter_matrix, ChainTrace, Matrix, ModelSpec, ModelVariant, RngStream,
};
use serde::Serialize;

use crate::config::EffectiveConfig;
use crate::error::CliError;

const HISTOGRAM_BINS: usize = 20;

/// `<path><suffix>`, e.g. `risks.csv` → `risks.csv.meta.toml`.
pub fn sidecar_path(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    w.flush()
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::io(format!("cannot write {}: {e}", path.display()))
}

#[derive(Serialize)]
struct RunInfo {
    command: String,
    seed: u64,
    wall_time_seconds: f64,
    threads: usize,
    version: &'static str,
}

#[derive(Serialize)]
struct Metadata<'a> {
    config: &'a EffectiveConfig,
    run: RunInfo,
}

fn write_metadata(cfg: &EffectiveConfig, command: &str, started: Instant) -> Result<(), CliError> {
    let path = sidecar_path(&cfg.output, ".meta.toml");
    let meta = Metadata {
        config: cfg,
        run: RunInfo {
            command: command.into(),
            seed: cfg.seed,
            wall_time_seconds: started.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION"),
        },
    };
    let text = toml::to_string(&meta).map_err(|e| CliError::config(format!("cannot serialize metadata: {e}")))?;
    std::fs::write(&path, text).map_err(write_err(&path))
}

pub fn cmd_study(cfg: &EffectiveConfig, raw: Option<&Path>) -> Result<(), CliError> {
    let started = Instant::now();
    let study = cfg.study()?;
    let mut out = create(&cfg.output)?;
    let raw_out = raw.map(|p| create(p).map(|w| (w, p))).transpose()?;

    let report = run_study(&study).map_err(CliError::from_run)?;
    report.write_csv(&mut out).map_err(write_err(&cfg.output))?;
    finish(out, &cfg.output)?;
    if let Some((mut w, path)) = raw_out {
        report.write_raw_csv(&mut w).map_err(write_err(path))?;
        finish(w, path)?;
    }
    write_metadata(cfg, "study", started)
}

fn load_scatter(data: &Path) -> Result<(Matrix, usize), CliError> {
    let file = File::open(data).map_err(|e| CliError::io(format!("cannot open {}: {e}", data.display())))?;
    let x = read_data_csv(file).map_err(|e| CliError::from_data(&data.display().to_string(), e))?;
    Ok((scatter_matrix(&x), x.rows()))
}

fn sample_chain(cfg: &EffectiveConfig, data: &Path) -> Result<(ModelSpec, ChainTrace, usize, usize), CliError> {
    let (s, n) = load_scatter(data)?;
    let spec = cfg.model_spec(s.rows())?;
    let mut rng = RngStream::new(cfg.seed);
    let trace = run_chain(&spec, &s, n, &cfg.sampler(), &mut rng).map_err(CliError::from_run)?;
    Ok((spec, trace, n, s.rows()))
}

pub fn cmd_estimate(cfg: &EffectiveConfig, data: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let loss = cfg.bayes_loss()?;
    let mut out = create(&cfg.output)?;
    let diag_path = sidecar_path(&cfg.output, ".diagnostics.toml");
    let (spec, trace, n, p) = sample_chain(cfg, data)?;

    let estimate = bayes_estimate(&trace, loss).map_err(CliError::from_run)?;
    write_matrix_csv(estimate.matrix(), &mut out).map_err(|e| CliError::from_data("estimate", e))?;
    finish(out, &cfg.output)?;

    let diagnostics = Diagnostics::new(&spec, cfg, &trace, n, p);
    let text = toml::to_string(&diagnostics)
        .map_err(|e| CliError::config(format!("cannot serialize diagnostics: {e}")))?;
    std::fs::write(&diag_path, text).map_err(write_err(&diag_path))?;
    write_metadata(cfg, "estimate", started)
}

pub fn cmd_chain(cfg: &EffectiveConfig, data: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let mut out = create(&cfg.output)?;
    let (_, trace, _, _) = sample_chain(cfg, data)?;
    write_trace_csv(&trace, &mut out).map_err(|e| CliError::from_data("trace", e))?;
    finish(out, &cfg.output)?;
    write_metadata(cfg, "chain", started)
}

#[derive(Serialize)]
struct Diagnostics {
    model: String,
    delta: u32,
    loss: String,
    n: usize,
    p: usize,
    retained_draws: usize,
    acceptance_rate: f64,
    quadrature_fallbacks: usize,
    beta: BetaSummary,
}

#[derive(Serialize)]
struct BetaSummary {
    lower_bound: f64,
    median: f64,
    lower_quartile: f64,
    upper_quartile: f64,
    /// Only reported when the posterior mean exists, i.e. `delta >= 3`.
    #[serde(skip_serializing_if = "Option::is_none")]
    mean: Option<f64>,
    histogram: Histogram,
}

#[derive(Serialize)]
struct Histogram {
    edges: Vec<f64>,
    counts: Vec<usize>,
}

impl Diagnostics {
    fn new(spec: &ModelSpec, cfg: &EffectiveConfig, trace: &ChainTrace, n: usize, p: usize) -> Self {
        let mut sorted = trace.beta_draws.clone();
        sorted.sort_by(f64::total_cmp);
        let mean_exists = spec.variant != ModelVariant::ModelDK && spec.delta >= 3;
        Self {
            model: spec.variant.to_string(),
            delta: spec.delta,
            loss: cfg.loss.clone(),
            n,
            p,
            retained_draws: trace.retained(),
            acceptance_rate: trace.acceptance_rate(),
            quadrature_fallbacks: trace.quadrature_fallbacks,
            beta: BetaSummary {
                lower_bound: spec.beta_lower(p),
                median: quantile(&sorted, 0.5),
                lower_quartile: quantile(&sorted, 0.25),
                upper_quartile: quantile(&sorted, 0.75),
                mean: mean_exists.then(|| sorted.iter().sum::<f64>() / sorted.len() as f64),
                histogram: histogram(&sorted, HISTOGRAM_BINS),
            },
        }
    }
}

/// Linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let (i, frac) = (h.floor() as usize, h - h.floor());
    match sorted.get(i + 1) {
        Some(next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

fn histogram(sorted: &[f64], bins: usize) -> Histogram {
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if hi <= lo {
        return Histogram {
            edges: vec![lo, hi],
            counts: vec![sorted.len()],
        };
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0; bins];
    for &x in sorted {
        counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
    }
    Histogram {
        edges: (0..=bins).map(|k| lo + width * k as f64).collect(),
        counts,
    }
}
