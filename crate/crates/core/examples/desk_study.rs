//! Runs the reduced study (20 replications, n = 5) and prints the risk table.

use std::time::Instant;

use covshrink::{gibbs::SamplerConfig, run_study, StudyConfig};

fn main() -> covshrink::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2024);
    let config = StudyConfig {
        n_values: vec![5],
        replications: 20,
        sampler: SamplerConfig {
            iterations: 4000,
            burn_in: 1000,
            ..Default::default()
        },
        master_seed: seed,
        ..Default::default()
    };
    let start = Instant::now();
    let report = run_study(&config)?;
    report.write_csv(std::io::stdout().lock())?;
    eprintln!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
