//! Acceptance checks. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Runs without the libtest harness: `cargo test --test acceptance`.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use common::{ks_distance, mean_and_se, normalized_tail_slope, test_covariance, truncated_mean, TabulatedCdf};
use covshrink::gibbs::{conditional_gamma_variance, random_walk_beta_step};
use covshrink::models::BetaConditional;
use covshrink::random::sample_inverse_wishart;
use covshrink::{
    build_true_matrix, run_chain, run_study, sample_mvn_zero, scatter_matrix, DiagMatrix, EstimatorKind,
    GibbsSampler, HyperState, LossKind, ModelSpec, RiskReport, RngStream, SamplerConfig, StudyConfig, TrueMatrixId,
};

/// A-row Frobenius risks reported for the full-scale study, in the order
/// Model 1, Model 2, D&K, MLE.
const REFERENCE_A_ROW: [(EstimatorKind, f64); 4] = [
    (EstimatorKind::Model1L2, 0.88),
    (EstimatorKind::Model2L2, 8.29),
    (EstimatorKind::DkL2, 7.09),
    (EstimatorKind::Mle, 1.72),
];

const DESK_N: usize = 5;

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn within(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("{s:.1} s (limit {limit_s:.0} s)"))
}

fn conjugate_oracle() -> Outcome {
    let started = Instant::now();
    let (p, n, beta, phi) = (5usize, 20usize, 12.0, 1.0);
    let s = scatter_matrix(&sample_mvn_zero(&mut RngStream::new(101), &test_covariance(p), n));
    let config = SamplerConfig {
        iterations: 50_000,
        burn_in: 1,
        retain_sigma: true,
        update_scale: false,
        update_beta: false,
        ..Default::default()
    };
    let trace = GibbsSampler::new(ModelSpec::model1(2).unwrap(), &s, n, &config)
        .and_then(|g| g.with_hyper(HyperState::isotropic(beta, phi, p)?))
        .and_then(|g| g.run(&mut RngStream::new(102)))
        .expect("frozen chain runs");
    let estimate = covshrink::bayes_estimate_l2(&trace).expect("posterior mean is SPD");
    let (_, se) = mean_and_se(trace.sigma_draws.as_ref().unwrap().iter().map(|d| d.matrix()));
    let expected = s.add_diag(&vec![phi; p]).unwrap().scale(1.0 / (beta + n as f64 - p as f64 - 1.0));

    let worst_z = (0..p * p)
        .map(|k| (estimate.matrix().as_slice()[k] - expected.as_slice()[k]).abs() / se.as_slice()[k])
        .fold(0.0, f64::max);
    let (fast, time) = within(started.elapsed(), 30.0);
    Outcome {
        id: "C1",
        title: "conjugate oracle with frozen hyperparameters",
        pass: worst_z <= 3.0 && fast,
        detail: format!("max entrywise |error|/SE = {worst_z:.2} (limit 3), {time}"),
    }
}

fn beta_step_stationarity() -> Outcome {
    let started = Instant::now();
    let p = 5;
    let spec = ModelSpec::model2(2).unwrap();
    let sigma = sample_inverse_wishart(&mut RngStream::new(201), p as f64 + 6.0, &test_covariance(p)).unwrap();
    let scale = DiagMatrix::new((0..p).map(|j| 1.0 + 0.5 * j as f64).collect()).unwrap();
    let target = BetaConditional::new(&spec, &sigma, &scale);
    let variance = conditional_gamma_variance(&target, &SamplerConfig::default()).unwrap();

    let mut rng = RngStream::new(202);
    let mut beta = target.lower() + 2.0;
    for _ in 0..2000 {
        beta = random_walk_beta_step(&target, beta, variance, &mut rng).0;
    }
    let steps = 200_000;
    let mut draws = Vec::with_capacity(steps);
    for _ in 0..steps {
        beta = random_walk_beta_step(&target, beta, variance, &mut rng).0;
        draws.push(beta);
    }
    let cdf = TabulatedCdf::new(|b| target.log_density(b), target.lower(), 40_001);
    let ks = ks_distance(&draws, |x| cdf.eval(x));
    let (fast, time) = within(started.elapsed(), 60.0);
    Outcome {
        id: "C2",
        title: "beta step reproduces its full conditional",
        pass: ks < 0.02 && fast,
        detail: format!("KS = {ks:.4} over {steps} steps (limit 0.02), {time}"),
    }
}

fn desk_study() -> (RiskReport, Duration) {
    let config = StudyConfig {
        n_values: vec![DESK_N],
        replications: 20,
        sampler: SamplerConfig {
            iterations: 4000,
            burn_in: 1000,
            ..Default::default()
        },
        master_seed: 2024,
        ..Default::default()
    };
    let started = Instant::now();
    let report = run_study(&config).expect("desk study runs");
    (report, started.elapsed())
}

fn frobenius_ordering(report: &RiskReport, elapsed: Duration) -> Outcome {
    let risk = |m, e| report.risk(m, DESK_N, e, LossKind::Frobenius);
    let mut notes = Vec::new();

    let beats_mle = TrueMatrixId::ALL
        .iter()
        .filter(|&&m| risk(m, EstimatorKind::Model1L2) >= risk(m, EstimatorKind::Mle))
        .map(|m| m.to_string())
        .collect::<Vec<_>>();
    let a_ok = beats_mle.is_empty();
    notes.push(format!("(a) {} Model1 < MLE on 7/7", verdict(a_ok)));
    if !a_ok {
        notes.push(format!("fails on {}", beats_mle.join(",")));
    }

    let mut b_fail = Vec::new();
    for m in TrueMatrixId::ALL {
        for e in [EstimatorKind::Model2L2, EstimatorKind::DkL2] {
            if risk(m, e) <= risk(m, EstimatorKind::Mle) {
                b_fail.push(format!("{m}/{e}"));
            }
        }
    }
    let b_ok = b_fail.is_empty();
    notes.push(format!("(b) {} Model2, D&K > MLE on 7/7", verdict(b_ok)));
    if !b_ok {
        notes.push(format!("fails on {}", b_fail.join(",")));
    }

    let mut c_ok = true;
    let mut row = Vec::new();
    for (e, reference) in REFERENCE_A_ROW {
        let r = risk(TrueMatrixId::A, e);
        let ok = (r - reference).abs() <= 0.5 * reference;
        c_ok &= ok;
        row.push(format!("{e} {r:.2} vs {reference}{}", if ok { "" } else { "*" }));
    }
    notes.push(format!("(c) {} A row within 50%: {}", verdict(c_ok), row.join(", ")));
    if !c_ok {
        // Under the entrywise loss E||S/n - I||² = p(p+1)/n at A exactly.
        let p = covshrink::study::STUDY_DIM as f64;
        let n = DESK_N as f64;
        notes.push(format!(
            "note: exact MLE risk at A is {:.2} for sum of squared entries, {:.2} for (tr)^2",
            p * (p + 1.0) / n,
            2.0 * p / n
        ));
    }

    let (fast, time) = within(elapsed, 1800.0);
    notes.push(format!("study {time}"));
    Outcome {
        id: "C3",
        title: "Frobenius risk ordering at desk scale",
        pass: a_ok && b_ok && c_ok && fast,
        detail: notes.join("; "),
    }
}

fn stein_ordering(report: &RiskReport) -> Outcome {
    let risk = |m, e| report.risk(m, DESK_N, e, LossKind::Stein);
    use TrueMatrixId::*;

    let mut min_ratio = f64::INFINITY;
    for m in [A, B, B1, B2] {
        for e in [EstimatorKind::Model1L1, EstimatorKind::Model2L1, EstimatorKind::DkL1] {
            min_ratio = min_ratio.min(risk(m, EstimatorKind::Mle) / risk(m, e));
        }
    }
    let a_ok = min_ratio >= 3.0;

    let worse = [C, C1, C2]
        .map(|m| risk(m, EstimatorKind::Model1L1) / risk(m, EstimatorKind::Mle))
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let b_ok = worse >= 4.0;

    let dk = risk(C2, EstimatorKind::DkL1) / risk(C, EstimatorKind::DkL1);
    let c_ok = dk >= 10.0;
    Outcome {
        id: "C4",
        title: "Stein risk ordering at desk scale",
        pass: a_ok && b_ok && c_ok,
        detail: format!(
            "(a) {} min MLE/Bayes ratio on A,B,B1,B2 = {min_ratio:.2} (>= 3); \
             (b) {} min Model1/MLE ratio on C,C1,C2 = {worse:.2} (>= 4); \
             (c) {} D&K C2/C ratio = {dk:.1} (>= 10)",
            verdict(a_ok),
            verdict(b_ok),
            verdict(c_ok)
        ),
    }
}

fn eigen_directionality(report: &RiskReport) -> Outcome {
    let risk = |m, e, l| report.risk(m, DESK_N, e, l);
    let model1_min = risk(TrueMatrixId::C, EstimatorKind::Model1L2, LossKind::EigenMinRel);
    let mle_min = risk(TrueMatrixId::C, EstimatorKind::Mle, LossKind::EigenMinRel);
    let model2_max = risk(TrueMatrixId::A, EstimatorKind::Model2L2, LossKind::EigenMaxRel);
    let model1_max = risk(TrueMatrixId::A, EstimatorKind::Model1L1, LossKind::EigenMaxRel);
    let ok = model1_min > 20.0 && mle_min < 1.0 && model2_max >= 3.0 * model1_max;
    Outcome {
        id: "C5",
        title: "eigenvalue-loss directionality",
        pass: ok,
        detail: format!(
            "C min-eig: Model1_L2 {model1_min:.2} (> 20), MLE {mle_min:.3} (< 1); \
             A max-eig: Model2_L2 {model2_max:.3} vs Model1_L1 {model1_max:.3} (ratio {:.2}, >= 3)",
            model2_max / model1_max
        ),
    }
}

fn lower_bound_concentration() -> Outcome {
    let (p, n) = (5usize, 100usize);
    let truth = build_true_matrix(TrueMatrixId::C2);
    let s = scatter_matrix(&sample_mvn_zero(&mut RngStream::new(601), &truth, n));
    let trace = run_chain(
        &ModelSpec::model2(2).unwrap(),
        &s,
        n,
        &SamplerConfig::default(),
        &mut RngStream::new(602),
    )
    .expect("chain runs");
    let lo = p as f64 + 1.0;
    let share = trace.beta_draws.iter().filter(|&&b| b >= lo && b <= lo + 3.0).count() as f64
        / trace.beta_draws.len() as f64;
    Outcome {
        id: "C6",
        title: "Model 2 beta concentrates at its lower bound on C2, n = 100",
        pass: share >= 0.9,
        detail: format!("{:.1}% of {} draws in [p+1, p+4] (>= 90%)", 100.0 * share, trace.beta_draws.len()),
    }
}

fn tail_properties() -> Outcome {
    let mut ok = true;
    let mut slopes = Vec::new();
    for spec in [
        ModelSpec::model1(2).unwrap(),
        ModelSpec::model1(3).unwrap(),
        ModelSpec::model2(2).unwrap(),
        ModelSpec::model2(3).unwrap(),
    ] {
        let slope = normalized_tail_slope(&spec, 5, 5, (1e3, 1e5));
        ok &= (slope + spec.delta as f64).abs() < 0.1;
        slopes.push(format!("{} d={}: {slope:.3}", spec.variant, spec.delta));
    }
    let spec = ModelSpec::model1(2).unwrap();
    let means = [1e2, 1e3, 1e4].map(|t| truncated_mean(&spec, 5, 5, t));
    let grows = means[0] < means[1] && means[1] < means[2];
    Outcome {
        id: "C7",
        title: "tail slope and truncated-mean growth",
        pass: ok && grows,
        detail: format!(
            "slopes [{}] (within 0.1 of -delta); delta=2 truncated means at 1e2,1e3,1e4: {:.2}, {:.2}, {:.2}",
            slopes.join(", "),
            means[0],
            means[1],
            means[2]
        ),
    }
}

fn test_targets(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map(|it| {
            it.filter_map(|e| e.ok())
                .filter_map(|e| e.file_name().to_str().and_then(|f| f.strip_suffix(".rs")).map(String::from))
                .filter(|name| name != "acceptance")
                .collect()
        })
        .unwrap_or_default();
    names.sort();
    names
}

fn invariant_suites() -> Outcome {
    let core = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let root = core.join("../..");
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let mut targets = test_targets(&core.join("tests"));
    targets.extend(test_targets(&core.join("../cli/tests")));

    let started = Instant::now();
    let mut unit = Command::new(&cargo);
    unit.current_dir(&root)
        .args(["test", "--offline", "-p", "covshrink", "-p", "covshrink-cli", "--lib", "--bins"]);
    for t in &targets {
        unit.args(["--test", t]);
    }
    let mut doc = Command::new(&cargo);
    doc.current_dir(&root).args(["test", "--offline", "-p", "covshrink", "--doc"]);

    let mut failures = Vec::new();
    for (label, mut cmd) in [("unit and integration", unit), ("doc", doc)] {
        match cmd.output() {
            Ok(out) if out.status.success() => {}
            Ok(out) => {
                let text = String::from_utf8_lossy(&out.stdout);
                let failed: Vec<&str> = text.lines().filter(|l| l.ends_with("FAILED")).collect();
                failures.push(format!("{label}: {}", failed.join(" | ")));
            }
            Err(e) => failures.push(format!("{label}: cannot run cargo: {e}")),
        }
    }
    let (fast, time) = within(started.elapsed(), 600.0);
    Outcome {
        id: "C8",
        title: "invariant suites of every module",
        pass: failures.is_empty() && fast,
        detail: if failures.is_empty() {
            format!("{} integration targets plus unit and doc tests green, {time}", targets.len())
        } else {
            format!("{}; {time}", failures.join("; "))
        },
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn report(o: &Outcome) {
    println!("{} {} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.title, o.detail);
}

fn main() {
    let mut outcomes = Vec::new();
    let mut run = |o: Outcome| {
        report(&o);
        outcomes.push(o.pass);
    };
    run(conjugate_oracle());
    run(beta_step_stationarity());
    let (study, elapsed) = desk_study();
    run(frobenius_ordering(&study, elapsed));
    run(stein_ordering(&study));
    run(eigen_directionality(&study));
    run(lower_bound_concentration());
    run(tail_properties());
    run(invariant_suites());

    let failed = outcomes.iter().filter(|&&p| !p).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
