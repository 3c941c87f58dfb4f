use covshrink::study::{run_replication, replication_seed};
use covshrink::{
    run_study, EstimatorKind, LossKind, RngStream, SamplerConfig, StudyConfig, TrueMatrixId,
};

fn small_config(matrices: Vec<TrueMatrixId>, n_values: Vec<usize>, replications: usize) -> StudyConfig {
    StudyConfig {
        matrices,
        n_values,
        replications,
        sampler: SamplerConfig {
            iterations: 600,
            burn_in: 200,
            ..Default::default()
        },
        master_seed: 77,
        ..Default::default()
    }
}

#[test]
fn reports_are_bit_identical_across_runs_and_thread_counts() {
    let config = small_config(vec![TrueMatrixId::B1, TrueMatrixId::C], vec![5], 3);
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let parallel = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = serial.install(|| run_study(&config)).unwrap();
    let b = parallel.install(|| run_study(&config)).unwrap();
    let c = run_study(&config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    a.write_csv(&mut csv_a).unwrap();
    b.write_csv(&mut csv_b).unwrap();
    assert_eq!(csv_a, csv_b);
    assert_eq!(a.rows.len(), 2 * 7 * 4);
}

#[test]
fn a_single_replication_can_be_replayed_from_its_seed() {
    let config = small_config(vec![TrueMatrixId::B2], vec![5], 3);
    let report = run_study(&config).unwrap();
    let mut rng = RngStream::new(replication_seed(77, TrueMatrixId::B2, 5, 2));
    let replay = run_replication(TrueMatrixId::B2, 5, &config, &mut rng).unwrap();
    assert_eq!(report.replications[2].losses, replay);
}

#[test]
fn rotated_variants_share_their_parent_spectrum() {
    assert_eq!(TrueMatrixId::B.spectrum(), TrueMatrixId::B1.spectrum());
    assert_eq!(TrueMatrixId::B.spectrum(), TrueMatrixId::B2.spectrum());
    assert_eq!(TrueMatrixId::C.spectrum(), TrueMatrixId::C1.spectrum());
    assert_eq!(TrueMatrixId::C.spectrum(), TrueMatrixId::C2.spectrum());
}

#[test]
fn frobenius_risk_at_least_halves_with_more_data() {
    let config = small_config(TrueMatrixId::ALL.to_vec(), vec![5, 100], 4);
    let report = run_study(&config).unwrap();
    for id in TrueMatrixId::ALL {
        for est in EstimatorKind::ALL {
            let small = report.risk(id, 5, est, LossKind::Frobenius);
            let large = report.risk(id, 100, est, LossKind::Frobenius);
            assert!(2.0 * large <= small, "{id} {est}: n=5 {small}, n=100 {large}");
        }
    }
}
