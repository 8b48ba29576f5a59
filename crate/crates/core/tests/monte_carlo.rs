use triplet_core::estimator::{estimate, sigma_rho, srs_variance, EstimateOptions};
use triplet_core::exec::Execution;
use triplet_core::simulation::{
    parametric_bootstrap_with, replication_rng, run_mse_study_with, sample_counts, SimConfig,
};
use triplet_core::{QParams, RhoParams, SuccessCounts};

fn study_config(n: u64, seed: u64) -> SimConfig {
    SimConfig {
        rho0: RhoParams::new(0.1, 0.1, 0.1).unwrap(),
        n,
        reps: 1000,
        seed,
    }
}

#[test]
fn sequential_and_parallel_agree_bit_for_bit() {
    let cfg = study_config(100, 99);
    let seq = run_mse_study_with(&cfg, Execution::Sequential).unwrap();
    let par = run_mse_study_with(&cfg, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    for j in 0..3 {
        assert_eq!(seq.mse[j].to_bits(), par.mse[j].to_bits());
    }

    let counts = SuccessCounts::new([1, 3, 11, 22]).unwrap();
    let a = parametric_bootstrap_with(&counts, 500, 3, 0.9, Execution::Sequential).unwrap();
    let b = parametric_bootstrap_with(&counts, 500, 3, 0.9, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn mse_decreases_with_sample_size() {
    let results: Vec<_> = [37, 100, 500, 1000]
        .iter()
        .map(|&n| run_mse_study_with(&study_config(n, 1), Execution::default()).unwrap())
        .collect();
    for r in &results {
        assert!(r.mse[0] < r.mse[1] && r.mse[1] < r.mse[2], "{:?}", r.mse);
        for j in 0..3 {
            assert!(r.mse[j] >= r.bias[j] * r.bias[j] - 1e-12);
        }
    }
    for w in results.windows(2) {
        for j in 0..3 {
            assert!(w[1].mse[j] < w[0].mse[j]);
        }
    }
}

#[test]
fn delta_method_variance_at_n1000() {
    let r = run_mse_study_with(&study_config(1000, 17), Execution::default()).unwrap();
    let cov = sigma_rho(&r.q0, 1000).unwrap();
    let predicted = cov.sigma_rho[0][0] / 1000.0;
    assert!((r.variance[0] / predicted - 1.0).abs() < 0.15);
}

#[test]
fn independence_mse_matches_srs_variance() {
    let n = 2000;
    let cfg = SimConfig {
        rho0: RhoParams::new(0.5, 0.0, 0.0).unwrap(),
        n,
        reps: 1000,
        seed: 5,
    };
    let r = run_mse_study_with(&cfg, Execution::default()).unwrap();
    let expected = srs_variance(0.5, n);
    assert!(
        (r.mse[0] / expected - 1.0).abs() < 0.15,
        "{} vs {expected}",
        r.mse[0]
    );
}

#[test]
fn design_effect_tends_to_one_under_independence() {
    let q = QParams::independent(0.3).unwrap();
    let mut rng = replication_rng(8, 0);
    let counts = sample_counts(&q, 200_000, &mut rng).unwrap();
    let r = estimate(&counts, &EstimateOptions::default()).unwrap();
    assert!((r.design_effect - 1.0).abs() < 0.02, "{}", r.design_effect);
}

#[test]
fn mean_sampled_frequencies_match_q() {
    let q = QParams::new(0.2052, 0.0378, 0.0064).unwrap();
    let n = 37u64;
    let reps = 10_000u64;
    let mut sums = [0.0; 4];
    for i in 0..reps {
        let c = sample_counts(&q, n, &mut replication_rng(12, i)).unwrap();
        for (s, v) in sums.iter_mut().enumerate() {
            *v += c.get(s) as f64 / n as f64;
        }
    }
    for (s, p) in q.with_q0().iter().enumerate() {
        let mean = sums[s] / reps as f64;
        let mcse = (p * (1.0 - p) / (n * reps) as f64).sqrt();
        assert!((mean - p).abs() < 4.0 * mcse, "category {s}: {mean} vs {p}");
    }
}

#[test]
fn bootstrap_se_close_to_delta_method() {
    let counts = SuccessCounts::new([1, 3, 11, 22]).unwrap();
    let b = parametric_bootstrap_with(&counts, 2000, 21, 0.95, Execution::default()).unwrap();
    let delta = estimate(&counts, &EstimateOptions::default()).unwrap();
    assert!((b.se[0] / delta.cov.se[0] - 1.0).abs() < 0.2);
    assert!(b.ci[0].lower < delta.rho_hat.pi && delta.rho_hat.pi < b.ci[0].upper);
    assert!(2 * b.skipped <= b.reps);
}
