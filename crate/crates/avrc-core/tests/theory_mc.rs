//! Monte Carlo agreement checks for the closed-form error expressions, sign
//! laws over random covariance structures, and estimator sanity checks.

use avrc_core::linalg::trace_product;
use avrc_core::rng::{stream, Role};
use avrc_core::theory::{
    expected_cross_term, expected_cross_term_given_latent, expected_test_error_diff,
    expected_test_error_diff_given_latent, expected_train_error_diff,
    expected_train_error_diff_scalar_form, monte_carlo_cross_term, monte_carlo_error_diff,
    DiffKind, InstanceSpec, ObsKernel, ThreeModelInstance,
};
use nalgebra::DMatrix;
use rand::Rng;

fn spec(seed: u64, scale: [[f64; 3]; 3]) -> InstanceSpec {
    InstanceSpec {
        version: 1,
        n: 30,
        p: 2,
        q: 2,
        seed,
        sigma_scale: scale,
        obs_kernel: ObsKernel::Independent,
        theta: None,
        sigma_w: None,
    }
}

fn default_instance(seed: u64) -> ThreeModelInstance {
    spec(
        seed,
        [[1.0, 0.5, 0.3], [0.5, 1.0, 0.4], [0.3, 0.4, 1.0]],
    )
    .build()
    .unwrap()
}

#[test]
fn closed_forms_agree_with_monte_carlo() {
    let inst = default_instance(4001);
    let reps = 4000;
    let r = monte_carlo_cross_term(&inst, reps, 1).unwrap();
    assert!(r.z_score.abs() <= 4.0, "cross term z = {}", r.z_score);
    let tr = monte_carlo_error_diff(&inst, reps, 2, DiffKind::Train).unwrap();
    assert!(tr.z_score.abs() <= 4.0, "train diff z = {}", tr.z_score);
    let te = monte_carlo_error_diff(&inst, reps, 3, DiffKind::Test).unwrap();
    assert!(te.z_score.abs() <= 4.0, "test diff z = {}", te.z_score);
}

#[test]
fn conditional_forms_average_to_marginal_forms() {
    // law of total expectation: averaging the conditional closed forms over
    // latent draws reproduces the marginalized forms
    let inst = default_instance(4002);
    let mut cross = Vec::new();
    let mut test = Vec::new();
    for rep in 0..400u64 {
        let w = inst.sample_latent(&mut stream(55, rep, Role::ReplicateLatent));
        cross.push(expected_cross_term_given_latent(&inst, &w));
        test.push(expected_test_error_diff_given_latent(&inst, &w));
    }
    let check = |samples: &[f64], target: f64, what: &str| {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(
            (mean - target).abs() <= 4.0 * se.max(1e-12),
            "{what}: mean {mean} vs target {target} (se {se})"
        );
    };
    check(&cross, expected_cross_term(&inst), "cross term");
    check(&test, expected_test_error_diff(&inst), "test diff");
}

#[test]
fn sign_law_over_random_nonnegative_covariances() {
    let mut rng = stream(600, 0, Role::Generic);
    for trial in 0..200 {
        // random PSD scale matrix with nonnegative entries: S = A Aᵀ, A >= 0
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(0.0..1.0));
        let s = &a * a.transpose();
        let scale = std::array::from_fn(|i| std::array::from_fn(|j| s[(i, j)]));
        let inst = spec(600 + trial, scale).build().unwrap();
        let value = expected_cross_term(&inst);
        assert!(value <= 1e-10, "trial {trial}: cross term {value} > 0");
    }
}

#[test]
fn projector_ordering_traces_are_nonpositive() {
    for seed in 0..20u64 {
        let inst = default_instance(7000 + seed);
        let n = inst.n();
        let eye = DMatrix::<f64>::identity(n, n);
        let i_minus_h3 = &eye - inst.hat(3);
        for m in 1..=2 {
            let t = trace_product(&i_minus_h3, &(inst.hat(m) - inst.hat_joint()));
            assert!(t <= 1e-9, "seed {seed}, model {m}: trace {t}");
        }
    }
}

#[test]
fn test_error_decomposition_signs() {
    // trace part alone (zero latent coefficients) is nonnegative under
    // entrywise-nonnegative covariances
    let mut s = spec(4100, [[1.0, 0.4, 0.2], [0.4, 1.0, 0.3], [0.2, 0.3, 1.0]]);
    s.theta = Some([vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]]);
    let trace_only = s.build().unwrap();
    assert!(expected_test_error_diff(&trace_only) >= -1e-10);

    // bias part alone (zero covariances) is nonpositive
    let mut s = spec(4100, [[0.0; 3]; 3]);
    s.theta = Some([vec![0.4, 0.6], vec![0.2, 0.5], vec![0.3, 0.3]]);
    let bias_only = s.build().unwrap();
    assert!(expected_test_error_diff(&bias_only) <= 0.0);
    assert!(expected_train_error_diff(&bias_only) <= 0.0);
}

#[test]
fn scalar_route_matches_general_route_on_seeded_instances() {
    for seed in [21u64, 22, 23, 24, 25] {
        let inst = default_instance(seed);
        let general = expected_train_error_diff(&inst);
        let scalar = expected_train_error_diff_scalar_form(&inst).unwrap();
        assert!(
            (general - scalar).abs() <= 1e-9 * general.abs().max(1.0),
            "seed {seed}: {general} vs {scalar}"
        );
    }
    // a non-identity kernel has no scalar route
    let mut s = spec(26, [[1.0, 0.2, 0.1], [0.2, 1.0, 0.2], [0.1, 0.2, 1.0]]);
    s.obs_kernel = ObsKernel::Ar1 { rho: 0.5 };
    let inst = s.build().unwrap();
    assert!(expected_train_error_diff_scalar_form(&inst).is_none());
}

#[test]
fn kernel_covariance_still_matches_monte_carlo() {
    let mut s = spec(27, [[1.0, 0.5, 0.2], [0.5, 1.0, 0.3], [0.2, 0.3, 1.0]]);
    s.obs_kernel = ObsKernel::Ar1 { rho: 0.6 };
    let inst = s.build().unwrap();
    let report = monte_carlo_error_diff(&inst, 4000, 5, DiffKind::Train).unwrap();
    assert!(report.z_score.abs() <= 4.0, "z = {}", report.z_score);
}

#[test]
fn zero_noise_zero_latent_is_deterministic() {
    let mut s = spec(28, [[0.0; 3]; 3]);
    s.theta = Some([vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]]);
    let inst = s.build().unwrap();
    let report = monte_carlo_error_diff(&inst, 200, 6, DiffKind::Train).unwrap();
    assert_eq!(report.closed_form, 0.0);
    assert!(report.mc_mean.abs() < 1e-20);
    assert_eq!(report.z_score, 0.0);
}

#[test]
fn standard_error_shrinks_like_root_n() {
    let inst = default_instance(4003);
    let small = monte_carlo_error_diff(&inst, 1000, 9, DiffKind::Test).unwrap();
    let large = monte_carlo_error_diff(&inst, 4000, 9, DiffKind::Test).unwrap();
    let ratio = small.mc_se / large.mc_se;
    assert!(
        (ratio - 2.0).abs() <= 0.4,
        "se ratio {ratio} not within 20% of 2"
    );
}

#[test]
fn monte_carlo_is_reproducible_and_replicate_count_guarded() {
    let inst = default_instance(4004);
    let a = monte_carlo_cross_term(&inst, 150, 11).unwrap();
    let b = monte_carlo_cross_term(&inst, 150, 11).unwrap();
    assert_eq!(a.mc_mean, b.mc_mean);
    assert_eq!(a.mc_se, b.mc_se);
    assert!(monte_carlo_cross_term(&inst, 99, 11).is_err());
}
