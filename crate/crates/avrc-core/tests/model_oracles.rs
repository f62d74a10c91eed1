//! Oracles and properties for collection fitting: an explicit
//! normal-equations reimplementation, the merge inequality, endpoint
//! equivalence and block-ordering checks.

use avrc_core::model::{
    aggregate_design, aggregate_test_error, aggregate_training_error, fit_avrc, predict_aggregate,
    residual_vectors, ClusterPartition, ModelCollection, RegressionProblem,
};
use avrc_core::ridgeless_fit;
use avrc_core::rng::{stream, Role};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn random_collection(seed: u64, m: usize, n: usize, p: usize) -> ModelCollection {
    let problems = (1..=m)
        .map(|id| {
            let mut rng = stream(seed, id as u64, Role::Generic);
            let design = DMatrix::from_fn(n, p, |_, _| rng.random_range(0.0..3.0));
            let response = DVector::from_fn(n, |_, _| rng.random_range(-2.0..4.0));
            RegressionProblem::new(id, design, response).unwrap()
        })
        .collect();
    ModelCollection::new(problems).unwrap()
}

/// Independent route: per-cluster OLS through explicitly inverted normal
/// equations, then the aggregate error from scratch.
fn normal_equations_training_error(coll: &ModelCollection, partition: &ClusterPartition) -> f64 {
    let mut total = DVector::zeros(coll.n());
    for id in 1..=coll.m() {
        total += &coll.problem(id).response;
    }
    for cluster in partition.clusters() {
        let (x, y) = aggregate_design(coll, cluster).unwrap();
        let beta = (x.tr_mul(&x)).try_inverse().unwrap() * x.tr_mul(&y);
        total -= &x * beta;
    }
    total.norm_squared()
}

#[test]
fn training_error_matches_normal_equations_oracle() {
    let coll = random_collection(314, 3, 30, 2);
    for partition in [
        ClusterPartition::singletons(3),
        ClusterPartition::new(vec![vec![1, 2], vec![3]], 3).unwrap(),
        ClusterPartition::single(3),
    ] {
        let fit = fit_avrc(&coll, &partition).unwrap();
        let ours = aggregate_training_error(&coll, &fit).unwrap();
        let oracle = normal_equations_training_error(&coll, &partition);
        assert!(
            (ours - oracle).abs() <= 1e-8 * oracle.max(1.0),
            "partition {partition:?}: {ours} vs oracle {oracle}"
        );
    }
}

#[test]
fn test_error_matches_direct_formula_oracle() {
    let coll = random_collection(217, 3, 25, 2);
    let mut rng = stream(218, 0, Role::Generic);
    let test_designs: Vec<DMatrix<f64>> = (0..3)
        .map(|_| DMatrix::from_fn(10, 2, |_, _| rng.random_range(0.0..3.0)))
        .collect();
    let test_responses: Vec<DVector<f64>> = (0..3)
        .map(|_| DVector::from_fn(10, |_, _| rng.random_range(-2.0..4.0)))
        .collect();
    let partition = ClusterPartition::new(vec![vec![1, 3], vec![2]], 3).unwrap();
    let fit = fit_avrc(&coll, &partition).unwrap();
    let ours = aggregate_test_error(&fit, &test_designs, &test_responses).unwrap();

    // direct formula, naive loops
    let mut diff = vec![0.0f64; 10];
    for (idx, (x, z)) in test_designs.iter().zip(&test_responses).enumerate() {
        let beta = fit.coefficients(idx + 1);
        for i in 0..10 {
            let mut pred = 0.0;
            for j in 0..2 {
                pred += x[(i, j)] * beta[j];
            }
            diff[i] += z[i] - pred;
        }
    }
    let oracle: f64 = diff.iter().map(|d| d * d).sum();
    assert!((ours - oracle).abs() <= 1e-8 * oracle.max(1.0));
}

#[test]
fn shifting_test_responses_shifts_error_algebraically() {
    let coll = random_collection(55, 2, 20, 2);
    let test_designs: Vec<DMatrix<f64>> = (1..=2).map(|id| coll.problem(id).design.clone()).collect();
    let test_responses: Vec<DVector<f64>> = (1..=2).map(|id| coll.problem(id).response.clone()).collect();
    let fit = fit_avrc(&coll, &ClusterPartition::singletons(2)).unwrap();

    let pred = predict_aggregate(&fit, &test_designs).unwrap();
    let mut total = DVector::zeros(20);
    for z in &test_responses {
        total += z;
    }
    let resid = &total - &pred;

    let c = 0.75;
    let shifted: Vec<DVector<f64>> = test_responses.iter().map(|z| z.add_scalar(c)).collect();
    let err = aggregate_test_error(&fit, &test_designs, &shifted).unwrap();
    let expected = resid.add_scalar(2.0 * c).norm_squared();
    assert!((err - expected).abs() <= 1e-8 * expected.max(1.0));
}

#[test]
fn merge_inequality_on_random_instances() {
    // lighter version of the acceptance sweep, mixed design laws
    let mut rng = stream(777, 0, Role::Generic);
    for trial in 0..200u64 {
        let n = rng.random_range(10..=60);
        let p = rng.random_range(1..=6);
        let gaussian = trial % 2 == 0;
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
            if gaussian {
                use rand_distr::StandardNormal;
                rng.sample(StandardNormal)
            } else {
                rng.random_range(0.0..3.0)
            }
        };
        let problems = (1..=2)
            .map(|id| {
                let design = DMatrix::from_fn(n, p, |_, _| draw(&mut rng));
                let response = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
                RegressionProblem::new(id, design, response).unwrap()
            })
            .collect();
        let coll = ModelCollection::new(problems).unwrap();
        let separate = aggregate_training_error(
            &coll,
            &fit_avrc(&coll, &ClusterPartition::singletons(2)).unwrap(),
        )
        .unwrap();
        let joint = aggregate_training_error(
            &coll,
            &fit_avrc(&coll, &ClusterPartition::single(2)).unwrap(),
        )
        .unwrap();
        assert!(
            joint <= separate + 1e-9 * separate.max(1.0),
            "trial {trial}: joint {joint} > separate {separate}"
        );
    }
}

#[test]
fn refinement_monotonicity_of_cluster_rss() {
    // merging any two clusters of a partition: the merged cluster's own RSS
    // never exceeds the pre-merge aggregate of the pair
    let coll = random_collection(404, 6, 40, 2);
    let partition = ClusterPartition::new(vec![vec![1, 4], vec![2], vec![3, 5, 6]], 6).unwrap();
    let clusters = partition.clusters();
    for a in 0..clusters.len() {
        for b in (a + 1)..clusters.len() {
            let (xa, ya) = aggregate_design(&coll, &clusters[a]).unwrap();
            let (xb, yb) = aggregate_design(&coll, &clusters[b]).unwrap();
            let fa = ridgeless_fit(&xa, &ya).unwrap();
            let fb = ridgeless_fit(&xb, &yb).unwrap();
            let pair_pre = (&ya + &yb - &xa * &fa.coefficients - &xb * &fb.coefficients)
                .norm_squared();

            let mut merged = clusters[a].clone();
            merged.extend(clusters[b].iter().copied());
            let (xm, ym) = aggregate_design(&coll, &merged).unwrap();
            let fm = ridgeless_fit(&xm, &ym).unwrap();
            assert!(fm.residual_sum_squares <= pair_pre + 1e-9 * pair_pre.max(1.0));
        }
    }
}

#[test]
fn endpoints_match_individual_and_joint_fits() {
    let coll = random_collection(99, 4, 30, 3);
    let ir_fit = fit_avrc(&coll, &ClusterPartition::singletons(4)).unwrap();
    for id in 1..=4 {
        let prob = coll.problem(id);
        let direct = ridgeless_fit(&prob.design, &prob.response).unwrap();
        let diff = (ir_fit.coefficients(id) - &direct.coefficients).amax();
        assert!(diff <= 1e-10 * direct.coefficients.amax().max(1.0));
    }

    let avr_fit = fit_avrc(&coll, &ClusterPartition::single(4)).unwrap();
    let (x, y) = aggregate_design(&coll, &[1, 2, 3, 4]).unwrap();
    let direct = ridgeless_fit(&x, &y).unwrap();
    for id in 1..=4 {
        let block = DVector::from(direct.coefficients.rows((id - 1) * 3, 3).clone_owned());
        let diff = (avr_fit.coefficients(id) - block).amax();
        assert!(diff <= 1e-10 * direct.coefficients.amax().max(1.0));
    }
}

#[test]
fn coefficient_blocks_slice_back_in_model_order() {
    // noiseless data with known coefficients: every cluster fit recovers each
    // member's block exactly, proving the column order inside clusters
    let mut rng = stream(3021, 0, Role::Generic);
    let n = 60;
    let p = 2;
    let betas: Vec<DVector<f64>> = (0..3)
        .map(|_| DVector::from_fn(p, |_, _| rng.random_range(0.0..1.0)))
        .collect();
    let problems = (1..=3)
        .map(|id| {
            let design = DMatrix::from_fn(n, p, |_, _| rng.random_range(0.0..3.0));
            let response = &design * &betas[id - 1];
            RegressionProblem::new(id, design, response).unwrap()
        })
        .collect();
    let coll = ModelCollection::new(problems).unwrap();
    let fit = fit_avrc(
        &coll,
        &ClusterPartition::new(vec![vec![2, 3], vec![1]], 3).unwrap(),
    )
    .unwrap();
    for id in 1..=3 {
        assert!(
            (fit.coefficients(id) - &betas[id - 1]).amax() < 1e-8,
            "model {id} block mismatch"
        );
    }
    let err = aggregate_training_error(&coll, &fit).unwrap();
    assert!(err < 1e-16 * coll.problem(1).response.norm_squared().max(1.0));
}

#[test]
fn noiseless_interpolation_for_any_partition() {
    let mut rng = stream(88, 0, Role::Generic);
    let (m, n, p) = (4, 80, 2);
    let betas: Vec<DVector<f64>> = (0..m)
        .map(|_| DVector::from_fn(p, |_, _| rng.random_range(0.0..1.0)))
        .collect();
    let problems = (1..=m)
        .map(|id| {
            let design = DMatrix::from_fn(n, p, |_, _| rng.random_range(0.0..3.0));
            let response = &design * &betas[id - 1];
            RegressionProblem::new(id, design, response).unwrap()
        })
        .collect();
    let coll = ModelCollection::new(problems).unwrap();
    let scale = (1..=m).map(|id| coll.problem(id).response.norm_squared()).sum::<f64>();
    for partition in [
        ClusterPartition::singletons(m),
        ClusterPartition::new(vec![vec![1, 3], vec![2, 4]], m).unwrap(),
        ClusterPartition::single(m),
    ] {
        let fit = fit_avrc(&coll, &partition).unwrap();
        let err = aggregate_training_error(&coll, &fit).unwrap();
        assert!(err <= 1e-16 * scale.max(1.0), "partition {partition:?}: err {err}");
    }
}

#[test]
fn perfectly_interpolated_training_set_has_zero_test_error() {
    let mut rng = stream(1200, 0, Role::Generic);
    let (m, n, p) = (3, 50, 2);
    let problems = (1..=m)
        .map(|id| {
            let design = DMatrix::from_fn(n, p, |_, _| rng.random_range(0.0..3.0));
            let beta = DVector::from_fn(p, |_, _| rng.random_range(0.0..1.0));
            let response = &design * beta;
            RegressionProblem::new(id, design, response).unwrap()
        })
        .collect();
    let coll = ModelCollection::new(problems).unwrap();
    let fit = fit_avrc(&coll, &ClusterPartition::single(m)).unwrap();
    let designs: Vec<DMatrix<f64>> = (1..=m).map(|id| coll.problem(id).design.clone()).collect();
    let responses: Vec<DVector<f64>> = (1..=m).map(|id| coll.problem(id).response.clone()).collect();
    let err = aggregate_test_error(&fit, &designs, &responses).unwrap();
    let scale: f64 = responses.iter().map(|z| z.norm_squared()).sum();
    assert!(err <= 1e-16 * scale.max(1.0));
}

#[test]
fn residuals_are_orthogonal_to_design_columns() {
    let coll = random_collection(606, 3, 30, 3);
    let residuals = residual_vectors(&coll).unwrap();
    for id in 1..=3 {
        let prob = coll.problem(id);
        let gram = prob.design.tr_mul(&residuals[id - 1]);
        let scale = prob.design.amax().max(prob.response.amax()).max(1.0);
        assert!(gram.amax() <= 1e-8 * scale * scale * 30.0);
    }
}

#[test]
fn noiseless_residuals_are_zero() {
    let mut rng = stream(89, 0, Role::Generic);
    let design = DMatrix::from_fn(20, 2, |_, _| rng.random_range(0.0..3.0));
    let beta = DVector::from_vec(vec![0.3, 0.9]);
    let response = &design * &beta;
    let coll = ModelCollection::new(vec![
        RegressionProblem::new(1, design, response).unwrap(),
    ])
    .unwrap();
    let residuals = residual_vectors(&coll).unwrap();
    assert!(residuals[0].amax() < 1e-10);
}
