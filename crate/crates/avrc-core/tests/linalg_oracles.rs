//! Independent oracles for the least-squares kernels: grid scans, null-space
//! searches and the four pseudoinverse identities, plus property tests of the
//! stationarity and minimum-norm guarantees.

use avrc_core::linalg::{default_rel_tol, hat_matrix, pseudo_inverse, ridgeless_fit};
use avrc_core::rng::{stream, Role};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Oracle for the intercept-only fit: scan the coefficient over a fine grid
/// and confirm the fitted value attains the scanned minimum.
#[test]
fn grid_scan_confirms_mean_fit() {
    let design = DMatrix::from_element(4, 1, 1.0);
    let response = DVector::from_vec(vec![1.0, 1.0, 3.0, 3.0]);
    let fit = ridgeless_fit(&design, &response).unwrap();

    let mut best = (f64::INFINITY, f64::NAN);
    let mut b = 0.0;
    while b <= 4.0 {
        let rss = (&response - &design * b).norm_squared();
        if rss < best.0 {
            best = (rss, b);
        }
        b += 1e-4;
    }
    assert!((fit.coefficients[0] - best.1).abs() < 1e-3);
    assert!((fit.residual_sum_squares - best.0).abs() < 1e-6);
    assert!((fit.residual_sum_squares - 4.0).abs() < 1e-10);
}

/// Oracle for norm minimality: perturbing the solution along the null space
/// never shrinks its norm, and the residual is unchanged.
#[test]
fn null_space_scan_confirms_min_norm() {
    let design = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let response = DVector::from_vec(vec![5.0, 7.0]);
    let fit = ridgeless_fit(&design, &response).unwrap();
    let null_dir = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    assert!((&design * &null_dir).norm() < 1e-14);

    let base_norm = fit.coefficients.norm();
    let mut t = -2.0;
    while t <= 2.0 {
        if t != 0.0 {
            let candidate = &fit.coefficients + &null_dir * t;
            let rss = (&response - &design * &candidate).norm_squared();
            assert!((rss - fit.residual_sum_squares).abs() < 1e-12);
            assert!(candidate.norm() >= base_norm - 1e-12);
        }
        t += 0.125;
    }
}

#[test]
fn penrose_conditions_on_random_matrices() {
    let mut rng = stream(100, 0, Role::Generic);
    for trial in 0..40 {
        let rows = rng.random_range(1..=50);
        let cols = rng.random_range(1..=50);
        let mut m = random_matrix(&mut rng, rows, cols, -2.0, 2.0);
        if trial % 3 == 0 && cols >= 2 {
            // force rank deficiency: last column repeats the first
            let first = m.column(0).clone_owned();
            m.set_column(cols - 1, &first);
        }
        let rel_tol = default_rel_tol(rows, cols);
        let pinv = pseudo_inverse(&m, rel_tol).unwrap();
        let scale = m.amax().max(1.0);
        let tol = 1e-8 * scale;
        assert!(((&m * &pinv * &m) - &m).amax() < tol, "A A+ A = A failed");
        assert!(((&pinv * &m * &pinv) - &pinv).amax() < tol.max(1e-8 * pinv.amax()));
        let mp = &m * &pinv;
        assert!((&mp - mp.transpose()).amax() < tol, "(A A+) symmetric failed");
        let pm = &pinv * &m;
        assert!((&pm - pm.transpose()).amax() < tol, "(A+ A) symmetric failed");
    }
}

/// Random 5x3 full-rank matrices: the first Penrose identity at tight
/// tolerance.
#[test]
fn tall_full_rank_pseudo_inverse_identity() {
    let mut rng = stream(101, 0, Role::Generic);
    for _ in 0..25 {
        let m = random_matrix(&mut rng, 5, 3, 0.0, 3.0);
        let pinv = pseudo_inverse(&m, default_rel_tol(5, 3)).unwrap();
        assert!(((&m * &pinv * &m) - &m).amax() < 1e-9 * m.amax().max(1.0));
    }
}

#[test]
fn hat_matrix_projector_properties() {
    let mut rng = stream(102, 0, Role::Generic);
    for _ in 0..25 {
        let n = rng.random_range(5..=40);
        let c = rng.random_range(1..=n.min(10));
        let design = random_matrix(&mut rng, n, c, 0.0, 3.0);
        let h = hat_matrix(&design).unwrap();
        assert!((&h * &h - &h).amax() <= 1e-8);
        assert!((&h - h.transpose()).amax() <= 1e-10);
        assert!((h.trace() - c as f64).abs() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Normal-equations stationarity: the gradient at the fit is numerically
    /// zero relative to the problem scale.
    #[test]
    fn stationarity_holds(seed in 0u64..1_000_000, rows in 1usize..40, cols in 1usize..20) {
        let mut rng = stream(seed, 7, Role::Generic);
        let design = random_matrix(&mut rng, rows, cols, -3.0, 3.0);
        let response = DVector::from_fn(rows, |_, _| rng.random_range(-5.0..5.0));
        let fit = ridgeless_fit(&design, &response).unwrap();
        let gradient = design.tr_mul(&(&response - &design * &fit.coefficients));
        let scale = design.amax().max(response.amax()).max(1.0);
        prop_assert!(gradient.amax() <= 1e-8 * scale * scale * rows as f64);
    }

    /// Minimum-norm property: coefficients are orthogonal to every null-space
    /// direction of the design. Null directions are built by projecting
    /// random vectors off the row space.
    #[test]
    fn coefficients_orthogonal_to_null_space(seed in 0u64..1_000_000, rows in 1usize..12, extra in 1usize..8) {
        let cols = rows + extra; // guaranteed nontrivial null space
        let mut rng = stream(seed, 8, Role::Generic);
        let design = random_matrix(&mut rng, rows, cols, -2.0, 2.0);
        let response = DVector::from_fn(rows, |_, _| rng.random_range(-5.0..5.0));
        let fit = ridgeless_fit(&design, &response).unwrap();
        let pinv = pseudo_inverse(&design, default_rel_tol(rows, cols)).unwrap();

        for _ in 0..4 {
            let u = DVector::from_fn(cols, |_, _| rng.random_range(-1.0..1.0));
            let v = &u - &pinv * (&design * &u);
            if v.norm() < 1e-10 {
                continue;
            }
            prop_assert!((&design * &v).amax() <= 1e-8 * design.amax().max(1.0));
            let dot = fit.coefficients.dot(&v).abs();
            prop_assert!(dot <= 1e-8 * fit.coefficients.norm().max(1.0) * v.norm());
        }
        // rank-deficient wide designs never report full column rank
        prop_assert!(fit.rank <= rows);
    }
}
