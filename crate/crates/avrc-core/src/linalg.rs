//! Dense least-squares kernels: minimum-norm fits, projection (hat) matrices
//! and positive-semidefinite factorizations.
//!
//! Every routine here is a pure function of its inputs and is safe to call
//! concurrently. Results are bit-for-bit deterministic: the same inputs take
//! the same internal path and produce the same floating-point output.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Result of a minimum-norm least-squares fit.
///
/// `coefficients` is the minimum-Euclidean-norm minimizer of
/// `‖response − design · β‖²`. When the Gram matrix of the design is
/// invertible this coincides with the ordinary least-squares solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresFit {
    pub coefficients: DVector<f64>,
    /// Numerical rank of the design under the fit's singular-value cutoff.
    pub rank: usize,
    pub residual_sum_squares: f64,
}

/// Default relative singular-value cutoff: machine epsilon times the larger
/// matrix dimension, the usual numerical-rank convention.
pub fn default_rel_tol(rows: usize, cols: usize) -> f64 {
    f64::EPSILON * rows.max(cols) as f64
}

/// Gate for the normal-equations fast path inside [`ridgeless_fit`]:
/// an estimated Gram-matrix condition number above this forces the SVD route.
const GRAM_CONDITION_GATE: f64 = 1e6;

pub(crate) fn check_matrix_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn check_vector_finite(v: &DVector<f64>, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Minimum-norm least squares (the ridge solution in the limit of a vanishing
/// penalty) with the default singular-value cutoff.
pub fn ridgeless_fit(design: &DMatrix<f64>, response: &DVector<f64>) -> Result<LeastSquaresFit> {
    ridgeless_fit_with_tol(design, response, default_rel_tol(design.nrows(), design.ncols()))
}

/// Minimum-norm least squares with an explicit relative cutoff.
///
/// Singular values below `rel_tol` times the largest singular value are
/// treated as zero; the reported rank counts the survivors. A conditioning
/// gate routes clearly full-rank tall systems through Cholesky-factored
/// normal equations; everything else goes through the SVD, which defines the
/// minimum-norm solution and the rank convention.
pub fn ridgeless_fit_with_tol(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    rel_tol: f64,
) -> Result<LeastSquaresFit> {
    let (n, c) = (design.nrows(), design.ncols());
    if n == 0 || c == 0 {
        return Err(Error::dimension(
            "ridgeless_fit",
            format!("design must be non-empty, got {n}x{c}"),
        ));
    }
    if response.len() != n {
        return Err(Error::dimension(
            "ridgeless_fit",
            format!("design has {n} rows but response has {} entries", response.len()),
        ));
    }
    if !(rel_tol > 0.0) {
        return Err(Error::contract("ridgeless_fit", "rel_tol must be positive"));
    }
    check_matrix_finite(design, "ridgeless_fit design")?;
    check_vector_finite(response, "ridgeless_fit response")?;

    if c <= n {
        if let Some(fit) = try_normal_equations(design, response) {
            return Ok(fit);
        }
    }
    svd_min_norm(design, response, rel_tol)
}

/// Normal-equations route, taken only when the Cholesky factor certifies a
/// well-conditioned Gram matrix, in which case the unique OLS solution is the
/// minimum-norm one and rank equals the column count.
fn try_normal_equations(design: &DMatrix<f64>, response: &DVector<f64>) -> Option<LeastSquaresFit> {
    let gram = design.tr_mul(design);
    let chol = gram.cholesky()?;
    let l = chol.l_dirty();
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0f64;
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        dmin = dmin.min(d);
        dmax = dmax.max(d);
    }
    if !(dmin > 0.0) || (dmax / dmin).powi(2) > GRAM_CONDITION_GATE {
        return None;
    }
    let rhs = design.tr_mul(response);
    let coefficients = chol.solve(&rhs);
    let residual_sum_squares = (response - design * &coefficients).norm_squared();
    Some(LeastSquaresFit {
        coefficients,
        rank: design.ncols(),
        residual_sum_squares,
    })
}

fn svd_min_norm(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    rel_tol: f64,
) -> Result<LeastSquaresFit> {
    let svd = design.clone().svd(true, true);
    let sigma = &svd.singular_values;
    let smax = sigma.iter().copied().fold(0.0f64, f64::max);
    let cutoff = rel_tol * smax;

    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");

    // beta = V diag(1/sigma_i) U^T y over singular values above the cutoff
    let uty = u.tr_mul(response);
    let mut scaled = DVector::zeros(sigma.len());
    let mut rank = 0usize;
    for i in 0..sigma.len() {
        if sigma[i] > cutoff && sigma[i] > 0.0 {
            scaled[i] = uty[i] / sigma[i];
            rank += 1;
        }
    }
    let coefficients = v_t.tr_mul(&scaled);
    let residual_sum_squares = (response - design * &coefficients).norm_squared();
    Ok(LeastSquaresFit {
        coefficients,
        rank,
        residual_sum_squares,
    })
}

/// Numerical rank of a matrix under the default cutoff convention.
pub fn numerical_rank(m: &DMatrix<f64>) -> Result<usize> {
    check_matrix_finite(m, "numerical_rank input")?;
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    let cutoff = default_rel_tol(m.nrows(), m.ncols()) * smax;
    Ok(svd.singular_values.iter().filter(|&&s| s > cutoff && s > 0.0).count())
}

/// Orthogonal projector onto the column space of `design`.
///
/// The design must have full column rank; the result is symmetric,
/// idempotent and has trace equal to the column count.
pub fn hat_matrix(design: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, c) = (design.nrows(), design.ncols());
    if n == 0 || c == 0 {
        return Err(Error::dimension("hat_matrix", format!("empty design {n}x{c}")));
    }
    check_matrix_finite(design, "hat_matrix design")?;
    let svd = design.clone().svd(true, false);
    let sigma = &svd.singular_values;
    let smax = sigma.iter().copied().fold(0.0f64, f64::max);
    let cutoff = default_rel_tol(n, c) * smax;
    let rank = sigma.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    if rank < c {
        return Err(Error::RankDeficient {
            context: "hat_matrix",
            rank,
            cols: c,
        });
    }
    let u = svd.u.as_ref().expect("svd computed with u");
    Ok(u * u.transpose())
}

/// Moore–Penrose pseudoinverse via singular value decomposition.
///
/// Singular values below `rel_tol` times the largest one are treated as zero.
pub fn pseudo_inverse(m: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    if !(rel_tol > 0.0) {
        return Err(Error::contract("pseudo_inverse", "rel_tol must be positive"));
    }
    check_matrix_finite(m, "pseudo_inverse input")?;
    let svd = m.clone().svd(true, true);
    let sigma = &svd.singular_values;
    let smax = sigma.iter().copied().fold(0.0f64, f64::max);
    let cutoff = rel_tol * smax;

    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    // A+ = V diag(1/sigma_i) U^T
    let k = sigma.len();
    let mut d_ut = DMatrix::zeros(k, m.nrows());
    for i in 0..k {
        if sigma[i] > cutoff && sigma[i] > 0.0 {
            let inv = 1.0 / sigma[i];
            for j in 0..m.nrows() {
                d_ut[(i, j)] = inv * u[(j, i)];
            }
        }
    }
    Ok(v_t.tr_mul(&d_ut))
}

/// Factor a symmetric positive-semidefinite matrix as `B Bᵀ`.
///
/// Uses the symmetric eigendecomposition; eigenvalues below
/// `-1e-10 · max(1, λ_max)` are rejected as not PSD, small negatives are
/// clamped to zero.
pub fn psd_factor(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::dimension(
            "psd_factor",
            format!("matrix must be square, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    check_matrix_finite(m, "psd_factor input")?;
    let scale = m.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0);
    let max_asym = (m - m.transpose()).iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if max_asym > 1e-8 * scale {
        return Err(Error::NotPsd(format!("{what}: matrix is not symmetric")));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let lmax = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let floor = -1e-10 * lmax.max(1.0);
    if let Some(bad) = eig.eigenvalues.iter().copied().find(|&l| l < floor) {
        return Err(Error::NotPsd(format!("{what}: eigenvalue {bad:e} below tolerance")));
    }
    let mut b = eig.eigenvectors;
    for j in 0..b.ncols() {
        let s = eig.eigenvalues[j].max(0.0).sqrt();
        for i in 0..b.nrows() {
            b[(i, j)] *= s;
        }
    }
    Ok(b)
}

/// `Tr(A · B)` without forming the product.
pub fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut t = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            t += a[(i, j)] * b[(j, i)];
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_design_reproduces_response() {
        let design = DMatrix::<f64>::identity(3, 3);
        let response = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let fit = ridgeless_fit(&design, &response).unwrap();
        assert_eq!(fit.rank, 3);
        assert!((fit.coefficients - response).norm() < 1e-12);
        assert!(fit.residual_sum_squares < 1e-20);
    }

    #[test]
    fn column_of_ones_fits_mean() {
        let design = DMatrix::from_element(4, 1, 1.0);
        let response = DVector::from_vec(vec![1.0, 1.0, 3.0, 3.0]);
        let fit = ridgeless_fit(&design, &response).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((fit.residual_sum_squares - 4.0).abs() < 1e-10);
    }

    #[test]
    fn wide_design_takes_min_norm_solution() {
        // Rows span e1, e2; the third coordinate of the solution must be zero.
        let design = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let response = DVector::from_vec(vec![5.0, 7.0]);
        let fit = ridgeless_fit(&design, &response).unwrap();
        assert!(fit.residual_sum_squares < 1e-18);
        assert!((fit.coefficients[0] - 5.0).abs() < 1e-10);
        assert!((fit.coefficients[1] - 7.0).abs() < 1e-10);
        assert!(fit.coefficients[2].abs() < 1e-10);
        assert_eq!(fit.rank, 2);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let design = DMatrix::<f64>::identity(3, 3);
        let response = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(
            ridgeless_fit(&design, &response),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let design = DMatrix::from_row_slice(2, 1, &[1.0, f64::NAN]);
        let response = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(ridgeless_fit(&design, &response), Err(Error::NonFinite(_))));
    }

    #[test]
    fn hat_of_square_invertible_design_is_identity() {
        let design = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 3.0]);
        let h = hat_matrix(&design).unwrap();
        assert!((h - DMatrix::<f64>::identity(2, 2)).amax() < 1e-10);
    }

    #[test]
    fn hat_of_ones_column_is_uniform() {
        let design = DMatrix::from_element(3, 1, 1.0);
        let h = hat_matrix(&design).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((h[(i, j)] - 1.0 / 3.0).abs() < 1e-12);
            }
        }
        assert!((h.trace() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hat_rejects_rank_deficient_design() {
        let design = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(matches!(
            hat_matrix(&design),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn pseudo_inverse_of_singular_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let p = pseudo_inverse(&m, 1e-12).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-12);
        assert!(p[(1, 1)].abs() < 1e-12);
    }

    #[test]
    fn pseudo_inverse_of_orthogonal_is_transpose() {
        let c = (0.3f64).cos();
        let s = (0.3f64).sin();
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let p = pseudo_inverse(&q, 1e-12).unwrap();
        assert!((p - q.transpose()).amax() < 1e-12);
    }

    #[test]
    fn psd_factor_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(psd_factor(&m, "test"), Err(Error::NotPsd(_))));
    }

    #[test]
    fn psd_factor_reproduces_input() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let b = psd_factor(&m, "test").unwrap();
        assert!((&b * b.transpose() - &m).amax() < 1e-12);
    }
}
