//! Collections of linear regression models and aggregate-value fitting.
//!
//! A collection holds `M` models that share the observation count `n` and the
//! predictor count `p`. Fitting under a cluster partition concatenates the
//! member designs column-wise inside each cluster, sums the member responses,
//! solves one minimum-norm least-squares problem per cluster and splits the
//! coefficients back to the member models. The all-singletons partition
//! reproduces per-model fitting; the single-cluster partition reproduces one
//! fit of the full concatenated design.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{check_matrix_finite, check_vector_finite, ridgeless_fit};

/// One regression model's design matrix and response vector.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    pub model_id: usize,
    pub design: DMatrix<f64>,
    pub response: DVector<f64>,
}

impl RegressionProblem {
    pub fn new(model_id: usize, design: DMatrix<f64>, response: DVector<f64>) -> Result<Self> {
        if design.nrows() == 0 || design.ncols() == 0 {
            return Err(Error::dimension(
                "RegressionProblem",
                format!("design must be non-empty, got {}x{}", design.nrows(), design.ncols()),
            ));
        }
        if design.nrows() != response.len() {
            return Err(Error::dimension(
                "RegressionProblem",
                format!(
                    "model {model_id}: design has {} rows, response has {} entries",
                    design.nrows(),
                    response.len()
                ),
            ));
        }
        check_matrix_finite(&design, "RegressionProblem design")?;
        check_vector_finite(&response, "RegressionProblem response")?;
        Ok(Self {
            model_id,
            design,
            response,
        })
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn p(&self) -> usize {
        self.design.ncols()
    }
}

/// `M` aligned regression problems with shared `n` and `p`.
///
/// Model ids must be exactly `1..=M` in ascending order; heterogeneous
/// predictor counts are rejected at construction.
#[derive(Debug, Clone)]
pub struct ModelCollection {
    problems: Vec<RegressionProblem>,
    n: usize,
    p: usize,
}

impl ModelCollection {
    pub fn new(problems: Vec<RegressionProblem>) -> Result<Self> {
        if problems.is_empty() {
            return Err(Error::contract("ModelCollection", "at least one model required"));
        }
        let n = problems[0].n();
        let p = problems[0].p();
        for (i, prob) in problems.iter().enumerate() {
            if prob.model_id != i + 1 {
                return Err(Error::contract(
                    "ModelCollection",
                    format!("model ids must be 1..=M in order; position {i} has id {}", prob.model_id),
                ));
            }
            if prob.n() != n || prob.p() != p {
                return Err(Error::dimension(
                    "ModelCollection",
                    format!(
                        "model {} is {}x{}, expected {}x{}",
                        prob.model_id,
                        prob.n(),
                        prob.p(),
                        n,
                        p
                    ),
                ));
            }
        }
        Ok(Self { problems, n, p })
    }

    pub fn m(&self) -> usize {
        self.problems.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Access a model by its 1-based id.
    pub fn problem(&self, model_id: usize) -> &RegressionProblem {
        &self.problems[model_id - 1]
    }

    pub fn problems(&self) -> &[RegressionProblem] {
        &self.problems
    }
}

/// Disjoint covering grouping of the model indices `1..=M`.
///
/// Clusters are canonicalized: members sorted ascending, clusters ordered by
/// their smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    clusters: Vec<Vec<usize>>,
    m: usize,
}

impl ClusterPartition {
    pub fn new(mut clusters: Vec<Vec<usize>>, m: usize) -> Result<Self> {
        let mut seen = vec![false; m + 1];
        let mut total = 0usize;
        for cluster in &mut clusters {
            if cluster.is_empty() {
                return Err(Error::contract("ClusterPartition", "empty cluster"));
            }
            cluster.sort_unstable();
            for &id in cluster.iter() {
                if id == 0 || id > m {
                    return Err(Error::contract(
                        "ClusterPartition",
                        format!("model id {id} outside 1..={m}"),
                    ));
                }
                if seen[id] {
                    return Err(Error::contract(
                        "ClusterPartition",
                        format!("model id {id} appears in two clusters"),
                    ));
                }
                seen[id] = true;
                total += 1;
            }
        }
        if total != m {
            return Err(Error::contract(
                "ClusterPartition",
                format!("clusters cover {total} of {m} models"),
            ));
        }
        clusters.sort_by_key(|c| c[0]);
        Ok(Self { clusters, m })
    }

    /// One cluster per model.
    pub fn singletons(m: usize) -> Self {
        Self {
            clusters: (1..=m).map(|id| vec![id]).collect(),
            m,
        }
    }

    /// A single cluster holding every model.
    pub fn single(m: usize) -> Self {
        Self {
            clusters: vec![(1..=m).collect()],
            m,
        }
    }

    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }
}

/// Fitted aggregate-value model: per-model coefficient blocks under a
/// cluster partition.
#[derive(Debug, Clone)]
pub struct AvrcFit {
    pub partition: ClusterPartition,
    /// Coefficient vector of model `id` at index `id - 1`.
    coefficients: Vec<DVector<f64>>,
    /// Numerical rank of each cluster's aggregate design, aligned with
    /// `partition.clusters()`.
    pub cluster_ranks: Vec<usize>,
    /// Residual sum of squares of each cluster's own aggregate fit.
    pub cluster_rss: Vec<f64>,
}

impl AvrcFit {
    pub fn coefficients(&self, model_id: usize) -> &DVector<f64> {
        &self.coefficients[model_id - 1]
    }

    pub fn all_coefficients(&self) -> &[DVector<f64>] {
        &self.coefficients
    }
}

/// Horizontal concatenation of the member designs (ascending model id) and
/// the entrywise sum of the member responses.
pub fn aggregate_design(
    collection: &ModelCollection,
    cluster: &[usize],
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if cluster.is_empty() {
        return Err(Error::contract("aggregate_design", "empty cluster"));
    }
    let mut members = cluster.to_vec();
    members.sort_unstable();
    members.dedup();
    if members.len() != cluster.len() {
        return Err(Error::contract("aggregate_design", "duplicate model id in cluster"));
    }
    for &id in &members {
        if id == 0 || id > collection.m() {
            return Err(Error::contract(
                "aggregate_design",
                format!("model id {id} outside 1..={}", collection.m()),
            ));
        }
    }
    let (n, p) = (collection.n(), collection.p());
    let mut design = DMatrix::zeros(n, p * members.len());
    let mut response = DVector::zeros(n);
    for (slot, &id) in members.iter().enumerate() {
        let prob = collection.problem(id);
        design.view_mut((0, slot * p), (n, p)).copy_from(&prob.design);
        response += &prob.response;
    }
    Ok((design, response))
}

/// Split a cluster fit's stacked coefficient vector back into per-model
/// blocks, ascending model id.
pub(crate) fn split_coefficients(
    stacked: &DVector<f64>,
    members: &[usize],
    p: usize,
) -> Vec<(usize, DVector<f64>)> {
    members
        .iter()
        .enumerate()
        .map(|(slot, &id)| (id, DVector::from(stacked.rows(slot * p, p).clone_owned())))
        .collect()
}

/// Fit every cluster of `partition` and assemble per-model coefficients.
///
/// Cluster fits are independent; they run in parallel and the result does not
/// depend on scheduling.
pub fn fit_avrc(collection: &ModelCollection, partition: &ClusterPartition) -> Result<AvrcFit> {
    if partition.m() != collection.m() {
        return Err(Error::contract(
            "fit_avrc",
            format!("partition is over {} models, collection has {}", partition.m(), collection.m()),
        ));
    }
    let p = collection.p();
    let fits: Vec<Result<_>> = partition
        .clusters()
        .par_iter()
        .map(|members| {
            let (design, response) = aggregate_design(collection, members)?;
            let fit = ridgeless_fit(&design, &response)?;
            Ok((members, fit))
        })
        .collect();

    let mut coefficients: Vec<Option<DVector<f64>>> = vec![None; collection.m()];
    let mut cluster_ranks = Vec::with_capacity(partition.k());
    let mut cluster_rss = Vec::with_capacity(partition.k());
    for item in fits {
        let (members, fit) = item?;
        cluster_ranks.push(fit.rank);
        cluster_rss.push(fit.residual_sum_squares);
        for (id, block) in split_coefficients(&fit.coefficients, members, p) {
            coefficients[id - 1] = Some(block);
        }
    }
    let coefficients = coefficients
        .into_iter()
        .map(|c| c.expect("partition covers all models"))
        .collect();
    Ok(AvrcFit {
        partition: partition.clone(),
        coefficients,
        cluster_ranks,
        cluster_rss,
    })
}

/// Canonical aggregate residual `Σ_m (y_m − X_m β_m)`, accumulated in
/// ascending model-id order so the value is independent of how clusters are
/// listed.
pub fn aggregate_residual(collection: &ModelCollection, coefficients: &[DVector<f64>]) -> DVector<f64> {
    let mut r = DVector::zeros(collection.n());
    for prob in collection.problems() {
        r += &prob.response - &prob.design * &coefficients[prob.model_id - 1];
    }
    r
}

/// Aggregate in-sample error `‖Σ_m y_m − Σ_m X_m β̂_m‖²`.
///
/// Stored as a sum of squares; divide by `n` only when reporting an MSE.
pub fn aggregate_training_error(collection: &ModelCollection, fit: &AvrcFit) -> Result<f64> {
    if fit.all_coefficients().len() != collection.m() {
        return Err(Error::contract(
            "aggregate_training_error",
            "fit does not match collection",
        ));
    }
    Ok(aggregate_residual(collection, fit.all_coefficients()).norm_squared())
}

/// Aggregate forecast `Σ_m X_m^new β̂_m` for per-model new designs
/// (index `m − 1` holds model `m`'s design).
pub fn predict_aggregate(fit: &AvrcFit, new_designs: &[DMatrix<f64>]) -> Result<DVector<f64>> {
    let m = fit.all_coefficients().len();
    if new_designs.len() != m {
        return Err(Error::contract(
            "predict_aggregate",
            format!("expected {m} new designs, got {}", new_designs.len()),
        ));
    }
    let rows = new_designs[0].nrows();
    let mut pred = DVector::zeros(rows);
    for (idx, design) in new_designs.iter().enumerate() {
        let coef = &fit.all_coefficients()[idx];
        if design.nrows() != rows || design.ncols() != coef.len() {
            return Err(Error::dimension(
                "predict_aggregate",
                format!(
                    "new design for model {} is {}x{}, expected {}x{}",
                    idx + 1,
                    design.nrows(),
                    design.ncols(),
                    rows,
                    coef.len()
                ),
            ));
        }
        pred += design * coef;
    }
    Ok(pred)
}

/// Aggregate out-of-sample error `‖Σ_m z_m − Σ_m X_m^new β̂_m‖²`.
pub fn aggregate_test_error(
    fit: &AvrcFit,
    new_designs: &[DMatrix<f64>],
    new_responses: &[DVector<f64>],
) -> Result<f64> {
    if new_responses.len() != new_designs.len() {
        return Err(Error::contract(
            "aggregate_test_error",
            format!(
                "{} new designs but {} new responses",
                new_designs.len(),
                new_responses.len()
            ),
        ));
    }
    let pred = predict_aggregate(fit, new_designs)?;
    let mut total = DVector::zeros(pred.len());
    for z in new_responses {
        if z.len() != pred.len() {
            return Err(Error::dimension(
                "aggregate_test_error",
                format!("response length {} does not match {} rows", z.len(), pred.len()),
            ));
        }
        total += z;
    }
    Ok((total - pred).norm_squared())
}

/// Per-model residuals under individual fitting, indexed by `model_id − 1`.
pub fn residual_vectors(collection: &ModelCollection) -> Result<Vec<DVector<f64>>> {
    collection
        .problems()
        .iter()
        .map(|prob| {
            let fit = ridgeless_fit(&prob.design, &prob.response)?;
            Ok(&prob.response - &prob.design * &fit.coefficients)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_model_collection() -> ModelCollection {
        let x1 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let x2 = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let y1 = DVector::from_vec(vec![1.0, 1.0]);
        let y2 = DVector::from_vec(vec![2.0, 2.0]);
        ModelCollection::new(vec![
            RegressionProblem::new(1, x1, y1).unwrap(),
            RegressionProblem::new(2, x2, y2).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn aggregate_design_concatenates_and_sums() {
        let coll = two_model_collection();
        let (design, response) = aggregate_design(&coll, &[1, 2]).unwrap();
        assert_eq!(design, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]));
        assert_eq!(response, DVector::from_vec(vec![3.0, 3.0]));
    }

    #[test]
    fn singleton_cluster_is_identity() {
        let coll = two_model_collection();
        let (design, response) = aggregate_design(&coll, &[2]).unwrap();
        assert_eq!(design, coll.problem(2).design);
        assert_eq!(response, coll.problem(2).response);
    }

    #[test]
    fn invalid_cluster_index_is_contract_violation() {
        let coll = two_model_collection();
        assert!(aggregate_design(&coll, &[3]).is_err());
        assert!(aggregate_design(&coll, &[]).is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(ClusterPartition::new(vec![vec![1], vec![2, 1]], 2).is_err());
        assert!(ClusterPartition::new(vec![vec![1]], 2).is_err());
        assert!(ClusterPartition::new(vec![vec![1], vec![]], 1).is_err());
        let part = ClusterPartition::new(vec![vec![2], vec![1]], 2).unwrap();
        assert_eq!(part.clusters()[0], vec![1]);
    }

    #[test]
    fn zero_new_designs_predict_zero() {
        let coll = two_model_collection();
        let fit = fit_avrc(&coll, &ClusterPartition::singletons(2)).unwrap();
        let zeros = vec![DMatrix::zeros(3, 1), DMatrix::zeros(3, 1)];
        let pred = predict_aggregate(&fit, &zeros).unwrap();
        assert_eq!(pred, DVector::zeros(3));
    }

    #[test]
    fn prediction_is_linear_in_designs() {
        let coll = two_model_collection();
        let fit = fit_avrc(&coll, &ClusterPartition::single(2)).unwrap();
        let designs: Vec<_> = (1..=2).map(|id| coll.problem(id).design.clone()).collect();
        let doubled: Vec<_> = designs.iter().map(|d| d * 2.0).collect();
        let p1 = predict_aggregate(&fit, &designs).unwrap();
        let p2 = predict_aggregate(&fit, &doubled).unwrap();
        assert!((p2 - &p1 * 2.0).amax() < 1e-12);
    }

    #[test]
    fn training_error_is_partition_order_invariant() {
        let coll = two_model_collection();
        let p1 = ClusterPartition::new(vec![vec![1], vec![2]], 2).unwrap();
        let p2 = ClusterPartition::new(vec![vec![2], vec![1]], 2).unwrap();
        let e1 = aggregate_training_error(&coll, &fit_avrc(&coll, &p1).unwrap()).unwrap();
        let e2 = aggregate_training_error(&coll, &fit_avrc(&coll, &p2).unwrap()).unwrap();
        assert_eq!(e1, e2);
    }
}
