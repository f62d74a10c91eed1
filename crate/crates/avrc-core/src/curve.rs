//! Training/test error curves over every cluster count of a merge trace.

use nalgebra::{DMatrix, DVector};

use crate::clustering::{MergeTrace, ReplayState};
use crate::error::{Error, Result};
use crate::model::ModelCollection;

/// Errors of the partition at one cluster count.
///
/// Errors are sums of squares; divide by the training/test observation count
/// when reporting MSE. `interpolating` marks partitions where some cluster
/// has at least as many parameters as observations and interpolates its own
/// aggregate response, the regime where test errors can blow up.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub k: usize,
    pub train_rss: f64,
    pub test_rss: f64,
    /// Parameter count `p · |cluster|` of the largest cluster.
    pub max_cluster_params: usize,
    pub interpolating: bool,
}

/// Replay a trace from `k = M` down to `k = 1`, refitting only the merged
/// cluster at each step, and record aggregate train/test errors at every `k`.
///
/// `test_designs[m − 1]` and `test_responses[m − 1]` belong to model `m`; all
/// test designs must share one row count.
pub fn error_curve(
    collection: &ModelCollection,
    trace: &MergeTrace,
    test_designs: &[DMatrix<f64>],
    test_responses: &[DVector<f64>],
) -> Result<Vec<CurvePoint>> {
    let m = collection.m();
    if trace.m != m {
        return Err(Error::contract(
            "error_curve",
            format!("trace is over {} models, collection has {m}", trace.m),
        ));
    }
    if test_designs.len() != m || test_responses.len() != m {
        return Err(Error::contract(
            "error_curve",
            "need one test design and response per model",
        ));
    }
    let n_test = test_designs[0].nrows();
    for (idx, (d, z)) in test_designs.iter().zip(test_responses).enumerate() {
        if d.nrows() != n_test || d.ncols() != collection.p() || z.len() != n_test {
            return Err(Error::dimension(
                "error_curve",
                format!("test data for model {} has inconsistent shape", idx + 1),
            ));
        }
    }

    // z_total is fixed; predictions are recomputed canonically at each k.
    let mut z_total = DVector::zeros(n_test);
    for z in test_responses {
        z_total += z;
    }

    let mut state = ReplayState::new(collection)?;
    let mut points = Vec::with_capacity(m);
    let record = |state: &ReplayState, k: usize, points: &mut Vec<CurvePoint>| {
        let train_rss = state.training_error(collection);
        let mut pred = DVector::zeros(n_test);
        for (idx, design) in test_designs.iter().enumerate() {
            pred += design * &state.coefficients()[idx];
        }
        let test_rss = (&z_total - pred).norm_squared();
        points.push(CurvePoint {
            k,
            train_rss,
            test_rss,
            max_cluster_params: state.max_cluster_size() * collection.p(),
            interpolating: state.has_interpolating_cluster(collection),
        });
    };

    record(&state, m, &mut points);
    for step in &trace.steps {
        state.apply(collection, step.left, step.right, step.new_cluster)?;
        record(&state, m - step.step, &mut points);
    }
    Ok(points)
}
