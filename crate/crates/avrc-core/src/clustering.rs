//! Hierarchical clustering of regression models.
//!
//! Two strategies build the merge hierarchy:
//!
//! * [`tem_cluster`] — greedy agglomeration that at each step merges the pair
//!   of clusters whose post-merge total aggregate training error is smallest.
//! * [`rcm_cluster`] — Ward linkage on the dissimilarity `1 − r_ij`, where
//!   `r_ij` is the sample correlation between the per-model residuals of
//!   individually fitted models.
//!
//! Both produce a [`MergeTrace`]: an ordered record of `M − 1` merges from
//! which the partition at any cluster count `k` can be replayed.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ridgeless_fit;
use crate::model::{
    aggregate_design, aggregate_residual, split_coefficients, ClusterPartition, ModelCollection,
};

/// Clustering strategy that produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Greedy training-error minimization.
    Tem,
    /// Ward linkage on residual-correlation dissimilarities.
    Rcm,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Tem => write!(f, "tem"),
            Method::Rcm => write!(f, "rcm"),
        }
    }
}

/// One merge in the hierarchy.
///
/// Singleton clusters carry ids `1..=M`; the cluster created at step `s`
/// gets id `M + s`. `left` always holds the cluster whose smallest member id
/// is smaller.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeStep {
    pub step: usize,
    pub left: usize,
    pub right: usize,
    pub new_cluster: usize,
    /// Total aggregate training error after this merge. Filled by
    /// [`tem_cluster`] and [`rcm_cluster`]; `None` in a bare linkage skeleton.
    pub training_error_after: Option<f64>,
    /// Linkage height; present for Ward merges only.
    pub linkage_height: Option<f64>,
}

/// Ordered record of the `M − 1` merges of one clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeTrace {
    pub m: usize,
    pub method: Method,
    pub steps: Vec<MergeStep>,
}

impl MergeTrace {
    /// Partition after `M − k` merges; `k = M` is all singletons, `k = 1`
    /// a single cluster.
    pub fn partition_at(&self, k: usize) -> Result<ClusterPartition> {
        if k == 0 || k > self.m {
            return Err(Error::contract(
                "partition_at",
                format!("k = {k} outside 1..={}", self.m),
            ));
        }
        let mut members: BTreeMap<usize, Vec<usize>> =
            (1..=self.m).map(|id| (id, vec![id])).collect();
        for step in &self.steps[..self.m - k] {
            let left = members.remove(&step.left).ok_or_else(|| {
                Error::contract("partition_at", format!("unknown cluster id {}", step.left))
            })?;
            let right = members.remove(&step.right).ok_or_else(|| {
                Error::contract("partition_at", format!("unknown cluster id {}", step.right))
            })?;
            let mut merged = left;
            merged.extend(right);
            merged.sort_unstable();
            members.insert(step.new_cluster, merged);
        }
        ClusterPartition::new(members.into_values().collect(), self.m)
    }

    /// Member lists `(left, right)` of every step, in order.
    pub fn step_members(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let mut members: BTreeMap<usize, Vec<usize>> =
            (1..=self.m).map(|id| (id, vec![id])).collect();
        let mut out = Vec::with_capacity(self.steps.len());
        for step in &self.steps {
            let left = members.remove(&step.left).expect("valid trace");
            let right = members.remove(&step.right).expect("valid trace");
            out.push((left.clone(), right.clone()));
            let mut merged = left;
            merged.extend(right);
            merged.sort_unstable();
            members.insert(step.new_cluster, merged);
        }
        out
    }

    /// Serialize as JSON lines: one object per step with the fields
    /// `{step, left_members, right_members, train_mse, height?}`.
    /// `train_mse` is the recorded training error divided by `n_obs`.
    pub fn to_jsonl(&self, n_obs: usize) -> Result<String> {
        #[derive(Serialize)]
        struct Record<'a> {
            step: usize,
            left_members: &'a [usize],
            right_members: &'a [usize],
            train_mse: f64,
            #[serde(skip_serializing_if = "Option::is_none")]
            height: Option<f64>,
        }
        let members = self.step_members();
        let mut out = String::new();
        for (step, (left, right)) in self.steps.iter().zip(&members) {
            let err = step.training_error_after.ok_or_else(|| {
                Error::contract("to_jsonl", "trace has unfilled training errors")
            })?;
            let record = Record {
                step: step.step,
                left_members: left,
                right_members: right,
                train_mse: err / n_obs as f64,
                height: step.linkage_height,
            };
            let line = serde_json::to_string(&record)
                .map_err(|e| Error::Data(format!("trace serialization: {e}")))?;
            out.push_str(&line);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Symmetric dissimilarity matrix with zero diagonal.
#[derive(Debug, Clone)]
pub struct DissimilarityMatrix {
    entries: DMatrix<f64>,
}

impl DissimilarityMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::dimension(
                "DissimilarityMatrix",
                format!("{}x{} is not square", entries.nrows(), entries.ncols()),
            ));
        }
        crate::linalg::check_matrix_finite(&entries, "dissimilarity matrix")?;
        let scale = entries.amax().max(1.0);
        let mut sym = entries;
        for i in 0..sym.nrows() {
            if sym[(i, i)].abs() > 1e-10 * scale {
                return Err(Error::Data(format!(
                    "dissimilarity diagonal entry ({i},{i}) = {} is not zero",
                    sym[(i, i)]
                )));
            }
            sym[(i, i)] = 0.0;
            for j in (i + 1)..sym.ncols() {
                if (sym[(i, j)] - sym[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::Data(format!(
                        "dissimilarity entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
                let v = sym[(i, j)];
                sym[(j, i)] = v;
            }
        }
        Ok(Self { entries: sym })
    }

    /// Build `d_ij = 1 − r_ij` from a correlation matrix, clamped to `[0, 2]`.
    pub fn from_correlation(r: &DMatrix<f64>) -> Result<Self> {
        let mut d = DMatrix::zeros(r.nrows(), r.ncols());
        for i in 0..r.nrows() {
            for j in 0..r.ncols() {
                if i != j {
                    d[(i, j)] = (1.0 - r[(i, j)]).clamp(0.0, 2.0);
                }
            }
        }
        Self::new(d)
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Pearson correlations between per-model residual vectors
/// (`residuals[m − 1]` belongs to model `m`).
///
/// A residual vector with zero variance carries no correlation signal: its
/// correlations are set to 0 (diagonal included) and a warning is logged.
pub fn residual_correlation(residuals: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let m = residuals.len();
    if m < 2 {
        return Err(Error::contract("residual_correlation", "need at least two residual vectors"));
    }
    let n = residuals[0].len();
    if n < 2 {
        return Err(Error::contract("residual_correlation", "residual vectors must have length >= 2"));
    }
    for (i, r) in residuals.iter().enumerate() {
        if r.len() != n {
            return Err(Error::dimension(
                "residual_correlation",
                format!("residual {} has length {}, expected {n}", i + 1, r.len()),
            ));
        }
        crate::linalg::check_vector_finite(r, "residual vector")?;
    }

    let centered: Vec<DVector<f64>> = residuals
        .iter()
        .map(|r| {
            let mean = r.sum() / n as f64;
            r.map(|x| x - mean)
        })
        .collect();
    let norms: Vec<f64> = centered.iter().map(|c| c.norm()).collect();
    for (i, &s) in norms.iter().enumerate() {
        if s <= 0.0 {
            log::warn!(
                "model {}: residual variance is zero (perfect in-sample fit); correlations set to 0",
                i + 1
            );
        }
    }

    let mut corr = DMatrix::zeros(m, m);
    for i in 0..m {
        if norms[i] > 0.0 {
            corr[(i, i)] = 1.0;
        }
        for j in (i + 1)..m {
            let r = if norms[i] > 0.0 && norms[j] > 0.0 {
                (centered[i].dot(&centered[j]) / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            corr[(i, j)] = r;
            corr[(j, i)] = r;
        }
    }
    Ok(corr)
}

/// Ward linkage convention for interpreting the input dissimilarities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WardVariant {
    /// Input entries are treated as squared Euclidean distances and updated
    /// in place (the `ward.D` convention). Default for [`rcm_cluster`].
    D,
    /// Input entries are treated as Euclidean distances; the recurrence runs
    /// on their squares and heights are square roots (`ward.D2`).
    D2,
}

struct WardNode {
    id: usize,
    size: f64,
    min_member: usize,
}

/// Agglomerative Ward linkage via Lance–Williams updates.
///
/// Returns a trace skeleton carrying merge order and linkage heights; training
/// errors are left unfilled. Ties are broken by the lexicographically smallest
/// `(left min member, right min member)` pair.
pub fn ward_linkage(d: &DissimilarityMatrix, variant: WardVariant) -> Result<MergeTrace> {
    let m = d.size();
    if m < 2 {
        return Err(Error::contract("ward_linkage", "need at least two points"));
    }
    let mut work = match variant {
        WardVariant::D => d.entries().clone(),
        WardVariant::D2 => d.entries().map(|x| x * x),
    };
    let mut nodes: Vec<Option<WardNode>> = (0..m)
        .map(|i| {
            Some(WardNode {
                id: i + 1,
                size: 1.0,
                min_member: i + 1,
            })
        })
        .collect();

    let mut steps = Vec::with_capacity(m - 1);
    for step in 1..=(m - 1) {
        // nearest active pair under (distance, tie key)
        let mut best: Option<(f64, (usize, usize), (usize, usize))> = None;
        for i in 0..m {
            let Some(a) = nodes[i].as_ref() else { continue };
            for j in (i + 1)..m {
                let Some(b) = nodes[j].as_ref() else { continue };
                let dist = work[(i, j)];
                let key = if a.min_member < b.min_member {
                    (a.min_member, b.min_member)
                } else {
                    (b.min_member, a.min_member)
                };
                let cand = (dist, key, (i, j));
                if best
                    .as_ref()
                    .map(|cur| (cand.0, cand.1) < (cur.0, cur.1))
                    .unwrap_or(true)
                {
                    best = Some(cand);
                }
            }
        }
        let (dist, _, (i, j)) = best.expect("at least one active pair");
        let (na, nb) = (
            nodes[i].as_ref().unwrap().size,
            nodes[j].as_ref().unwrap().size,
        );

        // Lance-Williams update of every surviving distance
        for c in 0..m {
            if c == i || c == j || nodes[c].is_none() {
                continue;
            }
            let nc = nodes[c].as_ref().unwrap().size;
            let updated =
                ((na + nc) * work[(i, c)] + (nb + nc) * work[(j, c)] - nc * work[(i, j)])
                    / (na + nb + nc);
            work[(i, c)] = updated;
            work[(c, i)] = updated;
        }

        let a = nodes[i].take().unwrap();
        let b = nodes[j].take().unwrap();
        let (left, right) = if a.min_member < b.min_member {
            (a.id, b.id)
        } else {
            (b.id, a.id)
        };
        let new_cluster = m + step;
        let height = match variant {
            WardVariant::D => dist,
            WardVariant::D2 => dist.max(0.0).sqrt(),
        };
        steps.push(MergeStep {
            step,
            left,
            right,
            new_cluster,
            training_error_after: None,
            linkage_height: Some(height),
        });
        nodes[i] = Some(WardNode {
            id: new_cluster,
            size: a.size + b.size,
            min_member: a.min_member.min(b.min_member),
        });
    }
    Ok(MergeTrace {
        m,
        method: Method::Rcm,
        steps,
    })
}

/// Incremental partition state used to replay a merge order: keeps per-model
/// coefficients and per-cluster fit summaries, refitting only the merged
/// cluster at each step.
pub struct ReplayState {
    coefficients: Vec<DVector<f64>>,
    members: BTreeMap<usize, Vec<usize>>,
    cluster_rss: BTreeMap<usize, f64>,
    cluster_resp_norm2: BTreeMap<usize, f64>,
}

impl ReplayState {
    /// All-singleton state: one fit per model.
    pub fn new(collection: &ModelCollection) -> Result<Self> {
        let fits: Vec<Result<_>> = collection
            .problems()
            .par_iter()
            .map(|prob| {
                let fit = ridgeless_fit(&prob.design, &prob.response)?;
                Ok((fit, prob.response.norm_squared()))
            })
            .collect();
        let mut coefficients = Vec::with_capacity(collection.m());
        let mut cluster_rss = BTreeMap::new();
        let mut cluster_resp_norm2 = BTreeMap::new();
        for (idx, item) in fits.into_iter().enumerate() {
            let (fit, resp_norm2) = item?;
            coefficients.push(fit.coefficients);
            cluster_rss.insert(idx + 1, fit.residual_sum_squares);
            cluster_resp_norm2.insert(idx + 1, resp_norm2);
        }
        Ok(Self {
            coefficients,
            members: (1..=collection.m()).map(|id| (id, vec![id])).collect(),
            cluster_rss,
            cluster_resp_norm2,
        })
    }

    /// Merge two active clusters and refit the union.
    pub fn apply(
        &mut self,
        collection: &ModelCollection,
        left: usize,
        right: usize,
        new_cluster: usize,
    ) -> Result<()> {
        let left_members = self
            .members
            .remove(&left)
            .ok_or_else(|| Error::contract("replay", format!("unknown cluster id {left}")))?;
        let right_members = self
            .members
            .remove(&right)
            .ok_or_else(|| Error::contract("replay", format!("unknown cluster id {right}")))?;
        self.cluster_rss.remove(&left);
        self.cluster_rss.remove(&right);
        self.cluster_resp_norm2.remove(&left);
        self.cluster_resp_norm2.remove(&right);
        let mut union = left_members;
        union.extend(right_members);
        union.sort_unstable();

        let (design, response) = aggregate_design(collection, &union)?;
        let fit = ridgeless_fit(&design, &response)?;
        for (id, block) in split_coefficients(&fit.coefficients, &union, collection.p()) {
            self.coefficients[id - 1] = block;
        }
        self.cluster_rss.insert(new_cluster, fit.residual_sum_squares);
        self.cluster_resp_norm2.insert(new_cluster, response.norm_squared());
        self.members.insert(new_cluster, union);
        Ok(())
    }

    /// Canonical aggregate training error of the current partition.
    pub fn training_error(&self, collection: &ModelCollection) -> f64 {
        aggregate_residual(collection, &self.coefficients).norm_squared()
    }

    pub fn coefficients(&self) -> &[DVector<f64>] {
        &self.coefficients
    }

    pub fn max_cluster_size(&self) -> usize {
        self.members.values().map(Vec::len).max().unwrap_or(0)
    }

    /// True when some cluster has at least as many parameters as observations
    /// and its own aggregate fit is an interpolation (near-zero RSS).
    pub fn has_interpolating_cluster(&self, collection: &ModelCollection) -> bool {
        let n = collection.n();
        let p = collection.p();
        self.members.iter().any(|(id, members)| {
            members.len() * p >= n && {
                let rss = self.cluster_rss[id];
                let scale = self.cluster_resp_norm2[id].max(1.0);
                rss <= 1e-8 * scale
            }
        })
    }
}

/// Fill the per-step training errors of a trace by replaying its merges.
pub fn fill_training_errors(trace: &mut MergeTrace, collection: &ModelCollection) -> Result<()> {
    let mut state = ReplayState::new(collection)?;
    for step in &mut trace.steps {
        state.apply(collection, step.left, step.right, step.new_cluster)?;
        step.training_error_after = Some(state.training_error(collection));
    }
    Ok(())
}

struct PairFit {
    members: Vec<usize>,
    coefficients: DVector<f64>,
    /// Sum of the union's per-model residuals, ascending model id.
    resid_sum: DVector<f64>,
    rss: f64,
    resp_norm2: f64,
}

fn eval_pair(collection: &ModelCollection, a: &[usize], b: &[usize]) -> Option<PairFit> {
    let mut union: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
    union.sort_unstable();
    let (design, response) = aggregate_design(collection, &union).ok()?;
    match ridgeless_fit(&design, &response) {
        Ok(fit) => {
            let mut resid_sum = DVector::zeros(collection.n());
            for (id, block) in split_coefficients(&fit.coefficients, &union, collection.p()) {
                let prob = collection.problem(id);
                resid_sum += &prob.response - &prob.design * &block;
            }
            Some(PairFit {
                members: union,
                coefficients: fit.coefficients,
                resid_sum,
                rss: fit.residual_sum_squares,
                resp_norm2: response.norm_squared(),
            })
        }
        Err(err) => {
            log::warn!("skipping candidate merge of {a:?} and {b:?}: {err}");
            None
        }
    }
}

struct TemCluster {
    members: Vec<usize>,
    /// Sum of the members' current residuals, ascending model id.
    resid_sum: DVector<f64>,
}

/// Greedy training-error-minimizing agglomeration.
///
/// At each step every surviving cluster pair is scored by the total aggregate
/// training error the merge would leave behind; the best pair merges, with
/// ties broken by the smallest `(left min member, right min member)`. A
/// candidate pair's merged fit is computed once and cached while both
/// clusters survive, so a full trace costs `O(M²)` fits instead of the
/// naive `O(M³)`. Candidate evaluations run in parallel; the trace is
/// identical for any worker count.
pub fn tem_cluster(collection: &ModelCollection) -> Result<MergeTrace> {
    let m = collection.m();
    if m < 2 {
        return Err(Error::contract("tem_cluster", "need at least two models"));
    }

    // singleton fits
    let mut state = ReplayState::new(collection)?;
    let mut clusters: BTreeMap<usize, TemCluster> = BTreeMap::new();
    for id in 1..=m {
        let prob = collection.problem(id);
        let resid = &prob.response - &prob.design * &state.coefficients()[id - 1];
        clusters.insert(
            id,
            TemCluster {
                members: vec![id],
                resid_sum: resid,
            },
        );
    }

    let mut cache: HashMap<(usize, usize), Option<PairFit>> = HashMap::new();
    let mut pending: Vec<(usize, usize)> = Vec::new();
    for i in 1..=m {
        for j in (i + 1)..=m {
            pending.push((i, j));
        }
    }

    let mut steps = Vec::with_capacity(m - 1);
    for step in 1..=(m - 1) {
        // evaluate pairs not yet cached
        let jobs: Vec<((usize, usize), Vec<usize>, Vec<usize>)> = pending
            .drain(..)
            .map(|(a, b)| {
                (
                    (a, b),
                    clusters[&a].members.clone(),
                    clusters[&b].members.clone(),
                )
            })
            .collect();
        let evals: Vec<((usize, usize), Option<PairFit>)> = jobs
            .into_par_iter()
            .map(|(key, a, b)| (key, eval_pair(collection, &a, &b)))
            .collect();
        cache.extend(evals);

        // total residual of the current partition, canonical model order
        let r_total = aggregate_residual(collection, state.coefficients());

        // pick the candidate minimizing the post-merge total error
        let mut best: Option<(f64, (usize, usize), (usize, usize))> = None;
        for (&(a, b), fit) in &cache {
            let Some(fit) = fit else { continue };
            let cand_resid =
                &r_total - &clusters[&a].resid_sum - &clusters[&b].resid_sum + &fit.resid_sum;
            let value = cand_resid.norm_squared();
            let (min_a, min_b) = (clusters[&a].members[0], clusters[&b].members[0]);
            let key = if min_a < min_b {
                (min_a, min_b)
            } else {
                (min_b, min_a)
            };
            if best
                .as_ref()
                .map(|cur| (value, key) < (cur.0, cur.1))
                .unwrap_or(true)
            {
                best = Some((value, key, (a, b)));
            }
        }
        let Some((_, _, (a, b))) = best else {
            return Err(Error::Numerical(
                "every candidate merge failed to fit".into(),
            ));
        };

        let fit = cache
            .remove(&(a, b))
            .flatten()
            .expect("selected pair is cached");
        let new_cluster = m + step;
        let (left, right) = if clusters[&a].members[0] < clusters[&b].members[0] {
            (a, b)
        } else {
            (b, a)
        };

        // commit the merge to the replay state without refitting
        for (id, block) in split_coefficients(&fit.coefficients, &fit.members, collection.p()) {
            state.coefficients[id - 1] = block;
        }
        state.members.remove(&a);
        state.members.remove(&b);
        state.cluster_rss.remove(&a);
        state.cluster_rss.remove(&b);
        state.cluster_resp_norm2.remove(&a);
        state.cluster_resp_norm2.remove(&b);
        state.members.insert(new_cluster, fit.members.clone());
        state.cluster_rss.insert(new_cluster, fit.rss);
        state.cluster_resp_norm2.insert(new_cluster, fit.resp_norm2);

        clusters.remove(&a);
        clusters.remove(&b);
        cache.retain(|&(x, y), _| x != a && x != b && y != a && y != b);
        for &other in clusters.keys() {
            pending.push((other.min(new_cluster), other.max(new_cluster)));
        }
        clusters.insert(
            new_cluster,
            TemCluster {
                members: fit.members,
                resid_sum: fit.resid_sum,
            },
        );

        steps.push(MergeStep {
            step,
            left,
            right,
            new_cluster,
            training_error_after: Some(state.training_error(collection)),
            linkage_height: None,
        });
    }

    Ok(MergeTrace {
        m,
        method: Method::Tem,
        steps,
    })
}

/// Residual-correlation clustering: individual fits, Pearson correlations of
/// their residuals, Ward linkage on `1 − r`, then training errors filled by
/// replaying the merges.
pub fn rcm_cluster(collection: &ModelCollection) -> Result<MergeTrace> {
    rcm_cluster_with(collection, WardVariant::D)
}

/// [`rcm_cluster`] with an explicit Ward convention.
pub fn rcm_cluster_with(collection: &ModelCollection, variant: WardVariant) -> Result<MergeTrace> {
    if collection.m() < 2 {
        return Err(Error::contract("rcm_cluster", "need at least two models"));
    }
    let residuals = crate::model::residual_vectors(collection)?;
    let corr = residual_correlation(&residuals)?;
    let dissim = DissimilarityMatrix::from_correlation(&corr)?;
    let mut trace = ward_linkage(&dissim, variant)?;
    fill_training_errors(&mut trace, collection)?;
    Ok(trace)
}

/// Render a trace as a tidy parent/child table (two rows per merge) with
/// columns `step,parent,child,height,train_mse`.
pub fn dendrogram_table(trace: &MergeTrace, n_obs: usize) -> String {
    let mut out = String::from("step,parent,child,height,train_mse\n");
    for step in &trace.steps {
        let height = step
            .linkage_height
            .map(|h| format!("{h:.16e}"))
            .unwrap_or_default();
        let mse = step
            .training_error_after
            .map(|e| format!("{:.16e}", e / n_obs as f64))
            .unwrap_or_default();
        for child in [step.left, step.right] {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                step.step, step.new_cluster, child, height, mse
            );
        }
    }
    out
}
