//! Closed-form expected-error expressions for merging two of three regression
//! models, and Monte Carlo estimators that check them empirically.
//!
//! The setting: three true models `y_m = X_m β_m + W_m θ_m + ε_m` whose
//! fitted counterparts omit the latent term `W_m θ_m`. Merging models 1 and 2
//! fits one regression on the column-concatenated design; the closed forms
//! below give the expected change this causes in the aggregate training and
//! test errors, as functions of the error cross-covariances, the latent
//! coefficient vectors and the projection matrices of the designs. Every
//! compared statistic is invariant to the observed-design mean term
//! `X_m β_m`, so the simulators set it to zero.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hat_matrix, psd_factor, ridgeless_fit, trace_product};
use crate::rng::{stream, Role};

/// A fixed three-model problem: designs, latent coefficients, latent-predictor
/// covariances and the error cross-covariance blocks `Σ_{mm'} = E[ε_m ε_{m'}ᵀ]`.
///
/// Projectors for the individual designs and for the concatenation of the
/// first two are computed at construction; all designs must have full column
/// rank.
pub struct ThreeModelInstance {
    designs: [DMatrix<f64>; 3],
    thetas: [DVector<f64>; 3],
    sigma_w: [DMatrix<f64>; 3],
    sigma: [[DMatrix<f64>; 3]; 3],
    /// `σ_{mm'}` when every block is a multiple of the identity.
    scalar_sigma: Option<[[f64; 3]; 3]>,
    hats: [DMatrix<f64>; 3],
    hat_joint: DMatrix<f64>,
    joint_design: DMatrix<f64>,
    error_factor: DMatrix<f64>,
    latent_factors: [DMatrix<f64>; 3],
}

impl ThreeModelInstance {
    /// General constructor with explicit covariance blocks.
    /// `sigma[m][m']` must equal `sigma[m'][m]ᵀ` and the assembled joint
    /// covariance must be positive semidefinite.
    pub fn new(
        designs: [DMatrix<f64>; 3],
        thetas: [DVector<f64>; 3],
        sigma_w: [DMatrix<f64>; 3],
        sigma: [[DMatrix<f64>; 3]; 3],
    ) -> Result<Self> {
        Self::build(designs, thetas, sigma_w, sigma, None)
    }

    /// Covariance blocks `σ_{mm'} · I_n` from a 3×3 scalar matrix.
    pub fn with_scalar_covariance(
        designs: [DMatrix<f64>; 3],
        thetas: [DVector<f64>; 3],
        sigma_w: [DMatrix<f64>; 3],
        scale: [[f64; 3]; 3],
    ) -> Result<Self> {
        let n = designs[0].nrows();
        let eye = DMatrix::<f64>::identity(n, n);
        let sigma = std::array::from_fn(|m| std::array::from_fn(|m2| &eye * scale[m][m2]));
        Self::build(designs, thetas, sigma_w, sigma, Some(scale))
    }

    /// Covariance blocks `σ_{mm'} · K` for a shared symmetric kernel `K`
    /// over observations.
    pub fn with_kernel_covariance(
        designs: [DMatrix<f64>; 3],
        thetas: [DVector<f64>; 3],
        sigma_w: [DMatrix<f64>; 3],
        scale: [[f64; 3]; 3],
        kernel: DMatrix<f64>,
    ) -> Result<Self> {
        let n = designs[0].nrows();
        if kernel.nrows() != n || kernel.ncols() != n {
            return Err(Error::dimension(
                "ThreeModelInstance",
                format!("kernel must be {n}x{n}"),
            ));
        }
        let is_identity = kernel == DMatrix::<f64>::identity(n, n);
        let sigma = std::array::from_fn(|m| std::array::from_fn(|m2| &kernel * scale[m][m2]));
        Self::build(
            designs,
            thetas,
            sigma_w,
            sigma,
            is_identity.then_some(scale),
        )
    }

    fn build(
        designs: [DMatrix<f64>; 3],
        thetas: [DVector<f64>; 3],
        sigma_w: [DMatrix<f64>; 3],
        sigma: [[DMatrix<f64>; 3]; 3],
        scalar_sigma: Option<[[f64; 3]; 3]>,
    ) -> Result<Self> {
        let n = designs[0].nrows();
        let p = designs[0].ncols();
        let q = thetas[0].len();
        for m in 0..3 {
            if designs[m].nrows() != n || designs[m].ncols() != p {
                return Err(Error::dimension(
                    "ThreeModelInstance",
                    format!("design {} must be {n}x{p}", m + 1),
                ));
            }
            if thetas[m].len() != q {
                return Err(Error::dimension(
                    "ThreeModelInstance",
                    format!("theta {} must have length {q}", m + 1),
                ));
            }
            if sigma_w[m].nrows() != q || sigma_w[m].ncols() != q {
                return Err(Error::dimension(
                    "ThreeModelInstance",
                    format!("latent covariance {} must be {q}x{q}", m + 1),
                ));
            }
            for m2 in 0..3 {
                if sigma[m][m2].nrows() != n || sigma[m][m2].ncols() != n {
                    return Err(Error::dimension(
                        "ThreeModelInstance",
                        format!("covariance block ({},{}) must be {n}x{n}", m + 1, m2 + 1),
                    ));
                }
                let asym = (&sigma[m][m2] - sigma[m2][m].transpose()).amax();
                if asym > 1e-10 * sigma[m][m2].amax().max(1.0) {
                    return Err(Error::Data(format!(
                        "covariance blocks ({},{}) and ({},{}) are not transposes",
                        m + 1,
                        m2 + 1,
                        m2 + 1,
                        m + 1
                    )));
                }
            }
        }

        let mut joint = DMatrix::zeros(3 * n, 3 * n);
        for m in 0..3 {
            for m2 in 0..3 {
                joint.view_mut((m * n, m2 * n), (n, n)).copy_from(&sigma[m][m2]);
            }
        }
        let error_factor = psd_factor(&joint, "joint error covariance")?;
        let latent_factors = [
            psd_factor(&sigma_w[0], "latent covariance 1")?,
            psd_factor(&sigma_w[1], "latent covariance 2")?,
            psd_factor(&sigma_w[2], "latent covariance 3")?,
        ];

        let hats = [
            hat_matrix(&designs[0])?,
            hat_matrix(&designs[1])?,
            hat_matrix(&designs[2])?,
        ];
        let mut joint_design = DMatrix::zeros(n, 2 * p);
        joint_design.view_mut((0, 0), (n, p)).copy_from(&designs[0]);
        joint_design.view_mut((0, p), (n, p)).copy_from(&designs[1]);
        let hat_joint = hat_matrix(&joint_design)?;

        Ok(Self {
            designs,
            thetas,
            sigma_w,
            sigma,
            scalar_sigma,
            hats,
            hat_joint,
            joint_design,
            error_factor,
            latent_factors,
        })
    }

    pub fn n(&self) -> usize {
        self.designs[0].nrows()
    }

    pub fn p(&self) -> usize {
        self.designs[0].ncols()
    }

    pub fn q(&self) -> usize {
        self.thetas[0].len()
    }

    pub fn design(&self, m: usize) -> &DMatrix<f64> {
        &self.designs[m - 1]
    }

    pub fn theta(&self, m: usize) -> &DVector<f64> {
        &self.thetas[m - 1]
    }

    pub fn hat(&self, m: usize) -> &DMatrix<f64> {
        &self.hats[m - 1]
    }

    /// Projector of the concatenated design of models 1 and 2.
    pub fn hat_joint(&self) -> &DMatrix<f64> {
        &self.hat_joint
    }

    pub fn sigma_block(&self, m: usize, m2: usize) -> &DMatrix<f64> {
        &self.sigma[m - 1][m2 - 1]
    }

    /// Draw one joint error realization `(ε_1, ε_2, ε_3)`.
    pub fn sample_errors<R: Rng>(&self, rng: &mut R) -> [DVector<f64>; 3] {
        let n = self.n();
        let z = DVector::from_fn(3 * n, |_, _| rng.sample(StandardNormal));
        let e = &self.error_factor * z;
        std::array::from_fn(|m| DVector::from(e.rows(m * n, n).clone_owned()))
    }

    /// Draw the latent predictor matrices `(W_1, W_2, W_3)`, rows i.i.d.
    /// zero-mean Gaussian with the instance's latent covariances.
    pub fn sample_latent<R: Rng>(&self, rng: &mut R) -> [DMatrix<f64>; 3] {
        let (n, q) = (self.n(), self.q());
        std::array::from_fn(|m| {
            let mut w = DMatrix::zeros(n, q);
            for i in 0..n {
                let z = DVector::from_fn(q, |_, _| rng.sample(StandardNormal));
                let row = &self.latent_factors[m] * z;
                for j in 0..q {
                    w[(i, j)] = row[j];
                }
            }
            w
        })
    }

    /// Responses `W_m θ_m + ε_m` (the mean term is irrelevant to every error
    /// statistic compared here and is omitted).
    pub fn responses(&self, w: &[DMatrix<f64>; 3], eps: &[DVector<f64>; 3]) -> [DVector<f64>; 3] {
        std::array::from_fn(|m| &w[m] * &self.thetas[m] + &eps[m])
    }
}

/// Expected inner product between the held-out third model's residual and the
/// shift in the first two models' aggregate fitted values caused by merging
/// them, marginalized over the latent predictors:
/// `Tr{(I−H₃)(H₁−H)Σ₁₃} + Tr{(I−H₃)(H₂−H)Σ₂₃}`.
///
/// Nonpositive whenever both cross-covariances are entrywise nonnegative.
pub fn expected_cross_term(inst: &ThreeModelInstance) -> f64 {
    let n = inst.n();
    let i_minus_h3 = DMatrix::<f64>::identity(n, n) - inst.hat(3);
    let a = &i_minus_h3 * (inst.hat(1) - inst.hat_joint());
    let b = &i_minus_h3 * (inst.hat(2) - inst.hat_joint());
    trace_product(&a, inst.sigma_block(1, 3)) + trace_product(&b, inst.sigma_block(2, 3))
}

/// Conditional version of [`expected_cross_term`] for fixed latent draws:
/// adds the two `(W₃θ₃)ᵀ(I−H₃)(H_m−H)(W_mθ_m)` coupling terms.
pub fn expected_cross_term_given_latent(
    inst: &ThreeModelInstance,
    w: &[DMatrix<f64>; 3],
) -> f64 {
    let n = inst.n();
    let i_minus_h3 = DMatrix::<f64>::identity(n, n) - inst.hat(3);
    let v3 = &i_minus_h3 * (&w[2] * inst.theta(3));
    let v1 = (inst.hat(1) - inst.hat_joint()) * (&w[0] * inst.theta(1));
    let v2 = (inst.hat(2) - inst.hat_joint()) * (&w[1] * inst.theta(2));
    expected_cross_term(inst) + v3.dot(&v1) + v3.dot(&v2)
}

fn bias_part(inst: &ThreeModelInstance) -> f64 {
    let p = inst.p() as f64;
    let t1 = inst.theta(1);
    let t2 = inst.theta(2);
    -p * (t1.dot(&(&inst.sigma_w[0] * t1))) - p * (t2.dot(&(&inst.sigma_w[1] * t2)))
}

/// Expected aggregate test error of the merged fit minus that of the
/// individual fits, with test predictors equal to training predictors and the
/// latent predictors marginalized out:
/// five trace terms in the error covariances minus `p·θ_mᵀ Σ_{W_m} θ_m` for
/// models 1 and 2.
pub fn expected_test_error_diff(inst: &ThreeModelInstance) -> f64 {
    let h = inst.hat_joint();
    let h1 = inst.hat(1);
    let h2 = inst.hat(2);
    let h3 = inst.hat(3);
    let t = trace_product(&(h - h1), inst.sigma_block(1, 1))
        + trace_product(&(h - h2), inst.sigma_block(2, 2))
        + 2.0 * trace_product(&(h - h1 * h2), inst.sigma_block(1, 2))
        + 2.0 * trace_product(&((h - h1) * h3), inst.sigma_block(1, 3))
        + 2.0 * trace_product(&((h - h2) * h3), inst.sigma_block(2, 3));
    t + bias_part(inst)
}

/// Conditional version of [`expected_test_error_diff`] for fixed latent
/// draws: the same trace terms plus the exact latent quadratic forms.
pub fn expected_test_error_diff_given_latent(
    inst: &ThreeModelInstance,
    w: &[DMatrix<f64>; 3],
) -> f64 {
    let n = inst.n();
    let eye = DMatrix::<f64>::identity(n, n);
    let h = inst.hat_joint();
    let h1 = inst.hat(1);
    let h2 = inst.hat(2);
    let h3 = inst.hat(3);
    let t = trace_product(&(h - h1), inst.sigma_block(1, 1))
        + trace_product(&(h - h2), inst.sigma_block(2, 2))
        + 2.0 * trace_product(&(h - h1 * h2), inst.sigma_block(1, 2))
        + 2.0 * trace_product(&((h - h1) * h3), inst.sigma_block(1, 3))
        + 2.0 * trace_product(&((h - h2) * h3), inst.sigma_block(2, 3));

    let g1 = &w[0] * inst.theta(1);
    let g2 = &w[1] * inst.theta(2);
    let g3 = &w[2] * inst.theta(3);
    let i_h = &eye - h;
    let i_h1 = &eye - h1;
    let i_h2 = &eye - h2;
    let i_h3 = &eye - h3;

    let latent = (&i_h * &g1).norm_squared() - (&i_h1 * &g1).norm_squared()
        + (&i_h * &g2).norm_squared()
        - (&i_h2 * &g2).norm_squared()
        + 2.0 * g1.dot(&(&i_h * &g2))
        - 2.0 * (&i_h1 * &g1).dot(&(&i_h2 * &g2))
        + 2.0 * (&i_h3 * &g3).dot(&((h1 - h) * &g1))
        + 2.0 * (&i_h3 * &g3).dot(&((h2 - h) * &g2));
    t + latent
}

/// Expected aggregate training error of the merged fit minus that of the
/// individual fits (a two-model quantity; the third model plays no role):
/// `Tr{(H₁−H)Σ₁₁} + Tr{(H₂−H)Σ₂₂} + 2Tr{(H₁+H₂−H−H₁H₂)Σ₁₂}` plus the
/// same bias terms as the test-error difference.
pub fn expected_train_error_diff(inst: &ThreeModelInstance) -> f64 {
    let h = inst.hat_joint();
    let h1 = inst.hat(1);
    let h2 = inst.hat(2);
    let t = trace_product(&(h1 - h), inst.sigma_block(1, 1))
        + trace_product(&(h2 - h), inst.sigma_block(2, 2))
        + 2.0 * trace_product(&(h1 + h2 - h - h1 * h2), inst.sigma_block(1, 2));
    t + bias_part(inst)
}

/// Specialized training-error difference for `Σ_{mm'} = σ_{mm'} I`:
/// `−pσ₁₁ − pσ₂₂ − 2Tr(H₁H₂)σ₁₂` plus the bias terms. Returns `None` when
/// the instance's covariance is not of that form. Kept as an independent
/// algebraic route from [`expected_train_error_diff`].
pub fn expected_train_error_diff_scalar_form(inst: &ThreeModelInstance) -> Option<f64> {
    let s = inst.scalar_sigma?;
    let p = inst.p() as f64;
    let tr_h1h2 = trace_product(inst.hat(1), inst.hat(2));
    Some(-p * s[0][0] - p * s[1][1] - 2.0 * tr_h1h2 * s[0][1] + bias_part(inst))
}

/// A closed-form value next to its Monte Carlo estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpectationReport {
    pub closed_form: f64,
    pub mc_mean: f64,
    pub mc_se: f64,
    pub replicates: usize,
    pub z_score: f64,
}

impl ExpectationReport {
    pub fn from_samples(closed_form: f64, samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::contract("ExpectationReport", "need at least two replicates"));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        let z_score = if se > 0.0 {
            (mean - closed_form) / se
        } else if mean == closed_form {
            0.0
        } else {
            f64::INFINITY * (mean - closed_form).signum()
        };
        Ok(Self {
            closed_form,
            mc_mean: mean,
            mc_se: se,
            replicates: n,
            z_score,
        })
    }
}

/// Which realized error difference a Monte Carlo run estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffKind {
    Train,
    Test,
}

struct ReplicateOutcome {
    train_diff: f64,
    test_diff: f64,
    cross_term: f64,
}

/// One end-to-end draw: sample `(W, ε, η)`, build responses, fit the merged
/// and the individual models with the production solver, and difference the
/// realized errors.
fn simulate_replicate(inst: &ThreeModelInstance, seed: u64, replicate: u64) -> Result<ReplicateOutcome> {
    let w = inst.sample_latent(&mut stream(seed, replicate, Role::ReplicateLatent));
    let eps = inst.sample_errors(&mut stream(seed, replicate, Role::ReplicateError));
    let eta = inst.sample_errors(&mut stream(seed, replicate, Role::ReplicateTestError));
    let y = inst.responses(&w, &eps);
    let z = inst.responses(&w, &eta);

    let y12 = &y[0] + &y[1];
    let fit12 = ridgeless_fit(&inst.joint_design, &y12)?;
    let fit1 = ridgeless_fit(inst.design(1), &y[0])?;
    let fit2 = ridgeless_fit(inst.design(2), &y[1])?;
    let fit3 = ridgeless_fit(inst.design(3), &y[2])?;

    let pred_joint = &inst.joint_design * &fit12.coefficients;
    let pred_ir = inst.design(1) * &fit1.coefficients + inst.design(2) * &fit2.coefficients;
    let pred3 = inst.design(3) * &fit3.coefficients;

    let train_diff = (&y12 - &pred_joint).norm_squared() - (&y12 - &pred_ir).norm_squared();

    let z_total = &z[0] + &z[1] + &z[2];
    let test_diff = (&z_total - (&pred_joint + &pred3)).norm_squared()
        - (&z_total - (&pred_ir + &pred3)).norm_squared();

    let cross_term = (&y[2] - &pred3).dot(&(&pred_ir - &pred_joint));

    Ok(ReplicateOutcome {
        train_diff,
        test_diff,
        cross_term,
    })
}

fn run_replicates<F>(inst: &ThreeModelInstance, replicates: usize, seed: u64, pick: F) -> Result<Vec<f64>>
where
    F: Fn(&ReplicateOutcome) -> f64 + Sync,
{
    let outcomes: Vec<Result<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| simulate_replicate(inst, seed, rep).map(|o| pick(&o)))
        .collect();
    outcomes.into_iter().collect()
}

/// Monte Carlo estimate of the realized train or test error difference
/// against its closed form. Replicates are independent streams derived from
/// `(seed, replicate)`; the result is identical for any worker count.
pub fn monte_carlo_error_diff(
    inst: &ThreeModelInstance,
    replicates: usize,
    seed: u64,
    kind: DiffKind,
) -> Result<ExpectationReport> {
    if replicates < 100 {
        return Err(Error::contract("monte_carlo_error_diff", "need at least 100 replicates"));
    }
    let closed = match kind {
        DiffKind::Train => expected_train_error_diff(inst),
        DiffKind::Test => expected_test_error_diff(inst),
    };
    let samples = run_replicates(inst, replicates, seed, |o| match kind {
        DiffKind::Train => o.train_diff,
        DiffKind::Test => o.test_diff,
    })?;
    ExpectationReport::from_samples(closed, &samples)
}

/// Monte Carlo estimate of the cross term checked by
/// [`expected_cross_term`], evaluated directly from its definition.
pub fn monte_carlo_cross_term(
    inst: &ThreeModelInstance,
    replicates: usize,
    seed: u64,
) -> Result<ExpectationReport> {
    if replicates < 100 {
        return Err(Error::contract("monte_carlo_cross_term", "need at least 100 replicates"));
    }
    let closed = expected_cross_term(inst);
    let samples = run_replicates(inst, replicates, seed, |o| o.cross_term)?;
    ExpectationReport::from_samples(closed, &samples)
}

/// Result of [`misspecification_bias_check`]: the projector-difference
/// quadratic form and the single-projector intermediate identity.
#[derive(Debug, Clone)]
pub struct BiasCheckReport {
    /// `E[‖(I−H)Wθ‖² − ‖(I−H_m)Wθ‖²]` versus `(Tr H_m − Tr H)·θᵀΣ_W θ`.
    pub difference: ExpectationReport,
    /// `E[‖(I−H_m)Wθ‖²]` versus `Tr(I−H_m)·θᵀΣ_W θ`.
    pub single_projector: ExpectationReport,
}

/// Monte Carlo check of the latent-bias identity: for `W` with i.i.d.
/// zero-mean rows of covariance `Σ_W`, the expected drop in the squared
/// residual projection when the projector grows from `H_m` to `H` equals
/// `(Tr H_m − Tr H)·θᵀΣ_W θ`.
pub fn misspecification_bias_check(
    h_full: &DMatrix<f64>,
    h_sub: &DMatrix<f64>,
    sigma_w: &DMatrix<f64>,
    theta: &DVector<f64>,
    replicates: usize,
    seed: u64,
) -> Result<BiasCheckReport> {
    let n = h_full.nrows();
    if h_full.ncols() != n || h_sub.nrows() != n || h_sub.ncols() != n {
        return Err(Error::dimension(
            "misspecification_bias_check",
            "projectors must be square and same size".to_string(),
        ));
    }
    if replicates < 2 {
        return Err(Error::contract("misspecification_bias_check", "need at least two replicates"));
    }
    let q = theta.len();
    if sigma_w.nrows() != q || sigma_w.ncols() != q {
        return Err(Error::dimension(
            "misspecification_bias_check",
            format!("latent covariance must be {q}x{q}"),
        ));
    }
    let factor = psd_factor(sigma_w, "latent covariance")?;
    let quad = theta.dot(&(sigma_w * theta));
    let closed_diff = (h_sub.trace() - h_full.trace()) * quad;
    let closed_single = (n as f64 - h_sub.trace()) * quad;

    let eye = DMatrix::<f64>::identity(n, n);
    let i_h = &eye - h_full;
    let i_hm = &eye - h_sub;

    let samples: Vec<(f64, f64)> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, rep, Role::BiasCheck);
            let mut w = DMatrix::zeros(n, q);
            for i in 0..n {
                let z = DVector::from_fn(q, |_, _| rng.sample(StandardNormal));
                let row = &factor * z;
                for j in 0..q {
                    w[(i, j)] = row[j];
                }
            }
            let g = w * theta;
            let full = (&i_h * &g).norm_squared();
            let sub = (&i_hm * &g).norm_squared();
            (full - sub, sub)
        })
        .collect();

    let diffs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let subs: Vec<f64> = samples.iter().map(|s| s.1).collect();
    Ok(BiasCheckReport {
        difference: ExpectationReport::from_samples(closed_diff, &diffs)?,
        single_projector: ExpectationReport::from_samples(closed_single, &subs)?,
    })
}

/// Serializable recipe for a seeded [`ThreeModelInstance`]: designs drawn
/// entrywise from `U(0,3)` and latent coefficients from `U(0,1)` unless given
/// explicitly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub version: u32,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub seed: u64,
    /// Cross-model error scale `σ_{mm'}`.
    pub sigma_scale: [[f64; 3]; 3],
    /// Shared observation kernel; `σ_{mm'}·I` when omitted.
    #[serde(default)]
    pub obs_kernel: ObsKernel,
    /// Explicit latent coefficient vectors; drawn from the seed when omitted.
    #[serde(default)]
    pub theta: Option<[Vec<f64>; 3]>,
    /// Explicit latent covariances; identity when omitted.
    #[serde(default)]
    pub sigma_w: Option<[Vec<Vec<f64>>; 3]>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObsKernel {
    #[default]
    Independent,
    Ar1 {
        rho: f64,
    },
}

impl InstanceSpec {
    pub fn build(&self) -> Result<ThreeModelInstance> {
        if self.version != 1 {
            return Err(Error::Config(format!("unsupported instance version {}", self.version)));
        }
        if self.n == 0 || self.p == 0 || self.q == 0 {
            return Err(Error::Config("n, p and q must be positive".into()));
        }
        let designs: [DMatrix<f64>; 3] = std::array::from_fn(|m| {
            let mut rng = stream(self.seed, (m + 1) as u64, Role::TheoryDesign);
            let mut x = DMatrix::zeros(self.n, self.p);
            for i in 0..self.n {
                for j in 0..self.p {
                    x[(i, j)] = rng.random_range(0.0..3.0);
                }
            }
            x
        });
        let thetas: [DVector<f64>; 3] = match &self.theta {
            Some(given) => std::array::from_fn(|m| {
                DVector::from_vec(given[m].clone())
            }),
            None => std::array::from_fn(|m| {
                let mut rng = stream(self.seed, (m + 1) as u64, Role::TheoryTheta);
                DVector::from_fn(self.q, |_, _| rng.random_range(0.0..1.0))
            }),
        };
        for t in &thetas {
            if t.len() != self.q {
                return Err(Error::Config(format!(
                    "explicit theta length {} does not match q = {}",
                    t.len(),
                    self.q
                )));
            }
        }
        let sigma_w: [DMatrix<f64>; 3] = match &self.sigma_w {
            Some(given) => {
                let mut out: Vec<DMatrix<f64>> = Vec::with_capacity(3);
                for rows in given {
                    let r = rows.len();
                    if r != self.q || rows.iter().any(|row| row.len() != self.q) {
                        return Err(Error::Config(format!("sigma_w blocks must be {0}x{0}", self.q)));
                    }
                    out.push(DMatrix::from_fn(r, r, |i, j| rows[i][j]));
                }
                [out[0].clone(), out[1].clone(), out[2].clone()]
            }
            None => std::array::from_fn(|_| DMatrix::identity(self.q, self.q)),
        };
        match &self.obs_kernel {
            ObsKernel::Independent => ThreeModelInstance::with_scalar_covariance(
                designs,
                thetas,
                sigma_w,
                self.sigma_scale,
            ),
            ObsKernel::Ar1 { rho } => {
                let kernel = DMatrix::from_fn(self.n, self.n, |i, j| {
                    rho.powi((i as i32 - j as i32).abs())
                });
                ThreeModelInstance::with_kernel_covariance(
                    designs,
                    thetas,
                    sigma_w,
                    self.sigma_scale,
                    kernel,
                )
            }
        }
    }
}
