//! Seeded synthetic-data generation.
//!
//! Datasets follow the latent-term model `y_m = X_m β_m + W_m θ_m + ε_m`
//! (the latent part is dropped when `misspecified` is off). Design and latent
//! predictor entries are i.i.d. `U(0, 3)`, coefficient entries i.i.d.
//! `U(0, 1)`, and the errors are jointly Gaussian: each observation carries an
//! `M`-vector with covariance `σ² R`, independent across observations, where
//! `R` comes from the configured cross-model structure. Test data use fresh
//! predictors and errors drawn from the same laws (configurable to share the
//! training predictors instead).
//!
//! Reproducibility: every array is drawn from a ChaCha8 stream keyed by
//! `(seed, model_id, role)` (see [`crate::rng`]), drawn in row-major order,
//! so `(seed, config)` fully determines the dataset regardless of scheduling.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::psd_factor;
use crate::model::{ModelCollection, RegressionProblem};
use crate::rng::{stream, Role};

/// Cross-model error correlation structure. The induced `M×M` matrix must be
/// symmetric positive semidefinite; this is validated at use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CovarianceKind {
    /// `R_{mm'} = ρ^{|m−m'|}`.
    Ar1 { rho: f64 },
    /// Unit diagonal, constant off-diagonal.
    Exchangeable { off_diag: f64 },
    /// Identity.
    Independent,
    /// Block-diagonal with equal-sized blocks of
    /// `within · 11ᵀ + diag_boost · I` (diagonal `within + diag_boost`).
    BlockExchangeable {
        blocks: usize,
        within: f64,
        diag_boost: f64,
    },
    /// Explicit `M×M` matrix, row by row.
    Explicit { matrix: Vec<Vec<f64>> },
}

/// Error covariance specification: per-observation cross-model covariance
/// `σ² R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceSpec {
    pub kind: CovarianceKind,
    pub sigma2: f64,
}

impl CovarianceSpec {
    /// The induced `M×M` correlation matrix `R` (unit scale, no `σ²`).
    pub fn correlation_matrix(&self, m: usize) -> Result<DMatrix<f64>> {
        if m == 0 {
            return Err(Error::contract("CovarianceSpec", "m must be positive"));
        }
        let r = match &self.kind {
            CovarianceKind::Ar1 { rho } => {
                if rho.abs() >= 1.0 {
                    return Err(Error::Config(format!("ar1 rho {rho} must lie in (-1, 1)")));
                }
                DMatrix::from_fn(m, m, |i, j| rho.powi((i as i32 - j as i32).abs()))
            }
            CovarianceKind::Exchangeable { off_diag } => {
                DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { *off_diag })
            }
            CovarianceKind::Independent => DMatrix::identity(m, m),
            CovarianceKind::BlockExchangeable {
                blocks,
                within,
                diag_boost,
            } => {
                if *blocks == 0 || m % blocks != 0 {
                    return Err(Error::Config(format!(
                        "block covariance needs M divisible by blocks; got M = {m}, blocks = {blocks}"
                    )));
                }
                let size = m / blocks;
                DMatrix::from_fn(m, m, |i, j| {
                    if i / size != j / size {
                        0.0
                    } else if i == j {
                        within + diag_boost
                    } else {
                        *within
                    }
                })
            }
            CovarianceKind::Explicit { matrix } => {
                if matrix.len() != m || matrix.iter().any(|row| row.len() != m) {
                    return Err(Error::Config(format!("explicit covariance must be {m}x{m}")));
                }
                DMatrix::from_fn(m, m, |i, j| matrix[i][j])
            }
        };
        Ok(r)
    }

    /// Factor `B` with `B Bᵀ = σ² R`; fails when the induced matrix is not
    /// positive semidefinite.
    pub fn factor(&self, m: usize) -> Result<DMatrix<f64>> {
        if !(self.sigma2 >= 0.0) {
            return Err(Error::Config(format!("sigma2 {} must be nonnegative", self.sigma2)));
        }
        let r = self.correlation_matrix(m)?;
        psd_factor(&(r * self.sigma2), "error covariance")
    }
}

/// How test-set predictors relate to the training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestPredictors {
    /// Fresh draws from the predictor law.
    #[default]
    Fresh,
    /// Reuse the training designs (and latent predictors).
    Shared,
}

/// Full recipe for one synthetic dataset. Predictor entries are `U(0, 3)` and
/// coefficient entries `U(0, 1)`; these laws are fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub version: u32,
    pub n: usize,
    pub n_test: usize,
    pub p: usize,
    /// Latent predictor count; used only when `misspecified` is on.
    pub q: usize,
    pub m: usize,
    pub covariance: CovarianceSpec,
    pub misspecified: bool,
    pub seed: u64,
    #[serde(default)]
    pub test_predictors: TestPredictors,
    /// In `fresh` mode, keep the training latent predictors for the test set
    /// instead of redrawing them.
    #[serde(default)]
    pub freeze_test_w: bool,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.version != 1 {
            return Err(Error::Config(format!("unsupported config version {}", self.version)));
        }
        if self.n == 0 || self.n_test == 0 || self.p == 0 {
            return Err(Error::Config("n, n_test and p must be positive".into()));
        }
        if self.m < 2 {
            return Err(Error::Config("m must be at least 2".into()));
        }
        if self.misspecified && self.q == 0 {
            return Err(Error::Config("misspecified model needs q >= 1".into()));
        }
        Ok(())
    }

    /// Same configuration with another seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c
    }
}

/// A generated dataset: training collection, per-model test data, and the
/// ground truth that produced them.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub train: ModelCollection,
    pub test_designs: Vec<DMatrix<f64>>,
    pub test_responses: Vec<DVector<f64>>,
    pub beta: Vec<DVector<f64>>,
    /// Latent coefficients; empty when the model is correctly specified.
    pub theta: Vec<DVector<f64>>,
    pub w_train: Vec<DMatrix<f64>>,
    pub w_test: Vec<DMatrix<f64>>,
    pub config: SynthConfig,
}

fn uniform_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, hi: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.random_range(0.0..hi);
        }
    }
    m
}

fn uniform_vector<R: Rng>(rng: &mut R, len: usize, hi: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(0.0..hi))
}

/// Draw per-model error vectors: observation `i` carries an `M`-vector
/// `B z_i` with `z_i` standard normal, so the cross-model covariance per
/// observation is `B Bᵀ = σ² R`.
fn draw_errors<R: Rng>(rng: &mut R, factor: &DMatrix<f64>, n: usize, m: usize) -> Vec<DVector<f64>> {
    let mut errors = vec![DVector::zeros(n); m];
    for i in 0..n {
        let z = DVector::from_fn(m, |_, _| rng.sample(StandardNormal));
        let e = factor * z;
        for (j, err) in errors.iter_mut().enumerate() {
            err[i] = e[j];
        }
    }
    errors
}

/// Generate a dataset; `(seed, config)` fully determines every array.
pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let m = config.m;
    let factor = config.covariance.factor(m)?;
    let seed = config.seed;

    let mut designs = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut theta = Vec::with_capacity(m);
    let mut w_train = Vec::with_capacity(m);
    let mut test_designs = Vec::with_capacity(m);
    let mut w_test = Vec::with_capacity(m);

    for id in 1..=m as u64 {
        designs.push(uniform_matrix(
            &mut stream(seed, id, Role::TrainDesign),
            config.n,
            config.p,
            3.0,
        ));
        beta.push(uniform_vector(
            &mut stream(seed, id, Role::Coefficients),
            config.p,
            1.0,
        ));
        if config.misspecified {
            w_train.push(uniform_matrix(
                &mut stream(seed, id, Role::TrainLatent),
                config.n,
                config.q,
                3.0,
            ));
            theta.push(uniform_vector(
                &mut stream(seed, id, Role::LatentCoefficients),
                config.q,
                1.0,
            ));
        }
        match config.test_predictors {
            TestPredictors::Fresh => {
                test_designs.push(uniform_matrix(
                    &mut stream(seed, id, Role::TestDesign),
                    config.n_test,
                    config.p,
                    3.0,
                ));
                if config.misspecified {
                    if config.freeze_test_w {
                        if config.n_test != config.n {
                            return Err(Error::Config(
                                "freeze_test_w requires n_test == n".into(),
                            ));
                        }
                        w_test.push(w_train.last().unwrap().clone());
                    } else {
                        w_test.push(uniform_matrix(
                            &mut stream(seed, id, Role::TestLatent),
                            config.n_test,
                            config.q,
                            3.0,
                        ));
                    }
                }
            }
            TestPredictors::Shared => {
                if config.n_test != config.n {
                    return Err(Error::Config(
                        "shared test predictors require n_test == n".into(),
                    ));
                }
                test_designs.push(designs.last().unwrap().clone());
                if config.misspecified {
                    w_test.push(w_train.last().unwrap().clone());
                }
            }
        }
    }

    let train_errors = draw_errors(
        &mut stream(seed, 0, Role::TrainError),
        &factor,
        config.n,
        m,
    );
    let test_errors = draw_errors(
        &mut stream(seed, 0, Role::TestError),
        &factor,
        config.n_test,
        m,
    );

    let mut problems = Vec::with_capacity(m);
    let mut test_responses = Vec::with_capacity(m);
    for idx in 0..m {
        let mut y = &designs[idx] * &beta[idx] + &train_errors[idx];
        let mut z = &test_designs[idx] * &beta[idx] + &test_errors[idx];
        if config.misspecified {
            y += &w_train[idx] * &theta[idx];
            z += &w_test[idx] * &theta[idx];
        }
        problems.push(RegressionProblem::new(idx + 1, designs[idx].clone(), y)?);
        test_responses.push(z);
    }

    Ok(SynthDataset {
        train: ModelCollection::new(problems)?,
        test_designs,
        test_responses,
        beta,
        theta,
        w_train,
        w_test,
        config: config.clone(),
    })
}

/// The three correctly specified benchmark configurations over 50 models
/// with 500 observations and 5 predictors: (i) alternating-sign serial
/// correlation `ρ = −0.8`, (ii) independent errors, (iii) exchangeable
/// correlation 0.6. Unit error variance; seed 0, meant to be overridden.
pub fn figure1_configs() -> Vec<SynthConfig> {
    let base = |kind: CovarianceKind| SynthConfig {
        version: 1,
        n: 500,
        n_test: 500,
        p: 5,
        q: 5,
        m: 50,
        covariance: CovarianceSpec { kind, sigma2: 1.0 },
        misspecified: false,
        seed: 0,
        test_predictors: TestPredictors::Fresh,
        freeze_test_w: false,
    };
    vec![
        base(CovarianceKind::Ar1 { rho: -0.8 }),
        base(CovarianceKind::Independent),
        base(CovarianceKind::Exchangeable { off_diag: 0.6 }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> SynthConfig {
        SynthConfig {
            version: 1,
            n: 40,
            n_test: 20,
            p: 2,
            q: 2,
            m: 4,
            covariance: CovarianceSpec {
                kind: CovarianceKind::Exchangeable { off_diag: 0.5 },
                sigma2: 1.0,
            },
            misspecified: true,
            seed: 77,
            test_predictors: TestPredictors::Fresh,
            freeze_test_w: false,
        }
    }

    #[test]
    fn same_seed_same_dataset() {
        let cfg = tiny_config();
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        for id in 1..=cfg.m {
            assert_eq!(a.train.problem(id).design, b.train.problem(id).design);
            assert_eq!(a.train.problem(id).response, b.train.problem(id).response);
            assert_eq!(a.test_responses[id - 1], b.test_responses[id - 1]);
        }
        let c = generate(&cfg.with_seed(78)).unwrap();
        assert_ne!(a.train.problem(1).response, c.train.problem(1).response);
    }

    #[test]
    fn noiseless_correctly_specified_recovers_coefficients() {
        let mut cfg = tiny_config();
        cfg.misspecified = false;
        cfg.covariance.sigma2 = 0.0;
        let ds = generate(&cfg).unwrap();
        for id in 1..=cfg.m {
            let prob = ds.train.problem(id);
            let fit = crate::linalg::ridgeless_fit(&prob.design, &prob.response).unwrap();
            assert!((&fit.coefficients - &ds.beta[id - 1]).amax() < 1e-10);
        }
    }

    #[test]
    fn predictor_and_coefficient_ranges() {
        let ds = generate(&tiny_config()).unwrap();
        for id in 1..=4usize {
            assert!(ds.train.problem(id).design.iter().all(|&v| (0.0..3.0).contains(&v)));
            assert!(ds.beta[id - 1].iter().all(|&v| (0.0..1.0).contains(&v)));
            assert!(ds.w_train[id - 1].iter().all(|&v| (0.0..3.0).contains(&v)));
        }
    }

    #[test]
    fn ar1_entries_and_psd() {
        let spec = CovarianceSpec {
            kind: CovarianceKind::Ar1 { rho: -0.8 },
            sigma2: 1.0,
        };
        let r = spec.correlation_matrix(50).unwrap();
        assert!((r[(0, 2)] - 0.64).abs() < 1e-12);
        assert!(spec.factor(50).is_ok());
    }

    #[test]
    fn exchangeable_structure_is_psd() {
        let spec = CovarianceSpec {
            kind: CovarianceKind::Exchangeable { off_diag: 0.6 },
            sigma2: 1.0,
        };
        let r = spec.correlation_matrix(50).unwrap();
        assert_eq!(r[(0, 0)], 1.0);
        assert_eq!(r[(0, 1)], 0.6);
        assert!(spec.factor(50).is_ok());
    }

    #[test]
    fn invalid_exchangeable_rejected() {
        // off-diagonal -0.9 over 50 models is indefinite
        let spec = CovarianceSpec {
            kind: CovarianceKind::Exchangeable { off_diag: -0.9 },
            sigma2: 1.0,
        };
        assert!(spec.factor(50).is_err());
    }

    #[test]
    fn block_structure_matches_layout() {
        let spec = CovarianceSpec {
            kind: CovarianceKind::BlockExchangeable {
                blocks: 2,
                within: 0.9,
                diag_boost: 0.1,
            },
            sigma2: 0.25,
        };
        let r = spec.correlation_matrix(4).unwrap();
        assert_eq!(r[(0, 0)], 1.0);
        assert_eq!(r[(0, 1)], 0.9);
        assert_eq!(r[(0, 2)], 0.0);
        assert!(spec.factor(4).is_ok());
        // indivisible M is rejected
        assert!(spec.correlation_matrix(5).is_err());
    }

    #[test]
    fn figure1_configs_are_valid() {
        for cfg in figure1_configs() {
            cfg.validate().unwrap();
            assert!(cfg.covariance.factor(cfg.m).is_ok());
            assert!(!cfg.misspecified);
            assert_eq!((cfg.m, cfg.n, cfg.p), (50, 500, 5));
        }
    }

    #[test]
    fn shared_test_predictors_reuse_training_designs() {
        let mut cfg = tiny_config();
        cfg.test_predictors = TestPredictors::Shared;
        cfg.n_test = cfg.n;
        let ds = generate(&cfg).unwrap();
        assert_eq!(ds.test_designs[0], ds.train.problem(1).design);
        assert_eq!(ds.w_test[0], ds.w_train[0]);
        // responses still differ: fresh errors
        assert_ne!(ds.test_responses[0], ds.train.problem(1).response);
    }
}
