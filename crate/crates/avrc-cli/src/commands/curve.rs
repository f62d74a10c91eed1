use std::fmt::Write as _;
use std::fs;

use avrc_core::clustering::{rcm_cluster, tem_cluster, Method};
use avrc_core::curve::{error_curve, CurvePoint};
use avrc_core::io::format_float;
use avrc_core::rng::replicate_seed;
use avrc_core::synth::{generate, SynthConfig};
use avrc_core::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use super::{ensure_dir, read_config, write_json};
use crate::CurveArgs;

#[derive(Serialize)]
struct CurveManifest {
    version: u32,
    command: String,
    method: Method,
    reps: usize,
    config: SynthConfig,
    failed_replicates: Vec<FailedReplicate>,
}

#[derive(Serialize)]
struct FailedReplicate {
    replicate: usize,
    error: String,
}

pub fn run(args: &CurveArgs) -> Result<()> {
    let mut config: SynthConfig = read_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(mode) = args.test_predictors {
        config.test_predictors = mode.into();
    }
    config.validate()?;
    if args.reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    let method: Method = args.method.into();
    ensure_dir(&args.out)?;

    let results: Vec<Result<Vec<CurvePoint>>> = (1..=args.reps)
        .into_par_iter()
        .map(|rep| {
            let rep_config = config.with_seed(replicate_seed(config.seed, rep as u64));
            let points = run_replicate(&rep_config, method)?;
            let body = render_curve(&points, rep_config.n, rep_config.n_test);
            fs::write(args.out.join(format!("curve_rep_{rep:04}.csv")), body)?;
            Ok(points)
        })
        .collect();

    let mut failed = Vec::new();
    let mut curves = Vec::new();
    for (idx, result) in results.into_iter().enumerate() {
        match result {
            Ok(points) => curves.push(points),
            Err(err) => {
                log::error!("replicate {} failed: {err}", idx + 1);
                failed.push(FailedReplicate {
                    replicate: idx + 1,
                    error: err.to_string(),
                });
            }
        }
    }
    if curves.is_empty() {
        return Err(Error::Numerical("every replicate failed".into()));
    }

    let mean = render_mean_curve(&curves, config.n, config.n_test);
    fs::write(args.out.join("curve_mean.csv"), mean)?;
    write_json(
        &args.out.join("manifest.json"),
        &CurveManifest {
            version: 1,
            command: "curve".into(),
            method,
            reps: args.reps,
            config,
            failed_replicates: failed,
        },
    )
}

pub fn run_replicate(config: &SynthConfig, method: Method) -> Result<Vec<CurvePoint>> {
    let dataset = generate(config)?;
    let trace = match method {
        Method::Tem => tem_cluster(&dataset.train)?,
        Method::Rcm => rcm_cluster(&dataset.train)?,
    };
    error_curve(
        &dataset.train,
        &trace,
        &dataset.test_designs,
        &dataset.test_responses,
    )
}

const CURVE_HEADER: &str = "k,train_mse,test_mse,train_rmse,test_rmse,max_cluster_params,interpolating\n";

fn render_curve(points: &[CurvePoint], n: usize, n_test: usize) -> String {
    let mut out = String::from(CURVE_HEADER);
    for point in points {
        let train_mse = point.train_rss / n as f64;
        let test_mse = point.test_rss / n_test as f64;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            point.k,
            format_float(train_mse),
            format_float(test_mse),
            format_float(train_mse.sqrt()),
            format_float(test_mse.sqrt()),
            point.max_cluster_params,
            u8::from(point.interpolating),
        );
    }
    out
}

/// Pointwise arithmetic means of the replicate columns, accumulated in
/// replicate order.
fn render_mean_curve(curves: &[Vec<CurvePoint>], n: usize, n_test: usize) -> String {
    let count = curves.len() as f64;
    let points = curves[0].len();
    let mut out = String::from(
        "k,train_mse,test_mse,train_rmse,test_rmse,max_cluster_params,interpolating_frac\n",
    );
    for idx in 0..points {
        let k = curves[0][idx].k;
        let mut train_mse = 0.0;
        let mut test_mse = 0.0;
        let mut train_rmse = 0.0;
        let mut test_rmse = 0.0;
        let mut params = 0.0;
        let mut interp = 0.0;
        for curve in curves {
            let point = &curve[idx];
            debug_assert_eq!(point.k, k);
            let tm = point.train_rss / n as f64;
            let te = point.test_rss / n_test as f64;
            train_mse += tm;
            test_mse += te;
            train_rmse += tm.sqrt();
            test_rmse += te.sqrt();
            params += point.max_cluster_params as f64;
            interp += f64::from(u8::from(point.interpolating));
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            k,
            format_float(train_mse / count),
            format_float(test_mse / count),
            format_float(train_rmse / count),
            format_float(test_rmse / count),
            format_float(params / count),
            format_float(interp / count),
        );
    }
    out
}

