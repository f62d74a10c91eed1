use avrc_core::theory::{
    monte_carlo_cross_term, monte_carlo_error_diff, DiffKind, ExpectationReport, InstanceSpec,
};
use avrc_core::Result;
use serde::Serialize;

use super::{ensure_dir, read_config, write_json};
use crate::TheoryArgs;

#[derive(Serialize)]
struct TheoryReport {
    version: u32,
    command: String,
    replicates: usize,
    mc_seed: u64,
    instance: InstanceSpec,
    reports: Reports,
}

#[derive(Serialize)]
struct Reports {
    cross_term: ExpectationReport,
    train_error_diff: ExpectationReport,
    test_error_diff: ExpectationReport,
}

pub fn run(args: &TheoryArgs) -> Result<()> {
    let spec: InstanceSpec = read_config(&args.instance)?;
    let instance = spec.build()?;
    let cross_term = monte_carlo_cross_term(&instance, args.reps, args.seed)?;
    let train_error_diff = monte_carlo_error_diff(&instance, args.reps, args.seed, DiffKind::Train)?;
    let test_error_diff = monte_carlo_error_diff(&instance, args.reps, args.seed, DiffKind::Test)?;
    ensure_dir(&args.out)?;
    write_json(
        &args.out.join("theory_report.json"),
        &TheoryReport {
            version: 1,
            command: "theory".into(),
            replicates: args.reps,
            mc_seed: args.seed,
            instance: spec,
            reports: Reports {
                cross_term,
                train_error_diff,
                test_error_diff,
            },
        },
    )
}
