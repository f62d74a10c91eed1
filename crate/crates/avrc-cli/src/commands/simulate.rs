use std::path::Path;

use avrc_core::io::{write_matrix_csv, write_vector_csv};
use avrc_core::synth::{generate, SynthConfig, SynthDataset};
use avrc_core::Result;
use serde::{Deserialize, Serialize};

use super::{ensure_dir, read_config, write_json};
use crate::SimulateArgs;

/// Manifest stored next to the dataset; `cluster` reads it back.
#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub command: String,
    pub config: SynthConfig,
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let mut config: SynthConfig = read_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    let dataset = generate(&config)?;
    ensure_dir(&args.out)?;
    write_dataset(&args.out, &dataset)?;
    write_json(
        &args.out.join("manifest.json"),
        &DatasetManifest {
            version: 1,
            command: "simulate".into(),
            config,
        },
    )
}

pub fn write_dataset(dir: &Path, dataset: &SynthDataset) -> Result<()> {
    for id in 1..=dataset.config.m {
        let prob = dataset.train.problem(id);
        write_matrix_csv(&dir.join(format!("train_design_{id:04}.csv")), &prob.design)?;
        write_vector_csv(&dir.join(format!("train_response_{id:04}.csv")), &prob.response)?;
        write_matrix_csv(
            &dir.join(format!("test_design_{id:04}.csv")),
            &dataset.test_designs[id - 1],
        )?;
        write_vector_csv(
            &dir.join(format!("test_response_{id:04}.csv")),
            &dataset.test_responses[id - 1],
        )?;
    }
    Ok(())
}
