use std::fs;
use std::path::Path;

use avrc_core::clustering::{dendrogram_table, rcm_cluster, tem_cluster, Method};
use avrc_core::io::{read_matrix_csv, read_vector_csv};
use avrc_core::model::{ModelCollection, RegressionProblem};
use avrc_core::Result;
use serde::Serialize;

use super::{ensure_dir, read_json_data, write_json};
use crate::commands::simulate::DatasetManifest;
use crate::ClusterArgs;

pub fn load_dataset(dir: &Path) -> Result<(ModelCollection, DatasetManifest)> {
    let manifest: DatasetManifest = read_json_data(&dir.join("manifest.json"))?;
    let mut problems = Vec::with_capacity(manifest.config.m);
    for id in 1..=manifest.config.m {
        let design = read_matrix_csv(&dir.join(format!("train_design_{id:04}.csv")))?;
        let response = read_vector_csv(&dir.join(format!("train_response_{id:04}.csv")))?;
        problems.push(RegressionProblem::new(id, design, response)?);
    }
    Ok((ModelCollection::new(problems)?, manifest))
}

#[derive(Serialize)]
struct ClusterManifest {
    version: u32,
    command: String,
    method: Method,
    models: usize,
    observations: usize,
}

pub fn run(args: &ClusterArgs) -> Result<()> {
    let (collection, _) = load_dataset(&args.data)?;
    let method: Method = args.method.into();
    let trace = match method {
        Method::Tem => tem_cluster(&collection)?,
        Method::Rcm => rcm_cluster(&collection)?,
    };
    ensure_dir(&args.out)?;
    fs::write(args.out.join("trace.jsonl"), trace.to_jsonl(collection.n())?)?;
    fs::write(
        args.out.join("dendrogram.csv"),
        dendrogram_table(&trace, collection.n()),
    )?;
    write_json(
        &args.out.join("manifest.json"),
        &ClusterManifest {
            version: 1,
            command: "cluster".into(),
            method,
            models: collection.m(),
            observations: collection.n(),
        },
    )
}
