use avrc_core::features::{build_avr_design, build_design, DemandModelSpec, PanelSeries, Weekday};
use avrc_core::io::{write_matrix_csv, write_vector_csv};
use avrc_core::{Error, Result};
use serde::Serialize;

use super::{ensure_dir, write_json};
use crate::FeaturesArgs;

#[derive(Serialize)]
struct FeaturesManifest {
    version: u32,
    command: String,
    units: usize,
    areas: usize,
    lags: usize,
    temp_basis: usize,
    cyclic_basis: usize,
    weekday_dummies: usize,
    intervals: usize,
    degree: usize,
    rows: usize,
    per_unit_columns: usize,
    per_unit_formula: String,
    shared_columns: usize,
    shared_formula: String,
}

pub fn run(args: &FeaturesArgs) -> Result<()> {
    let panel = PanelSeries::from_csv_files(
        &args.panel,
        &args.temps,
        &args.units,
        args.holidays.as_deref(),
    )?;
    let spec = DemandModelSpec {
        lags: args.lags,
        temp_basis: args.temp_basis,
        cyclic_basis: args.cyclic_basis,
        weekday_dummies: 6,
        intervals: args.intervals,
        degree: args.degree,
        baseline: Weekday::Sun,
    };
    spec.validate()?;
    ensure_dir(&args.out)?;

    let m = panel.unit_count();
    let r = panel.area_count();
    let mut rows = 0usize;
    for unit in 1..=m {
        let problem = build_design(&panel, &spec, unit)?;
        if problem.design.ncols() != spec.columns_per_unit() {
            return Err(Error::Numerical(format!(
                "unit {unit}: built {} columns, formula gives {}",
                problem.design.ncols(),
                spec.columns_per_unit()
            )));
        }
        rows = problem.design.nrows();
        write_matrix_csv(&args.out.join(format!("design_{unit:04}.csv")), &problem.design)?;
        write_vector_csv(
            &args.out.join(format!("response_{unit:04}.csv")),
            &problem.response,
        )?;
    }

    let shared = build_avr_design(&panel, &spec)?;
    if shared.design.ncols() != spec.avr_columns(m, r) {
        return Err(Error::Numerical(format!(
            "shared design has {} columns, formula gives {}",
            shared.design.ncols(),
            spec.avr_columns(m, r)
        )));
    }
    write_matrix_csv(&args.out.join("avr_design.csv"), &shared.design)?;
    write_vector_csv(&args.out.join("avr_response.csv"), &shared.response)?;

    write_json(
        &args.out.join("manifest.json"),
        &FeaturesManifest {
            version: 1,
            command: "features".into(),
            units: m,
            areas: r,
            lags: spec.lags,
            temp_basis: spec.temp_basis,
            cyclic_basis: spec.cyclic_basis,
            weekday_dummies: spec.weekday_dummies,
            intervals: spec.intervals,
            degree: spec.degree,
            rows,
            per_unit_columns: spec.columns_per_unit(),
            per_unit_formula: "T + Q*H + L".into(),
            shared_columns: shared.design.ncols(),
            shared_formula: "M*T + R*Q*H + L".into(),
        },
    )
}
