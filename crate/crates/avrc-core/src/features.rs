//! Design-matrix construction for interval-level demand forecasting panels.
//!
//! Each unit's model regresses demand on `T` daily lags of itself, a smooth
//! temperature effect whose shape varies over the day (a tensor of `Q` cyclic
//! interval basis functions with `H` temperature basis functions), and
//! weekday dummies with Sundays and public holidays as the baseline. The
//! per-unit design has `T + Q·H + L` columns. The aggregated design shares
//! the temperature block across units of the same area and the weekday block
//! across everything, giving `M·T + R·Q·H + L` columns.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
pub use chrono::Weekday;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::RegressionProblem;
use crate::rng::{stream, Role};

/// Values of all `H` B-spline basis functions at `x`.
///
/// `knots` is the full non-decreasing knot vector of length
/// `H + degree + 1`; evaluations outside the boundary knots are clamped.
/// Entries are nonnegative and sum to one inside the domain.
pub fn bspline_basis(x: f64, knots: &[f64], degree: usize) -> Result<DVector<f64>> {
    let len = knots.len();
    if len < degree + 2 {
        return Err(Error::Data(format!(
            "knot vector of length {len} cannot support degree {degree}"
        )));
    }
    if knots.windows(2).any(|w| w[0] > w[1]) || knots.iter().any(|k| !k.is_finite()) {
        return Err(Error::Data("knot vector must be finite and non-decreasing".into()));
    }
    let h = len - degree - 1;
    let lo = knots[degree];
    let hi = knots[len - 1 - degree];
    if !(lo < hi) {
        return Err(Error::Data("knot vector has an empty domain".into()));
    }
    let x = x.clamp(lo, hi);

    // span index: t[span] <= x < t[span + 1], last span closed on the right
    let mut span = degree;
    while span < len - degree - 2 && x >= knots[span + 1] {
        span += 1;
    }

    // span-local triangular recursion; 0/0 treated as 0 at repeated knots
    let mut values = vec![0.0f64; degree + 1];
    let mut left = vec![0.0f64; degree + 1];
    let mut right = vec![0.0f64; degree + 1];
    values[0] = 1.0;
    for j in 1..=degree {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom != 0.0 { values[r] / denom } else { 0.0 };
            values[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        values[j] = saved;
    }

    let mut basis = DVector::zeros(h);
    for (offset, &v) in values.iter().enumerate() {
        basis[span - degree + offset] = v;
    }
    Ok(basis)
}

/// Clamped knot vector for `basis_count` functions of the given degree, with
/// interior knots at equally spaced quantiles of the samples and boundary
/// knots at their extremes.
pub fn clamped_quantile_knots(samples: &[f64], basis_count: usize, degree: usize) -> Result<Vec<f64>> {
    if basis_count < degree + 1 {
        return Err(Error::Data(format!(
            "need at least degree + 1 = {} basis functions, got {basis_count}",
            degree + 1
        )));
    }
    if samples.is_empty() || samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("knot samples must be non-empty and finite".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (mut lo, mut hi) = (sorted[0], sorted[sorted.len() - 1]);
    if !(lo < hi) {
        // constant samples: widen the domain so evaluation stays defined and
        // the resulting columns become constant (and rank-deficient) instead
        // of failing here
        lo -= 0.5;
        hi += 0.5;
        sorted = vec![lo, hi];
    }
    let quantile = |f: f64| -> f64 {
        let pos = f * (sorted.len() - 1) as f64;
        let idx = pos.floor() as usize;
        let frac = pos - idx as f64;
        if idx + 1 < sorted.len() {
            sorted[idx] * (1.0 - frac) + sorted[idx + 1] * frac
        } else {
            sorted[idx]
        }
    };

    let segments = basis_count - degree; // interior knots + 1
    let mut knots = Vec::with_capacity(basis_count + degree + 1);
    for _ in 0..=degree {
        knots.push(lo);
    }
    for s in 1..segments {
        knots.push(quantile(s as f64 / segments as f64));
    }
    for _ in 0..=degree {
        knots.push(hi);
    }
    Ok(knots)
}

/// Cardinal uniform B-spline of the given degree with knot spacing `delta`,
/// supported on `[0, (degree + 1)·delta)`.
fn uniform_bspline(t: f64, delta: f64, degree: usize) -> f64 {
    let order = degree + 1;
    if t < 0.0 || t >= order as f64 * delta {
        return 0.0;
    }
    let mut b = vec![0.0f64; order];
    for (i, slot) in b.iter_mut().enumerate() {
        *slot = if t >= i as f64 * delta && t < (i + 1) as f64 * delta {
            1.0
        } else {
            0.0
        };
    }
    for k in 1..order {
        let kd = k as f64 * delta;
        for i in 0..(order - k) {
            let a = (t - i as f64 * delta) / kd;
            let c = ((i + k + 1) as f64 * delta - t) / kd;
            b[i] = a * b[i] + c * b[i + 1];
        }
    }
    b[0]
}

/// Periodic B-spline basis over a circle of `period` intervals, evaluated at
/// interval index `j` (1-based; wraps, so `j = period + 1` equals `j = 1`).
///
/// `basis_count` uniformly spaced basis functions; entries are nonnegative
/// and sum to one at every index.
pub fn cyclic_bspline_basis(
    j: usize,
    basis_count: usize,
    degree: usize,
    period: usize,
) -> Result<DVector<f64>> {
    if j == 0 {
        return Err(Error::contract("cyclic_bspline_basis", "interval index is 1-based"));
    }
    cyclic_bspline_basis_at(((j - 1) % period) as f64, basis_count, degree, period)
}

/// Continuous-position version of [`cyclic_bspline_basis`]; `x` is wrapped
/// into `[0, period)`.
pub fn cyclic_bspline_basis_at(
    x: f64,
    basis_count: usize,
    degree: usize,
    period: usize,
) -> Result<DVector<f64>> {
    if basis_count == 0 || period == 0 {
        return Err(Error::contract(
            "cyclic_bspline_basis",
            "basis count and period must be positive",
        ));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("cyclic basis position"));
    }
    let period_f = period as f64;
    let x = x.rem_euclid(period_f);
    let delta = period_f / basis_count as f64;
    // enough period shifts to cover a support of width (degree + 1)·delta
    let wraps = (degree + 1) / basis_count + 2;
    let mut basis = DVector::zeros(basis_count);
    for q in 0..basis_count {
        let start = q as f64 * delta;
        let mut v = 0.0;
        for r in 0..wraps {
            v += uniform_bspline(x + r as f64 * period_f - start, delta, degree);
        }
        basis[q] = v;
    }
    Ok(basis)
}

/// One metered unit: stable id, 0-based area index, free-form category label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitInfo {
    pub id: String,
    pub area: usize,
    pub category: String,
}

/// A complete rectangular demand panel: `days × intervals × units` values,
/// one daily covariate per area, and a calendar.
#[derive(Debug, Clone)]
pub struct PanelSeries {
    dates: Vec<NaiveDate>,
    intervals: usize,
    units: Vec<UnitInfo>,
    areas: Vec<String>,
    /// `((day * intervals) + interval) * units + unit`
    values: Vec<f64>,
    /// `day * areas + area`
    temperature: Vec<f64>,
    holidays: Vec<bool>,
}

impl PanelSeries {
    pub fn from_parts(
        dates: Vec<NaiveDate>,
        intervals: usize,
        units: Vec<UnitInfo>,
        areas: Vec<String>,
        values: Vec<f64>,
        temperature: Vec<f64>,
        holidays: Vec<bool>,
    ) -> Result<Self> {
        if dates.is_empty() || units.is_empty() || areas.is_empty() || intervals == 0 {
            return Err(Error::Data("panel must have dates, units, areas and intervals".into()));
        }
        for w in dates.windows(2) {
            if w[1] != w[0].succ_opt().expect("valid date") {
                return Err(Error::Data(format!(
                    "panel dates must be consecutive days; gap between {} and {}",
                    w[0], w[1]
                )));
            }
        }
        for unit in &units {
            if unit.area >= areas.len() {
                return Err(Error::Data(format!(
                    "unit {} refers to area index {} of {}",
                    unit.id,
                    unit.area,
                    areas.len()
                )));
            }
        }
        let expect_values = dates.len() * intervals * units.len();
        if values.len() != expect_values {
            return Err(Error::Data(format!(
                "panel needs {expect_values} demand values, got {}",
                values.len()
            )));
        }
        let expect_temps = dates.len() * areas.len();
        if temperature.len() != expect_temps {
            return Err(Error::Data(format!(
                "panel needs {expect_temps} covariate values, got {}",
                temperature.len()
            )));
        }
        if holidays.len() != dates.len() {
            return Err(Error::Data("need one holiday flag per date".into()));
        }
        if values.iter().chain(temperature.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("panel values"));
        }
        Ok(Self {
            dates,
            intervals,
            units,
            areas,
            values,
            temperature,
            holidays,
        })
    }

    /// Load a panel from CSV files.
    ///
    /// `panel`: `date,interval,unit_id,value` (interval 1-based);
    /// `covariates`: `date,area,temperature`; `units`: `unit_id,area,category`;
    /// optional `holidays`: `date`. Every `(date, interval, unit)` cell and
    /// every `(date, area)` covariate must be present exactly once.
    pub fn from_csv_files(
        panel: &Path,
        covariates: &Path,
        units: &Path,
        holidays: Option<&Path>,
    ) -> Result<Self> {
        let mut unit_rows = csv_reader(units)?;
        let mut unit_list: Vec<(String, String, String)> = Vec::new();
        for record in unit_rows.records() {
            let record = record.map_err(|e| Error::Data(format!("units file: {e}")))?;
            if record.len() != 3 {
                return Err(Error::Data(format!(
                    "units file: expected 3 columns, got {} in row {:?}",
                    record.len(),
                    record
                )));
            }
            unit_list.push((record[0].to_string(), record[1].to_string(), record[2].to_string()));
        }
        if unit_list.is_empty() {
            return Err(Error::Data("units file has no rows".into()));
        }
        let mut areas: Vec<String> = Vec::new();
        let mut units_info: Vec<UnitInfo> = Vec::new();
        let mut unit_index: BTreeMap<String, usize> = BTreeMap::new();
        for (id, area, category) in unit_list {
            let area_idx = match areas.iter().position(|a| *a == area) {
                Some(idx) => idx,
                None => {
                    areas.push(area.clone());
                    areas.len() - 1
                }
            };
            if unit_index.insert(id.clone(), units_info.len()).is_some() {
                return Err(Error::Data(format!("duplicate unit id {id}")));
            }
            units_info.push(UnitInfo {
                id,
                area: area_idx,
                category,
            });
        }

        let mut panel_rows = csv_reader(panel)?;
        let mut cells: BTreeMap<(NaiveDate, usize, usize), f64> = BTreeMap::new();
        let mut intervals = 0usize;
        for record in panel_rows.records() {
            let record = record.map_err(|e| Error::Data(format!("panel file: {e}")))?;
            if record.len() != 4 {
                return Err(Error::Data(format!(
                    "panel file: expected 4 columns (date,interval,unit_id,value), got {}",
                    record.len()
                )));
            }
            let date = parse_date(&record[0])?;
            let interval: usize = record[1]
                .parse()
                .map_err(|_| Error::Data(format!("panel file: bad interval '{}'", &record[1])))?;
            if interval == 0 {
                return Err(Error::Data("panel file: intervals are 1-based".into()));
            }
            let unit = *unit_index
                .get(&record[2])
                .ok_or_else(|| Error::Data(format!("panel file: unknown unit id '{}'", &record[2])))?;
            let value = crate::io::parse_float(&record[3])?;
            intervals = intervals.max(interval);
            if cells.insert((date, interval - 1, unit), value).is_some() {
                return Err(Error::Data(format!(
                    "panel file: duplicate cell ({}, {interval}, {})",
                    date, &record[2]
                )));
            }
        }
        if cells.is_empty() {
            return Err(Error::Data("panel file has no rows".into()));
        }
        let dates: Vec<NaiveDate> = {
            let set: BTreeSet<NaiveDate> = cells.keys().map(|k| k.0).collect();
            set.into_iter().collect()
        };

        let mut temp_rows = csv_reader(covariates)?;
        let mut temps: BTreeMap<(NaiveDate, usize), f64> = BTreeMap::new();
        for record in temp_rows.records() {
            let record = record.map_err(|e| Error::Data(format!("covariate file: {e}")))?;
            if record.len() != 3 {
                return Err(Error::Data(format!(
                    "covariate file: expected 3 columns (date,area,temperature), got {}",
                    record.len()
                )));
            }
            let date = parse_date(&record[0])?;
            let area = areas
                .iter()
                .position(|a| *a == record[1])
                .ok_or_else(|| Error::Data(format!("covariate file: unknown area '{}'", &record[1])))?;
            let value = crate::io::parse_float(&record[2])?;
            temps.insert((date, area), value);
        }

        let mut holiday_set: BTreeSet<NaiveDate> = BTreeSet::new();
        if let Some(path) = holidays {
            let mut rows = csv_reader(path)?;
            for record in rows.records() {
                let record = record.map_err(|e| Error::Data(format!("holidays file: {e}")))?;
                holiday_set.insert(parse_date(&record[0])?);
            }
        }

        let m = units_info.len();
        let r = areas.len();
        let mut values = Vec::with_capacity(dates.len() * intervals * m);
        let mut temperature = Vec::with_capacity(dates.len() * r);
        for &date in &dates {
            for j in 0..intervals {
                for unit in 0..m {
                    let v = cells.get(&(date, j, unit)).ok_or_else(|| {
                        Error::Data(format!(
                            "panel file: missing cell ({date}, {}, {})",
                            j + 1,
                            units_info[unit].id
                        ))
                    })?;
                    values.push(*v);
                }
            }
            for area in 0..r {
                let v = temps.get(&(date, area)).ok_or_else(|| {
                    Error::Data(format!(
                        "covariate file: missing temperature for ({date}, {})",
                        areas[area]
                    ))
                })?;
                temperature.push(*v);
            }
        }
        let holidays_flags: Vec<bool> = dates.iter().map(|d| holiday_set.contains(d)).collect();
        Self::from_parts(dates, intervals, units_info, areas, values, temperature, holidays_flags)
    }

    pub fn days(&self) -> usize {
        self.dates.len()
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    pub fn area_count(&self) -> usize {
        self.areas.len()
    }

    pub fn units(&self) -> &[UnitInfo] {
        &self.units
    }

    pub fn value(&self, day: usize, interval: usize, unit: usize) -> f64 {
        self.values[(day * self.intervals + interval) * self.units.len() + unit]
    }

    pub fn temperature(&self, day: usize, area: usize) -> f64 {
        self.temperature[day * self.areas.len() + area]
    }

    pub fn weekday(&self, day: usize) -> Weekday {
        self.dates[day].weekday()
    }

    pub fn is_holiday(&self, day: usize) -> bool {
        self.holidays[day]
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|_| Error::Data(format!("bad ISO-8601 date '{s}'")))
}

/// Shape of the forecasting design: `lags` daily lags, `temp_basis ×
/// cyclic_basis` temperature-by-interval interaction columns and
/// `weekday_dummies` day-of-week columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandModelSpec {
    pub lags: usize,
    pub temp_basis: usize,
    pub cyclic_basis: usize,
    pub weekday_dummies: usize,
    pub intervals: usize,
    pub degree: usize,
    /// Day folded together with holidays as the dummy baseline.
    pub baseline: Weekday,
}

impl Default for DemandModelSpec {
    fn default() -> Self {
        Self {
            lags: 7,
            temp_basis: 5,
            cyclic_basis: 5,
            weekday_dummies: 6,
            intervals: 24,
            degree: 3,
            baseline: Weekday::Sun,
        }
    }
}

impl DemandModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lags == 0 || self.temp_basis == 0 || self.cyclic_basis == 0 || self.intervals == 0 {
            return Err(Error::Config("lag, basis and interval counts must be positive".into()));
        }
        if self.weekday_dummies == 0 || self.weekday_dummies > 6 {
            return Err(Error::Config("weekday dummy count must lie in 1..=6".into()));
        }
        if self.temp_basis < self.degree + 1 {
            return Err(Error::Config(format!(
                "temp_basis {} cannot support degree {}",
                self.temp_basis, self.degree
            )));
        }
        Ok(())
    }

    /// `T + Q·H + L`.
    pub fn columns_per_unit(&self) -> usize {
        self.lags + self.cyclic_basis * self.temp_basis + self.weekday_dummies
    }

    /// `M·T + R·Q·H + L`.
    pub fn avr_columns(&self, units: usize, areas: usize) -> usize {
        units * self.lags + areas * self.cyclic_basis * self.temp_basis + self.weekday_dummies
    }

    /// Dummy-coded weekdays in column order: the week starting Monday with
    /// the baseline day removed, truncated to `weekday_dummies` columns.
    fn dummy_days(&self) -> Vec<Weekday> {
        use Weekday::*;
        [Mon, Tue, Wed, Thu, Fri, Sat, Sun]
            .into_iter()
            .filter(|d| *d != self.baseline)
            .take(self.weekday_dummies)
            .collect()
    }
}

fn area_knots(panel: &PanelSeries, spec: &DemandModelSpec, area: usize) -> Result<Vec<f64>> {
    let temps: Vec<f64> = (spec.lags..panel.days())
        .map(|day| panel.temperature(day, area))
        .collect();
    clamped_quantile_knots(&temps, spec.temp_basis, spec.degree)
}

fn check_panel(panel: &PanelSeries, spec: &DemandModelSpec) -> Result<()> {
    spec.validate()?;
    if panel.intervals() != spec.intervals {
        return Err(Error::Data(format!(
            "panel has {} intervals per day, spec expects {}",
            panel.intervals(),
            spec.intervals
        )));
    }
    if panel.days() < spec.lags + 1 {
        return Err(Error::Data(format!(
            "panel has {} days; need at least lags + 1 = {}",
            panel.days(),
            spec.lags + 1
        )));
    }
    Ok(())
}

/// Interaction and weekday column values shared by both builders.
struct RowContext {
    /// Per interval: the cyclic basis values.
    cyclic: Vec<DVector<f64>>,
}

impl RowContext {
    fn new(spec: &DemandModelSpec) -> Result<Self> {
        let cyclic = (1..=spec.intervals)
            .map(|j| cyclic_bspline_basis(j, spec.cyclic_basis, spec.degree, spec.intervals))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cyclic })
    }
}

/// Per-unit design: rows ordered by `(day, interval)` over the days after the
/// lag window; columns `[T lags | Q·H interactions | L weekday dummies]`.
pub fn build_design(
    panel: &PanelSeries,
    spec: &DemandModelSpec,
    unit: usize,
) -> Result<RegressionProblem> {
    check_panel(panel, spec)?;
    if unit == 0 || unit > panel.unit_count() {
        return Err(Error::contract(
            "build_design",
            format!("unit {unit} outside 1..={}", panel.unit_count()),
        ));
    }
    let unit_idx = unit - 1;
    let area = panel.units()[unit_idx].area;
    let knots = area_knots(panel, spec, area)?;
    let ctx = RowContext::new(spec)?;
    let dummy_days = spec.dummy_days();

    let t = spec.lags;
    let (q, h) = (spec.cyclic_basis, spec.temp_basis);
    let rows = (panel.days() - t) * panel.intervals();
    let cols = spec.columns_per_unit();
    let mut design = DMatrix::zeros(rows, cols);
    let mut response = DVector::zeros(rows);

    let mut row = 0;
    for day in t..panel.days() {
        let temp_basis = bspline_basis(panel.temperature(day, area), &knots, spec.degree)?;
        let weekday = panel.weekday(day);
        let holiday = panel.is_holiday(day);
        for j in 0..panel.intervals() {
            for lag in 1..=t {
                design[(row, lag - 1)] = panel.value(day - lag, j, unit_idx);
            }
            let cyc = &ctx.cyclic[j];
            for qi in 0..q {
                for hi in 0..h {
                    design[(row, t + qi * h + hi)] = cyc[qi] * temp_basis[hi];
                }
            }
            if !holiday {
                if let Some(pos) = dummy_days.iter().position(|d| *d == weekday) {
                    design[(row, t + q * h + pos)] = 1.0;
                }
            }
            response[row] = panel.value(day, j, unit_idx);
            row += 1;
        }
    }
    RegressionProblem::new(unit, design, response)
}

/// Aggregated design with shared blocks: per-unit lag columns, one
/// temperature-interaction block per area, one weekday block; the response is
/// the across-unit demand sum.
#[derive(Debug, Clone)]
pub struct SharedAvrDesign {
    pub design: DMatrix<f64>,
    pub response: DVector<f64>,
    pub lag_columns: usize,
    pub temperature_columns: usize,
    pub weekday_columns: usize,
}

pub fn build_avr_design(panel: &PanelSeries, spec: &DemandModelSpec) -> Result<SharedAvrDesign> {
    check_panel(panel, spec)?;
    let m = panel.unit_count();
    let r = panel.area_count();
    let t = spec.lags;
    let (q, h) = (spec.cyclic_basis, spec.temp_basis);
    let ctx = RowContext::new(spec)?;
    let dummy_days = spec.dummy_days();
    let knots: Vec<Vec<f64>> = (0..r)
        .map(|area| area_knots(panel, spec, area))
        .collect::<Result<_>>()?;

    let rows = (panel.days() - t) * panel.intervals();
    let cols = spec.avr_columns(m, r);
    let temp_offset = m * t;
    let weekday_offset = temp_offset + r * q * h;
    let mut design = DMatrix::zeros(rows, cols);
    let mut response = DVector::zeros(rows);

    let mut row = 0;
    for day in t..panel.days() {
        let temp_bases: Vec<DVector<f64>> = (0..r)
            .map(|area| bspline_basis(panel.temperature(day, area), &knots[area], spec.degree))
            .collect::<Result<_>>()?;
        let weekday = panel.weekday(day);
        let holiday = panel.is_holiday(day);
        for j in 0..panel.intervals() {
            for unit in 0..m {
                for lag in 1..=t {
                    design[(row, unit * t + lag - 1)] = panel.value(day - lag, j, unit);
                }
            }
            let cyc = &ctx.cyclic[j];
            for area in 0..r {
                for qi in 0..q {
                    for hi in 0..h {
                        design[(row, temp_offset + area * q * h + qi * h + hi)] =
                            cyc[qi] * temp_bases[area][hi];
                    }
                }
            }
            if !holiday {
                if let Some(pos) = dummy_days.iter().position(|d| *d == weekday) {
                    design[(row, weekday_offset + pos)] = 1.0;
                }
            }
            response[row] = (0..m).map(|unit| panel.value(day, j, unit)).sum();
            row += 1;
        }
    }
    Ok(SharedAvrDesign {
        design,
        response,
        lag_columns: m * t,
        temperature_columns: r * q * h,
        weekday_columns: spec.weekday_dummies,
    })
}

/// Deterministic synthetic panel for exercising the builders: seasonal demand
/// with unit-specific level and noise, smooth per-area temperatures.
pub fn synthetic_panel(
    units: usize,
    areas: usize,
    days: usize,
    intervals: usize,
    seed: u64,
) -> Result<PanelSeries> {
    if units == 0 || areas == 0 || days == 0 || intervals == 0 {
        return Err(Error::contract("synthetic_panel", "all counts must be positive"));
    }
    let start = NaiveDate::from_ymd_opt(2014, 1, 5).expect("valid date");
    let dates: Vec<NaiveDate> = (0..days)
        .map(|d| start + chrono::Days::new(d as u64))
        .collect();
    let unit_list: Vec<UnitInfo> = (0..units)
        .map(|u| UnitInfo {
            id: format!("unit{:04}", u + 1),
            area: u % areas,
            category: format!("category{}", u % 3 + 1),
        })
        .collect();
    let area_list: Vec<String> = (0..areas).map(|a| format!("area{}", a + 1)).collect();

    let mut rng = stream(seed, 0, Role::Generic);
    let mut temperature = Vec::with_capacity(days * areas);
    for day in 0..days {
        for area in 0..areas {
            let base = 10.0 + 8.0 * ((day as f64) / 20.0 + area as f64).sin();
            temperature.push(base + rng.random_range(-1.0..1.0));
        }
    }
    let mut values = Vec::with_capacity(days * intervals * units);
    let levels: Vec<f64> = (0..units).map(|_| rng.random_range(0.5..3.0)).collect();
    for day in 0..days {
        for j in 0..intervals {
            let shape = 1.0 + 0.5 * (2.0 * std::f64::consts::PI * j as f64 / intervals as f64).sin();
            for unit in 0..units {
                let temp = temperature[day * areas + unit_list[unit].area];
                let v = levels[unit] * shape + 0.02 * temp + rng.random_range(0.0..0.1);
                values.push(v);
            }
        }
    }
    let holidays = vec![false; days];
    PanelSeries::from_parts(dates, intervals, unit_list, area_list, values, temperature, holidays)
}
