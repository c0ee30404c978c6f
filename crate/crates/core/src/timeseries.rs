//! Fixed-step full-year series, calendar conventions, resampling and CSV
//! ingestion of per-household demand / insolation profiles.
//!
//! Model years are non-leap (8,760 h) regardless of the calendar year and
//! timestamps are treated as a uniform grid (the source network has no DST).

use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

use crate::scalar::Scalar;

/// Step width of a series. Only the two widths used by the models exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    HalfHourly,
    Hourly,
}

impl Resolution {
    pub fn step_minutes(self) -> u32 {
        match self {
            Resolution::HalfHourly => 30,
            Resolution::Hourly => 60,
        }
    }

    /// Steps spanning one non-leap year.
    pub fn steps_per_year(self) -> usize {
        match self {
            Resolution::HalfHourly => 17_520,
            Resolution::Hourly => 8_760,
        }
    }

    /// Step width as a fraction of an hour.
    pub fn step_hours<S: Scalar>(self) -> S {
        match self {
            Resolution::HalfHourly => crate::scalar::real(0.5),
            Resolution::Hourly => S::one(),
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} min", self.step_minutes())
    }
}

/// Physical unit of the series values. Immutable after construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    KilowattHoursPerStep,
    MegawattHoursPerStep,
    Megawatts,
    /// Dimensionless availability factor in `[0, 1]`.
    Availability,
}

impl Unit {
    fn is_energy_per_step(self) -> bool {
        matches!(
            self,
            Unit::KilowattHoursPerStep | Unit::MegawattHoursPerStep
        )
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Unit::KilowattHoursPerStep => "kWh/step",
            Unit::MegawattHoursPerStep => "MWh/step",
            Unit::Megawatts => "MW",
            Unit::Availability => "availability",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum TimeSeriesError {
    #[error("series of {actual} values does not span one non-leap year at {resolution} (expected {expected})")]
    WrongLength {
        resolution: Resolution,
        expected: usize,
        actual: usize,
    },
    #[error("availability value {value} at step {index} outside [0, 1]")]
    AvailabilityOutOfRange { index: usize, value: f64 },
    #[error("non-finite value at step {index}")]
    NonFinite { index: usize },
    #[error("expected {expected} resolution, got {actual}")]
    ResolutionMismatch {
        expected: Resolution,
        actual: Resolution,
    },
    #[error("operation requires {expected}, series is {actual}")]
    UnitMismatch {
        expected: &'static str,
        actual: Unit,
    },
    #[error("series length {left} does not match {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("negative value {value} at step {index} in a profile series")]
    NegativeProfileValue { index: usize, value: f64 },
}

/// A full-year fixed-step series. The value vector always spans exactly one
/// non-leap year at the stated resolution; the unit is fixed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<S> {
    start_year: i32,
    resolution: Resolution,
    unit: Unit,
    values: Vec<S>,
}

impl<S: Scalar> TimeSeries<S> {
    pub fn new(
        start_year: i32,
        resolution: Resolution,
        unit: Unit,
        values: Vec<S>,
    ) -> Result<Self, TimeSeriesError> {
        let expected = resolution.steps_per_year();
        if values.len() != expected {
            return Err(TimeSeriesError::WrongLength {
                resolution,
                expected,
                actual: values.len(),
            });
        }
        for (index, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(TimeSeriesError::NonFinite { index });
            }
            if unit == Unit::Availability && (*v < S::zero() || *v > S::one()) {
                return Err(TimeSeriesError::AvailabilityOutOfRange {
                    index,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(TimeSeries {
            start_year,
            resolution,
            unit,
            values,
        })
    }

    /// All-zero series, mostly for reference (no-prosumage) constructions.
    pub fn zeros(start_year: i32, resolution: Resolution, unit: Unit) -> Self {
        TimeSeries {
            start_year,
            resolution,
            unit,
            values: vec![S::zero(); resolution.steps_per_year()],
        }
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Arithmetic sum over the year, in the energy unit of the series.
    pub fn annual_sum(&self) -> S {
        self.values.iter().copied().sum()
    }

    /// Same metadata, new values. Length must match.
    pub fn with_values(&self, values: Vec<S>) -> Result<Self, TimeSeriesError> {
        TimeSeries::new(self.start_year, self.resolution, self.unit, values)
    }

    /// Re-stamp the calendar year label (used when mapping measured household
    /// data onto the sector model year by index).
    pub fn relabel_year(mut self, start_year: i32) -> Self {
        self.start_year = start_year;
        self
    }

    /// Aggregate a half-hourly energy series to hourly by pairwise summation;
    /// total energy is conserved exactly.
    pub fn resample_to_hourly(&self) -> Result<TimeSeries<S>, TimeSeriesError> {
        if self.resolution != Resolution::HalfHourly {
            return Err(TimeSeriesError::ResolutionMismatch {
                expected: Resolution::HalfHourly,
                actual: self.resolution,
            });
        }
        if !self.unit.is_energy_per_step() {
            return Err(TimeSeriesError::UnitMismatch {
                expected: "an energy-per-step unit",
                actual: self.unit,
            });
        }
        let values = resample_pairs(&self.values);
        TimeSeries::new(self.start_year, Resolution::Hourly, self.unit, values)
    }
}

/// Pairwise sums: `out[i] = in[2i] + in[2i+1]`. Input length must be even.
pub fn resample_pairs<S: Scalar>(values: &[S]) -> Vec<S> {
    assert!(
        values.len() % 2 == 0,
        "pairwise resampling needs an even length"
    );
    values.chunks_exact(2).map(|p| p[0] + p[1]).collect()
}

/// One household's measured year: underlying demand plus PV yield per kWp.
#[derive(Debug, Clone)]
pub struct ProfileSet<S> {
    household_id: String,
    demand: TimeSeries<S>,
    pv_yield: TimeSeries<S>,
}

impl<S: Scalar> ProfileSet<S> {
    pub fn new(
        household_id: String,
        demand: TimeSeries<S>,
        pv_yield: TimeSeries<S>,
    ) -> Result<Self, TimeSeriesError> {
        if demand.resolution() != pv_yield.resolution() {
            return Err(TimeSeriesError::ResolutionMismatch {
                expected: demand.resolution(),
                actual: pv_yield.resolution(),
            });
        }
        if demand.len() != pv_yield.len() {
            return Err(TimeSeriesError::LengthMismatch {
                left: demand.len(),
                right: pv_yield.len(),
            });
        }
        for series in [&demand, &pv_yield] {
            for (index, v) in series.values().iter().enumerate() {
                if *v < S::zero() {
                    return Err(TimeSeriesError::NegativeProfileValue {
                        index,
                        value: v.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
        Ok(ProfileSet {
            household_id,
            demand,
            pv_yield,
        })
    }

    pub fn household_id(&self) -> &str {
        &self.household_id
    }

    pub fn demand(&self) -> &TimeSeries<S> {
        &self.demand
    }

    /// kWh generated per installed kWp in each step.
    pub fn pv_yield(&self) -> &TimeSeries<S> {
        &self.pv_yield
    }

    pub fn resolution(&self) -> Resolution {
        self.demand.resolution()
    }
}

// ---------------------------------------------------------------------------
// Calendar helpers (non-leap year, uniform grid).
// ---------------------------------------------------------------------------

const DAYS_IN_MONTH: [u32; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

/// ISO-8601 timestamp (`YYYY-MM-DDTHH:MM`, seconds optional) to a step index
/// counted from midnight January 1st. Returns `(year, step_offset_minutes)`.
fn parse_timestamp(text: &str) -> Option<(i32, u32)> {
    let text = text.trim();
    let bytes = text.as_bytes();
    if bytes.len() < 16
        || bytes[4] != b'-'
        || bytes[7] != b'-'
        || (bytes[10] != b'T' && bytes[10] != b' ')
    {
        return None;
    }
    let year: i32 = text[0..4].parse().ok()?;
    let month: u32 = text[5..7].parse().ok()?;
    let day: u32 = text[8..10].parse().ok()?;
    let hour: u32 = text[11..13].parse().ok()?;
    if bytes[13] != b':' {
        return None;
    }
    let minute: u32 = text[14..16].parse().ok()?;
    if bytes.len() > 16 {
        // allow an optional ":SS" tail, which must be zero seconds
        let tail = &text[16..];
        if !(tail == ":00") {
            return None;
        }
    }
    if !(1..=12).contains(&month) || day == 0 || day > DAYS_IN_MONTH[(month - 1) as usize] {
        return None;
    }
    if hour > 23 || minute > 59 {
        return None;
    }
    let day_of_year: u32 = DAYS_IN_MONTH[..(month - 1) as usize].iter().sum::<u32>() + (day - 1);
    Some((year, day_of_year * 24 * 60 + hour * 60 + minute))
}

/// Render the timestamp of a step, inverse of [`parse_timestamp`].
pub fn timestamp_of_step(start_year: i32, resolution: Resolution, index: usize) -> String {
    let minutes = index as u32 * resolution.step_minutes();
    let mut day = minutes / (24 * 60);
    let rem = minutes % (24 * 60);
    let (hour, minute) = (rem / 60, rem % 60);
    let mut month = 0usize;
    while day >= DAYS_IN_MONTH[month] {
        day -= DAYS_IN_MONTH[month];
        month += 1;
    }
    format!(
        "{:04}-{:02}-{:02}T{:02}:{:02}",
        start_year,
        month + 1,
        day + 1,
        hour,
        minute
    )
}

// ---------------------------------------------------------------------------
// Profile ingestion.
// ---------------------------------------------------------------------------

/// Column mapping for profile CSV files. The header has one timestamp column
/// and a `<id><demand_suffix>` / `<id><pv_suffix>` pair per household.
#[derive(Debug, Clone)]
pub struct ColumnSchema {
    pub timestamp: String,
    pub demand_suffix: String,
    pub pv_suffix: String,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            timestamp: "timestamp".into(),
            demand_suffix: "_demand".into(),
            pv_suffix: "_pv".into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("file is empty")]
    Empty,
    #[error("header column {0:?} is neither the timestamp nor a recognised household column")]
    UnrecognisedColumn(String),
    #[error("header lists {0:?} twice")]
    DuplicateColumn(String),
    #[error("household {0:?} has a demand column but no PV column (or vice versa)")]
    UnpairedColumn(String),
    #[error("no household columns found in header")]
    NoHouseholds,
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: timestamp {found:?} breaks the uniform {resolution} grid")]
    TimestampGap {
        line: usize,
        found: String,
        resolution: Resolution,
    },
    #[error("file has {rows} data rows, a full year at {resolution} needs {expected}")]
    IncompleteYear {
        rows: usize,
        resolution: Resolution,
        expected: usize,
    },
    #[error(transparent)]
    Series(#[from] TimeSeriesError),
}

/// A household dropped during ingestion because of missing steps.
#[derive(Debug, Clone)]
pub struct RejectedHousehold {
    pub household_id: String,
    pub missing_steps: usize,
    /// 1-based line of the first gap.
    pub first_gap_line: usize,
}

/// Ingestion output: complete households plus a report of rejected ones.
#[derive(Debug)]
pub struct IngestReport<S> {
    pub profiles: Vec<ProfileSet<S>>,
    pub rejected: Vec<RejectedHousehold>,
}

/// Read per-household demand / PV-yield profiles from a CSV file.
///
/// Rows must form a complete uniform half-hourly or hourly grid over one
/// year; a missing row is a file-level error. A household with any empty cell
/// is rejected (not an error) and reported, mirroring the source-data
/// filtering. Malformed cells fail with their line number.
pub fn ingest_profiles<S: Scalar>(
    path: &Path,
    schema: &ColumnSchema,
) -> Result<IngestReport<S>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ingest_profiles_from_reader(BufReader::new(file), schema)
}

pub fn ingest_profiles_from_reader<S: Scalar>(
    reader: impl BufRead,
    schema: &ColumnSchema,
) -> Result<IngestReport<S>, IngestError> {
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, Ok(line))) => line,
        Some((_, Err(source))) => {
            return Err(IngestError::Io {
                path: "<reader>".into(),
                source,
            })
        }
        None => return Err(IngestError::Empty),
    };

    // Map header columns to households. Column 0 must be the timestamp.
    #[derive(Clone, Copy)]
    enum Kind {
        Demand(usize),
        Pv(usize),
    }
    let mut ids: Vec<String> = Vec::new();
    let mut kinds: Vec<Kind> = Vec::new();
    for (pos, name) in header.split(',').enumerate() {
        let name = name.trim();
        if pos == 0 {
            if name != schema.timestamp {
                return Err(IngestError::UnrecognisedColumn(name.to_string()));
            }
            continue;
        }
        let (id, kind) = if let Some(id) = name.strip_suffix(schema.demand_suffix.as_str()) {
            (id, true)
        } else if let Some(id) = name.strip_suffix(schema.pv_suffix.as_str()) {
            (id, false)
        } else {
            return Err(IngestError::UnrecognisedColumn(name.to_string()));
        };
        let slot = match ids.iter().position(|existing| existing == id) {
            Some(slot) => slot,
            None => {
                ids.push(id.to_string());
                ids.len() - 1
            }
        };
        let duplicate = kinds.iter().any(|k| match (k, kind) {
            (Kind::Demand(s), true) | (Kind::Pv(s), false) => *s == slot,
            _ => false,
        });
        if duplicate {
            return Err(IngestError::DuplicateColumn(name.to_string()));
        }
        kinds.push(if kind {
            Kind::Demand(slot)
        } else {
            Kind::Pv(slot)
        });
    }
    if ids.is_empty() {
        return Err(IngestError::NoHouseholds);
    }
    let n = ids.len();
    let mut has_demand = vec![false; n];
    let mut has_pv = vec![false; n];
    for k in &kinds {
        match k {
            Kind::Demand(s) => has_demand[*s] = true,
            Kind::Pv(s) => has_pv[*s] = true,
        }
    }
    for slot in 0..n {
        if !(has_demand[slot] && has_pv[slot]) {
            return Err(IngestError::UnpairedColumn(ids[slot].clone()));
        }
    }

    let mut demand: Vec<Vec<S>> = vec![Vec::new(); n];
    let mut pv: Vec<Vec<S>> = vec![Vec::new(); n];
    // (missing step count, first gap line) per household
    let mut gaps: Vec<(usize, usize)> = vec![(0, 0); n];

    let mut resolution: Option<Resolution> = None;
    let mut start_year = 0i32;
    let mut expected_offset = 0u32;
    let mut prev_offset: Option<u32> = None;
    let mut rows = 0usize;

    for (idx, line) in lines {
        let line_no = idx + 1; // 1-based, counting the header as line 1
        let line = line.map_err(|source| IngestError::Io {
            path: "<reader>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let ts = fields.next().unwrap_or("");
        let (year, offset) = parse_timestamp(ts).ok_or_else(|| IngestError::MalformedRow {
            line: line_no,
            reason: format!("unparseable timestamp {ts:?}"),
        })?;

        if let Some(prev) = prev_offset {
            let resolution = match resolution {
                Some(r) => r,
                None => {
                    // infer the grid from the first two rows
                    let inferred = match offset.checked_sub(prev) {
                        Some(30) => Resolution::HalfHourly,
                        Some(60) => Resolution::Hourly,
                        _ => {
                            return Err(IngestError::MalformedRow {
                                line: line_no,
                                reason: format!(
                                    "rows are {} minutes apart; only 30 or 60 supported",
                                    offset as i64 - prev as i64
                                ),
                            })
                        }
                    };
                    resolution = Some(inferred);
                    expected_offset = prev;
                    inferred
                }
            };
            expected_offset += resolution.step_minutes();
            if year != start_year || offset != expected_offset {
                return Err(IngestError::TimestampGap {
                    line: line_no,
                    found: ts.trim().to_string(),
                    resolution,
                });
            }
        } else {
            start_year = year;
        }
        prev_offset = Some(offset);

        let mut col = 0usize;
        for field in fields {
            let kind = kinds.get(col).ok_or_else(|| IngestError::MalformedRow {
                line: line_no,
                reason: "row has more fields than the header".into(),
            })?;
            let slot = match kind {
                Kind::Demand(s) | Kind::Pv(s) => *s,
            };
            let trimmed = field.trim();
            let value = if trimmed.is_empty() {
                // a gap for this household; remember and keep the grid aligned
                let gap = &mut gaps[slot];
                gap.0 += 1;
                if gap.1 == 0 {
                    gap.1 = line_no;
                }
                S::zero()
            } else {
                let parsed: f64 = trimmed.parse().map_err(|_| IngestError::MalformedRow {
                    line: line_no,
                    reason: format!("unparseable number {trimmed:?}"),
                })?;
                if !parsed.is_finite() {
                    return Err(IngestError::MalformedRow {
                        line: line_no,
                        reason: format!("non-finite value {trimmed:?}"),
                    });
                }
                if parsed < 0.0 {
                    return Err(IngestError::MalformedRow {
                        line: line_no,
                        reason: format!("negative profile value {trimmed:?}"),
                    });
                }
                crate::scalar::real(parsed)
            };
            match kind {
                Kind::Demand(s) => demand[*s].push(value),
                Kind::Pv(s) => pv[*s].push(value),
            }
            col += 1;
        }
        if col != kinds.len() {
            return Err(IngestError::MalformedRow {
                line: line_no,
                reason: format!(
                    "row has {col} value fields, header promises {}",
                    kinds.len()
                ),
            });
        }
        rows += 1;
    }

    let resolution = resolution.ok_or(IngestError::Empty)?;
    if rows != resolution.steps_per_year() {
        return Err(IngestError::IncompleteYear {
            rows,
            resolution,
            expected: resolution.steps_per_year(),
        });
    }

    let mut profiles = Vec::new();
    let mut rejected = Vec::new();
    for (slot, id) in ids.into_iter().enumerate() {
        let (missing, first_line) = gaps[slot];
        if missing > 0 {
            rejected.push(RejectedHousehold {
                household_id: id,
                missing_steps: missing,
                first_gap_line: first_line,
            });
            continue;
        }
        let demand = TimeSeries::new(
            start_year,
            resolution,
            Unit::KilowattHoursPerStep,
            std::mem::take(&mut demand[slot]),
        )?;
        let pv_yield = TimeSeries::new(
            start_year,
            resolution,
            Unit::KilowattHoursPerStep,
            std::mem::take(&mut pv[slot]),
        )?;
        profiles.push(ProfileSet::new(id, demand, pv_yield)?);
    }

    Ok(IngestReport { profiles, rejected })
}

/// Read a multi-column hourly CSV (`timestamp,name1,name2,...`), returning
/// one series per named column. Used for availability profiles.
pub fn read_hourly_table<S: Scalar>(
    path: &Path,
    unit: Unit,
) -> Result<Vec<(String, TimeSeries<S>)>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut names: Vec<String> = Vec::new();
    let mut columns: Vec<Vec<S>> = Vec::new();
    let mut start_year = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        if idx == 0 {
            names = line
                .split(',')
                .skip(1)
                .map(|n| n.trim().to_string())
                .collect();
            if names.is_empty() {
                return Err(IngestError::NoHouseholds);
            }
            columns = vec![Vec::with_capacity(Resolution::Hourly.steps_per_year()); names.len()];
            continue;
        }
        let mut fields = line.split(',');
        let ts = fields.next().unwrap_or("");
        let (year, _) = parse_timestamp(ts).ok_or_else(|| IngestError::MalformedRow {
            line: line_no,
            reason: format!("unparseable timestamp {ts:?}"),
        })?;
        start_year.get_or_insert(year);
        let mut col = 0usize;
        for field in fields {
            let raw = field.trim();
            let value: f64 = raw.parse().map_err(|_| IngestError::MalformedRow {
                line: line_no,
                reason: format!("unparseable number {raw:?}"),
            })?;
            if col >= columns.len() {
                return Err(IngestError::MalformedRow {
                    line: line_no,
                    reason: "row has more fields than the header".into(),
                });
            }
            columns[col].push(crate::scalar::real(value));
            col += 1;
        }
        if col != columns.len() {
            return Err(IngestError::MalformedRow {
                line: line_no,
                reason: format!(
                    "row has {col} value fields, header promises {}",
                    columns.len()
                ),
            });
        }
    }
    let start_year = start_year.ok_or(IngestError::Empty)?;
    names
        .into_iter()
        .zip(columns)
        .map(|(name, values)| {
            Ok((
                name,
                TimeSeries::new(start_year, Resolution::Hourly, unit, values)?,
            ))
        })
        .collect()
}

/// Read a single-valued hourly CSV (`timestamp,<value>`), e.g. network demand
/// in MWh or an availability column.
pub fn read_hourly_csv<S: Scalar>(path: &Path, unit: Unit) -> Result<TimeSeries<S>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut values = Vec::with_capacity(Resolution::Hourly.steps_per_year());
    let mut start_year = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if idx == 0 || line.trim().is_empty() {
            continue; // header
        }
        let mut fields = line.split(',');
        let ts = fields.next().unwrap_or("");
        let (year, _) = parse_timestamp(ts).ok_or_else(|| IngestError::MalformedRow {
            line: line_no,
            reason: format!("unparseable timestamp {ts:?}"),
        })?;
        start_year.get_or_insert(year);
        let raw = fields.next().unwrap_or("").trim().to_string();
        let value: f64 = raw.parse().map_err(|_| IngestError::MalformedRow {
            line: line_no,
            reason: format!("unparseable number {raw:?}"),
        })?;
        values.push(crate::scalar::real(value));
    }
    let start_year = start_year.ok_or(IngestError::Empty)?;
    Ok(TimeSeries::new(
        start_year,
        Resolution::Hourly,
        unit,
        values,
    )?)
}
