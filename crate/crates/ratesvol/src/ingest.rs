//! Loading, validation, and alignment of the monthly input series.
//!
//! Rates stay in percent per annum as published; conversion to decimals
//! happens only inside bond pricing. Volatility stays in raw index
//! points. Rows with missing values are dropped and counted, never
//! interpolated.

use crate::dates::{first_gap, YearMonth};
use crate::linalg::Mat;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// Sanity band for rate values, percent units.
pub const RATE_MIN: f64 = -5.0;
pub const RATE_MAX: f64 = 50.0;
/// Minimum usable sample, months.
pub const MIN_MONTHS: usize = 24;
/// Minimum daily observations for a month to count.
pub const MIN_DAILY_OBS: usize = 15;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed delimited file: {0}")]
    Malformed(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("dates not strictly increasing by calendar month at row {row} ({date})")]
    NonMonotoneDates { row: usize, date: String },
    #[error("non-finite value in column `{column}` at row {row}")]
    NonFiniteValue { column: String, row: usize },
    #[error("value {value} in column `{column}` at row {row} outside sanity band [{RATE_MIN}, {RATE_MAX}]")]
    ValueOutOfRange { column: String, row: usize, value: f64 },
    #[error("non-positive volatility {value} at row {row}")]
    NonPositiveVol { row: usize, value: f64 },
    #[error("month {month} has only {count} daily observations (need >= {MIN_DAILY_OBS})")]
    SparseMonth { month: YearMonth, count: usize },
    #[error("series too short: {len} months (need >= {MIN_MONTHS})")]
    TooShort { len: usize },
    #[error("panel needs at least 2 maturity columns, found {0}")]
    TooFewMaturities(usize),
    #[error("date ranges overlap by {overlap} months (need >= {MIN_MONTHS})")]
    InsufficientOverlap { overlap: usize },
}

/// Maps file columns to panel roles.
#[derive(Debug, Clone)]
pub struct ColumnLayout {
    /// Name of the date column.
    pub date_column: String,
    /// Explicit (column name, maturity in years) pairs; when `None`,
    /// every non-date column with a trailing integer is used, with the
    /// integer read as the maturity in years.
    pub maturity_columns: Option<Vec<(String, u32)>>,
}

impl Default for ColumnLayout {
    fn default() -> Self {
        Self { date_column: "DATE".to_string(), maturity_columns: None }
    }
}

/// Date-indexed matrix of zero-coupon rates by maturity, percent per
/// annum.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePanel {
    pub dates: Vec<YearMonth>,
    /// Maturities in years, strictly increasing.
    pub maturities: Vec<u32>,
    /// T x M rate matrix, percent.
    pub values: Mat,
}

impl RatePanel {
    pub fn n_months(&self) -> usize {
        self.dates.len()
    }

    pub fn n_maturities(&self) -> usize {
        self.maturities.len()
    }

    fn validate(&self) -> Result<(), IngestError> {
        if self.n_maturities() < 2 {
            return Err(IngestError::TooFewMaturities(self.n_maturities()));
        }
        // the >= 24 month floor is enforced where it matters functionally
        // (alignment overlap and estimation windows); tiny files still load
        if self.n_months() < 2 {
            return Err(IngestError::TooShort { len: self.n_months() });
        }
        if let Some(i) = first_gap(&self.dates) {
            return Err(IngestError::NonMonotoneDates { row: i, date: self.dates[i].to_string() });
        }
        for i in 0..self.n_months() {
            for (j, &m) in self.maturities.iter().enumerate() {
                let v = self.values[(i, j)];
                if !v.is_finite() {
                    return Err(IngestError::NonFiniteValue { column: format!("{m}y"), row: i });
                }
                if !(RATE_MIN..=RATE_MAX).contains(&v) {
                    return Err(IngestError::ValueOutOfRange {
                        column: format!("{m}y"),
                        row: i,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Monthly volatility levels, raw index points.
#[derive(Debug, Clone, PartialEq)]
pub struct VolSeries {
    pub dates: Vec<YearMonth>,
    pub values: Vec<f64>,
}

impl VolSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn log_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.ln()).collect()
    }

    fn validate(&self) -> Result<(), IngestError> {
        if let Some(i) = first_gap(&self.dates) {
            return Err(IngestError::NonMonotoneDates { row: i, date: self.dates[i].to_string() });
        }
        for (i, &v) in self.values.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(IngestError::NonPositiveVol { row: i, value: v });
            }
        }
        Ok(())
    }
}

/// Rate panel and volatility series truncated to a common date range.
#[derive(Debug, Clone)]
pub struct AlignedDataset {
    pub panel: RatePanel,
    pub vol: VolSeries,
}

impl AlignedDataset {
    pub fn dates(&self) -> &[YearMonth] {
        &self.panel.dates
    }
}

/// Counters emitted alongside a load.
#[derive(Debug, Clone, Serialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub range: Option<DateRange>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DateRange {
    pub start: String,
    pub end: String,
}

/// Input frequency of a volatility file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolFrequency {
    Daily,
    Monthly,
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(false).from_reader(file))
}

fn is_missing(field: &str) -> bool {
    field.is_empty() || field == "." || field.eq_ignore_ascii_case("na")
}

/// Loads a rate panel from a delimited file (comma separator, dot
/// decimal, header row). Rows with any missing maturity value are
/// dropped and counted in the report.
pub fn load_rate_panel(
    path: &Path,
    layout: &ColumnLayout,
) -> Result<(RatePanel, LoadReport), IngestError> {
    let mut reader = open_csv(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| IngestError::Malformed(e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();

    let date_idx = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(&layout.date_column))
        .ok_or_else(|| IngestError::MissingColumn(layout.date_column.clone()))?;

    // resolve maturity columns: explicit map, or trailing-integer scan
    let mut cols: Vec<(usize, String, u32)> = Vec::new();
    match &layout.maturity_columns {
        Some(explicit) => {
            for (name, years) in explicit {
                let idx = headers
                    .iter()
                    .position(|h| h.eq_ignore_ascii_case(name))
                    .ok_or_else(|| IngestError::MissingColumn(name.clone()))?;
                cols.push((idx, name.clone(), *years));
            }
        }
        None => {
            for (idx, h) in headers.iter().enumerate() {
                if idx == date_idx {
                    continue;
                }
                let digits: String =
                    h.chars().rev().take_while(|c| c.is_ascii_digit()).collect::<Vec<_>>().into_iter().rev().collect();
                if digits.is_empty() {
                    continue;
                }
                if let Ok(years) = digits.parse::<u32>() {
                    cols.push((idx, h.clone(), years));
                }
            }
        }
    }
    cols.sort_by_key(|&(_, _, years)| years);
    if cols.len() < 2 {
        return Err(IngestError::TooFewMaturities(cols.len()));
    }

    let mut dates: Vec<YearMonth> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rows_read = 0usize;
    let mut rows_dropped = 0usize;

    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(|e| IngestError::Malformed(e.to_string()))?;
        rows_read += 1;
        let date_field = record.get(date_idx).unwrap_or("");
        let date: YearMonth = date_field
            .parse()
            .map_err(|_| IngestError::Malformed(format!("bad date `{date_field}` at row {row_no}")))?;

        let mut row = Vec::with_capacity(cols.len());
        let mut missing = false;
        for (idx, name, _) in &cols {
            let field = record.get(*idx).unwrap_or("");
            if is_missing(field) {
                missing = true;
                break;
            }
            let v: f64 = field.parse().map_err(|_| IngestError::NonFiniteValue {
                column: name.clone(),
                row: row_no,
            })?;
            if !v.is_finite() {
                return Err(IngestError::NonFiniteValue { column: name.clone(), row: row_no });
            }
            row.push(v);
        }
        if missing {
            rows_dropped += 1;
            continue;
        }
        dates.push(date);
        rows.push(row);
    }

    let panel = RatePanel {
        dates,
        maturities: cols.iter().map(|&(_, _, y)| y).collect(),
        values: Mat::from_rows(&rows),
    };
    panel.validate()?;
    let report = LoadReport {
        rows_read,
        rows_dropped,
        range: Some(DateRange {
            start: panel.dates[0].to_string(),
            end: panel.dates[panel.dates.len() - 1].to_string(),
        }),
    };
    Ok((panel, report))
}

/// Loads a volatility series. Daily input is aggregated to calendar-month
/// arithmetic means; monthly input passes through.
pub fn load_vol(
    path: &Path,
    frequency: VolFrequency,
) -> Result<(VolSeries, LoadReport), IngestError> {
    let mut reader = open_csv(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| IngestError::Malformed(e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if headers.len() < 2 {
        return Err(IngestError::Malformed("need a date column and a value column".into()));
    }

    let mut rows_read = 0usize;
    let mut rows_dropped = 0usize;
    let mut raw: Vec<(YearMonth, f64)> = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(|e| IngestError::Malformed(e.to_string()))?;
        rows_read += 1;
        let date_field = record.get(0).unwrap_or("");
        let value_field = record.get(1).unwrap_or("");
        if is_missing(value_field) {
            rows_dropped += 1;
            continue;
        }
        let date: YearMonth = date_field
            .parse()
            .map_err(|_| IngestError::Malformed(format!("bad date `{date_field}` at row {row_no}")))?;
        let value: f64 = value_field.parse().map_err(|_| IngestError::NonFiniteValue {
            column: headers[1].clone(),
            row: row_no,
        })?;
        if !value.is_finite() || value <= 0.0 {
            return Err(IngestError::NonPositiveVol { row: row_no, value });
        }
        raw.push((date, value));
    }

    let series = match frequency {
        VolFrequency::Monthly => {
            VolSeries { dates: raw.iter().map(|&(d, _)| d).collect(), values: raw.iter().map(|&(_, v)| v).collect() }
        }
        VolFrequency::Daily => {
            let mut by_month: BTreeMap<YearMonth, (f64, usize)> = BTreeMap::new();
            for (d, v) in raw {
                let e = by_month.entry(d).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
            let mut dates = Vec::with_capacity(by_month.len());
            let mut values = Vec::with_capacity(by_month.len());
            for (month, (sum, count)) in by_month {
                if count < MIN_DAILY_OBS {
                    return Err(IngestError::SparseMonth { month, count });
                }
                dates.push(month);
                values.push(sum / count as f64);
            }
            VolSeries { dates, values }
        }
    };
    series.validate()?;
    if series.is_empty() {
        return Err(IngestError::TooShort { len: 0 });
    }
    let report = LoadReport {
        rows_read,
        rows_dropped,
        range: Some(DateRange {
            start: series.dates[0].to_string(),
            end: series.dates[series.len() - 1].to_string(),
        }),
    };
    Ok((series, report))
}

/// Truncates both series to the intersection of their date ranges.
pub fn align(panel: &RatePanel, vol: &VolSeries) -> Result<AlignedDataset, IngestError> {
    let start = panel.dates[0].max(vol.dates[0]);
    let end = panel.dates[panel.n_months() - 1].min(vol.dates[vol.len() - 1]);
    let overlap = if end >= start { end.months_since(start) + 1 } else { 0 };
    if overlap < MIN_MONTHS as i64 {
        return Err(IngestError::InsufficientOverlap { overlap: overlap.max(0) as usize });
    }

    let p0 = start.months_since(panel.dates[0]) as usize;
    let p1 = end.months_since(panel.dates[0]) as usize;
    let v0 = start.months_since(vol.dates[0]) as usize;
    let v1 = end.months_since(vol.dates[0]) as usize;

    let dates: Vec<YearMonth> = panel.dates[p0..=p1].to_vec();
    let values = Mat::from_fn(dates.len(), panel.n_maturities(), |i, j| panel.values[(p0 + i, j)]);
    let aligned_panel = RatePanel { dates: dates.clone(), maturities: panel.maturities.clone(), values };
    let aligned_vol = VolSeries { dates, values: vol.values[v0..=v1].to_vec() };

    debug_assert_eq!(aligned_panel.dates, aligned_vol.dates);
    aligned_panel.validate()?;
    aligned_vol.validate()?;
    Ok(AlignedDataset { panel: aligned_panel, vol: aligned_vol })
}

/// Writes a rate panel back to delimited text. Values use the shortest
/// decimal representation that round-trips, so reloading reproduces the
/// panel bit-exactly.
pub fn write_rate_panel(panel: &RatePanel, path: &Path) -> Result<(), IngestError> {
    let mut file = std::fs::File::create(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let io_err = |source: std::io::Error| IngestError::Io { path: path.display().to_string(), source };
    let header: Vec<String> =
        std::iter::once("DATE".to_string()).chain(panel.maturities.iter().map(|m| format!("ZCR{m}"))).collect();
    writeln!(file, "{}", header.join(",")).map_err(io_err)?;
    for (i, date) in panel.dates.iter().enumerate() {
        let mut fields = vec![date.to_string()];
        for j in 0..panel.n_maturities() {
            fields.push(format!("{}", panel.values[(i, j)]));
        }
        writeln!(file, "{}", fields.join(",")).map_err(io_err)?;
    }
    Ok(())
}

/// Writes a volatility series to delimited text.
pub fn write_vol(vol: &VolSeries, path: &Path) -> Result<(), IngestError> {
    let mut file = std::fs::File::create(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let io_err = |source: std::io::Error| IngestError::Io { path: path.display().to_string(), source };
    writeln!(file, "DATE,VOL").map_err(io_err)?;
    for (d, v) in vol.dates.iter().zip(&vol.values) {
        writeln!(file, "{d},{v}").map_err(io_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn small_panel_csv(rows: usize) -> String {
        let mut s = String::from("DATE,ZC1,ZC2,ZC3,ZC4,ZC5,ZC6,ZC7,ZC8,ZC9,ZC10\n");
        let mut ym = YearMonth::new(1990, 1);
        for i in 0..rows {
            s.push_str(&ym.to_string());
            for j in 0..10 {
                s.push_str(&format!(",{}", 4.0 + 0.1 * j as f64 + 0.01 * i as f64));
            }
            s.push('\n');
            ym = ym.next();
        }
        s
    }

    #[test]
    fn loads_identity_panel() {
        let f = write_temp(&small_panel_csv(3));
        let (panel, report) = load_rate_panel(f.path(), &ColumnLayout::default()).unwrap();
        assert_eq!(panel.n_months(), 3);
        assert_eq!(panel.n_maturities(), 10);
        assert_eq!(panel.maturities, (1..=10).collect::<Vec<_>>());
        assert_eq!(report.rows_read, 3);
        assert_eq!(report.rows_dropped, 0);
        assert!((panel.values[(2, 3)] - 4.32).abs() < 1e-12);
    }

    #[test]
    fn duplicated_month_is_non_monotone() {
        let mut s = small_panel_csv(30);
        // duplicate the last line
        let last = s.lines().last().unwrap().to_string();
        s.push_str(&last);
        s.push('\n');
        let f = write_temp(&s);
        let err = load_rate_panel(f.path(), &ColumnLayout::default()).unwrap_err();
        assert!(matches!(err, IngestError::NonMonotoneDates { .. }));
    }

    #[test]
    fn missing_cells_are_dropped_and_counted() {
        let mut s = String::from("DATE,ZC1,ZC2\n");
        let mut ym = YearMonth::new(2000, 1);
        for i in 0..25 {
            s.push_str(&format!("{ym},{},2.0\n", if i == 24 { ".".into() } else { format!("{}", 1.0) }));
            ym = ym.next();
        }
        let f = write_temp(&s);
        let (panel, report) = load_rate_panel(f.path(), &ColumnLayout::default()).unwrap();
        assert_eq!(report.rows_read, 25);
        assert_eq!(report.rows_dropped, 1);
        assert_eq!(panel.n_months(), 24);
    }

    #[test]
    fn missing_column_is_reported() {
        let f = write_temp("when,ZC1,ZC2\n2000-01,1.0,2.0\n");
        let err = load_rate_panel(f.path(), &ColumnLayout::default()).unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn(c) if c == "DATE"));
    }

    #[test]
    fn vol_monthly_pass_through() {
        let f = write_temp("DATE,VIX\n2000-01,19.0\n2000-02,21.5\n");
        let (vol, _) = load_vol(f.path(), VolFrequency::Monthly).unwrap();
        assert_eq!(vol.values, vec![19.0, 21.5]);
    }

    #[test]
    fn vol_daily_aggregates_to_month_mean() {
        let mut s = String::from("DATE,VIX\n");
        for day in 1..=20 {
            s.push_str(&format!("2000-01-{day:02},18.0\n"));
        }
        let f = write_temp(&s);
        let (vol, _) = load_vol(f.path(), VolFrequency::Daily).unwrap();
        assert_eq!(vol.dates, vec![YearMonth::new(2000, 1)]);
        // mean of twenty identical values is exact
        assert_eq!(vol.values[0], 18.0);
    }

    #[test]
    fn vol_daily_constant_mean_within_ulp() {
        let mut s = String::from("DATE,VIX\n");
        for day in 1..=19 {
            s.push_str(&format!("2000-01-{day:02},17.31\n"));
        }
        let f = write_temp(&s);
        let (vol, _) = load_vol(f.path(), VolFrequency::Daily).unwrap();
        let diff_ulps = (vol.values[0].to_bits() as i64 - 17.31f64.to_bits() as i64).abs();
        assert!(diff_ulps <= 1, "off by {diff_ulps} ulps");
    }

    #[test]
    fn vol_rejects_zero() {
        let f = write_temp("DATE,VIX\n2000-01-03,18.0\n2000-01-04,0.0\n");
        let err = load_vol(f.path(), VolFrequency::Daily).unwrap_err();
        assert!(matches!(err, IngestError::NonPositiveVol { .. }));
    }

    #[test]
    fn vol_rejects_sparse_month() {
        let mut s = String::from("DATE,VIX\n");
        for day in 1..=10 {
            s.push_str(&format!("2000-01-{day:02},18.0\n"));
        }
        let f = write_temp(&s);
        let err = load_vol(f.path(), VolFrequency::Daily).unwrap_err();
        assert!(matches!(err, IngestError::SparseMonth { count: 10, .. }));
    }

    fn toy_panel(start: YearMonth, months: usize) -> RatePanel {
        let mut dates = vec![start];
        for _ in 1..months {
            dates.push(dates.last().unwrap().next());
        }
        RatePanel {
            dates,
            maturities: vec![1, 2],
            values: Mat::from_fn(months, 2, |i, j| 3.0 + j as f64 + 0.001 * i as f64),
        }
    }

    fn toy_vol(start: YearMonth, months: usize) -> VolSeries {
        let mut dates = vec![start];
        for _ in 1..months {
            dates.push(dates.last().unwrap().next());
        }
        VolSeries { dates, values: vec![20.0; months] }
    }

    #[test]
    fn align_identity_when_ranges_match() {
        let p = toy_panel(YearMonth::new(1990, 1), 30);
        let v = toy_vol(YearMonth::new(1990, 1), 30);
        let a = align(&p, &v).unwrap();
        assert_eq!(a.panel, p);
        assert_eq!(a.vol, v);
    }

    #[test]
    fn align_truncates_to_intersection() {
        let p = toy_panel(YearMonth::new(1990, 1), 48);
        let v = toy_vol(YearMonth::new(1986, 1), 96); // 1986-01 .. 1993-12
        let a = align(&p, &v).unwrap();
        assert_eq!(a.dates()[0], YearMonth::new(1990, 1));
        assert_eq!(*a.dates().last().unwrap(), YearMonth::new(1993, 12));
        assert_eq!(a.panel.n_months(), 48);
        assert_eq!(a.vol.len(), 48);
    }

    #[test]
    fn align_is_idempotent() {
        let p = toy_panel(YearMonth::new(1990, 6), 60);
        let v = toy_vol(YearMonth::new(1989, 1), 90);
        let a = align(&p, &v).unwrap();
        let b = align(&a.panel, &a.vol).unwrap();
        assert_eq!(a.panel, b.panel);
        assert_eq!(a.vol, b.vol);
    }

    #[test]
    fn align_rejects_disjoint_ranges() {
        let p = toy_panel(YearMonth::new(1990, 1), 30);
        let v = toy_vol(YearMonth::new(2000, 1), 30);
        let err = align(&p, &v).unwrap_err();
        assert!(matches!(err, IngestError::InsufficientOverlap { overlap: 0 }));
    }

    #[test]
    fn panel_round_trip_is_bit_exact() {
        let p = toy_panel(YearMonth::new(1995, 3), 36);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("panel.csv");
        write_rate_panel(&p, &path).unwrap();
        let layout = ColumnLayout::default();
        let (back, _) = load_rate_panel(&path, &layout).unwrap();
        assert_eq!(back.dates, p.dates);
        assert_eq!(back.maturities, p.maturities);
        assert_eq!(back.values.data(), p.values.data());
        // writing again yields identical text
        let path2 = dir.path().join("panel2.csv");
        write_rate_panel(&back, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }
}
