//! Uniformly sampled time series, CSV ingestion and elementary transforms.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};

use crate::error::{HhtError, Result};
use crate::Real;

/// Uniformly sampled observations `x(1..=T)`.
///
/// Timestamps are labels only; every numeric routine assumes a unit step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    values: Vec<T>,
    timestamps: Option<Vec<String>>,
    name: String,
}

impl<T: Real> TimeSeries<T> {
    pub fn new(name: impl Into<String>, values: Vec<T>) -> Result<Self> {
        Self::with_timestamps(name, values, None)
    }

    pub fn with_timestamps(
        name: impl Into<String>,
        values: Vec<T>,
        timestamps: Option<Vec<String>>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(HhtError::EmptySeries);
        }
        if let Some((index, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(HhtError::ParseValue {
                row: index + 1,
                value: v.to_string(),
            });
        }
        if let Some(ts) = &timestamps {
            if ts.len() != values.len() {
                return Err(HhtError::Range(format!(
                    "{} timestamps for {} values",
                    ts.len(),
                    values.len()
                )));
            }
            check_increasing(ts)?;
        }
        Ok(Self {
            values,
            timestamps,
            name: name.into(),
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn timestamps(&self) -> Option<&[String]> {
        self.timestamps.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same labels, new values. Used by transforms that preserve the time index.
    pub fn map_values(&self, values: Vec<T>) -> Result<Self> {
        Self::with_timestamps(self.name.clone(), values, self.timestamps.clone())
    }

    /// Contiguous 1-based inclusive sub-range `[start, end]`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start < 1 || end < start || end > self.len() {
            return Err(HhtError::Range(format!(
                "slice [{start}, {end}] outside [1, {}]",
                self.len()
            )));
        }
        let ts = self
            .timestamps
            .as_ref()
            .map(|ts| ts[start - 1..end].to_vec());
        Self::with_timestamps(self.name.clone(), self.values[start - 1..end].to_vec(), ts)
    }

    /// Writes `[timestamp,]<name>` rows with shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        match &self.timestamps {
            Some(ts) => {
                w.write_record(["timestamp", self.name.as_str()])?;
                for (t, v) in ts.iter().zip(&self.values) {
                    w.write_record([t.clone(), v.to_string()])?;
                }
            }
            None => {
                w.write_record([self.name.as_str()])?;
                for v in &self.values {
                    w.write_record([v.to_string()])?;
                }
            }
        }
        w.flush().map_err(|source| HhtError::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }
}

/// Loads one value column (and optionally a timestamp column) from a CSV file.
///
/// Lines starting with `#` are treated as comments.
pub fn load_csv<T: Real>(
    path: impl AsRef<Path>,
    value_column: &str,
    timestamp_column: Option<&str>,
) -> Result<TimeSeries<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| HhtError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, value_column, timestamp_column)
}

/// Reader form of [`load_csv`]. Row numbers in errors are 1-based data rows.
pub fn read_csv<T: Real, R: Read>(
    reader: R,
    value_column: &str,
    timestamp_column: Option<&str>,
) -> Result<TimeSeries<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HhtError::MissingColumn(name.to_string()))
    };
    let value_idx = find(value_column)?;
    let ts_idx = timestamp_column.map(find).transpose()?;

    let mut values = Vec::new();
    let mut stamps = ts_idx.map(|_| Vec::new());
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let raw = record
            .get(value_idx)
            .filter(|s| !s.is_empty())
            .ok_or(HhtError::MissingValue { row })?;
        let v: f64 = raw.parse().map_err(|_| HhtError::ParseValue {
            row,
            value: raw.to_string(),
        })?;
        if !v.is_finite() {
            return Err(HhtError::ParseValue {
                row,
                value: raw.to_string(),
            });
        }
        values.push(T::lit(v));
        if let (Some(idx), Some(stamps)) = (ts_idx, stamps.as_mut()) {
            let raw = record
                .get(idx)
                .filter(|s| !s.is_empty())
                .ok_or(HhtError::MissingValue { row })?;
            stamps.push(raw.to_string());
        }
    }
    TimeSeries::with_timestamps(value_column, values, stamps)
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_utc());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt);
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

fn check_increasing(ts: &[String]) -> Result<()> {
    let mut prev: Option<NaiveDateTime> = None;
    for (i, raw) in ts.iter().enumerate() {
        let row = i + 1;
        let t = parse_timestamp(raw).ok_or_else(|| HhtError::ParseTimestamp {
            row,
            value: raw.clone(),
        })?;
        if prev.is_some_and(|p| t <= p) {
            return Err(HhtError::TimestampOrder { row });
        }
        prev = Some(t);
    }
    Ok(())
}

/// Element-wise natural logarithm, e.g. prices to log prices.
pub fn log_transform<T: Real>(series: &TimeSeries<T>) -> Result<TimeSeries<T>> {
    let mut out = Vec::with_capacity(series.len());
    for (i, &v) in series.values().iter().enumerate() {
        if v <= T::zero() {
            return Err(HhtError::NonPositive {
                index: i + 1,
                value: v.to_f64_lossy(),
            });
        }
        out.push(v.ln());
    }
    series.map_values(out)
}

/// Lookback window `(x(t-tau+1), ..., x(t))` with 1-based `t`.
pub fn window<T: Real>(series: &TimeSeries<T>, t: usize, tau: usize) -> Result<&[T]> {
    window_of(series.values(), t, tau)
}

pub(crate) fn window_of<T>(values: &[T], t: usize, tau: usize) -> Result<&[T]> {
    if tau == 0 || t > values.len() || t < tau {
        return Err(HhtError::Range(format!(
            "window t={t}, tau={tau} outside series of length {}",
            values.len()
        )));
    }
    Ok(&values[t - tau..t])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn series(v: &[f64]) -> TimeSeries<f64> {
        TimeSeries::new("x", v.to_vec()).unwrap()
    }

    #[test]
    fn reads_three_rows() {
        let s: TimeSeries<f64> = read_csv("x\n1.0\n2.0\n3.0\n".as_bytes(), "x", None).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn bad_value_names_row() {
        let err = read_csv::<f64, _>("x\n1.0\nabc\n".as_bytes(), "x", None).unwrap_err();
        assert!(matches!(err, HhtError::ParseValue { row: 2, .. }), "{err}");
    }

    #[test]
    fn non_finite_and_missing_are_rejected() {
        let err = read_csv::<f64, _>("x\n1.0\ninf\n".as_bytes(), "x", None).unwrap_err();
        assert!(matches!(err, HhtError::ParseValue { row: 2, .. }));
        let err = read_csv::<f64, _>("x,y\n1.0,2\n,3\n".as_bytes(), "x", None).unwrap_err();
        assert!(matches!(err, HhtError::MissingValue { row: 2 }));
    }

    #[test]
    fn missing_column() {
        let err = read_csv::<f64, _>("x\n1.0\n".as_bytes(), "close", None).unwrap_err();
        assert!(matches!(err, HhtError::MissingColumn(c) if c == "close"));
    }

    #[test]
    fn timestamps_must_increase() {
        let csv = "date,x\n2020-01-02,1\n2020-01-01,2\n";
        let err = read_csv::<f64, _>(csv.as_bytes(), "x", Some("date")).unwrap_err();
        assert!(matches!(err, HhtError::TimestampOrder { row: 2 }));
        let ok = "date,x\n2020-01-01,1\n2020-01-02T10:00:00,2\n";
        let s = read_csv::<f64, _>(ok.as_bytes(), "x", Some("date")).unwrap();
        assert_eq!(s.timestamps().unwrap().len(), 2);
    }

    #[test]
    fn missing_file() {
        let err = load_csv::<f64>("/nonexistent/data.csv", "x", None).unwrap_err();
        assert!(matches!(err, HhtError::Io { .. }));
    }

    #[test]
    fn log_examples() {
        let s = log_transform(&series(&[1.0, E, E * E])).unwrap();
        for (got, want) in s.values().iter().zip([0.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        let s = log_transform(&series(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(s.values(), &[0.0, 0.0, 0.0]);
        let s = log_transform(&series(&[2.0, 0.5])).unwrap();
        assert!((s.values()[0] - 2f64.ln()).abs() < 1e-15);
        assert!(s.values().iter().sum::<f64>().abs() < 1e-15);
        let err = log_transform(&series(&[1.0, 0.0])).unwrap_err();
        assert!(matches!(err, HhtError::NonPositive { index: 2, .. }));
    }

    #[test]
    fn window_examples() {
        let s = series(&[10.0, 20.0, 30.0, 40.0]);
        assert_eq!(window(&s, 4, 2).unwrap(), &[30.0, 40.0]);
        assert_eq!(window(&s, 4, 4).unwrap(), &[10.0, 20.0, 30.0, 40.0]);
        assert!(window(&series(&[10.0, 20.0]), 2, 3).is_err());
        assert!(window(&s, 5, 1).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(values in prop::collection::vec(-1e12f64..1e12, 1..60)) {
            let s = series(&values);
            let mut buf = Vec::new();
            s.write_csv(&mut buf).unwrap();
            let back: TimeSeries<f64> = read_csv(buf.as_slice(), "x", None).unwrap();
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(back.values()), bits(s.values()));
        }

        #[test]
        fn window_ignores_later_samples(
            values in prop::collection::vec(-10.0f64..10.0, 2..40),
            junk in -1e6f64..1e6,
            frac in 0.0f64..1.0,
        ) {
            let t = 1 + ((values.len() - 1) as f64 * frac) as usize;
            let tau = 1 + t / 2;
            let s = series(&values);
            let mut mutated = values.clone();
            for v in mutated.iter_mut().skip(t) {
                *v = junk;
            }
            let m = series(&mutated);
            prop_assert_eq!(window(&s, t, tau).unwrap(), window(&m, t, tau).unwrap());
        }
    }
}
