//! Sensor reading files and per-window summaries.

use std::collections::BTreeMap;
use std::str::FromStr;

use chrono::{DateTime, Duration, DurationRound, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{mean, sample_variance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub sensor_id: String,
    pub timestamp: DateTime<Utc>,
    pub value: f64,
    pub measure: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadingFormat {
    Csv,
    Json,
}

impl FromStr for ReadingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Parses `sensor_id,timestamp,value,measure` rows (RFC 3339 timestamps), or a
/// JSON array of objects with the same fields.
///
/// A CSV header row naming `sensor_id` first is skipped. Rows are numbered
/// from 1 in error reports.
pub fn parse_readings(source: &[u8], format: ReadingFormat) -> Result<Vec<SensorReading>> {
    let text = std::str::from_utf8(source).map_err(|e| Error::MalformedRow { row: 0, reason: format!("not UTF-8: {e}") })?;
    match format {
        ReadingFormat::Csv => parse_csv(text),
        ReadingFormat::Json => parse_json(text),
    }
}

fn parse_csv(text: &str) -> Result<Vec<SensorReading>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::MalformedRow { row, reason: e.to_string() })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if row == 1 && record.get(0) == Some("sensor_id") {
            continue;
        }
        if record.len() != 4 {
            return Err(Error::MalformedRow { row, reason: format!("expected 4 fields, found {}", record.len()) });
        }
        out.push(reading_from_fields(row, &record[0], &record[1], &record[2], &record[3])?);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct RawReading {
    sensor_id: String,
    timestamp: String,
    value: serde_json::Value,
    measure: String,
}

fn parse_json(text: &str) -> Result<Vec<SensorReading>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let items: Vec<serde_json::Value> =
        serde_json::from_str(text).map_err(|e| Error::MalformedRow { row: 0, reason: e.to_string() })?;
    items
        .into_iter()
        .enumerate()
        .map(|(i, item)| {
            let row = i + 1;
            let raw: RawReading = serde_json::from_value(item).map_err(|e| Error::MalformedRow { row, reason: e.to_string() })?;
            let value = match &raw.value {
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::String(s) => s.clone(),
                other => return Err(Error::MalformedRow { row, reason: format!("value {other} is not a number") }),
            };
            reading_from_fields(row, &raw.sensor_id, &raw.timestamp, &value, &raw.measure)
        })
        .collect()
}

fn reading_from_fields(row: usize, sensor_id: &str, timestamp: &str, value: &str, measure: &str) -> Result<SensorReading> {
    let bad = |reason: String| Error::MalformedRow { row, reason };
    if sensor_id.is_empty() {
        return Err(bad("empty sensor_id".into()));
    }
    let timestamp = DateTime::parse_from_rfc3339(timestamp)
        .map_err(|e| bad(format!("timestamp {timestamp:?}: {e}")))?
        .with_timezone(&Utc);
    let value: f64 = value.parse().map_err(|_| bad(format!("value {value:?} is not a number")))?;
    if !value.is_finite() {
        return Err(bad(format!("value {value} is not finite")));
    }
    Ok(SensorReading { sensor_id: sensor_id.to_string(), timestamp, value, measure: measure.to_string() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSummary {
    pub sensor_id: String,
    pub measure: String,
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    pub mean: f64,
    /// Unbiased sample variance; absent below two readings.
    pub variance: Option<f64>,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<(f64, f64)>,
}

/// Start of the clock hour containing `t`.
pub fn align_to_hour(t: DateTime<Utc>) -> DateTime<Utc> {
    t.duration_trunc(Duration::hours(1)).expect("hour truncation in range")
}

/// Mean and variance per sensor over `[aligned_to, aligned_to + window)`.
///
/// Output is sorted by sensor id then measure. Values are combined in
/// sorted order so the result does not depend on input order.
pub fn summarize_window(readings: &[SensorReading], window: Duration, aligned_to: DateTime<Utc>) -> Vec<SensorSummary> {
    let end = aligned_to + window;
    let mut groups: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for r in readings.iter().filter(|r| r.timestamp >= aligned_to && r.timestamp < end) {
        groups.entry((r.sensor_id.as_str(), r.measure.as_str())).or_default().push(r.value);
    }
    groups
        .into_iter()
        .map(|((sensor_id, measure), mut values)| {
            values.sort_by(f64::total_cmp);
            SensorSummary {
                sensor_id: sensor_id.to_string(),
                measure: measure.to_string(),
                window_start: aligned_to,
                window_end: end,
                mean: mean(&values).expect("group is non-empty"),
                variance: sample_variance(&values),
                count: values.len(),
                location: None,
            }
        })
        .collect()
}

/// Fills `location` from a sensor id lookup.
pub fn attach_locations(summaries: &mut [SensorSummary], locations: &BTreeMap<String, (f64, f64)>) {
    for s in summaries {
        s.location = locations.get(&s.sensor_id).copied();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    #[test]
    fn parse_one_row() {
        let r = parse_readings(b"s1,2019-07-01T10:05:00Z,13.5,temperature", ReadingFormat::Csv).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].sensor_id, "s1");
        assert_eq!(r[0].value, 13.5);
        assert_eq!(r[0].timestamp, at("2019-07-01T10:05:00Z"));
        assert_eq!(r[0].measure, "temperature");
    }

    #[test]
    fn parse_empty() {
        assert!(parse_readings(b"", ReadingFormat::Csv).unwrap().is_empty());
        assert!(parse_readings(b"", ReadingFormat::Json).unwrap().is_empty());
        assert!(parse_readings(b"[]", ReadingFormat::Json).unwrap().is_empty());
    }

    #[test]
    fn malformed_rows() {
        let e = parse_readings(b"s1,not-a-time,13.5,temperature", ReadingFormat::Csv).unwrap_err();
        assert!(matches!(e, Error::MalformedRow { row: 1, .. }), "{e:?}");
        let e = parse_readings(
            b"sensor_id,timestamp,value,measure\ns1,2019-07-01T10:05:00Z,13.5,t\ns1,2019-07-01T10:06:00Z,hot,t",
            ReadingFormat::Csv,
        )
        .unwrap_err();
        assert!(matches!(e, Error::MalformedRow { row: 3, .. }), "{e:?}");
        let e = parse_readings(b"s1,2019-07-01T10:05:00Z,13.5", ReadingFormat::Csv).unwrap_err();
        assert!(matches!(e, Error::MalformedRow { row: 1, .. }));
        assert!(matches!("xml".parse::<ReadingFormat>(), Err(Error::UnknownFormat(_))));
        assert!(parse_readings(&[0xff, 0xfe], ReadingFormat::Csv).is_err());
    }

    #[test]
    fn parse_json_rows() {
        let src = br#"[{"sensor_id":"a","timestamp":"2019-07-01T10:00:00+01:00","value":1.5,"measure":"t"},
                      {"sensor_id":"b","timestamp":"2019-07-01T10:00:00Z","value":"2","measure":"t"}]"#;
        let r = parse_readings(src, ReadingFormat::Json).unwrap();
        assert_eq!(r[0].timestamp, at("2019-07-01T09:00:00Z"));
        assert_eq!(r[1].value, 2.0);
        let bad = br#"[{"sensor_id":"a","timestamp":"2019-07-01T10:00:00Z","value":1,"measure":"t"},{"sensor_id":"a"}]"#;
        assert!(matches!(parse_readings(bad, ReadingFormat::Json), Err(Error::MalformedRow { row: 2, .. })));
    }

    #[test]
    fn window_examples() {
        let csv = "s1,2019-07-01T10:05:00Z,10,t\n\
                   s1,2019-07-01T10:25:00Z,12,t\n\
                   s1,2019-07-01T10:59:59Z,14,t\n\
                   s2,2019-07-01T10:30:00Z,13.5,t\n\
                   s3,2019-07-01T11:00:00Z,99,t\n";
        let readings = parse_readings(csv.as_bytes(), ReadingFormat::Csv).unwrap();
        let start = align_to_hour(at("2019-07-01T10:42:00Z"));
        assert_eq!(start, at("2019-07-01T10:00:00Z"));
        let s = summarize_window(&readings, Duration::hours(1), start);
        assert_eq!(s.len(), 2, "s3 falls in the next hour");
        assert_eq!((s[0].mean, s[0].variance, s[0].count), (12.0, Some(4.0), 3));
        assert_eq!((s[1].mean, s[1].variance, s[1].count), (13.5, None, 1));
        assert_eq!(s[0].window_end, at("2019-07-01T11:00:00Z"));
    }

    #[test]
    fn locations() {
        let r = parse_readings(b"s1,2019-07-01T10:05:00Z,1,t", ReadingFormat::Csv).unwrap();
        let mut s = summarize_window(&r, Duration::hours(1), at("2019-07-01T10:00:00Z"));
        let mut map = BTreeMap::new();
        map.insert("s1".to_string(), (3.0, 4.0));
        attach_locations(&mut s, &map);
        assert_eq!(s[0].location, Some((3.0, 4.0)));
    }
}
