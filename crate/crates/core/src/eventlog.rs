//! Location-event ingestion and journey reconstruction.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDateTime};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EventLogError {
    #[error("input is missing column {0:?}")]
    MissingColumn(String),
    #[error("malformed delimited input: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("location {0:?} has no category mapping")]
    UnknownLocation(String),
    #[error("empty category for location {0:?}")]
    EmptyCategory(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimestampFormat {
    /// `2018-03-01T14:05:00`, with optional seconds, fraction, `T` or space
    /// separator, or an RFC 3339 offset (converted to UTC).
    Iso8601,
    /// A `chrono` strftime pattern.
    Custom(String),
}

const ISO_PATTERNS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

impl TimestampFormat {
    pub fn parse(&self, raw: &str) -> Option<NaiveDateTime> {
        match self {
            TimestampFormat::Iso8601 => {
                if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
                    return Some(dt.naive_utc());
                }
                ISO_PATTERNS
                    .iter()
                    .find_map(|p| NaiveDateTime::parse_from_str(raw, p).ok())
            }
            TimestampFormat::Custom(pattern) => NaiveDateTime::parse_from_str(raw, pattern).ok(),
        }
    }
}

/// Column layout of an event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogSchema {
    pub admission_column: String,
    pub location_column: String,
    pub timestamp_column: String,
    pub delimiter: u8,
    pub timestamp_format: TimestampFormat,
}

impl Default for LogSchema {
    fn default() -> Self {
        LogSchema {
            admission_column: "admission_id".into(),
            location_column: "location".into(),
            timestamp_column: "timestamp".into(),
            delimiter: b',',
            timestamp_format: TimestampFormat::Iso8601,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocationEvent {
    pub admission_id: String,
    pub location: String,
    pub timestamp: NaiveDateTime,
    /// 1-based position of the data row in the input.
    pub source_row: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub rows_read: usize,
    pub rows_accepted: usize,
    pub rows_rejected: usize,
    pub rejected_by_reason: BTreeMap<String, usize>,
}

impl IngestStats {
    fn reject(&mut self, reason: &str) {
        self.rows_rejected += 1;
        *self.rejected_by_reason.entry(reason.to_string()).or_insert(0) += 1;
    }
}

/// Parses a delimited event log. A missing declared column is fatal; bad
/// rows are rejected and tallied under `timestamp`, `location`, `admission`
/// or `malformed`.
pub fn parse_event_log<R: Read>(
    source: R,
    schema: &LogSchema,
) -> Result<(Vec<LocationEvent>, IngestStats), EventLogError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| EventLogError::MissingColumn(name.to_string()))
    };
    let adm_col = column(&schema.admission_column)?;
    let loc_col = column(&schema.location_column)?;
    let ts_col = column(&schema.timestamp_column)?;

    let mut stats = IngestStats::default();
    let mut events = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => {
                stats.rows_read += 1;
                stats.reject("malformed");
                continue;
            }
        }
        stats.rows_read += 1;
        let (Some(adm), Some(loc), Some(ts)) =
            (record.get(adm_col), record.get(loc_col), record.get(ts_col))
        else {
            stats.reject("malformed");
            continue;
        };
        let (adm, loc, ts) = (adm.trim(), loc.trim(), ts.trim());
        if adm.is_empty() {
            stats.reject("admission");
            continue;
        }
        if loc.is_empty() {
            stats.reject("location");
            continue;
        }
        let Some(timestamp) = schema.timestamp_format.parse(ts) else {
            stats.reject("timestamp");
            continue;
        };
        stats.rows_accepted += 1;
        events.push(LocationEvent {
            admission_id: adm.to_string(),
            location: loc.to_string(),
            timestamp,
            source_row: stats.rows_read,
        });
    }
    Ok((events, stats))
}

/// One admission's ordered sequence of distinct consecutive stops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdmissionJourney {
    pub admission_id: String,
    pub stops: Vec<String>,
    pub times: Vec<NaiveDateTime>,
}

impl AdmissionJourney {
    /// Journey with synthetic hourly timestamps, for fixtures.
    pub fn from_stops(admission_id: &str, stops: &[&str]) -> Self {
        let base = NaiveDateTime::parse_from_str("2015-01-01 00:00", "%Y-%m-%d %H:%M").unwrap();
        AdmissionJourney {
            admission_id: admission_id.to_string(),
            stops: stops.iter().map(|s| s.to_string()).collect(),
            times: (0..stops.len())
                .map(|i| base + chrono::Duration::hours(i as i64))
                .collect(),
        }
    }

    pub fn transfers(&self) -> usize {
        self.stops.len().saturating_sub(1)
    }

    fn push_merged(&mut self, stop: &str, time: NaiveDateTime) {
        if self.stops.last().map(String::as_str) != Some(stop) {
            self.stops.push(stop.to_string());
            self.times.push(time);
        }
    }
}

/// Groups events into journeys ordered by `(timestamp, source_row)`,
/// merging consecutive repeats of a location. Output is sorted by
/// admission id.
pub fn reconstruct_journeys(events: &[LocationEvent]) -> Vec<AdmissionJourney> {
    let mut by_admission: BTreeMap<&str, Vec<&LocationEvent>> = BTreeMap::new();
    for e in events {
        by_admission.entry(&e.admission_id).or_default().push(e);
    }
    by_admission
        .into_iter()
        .map(|(id, mut evs)| {
            evs.sort_by_key(|e| (e.timestamp, e.source_row));
            let mut journey = AdmissionJourney {
                admission_id: id.to_string(),
                stops: Vec::with_capacity(evs.len()),
                times: Vec::with_capacity(evs.len()),
            };
            for e in evs {
                journey.push_merged(&e.location, e.timestamp);
            }
            journey
        })
        .collect()
}

/// Flattens journeys back into events, numbering rows in output order.
pub fn journeys_to_events(journeys: &[AdmissionJourney]) -> Vec<LocationEvent> {
    journeys
        .iter()
        .flat_map(|j| {
            j.stops
                .iter()
                .zip(&j.times)
                .map(move |(stop, &timestamp)| (j.admission_id.as_str(), stop, timestamp))
        })
        .enumerate()
        .map(|(i, (id, stop, timestamp))| LocationEvent {
            admission_id: id.to_string(),
            location: stop.clone(),
            timestamp,
            source_row: i + 1,
        })
        .collect()
}

/// Writes journeys as an event log readable by [`parse_event_log`] under
/// the same schema. Custom timestamp formats are honoured.
pub fn write_event_log<W: Write>(
    journeys: &[AdmissionJourney],
    schema: &LogSchema,
    out: W,
) -> Result<(), EventLogError> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(schema.delimiter)
        .from_writer(out);
    w.write_record([
        &schema.admission_column,
        &schema.location_column,
        &schema.timestamp_column,
    ])?;
    let pattern = match &schema.timestamp_format {
        TimestampFormat::Iso8601 => "%Y-%m-%dT%H:%M:%S",
        TimestampFormat::Custom(p) => p.as_str(),
    };
    for j in journeys {
        for (stop, time) in j.stops.iter().zip(&j.times) {
            w.write_record([
                j.admission_id.as_str(),
                stop.as_str(),
                &time.format(pattern).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownPolicy {
    #[default]
    KeepAsIs,
    RejectUnknown,
}

/// Location -> care-category relabelling.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CategoryMap {
    entries: BTreeMap<String, String>,
    policy: UnknownPolicy,
}

impl CategoryMap {
    pub fn new(
        entries: BTreeMap<String, String>,
        policy: UnknownPolicy,
    ) -> Result<Self, EventLogError> {
        if let Some((loc, _)) = entries.iter().find(|(_, c)| c.trim().is_empty()) {
            return Err(EventLogError::EmptyCategory(loc.clone()));
        }
        Ok(CategoryMap { entries, policy })
    }

    /// Reads a two-column `location,category` file with a header row.
    pub fn from_reader<R: Read>(
        source: R,
        delimiter: u8,
        policy: UnknownPolicy,
    ) -> Result<Self, EventLogError> {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(source);
        let mut entries = BTreeMap::new();
        for record in reader.records() {
            let record = record?;
            let loc = record.get(0).unwrap_or("");
            let cat = record.get(1).unwrap_or("");
            if loc.is_empty() {
                continue;
            }
            entries.insert(loc.to_string(), cat.to_string());
        }
        Self::new(entries, policy)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn policy(&self) -> UnknownPolicy {
        self.policy
    }

    pub fn category_of<'a>(&'a self, location: &'a str) -> Result<&'a str, EventLogError> {
        match (self.entries.get(location), self.policy) {
            (Some(c), _) => Ok(c),
            (None, UnknownPolicy::KeepAsIs) => Ok(location),
            (None, UnknownPolicy::RejectUnknown) => {
                Err(EventLogError::UnknownLocation(location.to_string()))
            }
        }
    }
}

/// Relabels every stop and re-merges consecutive stops that now share a
/// category, keeping the earliest timestamp.
pub fn apply_category_map(
    journeys: &[AdmissionJourney],
    map: &CategoryMap,
) -> Result<Vec<AdmissionJourney>, EventLogError> {
    journeys
        .iter()
        .map(|j| {
            let mut out = AdmissionJourney {
                admission_id: j.admission_id.clone(),
                stops: Vec::with_capacity(j.stops.len()),
                times: Vec::with_capacity(j.times.len()),
            };
            for (stop, &time) in j.stops.iter().zip(&j.times) {
                out.push_merged(map.category_of(stop)?, time);
            }
            Ok(out)
        })
        .collect()
}
