//! Strong-label annotations and exact event timing.
//!
//! Times are integer microseconds. Annotation files carry decimal seconds;
//! parsing maps them to microseconds without an intermediate float, so
//! collar comparisons at exact boundaries are deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::AnnotError;

/// A point in time or a duration, in integer microseconds.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct Time(pub i64);

impl Time {
    pub const ZERO: Time = Time(0);

    /// Time of sample `index` at `sample_rate`, rounded half up to a microsecond.
    pub fn from_samples(index: usize, sample_rate: u32) -> Time {
        let sr = i128::from(sample_rate);
        let us = (index as i128 * 1_000_000 + sr / 2) / sr;
        Time(us as i64)
    }

    /// Whole milliseconds expressed as a time.
    pub fn from_millis(ms: i64) -> Time {
        Time(ms * 1000)
    }

    /// Parse a non-negative decimal-seconds string exactly.
    ///
    /// Up to six fractional digits map one-to-one onto microseconds; a
    /// seventh digit rounds half up. Signs, exponents, and non-digit
    /// characters are rejected.
    pub fn from_decimal_str(s: &str) -> Result<Time, String> {
        let s = s.trim();
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(format!("invalid time {s:?}"));
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(format!("invalid time {s:?}"));
        }
        if int_part.len() > 9 {
            return Err(format!("time out of range {s:?}"));
        }
        let whole: i64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| format!("invalid time {s:?}"))?
        };
        let mut micros: i64 = 0;
        for (k, b) in frac_part.bytes().take(6).enumerate() {
            micros += i64::from(b - b'0') * 10i64.pow(5 - k as u32);
        }
        if frac_part.len() > 6 && frac_part.as_bytes()[6] >= b'5' {
            micros += 1;
        }
        Ok(Time(whole * 1_000_000 + micros))
    }

    /// Seconds as f64, for binning and display only.
    pub fn as_seconds(self) -> f64 {
        self.0 as f64 / 1e6
    }

    /// Absolute difference.
    pub fn abs_diff(self, other: Time) -> Time {
        Time((self.0 - other.0).abs())
    }

    pub fn saturating_sub(self, other: Time) -> Time {
        Time((self.0 - other.0).max(0))
    }

    /// Decimal seconds with three fractional digits, rounded half up.
    pub fn format_3dp(self) -> String {
        debug_assert!(self.0 >= 0);
        let ms = (self.0 + 500) / 1000;
        format!("{}.{:03}", ms / 1000, ms % 1000)
    }
}

impl std::ops::Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0 - rhs.0)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.format_3dp())
    }
}

/// One labeled event inside one clip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventAnnotation {
    pub clip_id: String,
    pub label: String,
    pub onset: Time,
    pub offset: Time,
}

impl EventAnnotation {
    /// Construct with the onset/offset invariant enforced.
    pub fn new(
        clip_id: impl Into<String>,
        label: impl Into<String>,
        onset: Time,
        offset: Time,
    ) -> Result<EventAnnotation, AnnotError> {
        let clip_id = clip_id.into();
        let label = label.into();
        if onset.0 < 0 || onset >= offset {
            return Err(AnnotError::Invalid {
                message: format!(
                    "clip {clip_id:?} event {label:?}: need 0 <= onset < offset, got [{onset}, {offset}]"
                ),
            });
        }
        Ok(EventAnnotation {
            clip_id,
            label,
            onset,
            offset,
        })
    }

    pub fn duration(&self) -> Time {
        self.offset - self.onset
    }

    fn sort_key(&self) -> (Time, Time, &str) {
        (self.onset, self.offset, self.label.as_str())
    }
}

/// Strong labels for a whole suite: per-clip sorted event lists plus the
/// roster of all clips, so clips without events still count as present.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationSet {
    clips: BTreeMap<String, Vec<EventAnnotation>>,
    roster: BTreeSet<String>,
}

impl AnnotationSet {
    pub fn new() -> AnnotationSet {
        AnnotationSet::default()
    }

    /// Register a clip with no events (yet).
    pub fn add_clip(&mut self, clip_id: impl Into<String>) {
        self.roster.insert(clip_id.into());
    }

    /// Insert one annotation, keeping the clip's list sorted.
    pub fn push(&mut self, ann: EventAnnotation) {
        self.roster.insert(ann.clip_id.clone());
        let list = self.clips.entry(ann.clip_id.clone()).or_default();
        let pos = list.partition_point(|e| e.sort_key() <= ann.sort_key());
        list.insert(pos, ann);
    }

    pub fn roster(&self) -> impl Iterator<Item = &str> {
        self.roster.iter().map(String::as_str)
    }

    pub fn has_clip(&self, clip_id: &str) -> bool {
        self.roster.contains(clip_id)
    }

    pub fn clip_count(&self) -> usize {
        self.roster.len()
    }

    /// Events of one clip (empty slice for an event-less roster clip).
    pub fn events(&self, clip_id: &str) -> &[EventAnnotation] {
        self.clips.get(clip_id).map_or(&[], Vec::as_slice)
    }

    pub fn iter_events(&self) -> impl Iterator<Item = &EventAnnotation> {
        self.clips.values().flatten()
    }

    pub fn event_count(&self) -> usize {
        self.clips.values().map(Vec::len).sum()
    }

    /// Distinct labels appearing in any annotation.
    pub fn labels(&self) -> BTreeSet<String> {
        self.iter_events().map(|e| e.label.clone()).collect()
    }

    /// Read tab-separated `clip_id<TAB>onset<TAB>offset<TAB>label` lines.
    pub fn read_tsv(path: &Path) -> Result<AnnotationSet, AnnotError> {
        let text = std::fs::read_to_string(path).map_err(|source| AnnotError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut set = AnnotationSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields.len() != 4 {
                return Err(AnnotError::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("expected 4 tab-separated fields, got {}", fields.len()),
                });
            }
            let parse_time = |s: &str| {
                Time::from_decimal_str(s).map_err(|message| AnnotError::Parse {
                    path: path.to_path_buf(),
                    line,
                    message,
                })
            };
            let onset = parse_time(fields[1])?;
            let offset = parse_time(fields[2])?;
            let ann = EventAnnotation::new(fields[0], fields[3], onset, offset).map_err(|e| {
                AnnotError::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: e.to_string(),
                }
            })?;
            set.push(ann);
        }
        Ok(set)
    }

    /// Write the tab-separated format with 3-decimal second timestamps.
    /// Clips in lexicographic order, events in (onset, offset, label) order.
    pub fn write_tsv(&self, path: &Path) -> Result<(), AnnotError> {
        let io_err = |source| AnnotError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = Vec::new();
        for events in self.clips.values() {
            for e in events {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    e.clip_id,
                    e.onset.format_3dp(),
                    e.offset.format_3dp(),
                    e.label
                )
                .map_err(io_err)?;
            }
        }
        std::fs::write(path, out).map_err(io_err)
    }
}
