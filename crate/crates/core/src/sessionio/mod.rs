//! Sample and event logs, plus offline analytics over them.
//!
//! Both logs are newline-delimited JSON. A sample log starts with a header
//! line naming the format and version; an event log is one
//! [`TransitionEvent`](crate::detector::TransitionEvent) per line, identical
//! to what the streaming service sends.

mod analytics;
mod events;
mod samples;
mod trials;

use std::path::PathBuf;

use thiserror::Error;

pub use analytics::{
    AnalyticsError, dwell_by_page, dwell_stats, heatmap, session_report, CohortSummary, DwellCounts,
    HeatmapBounds, HeatmapGrid, SessionReport,
};
pub use events::{parse_event_log, read_event_log, render_event_log, write_event_log};
pub use samples::{
    parse_sample_log, read_sample_log, render_sample_log, write_sample_log, SampleLog,
    SampleLogHeader, SampleRecord, SAMPLE_LOG_FORMAT, SAMPLE_LOG_VERSION,
};
pub use trials::{
    read_trial_dir, read_truth, write_trial, write_truth, SAMPLES_SUFFIX, TRUTH_SUFFIX,
};

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing header line")]
    MissingHeader,
    #[error("unsupported log format {format:?} version {version}")]
    UnsupportedVersion { format: String, version: u32 },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<LogError>,
    },
}

impl LogError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LogError::Io {
            path: path.into(),
            source,
        }
    }

    /// Prefixes a parse error with the file it came from. I/O errors already
    /// carry their path and are returned unchanged.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        match self {
            e @ (LogError::Io { .. } | LogError::InFile { .. }) => e,
            e => LogError::InFile {
                path: path.into(),
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn parse(line: usize, message: impl std::fmt::Display) -> Self {
        LogError::Parse {
            line,
            message: message.to_string(),
        }
    }
}

/// Rounds an angle in degrees to six decimal places, the resolution stored
/// in sample logs.
pub fn quantize_degrees(deg: f64) -> f64 {
    (deg * 1e6).round() / 1e6
}
