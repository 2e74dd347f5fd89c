use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{quantize_degrees, LogError};
use crate::aoi::AoiLabel;
use crate::geometry::EulerGaze;
use crate::smoothing::GazeSample;

pub const SAMPLE_LOG_FORMAT: &str = "gazecue-samples";
pub const SAMPLE_LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLogHeader {
    pub format: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate_hz: Option<f64>,
    /// Free-form reference to the calibration the angles were recorded with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<String>,
}

impl Default for SampleLogHeader {
    fn default() -> Self {
        Self {
            format: SAMPLE_LOG_FORMAT.to_string(),
            version: SAMPLE_LOG_VERSION,
            sample_rate_hz: None,
            calibration: None,
        }
    }
}

/// One sample line. Angles are degrees rounded to six decimals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleRecord {
    pub t: f64,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame_id: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<AoiLabel>,
}

#[derive(Deserialize)]
struct RawRecord {
    #[serde(rename = "type")]
    kind: Option<String>,
    t: Option<f64>,
    yaw_deg: Option<f64>,
    pitch_deg: Option<f64>,
    frame_id: Option<u64>,
    label: Option<AoiLabel>,
}

impl SampleRecord {
    pub fn from_sample(sample: &GazeSample) -> Self {
        Self {
            t: sample.timestamp,
            yaw_deg: quantize_degrees(sample.gaze.yaw_degrees()),
            pitch_deg: quantize_degrees(sample.gaze.pitch_degrees()),
            frame_id: sample.frame_id,
            label: None,
        }
    }

    pub fn to_sample(&self) -> GazeSample {
        let gaze = EulerGaze::from_degrees(self.yaw_deg, self.pitch_deg)
            .expect("records are validated on construction");
        GazeSample {
            timestamp: self.t,
            gaze,
            frame_id: self.frame_id,
        }
    }

    /// Parses one JSON sample object. Unknown fields are ignored; a `type`
    /// field, if present, must be `"sample"`.
    pub fn parse_json(line: &str) -> Result<Self, String> {
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if let Some(kind) = raw.kind.as_deref() {
            if kind != "sample" {
                return Err(format!("unknown message type {kind:?}"));
            }
        }
        let t = raw.t.ok_or("missing field `t`")?;
        let yaw_deg = raw.yaw_deg.ok_or("missing field `yaw_deg`")?;
        let pitch_deg = raw.pitch_deg.ok_or("missing field `pitch_deg`")?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(format!("timestamp must be finite and >= 0, got {t}"));
        }
        let yaw_deg = quantize_degrees(yaw_deg);
        let pitch_deg = quantize_degrees(pitch_deg);
        EulerGaze::from_degrees(yaw_deg, pitch_deg).map_err(|e| e.to_string())?;
        Ok(Self {
            t,
            yaw_deg,
            pitch_deg,
            frame_id: raw.frame_id,
            label: raw.label,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleLog {
    pub header: SampleLogHeader,
    pub records: Vec<SampleRecord>,
}

impl SampleLog {
    pub fn from_samples(header: SampleLogHeader, samples: &[GazeSample]) -> Self {
        Self {
            header,
            records: samples.iter().map(SampleRecord::from_sample).collect(),
        }
    }

    pub fn samples(&self) -> Vec<GazeSample> {
        self.records.iter().map(SampleRecord::to_sample).collect()
    }
}

pub fn render_sample_log(log: &SampleLog) -> String {
    let mut out = serde_json::to_string(&log.header).expect("header serializes");
    out.push('\n');
    for r in &log.records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_sample_log(text: &str) -> Result<SampleLog, LogError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let (header_line, header_text) = lines.next().ok_or(LogError::MissingHeader)?;
    let header: SampleLogHeader = serde_json::from_str(header_text).map_err(|e| {
        if header_text.contains("\"format\"") {
            LogError::parse(header_line, e)
        } else {
            LogError::MissingHeader
        }
    })?;
    if header.format != SAMPLE_LOG_FORMAT || header.version != SAMPLE_LOG_VERSION {
        return Err(LogError::UnsupportedVersion {
            format: header.format,
            version: header.version,
        });
    }

    let mut records: Vec<SampleRecord> = Vec::new();
    for (line, text) in lines {
        let record = SampleRecord::parse_json(text).map_err(|m| LogError::parse(line, m))?;
        if let Some(prev) = records.last() {
            if !(record.t > prev.t) {
                return Err(LogError::parse(
                    line,
                    format!("timestamp {} does not follow {}", record.t, prev.t),
                ));
            }
        }
        records.push(record);
    }
    Ok(SampleLog { header, records })
}

pub fn read_sample_log(path: impl AsRef<Path>) -> Result<SampleLog, LogError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| LogError::io(path, e))?;
    parse_sample_log(&text)
}

pub fn write_sample_log(log: &SampleLog, path: impl AsRef<Path>) -> Result<(), LogError> {
    let path = path.as_ref();
    fs::write(path, render_sample_log(log)).map_err(|e| LogError::io(path, e))
}
