//! Application configuration: calibration, AOI layout, detector settings and
//! service options, read from one JSON file.
//!
//! ```json
//! {
//!   "calibration": "calibration.json",
//!   "layout": {
//!     "tablet": {"x_min": -120, "x_max": 120, "y_min": -450, "y_max": -250},
//!     "face": {"x_min": -100, "x_max": 100, "y_min": -100, "y_max": 100}
//!   },
//!   "detector": {"smooth_window": 3, "engage_window_s": 1.0, "disengage_window_s": 1.0},
//!   "service": {"address": "127.0.0.1", "port": 7878, "heartbeat_ms": 1000, "queue_depth": 256,
//!               "queue_grace_ms": 1000},
//!   "paths": {"event_log_dir": "logs"}
//! }
//! ```
//!
//! `calibration` is either an inline object or a path relative to the config
//! file, as are the directories under `paths`, which must exist. Every
//! section is optional and falls back to the defaults.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aoi::AoiLayout;
use crate::detector::DetectorConfig;
use crate::geometry::{RigidPose, SceneCalibration};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: at `{field}`: {message}")]
    Parse {
        path: PathBuf,
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

/// A pose as written in calibration files: row-major rotation, translation
/// in millimetres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseDoc {
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

impl PoseDoc {
    pub fn to_pose(&self) -> Result<RigidPose, crate::geometry::GeometryError> {
        RigidPose::new(
            Matrix3::from_row_slice(&self.rotation),
            Vector3::from(self.translation),
        )
    }

    pub fn from_pose(pose: &RigidPose) -> Self {
        let r = pose.rotation();
        let mut rotation = [0.0; 9];
        for (i, v) in rotation.iter_mut().enumerate() {
            *v = r[(i / 3, i % 3)];
        }
        let t = pose.translation();
        Self {
            rotation,
            translation: [t.x, t.y, t.z],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationDoc {
    pub screen_pose: PoseDoc,
    pub camera_pose: PoseDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eye_origin: Option<[f64; 3]>,
}

impl CalibrationDoc {
    pub fn to_calibration(&self) -> Result<SceneCalibration, crate::geometry::GeometryError> {
        SceneCalibration::new(
            self.screen_pose.to_pose()?,
            self.camera_pose.to_pose()?,
            self.eye_origin.map(Vector3::from),
        )
    }

    pub fn from_calibration(calibration: &SceneCalibration) -> Self {
        Self {
            screen_pose: PoseDoc::from_pose(calibration.screen_pose()),
            camera_pose: PoseDoc::from_pose(calibration.camera_pose()),
            eye_origin: calibration.eye_origin_override().map(|e| [e.x, e.y, e.z]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub address: String,
    pub port: u16,
    pub heartbeat_ms: u64,
    /// Samples buffered per connection.
    pub queue_depth: usize,
    /// How long a full queue may stay full before the connection is closed.
    pub queue_grace_ms: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            address: "127.0.0.1".to_string(),
            port: 7878,
            heartbeat_ms: 1000,
            queue_depth: 256,
            queue_grace_ms: 1000,
        }
    }
}

/// Output locations. Relative paths are resolved against the config file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Where the service writes one event log per connection.
    pub event_log_dir: Option<PathBuf>,
    /// Default directory for exports (grid CSVs, heatmaps).
    pub export_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AppConfig {
    pub calibration: SceneCalibration,
    pub layout: AoiLayout,
    pub detector: DetectorConfig,
    pub service: ServiceConfig,
    pub paths: PathsConfig,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CalibrationSource {
    Path(PathBuf),
    Inline(CalibrationDoc),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    calibration: Option<CalibrationSource>,
    #[serde(default)]
    layout: AoiLayout,
    #[serde(default)]
    detector: DetectorConfig,
    #[serde(default)]
    service: ServiceConfig,
    #[serde(default)]
    paths: PathsConfig,
}

/// Parses `text` as JSON into `T`, reporting the failing field and position.
fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Parse {
            path: path.to_path_buf(),
            field,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    de.end().map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        field: ".".to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(value)
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_calibration(path: impl AsRef<Path>) -> Result<SceneCalibration, ConfigError> {
    let path = path.as_ref();
    let doc: CalibrationDoc = parse_json(path, &read(path)?)?;
    doc.to_calibration().map_err(|e| ConfigError::Invalid {
        path: path.to_path_buf(),
        message: format!("calibration: {e}"),
    })
}

impl AppConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        Self::parse(path, &read(path)?)
    }

    /// Parses config text; `path` names the file in diagnostics and anchors
    /// a relative calibration path.
    pub fn parse(path: &Path, text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = parse_json(path, text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let calibration = match raw.calibration {
            None => SceneCalibration::default(),
            Some(CalibrationSource::Path(p)) => load_calibration(base.join(p))?,
            Some(CalibrationSource::Inline(doc)) => {
                doc.to_calibration().map_err(|e| ConfigError::Invalid {
                    path: path.to_path_buf(),
                    message: format!("calibration: {e}"),
                })?
            }
        };
        let dir = |d: Option<PathBuf>, field: &str| -> Result<Option<PathBuf>, ConfigError> {
            let Some(d) = d else { return Ok(None) };
            let d = base.join(d);
            if !d.is_dir() {
                return Err(ConfigError::Invalid {
                    path: path.to_path_buf(),
                    message: format!("paths.{field}: {} is not a directory", d.display()),
                });
            }
            Ok(Some(d))
        };
        let paths = PathsConfig {
            event_log_dir: dir(raw.paths.event_log_dir, "event_log_dir")?,
            export_dir: dir(raw.paths.export_dir, "export_dir")?,
        };
        Ok(Self {
            calibration,
            layout: raw.layout,
            detector: raw.detector,
            service: raw.service,
            paths,
        })
    }
}
