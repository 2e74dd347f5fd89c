//! Areas of interest on the screen plane and the per-sample labelling
//! pipeline (smoothing, projection, classification).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point2D, SceneCalibration};
use crate::smoothing::{GazeSample, SmoothingBuffer, SmoothingError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AoiError {
    #[error("degenerate rectangle: x [{x_min}, {x_max}), y [{y_min}, {y_max})")]
    Degenerate {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },
    #[error("tablet and face regions overlap")]
    Overlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AoiLabel {
    Tablet,
    Face,
    Elsewhere,
}

impl AoiLabel {
    pub const ALL: [AoiLabel; 3] = [AoiLabel::Tablet, AoiLabel::Face, AoiLabel::Elsewhere];

    pub fn index(self) -> usize {
        match self {
            AoiLabel::Tablet => 0,
            AoiLabel::Face => 1,
            AoiLabel::Elsewhere => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AoiLabel::Tablet => "tablet",
            AoiLabel::Face => "face",
            AoiLabel::Elsewhere => "elsewhere",
        }
    }
}

/// Axis-aligned rectangle with half-open membership `[min, max)` on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AoiRect {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl AoiRect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, AoiError> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min >= x_max || y_min >= y_max {
            return Err(AoiError::Degenerate {
                x_min,
                x_max,
                y_min,
                y_max,
            });
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// Rectangle of the given size centred on `center`.
    pub fn centered(center: Point2D, width: f64, height: f64) -> Result<Self, AoiError> {
        Self::new(
            center.x - width / 2.0,
            center.x + width / 2.0,
            center.y - height / 2.0,
            center.y + height / 2.0,
        )
    }

    pub fn contains(&self, p: Point2D) -> bool {
        p.x >= self.x_min && p.x < self.x_max && p.y >= self.y_min && p.y < self.y_max
    }

    pub fn intersects(&self, other: &AoiRect) -> bool {
        self.x_min < other.x_max
            && other.x_min < self.x_max
            && self.y_min < other.y_max
            && other.y_min < self.y_max
    }

    pub fn center(&self) -> Point2D {
        Point2D::new(
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    pub fn expanded(&self, margin: f64) -> Result<Self, AoiError> {
        Self::new(
            self.x_min - margin,
            self.x_max + margin,
            self.y_min - margin,
            self.y_max + margin,
        )
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }
    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

impl<'de> Deserialize<'de> for AoiRect {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            x_min: f64,
            x_max: f64,
            y_min: f64,
            y_max: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        AoiRect::new(raw.x_min, raw.x_max, raw.y_min, raw.y_max).map_err(serde::de::Error::custom)
    }
}

/// Tablet and face regions; everything else is `Elsewhere`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AoiLayout {
    tablet: AoiRect,
    face: AoiRect,
}

impl AoiLayout {
    pub fn new(tablet: AoiRect, face: AoiRect) -> Result<Self, AoiError> {
        if tablet.intersects(&face) {
            return Err(AoiError::Overlap);
        }
        Ok(Self { tablet, face })
    }

    pub fn tablet(&self) -> &AoiRect {
        &self.tablet
    }

    pub fn face(&self) -> &AoiRect {
        &self.face
    }

    pub fn rect(&self, label: AoiLabel) -> Option<&AoiRect> {
        match label {
            AoiLabel::Tablet => Some(&self.tablet),
            AoiLabel::Face => Some(&self.face),
            AoiLabel::Elsewhere => None,
        }
    }

    pub fn classify(&self, point: Point2D) -> AoiLabel {
        if self.tablet.contains(point) {
            AoiLabel::Tablet
        } else if self.face.contains(point) {
            AoiLabel::Face
        } else {
            AoiLabel::Elsewhere
        }
    }
}

/// Face region centred on the screen origin with the tablet 350 mm below it.
/// These are platform estimates, not measured values; override per setup.
impl Default for AoiLayout {
    fn default() -> Self {
        let tablet = AoiRect::new(-120.0, 120.0, -450.0, -250.0).expect("valid rect");
        let face = AoiRect::new(-100.0, 100.0, -100.0, 100.0).expect("valid rect");
        AoiLayout::new(tablet, face).expect("disjoint default layout")
    }
}

impl<'de> Deserialize<'de> for AoiLayout {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            tablet: AoiRect,
            face: AoiRect,
        }
        let raw = Raw::deserialize(deserializer)?;
        AoiLayout::new(raw.tablet, raw.face).map_err(serde::de::Error::custom)
    }
}

/// A labelled sample. `point` is `None` when projection failed, in which case
/// the label is always `Elsewhere`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedGazePoint {
    pub timestamp: f64,
    pub point: Option<Point2D>,
    pub label: AoiLabel,
}

impl TimedGazePoint {
    pub fn labelled(timestamp: f64, label: AoiLabel) -> Self {
        Self {
            timestamp,
            point: None,
            label,
        }
    }
}

/// Stateful per-stream labeller.
#[derive(Debug, Clone)]
pub struct Labeler {
    calibration: SceneCalibration,
    layout: AoiLayout,
    smoothing: SmoothingBuffer,
}

impl Labeler {
    pub fn new(
        calibration: SceneCalibration,
        layout: AoiLayout,
        smooth_window: usize,
    ) -> Result<Self, SmoothingError> {
        Ok(Self {
            calibration,
            layout,
            smoothing: SmoothingBuffer::new(smooth_window)?,
        })
    }

    pub fn label(&mut self, sample: GazeSample) -> Result<TimedGazePoint, SmoothingError> {
        let smoothed = self.smoothing.push_and_smooth(sample)?;
        Ok(self.label_smoothed(&smoothed))
    }

    /// Projection and classification without touching the smoothing state.
    pub fn label_smoothed(&self, sample: &GazeSample) -> TimedGazePoint {
        match self.calibration.project(&sample.gaze) {
            Ok(point) => TimedGazePoint {
                timestamp: sample.timestamp,
                point: Some(point),
                label: self.layout.classify(point),
            },
            Err(_) => TimedGazePoint {
                timestamp: sample.timestamp,
                point: None,
                label: AoiLabel::Elsewhere,
            },
        }
    }

    pub fn reset(&mut self) {
        self.smoothing.reset();
    }

    pub fn calibration(&self) -> &SceneCalibration {
        &self.calibration
    }

    pub fn layout(&self) -> &AoiLayout {
        &self.layout
    }
}

/// Smooths, projects and classifies every sample of a time-ordered stream.
pub fn label_stream(
    layout: &AoiLayout,
    calibration: &SceneCalibration,
    smooth_window: usize,
    samples: &[GazeSample],
) -> Result<Vec<TimedGazePoint>, SmoothingError> {
    let mut labeler = Labeler::new(*calibration, *layout, smooth_window)?;
    samples.iter().map(|s| labeler.label(*s)).collect()
}
