//! Engagement state machine over sliding time windows of AOI labels.
//!
//! A page starts `Idle`. The user becomes `Engaged` once the share of
//! tablet-labelled samples in the trailing engagement window strictly exceeds
//! the engagement threshold, and `Disengaged` once the share of face-labelled
//! samples in the trailing disengagement window strictly exceeds the
//! disengagement threshold. `Disengaged` is only reachable from `Engaged`.
//! A page that stays engaged for `timeout_s` after it was shown is forced to
//! `Disengaged` with [`TransitionCause::Timeout`]. [`Detector::advance_page`]
//! returns to `Idle` and clears all windows.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aoi::{AoiLabel, AoiLayout, Labeler, TimedGazePoint};
use crate::geometry::SceneCalibration;
use crate::smoothing::{GazeSample, SmoothingError};

/// Window membership is `t_i > t - W + WINDOW_EPSILON`, which absorbs
/// floating-point noise on sample clocks like `k * 0.2`.
pub const WINDOW_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectorError {
    #[error("timestamp {current} does not follow previous timestamp {previous}")]
    Ordering { previous: f64, current: f64 },
    #[error("cannot advance page while {state}")]
    State { state: EngagementState },
    #[error("invalid detector config: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Smoothing(#[from] SmoothingError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngagementState {
    Idle,
    Engaged,
    Disengaged,
}

impl std::fmt::Display for EngagementState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EngagementState::Idle => "idle",
            EngagementState::Engaged => "engaged",
            EngagementState::Disengaged => "disengaged",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionCause {
    Gaze,
    Timeout,
    Reset,
}

/// The five tuned parameters plus the failsafe timeout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDetectorConfig", into = "RawDetectorConfig")]
pub struct DetectorConfig {
    pub smooth_window: usize,
    pub engage_window_s: f64,
    pub disengage_window_s: f64,
    pub engage_threshold: f64,
    pub disengage_threshold: f64,
    pub timeout_s: f64,
    pub min_window_samples: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            smooth_window: 3,
            engage_window_s: 1.0,
            disengage_window_s: 1.0,
            engage_threshold: 0.4,
            disengage_threshold: 0.5,
            timeout_s: 10.0,
            min_window_samples: 2,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectorError> {
        let fail = |msg: String| Err(DetectorError::Config(msg));
        if self.smooth_window == 0 {
            return fail("smooth_window must be >= 1".into());
        }
        for (name, w) in [
            ("engage_window_s", self.engage_window_s),
            ("disengage_window_s", self.disengage_window_s),
        ] {
            if !(w.is_finite() && w > 0.0) {
                return fail(format!("{name} must be > 0, got {w}"));
            }
        }
        for (name, th) in [
            ("engage_threshold", self.engage_threshold),
            ("disengage_threshold", self.disengage_threshold),
        ] {
            if !(th > 0.0 && th <= 1.0) {
                return fail(format!("{name} must be in (0, 1], got {th}"));
            }
        }
        if !(self.timeout_s.is_finite() && self.timeout_s > self.disengage_window_s) {
            return fail(format!(
                "timeout_s ({}) must exceed disengage_window_s ({})",
                self.timeout_s, self.disengage_window_s
            ));
        }
        if self.min_window_samples == 0 {
            return fail("min_window_samples must be >= 1".into());
        }
        Ok(())
    }

    pub fn with_windows(mut self, smooth: usize, engage_s: f64, disengage_s: f64) -> Self {
        self.smooth_window = smooth;
        self.engage_window_s = engage_s;
        self.disengage_window_s = disengage_s;
        self
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetectorConfig {
    #[serde(default = "defaults::smooth_window")]
    smooth_window: usize,
    #[serde(default = "defaults::window")]
    engage_window_s: f64,
    #[serde(default = "defaults::window")]
    disengage_window_s: f64,
    #[serde(default = "defaults::engage_threshold")]
    engage_threshold: f64,
    #[serde(default = "defaults::disengage_threshold")]
    disengage_threshold: f64,
    #[serde(default = "defaults::timeout")]
    timeout_s: f64,
    #[serde(default = "defaults::min_window_samples")]
    min_window_samples: usize,
}

mod defaults {
    pub fn smooth_window() -> usize {
        3
    }
    pub fn window() -> f64 {
        1.0
    }
    pub fn engage_threshold() -> f64 {
        0.4
    }
    pub fn disengage_threshold() -> f64 {
        0.5
    }
    pub fn timeout() -> f64 {
        10.0
    }
    pub fn min_window_samples() -> usize {
        2
    }
}

impl TryFrom<RawDetectorConfig> for DetectorConfig {
    type Error = DetectorError;

    fn try_from(raw: RawDetectorConfig) -> Result<Self, Self::Error> {
        let config = DetectorConfig {
            smooth_window: raw.smooth_window,
            engage_window_s: raw.engage_window_s,
            disengage_window_s: raw.disengage_window_s,
            engage_threshold: raw.engage_threshold,
            disengage_threshold: raw.disengage_threshold,
            timeout_s: raw.timeout_s,
            min_window_samples: raw.min_window_samples,
        };
        config.validate()?;
        Ok(config)
    }
}

impl From<DetectorConfig> for RawDetectorConfig {
    fn from(c: DetectorConfig) -> Self {
        RawDetectorConfig {
            smooth_window: c.smooth_window,
            engage_window_s: c.engage_window_s,
            disengage_window_s: c.disengage_window_s,
            engage_threshold: c.engage_threshold,
            disengage_threshold: c.disengage_threshold,
            timeout_s: c.timeout_s,
            min_window_samples: c.min_window_samples,
        }
    }
}

/// One detected state change. Serialized as a single event-log line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "event")]
pub struct TransitionEvent {
    #[serde(rename = "t")]
    pub timestamp: f64,
    #[serde(rename = "from")]
    pub from_state: EngagementState,
    #[serde(rename = "to")]
    pub to_state: EngagementState,
    pub cause: TransitionCause,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_fraction: Option<f64>,
    pub window_samples: usize,
}

impl TransitionEvent {
    pub fn is_gaze_disengagement(&self) -> bool {
        self.to_state == EngagementState::Disengaged && self.cause == TransitionCause::Gaze
    }

    pub fn is_disengagement(&self) -> bool {
        self.to_state == EngagementState::Disengaged
    }
}

#[derive(Debug, Clone)]
struct SlidingWindow {
    span: f64,
    entries: VecDeque<(f64, AoiLabel)>,
    counts: [usize; 3],
}

impl SlidingWindow {
    fn new(span: f64) -> Self {
        Self {
            span,
            entries: VecDeque::new(),
            counts: [0; 3],
        }
    }

    fn push(&mut self, timestamp: f64, label: AoiLabel) {
        self.entries.push_back((timestamp, label));
        self.counts[label.index()] += 1;
        let cutoff = timestamp - self.span + WINDOW_EPSILON;
        while let Some(&(t, l)) = self.entries.front() {
            if t > cutoff {
                break;
            }
            self.entries.pop_front();
            self.counts[l.index()] -= 1;
        }
    }

    fn len(&self) -> usize {
        self.entries.len()
    }

    fn fraction(&self, label: AoiLabel) -> f64 {
        if self.entries.is_empty() {
            0.0
        } else {
            self.counts[label.index()] as f64 / self.entries.len() as f64
        }
    }

    fn clear(&mut self) {
        self.entries.clear();
        self.counts = [0; 3];
    }
}

#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    state: EngagementState,
    page_start: Option<f64>,
    last_timestamp: Option<f64>,
    engage: SlidingWindow,
    disengage: SlidingWindow,
}

impl Detector {
    /// The first page starts at the first fed sample.
    pub fn new(config: DetectorConfig) -> Result<Self, DetectorError> {
        config.validate()?;
        Ok(Self {
            config,
            state: EngagementState::Idle,
            page_start: None,
            last_timestamp: None,
            engage: SlidingWindow::new(config.engage_window_s),
            disengage: SlidingWindow::new(config.disengage_window_s),
        })
    }

    pub fn starting_at(config: DetectorConfig, page_start: f64) -> Result<Self, DetectorError> {
        let mut d = Self::new(config)?;
        d.page_start = Some(page_start);
        Ok(d)
    }

    pub fn state(&self) -> EngagementState {
        self.state
    }

    pub fn page_start(&self) -> Option<f64> {
        self.page_start
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn feed(&mut self, point: &TimedGazePoint) -> Result<Option<TransitionEvent>, DetectorError> {
        let t = point.timestamp;
        if let Some(previous) = self.last_timestamp {
            if !(t > previous) {
                return Err(DetectorError::Ordering {
                    previous,
                    current: t,
                });
            }
        }
        self.last_timestamp = Some(t);
        let page_start = *self.page_start.get_or_insert(t);

        self.engage.push(t, point.label);
        self.disengage.push(t, point.label);

        let event = match self.state {
            EngagementState::Idle => {
                let fraction = self.engage.fraction(AoiLabel::Tablet);
                let n = self.engage.len();
                (n >= self.config.min_window_samples && fraction > self.config.engage_threshold)
                    .then(|| TransitionEvent {
                        timestamp: t,
                        from_state: EngagementState::Idle,
                        to_state: EngagementState::Engaged,
                        cause: TransitionCause::Gaze,
                        window_fraction: Some(fraction),
                        window_samples: n,
                    })
            }
            EngagementState::Engaged => {
                let fraction = self.disengage.fraction(AoiLabel::Face);
                let n = self.disengage.len();
                let by_gaze = n >= self.config.min_window_samples
                    && fraction > self.config.disengage_threshold;
                let timed_out = t - page_start >= self.config.timeout_s - WINDOW_EPSILON;
                if by_gaze {
                    Some(TransitionEvent {
                        timestamp: t,
                        from_state: EngagementState::Engaged,
                        to_state: EngagementState::Disengaged,
                        cause: TransitionCause::Gaze,
                        window_fraction: Some(fraction),
                        window_samples: n,
                    })
                } else if timed_out {
                    Some(TransitionEvent {
                        timestamp: t,
                        from_state: EngagementState::Engaged,
                        to_state: EngagementState::Disengaged,
                        cause: TransitionCause::Timeout,
                        window_fraction: None,
                        window_samples: n,
                    })
                } else {
                    None
                }
            }
            EngagementState::Disengaged => None,
        };
        if let Some(e) = &event {
            self.state = e.to_state;
        }
        Ok(event)
    }

    /// Shows the next page: `Disengaged → Idle`, windows cleared, page clock
    /// restarted at `timestamp`.
    pub fn advance_page(&mut self, timestamp: f64) -> Result<TransitionEvent, DetectorError> {
        if self.state != EngagementState::Disengaged {
            return Err(DetectorError::State { state: self.state });
        }
        if let Some(previous) = self.last_timestamp {
            if timestamp < previous {
                return Err(DetectorError::Ordering {
                    previous,
                    current: timestamp,
                });
            }
        }
        self.engage.clear();
        self.disengage.clear();
        self.state = EngagementState::Idle;
        self.page_start = Some(timestamp);
        Ok(TransitionEvent {
            timestamp,
            from_state: EngagementState::Disengaged,
            to_state: EngagementState::Idle,
            cause: TransitionCause::Reset,
            window_fraction: None,
            window_samples: 0,
        })
    }
}

/// Labeller plus detector for one stream, advancing the page as soon as a
/// disengagement is detected.
#[derive(Debug, Clone)]
pub struct SessionPipeline {
    labeler: Labeler,
    detector: Detector,
}

impl SessionPipeline {
    pub fn new(
        config: DetectorConfig,
        layout: AoiLayout,
        calibration: SceneCalibration,
    ) -> Result<Self, PipelineError> {
        Ok(Self {
            labeler: Labeler::new(calibration, layout, config.smooth_window)?,
            detector: Detector::new(config)?,
        })
    }

    pub fn state(&self) -> EngagementState {
        self.detector.state()
    }

    pub fn detector(&self) -> &Detector {
        &self.detector
    }

    /// Returns the events caused by this sample: none, one, or a
    /// disengagement followed by its page reset.
    pub fn push(&mut self, sample: GazeSample) -> Result<Vec<TransitionEvent>, PipelineError> {
        let point = self.labeler.label(sample)?;
        self.push_labelled(&point)
    }

    /// Feeds an already labelled point (offline pipelines with stored labels).
    pub fn push_labelled(
        &mut self,
        point: &TimedGazePoint,
    ) -> Result<Vec<TransitionEvent>, PipelineError> {
        let mut events = Vec::new();
        if let Some(event) = self.detector.feed(point)? {
            events.push(event);
            if event.to_state == EngagementState::Disengaged {
                events.push(self.detector.advance_page(event.timestamp)?);
                self.labeler.reset();
            }
        }
        Ok(events)
    }
}

/// Runs a full recorded or simulated stream through a fresh pipeline.
pub fn run_session(
    config: &DetectorConfig,
    layout: &AoiLayout,
    calibration: &SceneCalibration,
    samples: &[GazeSample],
) -> Result<Vec<TransitionEvent>, PipelineError> {
    let mut pipeline = SessionPipeline::new(*config, *layout, *calibration)?;
    let mut events = Vec::new();
    for sample in samples {
        events.extend(pipeline.push(*sample)?);
    }
    Ok(events)
}

/// Same as [`run_session`] for streams that already carry AOI labels.
pub fn run_labelled_session(
    config: &DetectorConfig,
    points: &[TimedGazePoint],
) -> Result<Vec<TransitionEvent>, PipelineError> {
    let mut pipeline = SessionPipeline::new(*config, AoiLayout::default(), SceneCalibration::default())?;
    let mut events = Vec::new();
    for p in points {
        events.extend(pipeline.push_labelled(p)?);
    }
    Ok(events)
}
