//! Exhaustive search over smoothing and window sizes, scored by
//! timing-aware accuracy on a set of trials with known shift times.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aoi::AoiLayout;
use crate::detector::{run_session, DetectorConfig, PipelineError, TransitionEvent};
use crate::geometry::SceneCalibration;
use crate::simulator::{
    evaluate_detection, BehaviorProfile, OutcomeCounts, ScriptedSession, SimulationError, Simulator,
};
use crate::smoothing::GazeSample;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("no trials to evaluate")]
    NoTrials,
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("tolerance must be >= 0, got {0}")]
    Tolerance(f64),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamGrid {
    pub smooth_windows: Vec<usize>,
    pub engage_windows_s: Vec<f64>,
    pub disengage_windows_s: Vec<f64>,
}

impl ParamGrid {
    /// N ∈ {1,3,5,10,15}, W_e and W_d ∈ {0.5,1,1.5,2,3} s.
    pub fn standard() -> Self {
        let windows = vec![0.5, 1.0, 1.5, 2.0, 3.0];
        Self {
            smooth_windows: vec![1, 3, 5, 10, 15],
            engage_windows_s: windows.clone(),
            disengage_windows_s: windows,
        }
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        if self.smooth_windows.is_empty()
            || self.engage_windows_s.is_empty()
            || self.disengage_windows_s.is_empty()
        {
            return Err(OptimizerError::Grid("every axis needs at least one value".into()));
        }
        if self.smooth_windows.contains(&0) {
            return Err(OptimizerError::Grid("smooth windows must be >= 1".into()));
        }
        let bad = self
            .engage_windows_s
            .iter()
            .chain(&self.disengage_windows_s)
            .find(|w| !(w.is_finite() && **w > 0.0));
        if let Some(w) = bad {
            return Err(OptimizerError::Grid(format!("window {w} must be > 0")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.smooth_windows.len() * self.engage_windows_s.len() * self.disengage_windows_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cells in (N, W_e, W_d) lexicographic order.
    pub fn cells(&self) -> Vec<(usize, f64, f64)> {
        let mut cells = Vec::with_capacity(self.len());
        for &n in &self.smooth_windows {
            for &we in &self.engage_windows_s {
                for &wd in &self.disengage_windows_s {
                    cells.push((n, we, wd));
                }
            }
        }
        cells
    }
}

/// A recorded or simulated stream with its known page structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub samples: Vec<GazeSample>,
    pub truth: ScriptedSession,
}

/// Replays a trial one scripted page at a time through [`run_session`],
/// concatenating the events.
///
/// A scripted stream is open-loop: its pages change at fixed times no matter
/// what the detector does. Replaying each page on its own keeps the
/// detector's page clock (and so its timeout) aligned with the page the user
/// is reading, as it is live when the robot itself turns the page.
pub fn replay_by_page(
    config: &DetectorConfig,
    layout: &AoiLayout,
    calibration: &SceneCalibration,
    trial: &Trial,
) -> Result<Vec<TransitionEvent>, PipelineError> {
    let mut events = Vec::new();
    let mut rest = trial.samples.as_slice();
    for page in &trial.truth.pages {
        let skip = rest.partition_point(|s| s.timestamp < page.start);
        rest = &rest[skip..];
        let len = rest.partition_point(|s| s.timestamp < page.end);
        let (on_page, after) = rest.split_at(len);
        rest = after;
        events.extend(run_session(config, layout, calibration, on_page)?);
    }
    Ok(events)
}

/// Simulates `sessions` trials of `pages` pages each. Session `i` uses seed
/// `profile.seed + i`.
pub fn generate_cohort(
    profile: &BehaviorProfile,
    calibration: &SceneCalibration,
    layout: &AoiLayout,
    sessions: usize,
    pages: usize,
) -> Result<Vec<Trial>, OptimizerError> {
    (0..sessions as u64)
        .map(|i| {
            let profile = BehaviorProfile {
                seed: profile.seed.wrapping_add(i),
                ..profile.clone()
            };
            let (samples, truth) =
                Simulator::new(profile, *calibration, *layout)?.generate_session(pages)?;
            Ok(Trial { samples, truth })
        })
        .collect()
}

/// A reproducible simulated cohort: profile (with base seed), size and the
/// scoring tolerance it is meant to be evaluated with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSpec {
    pub sessions: usize,
    pub pages: usize,
    pub tolerance_s: f64,
    pub profile: BehaviorProfile,
}

impl CohortSpec {
    pub fn generate(
        &self,
        calibration: &SceneCalibration,
        layout: &AoiLayout,
    ) -> Result<Vec<Trial>, OptimizerError> {
        generate_cohort(&self.profile, calibration, layout, self.sessions, self.pages)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub smooth_window: usize,
    pub engage_window_s: f64,
    pub disengage_window_s: f64,
    pub pages: usize,
    pub correct: usize,
    pub early: usize,
    pub late: usize,
    pub missed: usize,
    /// Correct pages over all pages.
    pub accuracy: f64,
    /// Per-trial accuracy averaged over trials.
    pub trial_accuracy: f64,
    pub mean_latency_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
}

impl GridResult {
    pub fn best(&self) -> Option<&GridRow> {
        best_config(self)
    }

    /// One header line plus one line per cell, in grid order.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            writer.serialize(row).expect("in-memory csv write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
    }
}

/// Replays every trial (see [`replay_by_page`]) under every grid cell. Thresholds, timeout and the
/// minimum window size come from `base`.
pub fn run_grid(
    grid: &ParamGrid,
    trials: &[Trial],
    base: &DetectorConfig,
    calibration: &SceneCalibration,
    layout: &AoiLayout,
    tolerance_s: f64,
) -> Result<GridResult, OptimizerError> {
    grid.validate()?;
    if trials.is_empty() {
        return Err(OptimizerError::NoTrials);
    }
    if !(tolerance_s.is_finite() && tolerance_s >= 0.0) {
        return Err(OptimizerError::Tolerance(tolerance_s));
    }
    let rows = grid
        .cells()
        .into_par_iter()
        .map(|(n, we, wd)| {
            let config = base.with_windows(n, we, wd);
            let mut total = OutcomeCounts::default();
            let mut trial_accuracy_sum = 0.0;
            for trial in trials {
                let events = replay_by_page(&config, layout, calibration, trial)?;
                let counts =
                    OutcomeCounts::from_outcomes(&evaluate_detection(&trial.truth, &events, tolerance_s));
                trial_accuracy_sum += counts.accuracy().unwrap_or(0.0);
                total.merge(&counts);
            }
            Ok(GridRow {
                smooth_window: n,
                engage_window_s: we,
                disengage_window_s: wd,
                pages: total.pages,
                correct: total.correct,
                early: total.early,
                late: total.late,
                missed: total.missed,
                accuracy: total.accuracy().unwrap_or(0.0),
                trial_accuracy: trial_accuracy_sum / trials.len() as f64,
                mean_latency_s: total.mean_latency(),
            })
        })
        .collect::<Result<Vec<_>, OptimizerError>>()?;
    Ok(GridResult { rows })
}

/// Highest accuracy; ties go to lower mean latency (a cell without any
/// latency sorts last), then smaller W_d, smaller W_e, smaller N.
pub fn best_config(result: &GridResult) -> Option<&GridRow> {
    result.rows.iter().min_by(|a, b| rank(a, b))
}

fn rank(a: &GridRow, b: &GridRow) -> Ordering {
    let latency = |r: &GridRow| r.mean_latency_s.unwrap_or(f64::INFINITY);
    b.accuracy
        .total_cmp(&a.accuracy)
        .then(latency(a).total_cmp(&latency(b)))
        .then(a.disengage_window_s.total_cmp(&b.disengage_window_s))
        .then(a.engage_window_s.total_cmp(&b.engage_window_s))
        .then(a.smooth_window.cmp(&b.smooth_window))
}
