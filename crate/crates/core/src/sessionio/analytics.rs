use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::aoi::{AoiLabel, TimedGazePoint};
use crate::detector::{TransitionCause, TransitionEvent};
use crate::geometry::Point2D;
use crate::simulator::{evaluate_detection, OutcomeCounts, ScriptedSession};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("heatmap bounds are degenerate")]
    DegenerateBounds,
    #[error("cell size must be positive, got {0}")]
    CellSize(f64),
}

/// Sample counts per AOI label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DwellCounts {
    pub tablet: usize,
    pub face: usize,
    pub elsewhere: usize,
}

impl DwellCounts {
    pub fn add(&mut self, label: AoiLabel) {
        match label {
            AoiLabel::Tablet => self.tablet += 1,
            AoiLabel::Face => self.face += 1,
            AoiLabel::Elsewhere => self.elsewhere += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tablet + self.face + self.elsewhere
    }

    pub fn count(&self, label: AoiLabel) -> usize {
        match label {
            AoiLabel::Tablet => self.tablet,
            AoiLabel::Face => self.face,
            AoiLabel::Elsewhere => self.elsewhere,
        }
    }

    /// `None` when there are no samples.
    pub fn fraction(&self, label: AoiLabel) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.count(label) as f64 / total as f64)
    }
}

pub fn dwell_stats(points: &[TimedGazePoint]) -> DwellCounts {
    let mut counts = DwellCounts::default();
    for p in points {
        counts.add(p.label);
    }
    counts
}

/// Dwell counts split at every page reset in `events`. The last entry covers
/// samples after the final reset.
pub fn dwell_by_page(points: &[TimedGazePoint], events: &[TransitionEvent]) -> Vec<DwellCounts> {
    let boundaries: Vec<f64> = events
        .iter()
        .filter(|e| e.cause == TransitionCause::Reset)
        .map(|e| e.timestamp)
        .collect();
    let mut pages = vec![DwellCounts::default(); boundaries.len() + 1];
    for p in points {
        // A sample at a reset timestamp is the one that triggered the turn.
        let page = boundaries.partition_point(|&b| b < p.timestamp);
        pages[page].add(p.label);
    }
    pages
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatmapBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl HeatmapBounds {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, AnalyticsError> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min >= x_max || y_min >= y_max {
            return Err(AnalyticsError::DegenerateBounds);
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    fn contains(&self, p: Point2D) -> bool {
        p.x >= self.x_min && p.x < self.x_max && p.y >= self.y_min && p.y < self.y_max
    }
}

/// 2D histogram of gaze points. Row 0 is the lowest `y` band, column 0 the
/// lowest `x` band; cells are half-open like AOI membership.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapGrid {
    pub bounds: HeatmapBounds,
    pub cell_size: f64,
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<u64>,
    pub out_of_bounds: u64,
}

impl HeatmapGrid {
    pub fn cell(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.cols + col]
    }

    pub fn in_bounds(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Plain-text matrix, one row per line starting from row 0, preceded by
    /// a `#` header.
    pub fn to_csv(&self) -> String {
        let b = &self.bounds;
        let mut out = format!(
            "# x_min={},x_max={},y_min={},y_max={},cell_size={},rows={},cols={},out_of_bounds={}\n",
            b.x_min, b.x_max, b.y_min, b.y_max, self.cell_size, self.rows, self.cols, self.out_of_bounds
        );
        for row in self.counts.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// ASCII portable graymap, highest `y` row first, scaled to 0..=255.
    pub fn to_pgm(&self) -> String {
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1);
        let mut out = format!("P2\n{} {}\n255\n", self.cols, self.rows);
        for row in self.counts.chunks(self.cols).rev() {
            let line: Vec<String> = row.iter().map(|&c| (c * 255 / max).to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

pub fn heatmap<I>(points: I, bounds: HeatmapBounds, cell_size: f64) -> Result<HeatmapGrid, AnalyticsError>
where
    I: IntoIterator<Item = Point2D>,
{
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(AnalyticsError::CellSize(cell_size));
    }
    let cols = ((bounds.x_max - bounds.x_min) / cell_size).ceil() as usize;
    let rows = ((bounds.y_max - bounds.y_min) / cell_size).ceil() as usize;
    let mut grid = HeatmapGrid {
        bounds,
        cell_size,
        rows,
        cols,
        counts: vec![0; rows * cols],
        out_of_bounds: 0,
    };
    for p in points {
        if !bounds.contains(p) {
            grid.out_of_bounds += 1;
            continue;
        }
        let col = (((p.x - bounds.x_min) / cell_size).floor() as usize).min(cols - 1);
        let row = (((p.y - bounds.y_min) / cell_size).floor() as usize).min(rows - 1);
        grid.counts[row * cols + col] += 1;
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport {
    pub turns: usize,
    pub gaze_turns: usize,
    pub timeout_turns: usize,
    pub success_rate: Option<f64>,
    /// Time from each page's display to the next page reset.
    pub page_durations: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<OutcomeCounts>,
}

/// Bookkeeping for one session's event log. `truth` adds per-page scoring
/// with the given tolerance.
pub fn session_report(
    events: &[TransitionEvent],
    session_start: f64,
    truth: Option<(&ScriptedSession, f64)>,
) -> SessionReport {
    let gaze_turns = events.iter().filter(|e| e.is_gaze_disengagement()).count();
    let turns = events.iter().filter(|e| e.is_disengagement()).count();
    let mut page_durations = Vec::new();
    let mut page_start = session_start;
    for reset in events.iter().filter(|e| e.cause == TransitionCause::Reset) {
        page_durations.push(reset.timestamp - page_start);
        page_start = reset.timestamp;
    }
    SessionReport {
        turns,
        gaze_turns,
        timeout_turns: turns - gaze_turns,
        success_rate: (turns > 0).then(|| gaze_turns as f64 / turns as f64),
        page_durations,
        outcomes: truth.map(|(t, tol)| OutcomeCounts::from_outcomes(&evaluate_detection(t, events, tol))),
    }
}

/// Success rates aggregated over sessions (e.g. one session per participant).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortSummary {
    pub sessions: usize,
    pub turns: usize,
    pub gaze_turns: usize,
    pub pooled_success: Option<f64>,
    pub mean_success: Option<f64>,
    pub median_success: Option<f64>,
}

impl CohortSummary {
    pub fn from_reports(reports: &[SessionReport]) -> Self {
        let turns = reports.iter().map(|r| r.turns).sum();
        let gaze_turns = reports.iter().map(|r| r.gaze_turns).sum();
        let mut rates: Vec<f64> = reports.iter().filter_map(|r| r.success_rate).collect();
        rates.sort_by(f64::total_cmp);
        let mean = (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64);
        let median = match rates.len() {
            0 => None,
            n if n % 2 == 1 => Some(rates[n / 2]),
            n => Some((rates[n / 2 - 1] + rates[n / 2]) / 2.0),
        };
        Self {
            sessions: reports.len(),
            turns,
            gaze_turns,
            pooled_success: (turns > 0).then(|| gaze_turns as f64 / turns as f64),
            mean_success: mean,
            median_success: median,
        }
    }
}
