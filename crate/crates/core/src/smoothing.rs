//! Moving-average smoothing of raw yaw/pitch estimates.

use std::collections::VecDeque;

use thiserror::Error;

use crate::geometry::{EulerGaze, GeometryError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmoothingError {
    #[error("window size must be at least 1")]
    EmptyWindow,
    #[error("timestamp {current} does not follow previous timestamp {previous}")]
    Ordering { previous: f64, current: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One timestamped gaze estimate. Timestamps are seconds since session start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeSample {
    pub timestamp: f64,
    pub gaze: EulerGaze,
    pub frame_id: Option<u64>,
}

impl GazeSample {
    pub fn new(timestamp: f64, gaze: EulerGaze) -> Self {
        Self {
            timestamp,
            gaze,
            frame_id: None,
        }
    }

    pub fn with_frame(mut self, frame_id: u64) -> Self {
        self.frame_id = Some(frame_id);
        self
    }
}

/// Frame-indexed simple moving average over the last `N` samples.
///
/// Until `N` samples have arrived the mean is taken over what is available.
/// Angles are averaged directly, which is only meaningful away from the
/// ±π yaw seam.
#[derive(Debug, Clone)]
pub struct SmoothingBuffer {
    capacity: usize,
    window: VecDeque<(f64, f64)>,
    last_timestamp: Option<f64>,
}

impl SmoothingBuffer {
    pub fn new(capacity: usize) -> Result<Self, SmoothingError> {
        if capacity == 0 {
            return Err(SmoothingError::EmptyWindow);
        }
        Ok(Self {
            capacity,
            window: VecDeque::with_capacity(capacity),
            last_timestamp: None,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn push_and_smooth(&mut self, sample: GazeSample) -> Result<GazeSample, SmoothingError> {
        if let Some(previous) = self.last_timestamp {
            if !(sample.timestamp > previous) {
                return Err(SmoothingError::Ordering {
                    previous,
                    current: sample.timestamp,
                });
            }
        }
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back((sample.gaze.yaw(), sample.gaze.pitch()));
        self.last_timestamp = Some(sample.timestamp);

        let n = self.window.len() as f64;
        let (yaw_sum, pitch_sum) = self
            .window
            .iter()
            .fold((0.0, 0.0), |(y, p), &(yaw, pitch)| (y + yaw, p + pitch));
        let gaze = EulerGaze::new(yaw_sum / n, pitch_sum / n)?;
        Ok(GazeSample { gaze, ..sample })
    }

    /// Drops buffered angles. The ordering check keeps the last timestamp so a
    /// reset mid-stream cannot be used to rewind time.
    pub fn reset(&mut self) {
        self.window.clear();
    }
}
