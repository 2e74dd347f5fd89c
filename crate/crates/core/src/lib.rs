//! Task-completion detection from appearance-based gaze estimates.
//!
//! Raw yaw/pitch samples are smoothed, projected onto the robot's screen
//! plane, mapped to areas of interest (tablet, face, elsewhere) and fed to an
//! engagement state machine that reports when the user turns from the
//! tablet to the robot's face.

pub mod aoi;
pub mod config;
pub mod detector;
pub mod geometry;
pub mod optimizer;
pub mod server;
pub mod sessionio;
pub mod simulator;
pub mod smoothing;

pub use aoi::{AoiLabel, AoiLayout, AoiRect, Labeler, TimedGazePoint};
pub use detector::{
    run_session, DetectorConfig, Detector, EngagementState, SessionPipeline, TransitionCause,
    TransitionEvent,
};
pub use geometry::{EulerGaze, Point2D, RigidPose, SceneCalibration};
pub use smoothing::{GazeSample, SmoothingBuffer};
