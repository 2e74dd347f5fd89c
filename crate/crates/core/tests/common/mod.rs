//! Independent reference implementations used by the integration tests.
//!
//! Everything here is written for clarity, not speed: plain arrays instead of
//! nalgebra, windows recomputed from the full history at every step, and
//! tolerances that differ from the library's on purpose.

#![allow(dead_code)]

use std::path::PathBuf;

use gazecue::detector::{EngagementState, TransitionCause, TransitionEvent};
use gazecue::{AoiLabel, AoiLayout, DetectorConfig, GazeSample, SceneCalibration};

pub type V3 = [f64; 3];

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Set `GAZECUE_BLESS=1` to rewrite golden files from the oracles.
pub fn blessing() -> bool {
    std::env::var_os("GAZECUE_BLESS").is_some_and(|v| v == "1")
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Row-major 3x3 from the library's matrix type.
fn rows(m: &nalgebra::Matrix3<f64>) -> [V3; 3] {
    [
        [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
        [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
        [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
    ]
}

fn mul(m: &[V3; 3], v: V3) -> V3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

fn mul_t(m: &[V3; 3], v: V3) -> V3 {
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

/// Unit eye-frame direction for yaw θ and pitch φ (radians).
pub fn gaze_vector(yaw: f64, pitch: f64) -> V3 {
    [pitch.cos() * yaw.sin(), -pitch.sin(), pitch.cos() * yaw.cos()]
}

/// Screen-plane coordinates of the gaze ray, or `None` when the ray is
/// parallel to or points away from the screen.
pub fn project(calib: &SceneCalibration, yaw: f64, pitch: f64) -> Option<(f64, f64)> {
    let rs = rows(calib.screen_pose().rotation());
    let ts: V3 = (*calib.screen_pose().translation()).into();
    let rc = rows(calib.camera_pose().rotation());
    let tc: V3 = (*calib.camera_pose().translation()).into();
    let origin = match calib.eye_origin_override() {
        Some(e) => [e.x, e.y, e.z],
        None => scale(mul_t(&rc, tc), -1.0),
    };
    let dir = mul_t(&rc, gaze_vector(yaw, pitch));
    let normal = [rs[0][2], rs[1][2], rs[2][2]];
    let denom = dot(normal, dir);
    if denom.abs() < 1e-12 {
        return None;
    }
    let s = dot(normal, sub(ts, origin)) / denom;
    if s <= 0.0 {
        return None;
    }
    let local = mul_t(&rs, sub(add(origin, scale(dir, s)), ts));
    Some((local[0], local[1]))
}

/// World point of screen coordinates `(x, y)`.
pub fn screen_to_world(calib: &SceneCalibration, x: f64, y: f64) -> V3 {
    let rs = rows(calib.screen_pose().rotation());
    let ts: V3 = (*calib.screen_pose().translation()).into();
    add(mul(&rs, [x, y, 0.0]), ts)
}

pub fn classify(layout: &AoiLayout, p: Option<(f64, f64)>) -> AoiLabel {
    let Some((x, y)) = p else {
        return AoiLabel::Elsewhere;
    };
    let inside = |r: &gazecue::AoiRect| x >= r.x_min() && x < r.x_max() && y >= r.y_min() && y < r.y_max();
    if inside(layout.tablet()) {
        AoiLabel::Tablet
    } else if inside(layout.face()) {
        AoiLabel::Face
    } else {
        AoiLabel::Elsewhere
    }
}

/// Mean of the last `n` values (fewer at the start), recomputed from scratch.
pub fn trailing_means(values: &[f64], n: usize) -> Vec<f64> {
    (0..values.len())
        .map(|k| {
            let from = (k + 1).saturating_sub(n);
            let window = &values[from..=k];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect()
}

const TOL: f64 = 1e-6;

fn gaze_event(t: f64, from: EngagementState, to: EngagementState, fraction: f64, n: usize) -> TransitionEvent {
    TransitionEvent {
        timestamp: t,
        from_state: from,
        to_state: to,
        cause: TransitionCause::Gaze,
        window_fraction: Some(fraction),
        window_samples: n,
    }
}

/// Brute-force engagement detector with page auto-advance.
///
/// At every sample the trailing windows are rebuilt by scanning all samples
/// of the current page. Returns the events plus, for each input, the index
/// of the page it was assigned to.
pub fn detect(config: &DetectorConfig, points: &[(f64, AoiLabel)]) -> (Vec<TransitionEvent>, Vec<usize>) {
    use EngagementState::*;
    let mut events = Vec::new();
    let mut pages = Vec::with_capacity(points.len());
    let mut state = Idle;
    let mut first = 0; // first sample index of the current page
    let mut page_start = points.first().map_or(0.0, |p| p.0);
    let mut page = 0;

    let window = |k: usize, first: usize, span: f64, label: AoiLabel| -> (usize, usize) {
        let t = points[k].0;
        let members: Vec<AoiLabel> = points[first..=k]
            .iter()
            .filter(|(tj, _)| t - tj < span - TOL)
            .map(|p| p.1)
            .collect();
        (members.iter().filter(|l| **l == label).count(), members.len())
    };

    for k in 0..points.len() {
        pages.push(page);
        let t = points[k].0;
        match state {
            Idle => {
                let (hits, n) = window(k, first, config.engage_window_s, AoiLabel::Tablet);
                let fraction = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
                if n >= config.min_window_samples && fraction > config.engage_threshold {
                    events.push(gaze_event(t, Idle, Engaged, fraction, n));
                    state = Engaged;
                }
            }
            Engaged => {
                let (hits, n) = window(k, first, config.disengage_window_s, AoiLabel::Face);
                let fraction = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
                let event = if n >= config.min_window_samples && fraction > config.disengage_threshold {
                    Some(gaze_event(t, Engaged, Disengaged, fraction, n))
                } else if t - page_start > config.timeout_s - TOL {
                    Some(TransitionEvent {
                        timestamp: t,
                        from_state: Engaged,
                        to_state: Disengaged,
                        cause: TransitionCause::Timeout,
                        window_fraction: None,
                        window_samples: n,
                    })
                } else {
                    None
                };
                if let Some(e) = event {
                    events.push(e);
                    events.push(TransitionEvent {
                        timestamp: t,
                        from_state: Disengaged,
                        to_state: Idle,
                        cause: TransitionCause::Reset,
                        window_fraction: None,
                        window_samples: 0,
                    });
                    state = Idle;
                    first = k + 1;
                    page_start = t;
                    page += 1;
                }
            }
            Disengaged => unreachable!("pages advance immediately"),
        }
    }
    (events, pages)
}

/// Smoothing, projection, classification and detection, with the smoothing
/// history cut at every page advance.
pub fn pipeline(
    config: &DetectorConfig,
    layout: &AoiLayout,
    calib: &SceneCalibration,
    samples: &[GazeSample],
) -> Vec<TransitionEvent> {
    // Labels depend on page boundaries (smoothing restarts), which depend on
    // labels; resolve by re-running the detector on the labelled prefix.
    let mut labelled: Vec<(f64, AoiLabel)> = Vec::with_capacity(samples.len());
    for k in 0..samples.len() {
        let (events, _) = detect(config, &labelled);
        let first = events
            .iter()
            .rev()
            .find(|e| e.cause == TransitionCause::Reset)
            .map_or(0, |reset| {
                labelled.iter().position(|p| p.0 == reset.timestamp).unwrap() + 1
            });
        let from = first.max((k + 1).saturating_sub(config.smooth_window));
        let window = &samples[from..=k];
        let yaw = window.iter().map(|s| s.gaze.yaw()).sum::<f64>() / window.len() as f64;
        let pitch = window.iter().map(|s| s.gaze.pitch()).sum::<f64>() / window.len() as f64;
        labelled.push((samples[k].timestamp, classify(layout, project(calib, yaw, pitch))));
    }
    detect(config, &labelled).0
}

/// 5 Hz timestamps `k / 5`.
pub fn at_5hz(labels: &[AoiLabel]) -> Vec<(f64, AoiLabel)> {
    labels
        .iter()
        .enumerate()
        .map(|(k, &l)| (k as f64 / 5.0, l))
        .collect()
}

/// Twelve pages at 5 Hz: on every page but the seventh the reader looks at
/// the tablet for 2 s and then at the face; on the seventh they never look
/// up, so only the timeout can turn it.
pub fn twelve_turn_corpus() -> Vec<(f64, AoiLabel)> {
    let mut labels = Vec::new();
    for page in 0..12 {
        if page == 6 {
            labels.extend([AoiLabel::Tablet; 60]);
        } else {
            labels.extend([AoiLabel::Tablet; 10]);
            labels.extend([AoiLabel::Face; 6]);
        }
    }
    at_5hz(&labels)
}

/// `(N, W_e, W_d, previous latency, latency)` for every place where mean
/// latency drops as W_d grows with N and W_e held fixed.
pub fn latency_drops(rows: &[gazecue::optimizer::GridRow]) -> Vec<(usize, f64, f64, f64, f64)> {
    let mut drops = Vec::new();
    for a in rows {
        for b in rows {
            let same_slice = a.smooth_window == b.smooth_window && a.engage_window_s == b.engage_window_s;
            if !same_slice || a.disengage_window_s >= b.disengage_window_s {
                continue;
            }
            let (la, lb) = (a.mean_latency_s.unwrap_or(f64::NAN), b.mean_latency_s.unwrap_or(f64::NAN));
            if !(lb >= la - 1e-9) {
                drops.push((b.smooth_window, b.engage_window_s, b.disengage_window_s, la, lb));
            }
        }
    }
    drops
}

/// A screen tilted and shifted at random, a camera facing the user from in
/// front of it, and sometimes a fixed eye position. `None` when the draw puts
/// the gaze origin on the screen plane.
pub fn random_calibration(rng: &mut impl rand::Rng) -> Option<SceneCalibration> {
    use gazecue::RigidPose;
    use nalgebra::{Rotation3, Vector3};
    let mut angle = || rng.random_range(-0.6..0.6);
    let screen_rotation = Rotation3::from_euler_angles(angle(), angle(), angle());
    let camera_tilt = Rotation3::from_euler_angles(angle(), angle(), angle());
    let mut offset = || rng.random_range(-200.0..200.0);
    let screen_t = Vector3::new(offset(), offset(), offset());
    let camera_origin = Vector3::new(offset(), offset(), 600.0 + offset());
    let eye = rng.random_bool(0.5).then(|| {
        Vector3::new(
            rng.random_range(-300.0..300.0),
            rng.random_range(-300.0..300.0),
            rng.random_range(400.0..1500.0),
        )
    });
    let screen = RigidPose::new(*screen_rotation.matrix(), screen_t).ok()?;
    let camera_rotation =
        camera_tilt * Rotation3::from_axis_angle(&Vector3::y_axis(), std::f64::consts::PI);
    let camera = RigidPose::new(*camera_rotation.matrix(), -(camera_rotation * camera_origin)).ok()?;
    SceneCalibration::new(screen, camera, eye).ok()
}
