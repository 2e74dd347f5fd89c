//! Engagement state machine on a scripted label stream, then on a simulated
//! session replayed through the full pipeline.

use gazecue::detector::run_labelled_session;
use gazecue::sessionio::session_report;
use gazecue::simulator::{generate_session, BehaviorProfile};
use gazecue::{run_session, AoiLabel, AoiLayout, DetectorConfig, SceneCalibration, TimedGazePoint};

fn main() -> anyhow::Result<()> {
    let config = DetectorConfig::default();
    println!("{config:?}");

    // Read the tablet for 3 s, look up at the robot for 2 s, repeat; then
    // keep reading until the timeout turns the page.
    let mut labels = Vec::new();
    for _ in 0..2 {
        labels.extend([AoiLabel::Tablet; 15]);
        labels.extend([AoiLabel::Face; 10]);
    }
    labels.extend([AoiLabel::Tablet; 60]);
    let points: Vec<TimedGazePoint> = labels
        .iter()
        .enumerate()
        .map(|(k, &l)| TimedGazePoint::labelled(k as f64 / 5.0, l))
        .collect();
    for e in run_labelled_session(&config, &points)? {
        println!("{}", serde_json::to_string(&e)?);
    }

    let calib = SceneCalibration::default();
    let layout = AoiLayout::default();
    let profile = BehaviorProfile { seed: 3, ..BehaviorProfile::default() };
    let (samples, truth) = generate_session(&profile, &calib, &layout, 4)?;
    let events = run_session(&config, &layout, &calib, &samples)?;
    println!("\nsimulated: {} samples, true shifts {:?}", samples.len(), truth.shift_times());
    for e in events.iter().filter(|e| e.is_disengagement()) {
        println!("  turn at {:5.1} s ({:?})", e.timestamp, e.cause);
    }
    println!("{}", serde_json::to_string(&session_report(&events, 0.0, Some((&truth, 2.0))))?);
    Ok(())
}
