//! Simulate a cohort, write it as a trial directory and summarize success
//! rates per session.
//!
//!     cargo run --example simulate_cohort -- /tmp/cohort

use gazecue::optimizer::generate_cohort;
use gazecue::sessionio::{session_report, write_trial, CohortSummary, SampleLogHeader};
use gazecue::simulator::BehaviorProfile;
use gazecue::{run_session, AoiLayout, DetectorConfig, SceneCalibration};

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1);
    let calib = SceneCalibration::default();
    let layout = AoiLayout::default();
    let profile = BehaviorProfile {
        seed: 42,
        glance_rate_hz: 0.1,
        ..BehaviorProfile::default()
    };
    let trials = generate_cohort(&profile, &calib, &layout, 17, 6)?;

    let mut reports = Vec::new();
    for (i, trial) in trials.iter().enumerate() {
        let events = run_session(&DetectorConfig::default(), &layout, &calib, &trial.samples)?;
        let report = session_report(&events, 0.0, Some((&trial.truth, 2.0)));
        println!(
            "session {i:2}: {:3} samples, {} turns, success {:.2}",
            trial.samples.len(),
            report.turns,
            report.success_rate.unwrap_or(0.0)
        );
        reports.push(report);
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir)?;
            write_trial(dir, &format!("session_{i:03}"), SampleLogHeader::default(), trial)?;
        }
    }
    println!("{}", serde_json::to_string_pretty(&CohortSummary::from_reports(&reports))?);
    Ok(())
}
