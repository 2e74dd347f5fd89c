//! Sweep smoothing and window sizes over the shipped calibrated cohort
//! (tablet hit rate 0.4, face 0.5) and report the best cell.
//!
//!     cargo run --release --example grid_search -- [cohort.json] [grid.csv]

use gazecue::optimizer::{run_grid, CohortSpec, ParamGrid};
use gazecue::{AoiLayout, DetectorConfig, SceneCalibration};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/calibrated_cohort.json").into());
    let spec: CohortSpec = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
    let calib = SceneCalibration::default();
    let layout = AoiLayout::default();

    let trials = spec.generate(&calib, &layout)?;
    let grid = ParamGrid::standard();
    let result = run_grid(&grid, &trials, &DetectorConfig::default(), &calib, &layout, spec.tolerance_s)?;

    let mut rows = result.rows.clone();
    rows.sort_by(|a, b| b.accuracy.total_cmp(&a.accuracy));
    println!(" N   W_e  W_d   acc   early late missed latency");
    for r in rows.iter().take(10) {
        println!(
            "{:2} {:5.1} {:4.1} {:6.3} {:5} {:4} {:6} {}",
            r.smooth_window,
            r.engage_window_s,
            r.disengage_window_s,
            r.accuracy,
            r.early,
            r.late,
            r.missed,
            r.mean_latency_s.map_or("-".into(), |l| format!("{l:.2}"))
        );
    }
    let best = result.best().expect("non-empty grid");
    println!(
        "best of {} cells: N={} W_e={} W_d={}",
        result.rows.len(),
        best.smooth_window,
        best.engage_window_s,
        best.disengage_window_s
    );
    if let Some(csv) = args.next() {
        std::fs::write(csv, result.to_csv())?;
    }
    Ok(())
}
