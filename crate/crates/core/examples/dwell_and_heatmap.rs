//! Dwell counts per page and a gaze density map for one simulated session.
//!
//!     cargo run --example dwell_and_heatmap -- /tmp/gaze.pgm

use gazecue::aoi::label_stream;
use gazecue::sessionio::{dwell_by_page, heatmap, HeatmapBounds};
use gazecue::simulator::{generate_session, BehaviorProfile};
use gazecue::{run_session, AoiLayout, DetectorConfig, SceneCalibration};

fn main() -> anyhow::Result<()> {
    let calib = SceneCalibration::default();
    let layout = AoiLayout::default();
    let config = DetectorConfig::default();
    let (samples, _) = generate_session(&BehaviorProfile { seed: 11, ..Default::default() }, &calib, &layout, 5)?;

    let events = run_session(&config, &layout, &calib, &samples)?;
    let points = label_stream(&layout, &calib, config.smooth_window, &samples)?;
    for (page, d) in dwell_by_page(&points, &events).iter().enumerate() {
        println!(
            "page {page}: tablet {:3} face {:3} elsewhere {:3}",
            d.tablet, d.face, d.elsewhere
        );
    }

    let bounds = HeatmapBounds::new(-400.0, 400.0, -700.0, 300.0)?;
    let grid = heatmap(points.iter().filter_map(|p| p.point), bounds, 25.0)?;
    println!(
        "{} x {} cells, {} in bounds, {} outside",
        grid.rows,
        grid.cols,
        grid.in_bounds(),
        grid.out_of_bounds
    );
    match std::env::args().nth(1) {
        Some(path) => std::fs::write(path, grid.to_pgm())?,
        None => {
            // Coarse text rendering, top row first.
            for row in (0..grid.rows).rev().step_by(2) {
                let line: String = (0..grid.cols)
                    .map(|c| match grid.cell(row, c) {
                        0 => ' ',
                        1..=2 => '.',
                        3..=6 => 'o',
                        _ => '#',
                    })
                    .collect();
                println!("|{line}|");
            }
        }
    }
    Ok(())
}
