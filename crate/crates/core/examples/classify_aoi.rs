//! Map screen points and whole gaze streams to tablet / face / elsewhere.

use gazecue::aoi::label_stream;
use gazecue::sessionio::dwell_stats;
use gazecue::{AoiLayout, AoiRect, GazeSample, Point2D, SceneCalibration};

fn main() -> anyhow::Result<()> {
    let layout = AoiLayout::default();
    println!("tablet {:?}\nface   {:?}", layout.tablet(), layout.face());

    // Rectangles are half-open: the lower/left edge belongs, the upper/right does not.
    for p in [
        Point2D::new(0.0, -350.0),
        Point2D::new(-120.0, -450.0),
        Point2D::new(120.0, -300.0),
        Point2D::new(0.0, 0.0),
        Point2D::new(0.0, -175.0),
    ] {
        println!("({:6.1}, {:6.1}) -> {}", p.x, p.y, layout.classify(p).as_str());
    }

    // A custom layout: a wider tablet held closer to the face.
    let wide = AoiLayout::new(
        AoiRect::new(-200.0, 200.0, -380.0, -180.0)?,
        AoiRect::new(-90.0, 90.0, -90.0, 110.0)?,
    )?;
    println!("wide layout: (150, -200) -> {}", wide.classify(Point2D::new(150.0, -200.0)).as_str());

    // Aim at each AOI in turn and label the stream with 3-sample smoothing.
    let calib = SceneCalibration::default();
    let targets = [layout.tablet().center(), layout.face().center(), Point2D::new(500.0, 0.0)];
    let samples: Vec<GazeSample> = (0..30)
        .map(|k| Ok(GazeSample::new(k as f64 * 0.2, calib.aim_at(targets[k / 10])?)))
        .collect::<anyhow::Result<_>>()?;
    let points = label_stream(&layout, &calib, 3, &samples)?;
    let labels: String = points.iter().map(|p| p.label.as_str().chars().next().unwrap()).collect();
    println!("labels: {labels}");
    println!("dwell: {:?}", dwell_stats(&points));
    Ok(())
}
