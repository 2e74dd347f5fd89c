//! Yaw/pitch to a point on the robot's screen plane, and back.
//!
//!     cargo run --example project_gaze -- 5.0 19.0
//!
//! Positive pitch looks down; with the default calibration positive yaw moves
//! the point towards -x on the screen.

use gazecue::geometry::gaze_vector;
use gazecue::{AoiLayout, EulerGaze, Point2D, SceneCalibration};

fn main() -> anyhow::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let (yaw, pitch) = match args[..] {
        [y, p] => (y, p),
        _ => (5.0, 19.0),
    };

    // Eye at the camera's height, one metre in front of the screen.
    let calib = SceneCalibration::fixed_seat(0.0, 1000.0)?;
    let layout = AoiLayout::default();

    let gaze = EulerGaze::from_degrees(yaw, pitch)?;
    let v = gaze_vector(&gaze);
    println!("yaw {yaw:.2} deg, pitch {pitch:.2} deg -> eye vector [{:.4}, {:.4}, {:.4}]", v.x, v.y, v.z);

    let p = calib.project(&gaze)?;
    println!("hits screen at ({:.1}, {:.1}) mm -> {}", p.x, p.y, layout.classify(p).as_str());

    for (name, target) in [
        ("tablet centre", layout.tablet().center()),
        ("face centre", layout.face().center()),
        ("off to the side", Point2D::new(400.0, 0.0)),
    ] {
        let aim = calib.aim_at(target)?;
        let back = calib.project(&aim)?;
        println!(
            "{name:>16}: yaw {:7.3} pitch {:7.3} -> ({:.6}, {:.6})",
            aim.yaw_degrees(),
            aim.pitch_degrees(),
            back.x,
            back.y
        );
    }
    Ok(())
}
