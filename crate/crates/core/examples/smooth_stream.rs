//! Trailing moving average over a noisy gaze stream, for several window sizes.

use gazecue::{EulerGaze, GazeSample, SmoothingBuffer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 4.0)?;
    // 10 s at 5 Hz: a look at the tablet (pitch -20) then at the face (pitch 0).
    let stream: Vec<GazeSample> = (0..50)
        .map(|k| {
            let pitch = if k < 25 { -20.0 } else { 0.0 };
            let gaze = EulerGaze::from_degrees(noise.sample(&mut rng), pitch + noise.sample(&mut rng));
            Ok(GazeSample::new(k as f64 / 5.0, gaze?))
        })
        .collect::<anyhow::Result<_>>()?;

    for n in [1, 3, 5, 10, 15] {
        let mut buf = SmoothingBuffer::new(n)?;
        let smoothed: Vec<f64> = stream
            .iter()
            .map(|s| buf.push_and_smooth(*s).map(|g| g.gaze.pitch_degrees()))
            .collect::<Result<_, _>>()?;
        let jitter = smoothed[5..25]
            .iter()
            .map(|p| (p + 20.0).powi(2))
            .sum::<f64>()
            / 20.0;
        // First sample after the switch that is closer to 0 than to -20.
        let settle = smoothed[25..].iter().position(|p| *p > -10.0).map(|k| k as f64 / 5.0);
        println!("N={n:<2} rms error while steady {:5.2} deg, crosses midway {settle:?} s after the switch", jitter.sqrt());
    }
    Ok(())
}
