//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs with `cargo test --test acceptance`.

mod common;

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpStream};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gazecue::config::AppConfig;
use gazecue::detector::run_labelled_session;
use gazecue::geometry::gaze_vector;
use gazecue::optimizer::{generate_cohort, run_grid, CohortSpec, ParamGrid};
use gazecue::server::Server;
use gazecue::sessionio::{
    heatmap, parse_event_log, parse_sample_log, read_sample_log, render_event_log,
    render_sample_log, session_report, HeatmapBounds, LogError, SampleLog, SampleLogHeader,
};
use gazecue::simulator::{BehaviorProfile, Simulator};
use gazecue::{
    run_session, AoiLabel, AoiLayout, DetectorConfig, EulerGaze, GazeSample, Point2D,
    SceneCalibration, SessionPipeline, SmoothingBuffer, TimedGazePoint, TransitionCause,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn golden(name: &str) -> PathBuf {
    common::golden_dir().join(name)
}

fn geometry() -> Outcome {
    use std::f64::consts::{FRAC_PI_2, PI};
    let start = Instant::now();
    let axes = [
        ((0.0, 0.0), [0.0, 0.0, 1.0]),
        ((FRAC_PI_2, 0.0), [1.0, 0.0, 0.0]),
        ((-FRAC_PI_2, 0.0), [-1.0, 0.0, 0.0]),
        ((PI, 0.0), [0.0, 0.0, -1.0]),
        ((0.0, FRAC_PI_2), [0.0, -1.0, 0.0]),
        ((0.0, -FRAC_PI_2), [0.0, 1.0, 0.0]),
    ];
    let mut axis_err: f64 = 0.0;
    for ((yaw, pitch), want) in axes {
        let v = gaze_vector(&EulerGaze::new(yaw, pitch).unwrap());
        for i in 0..3 {
            axis_err = axis_err.max((v[i] - want[i]).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut norm_err: f64 = 0.0;
    for _ in 0..10_000 {
        let g = EulerGaze::new(rng.random_range(-PI..=PI), rng.random_range(-FRAC_PI_2..=FRAC_PI_2)).unwrap();
        norm_err = norm_err.max((gaze_vector(&g).norm() - 1.0).abs());
    }
    let mut round_trip_err: f64 = 0.0;
    let mut trips = 0;
    while trips < 10_000 {
        let Some(calib) = common::random_calibration(&mut rng) else {
            continue;
        };
        let target = Point2D::new(rng.random_range(-400.0..400.0), rng.random_range(-400.0..400.0));
        let back = calib
            .aim_at(target)
            .and_then(|g| calib.project(&g))
            .map_err(|e| format!("round trip {trips}: {e}"))?;
        round_trip_err = round_trip_err.max((back.x - target.x).abs()).max((back.y - target.y).abs());
        trips += 1;
    }
    let elapsed = start.elapsed();
    check(
        axis_err <= 1e-9 && norm_err <= 1e-9 && round_trip_err <= 1e-6 && elapsed < Duration::from_secs(5),
        format!(
            "axis err {axis_err:.1e}, norm err {norm_err:.1e}, 10^4 round trips max err {round_trip_err:.1e} mm, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn smoothing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for n in [1, 3, 5, 10, 15] {
        let yaw: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.5..1.5)).collect();
        let pitch: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.5..1.5)).collect();
        let (ey, ep) = (common::trailing_means(&yaw, n), common::trailing_means(&pitch, n));
        let mut buffer = SmoothingBuffer::new(n).unwrap();
        for k in 0..1000 {
            let s = GazeSample::new(k as f64 * 0.2, EulerGaze::new(yaw[k], pitch[k]).unwrap());
            let out = buffer.push_and_smooth(s).unwrap();
            worst = worst.max((out.gaze.yaw() - ey[k]).abs()).max((out.gaze.pitch() - ep[k]).abs());
        }
    }
    check(worst <= 1e-12, format!("N in {{1,3,5,10,15}}, 10^3 samples each, max err {worst:.1e}"))
}

fn detector() -> Outcome {
    const LABELS: [AoiLabel; 3] = [AoiLabel::Tablet, AoiLabel::Face, AoiLabel::Elsewhere];
    let start = Instant::now();
    let config = DetectorConfig::default();
    let mut mismatches = 0;
    let mut with_events = 0;
    for code in 0..3usize.pow(8) {
        let mut c = code;
        let mut labels = [AoiLabel::Tablet; 8];
        for slot in labels.iter_mut().rev() {
            *slot = LABELS[c % 3];
            c /= 3;
        }
        let points = common::at_5hz(&labels);
        let timed: Vec<TimedGazePoint> = points.iter().map(|&(t, l)| TimedGazePoint::labelled(t, l)).collect();
        let got = run_labelled_session(&config, &timed).map_err(|e| e.to_string())?;
        let want = common::detect(&config, &points).0;
        with_events += usize::from(!want.is_empty());
        mismatches += usize::from(got != want);
    }
    let elapsed = start.elapsed();
    check(
        mismatches == 0 && elapsed < Duration::from_secs(60),
        format!(
            "6561 sequences ({with_events} with transitions), {mismatches} mismatches, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn timeout() -> Outcome {
    let profile = BehaviorProfile {
        shift_to_face: 0.0,
        seed: 5,
        ..BehaviorProfile::default()
    };
    let (samples, _) = Simulator::new(profile, SceneCalibration::default(), AoiLayout::default())
        .and_then(|s| s.generate_session(3))
        .map_err(|e| e.to_string())?;
    let events = run_session(&DetectorConfig::default(), &AoiLayout::default(), &SceneCalibration::default(), &samples)
        .map_err(|e| e.to_string())?;
    let first = events
        .iter()
        .find(|e| e.is_disengagement())
        .ok_or("no page turn at all")?;
    check(
        first.cause == TransitionCause::Timeout && (first.timestamp - 10.0).abs() <= 0.2,
        format!("first page advanced by {:?} at {:.2} s", first.cause, first.timestamp),
    )
}

fn grid() -> Outcome {
    let calib = SceneCalibration::default();
    let layout = AoiLayout::default();
    let base = DetectorConfig::default();
    let grid = ParamGrid::standard();
    let cells = grid.cells().len();

    let noiseless = BehaviorProfile {
        read_sigma: 0.3,
        seed: 3,
        ..BehaviorProfile::noiseless()
    };
    let trials = generate_cohort(&noiseless, &calib, &layout, 8, 6).map_err(|e| e.to_string())?;
    let clean = run_grid(&grid, &trials, &base, &calib, &layout, 5.0).map_err(|e| e.to_string())?;
    let drops = common::latency_drops(&clean.rows);

    let plan: CohortSpec = serde_json::from_str(
        &fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/calibrated_cohort.json"))
            .map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let cohort = plan.generate(&calib, &layout).map_err(|e| e.to_string())?;
    let result = run_grid(&grid, &cohort, &base, &calib, &layout, plan.tolerance_s).map_err(|e| e.to_string())?;
    let best = result.best().ok_or("empty grid")?;
    let extreme = |w: f64| w == 0.5 || w == 3.0;
    let interior = !extreme(best.engage_window_s) && !extreme(best.disengage_window_s);
    check(
        cells == 125 && result.rows.len() == 125 && drops.is_empty() && interior,
        format!(
            "{cells} cells; noise-free latency drops in W_d: {}; calibrated cohort ({} sessions, TPR {}/{}) best N={} W_e={} W_d={} accuracy {:.3}",
            drops.len(),
            plan.sessions,
            plan.profile.tablet_tpr,
            plan.profile.face_tpr,
            best.smooth_window,
            best.engage_window_s,
            best.disengage_window_s,
            best.accuracy
        ),
    )
}

fn success_rate() -> Outcome {
    let points: Vec<TimedGazePoint> = common::twelve_turn_corpus()
        .into_iter()
        .map(|(t, l)| TimedGazePoint::labelled(t, l))
        .collect();
    let events = run_labelled_session(&DetectorConfig::default(), &points).map_err(|e| e.to_string())?;
    let report = session_report(&events, 0.0, None);
    let percent = report.success_rate.unwrap_or(0.0) * 100.0;
    check(
        report.turns == 12 && report.gaze_turns == 11 && (percent - 91.7).abs() <= 0.1,
        format!("{} of {} turns by gaze: {percent:.2}%", report.gaze_turns, report.turns),
    )
}

/// Sends `body` on a fresh connection and returns everything received.
fn exchange(addr: std::net::SocketAddr, body: &str) -> std::io::Result<String> {
    let mut stream = TcpStream::connect(addr)?;
    stream.set_read_timeout(Some(Duration::from_secs(30)))?;
    let mut writer = stream.try_clone()?;
    let body = body.to_string();
    let sender = std::thread::spawn(move || {
        writer.write_all(body.as_bytes())?;
        writer.shutdown(Shutdown::Write)
    });
    let mut received = String::new();
    stream.read_to_string(&mut received)?;
    sender.join().expect("sender thread")?;
    Ok(received)
}

fn parity() -> Outcome {
    let input = golden("session_a.samples.jsonl");
    let expected = fs::read_to_string(golden("session_a.events.jsonl")).map_err(|e| e.to_string())?;
    let replay = || -> Result<String, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_gazecue"))
            .env_remove("GAZECUE_CONFIG")
            .args(["replay", "--input"])
            .arg(&input)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
        // Everything but the trailing report line.
        let body = text.trim_end().rsplit_once('\n').map_or("", |(b, _)| b);
        Ok(format!("{body}\n"))
    };
    let cli = [replay()?, replay()?];

    let samples = read_sample_log(&input).map_err(|e| e.to_string())?.samples();
    let library = render_event_log(
        &run_session(&DetectorConfig::default(), &AoiLayout::default(), &SceneCalibration::default(), &samples)
            .map_err(|e| e.to_string())?,
    );

    let mut config = AppConfig::default();
    config.service.port = 0;
    config.service.heartbeat_ms = 0;
    let server = Server::bind(config).and_then(Server::spawn).map_err(|e| e.to_string())?;
    let text = fs::read_to_string(&input).map_err(|e| e.to_string())?;
    let body: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    let served = [
        exchange(server.local_addr(), &body).map_err(|e| e.to_string())?,
        exchange(server.local_addr(), &body).map_err(|e| e.to_string())?,
    ];
    let _ = server.stop();

    let all = [&cli[0], &cli[1], &library, &served[0], &served[1]];
    check(
        all.iter().all(|s| **s == expected),
        format!(
            "golden ({} events): cli replay x2 {}, library {}, serve x2 {}",
            expected.lines().count(),
            if cli.iter().all(|s| *s == expected) { "identical" } else { "DIFFERENT" },
            if library == expected { "identical" } else { "DIFFERENT" },
            if served.iter().all(|s| *s == expected) { "identical" } else { "DIFFERENT" },
        ),
    )
}

fn throughput() -> Outcome {
    // A long simulated stream with glances, so every code path is busy.
    let profile = BehaviorProfile {
        glance_rate_hz: 0.3,
        seed: 77,
        ..BehaviorProfile::default()
    };
    let (samples, _) = Simulator::new(profile, SceneCalibration::default(), AoiLayout::default())
        .and_then(|s| s.generate_session(400))
        .map_err(|e| e.to_string())?;
    let config = DetectorConfig::default();
    let mut pipeline = SessionPipeline::new(config, AoiLayout::default(), SceneCalibration::default())
        .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mut events = 0;
    for s in &samples {
        events += pipeline.push(*s).map_err(|e| e.to_string())?.len();
    }
    let rate = samples.len() as f64 / start.elapsed().as_secs_f64();

    // End to end: one sample per write, timed until its event comes back.
    let log = read_sample_log(golden("session_a.samples.jsonl")).map_err(|e| e.to_string())?;
    let expected = parse_event_log(&fs::read_to_string(golden("session_a.events.jsonl")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mut config = AppConfig::default();
    config.service.port = 0;
    config.service.heartbeat_ms = 0;
    let server = Server::bind(config).and_then(Server::spawn).map_err(|e| e.to_string())?;
    let mut latencies = Vec::new();
    for _ in 0..5 {
        let stream = TcpStream::connect(server.local_addr()).map_err(|e| e.to_string())?;
        stream.set_nodelay(true).map_err(|e| e.to_string())?;
        stream.set_read_timeout(Some(Duration::from_secs(10))).map_err(|e| e.to_string())?;
        let mut writer = stream.try_clone().map_err(|e| e.to_string())?;
        let mut reader = BufReader::new(stream);
        // Wait until the connection is being served (the accept loop polls),
        // using a line the server answers with an error.
        let mut reply = String::new();
        writer.write_all(b"{}\n").map_err(|e| e.to_string())?;
        reader.read_line(&mut reply).map_err(|e| e.to_string())?;
        for record in &log.records {
            let line = serde_json::to_string(record).map_err(|e| e.to_string())? + "\n";
            let replies = expected.iter().filter(|e| e.timestamp == record.t).count();
            let sent = Instant::now();
            writer.write_all(line.as_bytes()).map_err(|e| e.to_string())?;
            if replies > 0 {
                let mut reply = String::new();
                for _ in 0..replies {
                    reply.clear();
                    reader.read_line(&mut reply).map_err(|e| e.to_string())?;
                }
                latencies.push(sent.elapsed());
            }
        }
    }
    let _ = server.stop();
    latencies.sort();
    let p95 = latencies[latencies.len() * 95 / 100];
    let median = latencies[latencies.len() / 2];
    check(
        rate >= 50_000.0 && p95 < Duration::from_millis(1),
        format!(
            "pipeline {:.0} samples/s over {} samples ({events} events); serve sample->event median {:.0} us, p95 {:.0} us over {} events",
            rate,
            samples.len(),
            median.as_secs_f64() * 1e6,
            p95.as_secs_f64() * 1e6,
            latencies.len()
        ),
    )
}

fn io() -> Outcome {
    let profile = BehaviorProfile {
        glance_rate_hz: 0.3,
        seed: 8,
        ..BehaviorProfile::default()
    };
    let (samples, _) = Simulator::new(profile, SceneCalibration::default(), AoiLayout::default())
        .and_then(|s| s.generate_session(10))
        .map_err(|e| e.to_string())?;
    let log = SampleLog::from_samples(SampleLogHeader::default(), &samples);
    let text = render_sample_log(&log);
    let parsed = parse_sample_log(&text).map_err(|e| e.to_string())?;
    let samples_ok = parsed == log && parsed.samples() == samples && render_sample_log(&parsed) == text;

    let events = run_session(&DetectorConfig::default(), &AoiLayout::default(), &SceneCalibration::default(), &samples)
        .map_err(|e| e.to_string())?;
    let events_ok = parse_event_log(&render_event_log(&events)).map_err(|e| e.to_string())? == events;

    // Each malformed log must fail on exactly the line it was broken on.
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut diagnostics_ok = 0;
    let breakages = [
        (17usize, "{\"t\":"),
        (40, "{\"t\":1,\"yaw_deg\":0}"),
        (55, "{\"t\":0.0,\"yaw_deg\":0,\"pitch_deg\":0}"),
        (81, "{\"t\":99999,\"yaw_deg\":0,\"pitch_deg\":95}"),
    ];
    for (line, broken) in breakages {
        let original = std::mem::replace(&mut lines[line - 1], broken.to_string());
        match parse_sample_log(&lines.join("\n")) {
            Err(LogError::Parse { line: got, .. }) if got == line => diagnostics_ok += 1,
            _ => {}
        }
        lines[line - 1] = original;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let bounds = HeatmapBounds::new(-300.0, 300.0, -600.0, 300.0).map_err(|e| e.to_string())?;
    let points: Vec<Point2D> = (0..10_000)
        .map(|_| Point2D::new(rng.random_range(-500.0..500.0), rng.random_range(-800.0..500.0)))
        .collect();
    let grid = heatmap(points, bounds, 20.0).map_err(|e| e.to_string())?;
    let conserved = grid.in_bounds() + grid.out_of_bounds == 10_000;

    check(
        samples_ok && events_ok && diagnostics_ok == breakages.len() && conserved,
        format!(
            "{} samples / {} events round-trip: {}/{}; malformed lines located {}/{}; heatmap {} + {} = 10^4",
            samples.len(),
            events.len(),
            samples_ok,
            events_ok,
            diagnostics_ok,
            breakages.len(),
            grid.in_bounds(),
            grid.out_of_bounds
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("geometry", geometry),
        ("smoothing", smoothing),
        ("detector", detector),
        ("timeout", timeout),
        ("grid", grid),
        ("success-rate", success_rate),
        ("determinism-parity", parity),
        ("throughput", throughput),
        ("io", io),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
