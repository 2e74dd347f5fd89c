use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gazecue::aoi::label_stream;
use gazecue::config::AppConfig;
use gazecue::optimizer::{run_grid, ParamGrid, Trial};
use gazecue::server::Server;
use gazecue::sessionio::{
    dwell_by_page, dwell_stats, heatmap, read_event_log, read_sample_log, read_trial_dir,
    read_truth, render_event_log, session_report, write_event_log, write_trial, CohortSummary,
    DwellCounts, HeatmapBounds, SampleLogHeader, SessionReport,
};
use gazecue::simulator::{BehaviorProfile, Simulator};
use gazecue::{run_session, GazeSample};

#[derive(Parser)]
#[command(name = "gazecue", version, about = "Gaze-based page-turn detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Application config (JSON). Defaults are used when absent.
    #[arg(long, env = "GAZECUE_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sample log through the detector; prints events and a report.
    Replay {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        events_out: Option<PathBuf>,
    },
    /// Generate simulated sessions with ground truth.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        /// Behaviour profile (JSON); defaults when absent.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        sessions: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        pages: usize,
    },
    /// Grid search over smoothing and window sizes.
    Optimize {
        #[command(flatten)]
        config: ConfigArg,
        /// Grid (JSON); the 5x5x5 default grid when absent.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Directory of NAME.samples.jsonl + NAME.truth.json pairs.
        #[arg(long)]
        trials: PathBuf,
        /// Seconds after the true shift within which a detection counts.
        #[arg(long)]
        tolerance: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize an event log, optionally with dwell counts and a heatmap.
    Analyze {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        events: PathBuf,
        /// Sample log the events came from; needed for dwell and heatmap.
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long, requires = "samples")]
        heatmap_out: Option<PathBuf>,
        #[arg(long, default_value_t = 20.0)]
        cell_mm: f64,
        /// Ground truth to score against; needs --tolerance.
        #[arg(long, requires = "tolerance")]
        truth: Option<PathBuf>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Stream samples in, events out, over TCP.
    Serve {
        #[command(flatten)]
        config: ConfigArg,
        /// Overrides the configured port; 0 picks a free one.
        #[arg(long)]
        port: Option<u16>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}

/// The error chain joined with `: `, skipping causes a message already
/// spells out.
fn describe(e: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !text.contains(&msg) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&msg);
        }
    }
    text
}

fn load_config(arg: &ConfigArg) -> Result<AppConfig> {
    match &arg.config {
        Some(path) => Ok(AppConfig::load(path)?),
        None => Ok(AppConfig::default()),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| path.display().to_string())?;
    serde_json::from_str(&text).with_context(|| path.display().to_string())
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct Report<T: Serialize> {
    #[serde(rename = "type")]
    kind: &'static str,
    #[serde(flatten)]
    body: T,
}

fn report<T: Serialize>(body: T) -> Report<T> {
    Report { kind: "report", body }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Replay {
            config,
            input,
            events_out,
        } => replay(&load_config(&config)?, &input, events_out.as_deref()),
        Command::Simulate {
            config,
            profile,
            sessions,
            seed,
            out,
            pages,
        } => {
            let profile = match profile {
                Some(p) => read_json(&p)?,
                None => BehaviorProfile::default(),
            };
            simulate(&load_config(&config)?, profile, sessions, seed, &out, pages)
        }
        Command::Optimize {
            config,
            grid,
            trials,
            tolerance,
            out,
        } => {
            let grid = match grid {
                Some(p) => read_json(&p)?,
                None => ParamGrid::standard(),
            };
            optimize(&load_config(&config)?, &grid, &trials, tolerance, &out)
        }
        Command::Analyze {
            config,
            events,
            samples,
            heatmap_out,
            cell_mm,
            truth,
            tolerance,
        } => analyze(
            &load_config(&config)?,
            &events,
            samples.as_deref(),
            heatmap_out.as_deref(),
            cell_mm,
            truth.as_deref().zip(tolerance),
        ),
        Command::Serve { config, port } => {
            let mut config = load_config(&config)?;
            if let Some(port) = port {
                config.service.port = port;
            }
            let address = format!("{}:{}", config.service.address, config.service.port);
            let server = Server::bind(config).with_context(|| format!("cannot listen on {address}"))?;
            println!("listening on {}", server.local_addr()?);
            server.run()?;
            Ok(())
        }
    }
}

fn read_samples(path: &Path) -> Result<Vec<GazeSample>> {
    Ok(read_sample_log(path)
        .map_err(|e| e.in_file(path))?
        .samples())
}

fn replay(config: &AppConfig, input: &Path, events_out: Option<&Path>) -> Result<()> {
    let samples = read_samples(input)?;
    let events = run_session(&config.detector, &config.layout, &config.calibration, &samples)
        .with_context(|| input.display().to_string())?;
    if let Some(path) = events_out {
        write_event_log(&events, path)?;
    }
    #[derive(Serialize)]
    struct Body {
        samples: usize,
        #[serde(flatten)]
        report: SessionReport,
    }
    let start = samples.first().map_or(0.0, |s| s.timestamp);
    io::stdout().lock().write_all(render_event_log(&events).as_bytes())?;
    print_json(&report(Body {
        samples: samples.len(),
        report: session_report(&events, start, None),
    }))
}

fn simulate(
    config: &AppConfig,
    profile: BehaviorProfile,
    sessions: usize,
    seed: u64,
    out: &Path,
    pages: usize,
) -> Result<()> {
    if sessions == 0 {
        bail!("--sessions must be at least 1");
    }
    fs::create_dir_all(out).with_context(|| out.display().to_string())?;
    let header = SampleLogHeader {
        sample_rate_hz: Some(profile.sample_rate_hz),
        ..SampleLogHeader::default()
    };
    let mut reports = Vec::with_capacity(sessions);
    for i in 0..sessions {
        let profile = BehaviorProfile {
            seed: seed.wrapping_add(i as u64),
            ..profile.clone()
        };
        let (samples, truth) =
            Simulator::new(profile, config.calibration, config.layout)?.generate_session(pages)?;
        let events = run_session(&config.detector, &config.layout, &config.calibration, &samples)?;
        reports.push(session_report(&events, 0.0, None));
        write_trial(out, &format!("session_{i:03}"), header.clone(), &Trial { samples, truth })?;
    }
    #[derive(Serialize)]
    struct Body {
        seed: u64,
        pages: usize,
        #[serde(flatten)]
        cohort: CohortSummary,
    }
    let body = report(Body {
        seed,
        pages,
        cohort: CohortSummary::from_reports(&reports),
    });
    let summary = out.join("summary.json");
    fs::write(&summary, serde_json::to_string_pretty(&body)? + "\n")
        .with_context(|| summary.display().to_string())?;
    print_json(&body)
}

fn optimize(config: &AppConfig, grid: &ParamGrid, dir: &Path, tolerance: f64, out: &Path) -> Result<()> {
    let trials: Vec<Trial> = read_trial_dir(dir)?.into_iter().map(|(_, t)| t).collect();
    if trials.is_empty() {
        bail!("{}: no trials (expected NAME.samples.jsonl + NAME.truth.json)", dir.display());
    }
    let result = run_grid(grid, &trials, &config.detector, &config.calibration, &config.layout, tolerance)?;
    fs::write(out, result.to_csv()).with_context(|| out.display().to_string())?;
    #[derive(Serialize)]
    struct Body<'a> {
        trials: usize,
        cells: usize,
        best: &'a gazecue::optimizer::GridRow,
    }
    let best = result.best().expect("validated grid is non-empty");
    print_json(&report(Body {
        trials: trials.len(),
        cells: result.rows.len(),
        best,
    }))
}

fn analyze(
    config: &AppConfig,
    events_path: &Path,
    samples_path: Option<&Path>,
    heatmap_out: Option<&Path>,
    cell_mm: f64,
    truth: Option<(&Path, f64)>,
) -> Result<()> {
    let events = read_event_log(events_path).map_err(|e| e.in_file(events_path))?;
    let truth = match truth {
        Some((path, tol)) => Some((read_truth(path).map_err(|e| e.in_file(path))?, tol)),
        None => None,
    };
    let samples = samples_path.map(read_samples).transpose()?;
    let start = samples
        .as_ref()
        .and_then(|s| s.first())
        .map_or(0.0, |s| s.timestamp);
    let points = match &samples {
        Some(samples) => Some(label_stream(
            &config.layout,
            &config.calibration,
            config.detector.smooth_window,
            samples,
        )?),
        None => None,
    };

    #[derive(Serialize)]
    struct Body {
        #[serde(flatten)]
        report: SessionReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        dwell: Option<DwellCounts>,
        #[serde(skip_serializing_if = "Option::is_none")]
        dwell_by_page: Option<Vec<DwellCounts>>,
    }
    let body = Body {
        report: session_report(&events, start, truth.as_ref().map(|(t, tol)| (t, *tol))),
        dwell: points.as_deref().map(dwell_stats),
        dwell_by_page: points.as_deref().map(|p| dwell_by_page(p, &events)),
    };

    if let (Some(path), Some(points)) = (heatmap_out, &points) {
        // Both AOIs plus a margin, so misses around them show up too.
        let (t, f) = (config.layout.tablet(), config.layout.face());
        let margin = 200.0;
        let bounds = HeatmapBounds::new(
            t.x_min().min(f.x_min()) - margin,
            t.x_max().max(f.x_max()) + margin,
            t.y_min().min(f.y_min()) - margin,
            t.y_max().max(f.y_max()) + margin,
        )?;
        let grid = heatmap(points.iter().filter_map(|p| p.point), bounds, cell_mm)?;
        let text = if path.extension().is_some_and(|e| e == "pgm") {
            grid.to_pgm()
        } else {
            grid.to_csv()
        };
        fs::write(path, text).with_context(|| path.display().to_string())?;
    }
    print_json(&report(body))
}
