//! Trial directories: `NAME.samples.jsonl` next to `NAME.truth.json`.

use std::fs;
use std::path::Path;

use super::{read_sample_log, write_sample_log, LogError, SampleLog, SampleLogHeader};
use crate::optimizer::Trial;
use crate::simulator::ScriptedSession;

pub const SAMPLES_SUFFIX: &str = ".samples.jsonl";
pub const TRUTH_SUFFIX: &str = ".truth.json";

pub fn read_truth(path: impl AsRef<Path>) -> Result<ScriptedSession, LogError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| LogError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| LogError::parse(e.line(), e))
}

pub fn write_truth(truth: &ScriptedSession, path: impl AsRef<Path>) -> Result<(), LogError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(truth).expect("truth serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| LogError::io(path, e))
}

/// Writes `dir/NAME.samples.jsonl` and `dir/NAME.truth.json`.
pub fn write_trial(
    dir: impl AsRef<Path>,
    name: &str,
    header: SampleLogHeader,
    trial: &Trial,
) -> Result<(), LogError> {
    let dir = dir.as_ref();
    write_sample_log(
        &SampleLog::from_samples(header, &trial.samples),
        dir.join(format!("{name}{SAMPLES_SUFFIX}")),
    )?;
    write_truth(&trial.truth, dir.join(format!("{name}{TRUTH_SUFFIX}")))
}

/// Reads every sample log in `dir` that has a truth file beside it, sorted by
/// name. Sample logs without truth are skipped; a truth file without samples
/// is an error.
pub fn read_trial_dir(dir: impl AsRef<Path>) -> Result<Vec<(String, Trial)>, LogError> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|e| LogError::io(dir, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| LogError::io(dir, e))?;
        let file = entry.file_name().to_string_lossy().into_owned();
        if let Some(name) = file.strip_suffix(TRUTH_SUFFIX) {
            names.push(name.to_string());
        }
    }
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let samples_path = dir.join(format!("{name}{SAMPLES_SUFFIX}"));
            let samples = read_sample_log(&samples_path)
                .map_err(|e| e.in_file(&samples_path))?
                .samples();
            let truth_path = dir.join(format!("{name}{TRUTH_SUFFIX}"));
            let truth = read_truth(&truth_path).map_err(|e| e.in_file(&truth_path))?;
            Ok((name, Trial { samples, truth }))
        })
        .collect()
}
