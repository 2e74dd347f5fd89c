use std::fs;
use std::path::Path;

use super::LogError;
use crate::detector::TransitionEvent;

pub fn render_event_log(events: &[TransitionEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_event_log(text: &str) -> Result<Vec<TransitionEvent>, LogError> {
    let mut events: Vec<TransitionEvent> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event: TransitionEvent =
            serde_json::from_str(line).map_err(|e| LogError::parse(i + 1, e))?;
        if event.cause == crate::detector::TransitionCause::Gaze && event.window_fraction.is_none()
        {
            return Err(LogError::parse(i + 1, "gaze event without window_fraction"));
        }
        if let Some(prev) = events.last() {
            if event.timestamp < prev.timestamp {
                return Err(LogError::parse(
                    i + 1,
                    format!("timestamp {} precedes {}", event.timestamp, prev.timestamp),
                ));
            }
        }
        events.push(event);
    }
    Ok(events)
}

pub fn read_event_log(path: impl AsRef<Path>) -> Result<Vec<TransitionEvent>, LogError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| LogError::io(path, e))?;
    parse_event_log(&text)
}

pub fn write_event_log(events: &[TransitionEvent], path: impl AsRef<Path>) -> Result<(), LogError> {
    let path = path.as_ref();
    fs::write(path, render_event_log(events)).map_err(|e| LogError::io(path, e))
}
