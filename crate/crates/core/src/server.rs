//! Line-oriented TCP service: each connection streams sample records in and
//! receives transition events back, one JSON object per line.
//!
//! Inbound lines use the sample-log record schema (an optional
//! `"type":"sample"` is accepted). Outbound lines are event records exactly as
//! in an event log, plus
//!
//! * `{"type":"heartbeat","state":"engaged","t":12.4}` every `heartbeat_ms`
//!   of inbound silence (`t` is the last sample time, `null` before any);
//! * `{"type":"error","line":7,"message":"..."}` for a line that could not be
//!   used. The connection stays open, except after a queue overflow, where
//!   the error is the last message before the server closes it.
//!
//! Each connection queues up to `queue_depth` unprocessed samples. A burst
//! beyond that is absorbed as long as the queue drains within
//! `queue_grace_ms`; otherwise the client is outpacing the detector and the
//! connection is closed with an error. `heartbeat_ms = 0` disables
//! heartbeats.
//!
//! When the client shuts down its write half the server finishes the queued
//! samples and closes the connection.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crossbeam_channel::{RecvTimeoutError, SendTimeoutError};
use log::{debug, info, warn};
use serde::Serialize;

use crate::config::AppConfig;
use crate::detector::{EngagementState, SessionPipeline};
use crate::sessionio::SampleRecord;

const ACCEPT_POLL: Duration = Duration::from_millis(10);
/// How long an overflowed connection's input is drained before closing.
const OVERFLOW_DRAIN: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ControlMessage {
    Heartbeat {
        state: EngagementState,
        t: Option<f64>,
    },
    Error {
        line: usize,
        message: String,
    },
}

/// A bound, not yet running, service.
pub struct Server {
    listener: TcpListener,
    config: Arc<AppConfig>,
    shutdown: Arc<AtomicBool>,
}

/// A service running on a background thread.
pub struct RunningServer {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    thread: Option<JoinHandle<io::Result<()>>>,
}

impl Server {
    /// Binds `config.service.address:config.service.port`.
    pub fn bind(config: AppConfig) -> io::Result<Self> {
        let listener = TcpListener::bind((config.service.address.as_str(), config.service.port))?;
        Ok(Self {
            listener,
            config: Arc::new(config),
            shutdown: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Flag that stops the accept loop when set.
    pub fn shutdown_flag(&self) -> Arc<AtomicBool> {
        self.shutdown.clone()
    }

    /// Accepts connections until the shutdown flag is set. Connections
    /// already open run to completion on their own threads.
    pub fn run(self) -> io::Result<()> {
        self.listener.set_nonblocking(true)?;
        let connections = AtomicU64::new(0);
        info!("listening on {}", self.listener.local_addr()?);
        while !self.shutdown.load(Ordering::Relaxed) {
            match self.listener.accept() {
                Ok((stream, peer)) => {
                    let id = connections.fetch_add(1, Ordering::Relaxed);
                    let config = self.config.clone();
                    info!("connection {id} from {peer}");
                    thread::Builder::new()
                        .name(format!("gazecue-conn-{id}"))
                        .spawn(move || {
                            if let Err(e) = handle_connection(stream, id, &config) {
                                warn!("connection {id}: {e}");
                            }
                        })?;
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(ACCEPT_POLL),
                Err(e) => return Err(e),
            }
        }
        info!("shutting down");
        Ok(())
    }

    pub fn spawn(self) -> io::Result<RunningServer> {
        let addr = self.local_addr()?;
        let shutdown = self.shutdown_flag();
        let thread = thread::Builder::new()
            .name("gazecue-accept".into())
            .spawn(move || self.run())?;
        Ok(RunningServer {
            addr,
            shutdown,
            thread: Some(thread),
        })
    }
}

impl RunningServer {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting and waits for the accept loop to exit.
    pub fn stop(mut self) -> io::Result<()> {
        self.shutdown.store(true, Ordering::Relaxed);
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(io::Error::other("accept thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

struct Inbound {
    line: usize,
    text: String,
}

fn handle_connection(stream: TcpStream, id: u64, config: &AppConfig) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let read_half = stream.try_clone()?;
    let depth = config.service.queue_depth.max(1);
    let (tx, rx) = crossbeam_channel::bounded::<Inbound>(depth);
    let grace = Duration::from_millis(config.service.queue_grace_ms);
    let overflow = Arc::new(AtomicBool::new(false));

    let reader = {
        let overflow = overflow.clone();
        thread::Builder::new()
            .name(format!("gazecue-read-{id}"))
            .spawn(move || {
                let reader = BufReader::new(&read_half);
                for (i, line) in reader.lines().enumerate() {
                    let Ok(text) = line else { break };
                    match tx.send_timeout(Inbound { line: i + 1, text }, grace) {
                        Ok(()) => {}
                        Err(SendTimeoutError::Timeout(_)) => {
                            overflow.store(true, Ordering::Relaxed);
                            break;
                        }
                        Err(SendTimeoutError::Disconnected(_)) => break,
                    }
                }
            })?
    };

    let mut pipeline = SessionPipeline::new(config.detector, config.layout, config.calibration)
        .map_err(io::Error::other)?;
    let mut out = BufWriter::new(&stream);
    let mut event_log = match &config.paths.event_log_dir {
        Some(dir) => {
            let path: PathBuf = dir.join(format!("connection_{id:04}.events.jsonl"));
            Some(BufWriter::new(File::create(path)?))
        }
        None => None,
    };
    let heartbeat = (config.service.heartbeat_ms > 0)
        .then(|| Duration::from_millis(config.service.heartbeat_ms));
    let mut last_t: Option<f64> = None;
    let mut last_line = 0;

    loop {
        let next = match heartbeat {
            Some(period) => rx.recv_timeout(period),
            None => rx.recv().map_err(|_| RecvTimeoutError::Disconnected),
        };
        match next {
            Ok(Inbound { line, text }) => {
                last_line = line;
                if text.trim().is_empty() {
                    continue;
                }
                let result = SampleRecord::parse_json(&text).and_then(|r| {
                    let t = r.t;
                    pipeline.push(r.to_sample()).map(|ev| (t, ev)).map_err(|e| e.to_string())
                });
                match result {
                    Ok((t, events)) => {
                        last_t = Some(t);
                        for event in &events {
                            let json = serde_json::to_string(event).expect("event serializes");
                            writeln!(out, "{json}")?;
                            if let Some(log) = event_log.as_mut() {
                                writeln!(log, "{json}")?;
                            }
                        }
                        if !events.is_empty() {
                            out.flush()?;
                        }
                    }
                    Err(message) => {
                        debug!("connection {id} line {line}: {message}");
                        send(&mut out, &ControlMessage::Error { line, message })?;
                    }
                }
            }
            Err(RecvTimeoutError::Timeout) => {
                send(
                    &mut out,
                    &ControlMessage::Heartbeat {
                        state: pipeline.state(),
                        t: last_t,
                    },
                )?;
            }
            Err(RecvTimeoutError::Disconnected) => break,
        }
    }

    if overflow.load(Ordering::Relaxed) {
        warn!("connection {id}: queue of {depth} samples overflowed");
        send(
            &mut out,
            &ControlMessage::Error {
                line: last_line + 1,
                message: format!("too many pending samples (queue depth {depth}); closing"),
            },
        )?;
    }
    if let Some(log) = event_log.as_mut() {
        log.flush()?;
    }
    out.flush()?;
    drop(out);
    let _ = reader.join();
    let _ = stream.shutdown(Shutdown::Write);
    if overflow.load(Ordering::Relaxed) {
        // Closing with unread input would reset the connection and could
        // destroy the error line before the client reads it.
        drain(&stream, OVERFLOW_DRAIN);
    }
    info!("connection {id} closed");
    Ok(())
}

fn drain(mut stream: &TcpStream, limit: Duration) {
    let deadline = Instant::now() + limit;
    let _ = stream.set_read_timeout(Some(Duration::from_millis(50)));
    let mut buf = [0u8; 8192];
    while Instant::now() < deadline {
        match stream.read(&mut buf) {
            Ok(0) => break,
            Ok(_) => {}
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(_) => break,
        }
    }
}

fn send(out: &mut impl Write, message: &ControlMessage) -> io::Result<()> {
    let json = serde_json::to_string(message).expect("control message serializes");
    writeln!(out, "{json}")?;
    out.flush()
}
