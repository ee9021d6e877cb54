//! Line-delimited JSON scoring service: one response line per request line,
//! in request order, whatever the worker count.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Read, Write};
use std::net::{TcpListener, ToSocketAddrs};
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, RecvTimeoutError};
use serde::{Deserialize, Serialize};

use crate::engine::Limits;
use crate::extraction::{classify_text, BlockPolicy, Classification};
use crate::scoring::{compute_reward, is_correct, AnswerType, GroundTruth, RewardConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Requests longer than this are answered with an error and skipped.
pub const MAX_LINE_BYTES: usize = 4 << 20;

const POLL: Duration = Duration::from_millis(25);

/// Per-request tightening of the service limits. Unset fields keep the
/// service default.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_list_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    pub id: String,
    pub completion: String,
    pub answer_type: AnswerType,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<LimitOverrides>,
}

impl ScoreRequest {
    pub fn new(
        id: impl Into<String>,
        completion: impl Into<String>,
        answer_type: AnswerType,
        answer: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            completion: completion.into(),
            answer_type,
            answer: answer.into(),
            rel_tol: None,
            limits: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub id: String,
    pub classification: Classification,
    pub answer_value: Option<String>,
    pub correct: bool,
    pub reward: f64,
    pub error_message: Option<String>,
    pub eval_steps_used: u64,
    pub wall_ms: u64,
    /// The request as the service understood it; only in echo mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub echo: Option<ScoreRequest>,
}

/// A request the service could not score. `id` is `"?"` when none could be
/// read from the line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub id: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pong {
    pub op: String,
    pub version: String,
}

// Replies are written out immediately, so the unboxed score is fine.
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reply {
    Score(ScoreResponse),
    Pong(Pong),
    Error(ErrorResponse),
}

impl Reply {
    pub fn id(&self) -> Option<&str> {
        match self {
            Reply::Score(s) => Some(&s.id),
            Reply::Error(e) => Some(&e.id),
            Reply::Pong(_) => None,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("replies serialize")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceConfig {
    pub reward: RewardConfig,
    /// Applied to every request; overrides may only lower these.
    pub limits: Limits,
    pub workers: usize,
    pub echo: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            reward: RewardConfig::default(),
            limits: Limits::default(),
            workers: thread::available_parallelism().map_or(1, NonZeroUsize::get),
            echo: false,
        }
    }
}

fn effective_limits(base: &Limits, overrides: Option<&LimitOverrides>) -> Result<Limits, String> {
    let Some(o) = overrides else {
        return Ok(base.clone());
    };
    fn pick<T: Copy + PartialOrd + std::fmt::Display>(name: &str, base: T, o: Option<T>) -> Result<T, String> {
        match o {
            Some(v) if v > base => Err(format!("limit override {name} = {v} exceeds the service limit {base}")),
            Some(v) => Ok(v),
            None => Ok(base),
        }
    }
    let limits = Limits {
        max_steps: pick("max_steps", base.max_steps, o.max_steps)?,
        max_depth: pick("max_depth", base.max_depth, o.max_depth)?,
        max_list_len: pick("max_list_len", base.max_list_len, o.max_list_len)?,
        wall_clock_ms: pick("wall_clock_ms", base.wall_clock_ms, o.wall_clock_ms)?,
    };
    limits.validate().map_err(|e| e.to_string())?;
    Ok(limits)
}

/// Scores one request against the service configuration.
pub fn score_request(request: &ScoreRequest, config: &ServiceConfig) -> Result<ScoreResponse, ErrorResponse> {
    let start = Instant::now();
    let reject = |error: String| ErrorResponse { id: request.id.clone(), error };
    if request.id.is_empty() {
        return Err(ErrorResponse { id: "?".into(), error: "request id must be non-empty".into() });
    }
    let truth =
        GroundTruth::parse(request.answer_type, &request.answer, request.rel_tol).map_err(|e| reject(e.to_string()))?;
    let limits = effective_limits(&config.limits, request.limits.as_ref()).map_err(reject)?;
    let outcome = classify_text(&request.completion, &limits, BlockPolicy::Last);
    Ok(ScoreResponse {
        id: request.id.clone(),
        classification: outcome.classification(),
        answer_value: outcome.answer().map(ToString::to_string),
        correct: is_correct(&outcome, &truth),
        reward: compute_reward(&outcome, &truth, &config.reward),
        error_message: outcome.error_message(),
        eval_steps_used: outcome.eval_steps(),
        wall_ms: start.elapsed().as_millis() as u64,
        echo: config.echo.then(|| request.clone()),
    })
}

/// Scores every request with `config.workers` threads; results are in
/// request order.
pub fn score_batch(requests: &[ScoreRequest], config: &ServiceConfig) -> Vec<Result<ScoreResponse, ErrorResponse>> {
    let workers = config.workers.clamp(1, requests.len().max(1));
    let chunk = requests.len().div_ceil(workers).max(1);
    thread::scope(|s| {
        let handles: Vec<_> = requests
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|r| score_request(r, config)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("scoring worker panicked")).collect()
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OpRequest {
    op: String,
}

/// Handles one raw request line.
pub fn handle_line(line: &str, config: &ServiceConfig) -> Reply {
    let value: serde_json::Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return Reply::Error(ErrorResponse { id: "?".into(), error: format!("malformed request: {e}") }),
    };
    if value.get("op").is_some() {
        return match serde_json::from_value::<OpRequest>(value) {
            Ok(op) if op.op == "ping" => Reply::Pong(Pong { op: "pong".into(), version: VERSION.into() }),
            Ok(op) => Reply::Error(ErrorResponse { id: "?".into(), error: format!("unknown op `{}`", op.op) }),
            Err(e) => Reply::Error(ErrorResponse { id: "?".into(), error: format!("malformed request: {e}") }),
        };
    }
    let id = value.get("id").and_then(|v| v.as_str()).filter(|s| !s.is_empty()).unwrap_or("?").to_string();
    match serde_json::from_value::<ScoreRequest>(value) {
        Ok(request) => match score_request(&request, config) {
            Ok(r) => Reply::Score(r),
            Err(e) => Reply::Error(e),
        },
        Err(e) => Reply::Error(ErrorResponse { id, error: format!("malformed request: {e}") }),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ServeStats {
    pub requests: u64,
    pub errors: u64,
}

enum Line {
    Text(String),
    Invalid(String),
}

/// Reads one `\n`-terminated line of at most [`MAX_LINE_BYTES`]. Longer lines
/// are consumed to their end and reported as invalid.
fn read_line(reader: &mut impl BufRead) -> io::Result<Option<Line>> {
    let mut buf = Vec::new();
    let n = reader.by_ref().take(MAX_LINE_BYTES as u64 + 1).read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(None);
    }
    if buf.last() != Some(&b'\n') && buf.len() > MAX_LINE_BYTES {
        let mut sink = Vec::new();
        reader.read_until(b'\n', &mut sink)?;
        return Ok(Some(Line::Invalid(format!("request line exceeds {MAX_LINE_BYTES} bytes"))));
    }
    while matches!(buf.last(), Some(b'\n' | b'\r')) {
        buf.pop();
    }
    Ok(Some(match String::from_utf8(buf) {
        Ok(s) => Line::Text(s),
        Err(_) => Line::Invalid("request line is not valid UTF-8".into()),
    }))
}

/// Serves requests from `input` until end of input or until `shutdown` is
/// set. On shutdown no further lines are dispatched; lines already dispatched
/// are answered before returning. Blank lines are ignored.
///
/// The reader runs on a detached thread so that a drain is not held up by a
/// read blocked on an idle client.
pub fn serve_lines<R, W>(
    input: R,
    mut output: W,
    config: &ServiceConfig,
    shutdown: Arc<AtomicBool>,
) -> io::Result<ServeStats>
where
    R: BufRead + Send + 'static,
    W: Write,
{
    let workers = config.workers.max(1);
    let config = Arc::new(config.clone());
    let (job_tx, job_rx) = bounded::<(u64, Line)>(workers * 4);
    let (reply_tx, reply_rx) = bounded::<(u64, Reply)>(workers * 4);
    // Held while deciding whether to dispatch, so a drain sees a settled count.
    let gate = Arc::new(Mutex::new(0u64));

    let reader = {
        let (gate, shutdown) = (Arc::clone(&gate), Arc::clone(&shutdown));
        thread::spawn(move || -> io::Result<()> {
            let mut input = input;
            loop {
                if shutdown.load(Ordering::SeqCst) {
                    return Ok(());
                }
                let Some(line) = read_line(&mut input)? else {
                    return Ok(());
                };
                if matches!(&line, Line::Text(t) if t.trim().is_empty()) {
                    continue;
                }
                let mut dispatched = gate.lock().expect("gate poisoned");
                if shutdown.load(Ordering::SeqCst) {
                    return Ok(());
                }
                let seq = *dispatched;
                *dispatched += 1;
                drop(dispatched);
                if job_tx.send((seq, line)).is_err() {
                    return Ok(());
                }
            }
        })
    };
    for _ in 0..workers {
        let (job_rx, reply_tx, config) = (job_rx.clone(), reply_tx.clone(), Arc::clone(&config));
        thread::spawn(move || {
            for (seq, line) in job_rx {
                let reply = match line {
                    Line::Text(t) => handle_line(&t, &config),
                    Line::Invalid(error) => Reply::Error(ErrorResponse { id: "?".into(), error }),
                };
                if reply_tx.send((seq, reply)).is_err() {
                    return;
                }
            }
        });
    }
    drop((job_rx, reply_tx));

    let mut stats = ServeStats::default();
    let mut pending: BTreeMap<u64, Reply> = BTreeMap::new();
    let mut drain_target: Option<u64> = None;
    loop {
        match reply_rx.recv_timeout(POLL) {
            Ok((seq, reply)) => {
                pending.insert(seq, reply);
                while let Some(reply) = pending.remove(&stats.requests) {
                    writeln!(output, "{}", reply.to_line())?;
                    stats.requests += 1;
                    stats.errors += u64::from(matches!(reply, Reply::Error(_)));
                }
                output.flush()?;
            }
            Err(RecvTimeoutError::Timeout) => {}
            // Every worker has exited, so the reader has stopped.
            Err(RecvTimeoutError::Disconnected) => {
                return match reader.join() {
                    Ok(read) => read.map(|()| stats),
                    Err(_) => Err(io::Error::other("request reader panicked")),
                };
            }
        }
        if drain_target.is_none() && shutdown.load(Ordering::SeqCst) {
            drain_target = Some(*gate.lock().expect("gate poisoned"));
        }
        if drain_target.is_some_and(|t| stats.requests >= t) {
            return Ok(stats);
        }
    }
}

/// Accepts connections on `addr`, serving each with [`serve_lines`] on its
/// own thread, until `shutdown` is set. Returns the bound address through
/// `on_bound` before accepting, which lets callers use port 0.
pub fn serve_tcp(
    addr: impl ToSocketAddrs,
    config: &ServiceConfig,
    shutdown: Arc<AtomicBool>,
    on_bound: impl FnOnce(std::net::SocketAddr),
) -> io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    on_bound(listener.local_addr()?);
    let mut connections = Vec::new();
    while !shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                stream.set_nonblocking(false)?;
                let (config, shutdown) = (config.clone(), Arc::clone(&shutdown));
                connections.push(thread::spawn(move || -> io::Result<ServeStats> {
                    let input = io::BufReader::new(stream.try_clone()?);
                    serve_lines(input, io::BufWriter::new(stream), &config, shutdown)
                }));
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(e) => return Err(e),
        }
        connections.retain(|c| !c.is_finished());
    }
    // Per-connection I/O failures end only that connection.
    for c in connections {
        let _ = c.join();
    }
    Ok(())
}
