use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use super::wire::{self, Handshake, Request, Response, PROTOCOL_VERSION};
use super::{Embedder, Embedding};
use crate::error::{Error, Result};
use crate::image::SpatialImage;

pub const DEFAULT_REQUEST_TIMEOUT: Duration = Duration::from_secs(30);

/// Drives an external embedding process over the [`wire`] protocol.
///
/// One connection, requests pipelined and tagged with ids. Concurrent callers
/// queue on an internal lock; a batch holds the lock until every response in
/// it has arrived.
pub struct SubprocessEmbedder {
    conn: Mutex<Connection>,
    dim: usize,
    timeout: Duration,
}

struct Connection {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    broken: Option<String>,
}

impl SubprocessEmbedder {
    /// Splits `command_line` shell-style and spawns it.
    pub fn spawn_command_line(command_line: &str, timeout: Duration) -> Result<Self> {
        let argv = shlex::split(command_line)
            .filter(|a| !a.is_empty())
            .ok_or_else(|| Error::InvalidConfig(format!("cannot parse command line {command_line:?}")))?;
        let mut cmd = Command::new(&argv[0]);
        cmd.args(&argv[1..]);
        Self::spawn(cmd, timeout)
    }

    pub fn spawn(mut command: Command, timeout: Duration) -> Result<Self> {
        let mut child = command
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::BackendIo(format!("cannot start {command:?}: {e}")))?;
        let stdout = child.stdout.take().expect("stdout is piped");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut conn = Connection {
            child,
            stdin,
            lines: rx,
            next_id: 0,
            broken: None,
        };
        let first = conn.recv_line(timeout, "handshake")?;
        let handshake: Handshake = serde_json::from_str(&first)
            .map_err(|e| Error::BackendIo(format!("bad handshake {first:?}: {e}")))?;
        if handshake.protocol != PROTOCOL_VERSION {
            return Err(Error::BackendIo(format!(
                "unsupported protocol version {}",
                handshake.protocol
            )));
        }
        Ok(SubprocessEmbedder {
            conn: Mutex::new(conn),
            dim: handshake.dim,
            timeout,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }
}

impl Connection {
    fn recv_line(&mut self, timeout: Duration, waiting_for: &str) -> Result<String> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(self.fail(format!("reading {waiting_for}: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(self.fail(format!(
                "timed out after {:.1} s waiting for {waiting_for}",
                timeout.as_secs_f64()
            ))),
            Err(RecvTimeoutError::Disconnected) => {
                Err(self.fail(format!("process exited while waiting for {waiting_for}")))
            }
        }
    }

    fn fail(&mut self, message: String) -> Error {
        self.broken = Some(message.clone());
        Error::BackendIo(message)
    }

    fn round_trip(&mut self, images: &[SpatialImage], dim: usize, timeout: Duration) -> Result<Vec<Embedding>> {
        if let Some(reason) = &self.broken {
            return Err(Error::BackendIo(format!("connection unusable: {reason}")));
        }
        let first_id = self.next_id;
        self.next_id += images.len() as u64;
        {
            let stdin = self
                .stdin
                .as_mut()
                .ok_or_else(|| Error::BackendIo("stdin closed".into()))?;
            let mut buf = Vec::new();
            for (i, image) in images.iter().enumerate() {
                serde_json::to_writer(&mut buf, &Request::for_image(first_id + i as u64, image))?;
                buf.push(b'\n');
            }
            if let Err(e) = stdin.write_all(&buf).and_then(|_| stdin.flush()) {
                return Err(self.fail(format!("writing requests: {e}")));
            }
        }

        let mut results: Vec<Option<Embedding>> = vec![None; images.len()];
        let mut outstanding = images.len();
        while outstanding > 0 {
            let line = self.recv_line(timeout, "embedding response")?;
            let response: Response = serde_json::from_str(&line)
                .map_err(|e| self.fail(format!("bad response {line:?}: {e}")))?;
            let id = response.id();
            let index = id
                .checked_sub(first_id)
                .map(|i| i as usize)
                .filter(|&i| i < images.len() && results[i].is_none())
                .ok_or_else(|| self.fail(format!("unexpected response id {id}")))?;
            let embedding = match response {
                Response::Error { error, .. } => Err(Error::BackendIo(format!("request {id}: {error}"))),
                Response::Embedding { embedding, .. } => wire::decode_f32s(&embedding).and_then(|v| {
                    if v.len() != dim {
                        return Err(Error::BackendIo(format!(
                            "request {id}: embedding has {} values, handshake announced {dim}",
                            v.len()
                        )));
                    }
                    Embedding::new(v.into_iter().map(f64::from).collect())
                }),
            };
            match embedding {
                Ok(e) => results[index] = Some(e),
                Err(e) => {
                    // Drain the rest of the batch so the next call starts clean.
                    for _ in 1..outstanding {
                        if self.recv_line(timeout, "embedding response").is_err() {
                            break;
                        }
                    }
                    return Err(Error::Batch {
                        index,
                        source: Box::new(e),
                    });
                }
            }
            outstanding -= 1;
        }
        Ok(results.into_iter().map(|e| e.expect("all filled")).collect())
    }
}

impl Embedder for SubprocessEmbedder {
    fn embed(&self, image: &SpatialImage) -> Result<Embedding> {
        let mut out = self.embed_batch(std::slice::from_ref(image)).map_err(|e| match e {
            Error::Batch { source, .. } => *source,
            other => other,
        })?;
        Ok(out.pop().expect("one result"))
    }

    fn embed_batch(&self, images: &[SpatialImage]) -> Result<Vec<Embedding>> {
        if images.is_empty() {
            return Ok(Vec::new());
        }
        let mut conn = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        conn.round_trip(images, self.dim, self.timeout)
    }
}

impl Drop for SubprocessEmbedder {
    fn drop(&mut self) {
        let conn = self.conn.get_mut().unwrap_or_else(|p| p.into_inner());
        conn.stdin.take();
        let deadline = Instant::now() + Duration::from_secs(2);
        loop {
            match conn.child.try_wait() {
                Ok(Some(_)) => return,
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                _ => break,
            }
        }
        let _ = conn.child.kill();
        let _ = conn.child.wait();
    }
}

/// Settings for [`serve_echo`].
#[derive(Debug, Clone, Copy)]
pub struct EchoOptions {
    /// Embedding dimension; the embedding is the first `dim` pixel values.
    pub dim: usize,
    /// When set, buffered responses are written in a seeded random order.
    pub shuffle_seed: Option<u64>,
    /// Responses are held back until this many are pending or the input
    /// goes quiet.
    pub window: usize,
}

impl Default for EchoOptions {
    fn default() -> Self {
        EchoOptions {
            dim: 4,
            shuffle_seed: None,
            window: 1,
        }
    }
}

/// Child side of the protocol with a trivially predictable model: each
/// embedding is the request's leading pixel values. Used to check hosts for
/// protocol conformance, including out-of-order responses.
pub fn serve_echo<R, W>(input: R, mut output: W, options: EchoOptions) -> std::io::Result<()>
where
    R: BufRead + Send + 'static,
    W: Write,
{
    serde_json::to_writer(&mut output, &Handshake { protocol: PROTOCOL_VERSION, dim: options.dim })?;
    output.write_all(b"\n")?;
    output.flush()?;

    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in input.lines() {
            if tx.send(line).is_err() {
                break;
            }
        }
    });

    let mut rng = options.shuffle_seed.map(SplitMix64::seed_from_u64);
    let mut pending: Vec<Response> = Vec::new();
    let quiet = Duration::from_millis(20);
    loop {
        let next = if pending.is_empty() {
            rx.recv().map_err(|_| RecvTimeoutError::Disconnected)
        } else {
            rx.recv_timeout(quiet)
        };
        match next {
            Ok(line) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                pending.push(echo_response(&line, options.dim));
                if pending.len() < options.window.max(1) {
                    continue;
                }
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => {
                flush_responses(&mut output, &mut pending, rng.as_mut())?;
                return Ok(());
            }
        }
        flush_responses(&mut output, &mut pending, rng.as_mut())?;
    }
}

fn echo_response(line: &str, dim: usize) -> Response {
    let request: Request = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => {
            let id = serde_json::from_str::<serde_json::Value>(line)
                .ok()
                .and_then(|v| v.get("id").and_then(|id| id.as_u64()))
                .unwrap_or(0);
            return Response::Error { id, error: format!("malformed request: {e}") };
        }
    };
    match request.decode_pixels() {
        Ok(px) if px.len() >= dim => Response::embedding(request.id, &px[..dim]),
        Ok(px) => Response::Error {
            id: request.id,
            error: format!("image has {} values, need at least {dim}", px.len()),
        },
        Err(e) => Response::Error { id: request.id, error: e.to_string() },
    }
}

fn flush_responses<W: Write>(
    output: &mut W,
    pending: &mut Vec<Response>,
    rng: Option<&mut SplitMix64>,
) -> std::io::Result<()> {
    if let Some(rng) = rng {
        for i in (1..pending.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            pending.swap(i, j);
        }
    }
    for response in pending.drain(..) {
        serde_json::to_writer(&mut *output, &response)?;
        output.write_all(b"\n")?;
    }
    output.flush()
}
