//! Loopback-friendly TCP serving: one worker process per coded task and a
//! front end that scatters TASK frames, gathers RESULTs, and decodes as
//! soon as any usable k have arrived.
//!
//! Wall-clock time enters here and nowhere else in the crate. Latency in
//! the returned records is measured, not simulated.

use std::io::{self, Write};
use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::ServingError;
use super::gate::DecodeGate;
use super::head::DownstreamHead;
use super::sim::{PhaseBreakdown, QueryRecord};
use super::wire::{ERR_DIM_MISMATCH, ERR_MALFORMED, Frame, FrameReader, ReadOutcome};
use crate::codec::EncodedBatch;
use crate::invertible::InvertibleFunction;

const ACCEPT_POLL: Duration = Duration::from_millis(5);

/// Handles one worker connection until the peer closes or the socket dies.
///
/// TASK frames with the right payload length are answered with RESULT
/// frames after `delay`. Wrong lengths get ERROR `2`, anything unparsable
/// or unexpected gets ERROR `1`, and the connection stays open throughout.
fn handle_connection(stream: TcpStream, f: &InvertibleFunction, delay: Duration) {
    let Ok(read_half) = stream.try_clone() else { return };
    let mut reader = FrameReader::new(io::BufReader::new(read_half));
    let mut write_half = stream;
    loop {
        let reply = match reader.read_frame() {
            Ok(ReadOutcome::Frame(Frame::Task { query_id, task_index, payload })) => {
                if payload.len() != f.dim() {
                    Frame::Error {
                        query_id,
                        task_index,
                        code: ERR_DIM_MISMATCH,
                        message: format!("expected dim {}, got {}", f.dim(), payload.len()),
                    }
                } else {
                    if !delay.is_zero() {
                        thread::sleep(delay);
                    }
                    match f.forward(&payload) {
                        Ok(out) => Frame::Result { query_id, task_index, payload: out },
                        Err(e) => Frame::Error {
                            query_id,
                            task_index,
                            code: ERR_DIM_MISMATCH,
                            message: e.to_string(),
                        },
                    }
                }
            }
            Ok(ReadOutcome::Frame(other)) => Frame::Error {
                query_id: other.query_id(),
                task_index: other.task_index(),
                code: ERR_MALFORMED,
                message: "worker accepts TASK frames only".to_string(),
            },
            Ok(ReadOutcome::Malformed { reason, .. }) => Frame::Error {
                query_id: 0,
                task_index: 0,
                code: ERR_MALFORMED,
                message: reason,
            },
            Err(_) => break,
        };
        if write_half.write_all(&reply.encode()).is_err() {
            break;
        }
    }
}

/// Accepts connections until `stop` flips, tracking live sockets in
/// `conns` so a shutdown can unblock their readers.
fn accept_loop(
    listener: TcpListener,
    f: Arc<InvertibleFunction>,
    delay: Duration,
    stop: Arc<AtomicBool>,
    conns: Arc<Mutex<Vec<TcpStream>>>,
    handlers: Arc<Mutex<Vec<JoinHandle<()>>>>,
) {
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                let _ = stream.set_nonblocking(false);
                let _ = stream.set_nodelay(true);
                if let Ok(clone) = stream.try_clone() {
                    conns.lock().unwrap().push(clone);
                }
                let f = Arc::clone(&f);
                let handle = thread::spawn(move || handle_connection(stream, &f, delay));
                handlers.lock().unwrap().push(handle);
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(ACCEPT_POLL),
            Err(_) => break,
        }
    }
}

/// A background worker bound to a local port. Dropping it stops the
/// accept loop and joins every connection handler.
pub struct WorkerServer {
    addr: std::net::SocketAddr,
    stop: Arc<AtomicBool>,
    conns: Arc<Mutex<Vec<TcpStream>>>,
    handlers: Arc<Mutex<Vec<JoinHandle<()>>>>,
    accept_thread: Option<JoinHandle<()>>,
}

impl WorkerServer {
    /// Binds `listen` (use port 0 for an ephemeral port) and starts
    /// serving `f` with an artificial `delay` per task.
    pub fn spawn(listen: &str, f: InvertibleFunction, delay: Duration) -> io::Result<Self> {
        let listener = TcpListener::bind(listen)?;
        let addr = listener.local_addr()?;
        listener.set_nonblocking(true)?;
        let stop = Arc::new(AtomicBool::new(false));
        let conns = Arc::new(Mutex::new(Vec::new()));
        let handlers = Arc::new(Mutex::new(Vec::new()));
        let accept_thread = {
            let (f, stop, conns, handlers) =
                (Arc::new(f), Arc::clone(&stop), Arc::clone(&conns), Arc::clone(&handlers));
            thread::spawn(move || accept_loop(listener, f, delay, stop, conns, handlers))
        };
        Ok(WorkerServer { addr, stop, conns, handlers, accept_thread: Some(accept_thread) })
    }

    pub fn addr(&self) -> std::net::SocketAddr {
        self.addr
    }

    /// Stops accepting, wakes blocked readers, and joins all threads.
    /// In-flight tasks still produce replies: only the read side of each
    /// socket is shut down.
    pub fn shutdown(&mut self) {
        if self.stop.swap(true, Ordering::SeqCst) {
            return;
        }
        for conn in self.conns.lock().unwrap().drain(..) {
            let _ = conn.shutdown(Shutdown::Read);
        }
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
        let handlers: Vec<_> = self.handlers.lock().unwrap().drain(..).collect();
        for h in handlers {
            let _ = h.join();
        }
    }
}

impl Drop for WorkerServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Serves `f` on an already-bound listener until the process exits.
pub fn serve_on(listener: TcpListener, f: InvertibleFunction, delay: Duration) -> io::Result<()> {
    let f = Arc::new(f);
    loop {
        let (stream, _) = listener.accept()?;
        let _ = stream.set_nodelay(true);
        let f = Arc::clone(&f);
        thread::spawn(move || handle_connection(stream, &f, delay));
    }
}

enum NetEvent {
    Result { frame: Frame, at: Instant },
    Disconnect { worker: usize },
}

/// A decoded query as observed over real sockets.
pub struct TcpQueryOutcome {
    pub record: QueryRecord,
    /// Recovered per-slot function outputs, `k` vectors.
    pub estimates: Vec<Vec<f64>>,
}

/// Client side: persistent connections to `n` workers, one reader thread
/// each, decoding as results arrive.
pub struct TcpFrontEnd {
    links: Vec<TcpStream>,
    events: Receiver<NetEvent>,
    readers: Vec<JoinHandle<()>>,
}

impl TcpFrontEnd {
    /// Connects to every endpoint; endpoint order defines task order
    /// (endpoint `i` receives task `i + 1`).
    pub fn connect<A: ToSocketAddrs>(endpoints: &[A]) -> Result<Self, ServingError> {
        if endpoints.is_empty() {
            return Err(ServingError::EmptyInput("no worker endpoints"));
        }
        if endpoints.len() > u8::MAX as usize {
            return Err(ServingError::Protocol(format!(
                "{} workers exceed the 255 task indices on the wire",
                endpoints.len()
            )));
        }
        let (tx, events) = mpsc::channel();
        let mut links = Vec::with_capacity(endpoints.len());
        let mut readers = Vec::with_capacity(endpoints.len());
        for (i, endpoint) in endpoints.iter().enumerate() {
            let stream = TcpStream::connect(endpoint)?;
            stream.set_nodelay(true)?;
            let read_half = stream.try_clone()?;
            links.push(stream);
            let tx: Sender<NetEvent> = tx.clone();
            readers.push(thread::spawn(move || {
                let mut reader = FrameReader::new(io::BufReader::new(read_half));
                loop {
                    match reader.read_frame() {
                        Ok(ReadOutcome::Frame(frame)) => {
                            let event = NetEvent::Result { frame, at: Instant::now() };
                            if tx.send(event).is_err() {
                                break;
                            }
                        }
                        Ok(ReadOutcome::Malformed { .. }) => continue,
                        Err(_) => {
                            let _ = tx.send(NetEvent::Disconnect { worker: i });
                            break;
                        }
                    }
                }
            }));
        }
        Ok(TcpFrontEnd { links, events, readers })
    }

    /// Scatters the batch, waits for the first decodable subset, and
    /// classifies. Results still in flight from earlier timed-out queries
    /// are discarded by `query_id`.
    pub fn run_query(
        &mut self,
        batch: &EncodedBatch,
        heads: &[DownstreamHead],
        timeout: Duration,
        query_id: u64,
    ) -> Result<TcpQueryOutcome, ServingError> {
        let (n, k) = (batch.n(), batch.k());
        let dim = batch.dim();
        if self.links.len() != n {
            return Err(ServingError::Protocol(format!(
                "batch spans {n} tasks but {} workers are connected",
                self.links.len()
            )));
        }
        for head in heads {
            if head.dim() != dim {
                return Err(ServingError::InvalidHead(format!(
                    "head expects dim {}, batch carries {dim}",
                    head.dim()
                )));
            }
        }

        let start = Instant::now();
        let deadline = start + timeout;
        thread::scope(|s| {
            for (i, link) in self.links.iter().enumerate() {
                let frame = Frame::Task {
                    query_id,
                    task_index: (i + 1) as u8,
                    payload: batch.task_input(i + 1).to_vec(),
                };
                s.spawn(move || {
                    let _ = (&mut &*link).write_all(&frame.encode());
                });
            }
        });

        let mut completion_times: Vec<Option<f64>> = vec![None; n];
        let mut dead = vec![false; n];
        let mut gate = DecodeGate::new(&batch.generator, dim);
        let outcome = loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            let event = match self.events.recv_timeout(remaining) {
                Ok(event) => event,
                Err(RecvTimeoutError::Timeout) => {
                    return Err(ServingError::Undecodable(format!(
                        "query {query_id}: timed out after {timeout:?} with {} of {k} needed results",
                        completion_times.iter().flatten().count()
                    )));
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(ServingError::Protocol("all reader threads exited".to_string()));
                }
            };
            match event {
                NetEvent::Result { frame, at } => {
                    if frame.query_id() != query_id {
                        continue;
                    }
                    match frame {
                        Frame::Result { task_index, payload, .. } => {
                            let task = task_index as usize;
                            if task == 0 || task > n {
                                return Err(ServingError::Protocol(format!(
                                    "result for task {task} outside 1..={n}"
                                )));
                            }
                            if payload.len() != dim {
                                return Err(ServingError::Protocol(format!(
                                    "task {task} returned dim {}, expected {dim}",
                                    payload.len()
                                )));
                            }
                            if completion_times[task - 1].is_some() {
                                continue;
                            }
                            completion_times[task - 1] = Some((at - start).as_secs_f64());
                            if let Some(done) = gate.offer(task, payload)? {
                                break done;
                            }
                        }
                        Frame::Error { task_index, code, message, .. } => {
                            return Err(ServingError::Protocol(format!(
                                "worker rejected task {task_index} with code {code}: {message}"
                            )));
                        }
                        Frame::Task { .. } => {
                            return Err(ServingError::Protocol(
                                "front end received a TASK frame".to_string(),
                            ));
                        }
                    }
                }
                NetEvent::Disconnect { worker } => {
                    dead[worker] = true;
                    let reachable = (0..n)
                        .filter(|&i| completion_times[i].is_some() || !dead[i])
                        .count();
                    if reachable < k {
                        return Err(ServingError::Undecodable(format!(
                            "query {query_id}: only {reachable} workers reachable, need {k}"
                        )));
                    }
                }
            }
        };

        let wait = start.elapsed().as_secs_f64();
        let decoded_at = Instant::now();
        let estimates = outcome.estimates;
        let labels: Vec<Vec<usize>> = heads
            .iter()
            .map(|head| estimates.iter().map(|e| head.predict(e)).collect())
            .collect();
        let head_time = decoded_at.elapsed().as_secs_f64();
        let degraded = outcome.subset.iter().any(|&t| t > k);
        let record = QueryRecord {
            query_id,
            completion_times,
            decode_subset: outcome.subset,
            degraded,
            end_to_end_latency: start.elapsed().as_secs_f64(),
            labels,
            phases: PhaseBreakdown {
                wait,
                // Decoding happens incrementally as frames land; by the
                // gating arrival it is already folded into `wait`.
                decode: 0.0,
                head: head_time,
            },
        };
        Ok(TcpQueryOutcome { record, estimates })
    }
}

impl Drop for TcpFrontEnd {
    fn drop(&mut self) {
        for link in &self.links {
            let _ = link.shutdown(Shutdown::Both);
        }
        for reader in self.readers.drain(..) {
            let _ = reader.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_shutdown_is_idempotent_and_frees_the_port() {
        let f = InvertibleFunction::rotation(2, 0.5).unwrap();
        let mut server = WorkerServer::spawn("127.0.0.1:0", f.clone(), Duration::ZERO).unwrap();
        let addr = server.addr();
        server.shutdown();
        server.shutdown();
        drop(server);
        // Port is released once the accept loop exits.
        let rebound = TcpListener::bind(addr);
        assert!(rebound.is_ok(), "port still held after shutdown");
    }

    #[test]
    fn connect_rejects_empty_endpoint_list() {
        let endpoints: Vec<&str> = Vec::new();
        assert!(matches!(
            TcpFrontEnd::connect(&endpoints),
            Err(ServingError::EmptyInput(_))
        ));
    }
}
