//! Socket-level behavior of the worker and front end: bit-exact replies,
//! error codes that keep connections alive, stale-result hygiene, and
//! shutdown draining in-flight work.

use std::io::Write;
use std::net::TcpStream;
use std::time::{Duration, Instant};

use coded_inference::code_matrix::{GeneratorMatrix, Scheme};
use coded_inference::codec::ideal_encode;
use coded_inference::invertible::InvertibleFunction;
use coded_inference::linalg::l2_dist;
use coded_inference::serving::wire::{ERR_DIM_MISMATCH, Frame, FrameReader, ReadOutcome};
use coded_inference::serving::{ServingError, TcpFrontEnd, WorkerServer};

fn expect_frame(reader: &mut FrameReader<TcpStream>) -> Frame {
    match reader.read_frame().unwrap() {
        ReadOutcome::Frame(frame) => frame,
        ReadOutcome::Malformed { reason, .. } => panic!("malformed reply: {reason}"),
    }
}

#[test]
fn worker_replies_bit_exactly_over_a_live_socket() {
    let f = InvertibleFunction::rotation(3, 0.7).unwrap();
    let mut worker = WorkerServer::spawn("127.0.0.1:0", f.clone(), Duration::ZERO).unwrap();

    let mut stream = TcpStream::connect(worker.addr()).unwrap();
    let mut reader = FrameReader::new(stream.try_clone().unwrap());
    for (query, input) in [vec![0.25, -0.75, 1.5], vec![-0.0, f64::MIN_POSITIVE, 3.0]]
        .into_iter()
        .enumerate()
    {
        let task = Frame::Task { query_id: query as u64, task_index: 1, payload: input.clone() };
        stream.write_all(&task.encode()).unwrap();
        let reply = expect_frame(&mut reader);
        let Frame::Result { query_id, task_index, payload } = reply else {
            panic!("expected RESULT, got {reply:?}");
        };
        assert_eq!((query_id, task_index), (query as u64, 1));
        let want = f.forward(&input).unwrap();
        let got: Vec<u64> = payload.iter().map(|v| v.to_bits()).collect();
        let exact: Vec<u64> = want.iter().map(|v| v.to_bits()).collect();
        assert_eq!(got, exact, "reply differs from a local forward pass");
    }
    worker.shutdown();
}

#[test]
fn dim_mismatch_yields_error_2_and_keeps_the_connection() {
    let f = InvertibleFunction::rotation(2, 0.3).unwrap();
    let mut worker = WorkerServer::spawn("127.0.0.1:0", f.clone(), Duration::ZERO).unwrap();

    let mut stream = TcpStream::connect(worker.addr()).unwrap();
    let mut reader = FrameReader::new(stream.try_clone().unwrap());

    let bad = Frame::Task { query_id: 5, task_index: 2, payload: vec![1.0; 5] };
    stream.write_all(&bad.encode()).unwrap();
    match expect_frame(&mut reader) {
        Frame::Error { query_id, task_index, code, .. } => {
            assert_eq!((query_id, task_index, code), (5, 2, ERR_DIM_MISMATCH));
        }
        other => panic!("expected ERROR, got {other:?}"),
    }

    // The rejection must not poison the stream for well-formed tasks.
    let good = Frame::Task { query_id: 6, task_index: 2, payload: vec![0.5, -0.5] };
    stream.write_all(&good.encode()).unwrap();
    match expect_frame(&mut reader) {
        Frame::Result { query_id, payload, .. } => {
            assert_eq!(query_id, 6);
            assert_eq!(payload, f.forward(&[0.5, -0.5]).unwrap());
        }
        other => panic!("expected RESULT, got {other:?}"),
    }
    worker.shutdown();
}

#[test]
fn front_end_discards_stale_results_after_a_timeout() {
    let f = InvertibleFunction::rotation(2, 0.4).unwrap();
    let generator = GeneratorMatrix::build(1, 1, Scheme::Vandermonde).unwrap();
    let delay = Duration::from_millis(120);
    let mut worker = WorkerServer::spawn("127.0.0.1:0", f.clone(), delay).unwrap();
    let endpoints = [worker.addr().to_string()];
    let mut front = TcpFrontEnd::connect(&endpoints).unwrap();

    let input = vec![0.8, -0.1];
    let batch = ideal_encode(&f, std::slice::from_ref(&input), &generator).unwrap();

    let early = front.run_query(&batch, &[], Duration::from_millis(20), 0);
    assert!(matches!(early, Err(ServingError::Undecodable(_))), "20ms cannot cover a 120ms worker");

    // The abandoned reply for query 0 is still in flight; query 1 must
    // skip it and finish on its own result.
    let outcome = front.run_query(&batch, &[], Duration::from_secs(5), 1).unwrap();
    assert_eq!(outcome.record.query_id, 1);
    assert_eq!(outcome.estimates[0], f.forward(&input).unwrap());
    drop(front);
    worker.shutdown();
}

#[test]
fn front_end_decodes_around_a_slow_worker() {
    let f = InvertibleFunction::rotation(2, 0.9).unwrap();
    let generator = GeneratorMatrix::build(3, 2, Scheme::Uniform).unwrap();
    let sleeper = Duration::from_millis(250);
    let mut workers = vec![
        WorkerServer::spawn("127.0.0.1:0", f.clone(), Duration::ZERO).unwrap(),
        WorkerServer::spawn("127.0.0.1:0", f.clone(), sleeper).unwrap(),
        WorkerServer::spawn("127.0.0.1:0", f.clone(), Duration::ZERO).unwrap(),
    ];
    let endpoints: Vec<String> = workers.iter().map(|w| w.addr().to_string()).collect();
    let mut front = TcpFrontEnd::connect(&endpoints).unwrap();

    let inputs = vec![vec![0.2, 0.7], vec![-0.6, 0.1]];
    let batch = ideal_encode(&f, &inputs, &generator).unwrap();
    let start = Instant::now();
    let outcome = front.run_query(&batch, &[], Duration::from_secs(5), 0).unwrap();
    let elapsed = start.elapsed();

    assert_eq!(outcome.record.decode_subset, vec![1, 3]);
    assert!(outcome.record.degraded);
    assert!(elapsed < sleeper, "query waited {elapsed:?} for the sleeping worker");
    for (estimate, input) in outcome.estimates.iter().zip(&inputs) {
        assert!(l2_dist(estimate, &f.forward(input).unwrap()) < 1e-9);
    }
    drop(front);
    for worker in &mut workers {
        worker.shutdown();
    }
}

#[test]
fn front_end_rejects_a_batch_sized_for_other_workers() {
    let f = InvertibleFunction::rotation(2, 0.2).unwrap();
    let mut worker = WorkerServer::spawn("127.0.0.1:0", f.clone(), Duration::ZERO).unwrap();
    let endpoints = [worker.addr().to_string()];
    let mut front = TcpFrontEnd::connect(&endpoints).unwrap();

    let generator = GeneratorMatrix::build(3, 2, Scheme::Uniform).unwrap();
    let batch = ideal_encode(&f, &[vec![0.1, 0.2], vec![0.3, 0.4]], &generator).unwrap();
    let outcome = front.run_query(&batch, &[], Duration::from_secs(1), 0);
    assert!(matches!(outcome, Err(ServingError::Protocol(_))));
    drop(front);
    worker.shutdown();
}

#[test]
fn shutdown_drains_an_in_flight_task() {
    let f = InvertibleFunction::rotation(2, 0.5).unwrap();
    let delay = Duration::from_millis(150);
    let mut worker = WorkerServer::spawn("127.0.0.1:0", f.clone(), delay).unwrap();

    let mut stream = TcpStream::connect(worker.addr()).unwrap();
    let task = Frame::Task { query_id: 1, task_index: 1, payload: vec![1.25, -2.0] };
    stream.write_all(&task.encode()).unwrap();
    stream.flush().unwrap();

    // Give the handler time to pick up the task, then shut down while it
    // is still sleeping. The reply must arrive anyway.
    std::thread::sleep(Duration::from_millis(30));
    worker.shutdown();

    let mut reader = FrameReader::new(stream);
    match expect_frame(&mut reader) {
        Frame::Result { query_id, payload, .. } => {
            assert_eq!(query_id, 1);
            assert_eq!(payload, f.forward(&[1.25, -2.0]).unwrap());
        }
        other => panic!("expected the drained RESULT, got {other:?}"),
    }
}
