//! Spawn three loopback workers, one of them slow, and serve queries over
//! the wire: the front-end replies as soon as any two results arrive, so
//! the sleeper never shows up in the latency tail.

use std::time::Duration;

use coded_inference::code_matrix::{GeneratorMatrix, Scheme};
use coded_inference::codec::ideal_encode;
use coded_inference::invertible::InvertibleFunction;
use coded_inference::serving::{ClassMixture, TcpFrontEnd, WorkerServer, summarize_latencies};

fn main() {
    let f = InvertibleFunction::rotation(2, 0.5).unwrap();
    let generator = GeneratorMatrix::build(3, 2, Scheme::Uniform).unwrap();
    let mixture = ClassMixture::circle(4, 2).unwrap();
    let heads = [mixture.head_through(&f).unwrap()];

    // Worker 2 sleeps 80 ms per task; the others answer promptly.
    let delays = [Duration::ZERO, Duration::from_millis(80), Duration::ZERO];
    let mut workers: Vec<WorkerServer> = delays
        .iter()
        .map(|&d| WorkerServer::spawn("127.0.0.1:0", f.clone(), d).unwrap())
        .collect();
    let endpoints: Vec<String> = workers.iter().map(|w| w.addr().to_string()).collect();
    println!("workers listening on {endpoints:?}");

    let mut front = TcpFrontEnd::connect(&endpoints).unwrap();
    let mut rng = coded_inference::rng::from_seed(3);
    let mut latencies = Vec::new();
    for query in 0..40 {
        let inputs = vec![mixture.sample(&mut rng).1, mixture.sample(&mut rng).1];
        let batch = ideal_encode(&f, &inputs, &generator).unwrap();
        let outcome = front.run_query(&batch, &heads, Duration::from_secs(5), query).unwrap();
        latencies.push(outcome.record.end_to_end_latency);
    }
    let stats = summarize_latencies(&latencies).unwrap();
    println!(
        "40 queries: p50 {:.1} ms, p99 {:.1} ms (sleeper holds a result back for 80 ms each time)",
        stats.p50 * 1e3,
        stats.p99 * 1e3,
    );

    drop(front);
    for worker in &mut workers {
        worker.shutdown();
    }
}
