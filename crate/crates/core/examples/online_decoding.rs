//! Stream worker results into the online decoder in a scrambled order and
//! watch the running operation count: whatever the order, the parity path
//! costs one scalar-vector multiply plus k−1 subtractions.

use coded_inference::code_matrix::{GeneratorMatrix, Scheme};
use coded_inference::codec::{OnlineDecoder, decode_batch, ideal_encode};
use coded_inference::invertible::InvertibleFunction;
use coded_inference::linalg::linf_dist;

fn main() {
    let k = 5;
    let f = InvertibleFunction::rotation(2, 0.9).unwrap();
    let generator = GeneratorMatrix::build(k + 1, k, Scheme::Uniform).unwrap();

    let inputs: Vec<Vec<f64>> = (0..k).map(|i| vec![i as f64 - 1.5, 0.5 * i as f64]).collect();
    let batch = ideal_encode(&f, &inputs, &generator).unwrap();

    // Task 3 is the straggler; the parity task (6) stands in for it.
    let arrival_order = [6, 1, 5, 2, 4];
    let mut decoder = OnlineDecoder::new(&generator, 2).unwrap();
    for task in arrival_order {
        let value = f.forward(batch.task_input(task)).unwrap();
        decoder.update(task, &value).unwrap();
        let ops = decoder.ops();
        println!(
            "after task {task}: complete={} ops = {} mults + {} subtractions",
            decoder.is_complete(),
            ops.scalar_vector_mults,
            ops.vector_subtractions,
        );
    }

    // Same subset decoded in one shot for comparison.
    let results = arrival_order
        .iter()
        .map(|&t| (t, f.forward(batch.task_input(t)).unwrap()))
        .collect();
    let batch_estimates = decode_batch(&results, &generator, &arrival_order).unwrap();
    let online_estimates = decoder.estimates().unwrap();
    let gap = online_estimates
        .iter()
        .zip(&batch_estimates)
        .map(|(a, b)| linf_dist(a, b))
        .fold(0.0f64, f64::max)
        .max(
            online_estimates
                .iter()
                .enumerate()
                .map(|(i, e)| linf_dist(e, &f.forward(&inputs[i]).unwrap()))
                .fold(0.0f64, f64::max),
        );
    println!("worst deviation across online, batch, and truth: {gap:.3e}");
}
