//! Encode a batch with one parity task, lose a systematic task, and
//! recover its function output from the survivors.

use coded_inference::code_matrix::{GeneratorMatrix, Scheme};
use coded_inference::codec::{TaskResults, decode_batch, ideal_encode};
use coded_inference::invertible::InvertibleFunction;
use coded_inference::linalg::l2_dist;

fn main() {
    let f = InvertibleFunction::coupling(4, 3, 16, 5).unwrap();
    let generator = GeneratorMatrix::build(4, 3, Scheme::Uniform).unwrap();

    let inputs = vec![
        vec![0.4, -1.2, 0.8, 0.1],
        vec![1.0, 0.3, -0.5, -0.9],
        vec![-0.7, 0.6, 0.2, 1.1],
    ];
    let batch = ideal_encode(&f, &inputs, &generator).unwrap();
    println!("encoded {} inputs into {} tasks (dim {})", batch.k(), batch.n(), batch.dim());
    println!("coding identity defect: {:.3e}", batch.embedding_defect(&f).unwrap());

    // Workers apply f to their task input; task 2 never reports.
    let mut results = TaskResults::new();
    for task in [1, 3, 4] {
        results.insert(task, f.forward(batch.task_input(task)).unwrap());
    }
    let estimates = decode_batch(&results, &generator, &[1, 3, 4]).unwrap();

    for (slot, estimate) in estimates.iter().enumerate() {
        let truth = f.forward(&inputs[slot]).unwrap();
        println!("slot {}: recovery error {:.3e}", slot + 1, l2_dist(estimate, &truth));
    }
}
