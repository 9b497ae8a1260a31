//! Build a generator for each scheme and verify that every k-row subset
//! stays invertible, then show what a broken code looks like.

use coded_inference::code_matrix::{GeneratorMatrix, Scheme};

fn show(label: &str, matrix: &GeneratorMatrix) {
    let report = matrix.verify_any_k_rows();
    println!(
        "{label}: ({}, {})  ok={}  worst subset {:?} margin {:.3e} over {} subsets",
        matrix.n(),
        matrix.k(),
        report.ok,
        report.worst_subset,
        report.worst_margin,
        report.subsets_checked,
    );
    for row in matrix.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>9.5}")).collect();
        println!("    [{}]", cells.join(", "));
    }
}

fn main() {
    show("uniform", &GeneratorMatrix::build(5, 4, Scheme::Uniform).unwrap());
    show("multi42", &GeneratorMatrix::build(4, 2, Scheme::Multi42).unwrap());
    show("vandermonde", &GeneratorMatrix::build(6, 4, Scheme::Vandermonde).unwrap());
    show("gaussian", &GeneratorMatrix::build(6, 4, Scheme::GaussianRandom(7)).unwrap());

    // A parity row equal to a unit vector duplicates a systematic row, so
    // the subset pairing them is singular. `from_rows` skips the build-time
    // margin check; verification still catches it.
    println!();
    let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]];
    let broken = GeneratorMatrix::from_rows(Scheme::Uniform, rows).unwrap();
    show("broken parity [0, 1]", &broken);
}
