//! Invert a contractive residual chain by fixed-point iteration and compare
//! the observed iteration counts with the geometric-rate prediction.

use coded_inference::invertible::{InvertibleFunction, STEP_TOL};
use coded_inference::linalg::{linf_dist, linf_norm};
use coded_inference::rng::from_seed;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() {
    let scale = 0.9;
    let blocks = 3;
    let f = InvertibleFunction::contractive_residual(6, blocks, 24, scale, 2).unwrap();
    let mut rng = from_seed(10);

    let mut worst_residual = 0.0f64;
    let mut worst_iters = 0;
    for _ in 0..200 {
        let y: Vec<f64> = (0..6).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let inv = f.inverse(&y).unwrap();
        let residual = linf_dist(&f.forward(&inv.x).unwrap(), &y);
        worst_residual = worst_residual.max(residual);
        worst_iters = worst_iters.max(inv.iterations);
    }
    println!("200 inversions: worst residual {worst_residual:.3e}, worst total iterations {worst_iters}");

    // Steps shrink at least geometrically with ratio `scale`, so from a
    // first step of size d the count is bounded by log(d / STEP_TOL) at
    // rate log(1 / scale), per block.
    let y: Vec<f64> = (0..6).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let first_step = linf_norm(&f.residual_blocks().unwrap()[blocks - 1].residual(&y));
    let bound = ((first_step / STEP_TOL).ln() / (1.0 / scale).ln()).ceil() as usize + 1;
    let inv = f.inverse(&y).unwrap();
    println!(
        "per-block geometric bound {bound} iterations; this inversion used {} across {blocks} blocks",
        inv.iterations,
    );
}
