//! Designs Lloyd-Max quantizers for bit depths 1..=4 and prints their
//! parameters, distortion and clean-channel constants.
//!
//! Run with `cargo run --example lloyd_max`.

use bbitcs::channels::NoiseModel;
use bbitcs::quantizer::{
    channel_constants, distortion, lloyd_max_design, DEFAULT_MAX_ITER, DEFAULT_TOL,
};

fn main() {
    println!(
        "{:>2} {:>10} {:>10} {:>10} {:>10}  thresholds / levels",
        "b", "distortion", "lambda", "Psi", "Omega"
    );
    for b in 1..=4u32 {
        let q = lloyd_max_design(b, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER).expect("design converges");
        let constants = channel_constants(&q, &NoiseModel::AdditiveGaussian { sigma: 0.0 });
        println!(
            "{:>2} {:>10.6} {:>10.6} {:>10.6} {:>10.6}  t = {:?}",
            b,
            distortion(&q, 1.0),
            constants.lambda,
            constants.psi,
            constants.omega,
            q.thresholds()
                .iter()
                .map(|t| (t * 1e5).round() / 1e5)
                .collect::<Vec<_>>(),
        );
        println!(
            "{:>48}mu = {:?}",
            "",
            q.levels()
                .iter()
                .map(|m| (m * 1e5).round() / 1e5)
                .collect::<Vec<_>>()
        );
    }

    // The serialized record round-trips exactly.
    let q = lloyd_max_design(2, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    println!("\nserialized b=2 design: {}", q.serialize());
}
