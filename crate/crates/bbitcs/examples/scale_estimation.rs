//! Estimating the signal norm `psi* = ||x*||_2` from quantized
//! observations: the closed-form two-bit MLE in the noiseless model and
//! the joint (psi, sigma) MLE by coordinate descent under additive
//! noise. One-bit observations carry no scale information.
//!
//! Run with `cargo run --example scale_estimation`.

use bbitcs::quantizer::{lloyd_max_design, DEFAULT_MAX_ITER, DEFAULT_TOL};
use bbitcs::scale::{
    bin_counts, bin_intervals, prop1_tail_bound, scale_mle_noiseless, scale_mle_noisy,
};
use bbitcs::stat::RandomStream;

fn main() {
    let q = lloyd_max_design(2, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let m = 10_000;
    let psi_star = 1.6;
    let sigma_star = 0.8;
    let mut stream = RandomStream::new(99);

    // Noiseless model: y_i = Q(psi* g_i).
    let clean: Vec<f64> = (0..m)
        .map(|_| q.quantize(psi_star * stream.next_gaussian()))
        .collect();
    let counts = bin_counts(&clean, &q).unwrap();
    let noiseless = scale_mle_noiseless(&counts, &q).unwrap();
    println!(
        "noiseless-model MLE: psi_hat = {:.4} (true {psi_star}), log-lik {:.1}",
        noiseless.psi_hat, noiseless.log_likelihood
    );
    println!(
        "tail bound at eps = 5%: P(|psi_hat/psi* - 1| > eps) <= {:.3}",
        prop1_tail_bound(q.thresholds()[0], psi_star, m as u64, 0.05)
    );

    // Joint model: y_i = Q(psi* z_i + sigma eps_i) with known direction,
    // so z_i are the linear predictions.
    let z: Vec<f64> = stream.sample_gaussians(m);
    let noisy: Vec<f64> = z
        .iter()
        .map(|&zi| q.quantize(psi_star * zi + sigma_star * stream.next_gaussian()))
        .collect();
    let intervals = bin_intervals(&noisy, &q).unwrap();
    let init = scale_mle_noiseless(&bin_counts(&noisy, &q).unwrap(), &q)
        .unwrap()
        .psi_hat;
    let joint = scale_mle_noisy(&z, &intervals, init).unwrap();
    println!(
        "joint MLE: psi_hat = {:.4} (true {psi_star}), sigma_hat = {:.4} (true {sigma_star}), converged = {}",
        joint.psi_hat,
        joint.sigma_hat.unwrap(),
        joint.converged
    );

    // One-bit observations leave the scale unidentifiable.
    let q1 = lloyd_max_design(1, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let one_bit: Vec<f64> = (0..100).map(|_| q1.quantize(stream.next_gaussian())).collect();
    let err = scale_mle_noiseless(&bin_counts(&one_bit, &q1).unwrap(), &q1).unwrap_err();
    println!("one-bit scale estimation: {err}");
}
