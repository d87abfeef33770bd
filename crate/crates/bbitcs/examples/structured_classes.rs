//! Exact constraint-set optimizers for the structured classes beyond
//! plain sparsity: fused (piecewise-constant), group-sparse, low-rank
//! and the l1-ball, plus their Gaussian-width bounds and the cone
//! equivalence with the projected-marginal estimator.
//!
//! Run with `cargo run --example structured_classes`.

use bbitcs::channels::NoiseModel;
use bbitcs::quantizer::{channel_constants, lloyd_max_design, DEFAULT_MAX_ITER, DEFAULT_TOL};
use bbitcs::recovery::{
    l2_error, marginal_statistic, projected_marginal, recover_direction, simulate_measurements,
    Ensemble,
};
use bbitcs::signals::{design_dimensions, sample_signal, width_bound, SignalClass};
use bbitcs::stat::{norm2, RandomStream};

fn main() {
    let sigma = 1.0;
    let f = 3.0;
    let q2 = lloyd_max_design(2, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let q1 = lloyd_max_design(1, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let lambda_ref = channel_constants(&q1, &NoiseModel::AdditiveGaussian { sigma }).lambda;

    let classes = [
        SignalClass::fused_sparse(10, 500).unwrap(),
        SignalClass::contiguous_groups(500, 100, 4).unwrap(),
        SignalClass::low_rank(50, 30, 4).unwrap(),
    ];
    let mut stream = RandomStream::new(11);
    for class in &classes {
        let (m, _) = design_dimensions(class, f, lambda_ref).unwrap();
        let signal = sample_signal(class, f, m, lambda_ref, &mut stream).unwrap();
        let set =
            simulate_measurements(&signal, m, sigma, &q2, Ensemble::Isotropic, &mut stream)
                .unwrap();
        let eta = marginal_statistic(&set);
        let estimate = recover_direction(&eta, class).unwrap();
        let err = l2_error(estimate.values(), &signal.direction()).unwrap();

        // Cone classes: the projected marginal agrees after normalization.
        let projected = projected_marginal(&eta, class, lambda_ref).unwrap();
        let norm = norm2(&projected);
        let gap: f64 = estimate
            .values()
            .iter()
            .zip(projected.iter().map(|v| v / norm))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "{:<8} m = {:>6}, width bound = {:>7.2}, error = {:.4}, estimator gap = {:.1e}",
            class.label(),
            m,
            width_bound(class),
            err,
            gap
        );
    }

    // The l1-ball is not a cone; its optimizer soft-thresholds instead.
    let ball = SignalClass::l1_ball(2.5, 20).unwrap();
    let eta = stream.sample_gaussians(20);
    let estimate = recover_direction(&eta, &ball).unwrap();
    let l1: f64 = estimate.values().iter().map(|v| v.abs()).sum();
    println!(
        "l1ball   ||x||_1 = {l1:.4} (radius 2.5 active), ||x||_2 = {:.4}",
        norm2(estimate.values())
    );
}
