//! End-to-end recovery of a sparse direction from quantized
//! measurements: sample a signal, simulate `y = Q(A x* + sigma eps)`,
//! form `eta = A^T y / m` and hard-threshold it. Also demonstrates the
//! CSV export/import of a measurement set.
//!
//! Run with `cargo run --example sparse_recovery`.

use bbitcs::channels::NoiseModel;
use bbitcs::quantizer::{channel_constants, lloyd_max_design, DEFAULT_MAX_ITER, DEFAULT_TOL};
use bbitcs::recovery::{
    l2_error, marginal_statistic, recover_direction, simulate_measurements, Ensemble,
    MeasurementSet,
};
use bbitcs::signals::{design_dimensions, sample_signal, SignalClass};
use bbitcs::stat::RandomStream;

fn main() {
    let n = 500;
    let s = 10;
    let sigma = 1.0;
    let f = 3.0;
    let class = SignalClass::sparse(s, n).expect("valid class");
    let mut stream = RandomStream::new(7);

    let q1 = lloyd_max_design(1, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let lambda_ref = channel_constants(&q1, &NoiseModel::AdditiveGaussian { sigma }).lambda;
    let (m, beta) = design_dimensions(&class, f, lambda_ref).unwrap();
    println!("design: n = {n}, s = {s}, sigma = {sigma}, f = {f} -> m = {m}, beta = {beta:.5}");

    let signal = sample_signal(&class, f, m, lambda_ref, &mut stream).unwrap();
    for b in [1u32, 2] {
        let q = lloyd_max_design(b, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let set =
            simulate_measurements(&signal, m, sigma, &q, Ensemble::Isotropic, &mut stream).unwrap();
        let eta = marginal_statistic(&set);
        let estimate = recover_direction(&eta, &class).unwrap();
        let err = l2_error(estimate.values(), &signal.direction()).unwrap();
        println!("b = {b}: ||x_hat - x_u|| = {err:.4}");
    }

    // Measurement sets round-trip through a CSV pair bit-exactly.
    let q = lloyd_max_design(1, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let small = sample_signal(&SignalClass::sparse(2, 8).unwrap(), 1.0, 20, lambda_ref, &mut stream)
        .unwrap();
    let set = simulate_measurements(&small, 20, 0.0, &q, Ensemble::Isotropic, &mut stream).unwrap();
    let dir = std::env::temp_dir();
    let a_path = dir.join("bbitcs_example_a.csv");
    let y_path = dir.join("bbitcs_example_y.csv");
    set.export_csv(&a_path, &y_path).unwrap();
    let back = MeasurementSet::import_csv(&a_path, &y_path, q).unwrap();
    println!(
        "csv round trip exact: {}",
        back.design().entries() == set.design().entries()
            && back.observations() == set.observations()
    );
    std::fs::remove_file(a_path).ok();
    std::fs::remove_file(y_path).ok();
}
