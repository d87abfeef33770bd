//! Recovery under anisotropic measurements `a_i ~ N(0, Sigma)`: the
//! estimator whitens the marginal statistic with `Sigma^{-1}` before
//! maximizing over the constraint set.
//!
//! Run with `cargo run --example anisotropic_recovery`.

use bbitcs::quantizer::{lloyd_max_design, DEFAULT_MAX_ITER, DEFAULT_TOL};
use bbitcs::recovery::{
    l2_error, marginal_statistic, recover_direction, recover_direction_anisotropic,
    simulate_measurements, Ensemble,
};
use bbitcs::signals::{sample_signal, SignalClass};
use bbitcs::stat::{Matrix, RandomStream};

fn main() {
    let n = 40;
    let s = 4;
    let m = 4000;
    let class = SignalClass::sparse(s, n).unwrap();
    let mut stream = RandomStream::new(23);

    // A correlated covariance: 1 on the diagonal, geometric decay off it.
    let mut cov = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            cov.set(i, j, 0.6f64.powi((i as i32 - j as i32).abs()));
        }
    }

    let q = lloyd_max_design(2, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let signal = sample_signal(&class, 2.0, m, 0.45, &mut stream).unwrap();
    let ensemble = Ensemble::anisotropic(cov.clone()).unwrap();
    let set = simulate_measurements(&signal, m, 0.5, &q, ensemble, &mut stream).unwrap();
    let eta = marginal_statistic(&set);

    let naive = recover_direction(&eta, &class).unwrap();
    let whitened = recover_direction_anisotropic(&eta, &cov, &class).unwrap();
    let direction = signal.direction();
    println!(
        "ignoring Sigma: error = {:.4}",
        l2_error(naive.values(), &direction).unwrap()
    );
    println!(
        "whitened:       error = {:.4}",
        l2_error(whitened.values(), &direction).unwrap()
    );
}
