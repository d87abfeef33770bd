//! Emits the `Psi_{b,p}/lambda_{b,p}` trajectories of both bin-flip
//! mechanisms over a grid of flip probabilities as CSV on stdout
//! (log10 scale matches the usual plots; `inf` marks past-breakdown).
//!
//! Run with `cargo run --example flip_channel_curves > curves.csv`.

use bbitcs::channels::{constants_for_depth, NoiseModel};

fn main() {
    println!("mechanism,b,p,omega,log10_omega");
    for b in 1..=4u32 {
        for i in 0..=50 {
            let p = i as f64 * 0.01;
            for (label, model) in [
                ("random", NoiseModel::RandomBinFlip { p }),
                ("adversarial", NoiseModel::AdversarialBinFlip { p }),
            ] {
                let c = constants_for_depth(b, &model).expect("valid depth");
                let log10 = if c.omega.is_finite() {
                    format!("{:.6}", c.omega.log10())
                } else {
                    "inf".to_string()
                };
                let omega = if c.omega.is_finite() {
                    format!("{:.6}", c.omega)
                } else {
                    "inf".to_string()
                };
                println!("{label},{b},{p:.2},{omega},{log10}");
            }
        }
    }
}
