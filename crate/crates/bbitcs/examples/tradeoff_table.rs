//! Reproduces the bit-depth trade-off table: the error ratio
//! `Omega_b / Omega_b'` for consecutive bit depths against the
//! `sqrt(b'/b)` threshold required for the higher depth to win at a
//! fixed bit budget. The ratios do not depend on the noise level.
//!
//! Run with `cargo run --example tradeoff_table`.

use bbitcs::channels::{tradeoff_table, tradeoff_table_text, NoiseModel};

fn main() {
    let bits = [1u32, 2, 3, 4];
    for sigma in [0.0, 1.0, 2.0] {
        let model = NoiseModel::AdditiveGaussian { sigma };
        let rows = tradeoff_table(&bits, &model).expect("valid bit depths");
        print!("{}", tradeoff_table_text(&rows, &model));
        println!();
    }
    println!("one-bit measurements win every consecutive comparison: the");
    println!("ratio never reaches the sqrt(b'/b) bar, at any noise level.");
}
