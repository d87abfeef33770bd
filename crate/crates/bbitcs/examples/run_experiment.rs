//! A small Monte-Carlo experiment through the harness: sparse signals,
//! one- and two-bit quantization, a grid over signal strength, CSV rows
//! plus per-cell summaries. Reruns with the same seed are byte-identical.
//!
//! Run with `cargo run --example run_experiment`.

use bbitcs::experiment::{rows_to_csv, run_experiment, summarize, summary_to_csv, ExperimentConfig};

fn main() {
    let config = ExperimentConfig {
        class: "sparse".into(),
        n: Some(200),
        groups: None,
        rows: None,
        cols: None,
        bit_depths: vec![1, 2],
        noise: "additive".into(),
        noise_params: vec![1.0],
        signal_strengths: vec![1.0, 2.0, 3.0],
        sparsities: vec![5],
        replicates: 10,
        seed: 42,
        estimate_scale: false,
        output: None,
    };
    let rows = run_experiment(&config).expect("valid config");
    println!("{} result rows; first three:", rows.len());
    for line in rows_to_csv(&rows).lines().take(4) {
        println!("  {line}");
    }
    println!("\nper-cell summary (mean +/- sd of the direction error):");
    print!("{}", summary_to_csv(&summarize(&rows)));
}
