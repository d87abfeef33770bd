//! Breakdown points of the two bin-flip channels: the flip probability
//! at which `lambda` turns nonpositive and linear recovery stops
//! pointing the right way.
//!
//! Run with `cargo run --example breakdown_points`.

use bbitcs::channels::{breakdown_table, breakdown_table_csv, breakdown_table_text};

fn main() {
    let table = breakdown_table(&[1, 2, 3, 4]).expect("valid bit depths");
    print!("{}", breakdown_table_text(&table));
    println!("\nmachine-readable form:\n{}", breakdown_table_csv(&table));
}
