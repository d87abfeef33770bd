//! Linear signal recovery from b-bit-quantized Gaussian measurements.
//!
//! The crate covers the full pipeline:
//!
//! * [`quantizer`] - symmetric b-bit scalar quantizers, Lloyd-Max design
//!   and the analytic channel constants (lambda, Psi, Omega);
//! * [`channels`] - post-quantization bin-flip channels, breakdown points
//!   and the bit-depth trade-off tables;
//! * [`signals`] - structured signal classes (sparse, fused, group,
//!   low-rank, l1-ball), samplers and Gaussian-width bounds;
//! * [`recovery`] - measurement simulation, the canonical linear
//!   estimator with exact constraint-set optimizers, its anisotropic
//!   variant and the projected marginal estimator;
//! * [`scale`] - maximum-likelihood estimation of the signal norm (and
//!   noise level) from quantized observations;
//! * [`experiment`] - a reproducible Monte-Carlo harness with CSV output;
//! * [`stat`] - the numeric foundation shared by all of the above.
//!
//! Every random quantity flows through [`stat::RandomStream`], so any
//! entry point that takes a seed is bit-for-bit reproducible. See the
//! `examples/` directory for one runnable program per capability, and the
//! `bbitcs` binary for the command-line harness.

pub mod channels;
pub mod cli;
pub mod experiment;
pub mod quantizer;
pub mod recovery;
pub mod scale;
pub mod signals;
pub mod stat;

pub use channels::{
    apply_bin_flips, breakdown_point, tradeoff_table, ChannelError, FlipMechanism, NoiseModel,
    TradeoffRow,
};
pub use quantizer::{
    channel_constants, distortion, lloyd_max_design, omega_optimal, partition_moments,
    ChannelConstants, Quantizer, QuantizerError,
};
pub use recovery::{
    l2_error, marginal_statistic, projected_marginal, recover_direction,
    recover_direction_anisotropic, simulate_measurements, DirectionEstimate, Ensemble,
    MeasurementSet, RecoveryError,
};
pub use scale::{
    bin_counts, bin_intervals, combine_direction_scale, prop1_tail_bound, scale_mle_noiseless,
    scale_mle_noisy, BinInterval, ScaleError, ScaleEstimate,
};
pub use signals::{
    design_dimensions, sample_signal, width_bound, GroundTruthSignal, SignalClass, SignalError,
};
pub use stat::{Matrix, RandomStream};
