//! Observation channels and the bit-depth trade-off analytics.
//!
//! Additive Gaussian noise acts before quantization and lives in the
//! measurement simulator; this module owns the two post-quantization
//! corruption mechanisms (random and adversarial bin flips), their
//! breakdown points and the trade-off tables comparing bit depths.

use crate::quantizer::{
    channel_constants, lloyd_max_design, ChannelConstants, Quantizer, QuantizerError, DEFAULT_MAX_ITER,
    DEFAULT_TOL, SQRT_2_OVER_PI,
};
use crate::stat::RandomStream;

/// Observation channel: additive Gaussian noise before quantization, or a
/// bin-flip mechanism after it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    AdditiveGaussian { sigma: f64 },
    /// Each entry is re-assigned to one of the other `2^b - 1` codewords
    /// uniformly at random with probability `p`.
    RandomBinFlip { p: f64 },
    /// Each entry `q mu_k` is moved to the opposite extreme `-q mu_K`
    /// with probability `p`.
    AdversarialBinFlip { p: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), ChannelError> {
        match *self {
            NoiseModel::AdditiveGaussian { sigma } => {
                if sigma >= 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(ChannelError::InvalidParameter(sigma))
                }
            }
            NoiseModel::RandomBinFlip { p } | NoiseModel::AdversarialBinFlip { p } => {
                if (0.0..=1.0).contains(&p) {
                    Ok(())
                } else {
                    Err(ChannelError::InvalidParameter(p))
                }
            }
        }
    }

    pub fn is_flip(&self) -> bool {
        matches!(
            self,
            NoiseModel::RandomBinFlip { .. } | NoiseModel::AdversarialBinFlip { .. }
        )
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            NoiseModel::AdditiveGaussian { sigma } => sigma,
            NoiseModel::RandomBinFlip { p } | NoiseModel::AdversarialBinFlip { p } => p,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NoiseModel::AdditiveGaussian { .. } => "additive",
            NoiseModel::RandomBinFlip { .. } => "flip-random",
            NoiseModel::AdversarialBinFlip { .. } => "flip-adversarial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipMechanism {
    Random,
    Adversarial,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelError {
    InvalidParameter(f64),
    NotAFlipModel,
    /// An observation is not an element of the quantizer's codebook.
    InvalidLevel { index: usize, value: f64 },
    DuplicateBitDepth(u32),
    Quantizer(QuantizerError),
}

impl std::fmt::Display for ChannelError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChannelError::InvalidParameter(p) => write!(f, "channel parameter {p} out of range"),
            ChannelError::NotAFlipModel => write!(f, "operation requires a bin-flip model"),
            ChannelError::InvalidLevel { index, value } => {
                write!(f, "observation {index} = {value} is not a codeword")
            }
            ChannelError::DuplicateBitDepth(b) => {
                write!(f, "bit depth {b} listed more than once")
            }
            ChannelError::Quantizer(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ChannelError {}

impl From<QuantizerError> for ChannelError {
    fn from(e: QuantizerError) -> Self {
        ChannelError::Quantizer(e)
    }
}

/// Applies a bin-flip mechanism to quantized observations.
///
/// Per entry, in entry order: one uniform decides whether the entry flips
/// (`u < p`); a flipped entry under the random mechanism consumes one
/// more draw to pick uniformly among the `2^b - 1` other codewords, while
/// the adversarial mechanism moves deterministically to `-sign * mu_K`.
pub fn apply_bin_flips(
    y: &[f64],
    q: &Quantizer,
    model: &NoiseModel,
    stream: &mut RandomStream,
) -> Result<Vec<f64>, ChannelError> {
    model.validate()?;
    let (p, mechanism) = match *model {
        NoiseModel::RandomBinFlip { p } => (p, FlipMechanism::Random),
        NoiseModel::AdversarialBinFlip { p } => (p, FlipMechanism::Adversarial),
        NoiseModel::AdditiveGaussian { .. } => return Err(ChannelError::NotAFlipModel),
    };
    let k = q.bin_count();
    let mu_top = *q.levels().last().expect("nonempty levels");
    let mut out = Vec::with_capacity(y.len());
    for (i, &value) in y.iter().enumerate() {
        let (negative, level_idx) = q
            .codeword_index(value)
            .ok_or(ChannelError::InvalidLevel { index: i, value })?;
        if stream.next_uniform() >= p {
            out.push(value);
            continue;
        }
        match mechanism {
            FlipMechanism::Adversarial => {
                out.push(if negative { mu_top } else { -mu_top });
            }
            FlipMechanism::Random => {
                // Signed codewords indexed 0..2K: 0..K negatives in
                // decreasing magnitude, K..2K positives in increasing
                // magnitude; skip the current one.
                let current = if negative { k - 1 - level_idx } else { k + level_idx };
                let mut pick = stream.next_below(2 * k as u64 - 1) as usize;
                if pick >= current {
                    pick += 1;
                }
                let flipped = if pick < k {
                    -q.levels()[k - 1 - pick]
                } else {
                    q.levels()[pick - k]
                };
                out.push(flipped);
            }
        }
    }
    Ok(out)
}

/// Smallest flip probability at which `lambda` becomes nonpositive, in
/// closed form: `1 - 2^-b` for random flips and
/// `lambda_{b,0} / (lambda_{b,0} + mu_K sqrt(2/pi))` for adversarial
/// ones. `q` is expected to be the clean-channel Lloyd-Max design.
pub fn breakdown_point(q: &Quantizer, mechanism: FlipMechanism) -> f64 {
    match mechanism {
        FlipMechanism::Random => 1.0 - 0.5f64.powi(q.bit_depth() as i32),
        FlipMechanism::Adversarial => {
            let clean = channel_constants(q, &NoiseModel::AdditiveGaussian { sigma: 0.0 });
            let mu_top = *q.levels().last().expect("nonempty levels");
            clean.lambda / (clean.lambda + mu_top * SQRT_2_OVER_PI)
        }
    }
}

/// One row of the bit-depth trade-off table: `b'` beats `b` at the bit
/// level exactly when `Omega_b / Omega_b' > sqrt(b'/b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffRow {
    pub b: u32,
    pub b_prime: u32,
    pub ratio: f64,
    pub required: f64,
}

impl TradeoffRow {
    pub fn higher_wins(&self) -> bool {
        self.ratio > self.required
    }

    pub fn winner(&self) -> u32 {
        if self.higher_wins() {
            self.b_prime
        } else {
            self.b
        }
    }
}

/// Constants for one bit depth under the table conventions: the
/// quantizer is the Lloyd-Max design adapted to `sqrt(1 + sigma^2)` for
/// additive noise and the clean design for flip channels.
pub fn constants_for_depth(b: u32, model: &NoiseModel) -> Result<ChannelConstants, ChannelError> {
    model.validate()?;
    let q = match *model {
        NoiseModel::AdditiveGaussian { sigma } => lloyd_max_design(
            b,
            (1.0 + sigma * sigma).sqrt(),
            DEFAULT_TOL,
            DEFAULT_MAX_ITER,
        )?,
        _ => lloyd_max_design(b, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER)?,
    };
    Ok(channel_constants(&q, model))
}

/// Trade-off rows for consecutive pairs of the given bit depths.
///
/// When either side of a flip-channel pair has `lambda <= 0` the ratio is
/// reported as the `+inf` sentinel.
pub fn tradeoff_table(bit_depths: &[u32], model: &NoiseModel) -> Result<Vec<TradeoffRow>, ChannelError> {
    model.validate()?;
    let mut seen = std::collections::HashSet::new();
    for &b in bit_depths {
        if !seen.insert(b) {
            return Err(ChannelError::DuplicateBitDepth(b));
        }
    }
    let constants: Vec<(u32, ChannelConstants)> = bit_depths
        .iter()
        .map(|&b| constants_for_depth(b, model).map(|c| (b, c)))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for pair in constants.windows(2) {
        let (b, cb) = pair[0];
        let (bp, cbp) = pair[1];
        let ratio = if cb.lambda > 0.0 && cbp.lambda > 0.0 {
            cb.omega / cbp.omega
        } else {
            f64::INFINITY
        };
        rows.push(TradeoffRow {
            b,
            b_prime: bp,
            ratio,
            required: (bp as f64 / b as f64).sqrt(),
        });
    }
    Ok(rows)
}

/// Aligned plain-text rendering of a trade-off table.
pub fn tradeoff_table_text(rows: &[TradeoffRow], model: &NoiseModel) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "trade-off under {} (parameter {})\n",
        model.label(),
        model.parameter()
    ));
    out.push_str(&format!(
        "{:>3} {:>3} {:>12} {:>12} {:>10}\n",
        "b", "b'", "Omega_b/b'", "required", "verdict"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:>3} {:>3} {:>12.4} {:>12.4} {:>10}\n",
            r.b,
            r.b_prime,
            r.ratio,
            r.required,
            format!("b={} wins", r.winner())
        ));
    }
    out
}

/// CSV rendering: `mechanism,b,b_prime,ratio,required,verdict`.
pub fn tradeoff_table_csv(rows: &[TradeoffRow], model: &NoiseModel) -> String {
    let mut out = String::from("mechanism,b,b_prime,ratio,required,verdict\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},b={}\n",
            model.label(),
            r.b,
            r.b_prime,
            fmt_real(r.ratio),
            fmt_real(r.required),
            r.winner()
        ));
    }
    out
}

/// Breakdown points of both mechanisms for the given bit depths, using
/// clean Lloyd-Max designs.
pub fn breakdown_table(bit_depths: &[u32]) -> Result<Vec<(u32, f64, f64)>, ChannelError> {
    bit_depths
        .iter()
        .map(|&b| {
            let q = lloyd_max_design(b, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            Ok((
                b,
                breakdown_point(&q, FlipMechanism::Random),
                breakdown_point(&q, FlipMechanism::Adversarial),
            ))
        })
        .collect()
}

pub fn breakdown_table_text(table: &[(u32, f64, f64)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>3} {:>16} {:>14}\n",
        "b", "random", "adversarial"
    ));
    for &(b, random, adversarial) in table {
        let denom = 1u64 << b;
        out.push_str(&format!(
            "{:>3} {:>10} = {:.4} {:>14.4}\n",
            b,
            format!("{}/{}", denom - 1, denom),
            random,
            adversarial
        ));
    }
    out
}

/// CSV rendering: `mechanism,b,breakdown`.
pub fn breakdown_table_csv(table: &[(u32, f64, f64)]) -> String {
    let mut out = String::from("mechanism,b,breakdown\n");
    for &(b, random, _) in table {
        out.push_str(&format!("flip-random,{},{}\n", b, fmt_real(random)));
    }
    for &(b, _, adversarial) in table {
        out.push_str(&format!("flip-adversarial,{},{}\n", b, fmt_real(adversarial)));
    }
    out
}

pub(crate) fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.11e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lloyd(b: u32) -> Quantizer {
        lloyd_max_design(b, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap()
    }

    #[test]
    fn zero_probability_keeps_input() {
        let q = lloyd(2);
        let mut stream = RandomStream::new(1);
        let y = vec![q.levels()[0], -q.levels()[1], q.levels()[1]];
        let out = apply_bin_flips(&y, &q, &NoiseModel::RandomBinFlip { p: 0.0 }, &mut stream).unwrap();
        assert_eq!(out, y);
    }

    #[test]
    fn adversarial_certain_flip_goes_to_opposite_extreme() {
        let q = lloyd(2);
        let mu2 = q.levels()[1];
        let mut stream = RandomStream::new(2);
        let y = vec![q.levels()[0]; 5];
        let out =
            apply_bin_flips(&y, &q, &NoiseModel::AdversarialBinFlip { p: 1.0 }, &mut stream).unwrap();
        assert!(out.iter().all(|&v| v == -mu2));
    }

    #[test]
    fn one_bit_certain_random_flip_is_sign_flip() {
        let q = lloyd(1);
        let mut stream = RandomStream::new(3);
        let y = vec![q.levels()[0], -q.levels()[0], q.levels()[0]];
        let out = apply_bin_flips(&y, &q, &NoiseModel::RandomBinFlip { p: 1.0 }, &mut stream).unwrap();
        for (a, b) in y.iter().zip(&out) {
            assert_eq!(*a, -b);
        }
    }

    #[test]
    fn rejects_values_outside_codebook() {
        let q = lloyd(2);
        let mut stream = RandomStream::new(4);
        let err = apply_bin_flips(&[0.1], &q, &NoiseModel::RandomBinFlip { p: 0.5 }, &mut stream);
        assert!(matches!(err, Err(ChannelError::InvalidLevel { .. })));
        let err = apply_bin_flips(
            &[q.levels()[0]],
            &q,
            &NoiseModel::AdditiveGaussian { sigma: 1.0 },
            &mut stream,
        );
        assert!(matches!(err, Err(ChannelError::NotAFlipModel)));
    }

    #[test]
    fn empirical_flip_frequency_matches_p() {
        let q = lloyd(2);
        let p = 0.3;
        let n = 100_000usize;
        let mut stream = RandomStream::new(5);
        let y: Vec<f64> = (0..n).map(|_| q.quantize(stream.next_gaussian())).collect();
        let out = apply_bin_flips(&y, &q, &NoiseModel::RandomBinFlip { p }, &mut stream).unwrap();
        let flipped = y.iter().zip(&out).filter(|(a, b)| a != b).count() as f64;
        let se = (n as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (flipped - n as f64 * p).abs() < 3.0 * se,
            "flipped = {flipped}, expected ~{}",
            n as f64 * p
        );
        // Outputs stay inside the codebook.
        assert!(out.iter().all(|&v| q.codeword_index(v).is_some()));
    }

    #[test]
    fn random_flip_targets_cover_other_codewords_uniformly() {
        let q = lloyd(2);
        let n = 60_000usize;
        let mut stream = RandomStream::new(6);
        let y = vec![q.levels()[0]; n];
        let out = apply_bin_flips(&y, &q, &NoiseModel::RandomBinFlip { p: 1.0 }, &mut stream).unwrap();
        let mut counts = std::collections::HashMap::new();
        for v in &out {
            *counts.entry(v.to_bits()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 3);
        let expected = n as f64 / 3.0;
        let se = (n as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for (_, c) in counts {
            assert!((c as f64 - expected).abs() < 4.0 * se);
        }
    }

    #[test]
    fn breakdown_points_match_closed_forms() {
        let randoms = [0.5, 0.75, 0.875, 0.9375];
        let adversarials = [0.50, 0.4225, 0.36, 0.31];
        for b in 1..=4u32 {
            let q = lloyd(b);
            let r = breakdown_point(&q, FlipMechanism::Random);
            assert_eq!(r, randoms[(b - 1) as usize]);
            let a = breakdown_point(&q, FlipMechanism::Adversarial);
            assert!(
                (a - adversarials[(b - 1) as usize]).abs() < 5e-3,
                "adversarial breakdown at b={b}: {a}"
            );
        }
    }

    #[test]
    fn lambda_is_linear_in_p_and_crosses_zero_at_breakdown() {
        for b in 1..=4u32 {
            let q = lloyd(b);
            for mechanism in [FlipMechanism::Random, FlipMechanism::Adversarial] {
                let model = |p| match mechanism {
                    FlipMechanism::Random => NoiseModel::RandomBinFlip { p },
                    FlipMechanism::Adversarial => NoiseModel::AdversarialBinFlip { p },
                };
                // Linearity: lambda(p) agrees with the chord through 0 and 1/2.
                let l0 = channel_constants(&q, &model(0.0)).lambda;
                let l_half = channel_constants(&q, &model(0.5)).lambda;
                for p in [0.1, 0.25, 0.4] {
                    let interpolated = l0 + (l_half - l0) * (p / 0.5);
                    let actual = channel_constants(&q, &model(p)).lambda;
                    assert!((interpolated - actual).abs() < 1e-12);
                }
                // Sign change brackets the closed-form breakdown point.
                let pb = breakdown_point(&q, mechanism);
                assert!(channel_constants(&q, &model(pb - 1e-6)).lambda > 0.0);
                assert!(channel_constants(&q, &model(pb + 1e-6)).lambda < 0.0);
            }
        }
    }

    #[test]
    fn tradeoff_ratios_match_known_constants() {
        let model = NoiseModel::AdditiveGaussian { sigma: 0.0 };
        let rows = tradeoff_table(&[1, 2, 3, 4], &model).unwrap();
        let expected = [(1.178, 1.414), (1.046, 1.225), (1.013, 1.155)];
        for (row, (ratio, required)) in rows.iter().zip(expected) {
            assert!((row.ratio - ratio).abs() < 2e-3, "ratio {} vs {ratio}", row.ratio);
            assert!((row.required - required).abs() < 1e-3);
            assert!(!row.higher_wins(), "lower bit depth should win");
            assert_eq!(row.winner(), row.b);
        }
    }

    #[test]
    fn tradeoff_ratios_do_not_depend_on_sigma() {
        let base = tradeoff_table(&[1, 2, 3, 4], &NoiseModel::AdditiveGaussian { sigma: 0.0 }).unwrap();
        for sigma in [1.0, 2.0] {
            let rows =
                tradeoff_table(&[1, 2, 3, 4], &NoiseModel::AdditiveGaussian { sigma }).unwrap();
            for (a, b) in base.iter().zip(&rows) {
                assert!((a.ratio - b.ratio).abs() < 1e-9, "sigma = {sigma}");
            }
        }
    }

    #[test]
    fn clean_flip_channel_coincides_with_clean_additive() {
        let additive = tradeoff_table(&[1, 2, 3], &NoiseModel::AdditiveGaussian { sigma: 0.0 }).unwrap();
        let flips = tradeoff_table(&[1, 2, 3], &NoiseModel::RandomBinFlip { p: 0.0 }).unwrap();
        for (a, b) in additive.iter().zip(&flips) {
            assert!((a.ratio - b.ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn tradeoff_rejects_duplicate_depths() {
        let model = NoiseModel::AdditiveGaussian { sigma: 0.0 };
        assert!(matches!(
            tradeoff_table(&[1, 2, 2], &model),
            Err(ChannelError::DuplicateBitDepth(2))
        ));
    }

    #[test]
    fn tradeoff_past_breakdown_reports_infinite_sentinel() {
        let rows = tradeoff_table(&[1, 2], &NoiseModel::AdversarialBinFlip { p: 0.45 }).unwrap();
        // b=2 is past its adversarial breakdown (~0.4225), b=1 is not.
        assert!(rows[0].ratio.is_infinite());
    }

    #[test]
    fn flip_curves_for_three_and_four_bits_are_close_at_small_p() {
        // log10(Psi/lambda) trajectories nearly coincide for b in {3,4}
        // at small p under the random mechanism.
        for i in 0..=10 {
            let p = 0.01 * i as f64;
            let c3 = constants_for_depth(3, &NoiseModel::RandomBinFlip { p }).unwrap();
            let c4 = constants_for_depth(4, &NoiseModel::RandomBinFlip { p }).unwrap();
            let gap = (c3.omega.log10() - c4.omega.log10()).abs();
            assert!(gap < 0.05, "gap {gap} at p = {p}");
        }
    }

    #[test]
    fn renders_tables() {
        let model = NoiseModel::AdditiveGaussian { sigma: 0.0 };
        let rows = tradeoff_table(&[1, 2], &model).unwrap();
        let text = tradeoff_table_text(&rows, &model);
        assert!(text.contains("b=1 wins"));
        let csv = tradeoff_table_csv(&rows, &model);
        assert!(csv.starts_with("mechanism,b,b_prime"));
        let table = breakdown_table(&[1, 2, 3, 4]).unwrap();
        let text = breakdown_table_text(&table);
        assert!(text.contains("15/16"));
        let csv = breakdown_table_csv(&table);
        assert_eq!(csv.lines().count(), 9);
    }
}
