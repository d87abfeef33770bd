//! Symmetric b-bit scalar quantizers, Lloyd-Max design and the analytic
//! channel constants.
//!
//! A quantizer with bit depth `b` maps a real `z` to `sign(z) * mu_k`
//! where `|z|` falls in the half-open bin `[t_{k-1}, t_k)`, `K = 2^(b-1)`,
//! with implicit `t_0 = 0` and `t_K = +inf`. The constants `lambda`
//! (distortion from linearity), `Psi` (marginal observation std) and
//! `Omega = Psi / lambda` (error-bound leading constant) drive the
//! bit-depth-versus-measurement trade-off.

use crate::channels::NoiseModel;
use crate::stat::special::{normal_interval_prob, normal_pdf, normal_quantile};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 500;

/// Largest supported bit depth; 2^(b-1) levels must stay a small vector.
pub const MAX_BIT_DEPTH: u32 = 20;

pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    thresholds: Vec<f64>,
    levels: Vec<f64>,
}

/// The triple (lambda, Psi, Omega) of a quantizer under a noise model.
///
/// `omega` is reported as `+inf` whenever `lambda <= 0` (possible under
/// bin-flip channels past the breakdown point).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConstants {
    pub lambda: f64,
    pub psi: f64,
    pub omega: f64,
}

impl ChannelConstants {
    fn from_lambda_psi(lambda: f64, psi: f64) -> Self {
        let omega = if lambda > 0.0 { psi / lambda } else { f64::INFINITY };
        ChannelConstants { lambda, psi, omega }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantizerError {
    InvalidBitDepth(u32),
    LevelCountNotPowerOfTwo(usize),
    ThresholdCountMismatch { expected: usize, got: usize },
    InvalidThresholds,
    InvalidLevels,
    InvalidParameter(&'static str),
    /// Lloyd-Max did not converge; carries the last iterate and the
    /// fixed-point residual it reached.
    IterationLimit { last: Quantizer, residual: f64 },
    ParseError(String),
}

impl std::fmt::Display for QuantizerError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QuantizerError::InvalidBitDepth(b) => {
                write!(f, "bit depth {b} outside 1..={MAX_BIT_DEPTH}")
            }
            QuantizerError::LevelCountNotPowerOfTwo(k) => {
                write!(f, "level count {k} is not a power of two")
            }
            QuantizerError::ThresholdCountMismatch { expected, got } => {
                write!(f, "expected {expected} thresholds, got {got}")
            }
            QuantizerError::InvalidThresholds => {
                write!(f, "thresholds must be finite, positive and strictly increasing")
            }
            QuantizerError::InvalidLevels => write!(
                f,
                "levels must be finite, strictly increasing and interior to their bins"
            ),
            QuantizerError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            QuantizerError::IterationLimit { residual, .. } => {
                write!(f, "Lloyd-Max iteration limit reached, residual {residual:e}")
            }
            QuantizerError::ParseError(msg) => write!(f, "quantizer parse error: {msg}"),
        }
    }
}

impl std::error::Error for QuantizerError {}

impl Quantizer {
    /// Validates and builds a quantizer from positive thresholds
    /// `t_1 < ... < t_{K-1}` and levels `mu_1 < ... < mu_K` with
    /// `mu_k` in `(t_{k-1}, t_k)`.
    pub fn new(thresholds: Vec<f64>, levels: Vec<f64>) -> Result<Self, QuantizerError> {
        let k = levels.len();
        if k == 0 || !k.is_power_of_two() {
            return Err(QuantizerError::LevelCountNotPowerOfTwo(k));
        }
        if thresholds.len() != k - 1 {
            return Err(QuantizerError::ThresholdCountMismatch {
                expected: k - 1,
                got: thresholds.len(),
            });
        }
        let mut prev = 0.0;
        for &t in &thresholds {
            if !t.is_finite() || t <= prev {
                return Err(QuantizerError::InvalidThresholds);
            }
            prev = t;
        }
        for (i, &mu) in levels.iter().enumerate() {
            let lo = if i == 0 { 0.0 } else { thresholds[i - 1] };
            let hi = if i == k - 1 { f64::INFINITY } else { thresholds[i] };
            if !mu.is_finite() || mu <= lo || mu >= hi {
                return Err(QuantizerError::InvalidLevels);
            }
        }
        Ok(Quantizer { thresholds, levels })
    }

    pub fn bit_depth(&self) -> u32 {
        self.levels.len().trailing_zeros() + 1
    }

    /// Number of positive bins, `K = 2^(b-1)`.
    pub fn bin_count(&self) -> usize {
        self.levels.len()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Index of the positive bin containing `|z|`; bins are half-open,
    /// so `|z| = t_k` lands in bin `k+1`.
    pub fn bin_index(&self, z: f64) -> usize {
        let a = z.abs();
        self.thresholds.partition_point(|&t| t <= a)
    }

    /// `sign(z) * mu_k` for the bin containing `|z|`; `z = 0` maps to
    /// `+mu_1`.
    pub fn quantize(&self, z: f64) -> f64 {
        let level = self.levels[self.bin_index(z)];
        if z < 0.0 {
            -level
        } else {
            level
        }
    }

    /// Looks up which signed codeword a value is, or `None` if it is not
    /// exactly an element of the codebook.
    pub fn codeword_index(&self, y: f64) -> Option<(bool, usize)> {
        let negative = y < 0.0;
        let magnitude = y.abs();
        self.levels
            .iter()
            .position(|&mu| mu == magnitude)
            .map(|k| (negative, k))
    }

    /// Same quantizer with thresholds and levels scaled by `c > 0`.
    pub fn scaled(&self, c: f64) -> Quantizer {
        assert!(c > 0.0 && c.is_finite(), "scale factor must be positive");
        Quantizer {
            thresholds: self.thresholds.iter().map(|t| t * c).collect(),
            levels: self.levels.iter().map(|m| m * c).collect(),
        }
    }

    /// Plain-text record `b;t1,...;mu1,...` with 17 significant digits,
    /// which round-trips doubles exactly.
    pub fn serialize(&self) -> String {
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.16e}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "{};{};{}",
            self.bit_depth(),
            fmt(&self.thresholds),
            fmt(&self.levels)
        )
    }

    pub fn parse(text: &str) -> Result<Self, QuantizerError> {
        let parts: Vec<&str> = text.trim().split(';').collect();
        if parts.len() != 3 {
            return Err(QuantizerError::ParseError(
                "expected three ';'-separated fields".into(),
            ));
        }
        let parse_list = |s: &str| -> Result<Vec<f64>, QuantizerError> {
            if s.is_empty() {
                return Ok(Vec::new());
            }
            s.split(',')
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|e| QuantizerError::ParseError(format!("bad real '{tok}': {e}")))
                })
                .collect()
        };
        let b: u32 = parts[0]
            .parse()
            .map_err(|e| QuantizerError::ParseError(format!("bad bit depth: {e}")))?;
        let q = Quantizer::new(parse_list(parts[1])?, parse_list(parts[2])?)?;
        if q.bit_depth() != b {
            return Err(QuantizerError::ParseError(format!(
                "declared bit depth {b} does not match {} levels",
                q.bin_count()
            )));
        }
        Ok(q)
    }
}

/// Bin probabilities and conditional means of `|g|` for
/// `g ~ N(0, 1 + sigma^2)` over the quantizer's positive bins.
///
/// `alpha` sums to one; `cond_means[k]` lies inside the k-th bin scaled
/// by `sqrt(1 + sigma^2)`.
pub fn partition_moments(q: &Quantizer, sigma: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(sigma >= 0.0, "noise level must be nonnegative");
    let std = (1.0 + sigma * sigma).sqrt();
    positive_bin_moments(q.thresholds(), std)
}

/// alpha_k = P(|h| in bin k) and E_k = E[h | h in bin k] for
/// `h ~ N(0, std^2)` over the positive bins cut by `thresholds`.
fn positive_bin_moments(thresholds: &[f64], std: f64) -> (Vec<f64>, Vec<f64>) {
    let k = thresholds.len() + 1;
    let mut alpha = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    for i in 0..k {
        let lo = if i == 0 { 0.0 } else { thresholds[i - 1] / std };
        let hi = if i == k - 1 {
            f64::INFINITY
        } else {
            thresholds[i] / std
        };
        let prob = normal_interval_prob(lo, hi);
        alpha.push(2.0 * prob);
        let mean = if prob > 0.0 {
            std * (normal_pdf(lo) - pdf_or_zero(hi)) / prob
        } else {
            // Empty bin; midpoint keeps the value finite and interior.
            std * 0.5 * (lo + if hi.is_finite() { hi } else { lo + 1.0 })
        };
        means.push(mean);
    }
    (alpha, means)
}

fn pdf_or_zero(x: f64) -> f64 {
    if x.is_finite() {
        normal_pdf(x)
    } else {
        0.0
    }
}

/// Mean-squared quantization error `E[(h - Q(h))^2]` for
/// `h ~ N(0, source_std^2)`, in closed form.
pub fn distortion(q: &Quantizer, source_std: f64) -> f64 {
    assert!(source_std > 0.0, "source std must be positive");
    let (alpha, means) = positive_bin_moments(q.thresholds(), source_std);
    let mut cross = 0.0;
    let mut power = 0.0;
    for ((&a, &e), &mu) in alpha.iter().zip(&means).zip(q.levels()) {
        cross += a * e * mu;
        power += a * mu * mu;
    }
    source_std * source_std - 2.0 * cross + power
}

/// (lambda, Psi, Omega) of a quantizer under a noise model.
///
/// Additive noise follows the conditional-moment expressions; the
/// bin-flip channels reuse the clean (`sigma = 0`) constants with
/// `lambda_{b,p} = lambda_{b,0} ((1-p) - p/(2^b - 1))` for random flips
/// and `lambda_{b,p} = (1-p) lambda_{b,0} - p mu_K sqrt(2/pi)` for
/// adversarial ones. The flip-channel `Psi` is evaluated with the
/// modified bin probabilities of those channels.
pub fn channel_constants(q: &Quantizer, model: &NoiseModel) -> ChannelConstants {
    match *model {
        NoiseModel::AdditiveGaussian { sigma } => {
            assert!(sigma >= 0.0, "additive noise level must be nonnegative");
            let (alpha, means) = partition_moments(q, sigma);
            let mut lambda = 0.0;
            let mut psi2 = 0.0;
            for ((&a, &e), &mu) in alpha.iter().zip(&means).zip(q.levels()) {
                lambda += a * e * mu;
                psi2 += a * mu * mu;
            }
            lambda /= 1.0 + sigma * sigma;
            ChannelConstants::from_lambda_psi(lambda, psi2.sqrt())
        }
        NoiseModel::RandomBinFlip { p } => {
            assert!((0.0..=1.0).contains(&p), "flip probability must be in [0, 1]");
            let clean = channel_constants(q, &NoiseModel::AdditiveGaussian { sigma: 0.0 });
            let codebook = (1usize << q.bit_depth()) as f64;
            let lambda = clean.lambda * ((1.0 - p) - p / (codebook - 1.0));
            let (alpha0, _) = partition_moments(q, 0.0);
            let k = q.bin_count() as f64;
            let mut psi2 = 0.0;
            for (&a0, &mu) in alpha0.iter().zip(q.levels()) {
                let a = a0 * (1.0 - p) + (p / k) * (1.0 - a0);
                psi2 += a * mu * mu;
            }
            ChannelConstants::from_lambda_psi(lambda, psi2.sqrt())
        }
        NoiseModel::AdversarialBinFlip { p } => {
            assert!((0.0..=1.0).contains(&p), "flip probability must be in [0, 1]");
            let clean = channel_constants(q, &NoiseModel::AdditiveGaussian { sigma: 0.0 });
            let mu_top = *q.levels().last().expect("nonempty levels");
            let lambda = (1.0 - p) * clean.lambda - p * mu_top * SQRT_2_OVER_PI;
            let (alpha0, _) = partition_moments(q, 0.0);
            let k = q.bin_count();
            let mut psi2 = 0.0;
            for (i, (&a0, &mu)) in alpha0.iter().zip(q.levels()).enumerate() {
                let a = if i + 1 < k {
                    (1.0 - p) * a0
                } else {
                    a0 + p * (1.0 - a0)
                };
                psi2 += a * mu * mu;
            }
            ChannelConstants::from_lambda_psi(lambda, psi2.sqrt())
        }
    }
}

/// Lloyd-Max quantizer for a centered Gaussian source.
///
/// The design runs on the unit-variance problem and scales the fixed
/// point by `source_std`, so designs at different scales are exact
/// multiples of each other. Levels start at the odd `2K`-quantiles of the
/// half-normal, inside the basin where the alternating iteration reaches
/// the global optimum for log-concave sources.
///
/// Each iteration takes a Newton step on the threshold stationarity
/// residual `t_k - (E_k + E_{k+1})/2` (tridiagonal Jacobian) and falls
/// back to the plain alternating update whenever the step would leave
/// the feasible region or increase distortion, so distortion is
/// nonincreasing across iterations either way. Convergence is declared
/// when the largest parameter change drops to `tol`.
pub fn lloyd_max_design(
    b: u32,
    source_std: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Quantizer, QuantizerError> {
    if b < 1 || b > MAX_BIT_DEPTH {
        return Err(QuantizerError::InvalidBitDepth(b));
    }
    if !(source_std > 0.0) || !source_std.is_finite() {
        return Err(QuantizerError::InvalidParameter("source_std must be positive"));
    }
    if !(tol > 0.0) {
        return Err(QuantizerError::InvalidParameter("tol must be positive"));
    }

    let k = 1usize << (b - 1);
    if k == 1 {
        // Sign quantizer: the half-normal mean is the fixed point.
        let q = Quantizer::new(vec![], vec![SQRT_2_OVER_PI])?;
        return Ok(q.scaled(source_std));
    }

    let mut levels: Vec<f64> = (1..=k)
        .map(|i| {
            let quantile = (2 * i - 1) as f64 / (2 * k) as f64;
            normal_quantile(0.5 * (1.0 + quantile)).expect("quantile in range")
        })
        .collect();
    let mut thresholds = midpoints(&levels);
    let mut current_distortion = f64::INFINITY;

    let mut change = f64::INFINITY;
    for _ in 0..max_iter {
        let lloyd_t = midpoints(&levels);
        let candidate_t = newton_threshold_step(&thresholds).unwrap_or_else(|| lloyd_t.clone());
        let (_, candidate_mu) = positive_bin_moments(&candidate_t, 1.0);
        let candidate_d = unit_distortion(&candidate_t, &candidate_mu);
        let (new_t, new_mu) = if candidate_d <= current_distortion {
            current_distortion = candidate_d;
            (candidate_t, candidate_mu)
        } else {
            let (_, lloyd_mu) = positive_bin_moments(&lloyd_t, 1.0);
            current_distortion = unit_distortion(&lloyd_t, &lloyd_mu);
            (lloyd_t, lloyd_mu)
        };
        change = 0.0f64;
        for (new, old) in new_t.iter().zip(&thresholds) {
            change = change.max((new - old).abs());
        }
        for (new, old) in new_mu.iter().zip(&levels) {
            change = change.max((new - old).abs());
        }
        thresholds = new_t;
        levels = new_mu;
        if change <= tol {
            let q = Quantizer::new(thresholds, levels)?;
            return Ok(q.scaled(source_std));
        }
    }
    let last = Quantizer::new(thresholds, levels)?.scaled(source_std);
    Err(QuantizerError::IterationLimit {
        last,
        residual: change,
    })
}

/// One Newton step on `r_k(t) = t_k - (E_k(t) + E_{k+1}(t))/2`, whose
/// Jacobian is tridiagonal because `E_k` depends on `t_{k-1}` and `t_k`
/// only, with `dE/db = phi(b)(b - E)/P` and `dE/da = phi(a)(E - a)/P`
/// on a bin `(a, b)` of probability `P`. Returns `None` when the step
/// leaves the feasible region.
fn newton_threshold_step(thresholds: &[f64]) -> Option<Vec<f64>> {
    let km1 = thresholds.len();
    let (probs, means) = positive_bin_moments(thresholds, 1.0);
    let mut residual = vec![0.0; km1];
    for i in 0..km1 {
        residual[i] = thresholds[i] - 0.5 * (means[i] + means[i + 1]);
    }
    // dE_k/dt for the bins left (k = i+1) and right (k = i+2) of t_i.
    let mut lower = vec![0.0; km1];
    let mut diag = vec![0.0; km1];
    let mut upper = vec![0.0; km1];
    for i in 0..km1 {
        let t = thresholds[i];
        let pdf = normal_pdf(t);
        let p_left = 0.5 * probs[i];
        let p_right = 0.5 * probs[i + 1];
        // t_i is the upper edge of bin i and the lower edge of bin i+1.
        let de_left_dt = pdf * (t - means[i]) / p_left;
        let de_right_dt = pdf * (means[i + 1] - t) / p_right;
        diag[i] = 1.0 - 0.5 * (de_left_dt + de_right_dt);
        if i > 0 {
            // dE_i/dt_{i-1}: t_{i-1} is the lower edge of bin i.
            let tl = thresholds[i - 1];
            lower[i] = -0.5 * normal_pdf(tl) * (means[i] - tl) / p_left;
        }
        if i + 1 < km1 {
            // dE_{i+1}/dt_{i+1}: t_{i+1} is the upper edge of bin i+1.
            let tu = thresholds[i + 1];
            upper[i] = -0.5 * normal_pdf(tu) * (tu - means[i + 1]) / p_right;
        }
    }
    let delta = solve_tridiagonal(&lower, &diag, &upper, &residual)?;
    let mut out = Vec::with_capacity(km1);
    let mut prev = 0.0;
    for i in 0..km1 {
        let t = thresholds[i] - delta[i];
        if !t.is_finite() || t <= prev {
            return None;
        }
        out.push(t);
        prev = t;
    }
    Some(out)
}

fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot.abs() < 1e-300 {
        return None;
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot.abs() < 1e-300 {
            return None;
        }
        c[i] = if i + 1 < n { upper[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Distortion of a unit-variance source: `1 - 2<alpha, mu * E> +
/// <alpha, mu * mu>` over the positive bins.
fn unit_distortion(thresholds: &[f64], levels: &[f64]) -> f64 {
    let (alpha, means) = positive_bin_moments(thresholds, 1.0);
    let mut d = 1.0;
    for ((&a, &e), &mu) in alpha.iter().zip(&means).zip(levels) {
        d += a * mu * (mu - 2.0 * e);
    }
    d
}

fn midpoints(levels: &[f64]) -> Vec<f64> {
    levels
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]))
        .collect()
}

/// The minimal error-bound constant `Omega` attainable at bit depth `b`
/// under additive noise `sigma`: `sqrt((sigma^2 + 1) / lambda_{b,0})`
/// evaluated at the clean Lloyd-Max design.
pub fn omega_optimal(b: u32, sigma: f64) -> Result<f64, QuantizerError> {
    assert!(sigma >= 0.0, "noise level must be nonnegative");
    let q = lloyd_max_design(b, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let clean = channel_constants(&q, &NoiseModel::AdditiveGaussian { sigma: 0.0 });
    Ok(((sigma * sigma + 1.0) / clean.lambda).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stat::special::normal_cdf as cdf;
    use crate::stat::RandomStream;

    fn lloyd(b: u32) -> Quantizer {
        lloyd_max_design(b, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap()
    }

    #[test]
    fn sign_quantizer_basics() {
        let q = lloyd(1);
        assert_eq!(q.bit_depth(), 1);
        assert!(q.thresholds().is_empty());
        assert!((q.levels()[0] - 0.797885).abs() < 1e-6);
        assert!((q.quantize(0.3) - SQRT_2_OVER_PI).abs() < 1e-12);
        assert!((q.quantize(-0.3) + SQRT_2_OVER_PI).abs() < 1e-12);
    }

    #[test]
    fn two_bit_fixed_point_matches_known_values() {
        let q = lloyd(2);
        assert!((q.thresholds()[0] - 0.98163).abs() < 1e-4, "t1 = {}", q.thresholds()[0]);
        assert!((q.levels()[0] - 0.45278).abs() < 1e-4);
        assert!((q.levels()[1] - 1.51040).abs() < 1e-4);
        assert!((q.quantize(1.2) - q.levels()[1]).abs() == 0.0);
    }

    #[test]
    fn quantize_is_odd_and_edge_goes_up() {
        let q = lloyd(3);
        for z in [-2.5, -0.3, 0.7, 4.0] {
            assert_eq!(q.quantize(-z), -q.quantize(z));
        }
        // Exact threshold lands in the upper bin.
        let t1 = q.thresholds()[0];
        assert_eq!(q.quantize(t1), q.levels()[1]);
        assert_eq!(q.quantize(0.0), q.levels()[0]);
    }

    #[test]
    fn design_scales_exactly_with_source_std() {
        let unit = lloyd(2);
        let c = 2.7;
        let scaled = lloyd_max_design(2, c, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        for (a, b) in scaled.thresholds().iter().zip(unit.thresholds()) {
            assert_eq!(*a, b * c);
        }
        for (a, b) in scaled.levels().iter().zip(unit.levels()) {
            assert_eq!(*a, b * c);
        }
    }

    #[test]
    fn iteration_limit_reports_last_iterate() {
        match lloyd_max_design(3, 1.0, 1e-16, 2) {
            Err(QuantizerError::IterationLimit { last, residual }) => {
                assert_eq!(last.bin_count(), 4);
                assert!(residual > 0.0);
            }
            other => panic!("expected iteration limit, got {other:?}"),
        }
    }

    #[test]
    fn partition_moments_single_bin() {
        let q = lloyd(1);
        let (alpha, means) = partition_moments(&q, 0.0);
        assert_eq!(alpha, vec![1.0]);
        assert!((means[0] - SQRT_2_OVER_PI).abs() < 1e-12);
    }

    #[test]
    fn partition_moments_two_bits() {
        let q = lloyd(2);
        let (alpha, means) = partition_moments(&q, 0.0);
        assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // alpha_1 = 2 Phi(t1) - 1.
        assert!((alpha[0] - (2.0 * cdf(q.thresholds()[0]) - 1.0)).abs() < 1e-12);
        assert!((alpha[0] - 0.6737178).abs() < 1e-4);
        // Fixed point: conditional means reproduce the levels.
        for (e, mu) in means.iter().zip(q.levels()) {
            assert!((e - mu).abs() < 1e-8);
        }
    }

    #[test]
    fn clean_channel_constants_one_bit() {
        let q = lloyd(1);
        let c = channel_constants(&q, &NoiseModel::AdditiveGaussian { sigma: 0.0 });
        assert!((c.lambda - 2.0 / std::f64::consts::PI).abs() < 1e-10);
        assert!((c.psi - SQRT_2_OVER_PI).abs() < 1e-10);
        assert!((c.omega - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn random_flip_breaks_down_at_three_quarters_for_two_bits() {
        let q = lloyd(2);
        let c = channel_constants(&q, &NoiseModel::RandomBinFlip { p: 0.75 });
        assert!(c.lambda.abs() < 1e-12, "lambda = {}", c.lambda);
        assert!(c.omega.is_infinite());
    }

    #[test]
    fn adversarial_flip_at_zero_probability_is_clean() {
        let q = lloyd(1);
        let clean = channel_constants(&q, &NoiseModel::AdditiveGaussian { sigma: 0.0 });
        let flip = channel_constants(&q, &NoiseModel::AdversarialBinFlip { p: 0.0 });
        assert!((clean.lambda - flip.lambda).abs() < 1e-14);
        assert!((clean.psi - flip.psi).abs() < 1e-14);
    }

    #[test]
    fn distortion_closed_forms() {
        let q1 = lloyd(1);
        assert!((distortion(&q1, 1.0) - (1.0 - 2.0 / std::f64::consts::PI)).abs() < 1e-10);
        let q2 = lloyd(2);
        assert!((distortion(&q2, 1.0) - 0.11755).abs() < 1e-4);
    }

    #[test]
    fn distortion_plus_second_moment_is_one_at_fixed_point() {
        for b in 1..=4 {
            let q = lloyd(b);
            let (alpha, means) = partition_moments(&q, 0.0);
            let second: f64 = alpha.iter().zip(&means).map(|(a, e)| a * e * e).sum();
            assert!(
                (distortion(&q, 1.0) + second - 1.0).abs() < 1e-8,
                "identity failed at b = {b}"
            );
        }
    }

    #[test]
    fn lloyd_max_distortion_nonincreasing_per_alternating_step() {
        for b in 1..=4u32 {
            let k = 1usize << (b - 1);
            let mut levels: Vec<f64> = (1..=k)
                .map(|i| {
                    let quantile = (2 * i - 1) as f64 / (2 * k) as f64;
                    normal_quantile(0.5 * (1.0 + quantile)).unwrap()
                })
                .collect();
            let mut thresholds = midpoints(&levels);
            let mut prev =
                distortion(&Quantizer::new(thresholds.clone(), levels.clone()).unwrap(), 1.0);
            for _ in 0..50 {
                // Threshold step.
                thresholds = midpoints(&levels);
                let q = Quantizer::new(thresholds.clone(), levels.clone()).unwrap();
                let d_t = distortion(&q, 1.0);
                assert!(d_t <= prev + 1e-12, "threshold step increased distortion at b={b}");
                // Level step.
                let (_, cond_means) = partition_moments(&q, 0.0);
                levels = cond_means;
                let q = Quantizer::new(thresholds.clone(), levels.clone()).unwrap();
                let d_mu = distortion(&q, 1.0);
                assert!(d_mu <= d_t + 1e-12, "level step increased distortion at b={b}");
                prev = d_mu;
            }
        }
    }

    #[test]
    fn fixed_point_self_consistency() {
        let tol = 1e-9;
        for b in 2..=4 {
            let q = lloyd_max_design(b, 1.0, 1e-12, 2000).unwrap();
            let (_, means) = partition_moments(&q, 0.0);
            for (mu, e) in q.levels().iter().zip(&means) {
                assert!((mu - e).abs() <= tol);
            }
            for (t, mid) in q.thresholds().iter().zip(midpoints(q.levels())) {
                assert!((t - mid).abs() <= tol);
            }
        }
    }

    #[test]
    fn lambda_increases_with_bit_depth() {
        let lambdas: Vec<f64> = (1..=4)
            .map(|b| {
                channel_constants(&lloyd(b), &NoiseModel::AdditiveGaussian { sigma: 0.0 }).lambda
            })
            .collect();
        for w in lambdas.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(lambdas[3] < 1.0);
    }

    #[test]
    fn psi_squared_equals_lambda_at_conditional_mean_levels() {
        for b in 1..=4 {
            for sigma in [0.0f64, 1.0, 2.0] {
                // Levels set to the sigma-adapted conditional means.
                let base = lloyd_max_design(b, (1.0 + sigma * sigma).sqrt(), 1e-12, 2000).unwrap();
                let c = channel_constants(&base, &NoiseModel::AdditiveGaussian { sigma });
                assert!(
                    (c.psi * c.psi - c.lambda * (1.0 + sigma * sigma)).abs() < 1e-10,
                    "identity failed at b={b}, sigma={sigma}"
                );
            }
        }
    }

    #[test]
    fn cauchy_schwarz_optimality_of_conditional_means() {
        let mut stream = RandomStream::new(515);
        for b in [2u32, 3u32] {
            let k = 1usize << (b - 1);
            for _ in 0..50 {
                // Random strictly increasing positive thresholds.
                let mut ts: Vec<f64> = (0..k - 1).map(|_| 3.0 * stream.next_uniform()).collect();
                ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                ts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
                if ts.len() != k - 1 {
                    continue;
                }
                // Random levels interior to each bin.
                let mut mus = Vec::with_capacity(k);
                for i in 0..k {
                    let lo = if i == 0 { 0.0 } else { ts[i - 1] };
                    let hi = if i == k - 1 { ts[k - 2] + 2.0 } else { ts[i] };
                    mus.push(lo + (hi - lo) * (0.05 + 0.9 * stream.next_uniform()));
                }
                mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let q_random = match Quantizer::new(ts.clone(), mus) {
                    Ok(q) => q,
                    Err(_) => continue,
                };
                let (_, cond_means) = partition_moments(&q_random, 0.0);
                let q_star = Quantizer::new(ts, cond_means).unwrap();
                let model = NoiseModel::AdditiveGaussian { sigma: 0.0 };
                let omega_star = channel_constants(&q_star, &model).omega;
                let omega_rand = channel_constants(&q_random, &model).omega;
                assert!(
                    omega_star <= omega_rand + 1e-12,
                    "conditional means not optimal: {omega_star} > {omega_rand}"
                );
            }
        }
    }

    #[test]
    fn monte_carlo_agreement_with_lambda_and_psi() {
        let q = lloyd(2);
        let sigma = 1.0;
        let model = NoiseModel::AdditiveGaussian { sigma };
        let c = channel_constants(&q, &model);
        let mut stream = RandomStream::new(777);
        let n = 1_000_000usize;
        let mut sum_gy = 0.0;
        let mut sum_y2 = 0.0;
        let mut sum_gy2 = 0.0;
        for _ in 0..n {
            let g = stream.next_gaussian();
            let y = q.quantize(g + sigma * stream.next_gaussian());
            sum_gy += g * y;
            sum_y2 += y * y;
            sum_gy2 += (g * y) * (g * y);
        }
        let nf = n as f64;
        let lambda_hat = sum_gy / nf;
        let se_lambda = ((sum_gy2 / nf - lambda_hat * lambda_hat) / nf).sqrt();
        assert!(
            (lambda_hat - c.lambda).abs() < 3.0 * se_lambda,
            "lambda_hat = {lambda_hat}, lambda = {}",
            c.lambda
        );
        let psi2_hat = sum_y2 / nf;
        // Var(y^2) <= E[y^4] <= mu_K^4; a direct bound keeps it simple.
        let mu_top = q.levels()[1];
        let se_psi2 = (mu_top.powi(4) / nf).sqrt();
        assert!((psi2_hat - c.psi * c.psi).abs() < 3.0 * se_psi2);
    }

    #[test]
    fn omega_optimal_known_values() {
        assert!((omega_optimal(1, 0.0).unwrap() - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-8);
        assert!((omega_optimal(2, 0.0).unwrap() - 1.0649).abs() < 1e-3);
        for sigma in [0.0, 1.0, 2.0] {
            let ratio = omega_optimal(1, sigma).unwrap() / omega_optimal(2, sigma).unwrap();
            assert!((ratio - 1.178).abs() < 1e-3, "ratio = {ratio} at sigma = {sigma}");
        }
    }

    #[test]
    fn omega_optimal_matches_adapted_design() {
        for b in [1u32, 2, 3] {
            for sigma in [0.0f64, 1.5] {
                let q = lloyd_max_design(b, (1.0 + sigma * sigma).sqrt(), DEFAULT_TOL, DEFAULT_MAX_ITER)
                    .unwrap();
                let omega = channel_constants(&q, &NoiseModel::AdditiveGaussian { sigma }).omega;
                assert!((omega - omega_optimal(b, sigma).unwrap()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn serialization_round_trips_exactly() {
        for b in 1..=4 {
            let q = lloyd(b);
            let text = q.serialize();
            let back = Quantizer::parse(&text).unwrap();
            assert_eq!(q, back);
        }
        assert!(Quantizer::parse("2;not-a-number;1,2").is_err());
        assert!(Quantizer::parse("nonsense").is_err());
    }

    #[test]
    fn constructor_rejects_invalid_shapes() {
        assert!(Quantizer::new(vec![], vec![0.5, 1.5, 2.5]).is_err()); // 3 levels
        assert!(Quantizer::new(vec![1.0], vec![1.2, 2.0]).is_err()); // mu_1 outside bin
        assert!(Quantizer::new(vec![-1.0], vec![0.5, 1.5]).is_err()); // negative threshold
        assert!(Quantizer::new(vec![1.0, 0.5], vec![0.2, 0.7, 1.2, 2.0]).is_err()); // not increasing
    }
}
