//! Maximum-likelihood estimation of the signal norm `psi* = ||x*||_2`
//! (and, jointly, the noise level) from quantized observations.
//!
//! Noiseless case: the bin counts are multinomial with cell probabilities
//! `2(Phi(t_k/psi) - Phi(t_{k-1}/psi))`; for `K = 2` the MLE is the
//! closed form `t_1 / Phi^{-1}(0.5 (1 + m_1/m))`, for `K >= 3` a golden
//! section maximizes the one-dimensional log-likelihood. One-bit
//! observations carry no scale information at all.
//!
//! Noisy case: given linear predictions `z_i = <a_i, x_u>` and the bin
//! interval of each observation, the joint likelihood in `(psi, sigma)`
//! is maximized by coordinate descent with golden-section line searches,
//! after a coarse grid scan. When some `psi` puts every `psi z_i` inside
//! its interval the likelihood attains one with `sigma = 0` (perfect
//! separation) and that case is reported directly.

use crate::quantizer::Quantizer;
use crate::stat::special::{normal_interval_prob, normal_pdf, normal_quantile};

/// Pre-quantization interval of one observation; outermost bins are
/// unbounded (`-inf` / `+inf`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinInterval {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleEstimate {
    pub psi_hat: f64,
    /// Joint-MLE noise estimate; `None` for the noiseless-model MLE.
    pub sigma_hat: Option<f64>,
    pub converged: bool,
    pub log_likelihood: f64,
}

impl ScaleEstimate {
    /// CSV row `psi_hat,sigma_hat,converged,log_likelihood`.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            crate::channels::fmt_real(self.psi_hat),
            self.sigma_hat.map_or(String::new(), |s| crate::channels::fmt_real(s)),
            self.converged,
            crate::channels::fmt_real(self.log_likelihood)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScaleError {
    /// One-bit quantizers admit no scale information.
    Unidentifiable,
    /// All counts in a boundary bin; the MLE sits at 0 or infinity.
    DegenerateCounts,
    InvalidLevel { index: usize, value: f64 },
    InvalidParameter(&'static str),
    CountMismatch { expected: usize, got: usize },
}

impl std::fmt::Display for ScaleError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScaleError::Unidentifiable => {
                write!(f, "scale is unidentifiable from one-bit observations")
            }
            ScaleError::DegenerateCounts => {
                write!(f, "degenerate bin counts: likelihood has no interior maximum")
            }
            ScaleError::InvalidLevel { index, value } => {
                write!(f, "observation {index} = {value} is not a codeword")
            }
            ScaleError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            ScaleError::CountMismatch { expected, got } => {
                write!(f, "expected {expected} bin counts, got {got}")
            }
        }
    }
}

impl std::error::Error for ScaleError {}

/// Golden-section maximizer of a unimodal function on `[lo, hi]`.
///
/// Returns `(argmax, max)` once the bracket width drops below `tol`
/// (absolute) or after `max_iter` shrink steps.
pub fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maps each observation to its pre-quantization interval: `+mu_k` comes
/// from `[t_{k-1}, t_k]` and `-mu_k` from `[-t_k, -t_{k-1}]`.
pub fn bin_intervals(y: &[f64], q: &Quantizer) -> Result<Vec<BinInterval>, ScaleError> {
    let k = q.bin_count();
    y.iter()
        .enumerate()
        .map(|(i, &value)| {
            let (negative, idx) = q
                .codeword_index(value)
                .ok_or(ScaleError::InvalidLevel { index: i, value })?;
            let lo = if idx == 0 { 0.0 } else { q.thresholds()[idx - 1] };
            let hi = if idx == k - 1 {
                f64::INFINITY
            } else {
                q.thresholds()[idx]
            };
            Ok(if negative {
                BinInterval {
                    lower: -hi,
                    upper: -lo,
                }
            } else {
                BinInterval {
                    lower: lo,
                    upper: hi,
                }
            })
        })
        .collect()
}

/// Per-bin counts `m_k = |{i : |y_i| = mu_k}|`.
pub fn bin_counts(y: &[f64], q: &Quantizer) -> Result<Vec<u64>, ScaleError> {
    let mut counts = vec![0u64; q.bin_count()];
    for (i, &value) in y.iter().enumerate() {
        let (_, idx) = q
            .codeword_index(value)
            .ok_or(ScaleError::InvalidLevel { index: i, value })?;
        counts[idx] += 1;
    }
    Ok(counts)
}

/// Noiseless-model MLE of the scale from bin counts.
pub fn scale_mle_noiseless(counts: &[u64], q: &Quantizer) -> Result<ScaleEstimate, ScaleError> {
    let k = q.bin_count();
    if counts.len() != k {
        return Err(ScaleError::CountMismatch {
            expected: k,
            got: counts.len(),
        });
    }
    if k == 1 {
        return Err(ScaleError::Unidentifiable);
    }
    let m: u64 = counts.iter().sum();
    if m == 0 {
        return Err(ScaleError::InvalidParameter("total count must be positive"));
    }
    let log_lik = |psi: f64| noiseless_log_likelihood(counts, q, psi);
    if k == 2 {
        let m1 = counts[0];
        if m1 == 0 || m1 == m {
            return Err(ScaleError::DegenerateCounts);
        }
        let t1 = q.thresholds()[0];
        let quantile_arg = 0.5 * (1.0 + m1 as f64 / m as f64);
        let psi = t1
            / normal_quantile(quantile_arg)
                .map_err(|_| ScaleError::DegenerateCounts)?;
        return Ok(ScaleEstimate {
            psi_hat: psi,
            sigma_hat: None,
            converged: true,
            log_likelihood: log_lik(psi),
        });
    }
    // K >= 3: one-dimensional search. All the mass in a boundary bin
    // drives the maximizer to 0 or infinity.
    if counts[0] == m || counts[k - 1] == m {
        return Err(ScaleError::DegenerateCounts);
    }
    let scale = bin_counts_scale(counts, q);
    let (psi, value) = golden_max(log_lik, 1e-8 * scale, 10.0 * scale, 1e-9 * scale, 400);
    Ok(ScaleEstimate {
        psi_hat: psi,
        sigma_hat: None,
        converged: true,
        log_likelihood: value,
    })
}

fn noiseless_log_likelihood(counts: &[u64], q: &Quantizer, psi: f64) -> f64 {
    if !(psi > 0.0) {
        return f64::NEG_INFINITY;
    }
    let k = q.bin_count();
    let mut ll = 0.0;
    for (idx, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let lo = if idx == 0 { 0.0 } else { q.thresholds()[idx - 1] / psi };
        let hi = if idx == k - 1 {
            f64::INFINITY
        } else {
            q.thresholds()[idx] / psi
        };
        let prob = 2.0 * normal_interval_prob(lo, hi);
        ll += count as f64 * prob.max(1e-300).ln();
    }
    ll
}

/// Root-mean-square of the bin midpoints weighted by counts; the top bin
/// uses 1.5 times its lower edge as a finite stand-in.
fn bin_counts_scale(counts: &[u64], q: &Quantizer) -> f64 {
    let k = q.bin_count();
    let m: u64 = counts.iter().sum();
    let mut sum = 0.0;
    for (idx, &count) in counts.iter().enumerate() {
        let mid = bin_midpoint(
            if idx == 0 { 0.0 } else { q.thresholds()[idx - 1] },
            if idx == k - 1 { f64::INFINITY } else { q.thresholds()[idx] },
        );
        sum += count as f64 * mid * mid;
    }
    (sum / m as f64).sqrt().max(f64::MIN_POSITIVE)
}

fn bin_midpoint(lo: f64, hi: f64) -> f64 {
    if hi.is_finite() {
        0.5 * (lo + hi)
    } else if lo > 0.0 {
        1.5 * lo
    } else {
        1.0
    }
}

/// Joint log-likelihood of `(psi, sigma)` given linear predictions `z`
/// and observation intervals. Interval probabilities are evaluated on
/// the complementary side in far tails, so the terms stay finite well
/// past six sigmas.
pub fn noisy_log_likelihood(z: &[f64], intervals: &[BinInterval], psi: f64, sigma: f64) -> f64 {
    debug_assert_eq!(z.len(), intervals.len());
    if !(sigma > 0.0) || !(psi >= 0.0) {
        return f64::NEG_INFINITY;
    }
    let mut ll = 0.0;
    for (zi, interval) in z.iter().zip(intervals) {
        let center = psi * zi;
        let a = (interval.lower - center) / sigma;
        let b = (interval.upper - center) / sigma;
        let prob = normal_interval_prob(a, b);
        ll += prob.max(1e-300).ln();
    }
    ll
}

const NOISY_MAX_SWEEPS: usize = 200;
const NOISY_IMPROVEMENT_TOL: f64 = 1e-10;
const SIGMA_FLOOR: f64 = 1e-6;

/// Joint MLE of `(psi, sigma)` by coordinate descent.
///
/// `z` holds the linear predictions `<a_i, x_u>` (the plug-in direction
/// in practice) and `init_sigma` seeds the noise coordinate, typically
/// with the noiseless-model estimate. Perfect separation is detected
/// upfront by intersecting the feasible `psi` intervals.
pub fn scale_mle_noisy(
    z: &[f64],
    intervals: &[BinInterval],
    init_sigma: f64,
) -> Result<ScaleEstimate, ScaleError> {
    if z.len() != intervals.len() {
        return Err(ScaleError::CountMismatch {
            expected: intervals.len(),
            got: z.len(),
        });
    }
    if z.is_empty() {
        return Err(ScaleError::InvalidParameter("no observations"));
    }
    if !z.iter().all(|v| v.is_finite()) {
        return Err(ScaleError::InvalidParameter("predictions must be finite"));
    }
    for iv in intervals {
        if !(iv.lower < iv.upper) {
            return Err(ScaleError::InvalidParameter("intervals must satisfy lower < upper"));
        }
    }
    if !(init_sigma > 0.0) || !init_sigma.is_finite() {
        return Err(ScaleError::InvalidParameter("init_sigma must be positive"));
    }

    // Flat likelihood in psi: no predictor information at all.
    if z.iter().all(|&v| v == 0.0) {
        let scale = interval_scale(intervals);
        let (sigma, value) = golden_max(
            |s| noisy_log_likelihood(z, intervals, 0.0, s),
            SIGMA_FLOOR,
            10.0 * scale,
            1e-9 * scale,
            400,
        );
        return Ok(ScaleEstimate {
            psi_hat: 0.0,
            sigma_hat: Some(sigma),
            converged: false,
            log_likelihood: value,
        });
    }

    if let Some(psi) = separating_scale(z, intervals) {
        return Ok(ScaleEstimate {
            psi_hat: psi,
            sigma_hat: Some(0.0),
            converged: true,
            log_likelihood: 0.0,
        });
    }

    let scale = interval_scale(intervals);
    let psi_hi = 10.0 * scale;
    let sigma_hi = 10.0 * scale;

    // Coarse 20x20 scan locates the basin; the start (psi = 0, sigma =
    // noiseless MLE) joins the candidate set.
    let mut best_psi = 0.0;
    let mut best_sigma = init_sigma.min(sigma_hi).max(SIGMA_FLOOR);
    let mut best_value = noisy_log_likelihood(z, intervals, best_psi, best_sigma);
    for i in 0..20 {
        let psi = psi_hi * i as f64 / 19.0;
        for j in 0..20 {
            let sigma = SIGMA_FLOOR + (sigma_hi - SIGMA_FLOOR) * j as f64 / 19.0;
            let value = noisy_log_likelihood(z, intervals, psi, sigma);
            if value > best_value {
                best_value = value;
                best_psi = psi;
                best_sigma = sigma;
            }
        }
    }

    let mut psi = best_psi;
    let mut sigma = best_sigma;
    let mut objective = best_value;
    let mut converged = false;
    for _sweep in 0..NOISY_MAX_SWEEPS {
        let (new_psi, _) = golden_max(
            |p| noisy_log_likelihood(z, intervals, p, sigma),
            0.0,
            psi_hi,
            1e-10 * scale,
            400,
        );
        psi = new_psi;
        let (new_sigma, value) = golden_max(
            |s| noisy_log_likelihood(z, intervals, psi, s),
            SIGMA_FLOOR,
            sigma_hi,
            1e-10 * scale,
            400,
        );
        sigma = new_sigma;
        debug_assert!(
            value >= objective - 1e-7 * (1.0 + objective.abs()),
            "coordinate descent objective decreased: {objective} -> {value}"
        );
        if value - objective < NOISY_IMPROVEMENT_TOL {
            objective = value.max(objective);
            converged = true;
            break;
        }
        objective = value;
    }

    Ok(ScaleEstimate {
        psi_hat: psi,
        sigma_hat: Some(sigma),
        converged,
        log_likelihood: objective,
    })
}

/// Intersects the feasible `psi >= 0` intervals `{psi : psi z_i in
/// [l_i, u_i]}`; a nonempty intersection means perfect separation.
fn separating_scale(z: &[f64], intervals: &[BinInterval]) -> Option<f64> {
    let mut lo = 0.0f64;
    let mut hi = f64::INFINITY;
    for (&zi, iv) in z.iter().zip(intervals) {
        if zi == 0.0 {
            if iv.lower > 0.0 || iv.upper < 0.0 {
                return None;
            }
            continue;
        }
        let (a, b) = if zi > 0.0 {
            (iv.lower / zi, iv.upper / zi)
        } else {
            (iv.upper / zi, iv.lower / zi)
        };
        lo = lo.max(a);
        hi = hi.min(b);
        if lo > hi {
            return None;
        }
    }
    Some(if hi.is_finite() { 0.5 * (lo + hi) } else { lo })
}

fn interval_scale(intervals: &[BinInterval]) -> f64 {
    let sum: f64 = intervals
        .iter()
        .map(|iv| {
            let mid = if iv.lower.is_finite() && iv.upper.is_finite() {
                0.5 * (iv.lower + iv.upper)
            } else if iv.upper.is_finite() {
                1.5 * iv.upper.min(-f64::MIN_POSITIVE)
            } else if iv.lower.is_finite() {
                1.5 * iv.lower.max(f64::MIN_POSITIVE)
            } else {
                1.0
            };
            mid * mid
        })
        .sum();
    (sum / intervals.len() as f64).sqrt().max(1e-6)
}

/// Two-sided tail bound `2 exp(-c m eps^2)` on the relative error of the
/// two-bit closed-form MLE, with `c = 2 (phi'(t1/psi*))^2` and
/// `phi'(x) = -x phi(x)`.
pub fn prop1_tail_bound(t1: f64, psi_star: f64, m: u64, eps: f64) -> f64 {
    assert!(psi_star > 0.0, "psi_star must be positive");
    assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
    let x = t1 / psi_star;
    let dphi = -x * normal_pdf(x);
    let c = 2.0 * dphi * dphi;
    2.0 * (-c * m as f64 * eps * eps).exp()
}

/// The combined estimate `psi_hat * x_hat`.
pub fn combine_direction_scale(x_hat: &[f64], psi_hat: f64) -> Vec<f64> {
    assert!(psi_hat >= 0.0, "psi_hat must be nonnegative");
    x_hat.iter().map(|v| v * psi_hat).collect()
}
