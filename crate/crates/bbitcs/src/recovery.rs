//! Measurement simulation and the canonical linear estimator.
//!
//! The estimator maximizes `<eta, x>` over `C = K ∩ B_2^n` with
//! `eta = A^T y / m`; every supported class admits an exact optimizer
//! (hard thresholding, group selection, a dynamic program over
//! contiguous partitions, truncated SVD, or soft thresholding with a
//! bisected threshold for the l1-ball). The projected-marginal variant
//! divides the Euclidean projection onto `lambda K` by `lambda` and
//! agrees with the canonical estimator up to scale on cone classes.

use crate::channels::ChannelError;
use crate::quantizer::Quantizer;
use crate::signals::{GroundTruthSignal, SignalClass};
use crate::stat::linalg::{norm2, spd_solve, spd_sqrt, truncated_svd, Matrix};
use crate::stat::rng::RandomStream;
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Debug, Clone)]
pub enum Ensemble {
    Isotropic,
    Anisotropic { covariance: Matrix, sqrt: Matrix },
}

impl Ensemble {
    /// Validates positive definiteness and precomputes the symmetric
    /// square root used to color the rows.
    pub fn anisotropic(covariance: Matrix) -> Result<Ensemble, RecoveryError> {
        let sqrt = spd_sqrt(&covariance).map_err(|_| RecoveryError::NotPositiveDefinite)?;
        Ok(Ensemble::Anisotropic { covariance, sqrt })
    }
}

#[derive(Debug, Clone)]
pub struct MeasurementSet {
    design: Matrix,
    observations: Vec<f64>,
    quantizer: Quantizer,
    ensemble: Ensemble,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecoveryError {
    DimensionMismatch { expected: usize, got: usize },
    NotPositiveDefinite,
    NotACone,
    InvalidParameter(&'static str),
    InvalidObservation { index: usize, value: f64 },
    Io(String),
}

impl std::fmt::Display for RecoveryError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RecoveryError::DimensionMismatch { expected, got } => {
                write!(f, "expected length {expected}, got {got}")
            }
            RecoveryError::NotPositiveDefinite => {
                write!(f, "covariance must be symmetric positive definite")
            }
            RecoveryError::NotACone => write!(f, "operation requires a cone class"),
            RecoveryError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            RecoveryError::InvalidObservation { index, value } => {
                write!(f, "observation {index} = {value} is not a codeword")
            }
            RecoveryError::Io(msg) => write!(f, "i/o failure: {msg}"),
        }
    }
}

impl std::error::Error for RecoveryError {}

impl From<ChannelError> for RecoveryError {
    fn from(e: ChannelError) -> Self {
        match e {
            ChannelError::InvalidLevel { index, value } => {
                RecoveryError::InvalidObservation { index, value }
            }
            _ => RecoveryError::InvalidParameter("channel error"),
        }
    }
}

impl MeasurementSet {
    /// Wraps an existing design/observation pair, checking that every
    /// observation is a codeword of the quantizer.
    pub fn new(
        design: Matrix,
        observations: Vec<f64>,
        quantizer: Quantizer,
        ensemble: Ensemble,
    ) -> Result<Self, RecoveryError> {
        if observations.len() != design.rows() {
            return Err(RecoveryError::DimensionMismatch {
                expected: design.rows(),
                got: observations.len(),
            });
        }
        for (i, &y) in observations.iter().enumerate() {
            if quantizer.codeword_index(y).is_none() {
                return Err(RecoveryError::InvalidObservation { index: i, value: y });
            }
        }
        Ok(MeasurementSet {
            design,
            observations,
            quantizer,
            ensemble,
        })
    }

    pub fn design(&self) -> &Matrix {
        &self.design
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quantizer
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    /// Replaces the observation vector (used after channel corruption),
    /// re-validating codebook membership.
    pub fn with_observations(self, observations: Vec<f64>) -> Result<Self, RecoveryError> {
        MeasurementSet::new(self.design, observations, self.quantizer, self.ensemble)
    }

    /// Writes the design and observations as a CSV pair with
    /// 17-significant-digit reals (exact double round trip).
    pub fn export_csv(&self, a_path: &Path, y_path: &Path) -> Result<(), RecoveryError> {
        let io_err = |e: std::io::Error, p: &Path| RecoveryError::Io(format!("{}: {e}", p.display()));
        let mut a_file =
            std::io::BufWriter::new(std::fs::File::create(a_path).map_err(|e| io_err(e, a_path))?);
        for i in 0..self.design.rows() {
            let line = self
                .design
                .row(i)
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(a_file, "{line}").map_err(|e| io_err(e, a_path))?;
        }
        a_file.flush().map_err(|e| io_err(e, a_path))?;
        let mut y_file =
            std::io::BufWriter::new(std::fs::File::create(y_path).map_err(|e| io_err(e, y_path))?);
        for y in &self.observations {
            writeln!(y_file, "{y:.16e}").map_err(|e| io_err(e, y_path))?;
        }
        y_file.flush().map_err(|e| io_err(e, y_path))?;
        Ok(())
    }

    /// Reads a CSV pair written by [`MeasurementSet::export_csv`];
    /// the ensemble is taken to be isotropic.
    pub fn import_csv(
        a_path: &Path,
        y_path: &Path,
        quantizer: Quantizer,
    ) -> Result<Self, RecoveryError> {
        let io_err = |e: std::io::Error, p: &Path| RecoveryError::Io(format!("{}: {e}", p.display()));
        let parse_err = |p: &Path| RecoveryError::Io(format!("{}: malformed real", p.display()));
        let a_file = std::fs::File::open(a_path).map_err(|e| io_err(e, a_path))?;
        let mut rows = 0usize;
        let mut cols = 0usize;
        let mut data = Vec::new();
        for line in std::io::BufReader::new(a_file).lines() {
            let line = line.map_err(|e| io_err(e, a_path))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut this_row = 0usize;
            for tok in line.split(',') {
                data.push(tok.trim().parse::<f64>().map_err(|_| parse_err(a_path))?);
                this_row += 1;
            }
            if rows == 0 {
                cols = this_row;
            } else if this_row != cols {
                return Err(RecoveryError::Io(format!(
                    "{}: ragged rows",
                    a_path.display()
                )));
            }
            rows += 1;
        }
        let design = Matrix::from_vec(rows, cols, data)
            .map_err(|e| RecoveryError::Io(format!("{}: {e}", a_path.display())))?;
        let y_file = std::fs::File::open(y_path).map_err(|e| io_err(e, y_path))?;
        let mut observations = Vec::new();
        for line in std::io::BufReader::new(y_file).lines() {
            let line = line.map_err(|e| io_err(e, y_path))?;
            if line.trim().is_empty() {
                continue;
            }
            observations.push(line.trim().parse::<f64>().map_err(|_| parse_err(y_path))?);
        }
        MeasurementSet::new(design, observations, quantizer, Ensemble::Isotropic)
    }
}

/// Simulates `y_i = Q(<a_i, x*> + sigma eps_i)`.
///
/// Rows are i.i.d. standard Gaussian (isotropic) or colored by the
/// ensemble's symmetric square root. Draw order: all `m x n` design
/// entries row-major, then the `m` noise draws (skipped entirely when
/// `sigma = 0`).
pub fn simulate_measurements(
    signal: &GroundTruthSignal,
    m: usize,
    sigma: f64,
    quantizer: &Quantizer,
    ensemble: Ensemble,
    stream: &mut RandomStream,
) -> Result<MeasurementSet, RecoveryError> {
    if m == 0 {
        return Err(RecoveryError::InvalidParameter("m must be at least 1"));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(RecoveryError::InvalidParameter("sigma must be nonnegative"));
    }
    let n = signal.values().len();
    if let Ensemble::Anisotropic { covariance, .. } = &ensemble {
        if covariance.rows() != n {
            return Err(RecoveryError::DimensionMismatch {
                expected: n,
                got: covariance.rows(),
            });
        }
    }
    let mut design = Matrix::zeros(m, n);
    for i in 0..m {
        let row = design.row_mut(i);
        stream.fill_gaussian(row);
        if let Ensemble::Anisotropic { sqrt, .. } = &ensemble {
            let colored = sqrt.matvec(row);
            row.copy_from_slice(&colored);
        }
    }
    let mut z = design.matvec(signal.values());
    if sigma > 0.0 {
        for zi in z.iter_mut() {
            *zi += sigma * stream.next_gaussian();
        }
    }
    let observations: Vec<f64> = z.iter().map(|&v| quantizer.quantize(v)).collect();
    MeasurementSet::new(design, observations, quantizer.clone(), ensemble)
}

/// The marginal statistic `eta = A^T y / m`.
pub fn marginal_statistic(set: &MeasurementSet) -> Vec<f64> {
    let m = set.design().rows() as f64;
    set.design()
        .transpose_matvec(set.observations())
        .into_iter()
        .map(|v| v / m)
        .collect()
}

/// Unit-norm (or zero, when the argmax is degenerate) direction estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionEstimate {
    values: Vec<f64>,
    degenerate: bool,
}

impl DirectionEstimate {
    fn from_unnormalized(mut values: Vec<f64>) -> Self {
        let norm = norm2(&values);
        if norm > 0.0 {
            for v in values.iter_mut() {
                *v /= norm;
            }
            DirectionEstimate {
                values,
                degenerate: false,
            }
        } else {
            DirectionEstimate {
                values,
                degenerate: true,
            }
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when the argmax was non-unique and the zero vector was
    /// returned instead of an arbitrary direction.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// Exact maximizer of `<eta, x>` over `C = K ∩ B_2^n`.
pub fn recover_direction(
    eta: &[f64],
    class: &SignalClass,
) -> Result<DirectionEstimate, RecoveryError> {
    if eta.len() != class.ambient_dim() {
        return Err(RecoveryError::DimensionMismatch {
            expected: class.ambient_dim(),
            got: eta.len(),
        });
    }
    match class {
        SignalClass::Sparse { s, .. } => {
            Ok(DirectionEstimate::from_unnormalized(hard_threshold(eta, *s)))
        }
        SignalClass::GroupSparse { groups, s } => Ok(DirectionEstimate::from_unnormalized(
            keep_top_groups(eta, groups, *s),
        )),
        SignalClass::FusedSparse { s, .. } => {
            let (_, partition) = best_fused_partition(eta, *s);
            let mut x = vec![0.0; eta.len()];
            let mut start = 0usize;
            for &end in &partition {
                let sum: f64 = eta[start..end].iter().sum();
                let value = sum / (end - start) as f64;
                for v in &mut x[start..end] {
                    *v = value;
                }
                start = end;
            }
            Ok(DirectionEstimate::from_unnormalized(x))
        }
        SignalClass::LowRank { rows, cols, rank } => {
            let x = low_rank_projection(eta, *rows, *cols, *rank);
            Ok(DirectionEstimate::from_unnormalized(x))
        }
        SignalClass::L1Ball { radius, .. } => Ok(l1_ball_maximizer(eta, *radius)),
    }
}

/// Anisotropic variant: maximizes `<x, Sigma^{-1} eta>` over the same
/// constraint set.
pub fn recover_direction_anisotropic(
    eta: &[f64],
    covariance: &Matrix,
    class: &SignalClass,
) -> Result<DirectionEstimate, RecoveryError> {
    if covariance.rows() != eta.len() || covariance.cols() != eta.len() {
        return Err(RecoveryError::DimensionMismatch {
            expected: eta.len(),
            got: covariance.rows(),
        });
    }
    let whitened = spd_solve(covariance, eta).map_err(|_| RecoveryError::NotPositiveDefinite)?;
    recover_direction(&whitened, class)
}

/// Projected marginal estimator `lambda^{-1} Pi_{lambda K}(eta)` for cone
/// classes; for sparsity this is plain hard thresholding without
/// normalization.
pub fn projected_marginal(
    eta: &[f64],
    class: &SignalClass,
    lambda: f64,
) -> Result<Vec<f64>, RecoveryError> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(RecoveryError::InvalidParameter("lambda must be positive"));
    }
    if !class.is_cone() {
        return Err(RecoveryError::NotACone);
    }
    if eta.len() != class.ambient_dim() {
        return Err(RecoveryError::DimensionMismatch {
            expected: class.ambient_dim(),
            got: eta.len(),
        });
    }
    let projected = match class {
        SignalClass::Sparse { s, .. } => hard_threshold(eta, *s),
        SignalClass::GroupSparse { groups, s } => keep_top_groups(eta, groups, *s),
        SignalClass::FusedSparse { s, .. } => {
            let (_, partition) = best_fused_partition(eta, *s);
            let mut x = vec![0.0; eta.len()];
            let mut start = 0usize;
            for &end in &partition {
                let mean: f64 = eta[start..end].iter().sum::<f64>() / (end - start) as f64;
                for v in &mut x[start..end] {
                    *v = mean;
                }
                start = end;
            }
            x
        }
        SignalClass::LowRank { rows, cols, rank } => low_rank_projection(eta, *rows, *cols, *rank),
        SignalClass::L1Ball { .. } => unreachable!("filtered by is_cone"),
    };
    Ok(projected.into_iter().map(|v| v / lambda).collect())
}

/// Euclidean distance between two equal-length vectors.
pub fn l2_error(estimate: &[f64], truth: &[f64]) -> Result<f64, RecoveryError> {
    if estimate.len() != truth.len() {
        return Err(RecoveryError::DimensionMismatch {
            expected: truth.len(),
            got: estimate.len(),
        });
    }
    Ok(estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Keeps the `s` largest-|.| entries; ties keep the lower index.
fn hard_threshold(eta: &[f64], s: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..eta.len()).collect();
    order.sort_by(|&a, &b| eta[b].abs().partial_cmp(&eta[a].abs()).unwrap());
    let mut x = vec![0.0; eta.len()];
    for &j in order.iter().take(s) {
        x[j] = eta[j];
    }
    x
}

/// Keeps the `s` groups with the largest Euclidean norm; ties keep the
/// lower group index.
fn keep_top_groups(eta: &[f64], groups: &[Vec<usize>], s: usize) -> Vec<f64> {
    let norms: Vec<f64> = groups
        .iter()
        .map(|g| g.iter().map(|&i| eta[i] * eta[i]).sum::<f64>())
        .collect();
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());
    let mut x = vec![0.0; eta.len()];
    for &g in order.iter().take(s) {
        for &i in &groups[g] {
            x[i] = eta[i];
        }
    }
    x
}

/// Dynamic program over contiguous partitions into at most `s + 1`
/// blocks maximizing `sum_l S_l^2 / n_l`; returns the objective and the
/// block end indices. O(n^2 s) transitions via prefix sums.
fn best_fused_partition(eta: &[f64], s: usize) -> (f64, Vec<usize>) {
    let n = eta.len();
    let max_blocks = (s + 1).min(n);
    let mut prefix = vec![0.0; n + 1];
    for (i, &v) in eta.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    let cost = |j: usize, i: usize| {
        let sum = prefix[i] - prefix[j];
        sum * sum / (i - j) as f64
    };
    // best[k][i]: maximum objective covering eta[..i] with exactly k+1 blocks.
    let mut best = vec![vec![f64::NEG_INFINITY; n + 1]; max_blocks];
    let mut parent = vec![vec![0usize; n + 1]; max_blocks];
    for i in 1..=n {
        best[0][i] = cost(0, i);
    }
    for k in 1..max_blocks {
        for i in (k + 1)..=n {
            let mut best_val = f64::NEG_INFINITY;
            let mut best_j = k;
            for j in k..i {
                let val = best[k - 1][j] + cost(j, i);
                if val > best_val {
                    best_val = val;
                    best_j = j;
                }
            }
            best[k][i] = best_val;
            parent[k][i] = best_j;
        }
    }
    let mut best_k = 0usize;
    for k in 1..max_blocks {
        if best[k][n] > best[best_k][n] {
            best_k = k;
        }
    }
    let mut ends = Vec::with_capacity(best_k + 1);
    let mut i = n;
    let mut k = best_k;
    loop {
        ends.push(i);
        if k == 0 {
            break;
        }
        i = parent[k][i];
        k -= 1;
    }
    ends.reverse();
    (best[best_k][n], ends)
}

fn low_rank_projection(eta: &[f64], rows: usize, cols: usize, rank: usize) -> Vec<f64> {
    if eta.iter().all(|&v| v == 0.0) {
        return vec![0.0; eta.len()];
    }
    let m = Matrix::from_vec(rows, cols, eta.to_vec()).expect("validated dimensions");
    let svd = truncated_svd(&m, rank).expect("rank validated by constructor");
    let recon = svd.reconstruct();
    recon.entries().to_vec()
}

/// Maximizes `<eta, x>` over `||x||_1 <= r`, `||x||_2 <= 1` through the
/// soft-threshold family `x(theta) ∝ sign(eta) max(|eta| - theta, 0)`;
/// `theta` is bisected until the l1 constraint is active (and is zero
/// when it is slack).
fn l1_ball_maximizer(eta: &[f64], radius: f64) -> DirectionEstimate {
    let norm = norm2(eta);
    if norm == 0.0 {
        return DirectionEstimate {
            values: vec![0.0; eta.len()],
            degenerate: true,
        };
    }
    let soft = |theta: f64| -> Vec<f64> {
        eta.iter()
            .map(|&v| v.signum() * (v.abs() - theta).max(0.0))
            .collect()
    };
    let l1_of_unit = |x: &[f64]| -> f64 {
        let l2 = norm2(x);
        if l2 == 0.0 {
            return 0.0;
        }
        x.iter().map(|v| v.abs()).sum::<f64>() / l2
    };
    let unconstrained: Vec<f64> = eta.iter().map(|&v| v / norm).collect();
    if l1_of_unit(&unconstrained) <= radius * (1.0 + 1e-12) {
        return DirectionEstimate {
            values: unconstrained,
            degenerate: false,
        };
    }
    let mut lo = 0.0;
    let mut hi = eta.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut theta = 0.0;
    for _ in 0..200 {
        theta = 0.5 * (lo + hi);
        let l1 = l1_of_unit(&soft(theta));
        if (l1 - radius).abs() <= 1e-10 * radius {
            break;
        }
        if l1 > radius {
            lo = theta;
        } else {
            hi = theta;
        }
    }
    DirectionEstimate::from_unnormalized(soft(theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::NoiseModel;
    use crate::quantizer::{channel_constants, lloyd_max_design, DEFAULT_MAX_ITER, DEFAULT_TOL};
    use crate::signals::sample_signal;
    use crate::stat::linalg::dot;

    fn lloyd(b: u32) -> Quantizer {
        lloyd_max_design(b, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap()
    }

    #[test]
    fn noiseless_one_bit_measurements_are_signs() {
        let class = SignalClass::sparse(2, 6).unwrap();
        let mut stream = RandomStream::new(101);
        let signal = sample_signal(&class, 1.0, 50, 0.6, &mut stream).unwrap();
        let q = lloyd(1);
        let set =
            simulate_measurements(&signal, 50, 0.0, &q, Ensemble::Isotropic, &mut stream).unwrap();
        let mu = q.levels()[0];
        for (row_idx, &y) in set.observations().iter().enumerate() {
            let z = dot(set.design().row(row_idx), signal.values());
            let expected = if z < 0.0 { -mu } else { mu };
            assert_eq!(y, expected);
        }
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let class = SignalClass::sparse(2, 5).unwrap();
        let run = || {
            let mut stream = RandomStream::new(55);
            let signal = sample_signal(&class, 1.0, 40, 0.6, &mut stream).unwrap();
            let q = lloyd(2);
            let set = simulate_measurements(&signal, 40, 1.0, &q, Ensemble::Isotropic, &mut stream)
                .unwrap();
            (set.design().entries().to_vec(), set.observations().to_vec())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn isotropic_rows_have_identity_covariance() {
        let n = 5usize;
        let m = 100_000usize;
        let class = SignalClass::sparse(1, n).unwrap();
        let mut stream = RandomStream::new(77);
        let signal = sample_signal(&class, 1.0, m, 0.6, &mut stream).unwrap();
        let q = lloyd(1);
        let set =
            simulate_measurements(&signal, m, 0.0, &q, Ensemble::Isotropic, &mut stream).unwrap();
        let mut cov = vec![vec![0.0f64; n]; n];
        for i in 0..m {
            let row = set.design().row(i);
            for a in 0..n {
                for b in 0..n {
                    cov[a][b] += row[a] * row[b];
                }
            }
        }
        let mut frob2 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let target = if a == b { 1.0 } else { 0.0 };
                let diff = cov[a][b] / m as f64 - target;
                frob2 += diff * diff;
            }
        }
        assert!(frob2.sqrt() < 0.05, "Frobenius distance {}", frob2.sqrt());
    }

    #[test]
    fn marginal_statistic_direct_arithmetic() {
        let q = Quantizer::new(vec![3.0], vec![2.0, 4.0]).unwrap();
        let design = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let set = MeasurementSet::new(design, vec![2.0, 4.0], q, Ensemble::Isotropic).unwrap();
        assert_eq!(marginal_statistic(&set), vec![1.0, 2.0]);
    }

    #[test]
    fn marginal_zero_column_gives_zero_coordinate() {
        let q = Quantizer::new(vec![], vec![1.0]).unwrap();
        let design = Matrix::from_vec(2, 2, vec![1.0, 0.0, -2.0, 0.0]).unwrap();
        let set = MeasurementSet::new(design, vec![1.0, 1.0], q, Ensemble::Isotropic).unwrap();
        let eta = marginal_statistic(&set);
        assert_eq!(eta[1], 0.0);
    }

    #[test]
    fn sparse_recovery_keeps_largest_entries() {
        let class = SignalClass::sparse(2, 3).unwrap();
        let est = recover_direction(&[3.0, -1.0, 2.0], &class).unwrap();
        let scale = 13f64.sqrt();
        let expected = [3.0 / scale, 0.0, 2.0 / scale];
        for (a, b) in est.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(!est.is_degenerate());
    }

    #[test]
    fn sparse_ties_keep_lower_index() {
        let class = SignalClass::sparse(1, 3).unwrap();
        let est = recover_direction(&[2.0, -2.0, 1.0], &class).unwrap();
        assert_eq!(est.values(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn fused_recovery_matches_block_oracle() {
        let class = SignalClass::fused_sparse(1, 4).unwrap();
        let est = recover_direction(&[1.0, 1.0, 5.0, 5.0], &class).unwrap();
        let scale = 52f64.sqrt();
        let expected = [1.0 / scale, 1.0 / scale, 5.0 / scale, 5.0 / scale];
        for (a, b) in est.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn group_recovery_selects_best_group() {
        let class = SignalClass::group_sparse(vec![vec![0, 1], vec![2, 3]], 1).unwrap();
        let est = recover_direction(&[1.0, 1.0, 2.0, 2.0], &class).unwrap();
        let scale = 8f64.sqrt();
        assert_eq!(est.values()[0], 0.0);
        assert!((est.values()[2] - 2.0 / scale).abs() < 1e-15);
    }

    #[test]
    fn zero_eta_is_flagged_degenerate() {
        for class in [
            SignalClass::sparse(2, 4).unwrap(),
            SignalClass::fused_sparse(1, 4).unwrap(),
            SignalClass::low_rank(2, 2, 1).unwrap(),
            SignalClass::l1_ball(1.5, 4).unwrap(),
        ] {
            let est = recover_direction(&[0.0; 4], &class).unwrap();
            assert!(est.is_degenerate());
            assert!(est.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn l1_ball_constraints_are_respected() {
        let class = SignalClass::l1_ball(1.2, 5).unwrap();
        let eta = [3.0, -2.0, 1.0, 0.5, -0.2];
        let est = recover_direction(&eta, &class).unwrap();
        let l1: f64 = est.values().iter().map(|v| v.abs()).sum();
        let l2 = norm2(est.values());
        assert!(l2 <= 1.0 + 1e-9);
        assert!((l1 - 1.2).abs() < 1e-8, "l1 constraint should be active, got {l1}");

        // Wide radius: constraint slack, plain normalization.
        let wide = SignalClass::l1_ball(5.0, 5).unwrap();
        let est = recover_direction(&eta, &wide).unwrap();
        let direct: Vec<f64> = {
            let n = norm2(&eta);
            eta.iter().map(|v| v / n).collect()
        };
        for (a, b) in est.values().iter().zip(direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn anisotropic_identity_matches_isotropic() {
        let class = SignalClass::sparse(2, 4).unwrap();
        let eta = [0.3, -1.0, 0.8, 0.1];
        let identity = Matrix::identity(4);
        let a = recover_direction(&eta, &class).unwrap();
        let b = recover_direction_anisotropic(&eta, &identity, &class).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        // Positive scaling of the covariance leaves the argmax unchanged.
        let mut scaled = Matrix::identity(4);
        for i in 0..4 {
            scaled.set(i, i, 3.7);
        }
        let c = recover_direction_anisotropic(&eta, &scaled, &class).unwrap();
        for (x, y) in a.values().iter().zip(c.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn anisotropic_diagonal_reweights_selection() {
        let class = SignalClass::sparse(1, 2).unwrap();
        let cov = Matrix::from_vec(2, 2, vec![4.0, 0.0, 0.0, 1.0]).unwrap();
        let est = recover_direction_anisotropic(&[2.0, 1.0], &cov, &class).unwrap();
        // Sigma^{-1} eta = (0.5, 1.0) selects coordinate 2.
        assert_eq!(est.values(), &[0.0, 1.0]);
    }

    #[test]
    fn anisotropic_rejects_singular_covariance() {
        let class = SignalClass::sparse(1, 2).unwrap();
        let cov = Matrix::from_vec(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            recover_direction_anisotropic(&[1.0, 0.0], &cov, &class),
            Err(RecoveryError::NotPositiveDefinite)
        ));
    }

    #[test]
    fn projected_marginal_hard_thresholds_sparse() {
        let class = SignalClass::sparse(2, 3).unwrap();
        let out = projected_marginal(&[3.0, -1.0, 2.0], &class, 1.0).unwrap();
        assert_eq!(out, vec![3.0, 0.0, 2.0]);
        let out = projected_marginal(&[3.0, -1.0, 2.0], &class, 2.0).unwrap();
        assert_eq!(out, vec![1.5, 0.0, 1.0]);
        assert_eq!(
            projected_marginal(&[0.0, 0.0, 0.0], &class, 1.0).unwrap(),
            vec![0.0; 3]
        );
    }

    #[test]
    fn projected_marginal_rejects_non_cone() {
        let class = SignalClass::l1_ball(2.0, 3).unwrap();
        assert!(matches!(
            projected_marginal(&[1.0, 0.0, 0.0], &class, 1.0),
            Err(RecoveryError::NotACone)
        ));
    }

    #[test]
    fn cone_equivalence_of_the_two_estimators() {
        let mut stream = RandomStream::new(909);
        let classes = [
            SignalClass::sparse(3, 10).unwrap(),
            SignalClass::fused_sparse(2, 10).unwrap(),
            SignalClass::contiguous_groups(10, 5, 2).unwrap(),
            SignalClass::low_rank(5, 2, 1).unwrap(),
        ];
        for class in &classes {
            for _ in 0..20 {
                let eta = stream.sample_gaussians(class.ambient_dim());
                let direct = recover_direction(&eta, class).unwrap();
                let projected = projected_marginal(&eta, class, 1.7).unwrap();
                let norm = norm2(&projected);
                assert!(norm > 0.0);
                for (a, b) in direct.values().iter().zip(projected.iter().map(|v| v / norm)) {
                    assert!((a - b).abs() < 1e-12, "class {}", class.label());
                }
            }
        }
    }

    #[test]
    fn l2_error_basics() {
        assert_eq!(l2_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((l2_error(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((l2_error(&[1.0, 0.0], &[0.6, 0.8]).unwrap() - 0.8944).abs() < 1e-4);
        assert!(l2_error(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let class = SignalClass::sparse(2, 4).unwrap();
        let mut stream = RandomStream::new(31);
        let signal = sample_signal(&class, 1.0, 10, 0.6, &mut stream).unwrap();
        let q = lloyd(2);
        let set =
            simulate_measurements(&signal, 10, 0.5, &q, Ensemble::Isotropic, &mut stream).unwrap();
        let dir = std::env::temp_dir();
        let a_path = dir.join("bbitcs_test_a.csv");
        let y_path = dir.join("bbitcs_test_y.csv");
        set.export_csv(&a_path, &y_path).unwrap();
        let back = MeasurementSet::import_csv(&a_path, &y_path, q).unwrap();
        assert_eq!(back.design().entries(), set.design().entries());
        assert_eq!(back.observations(), set.observations());
        std::fs::remove_file(a_path).ok();
        std::fs::remove_file(y_path).ok();
    }

    #[test]
    fn anisotropic_whitened_eta_is_consistent() {
        // E[Sigma^{-1} eta] = lambda x* for rows drawn N(0, Sigma).
        let n = 5usize;
        let m = 2000usize;
        let replicates = 200usize;
        let mut setup = RandomStream::new(3141);
        // Random SPD covariance with moderate condition number.
        let g = Matrix::from_vec(n, n, setup.sample_gaussians(n * n)).unwrap();
        let mut cov = g.matmul(&g.transpose());
        for i in 0..n {
            cov.set(i, i, cov.get(i, i) + 2.0);
        }
        let class = SignalClass::sparse(2, n).unwrap();
        let unit = sample_signal(&class, 1.0, m, 0.6, &mut setup).unwrap();
        // The identity E[Sigma^{-1} eta] = lambda x* holds under the
        // normalization ||Sigma^{1/2} x*|| = 1.
        let root = spd_sqrt(&cov).unwrap();
        let colored_norm = crate::stat::norm2(&root.matvec(unit.values()));
        let signal = unit.scaled(1.0 / colored_norm);
        let q = lloyd(2);
        let lambda = channel_constants(&q, &NoiseModel::AdditiveGaussian { sigma: 0.0 }).lambda;
        let mut sums = vec![0.0; n];
        let mut sq_sums = vec![0.0; n];
        for rep in 0..replicates {
            let mut stream = RandomStream::derived(2718, rep as u64);
            let ensemble = Ensemble::anisotropic(cov.clone()).unwrap();
            let set = simulate_measurements(&signal, m, 0.0, &q, ensemble, &mut stream).unwrap();
            let eta = marginal_statistic(&set);
            let whitened = spd_solve(&cov, &eta).unwrap();
            for j in 0..n {
                sums[j] += whitened[j];
                sq_sums[j] += whitened[j] * whitened[j];
            }
        }
        let r = replicates as f64;
        for j in 0..n {
            let mean = sums[j] / r;
            let var = (sq_sums[j] / r - mean * mean).max(0.0);
            let se = (var / r).sqrt();
            let target = lambda * signal.values()[j];
            assert!(
                (mean - target).abs() <= 3.5 * se + 1e-12,
                "coordinate {j}: mean {mean}, target {target}"
            );
        }
    }

    #[test]
    fn mean_of_eta_matches_lambda_direction() {
        // Monte-Carlo check of E[eta] = lambda x_u on a small instance.
        let n = 10usize;
        let m = 5000usize;
        let replicates = 200usize;
        let class = SignalClass::sparse(3, n).unwrap();
        let q = lloyd(1);
        let lambda = channel_constants(&q, &NoiseModel::AdditiveGaussian { sigma: 0.0 }).lambda;
        let mut stream = RandomStream::new(4242);
        let signal = sample_signal(&class, 1.0, m, lambda, &mut stream).unwrap();
        let mut sums = vec![0.0; n];
        let mut sq_sums = vec![0.0; n];
        for rep in 0..replicates {
            let mut rep_stream = RandomStream::derived(999, rep as u64);
            let set =
                simulate_measurements(&signal, m, 0.0, &q, Ensemble::Isotropic, &mut rep_stream)
                    .unwrap();
            let eta = marginal_statistic(&set);
            for j in 0..n {
                sums[j] += eta[j];
                sq_sums[j] += eta[j] * eta[j];
            }
        }
        let direction = signal.direction();
        let r = replicates as f64;
        for j in 0..n {
            let mean = sums[j] / r;
            let var = (sq_sums[j] / r - mean * mean).max(0.0);
            let se = (var / r).sqrt();
            assert!(
                (mean - lambda * direction[j]).abs() <= 3.5 * se + 1e-12,
                "coordinate {j}: mean {mean}, target {}",
                lambda * direction[j]
            );
        }
    }
}
