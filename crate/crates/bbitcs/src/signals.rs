//! Structured signal classes, ground-truth samplers and the analytic
//! design formulas.
//!
//! The five classes are s-sparse vectors, piecewise-constant (fused)
//! vectors with at most `s` breakpoints, s-group-sparse vectors over a
//! fixed partition, rank-s matrices (flattened row-major) and the
//! `r* B_1 ∩ B_2` l1-ball intersection. Samplers follow the generative
//! schemes used by the experiment suite and always return unit-norm
//! signals; magnitudes are drawn from `U([beta, 2 beta])` with
//! `beta = (2 f / lambda_ref) sqrt(log n / m)` (and the group / low-rank
//! variants thereof).

use crate::stat::linalg::{truncated_svd, Matrix};
use crate::stat::rng::RandomStream;

#[derive(Debug, Clone, PartialEq)]
pub enum SignalClass {
    Sparse { s: usize, n: usize },
    FusedSparse { s: usize, n: usize },
    GroupSparse { groups: Vec<Vec<usize>>, s: usize },
    LowRank { rows: usize, cols: usize, rank: usize },
    L1Ball { radius: f64, n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignalError {
    InvalidClass(String),
    NoSampler(&'static str),
    NoDesignRule(&'static str),
    InvalidParameter(&'static str),
}

impl std::fmt::Display for SignalError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SignalError::InvalidClass(msg) => write!(f, "invalid signal class: {msg}"),
            SignalError::NoSampler(what) => write!(f, "no generative scheme for {what}"),
            SignalError::NoDesignRule(what) => write!(f, "no design-size formula for {what}"),
            SignalError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
        }
    }
}

impl std::error::Error for SignalError {}

impl SignalClass {
    pub fn sparse(s: usize, n: usize) -> Result<Self, SignalError> {
        if s == 0 || s > n {
            return Err(SignalError::InvalidClass(format!("sparse needs 1 <= s <= n, got s={s}, n={n}")));
        }
        Ok(SignalClass::Sparse { s, n })
    }

    pub fn fused_sparse(s: usize, n: usize) -> Result<Self, SignalError> {
        if n < 2 || s == 0 || s > n - 1 {
            return Err(SignalError::InvalidClass(format!(
                "fused needs 1 <= s <= n-1, got s={s}, n={n}"
            )));
        }
        Ok(SignalClass::FusedSparse { s, n })
    }

    /// Group sparsity over an explicit partition of `0..n`.
    pub fn group_sparse(groups: Vec<Vec<usize>>, s: usize) -> Result<Self, SignalError> {
        let l = groups.len();
        if l == 0 || s == 0 || s > l {
            return Err(SignalError::InvalidClass(format!(
                "group needs 1 <= s <= L, got s={s}, L={l}"
            )));
        }
        let n: usize = groups.iter().map(|g| g.len()).sum();
        let mut seen = vec![false; n];
        for g in &groups {
            if g.is_empty() {
                return Err(SignalError::InvalidClass("empty group".into()));
            }
            for &idx in g {
                if idx >= n || seen[idx] {
                    return Err(SignalError::InvalidClass(
                        "groups must partition 0..n disjointly".into(),
                    ));
                }
                seen[idx] = true;
            }
        }
        Ok(SignalClass::GroupSparse { groups, s })
    }

    /// `l` contiguous groups of (near-)equal size covering `0..n`; the
    /// final group absorbs any remainder.
    pub fn contiguous_groups(n: usize, l: usize, s: usize) -> Result<Self, SignalError> {
        if l == 0 || n < l {
            return Err(SignalError::InvalidClass(format!(
                "contiguous groups need 1 <= L <= n, got L={l}, n={n}"
            )));
        }
        let base = n / l;
        let mut groups = Vec::with_capacity(l);
        for g in 0..l {
            let start = g * base;
            let end = if g == l - 1 { n } else { start + base };
            groups.push((start..end).collect());
        }
        SignalClass::group_sparse(groups, s)
    }

    pub fn low_rank(rows: usize, cols: usize, rank: usize) -> Result<Self, SignalError> {
        if rank == 0 || rank > rows.min(cols) {
            return Err(SignalError::InvalidClass(format!(
                "low-rank needs 1 <= rank <= min(n1, n2), got rank={rank}, n1={rows}, n2={cols}"
            )));
        }
        Ok(SignalClass::LowRank { rows, cols, rank })
    }

    /// `radius` is the l1 norm of a unit-l2 signal, hence at least 1.
    pub fn l1_ball(radius: f64, n: usize) -> Result<Self, SignalError> {
        if !(radius >= 1.0) || !radius.is_finite() || n == 0 {
            return Err(SignalError::InvalidClass(format!(
                "l1-ball needs radius >= 1 and n >= 1, got radius={radius}, n={n}"
            )));
        }
        Ok(SignalClass::L1Ball { radius, n })
    }

    /// Length of the flattened signal vector.
    pub fn ambient_dim(&self) -> usize {
        match self {
            SignalClass::Sparse { n, .. } | SignalClass::FusedSparse { n, .. } => *n,
            SignalClass::GroupSparse { groups, .. } => groups.iter().map(|g| g.len()).sum(),
            SignalClass::LowRank { rows, cols, .. } => rows * cols,
            SignalClass::L1Ball { n, .. } => *n,
        }
    }

    /// Whether the class is closed under positive scaling.
    pub fn is_cone(&self) -> bool {
        !matches!(self, SignalClass::L1Ball { .. })
    }

    pub fn label(&self) -> String {
        match self {
            SignalClass::Sparse { .. } => "sparse".into(),
            SignalClass::FusedSparse { .. } => "fused".into(),
            SignalClass::GroupSparse { .. } => "group".into(),
            SignalClass::LowRank { .. } => "lowrank".into(),
            SignalClass::L1Ball { .. } => "l1ball".into(),
        }
    }

    /// Membership predicate at numerical tolerance `tol`.
    pub fn is_member(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.ambient_dim() {
            return false;
        }
        match self {
            SignalClass::Sparse { s, .. } => x.iter().filter(|v| v.abs() > tol).count() <= *s,
            SignalClass::FusedSparse { s, .. } => {
                x.windows(2).filter(|w| (w[1] - w[0]).abs() > tol).count() <= *s
            }
            SignalClass::GroupSparse { groups, s } => {
                groups
                    .iter()
                    .filter(|g| g.iter().any(|&i| x[i].abs() > tol))
                    .count()
                    <= *s
            }
            SignalClass::LowRank { rows, cols, rank } => {
                let m = match Matrix::from_vec(*rows, *cols, x.to_vec()) {
                    Ok(m) => m,
                    Err(_) => return false,
                };
                let full = (*rows).min(*cols);
                let svd = truncated_svd(&m, full).expect("valid rank");
                let top = svd.singular_values.first().copied().unwrap_or(0.0);
                svd.singular_values
                    .iter()
                    .skip(*rank)
                    .all(|&sv| sv <= tol * top.max(1.0))
            }
            SignalClass::L1Ball { radius, .. } => {
                let l1: f64 = x.iter().map(|v| v.abs()).sum();
                let l2: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                l1 <= radius * (1.0 + tol) && l2 <= 1.0 + tol
            }
        }
    }
}

/// A signal together with its class and norm `psi* = ||x*||_2`.
#[derive(Debug, Clone)]
pub struct GroundTruthSignal {
    values: Vec<f64>,
    class: SignalClass,
    norm: f64,
}

impl GroundTruthSignal {
    pub fn new(values: Vec<f64>, class: SignalClass) -> Result<Self, SignalError> {
        if values.len() != class.ambient_dim() {
            return Err(SignalError::InvalidParameter("signal length must match class dimension"));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(SignalError::InvalidParameter("signal must be nonzero"));
        }
        if !class.is_member(&values, 1e-9) {
            return Err(SignalError::InvalidParameter("signal violates its class"));
        }
        Ok(GroundTruthSignal { values, class, norm })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn class(&self) -> &SignalClass {
        &self.class
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Unit-norm direction `x*/psi*`.
    pub fn direction(&self) -> Vec<f64> {
        self.values.iter().map(|v| v / self.norm).collect()
    }

    /// Same direction rescaled to norm `psi`.
    pub fn scaled(&self, psi: f64) -> GroundTruthSignal {
        assert!(psi > 0.0 && psi.is_finite());
        GroundTruthSignal {
            values: self.values.iter().map(|v| v * psi / self.norm).collect(),
            class: self.class.clone(),
            norm: psi,
        }
    }

    /// CSV with one metadata header line and one value per row.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# class={} n={} norm={:.16e}\n", self.class.label(), self.values.len(), self.norm);
        for v in &self.values {
            out.push_str(&format!("{v:.16e}\n"));
        }
        out
    }
}

/// Magnitude scale used by the samplers.
pub fn beta_scale(class: &SignalClass, f: f64, lambda_ref: f64, m: usize) -> f64 {
    let mf = m as f64;
    match class {
        SignalClass::Sparse { n, .. }
        | SignalClass::FusedSparse { n, .. }
        | SignalClass::L1Ball { n, .. } => (2.0 * f / lambda_ref) * ((*n as f64).ln() / mf).sqrt(),
        SignalClass::GroupSparse { groups, .. } => {
            (2.0 * f / lambda_ref) * ((groups.len() as f64).ln() / mf).sqrt()
        }
        SignalClass::LowRank { .. } => 2.0 * f / lambda_ref,
    }
}

/// Measurement count and magnitude scale for a configuration.
///
/// `m` is the nearest integer to the class formula; `beta` is evaluated
/// at that rounded count.
pub fn design_dimensions(
    class: &SignalClass,
    f: f64,
    lambda_ref: f64,
) -> Result<(usize, f64), SignalError> {
    if !(f > 0.0) || !f.is_finite() {
        return Err(SignalError::InvalidParameter("f must be positive"));
    }
    if !(lambda_ref > 0.0) || !lambda_ref.is_finite() {
        return Err(SignalError::InvalidParameter("lambda_ref must be positive"));
    }
    let base = (3.0 * f / lambda_ref).powi(2);
    let m_exact = match class {
        SignalClass::Sparse { s, n } | SignalClass::FusedSparse { s, n } => {
            base * *s as f64 * (*n as f64).ln()
        }
        SignalClass::GroupSparse { groups, s } => {
            let l = groups.len() as f64;
            let n = class.ambient_dim() as f64;
            base * *s as f64 * (n / l + l.ln())
        }
        SignalClass::LowRank { rows, cols, rank } => base * *rank as f64 * (*rows + *cols) as f64,
        SignalClass::L1Ball { .. } => return Err(SignalError::NoDesignRule("the l1-ball class")),
    };
    let m = m_exact.round().max(1.0) as usize;
    Ok((m, beta_scale(class, f, lambda_ref, m)))
}

/// Samples a unit-norm ground-truth signal for the experiment suite.
///
/// Draw order per class (one stream, entry order):
/// * sparse - support by partial Fisher-Yates, then per (sorted) support
///   index one uniform for the sign and one for the magnitude;
/// * fused - deterministic alternating blocks, no draws;
/// * group - per active group one magnitude uniform, then the group's
///   Gaussian direction entries;
/// * low-rank - the `n1 x n2` Gaussian matrix row-major, then `s`
///   spectrum uniforms.
pub fn sample_signal(
    class: &SignalClass,
    f: f64,
    m: usize,
    lambda_ref: f64,
    stream: &mut RandomStream,
) -> Result<GroundTruthSignal, SignalError> {
    if !(f > 0.0) || !(lambda_ref > 0.0) || m == 0 {
        return Err(SignalError::InvalidParameter(
            "f, lambda_ref and m must be positive",
        ));
    }
    let beta = beta_scale(class, f, lambda_ref, m);
    let values = match class {
        SignalClass::Sparse { s, n } => {
            let support = sample_support(*n, *s, stream);
            let mut x = vec![0.0; *n];
            for &j in &support {
                let sign = if stream.next_uniform() < 0.5 { -1.0 } else { 1.0 };
                let magnitude = beta * (1.0 + stream.next_uniform());
                x[j] = sign * magnitude;
            }
            x
        }
        SignalClass::FusedSparse { s, n } => {
            // s equally sized blocks, alternating signs; the last block
            // absorbs the remainder when s does not divide n.
            let blocks = *s;
            let base = n / blocks;
            let mut x = vec![0.0; *n];
            for b in 0..blocks {
                let start = b * base;
                let end = if b == blocks - 1 { *n } else { start + base };
                let value = if b % 2 == 0 { 1.0 } else { -1.0 };
                for v in &mut x[start..end] {
                    *v = value;
                }
            }
            x
        }
        SignalClass::GroupSparse { groups, s } => {
            let n = class.ambient_dim();
            let mut x = vec![0.0; n];
            for group in groups.iter().take(*s) {
                let magnitude = beta * (1.0 + stream.next_uniform());
                for &j in group {
                    x[j] = magnitude * stream.next_gaussian();
                }
            }
            x
        }
        SignalClass::LowRank { rows, cols, rank } => {
            let g = Matrix::from_vec(*rows, *cols, stream.sample_gaussians(rows * cols))
                .expect("gaussians are finite");
            let svd = truncated_svd(&g, *rank).expect("rank validated by constructor");
            let spectrum: Vec<f64> = (0..*rank)
                .map(|_| beta * (1.0 + stream.next_uniform()))
                .collect();
            let mut x = vec![0.0; rows * cols];
            for k in 0..*rank {
                for i in 0..*rows {
                    let u = svd.u.get(i, k) * spectrum[k];
                    for j in 0..*cols {
                        x[i * cols + j] += u * svd.v.get(j, k);
                    }
                }
            }
            x
        }
        SignalClass::L1Ball { .. } => return Err(SignalError::NoSampler("the l1-ball class")),
    };
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let unit: Vec<f64> = values.iter().map(|v| v / norm).collect();
    GroundTruthSignal::new(unit, class.clone())
}

/// Uniform random size-`s` subset of `0..n`, ascending.
fn sample_support(n: usize, s: usize, stream: &mut RandomStream) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in 0..s {
        let j = i + stream.next_below((n - i) as u64) as usize;
        perm.swap(i, j);
    }
    let mut support = perm[..s].to_vec();
    support.sort_unstable();
    support
}

/// Closed-form upper bound on the Gaussian width of the spherical part
/// of the class's tangent cone; logarithms are natural.
pub fn width_bound(class: &SignalClass) -> f64 {
    match class {
        SignalClass::Sparse { s, n } | SignalClass::FusedSparse { s, n } => {
            sparse_width(*s, *n)
        }
        SignalClass::GroupSparse { groups, s } => {
            let s = *s as f64;
            let l = groups.len() as f64;
            let gmax = groups.iter().map(|g| g.len()).max().unwrap_or(0) as f64;
            2.0 * (2.0 * s * gmax).sqrt() + (4.0 * s * (std::f64::consts::E * l / (2.0 * s)).ln()).sqrt()
        }
        SignalClass::LowRank { rows, cols, rank } => {
            let s = *rank as f64;
            (2.0 * s * *rows as f64).sqrt() + (2.0 * s * *cols as f64).sqrt()
        }
        SignalClass::L1Ball { radius, n } => {
            // Effective sparsity from radius = ||x_u||_1 <= sqrt(s).
            let s_eff = (radius * radius).ceil().max(1.0) as usize;
            2.0 * std::f64::consts::SQRT_2 * sparse_width(s_eff.min(*n), *n)
        }
    }
}

fn sparse_width(s: usize, n: usize) -> f64 {
    let s = s as f64;
    let n = n as f64;
    3.5 * (2.0 * s * (std::f64::consts::E * n / (2.0 * s)).ln()).sqrt()
}
