//! Small dense linear algebra: row-major matrices, one-sided Jacobi SVD
//! and a cyclic Jacobi eigensolver for symmetric matrices.
//!
//! Everything here targets desk-scale problems (a few hundred per side);
//! there is no blocking, pivot scaling or sparse machinery.

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    ShapeMismatch { expected: usize, got: usize },
    NonFiniteEntry,
    RankOutOfRange { rank: usize, max: usize },
    NotSquare,
    NotSymmetric,
    NotPositiveDefinite,
}

impl std::fmt::Display for LinalgError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LinalgError::ShapeMismatch { expected, got } => {
                write!(f, "expected {expected} entries, got {got}")
            }
            LinalgError::NonFiniteEntry => write!(f, "matrix entries must be finite"),
            LinalgError::RankOutOfRange { rank, max } => {
                write!(f, "rank {rank} outside 1..={max}")
            }
            LinalgError::NotSquare => write!(f, "matrix is not square"),
            LinalgError::NotSymmetric => write!(f, "matrix is not symmetric"),
            LinalgError::NotPositiveDefinite => write!(f, "matrix is not positive definite"),
        }
    }
}

impl std::error::Error for LinalgError {}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::ShapeMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFiniteEntry);
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// `A^T y`.
    pub fn transpose_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "transpose_matvec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += yi * a;
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Top-`rank` singular triplets, `u` and `v` holding one column per triplet.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    /// `U diag(s) V^T` of the retained triplets.
    pub fn reconstruct(&self) -> Matrix {
        let r = self.singular_values.len();
        let mut out = Matrix::zeros(self.u.rows(), self.v.rows());
        for k in 0..r {
            let s = self.singular_values[k];
            for i in 0..self.u.rows() {
                let ui = self.u.get(i, k) * s;
                for j in 0..self.v.rows() {
                    out.data[i * out.cols + j] += ui * self.v.get(j, k);
                }
            }
        }
        out
    }
}

/// Truncated SVD via one-sided Jacobi orthogonalization.
///
/// Columns of the work matrix are rotated pairwise until mutually
/// orthogonal; singular values are the resulting column norms. For wide
/// inputs the transpose is factored and the roles of `u`/`v` swap back.
pub fn truncated_svd(m: &Matrix, rank: usize) -> Result<Svd, LinalgError> {
    let max_rank = m.rows.min(m.cols);
    if rank < 1 || rank > max_rank {
        return Err(LinalgError::RankOutOfRange {
            rank,
            max: max_rank,
        });
    }
    if m.rows < m.cols {
        let t = one_sided_jacobi(&m.transpose(), rank);
        return Ok(Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    Ok(one_sided_jacobi(m, rank))
}

fn one_sided_jacobi(m: &Matrix, rank: usize) -> Svd {
    let (rows, cols) = (m.rows, m.cols);
    // Column-major copy: w[j] is the j-th column.
    let mut w: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| m.get(i, j)).collect())
        .collect();
    let mut v = Matrix::identity(cols);

    for _sweep in 0..60 {
        let mut max_rel = 0.0f64;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let app = dot(&w[p], &w[p]);
                let aqq = dot(&w[q], &w[q]);
                let apq = dot(&w[p], &w[q]);
                let denom = (app * aqq).sqrt();
                if denom <= 1e-300 {
                    continue;
                }
                let rel = apq.abs() / denom;
                max_rel = max_rel.max(rel);
                if rel <= 1e-15 {
                    continue;
                }
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let wp = w[p][i];
                    let wq = w[q][i];
                    w[p][i] = c * wp - s * wq;
                    w[q][i] = s * wp + c * wq;
                }
                for i in 0..cols {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, c * vp - s * vq);
                    v.set(i, q, s * vp + c * vq);
                }
            }
        }
        if max_rel <= 1e-14 {
            break;
        }
    }

    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = w.iter().map(|col| norm2(col)).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());

    let mut u = Matrix::zeros(rows, rank);
    let mut vr = Matrix::zeros(cols, rank);
    let mut singular_values = Vec::with_capacity(rank);
    for (k, &j) in order.iter().take(rank).enumerate() {
        let s = norms[j];
        singular_values.push(s);
        if s > 1e-300 {
            for i in 0..rows {
                u.set(i, k, w[j][i] / s);
            }
        }
        for i in 0..cols {
            vr.set(i, k, v.get(i, j));
        }
    }
    Svd {
        u,
        singular_values,
        v: vr,
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching eigenvectors
/// as columns.
pub fn symmetric_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix), LinalgError> {
    if m.rows != m.cols {
        return Err(LinalgError::NotSquare);
    }
    let scale = m.frobenius_norm().max(1.0);
    if !m.is_symmetric(1e-10 * scale) {
        return Err(LinalgError::NotSymmetric);
    }
    let n = m.rows;
    let mut a = m.clone();
    // Symmetrize so tiny asymmetries cannot bias the rotations.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, avg);
            a.set(j, i, avg);
        }
    }
    let mut v = Matrix::identity(n);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q) * a.get(p, q);
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    a.set(i, p, c * aip - s * aiq);
                    a.set(i, q, s * aip + c * aiq);
                }
                for j in 0..n {
                    let apj = a.get(p, j);
                    let aqj = a.get(q, j);
                    a.set(p, j, c * apj - s * aqj);
                    a.set(q, j, s * apj + c * aqj);
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * viq);
                    v.set(i, q, s * vip + c * viq);
                }
            }
        }
    }
    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a.get(i, i), i)).collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (k, &(_, j)) in pairs.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, k, v.get(i, j));
        }
    }
    Ok((eigenvalues, vectors))
}

/// Symmetric square root of a positive definite matrix.
pub fn spd_sqrt(m: &Matrix) -> Result<Matrix, LinalgError> {
    let (vals, vecs) = symmetric_eigen(m)?;
    let floor = 1e-12 * vals.first().copied().unwrap_or(0.0).max(0.0);
    if vals.iter().any(|&l| l <= floor) {
        return Err(LinalgError::NotPositiveDefinite);
    }
    Ok(scaled_eigvec_product(&vecs, &vals, f64::sqrt))
}

/// Solves `M x = b` for symmetric positive definite `M`.
pub fn spd_solve(m: &Matrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let (vals, vecs) = symmetric_eigen(m)?;
    let floor = 1e-12 * vals.first().copied().unwrap_or(0.0).max(0.0);
    if vals.iter().any(|&l| l <= floor) {
        return Err(LinalgError::NotPositiveDefinite);
    }
    // x = V diag(1/l) V^T b
    let n = m.rows();
    let mut coeffs = vec![0.0; n];
    for k in 0..n {
        let mut c = 0.0;
        for i in 0..n {
            c += vecs.get(i, k) * b[i];
        }
        coeffs[k] = c / vals[k];
    }
    let mut x = vec![0.0; n];
    for k in 0..n {
        for i in 0..n {
            x[i] += vecs.get(i, k) * coeffs[k];
        }
    }
    Ok(x)
}

fn scaled_eigvec_product(vecs: &Matrix, vals: &[f64], f: fn(f64) -> f64) -> Matrix {
    let n = vecs.rows();
    let mut out = Matrix::zeros(n, n);
    for k in 0..n {
        let fk = f(vals[k]);
        for i in 0..n {
            let vik = vecs.get(i, k) * fk;
            for j in 0..n {
                out.data[i * n + j] += vik * vecs.get(j, k);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stat::rng::RandomStream;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut s = RandomStream::new(seed);
        Matrix::from_vec(rows, cols, s.sample_gaussians(rows * cols)).unwrap()
    }

    #[test]
    fn from_vec_rejects_bad_shapes() {
        assert!(Matrix::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn svd_rank_one_outer_product() {
        let u = [1.0, -2.0, 0.5];
        let v = [3.0, 1.0, -1.0, 2.0];
        let mut data = Vec::new();
        for a in u {
            for b in v {
                data.push(a * b);
            }
        }
        let m = Matrix::from_vec(3, 4, data).unwrap();
        let svd = truncated_svd(&m, 1).unwrap();
        let diff = matrix_diff(&svd.reconstruct(), &m);
        assert!(diff < 1e-10, "rank-1 reconstruction error {diff}");
    }

    #[test]
    fn svd_diagonal_case() {
        let m = Matrix::from_vec(3, 3, vec![3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let svd = truncated_svd(&m, 2).unwrap();
        assert!((svd.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((svd.singular_values[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn svd_full_rank_against_gram_oracle() {
        let m = random_matrix(6, 4, 11);
        let svd = truncated_svd(&m, 4).unwrap();
        let diff = matrix_diff(&svd.reconstruct(), &m);
        assert!(diff < 1e-9, "full reconstruction error {diff}");

        // Oracle: eigenvalues of M^T M through the symmetric Jacobi path.
        let gram = m.transpose().matmul(&m);
        let (eigs, _) = symmetric_eigen(&gram).unwrap();
        for (sv, ev) in svd.singular_values.iter().zip(&eigs) {
            assert!((sv * sv - ev).abs() < 1e-8, "sv^2 = {} vs eig = {}", sv * sv, ev);
        }
    }

    #[test]
    fn svd_singular_values_match_gram_eigenvalues_random() {
        for seed in 0..5 {
            let m = random_matrix(8, 5, 100 + seed);
            let svd = truncated_svd(&m, 5).unwrap();
            let gram = m.transpose().matmul(&m);
            let (eigs, _) = symmetric_eigen(&gram).unwrap();
            for (sv, ev) in svd.singular_values.iter().zip(&eigs) {
                assert!((sv * sv - ev.max(0.0)).abs() < 1e-8);
            }
            // Nonincreasing, nonnegative.
            for w in svd.singular_values.windows(2) {
                assert!(w[0] >= w[1] - 1e-12);
            }
            assert!(svd.singular_values.iter().all(|&s| s >= 0.0));
        }
    }

    #[test]
    fn svd_rejects_rank_out_of_range() {
        let m = random_matrix(4, 3, 5);
        assert!(truncated_svd(&m, 0).is_err());
        assert!(truncated_svd(&m, 4).is_err());
    }

    #[test]
    fn svd_wide_matrix() {
        let m = random_matrix(3, 7, 9);
        let svd = truncated_svd(&m, 3).unwrap();
        let diff = matrix_diff(&svd.reconstruct(), &m);
        assert!(diff < 1e-9);
    }

    #[test]
    fn eigen_reconstructs_symmetric_matrix() {
        let g = random_matrix(5, 5, 21);
        let sym = {
            let mut s = Matrix::zeros(5, 5);
            for i in 0..5 {
                for j in 0..5 {
                    s.set(i, j, 0.5 * (g.get(i, j) + g.get(j, i)));
                }
            }
            s
        };
        let (vals, vecs) = symmetric_eigen(&sym).unwrap();
        let recon = scaled_eigvec_product(&vecs, &vals, |x| x);
        assert!(matrix_diff(&recon, &sym) < 1e-10);
    }

    #[test]
    fn spd_sqrt_squares_back() {
        let g = random_matrix(4, 6, 33);
        let spd = g.matmul(&g.transpose()); // 4x4, PSD with full rank a.s.
        let root = spd_sqrt(&spd).unwrap();
        assert!(matrix_diff(&root.matmul(&root), &spd) < 1e-9);
    }

    #[test]
    fn spd_solve_inverts() {
        let g = random_matrix(5, 8, 44);
        let spd = g.matmul(&g.transpose());
        let b = vec![1.0, -2.0, 0.5, 3.0, 0.0];
        let x = spd_solve(&spd, &b).unwrap();
        let back = spd.matvec(&x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn spd_ops_reject_indefinite() {
        let m = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(spd_sqrt(&m).is_err());
        assert!(spd_solve(&m, &[1.0, 1.0]).is_err());
    }

    fn matrix_diff(a: &Matrix, b: &Matrix) -> f64 {
        a.entries()
            .iter()
            .zip(b.entries())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}
