//! Minimal dense linear algebra: real vectors, row-major matrices, a cached
//! Cholesky solver for symmetric positive definite systems, and a power
//! iteration for spectral norms. Everything is sized for desk-scale problems
//! (tens of rows, not thousands); there is deliberately no sparse storage and
//! no iterative Krylov machinery.

use std::fmt;
use std::sync::OnceLock;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Absolute tolerance on `max |M_ij - M_ji|` when a matrix is required to be
/// symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Default relative tolerance for the power-iteration eigenvalue estimate.
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-10;

/// Hard cap on power-iteration sweeps before giving up.
pub const POWER_ITERATION_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("non-finite entry at index {index} while building {what}")]
    NonFinite { what: &'static str, index: usize },

    #[error("zero-sized dimension: {rows}x{cols}")]
    ZeroDimension { rows: usize, cols: usize },

    #[error("data length {len} does not match shape {rows}x{cols}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        len: usize,
    },

    #[error("row {row} has length {found}, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("{op}: matrix is {rows}x{cols} but vector has length {vec_len}")]
    MatVecDim {
        op: &'static str,
        rows: usize,
        cols: usize,
        vec_len: usize,
    },

    #[error("matrix is {rows}x{cols}, operation requires square")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric: max |M_ij - M_ji| = {max_asymmetry:.3e}")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("matrix is not positive definite: pivot {index} is {value:.3e}")]
    NonPositivePivot { index: usize, value: f64 },

    #[error(
        "power iteration did not converge within {iterations} sweeps; \
         last spectral-norm estimate {last_estimate:.6e}"
    )]
    PowerIterationNoConvergence {
        last_estimate: f64,
        iterations: usize,
    },
}

type LinalgResult<T> = std::result::Result<T, LinalgError>;

/// Dense real vector with all-finite entries.
#[derive(Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> LinalgResult<Self> {
        if entries.is_empty() {
            return Err(LinalgError::ZeroDimension { rows: 0, cols: 1 });
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                what: "vector",
                index,
            });
        }
        Ok(Self(entries))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "vector length must be positive");
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, other: &Vector) -> Vector {
        self.add_scaled(1.0, other)
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        self.add_scaled(-1.0, other)
    }

    /// `self + c * other`, elementwise.
    pub fn add_scaled(&self, c: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }

    pub fn scaled(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|v| c * v).collect())
    }

    pub fn concat(&self, other: &Vector) -> Vector {
        let mut data = self.0.clone();
        data.extend_from_slice(&other.0);
        Vector(data)
    }

    /// Splits into the leading `n` entries and the rest.
    pub fn split_at(&self, n: usize) -> (Vector, Vector) {
        assert!(n > 0 && n < self.len());
        (Vector(self.0[..n].to_vec()), Vector(self.0[n..].to_vec()))
    }

    /// True when every entry is finite; iterates can only lose this through
    /// overflow inside a solver loop.
    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vector({:?})", self.0)
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<f64>::deserialize(d)?;
        Vector::new(entries).map_err(D::Error::custom)
    }
}

/// Cholesky factor of a symmetric positive definite matrix; lower triangle
/// stored dense.
#[derive(Debug, Clone, PartialEq)]
struct CholFactor {
    n: usize,
    l: Vec<f64>,
}

impl CholFactor {
    fn compute(m: &Matrix) -> LinalgResult<Self> {
        let n = m.rows;
        // Pivots within roundoff of zero relative to the diagonal scale mean
        // the matrix is numerically semidefinite, not just ill-conditioned;
        // accepting them would silently produce garbage solves.
        let scale = (0..n).fold(0.0f64, |acc, i| acc.max(m.data[i * n + i].abs()));
        let pivot_floor = scale * f64::EPSILON * n as f64;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = m.data[i * n + j];
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if sum <= pivot_floor || !sum.is_finite() {
                        return Err(LinalgError::NonPositivePivot {
                            index: i,
                            value: sum,
                        });
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Ok(Self { n, l })
    }

    #[allow(clippy::needless_range_loop)]
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut sum = x[i];
            for k in 0..i {
                sum -= self.l[i * n + k] * x[k];
            }
            x[i] = sum / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut sum = x[i];
            for k in i + 1..n {
                sum -= self.l[k * n + i] * x[k];
            }
            x[i] = sum / self.l[i * n + i];
        }
        x
    }
}

/// Dense row-major matrix with all-finite entries. Immutable once built; the
/// Cholesky factor is computed at most once per value and shared across
/// solves, including concurrent ones.
#[derive(Clone)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    chol: OnceLock<LinalgResult<CholFactor>>,
}

impl Matrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> LinalgResult<Self> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::ZeroDimension { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::ShapeMismatch {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                what: "matrix",
                index,
            });
        }
        Ok(Self {
            rows,
            cols,
            data,
            chol: OnceLock::new(),
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> LinalgResult<Self> {
        if rows.is_empty() {
            return Err(LinalgError::ZeroDimension { rows: 0, cols: 0 });
        }
        let cols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(LinalgError::RaggedRows {
                    row: i,
                    expected: cols,
                    found: r.len(),
                });
            }
        }
        let nrows = rows.len();
        Matrix::from_vec(nrows, cols, rows.into_iter().flatten().collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix::from_vec(rows, cols, data).expect("from_fn produced an invalid matrix")
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::from_fn(rows, cols, |_, _| 0.0)
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

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Rows of `self` selected by `idx`, in order.
    pub fn select_rows(&self, idx: &[usize]) -> LinalgResult<Matrix> {
        if idx.is_empty() {
            return Err(LinalgError::ZeroDimension {
                rows: 0,
                cols: self.cols,
            });
        }
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix::from_vec(idx.len(), self.cols, data)
    }

    /// `c * self + I`; the usual shape of proximal and implicit-step systems.
    pub fn scaled_plus_identity(&self, c: f64) -> LinalgResult<Matrix> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(Matrix::from_fn(self.rows, self.cols, |i, j| {
            c * self.get(i, j) + if i == j { 1.0 } else { 0.0 }
        }))
    }

    /// `M v`.
    pub fn matvec(&self, v: &Vector) -> LinalgResult<Vector> {
        if v.len() != self.cols {
            return Err(LinalgError::MatVecDim {
                op: "matvec",
                rows: self.rows,
                cols: self.cols,
                vec_len: v.len(),
            });
        }
        let out = (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v.as_slice())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        // Finite inputs at desk scale cannot overflow a dot product into inf.
        Ok(Vector(out))
    }

    /// `M^T v` without materializing the transpose.
    pub fn matvec_t(&self, v: &Vector) -> LinalgResult<Vector> {
        if v.len() != self.rows {
            return Err(LinalgError::MatVecDim {
                op: "matvec_t",
                rows: self.rows,
                cols: self.cols,
                vec_len: v.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (j, a) in self.row(i).iter().enumerate() {
                out[j] += a * vi;
            }
        }
        Ok(Vector(out))
    }

    /// `M^T M`.
    pub fn gram(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.cols, |i, j| {
            (0..self.rows)
                .map(|k| self.get(k, i) * self.get(k, j))
                .sum()
        })
    }

    /// `M M^T`.
    pub fn outer_gram(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.rows, |i, j| {
            self.row(i)
                .iter()
                .zip(self.row(j))
                .map(|(a, b)| a * b)
                .sum()
        })
    }

    fn factor(&self) -> &LinalgResult<CholFactor> {
        self.chol.get_or_init(|| {
            if self.rows != self.cols {
                return Err(LinalgError::NotSquare {
                    rows: self.rows,
                    cols: self.cols,
                });
            }
            let mut max_asymmetry: f64 = 0.0;
            for i in 0..self.rows {
                for j in 0..i {
                    max_asymmetry = max_asymmetry.max((self.get(i, j) - self.get(j, i)).abs());
                }
            }
            if max_asymmetry > SYMMETRY_TOL {
                return Err(LinalgError::NotSymmetric { max_asymmetry });
            }
            CholFactor::compute(self)
        })
    }

    /// Checks that the matrix is symmetric positive definite by attempting the
    /// (cached) Cholesky factorization, without solving anything.
    pub(crate) fn ensure_spd(&self) -> LinalgResult<()> {
        self.factor().as_ref().map(|_| ()).map_err(Clone::clone)
    }

    /// Solves `M x = b` for symmetric positive definite `M`. The factorization
    /// is computed on first use and reused by every later solve on this value.
    /// One step of iterative refinement keeps the residual near roundoff.
    pub fn solve_spd(&self, b: &Vector) -> LinalgResult<Vector> {
        if b.len() != self.rows {
            return Err(LinalgError::MatVecDim {
                op: "solve_spd",
                rows: self.rows,
                cols: self.cols,
                vec_len: b.len(),
            });
        }
        let factor = self.factor().as_ref().map_err(Clone::clone)?;
        let mut x = factor.solve(b.as_slice());
        let xv = Vector(x.clone());
        let mx = self.matvec(&xv)?;
        let r: Vec<f64> = b
            .as_slice()
            .iter()
            .zip(mx.as_slice())
            .map(|(bi, mi)| bi - mi)
            .collect();
        let dx = factor.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        Ok(Vector(x))
    }

    /// Largest singular value, via power iteration on `M^T M` with the
    /// default relative tolerance.
    pub fn spectral_norm(&self) -> LinalgResult<f64> {
        self.spectral_norm_with_tol(DEFAULT_SPECTRAL_TOL)
    }

    pub fn spectral_norm_with_tol(&self, tol: f64) -> LinalgResult<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let gram = self.gram();
        lambda_max_sym_psd(&gram, tol).map(|lambda| lambda.max(0.0).sqrt())
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix({}x{}; {:?})", self.rows, self.cols, self.data)
    }
}

impl PartialEq for Matrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = (0..self.rows).map(|i| self.row(i)).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(rows).map_err(D::Error::custom)
    }
}

/// Deterministic start vectors for the power iteration, tried in order when an
/// earlier one turns out to lie in the kernel. Seeded random vectors come
/// first: structured starts (all-ones, ramps) can be exactly orthogonal to the
/// top eigenvector of structured matrices — the difference-coupling gram is
/// the canonical offender — which stalls the iteration on a lower eigenvalue.
fn power_start(attempt: usize, n: usize) -> Option<Vector> {
    use rand::Rng;
    use rand::SeedableRng;
    let raw: Vec<f64> = match attempt {
        0 | 1 => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5add1e + attempt as u64);
            (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
        }
        2 => vec![1.0; n],
        3 => (0..n)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect(),
        _ => return None,
    };
    let v = Vector(raw);
    let norm = v.norm();
    (norm > 0.0).then(|| v.scaled(1.0 / norm))
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix, by power
/// iteration with a Rayleigh-quotient stopping rule.
pub(crate) fn lambda_max_sym_psd(m: &Matrix, tol: f64) -> LinalgResult<f64> {
    assert_eq!(m.rows, m.cols);
    if m.is_zero() {
        return Ok(0.0);
    }
    let n = m.rows;
    let collapse_tol = f64::EPSILON * m.frobenius_norm() * n as f64;
    let mut attempt = 0;
    let mut v = power_start(attempt, n).expect("first start vector is always valid");
    let mut lambda_prev = f64::NAN;
    for _ in 0..POWER_ITERATION_CAP {
        let w = m.matvec(&v)?;
        let norm_w = w.norm();
        if norm_w <= collapse_tol {
            // Start vector sat in (or collapsed into) the kernel; restart.
            attempt += 1;
            match power_start(attempt, n) {
                Some(next) => {
                    v = next;
                    lambda_prev = f64::NAN;
                    continue;
                }
                None => return Ok(0.0),
            }
        }
        let lambda = v.dot(&w);
        v = w.scaled(1.0 / norm_w);
        if lambda_prev.is_finite()
            && (lambda - lambda_prev).abs() <= tol * lambda.max(f64::MIN_POSITIVE)
        {
            return Ok(lambda);
        }
        lambda_prev = lambda;
    }
    Err(LinalgError::PowerIterationNoConvergence {
        last_estimate: lambda_prev.max(0.0).sqrt(),
        iterations: POWER_ITERATION_CAP,
    })
}

/// Smallest eigenvalue of a symmetric positive semidefinite matrix, computed
/// by deflating against the largest one: `lambda_min = lmax - lmax(lmax*I - M)`.
/// May come out slightly negative through roundoff; callers clamp as needed.
pub(crate) fn lambda_min_sym_psd(m: &Matrix, tol: f64) -> LinalgResult<f64> {
    let lmax = lambda_max_sym_psd(m, tol)?;
    if lmax == 0.0 {
        return Ok(0.0);
    }
    let shifted = Matrix::from_fn(m.rows, m.cols, |i, j| {
        let id = if i == j { lmax } else { 0.0 };
        id - m.get(i, j)
    });
    let top = lambda_max_sym_psd(&shifted, tol)?;
    Ok(lmax - top)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: Vec<Vec<f64>>) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn vec2(entries: &[f64]) -> Vector {
        Vector::new(entries.to_vec()).unwrap()
    }

    /// Brute-force eigenvalues of a small symmetric matrix by cyclic Jacobi
    /// rotations; used as an independent oracle for the power iteration.
    #[allow(clippy::needless_range_loop)]
    fn jacobi_eigenvalues(m: &Matrix) -> Vec<f64> {
        let n = m.rows();
        let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    off += a[i][j] * a[i][j];
                }
            }
            if off < 1e-28 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-30 {
                        continue;
                    }
                    let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i][i]).collect()
    }

    fn seeded_spd(n: usize, seed: u64) -> Matrix {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = Matrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let gtg = g.gram();
        gtg.scaled_plus_identity(1.0).unwrap()
    }

    #[test]
    fn matvec_diagonal_scales_entries() {
        let m = mat(vec![vec![1.0, 0.0], vec![0.0, 2.0]]);
        let out = m.matvec(&vec2(&[3.0, 4.0])).unwrap();
        assert_eq!(out.as_slice(), &[3.0, 8.0]);
    }

    #[test]
    fn matvec_one_by_one() {
        let m = mat(vec![vec![-1.0]]);
        let out = m.matvec(&vec2(&[2.0])).unwrap();
        assert_eq!(out.as_slice(), &[-2.0]);
    }

    #[test]
    fn matvec_dimension_mismatch_names_both_shapes() {
        let m = mat(vec![vec![1.0, 0.0], vec![0.0, 2.0]]);
        let err = m.matvec(&vec2(&[1.0, 2.0, 3.0])).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("2x2"),
            "message should name the matrix shape: {msg}"
        );
        assert!(
            msg.contains('3'),
            "message should name the vector length: {msg}"
        );
    }

    #[test]
    fn matvec_t_matches_explicit_transpose() {
        let m = mat(vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        let v = vec2(&[1.0, -1.0]);
        let fast = m.matvec_t(&v).unwrap();
        let slow = m.transpose().matvec(&v).unwrap();
        assert_eq!(fast, slow);
    }

    #[test]
    fn builders_reject_bad_input() {
        assert!(matches!(
            Matrix::from_vec(2, 2, vec![1.0; 3]),
            Err(LinalgError::ShapeMismatch { .. })
        ));
        assert!(matches!(
            Matrix::from_vec(0, 2, vec![]),
            Err(LinalgError::ZeroDimension { .. })
        ));
        assert!(matches!(
            Matrix::from_vec(1, 2, vec![1.0, f64::NAN]),
            Err(LinalgError::NonFinite { index: 1, .. })
        ));
        assert!(matches!(
            Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0]]),
            Err(LinalgError::RaggedRows { row: 1, .. })
        ));
        assert!(Vector::new(vec![]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn solve_spd_two_by_two() {
        let m = mat(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        let x = m.solve_spd(&vec2(&[3.0, 3.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solve_spd_rejects_asymmetric_matrix() {
        let m = mat(vec![vec![2.0, 1.0], vec![0.5, 2.0]]);
        let err = m.solve_spd(&vec2(&[1.0, 1.0])).unwrap_err();
        assert!(matches!(err, LinalgError::NotSymmetric { .. }));
    }

    #[test]
    fn solve_spd_rejects_indefinite_matrix_naming_pivot() {
        let m = mat(vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        match m.solve_spd(&vec2(&[1.0, 1.0])).unwrap_err() {
            LinalgError::NonPositivePivot { index, value } => {
                assert_eq!(index, 1);
                assert!(value <= 0.0);
            }
            other => panic!("expected pivot error, got {other:?}"),
        }
    }

    #[test]
    fn solve_spd_residual_small_on_random_instances() {
        for seed in 0..8u64 {
            let n = 5 + (seed as usize * 7) % 46;
            let m = seeded_spd(n, seed);
            let b = {
                use rand::Rng;
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + 1000);
                Vector::new((0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap()
            };
            let x = m.solve_spd(&b).unwrap();
            let r = m.matvec(&x).unwrap().sub(&b).norm();
            assert!(
                r <= 1e-10 * (1.0 + b.norm()),
                "residual {r:.3e} too large for n={n}"
            );
        }
    }

    #[test]
    fn solve_spd_factorization_is_reused() {
        let m = seeded_spd(20, 7);
        let b = Vector::zeros(20).add_scaled(1.0, &vec2(&[1.0; 20]));
        let x1 = m.solve_spd(&b).unwrap();
        let x2 = m.solve_spd(&b).unwrap();
        assert_eq!(x1, x2);
        assert!(m.chol.get().is_some(), "factor cache should be filled");
    }

    #[test]
    fn solve_spd_cache_is_readable_across_threads() {
        let m = std::sync::Arc::new(seeded_spd(12, 3));
        let b = std::sync::Arc::new(vec2(&[1.0; 12]));
        let mut handles = Vec::new();
        for _ in 0..4 {
            let m = m.clone();
            let b = b.clone();
            handles.push(std::thread::spawn(move || m.solve_spd(&b).unwrap()));
        }
        let results: Vec<Vector> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        for r in &results[1..] {
            assert_eq!(r, &results[0]);
        }
    }

    #[test]
    fn spectral_norm_known_values() {
        let neg_one = mat(vec![vec![-1.0]]);
        assert!((neg_one.spectral_norm().unwrap() - 1.0).abs() < 1e-12);

        let diag = mat(vec![vec![3.0, 0.0], vec![0.0, 1.0]]);
        assert!((diag.spectral_norm().unwrap() - 3.0).abs() < 1e-9);

        // All-ones start lies exactly in the kernel of F^T F here; the
        // deterministic fallback start has to kick in.
        let diff = mat(vec![vec![-1.0, 1.0]]);
        assert!((diff.spectral_norm().unwrap() - 2f64.sqrt()).abs() < 1e-9);

        let zero = Matrix::zeros(3, 2);
        assert_eq!(zero.spectral_norm().unwrap(), 0.0);
    }

    #[test]
    fn spectral_norm_matches_jacobi_oracle_up_to_eight() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for n in 1..=8usize {
            for m_rows in [n, n + 2] {
                let f = Matrix::from_fn(m_rows, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
                let by_power = f.spectral_norm().unwrap();
                let eigs = jacobi_eigenvalues(&f.gram());
                let by_jacobi = eigs.iter().fold(0f64, |a, &b| a.max(b)).max(0.0).sqrt();
                assert!(
                    (by_power - by_jacobi).abs() <= 1e-8 * (1.0 + by_jacobi),
                    "{m_rows}x{n}: power {by_power} vs jacobi {by_jacobi}"
                );
            }
        }
    }

    #[test]
    fn spectral_norm_dominates_probe_ratios() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let f = Matrix::from_fn(6, 4, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let norm = f.spectral_norm().unwrap();
        for _ in 0..200 {
            let v = Vector::new((0..4).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap();
            let ratio = f.matvec(&v).unwrap().norm() / v.norm();
            assert!(norm >= ratio - 1e-8, "norm {norm} < probe ratio {ratio}");
        }
    }

    #[test]
    fn lambda_min_matches_jacobi_oracle() {
        for seed in 0..5u64 {
            let m = seeded_spd(6, seed);
            let by_deflation = lambda_min_sym_psd(&m, 1e-12).unwrap();
            let eigs = jacobi_eigenvalues(&m);
            let by_jacobi = eigs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            assert!(
                (by_deflation - by_jacobi).abs() <= 1e-7 * (1.0 + by_jacobi),
                "deflation {by_deflation} vs jacobi {by_jacobi}"
            );
        }
    }

    #[test]
    fn matrix_serde_round_trips_as_nested_arrays() {
        let m = mat(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "[[1.0,2.0],[3.0,4.0]]");
        let back: Matrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<Matrix>("[[1.0],[2.0,3.0]]").is_err());
    }

    #[test]
    fn vector_helpers() {
        let v = vec2(&[3.0, 4.0]);
        assert_eq!(v.norm(), 5.0);
        assert_eq!(v.norm_inf(), 4.0);
        let w = v.add_scaled(2.0, &vec2(&[1.0, 1.0]));
        assert_eq!(w.as_slice(), &[5.0, 6.0]);
        let c = v.concat(&w);
        assert_eq!(c.len(), 4);
        let (a, b) = c.split_at(2);
        assert_eq!(a, v);
        assert_eq!(b, w);
    }
}
