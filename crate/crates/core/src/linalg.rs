//! Dense complex matrices, Hermitian eigendecomposition (cyclic Jacobi) and
//! Householder QR with a positive real diagonal in `R`.
//!
//! Matrices are immutable values: every operation returns a fresh matrix.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Hermiticity tolerance used when validating eigensolver input, scaled by
/// the largest entry magnitude (floored at 1).
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Jacobi stops once the off-diagonal Frobenius mass drops below this
/// fraction of the full Frobenius norm.
const JACOBI_REL_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Diagonal entries of `R` below this fraction of the largest input entry
/// mark the input as rank deficient.
const QR_RANK_TOL: f64 = 1e-12;

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>10.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries. Rejects a length mismatch,
    /// empty shapes and non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_vec(n_rows, n_cols, rows.concat())
    }

    /// Square matrix from real entries given row by row.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![ZERO; rows * cols])
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m.data[i * d + i] = ONE;
        }
        m
    }

    /// Real diagonal matrix.
    pub fn from_diag(diag: &[f64]) -> Self {
        let d = diag.len();
        let mut m = Self::zeros(d, d);
        for (i, &x) in diag.iter().enumerate() {
            m.data[i * d + i] = Complex64::new(x, 0.0);
        }
        m
    }

    /// Rank-one outer product `v v^dagger`.
    pub fn outer(v: &[Complex64]) -> Self {
        let d = v.len();
        let mut data = Vec::with_capacity(d * d);
        for a in v {
            for b in v {
                data.push(a * b.conj());
            }
        }
        Self::from_raw(d, d, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self[(i, j)]
    }

    pub fn ensure_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare { rows: self.rows, cols: self.cols })
        }
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; n * m];
        for i in 0..n {
            let row = &mut out[i * m..(i + 1) * m];
            for l in 0..k {
                let a = self.data[i * k + l];
                if a == ZERO {
                    continue;
                }
                let other_row = &other.data[l * m..(l + 1) * m];
                for (o, b) in row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_raw(n, m, out))
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot apply {}x{} matrix to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self[(i, j)].conj());
            }
        }
        Self::from_raw(self.cols, self.rows, out)
    }

    /// `A^dagger A`, Hermitian by construction.
    pub fn gram(&self) -> ComplexMatrix {
        let n = self.cols;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for j in i..n {
                let mut acc = ZERO;
                for k in 0..self.rows {
                    acc += self[(k, i)].conj() * self[(k, j)];
                }
                if i == j {
                    out[i * n + i] = Complex64::new(acc.re, 0.0);
                } else {
                    out[i * n + j] = acc;
                    out[j * n + i] = acc.conj();
                }
            }
        }
        Self::from_raw(n, n, out)
    }

    fn zip_with(
        &self,
        other: &ComplexMatrix,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<ComplexMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "shapes {}x{} and {}x{} differ",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self::from_raw(self.rows, self.cols, data))
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: Complex64) -> ComplexMatrix {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|z| z * c).collect())
    }

    pub fn scale_real(&self, c: f64) -> ComplexMatrix {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|z| z * c).collect())
    }

    /// `self - c * I`.
    pub fn shift_diagonal(&self, c: f64) -> Result<ComplexMatrix> {
        let d = self.ensure_square()?;
        let mut out = self.clone();
        for i in 0..d {
            out.data[i * d + i] -= c;
        }
        Ok(out)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Squared Frobenius norm, `tr(A^dagger A)`.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// Largest entrywise modulus of `A - A^dagger`.
    pub fn hermitian_deviation(&self) -> Result<f64> {
        let d = self.ensure_square()?;
        let mut dev = 0.0f64;
        for i in 0..d {
            for j in i..d {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        Ok(dev)
    }

    /// `(A + A^dagger) / 2`.
    pub fn symmetrized(&self) -> Result<ComplexMatrix> {
        let d = self.ensure_square()?;
        let mut out = self.clone();
        for i in 0..d {
            out.data[i * d + i] = Complex64::new(self[(i, i)].re, 0.0);
            for j in (i + 1)..d {
                let z = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                out.data[i * d + j] = z;
                out.data[j * d + i] = z.conj();
            }
        }
        Ok(out)
    }

    /// Largest entrywise modulus of `A^dagger A - I`.
    pub fn unitarity_residual(&self) -> Result<f64> {
        let d = self.ensure_square()?;
        self.gram().max_abs_diff(&Self::identity(d))
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }
}

/// Eigen-decomposition of a Hermitian matrix: `A = V diag(values) V^dagger`.
#[derive(Debug, Clone)]
pub struct HermitianEigenSystem {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigenSystem {
    /// `V diag(values) V^dagger`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = ZERO;
                for k in 0..d {
                    acc += v[(i, k)] * self.eigenvalues[k] * v[(j, k)].conj();
                }
                out[i * d + j] = acc;
            }
        }
        ComplexMatrix::from_raw(d, d, out)
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// The input is validated against [`HERMITIAN_TOL`] and symmetrized before
/// iterating.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<HermitianEigenSystem> {
    let n = a.ensure_square()?;
    let deviation = a.hermitian_deviation()?;
    if deviation > HERMITIAN_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    let mut w = a.symmetrized()?.data;
    let mut v = ComplexMatrix::identity(n).data;

    let total = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let target = JACOBI_REL_TOL * total;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| w[i * n + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut w, &mut v, n, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| w[i * n + i].re).collect();
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]));

    let eigenvalues = order.iter().map(|&k| diag[k]).collect();
    let mut vecs = vec![ZERO; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            vecs[i * n + new_col] = v[i * n + old_col];
        }
    }
    Ok(HermitianEigenSystem {
        eigenvalues,
        eigenvectors: ComplexMatrix::from_raw(n, n, vecs),
    })
}

/// One complex Jacobi rotation annihilating `w[p][q]`.
///
/// The rotation is `G = diag(1, e^{-i phi}) * [[c, s], [-s, c]]` on the
/// `(p, q)` plane, where `phi` is the phase of `w[p][q]`; `w <- G^dagger w G`
/// and `v <- v G`.
fn rotate(w: &mut [Complex64], v: &mut [Complex64], n: usize, p: usize, q: usize) {
    let z = w[p * n + q];
    let modulus = z.norm();
    if modulus == 0.0 {
        return;
    }
    let phase = z / modulus;
    let app = w[p * n + p].re;
    let aqq = w[q * n + q].re;

    let theta = (aqq - app) / (2.0 * modulus);
    let t = if theta.is_infinite() {
        0.0
    } else {
        let t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let g00 = Complex64::new(c, 0.0);
    let g01 = Complex64::new(s, 0.0);
    let g10 = -phase.conj() * s;
    let g11 = phase.conj() * c;

    for k in 0..n {
        let akp = w[k * n + p];
        let akq = w[k * n + q];
        w[k * n + p] = akp * g00 + akq * g10;
        w[k * n + q] = akp * g01 + akq * g11;

        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp * g00 + vkq * g10;
        v[k * n + q] = vkp * g01 + vkq * g11;
    }
    for k in 0..n {
        let apk = w[p * n + k];
        let aqk = w[q * n + k];
        w[p * n + k] = g00.conj() * apk + g10.conj() * aqk;
        w[q * n + k] = g01.conj() * apk + g11.conj() * aqk;
    }
    w[p * n + q] = ZERO;
    w[q * n + p] = ZERO;
    w[p * n + p] = Complex64::new(w[p * n + p].re, 0.0);
    w[q * n + q] = Complex64::new(w[q * n + q].re, 0.0);
}

/// Householder QR of a square matrix, normalized so that `R` has a real,
/// strictly positive diagonal (the phases are absorbed into `Q`). With that
/// normalization the factorization is unique.
///
/// Returns [`Error::RankDeficient`] when some `|r_ii|` falls below
/// `1e-12 * max|a_ij|`; callers sampling random matrices should draw again.
pub fn qr_unitary(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = a.ensure_square()?;
    let scale = a.max_abs();
    let mut r = a.data.clone();
    let mut q = ComplexMatrix::identity(n).data;
    let mut v = vec![ZERO; n];

    for k in 0..n.saturating_sub(1) {
        let xnorm = (k..n).map(|i| r[i * n + k].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = r[k * n + k];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * xnorm;

        for i in k..n {
            v[i] = r[i * n + k];
        }
        v[k] -= alpha;
        let vnorm = (k..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for vi in v.iter_mut().skip(k) {
            *vi /= vnorm;
        }

        // R <- (I - 2 v v^dagger) R
        for j in k..n {
            let dot: Complex64 = (k..n).map(|i| v[i].conj() * r[i * n + j]).sum();
            for i in k..n {
                r[i * n + j] -= v[i] * dot * 2.0;
            }
        }
        // Q <- Q (I - 2 v v^dagger)
        for i in 0..n {
            let dot: Complex64 = (k..n).map(|l| q[i * n + l] * v[l]).sum();
            for l in k..n {
                q[i * n + l] -= dot * v[l].conj() * 2.0;
            }
        }
    }

    for i in 0..n {
        for j in 0..i {
            r[i * n + j] = ZERO;
        }
    }

    for i in 0..n {
        let rii = r[i * n + i];
        let magnitude = rii.norm();
        if scale == 0.0 || magnitude < QR_RANK_TOL * scale {
            return Err(Error::RankDeficient { index: i, magnitude });
        }
        let phase = rii / magnitude;
        for row in 0..n {
            q[row * n + i] *= phase;
        }
        for j in i..n {
            r[i * n + j] *= phase.conj();
        }
        r[i * n + i] = Complex64::new(magnitude, 0.0);
    }

    Ok((ComplexMatrix::from_raw(n, n, q), ComplexMatrix::from_raw(n, n, r)))
}
