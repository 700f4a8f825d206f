//! Dense complex matrices, Hermitian eigendecomposition and norms.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::{Add, Index, IndexMut, Mul, Sub};

pub type C64 = Complex64;

pub const DEFAULT_HERM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian: entry ({row}, {col}) deviates by {deviation:.3e}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("malformed matrix data: {0}")]
    Malformed(String),
    #[error("eigensolver failed to converge")]
    NoConvergence,
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let cols = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            if row.len() != cols {
                return Err(LinalgError::DimensionMismatch { expected: cols, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(CMatrix { rows: r, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols);
        CMatrix { rows, cols, data: values.iter().map(|&v| C64::new(v, 0.0)).collect() }
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// |u⟩⟨v|
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn kron(&self, other: &CMatrix) -> Self {
        let (r2, c2) = (other.rows, other.cols);
        Self::from_fn(self.rows * r2, self.cols * c2, |i, j| self[(i / r2, j / c2)] * other[(i % r2, j % c2)])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let g = HermitianMatrix::from_product_unchecked(&(&self.adjoint() * self));
        eig_hermitian(&g).eigenvalues.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Re tr(A B) for square matrices of equal size.
    pub fn real_trace_product(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = 0.0;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += (self[(i, k)] * other[(k, i)]).re;
            }
        }
        acc
    }

    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        &(self * other) - &(other * self)
    }

    pub fn sub_block(&self, rows: &[usize], cols: &[usize]) -> CMatrix {
        CMatrix::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

/// Dense Hermitian matrix. Construction checks Hermiticity within `herm_tol` and then
/// symmetrizes to (M + M†)/2.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: CMatrix,
    herm_tol: f64,
}

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self, LinalgError> {
        Self::with_tol(m, DEFAULT_HERM_TOL)
    }

    pub fn with_tol(m: CMatrix, herm_tol: f64) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
        }
        let n = m.rows;
        let mut worst = (0, 0, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                let x = m[(i, j)];
                if !(x.re.is_finite() && x.im.is_finite()) {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
                let dev = (x - m[(j, i)].conj()).norm();
                if dev > worst.2 {
                    worst = (i, j, dev);
                }
            }
        }
        if worst.2 > herm_tol {
            return Err(LinalgError::NotHermitian { row: worst.0, col: worst.1, deviation: worst.2 });
        }
        Ok(Self::symmetrized(m, herm_tol))
    }

    /// Symmetrize without checking; for matrices Hermitian by construction.
    pub fn from_product_unchecked(m: &CMatrix) -> Self {
        Self::symmetrized(m.clone(), DEFAULT_HERM_TOL)
    }

    fn symmetrized(m: CMatrix, herm_tol: f64) -> Self {
        let n = m.rows;
        let s = CMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
        HermitianMatrix { m: s, herm_tol }
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix { m: CMatrix::zeros(n, n), herm_tol: DEFAULT_HERM_TOL }
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix { m: CMatrix::identity(n), herm_tol: DEFAULT_HERM_TOL }
    }

    pub fn from_real_diag(values: &[f64]) -> Self {
        let d: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        HermitianMatrix { m: CMatrix::diag(&d), herm_tol: DEFAULT_HERM_TOL }
    }

    /// Real symmetric matrix from row-major values.
    pub fn from_real(n: usize, values: &[f64]) -> Result<Self, LinalgError> {
        Self::new(CMatrix::from_real(n, n, values))
    }

    /// |v⟩⟨v|
    pub fn projector(v: &[C64]) -> Self {
        Self::from_product_unchecked(&CMatrix::outer(v, v))
    }

    pub fn dim(&self) -> usize {
        self.m.rows
    }

    pub fn herm_tol(&self) -> f64 {
        self.herm_tol
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { m: &self.m + &other.m, herm_tol: self.herm_tol }
    }

    pub fn sub(&self, other: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { m: &self.m - &other.m, herm_tol: self.herm_tol }
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        HermitianMatrix { m: self.m.scale_re(s), herm_tol: self.herm_tol }
    }

    /// Re tr(A B), the real Hilbert–Schmidt inner product.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        self.m.real_trace_product(&other.m)
    }

    /// U A U†
    pub fn conjugate_by(&self, u: &CMatrix) -> HermitianMatrix {
        Self::from_product_unchecked(&(&(u * &self.m) * &u.adjoint()))
    }

    pub fn kron(&self, other: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { m: self.m.kron(&other.m), herm_tol: self.herm_tol }
    }

    pub fn sum<'a>(n: usize, items: impl IntoIterator<Item = &'a HermitianMatrix>) -> HermitianMatrix {
        let mut acc = HermitianMatrix::zeros(n);
        for x in items {
            acc = acc.add(x);
        }
        acc
    }

    pub fn expectation(&self, v: &[C64]) -> f64 {
        let w = self.m.matvec(v);
        v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        (&self.m - &other.m).max_abs()
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.m[idx]
    }
}

/// Eigendecomposition with ascending eigenvalues and eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    pub fn reconstruct(&self) -> CMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        CMatrix::from_fn(n, n, |i, j| (0..n).map(|k| v[(i, k)] * self.eigenvalues[k] * v[(j, k)].conj()).sum())
    }

    /// Σ f(λ_k) |v_k⟩⟨v_k|
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.eigenvalues.len();
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&x| f(x)).collect();
        let v = &self.eigenvectors;
        HermitianMatrix::from_product_unchecked(&CMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * fl[k] * v[(j, k)].conj()).sum()
        }))
    }
}

/// Hermitian eigendecomposition. Tridiagonal input goes through implicit QL, everything
/// else through cyclic Jacobi.
pub fn eig_hermitian(h: &HermitianMatrix) -> Spectrum {
    let n = h.dim();
    if n >= 3 && is_tridiagonal(h.as_matrix()) {
        return eig_hermitian_tridiagonal(h.as_matrix());
    }
    eig_jacobi(h)
}

fn is_tridiagonal(m: &CMatrix) -> bool {
    let n = m.rows;
    for i in 0..n {
        for j in 0..n {
            if i.abs_diff(j) > 1 && m[(i, j)] != C64::new(0.0, 0.0) {
                return false;
            }
        }
    }
    true
}

fn eig_hermitian_tridiagonal(m: &CMatrix) -> Spectrum {
    let n = m.rows;
    // Rotate phases so the off-diagonal becomes real and nonnegative.
    let mut phases = vec![C64::new(1.0, 0.0); n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for k in 0..n - 1 {
        let b = m[(k, k + 1)];
        let a = b.norm();
        off[k] = a;
        phases[k + 1] = if a > 0.0 { phases[k] * b.conj() / a } else { phases[k] };
    }
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    let te = eig_tridiagonal(&diag, &off).expect("tridiagonal QL converges on Hermitian input");
    let vecs = CMatrix::from_fn(n, n, |i, k| phases[i] * te.vectors[i * n + k]);
    Spectrum { eigenvalues: te.values, eigenvectors: vecs }
}

/// Cyclic Jacobi eigendecomposition for complex Hermitian matrices.
pub fn eig_jacobi(h: &HermitianMatrix) -> Spectrum {
    let n = h.dim();
    let mut a = h.as_matrix().clone();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();
    if n > 1 && scale > 0.0 {
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() <= 1e-17 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let b = a[(p, q)];
                    let babs = b.norm();
                    if babs <= 1e-300 || babs <= 1e-18 * scale {
                        continue;
                    }
                    let ph = b / babs;
                    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * babs);
                    let t = if theta.abs() > 1e150 {
                        0.5 / theta
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let cs = 1.0 / (1.0 + t * t).sqrt();
                    let sn = t * cs;
                    let e_m = ph.conj();
                    // columns: A <- A J
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * cs - akq * e_m * sn;
                        a[(k, q)] = akp * sn + akq * e_m * cs;
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * cs - vkq * e_m * sn;
                        v[(k, q)] = vkp * sn + vkq * e_m * cs;
                    }
                    // rows: A <- J† A
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = apk * cs - aqk * ph * sn;
                        a[(q, k)] = apk * sn + aqk * ph * cs;
                    }
                    a[(p, q)] = C64::new(0.0, 0.0);
                    a[(q, p)] = C64::new(0.0, 0.0);
                    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                }
            }
        }
    }
    let vals: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    sorted_spectrum(vals, |i, k| v[(i, k)], n)
}

fn sorted_spectrum(vals: Vec<f64>, vec_at: impl Fn(usize, usize) -> C64, n: usize) -> Spectrum {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let eigenvalues = order.iter().map(|&k| vals[k]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, k| vec_at(i, order[k]));
    Spectrum { eigenvalues, eigenvectors }
}

/// Eigenpairs of a real symmetric tridiagonal matrix; `vectors` is row-major n×n with
/// eigenvectors in columns, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct TridiagonalEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

/// Implicit QL with Wilkinson-type shifts.
pub fn eig_tridiagonal(diag: &[f64], off: &[f64]) -> Result<TridiagonalEigen, LinalgError> {
    let n = diag.len();
    if off.len() + 1 != n.max(1) {
        return Err(LinalgError::DimensionMismatch { expected: n.saturating_sub(1), found: off.len() });
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..off.len()].copy_from_slice(off);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(LinalgError::NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut cc, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = cc * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                cc = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * cc * b;
                p = s * r;
                d[i + 1] = g + p;
                g = cc * r - b;
                for k in 0..n {
                    let f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + cc * f;
                    z[k * n + i] = cc * z[k * n + i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = vec![0.0; n * n];
    for i in 0..n {
        for (kk, &k) in order.iter().enumerate() {
            vectors[i * n + kk] = z[i * n + k];
        }
    }
    Ok(TridiagonalEigen { values, vectors })
}

pub fn min_eigenvalue(m: &HermitianMatrix) -> f64 {
    if m.dim() == 0 {
        return 0.0;
    }
    eig_hermitian(m).eigenvalues[0]
}

pub fn max_eigenvalue(m: &HermitianMatrix) -> f64 {
    if m.dim() == 0 {
        return 0.0;
    }
    *eig_hermitian(m).eigenvalues.last().unwrap()
}

pub fn is_psd(m: &HermitianMatrix, tol: f64) -> bool {
    min_eigenvalue(m) >= -tol
}

pub fn operator_norm(m: &HermitianMatrix) -> f64 {
    eig_hermitian(m).eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn trace_norm(m: &HermitianMatrix) -> f64 {
    eig_hermitian(m).eigenvalues.iter().map(|x| x.abs()).sum()
}

/// Sum of the positive eigenvalues.
pub fn positive_trace(m: &HermitianMatrix) -> f64 {
    eig_hermitian(m).eigenvalues.iter().filter(|x| **x > 0.0).sum()
}

/// Principal square root of a PSD matrix; negative rounding eigenvalues are clamped.
pub fn sqrt_psd(m: &HermitianMatrix) -> HermitianMatrix {
    eig_hermitian(m).map(|x| x.max(0.0).sqrt())
}

/// Partial trace over the second factor of a (da·db)-dimensional operator.
pub fn partial_trace_second(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    assert_eq!(m.rows(), da * db);
    CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum())
}

/// Partial trace over the first factor.
pub fn partial_trace_first(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    assert_eq!(m.rows(), da * db);
    CMatrix::from_fn(db, db, |i, j| (0..da).map(|k| m[(k * db + i, k * db + j)]).sum())
}

pub fn normalize(v: &mut [C64]) {
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

pub fn inner_product(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

// JSON: row-major nested arrays of [re, im] pairs. Plain numbers are accepted on input.

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonEntry {
    Pair([f64; 2]),
    Real(f64),
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> =
            (0..self.rows).map(|i| (0..self.cols).map(|j| [self[(i, j)].re, self[(i, j)].im]).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<JsonEntry>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<C64>> = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|e| match e {
                        JsonEntry::Pair([re, im]) => C64::new(re, im),
                        JsonEntry::Real(re) => C64::new(re, 0.0),
                    })
                    .collect()
            })
            .collect();
        CMatrix::from_rows(&rows).map_err(D::Error::custom)
    }
}

impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.m.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = CMatrix::deserialize(d)?;
        HermitianMatrix::new(m).map_err(D::Error::custom)
    }
}

/// Pauli matrices.
pub fn sigma_x() -> HermitianMatrix {
    HermitianMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

pub fn sigma_y() -> HermitianMatrix {
    HermitianMatrix::new(CMatrix::from_rows(&[vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]]).unwrap())
        .unwrap()
}

pub fn sigma_z() -> HermitianMatrix {
    HermitianMatrix::from_real_diag(&[1.0, -1.0])
}
