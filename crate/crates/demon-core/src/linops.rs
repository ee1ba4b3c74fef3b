//! Dense complex linear algebra substrate.
//!
//! Everything here works on small dense matrices (3×3 operators, 9×9
//! superoperators). The vectorization convention is column-stacking:
//! col[ρ] puts entry ρ[i][j] at index i + n·j, so that
//! vec(A·X·B) = (Bᵀ ⊗ A)·vec(X) and a unitary channel ρ → UρU† becomes
//! the superoperator conj(U) ⊗ U.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::Error;

/// Shorthand for a real-valued complex number.
#[inline]
pub(crate) fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, cr(1.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Diagonal matrix from the given entries.
    pub fn from_diag(d: &[Complex64]) -> Self {
        let mut m = CMatrix::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).conj())
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| f64::max(m, x.norm()))
    }

    /// Largest entrywise |self − other|.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).norm()))
    }

    /// Maximum column sum of entry moduli (the induced 1-norm).
    pub fn one_norm(&self) -> f64 {
        let mut best = 0.0;
        for j in 0..self.cols {
            let s: f64 = (0..self.rows).map(|i| self.get(i, j).norm()).sum();
            best = f64::max(best, s);
        }
        best
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in i..self.cols {
                if (self.get(i, j) - self.get(j, i).conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// (M + M†)/2 — discards anti-Hermitian rounding noise.
    pub fn hermitized(&self) -> CMatrix {
        assert!(self.is_square());
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            (self.get(i, j) + self.get(j, i).conj()) * cr(0.5)
        })
    }

    /// Matrix–vector product.
    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        self.matvec_into(v, &mut out);
        out
    }

    /// Matrix–vector product into a caller-provided buffer (hot path for
    /// trajectory enumeration).
    pub fn matvec_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(v.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(v.iter()) {
                acc += a * b;
            }
            out[i] = acc;
        }
    }

    fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul dimension mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Column-stacked density matrix (or any vectorized operator).
#[derive(Debug, Clone, PartialEq)]
pub struct VecState {
    dim: usize,
    data: Vec<Complex64>,
}

impl VecState {
    /// Wraps a raw vector; the length must be a perfect square.
    pub fn from_vec(data: Vec<Complex64>) -> Result<Self, Error> {
        let dim = data.len();
        if isqrt(dim).is_none() {
            return Err(Error::NotPerfectSquare { dim });
        }
        Ok(VecState { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Side length n of the devectorized n×n matrix.
    pub fn side(&self) -> usize {
        isqrt(self.dim).expect("checked at construction")
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Applies a superoperator: returns s·v.
    pub fn apply(&self, s: &CMatrix) -> VecState {
        assert_eq!(s.cols(), self.dim);
        VecState {
            dim: s.rows(),
            data: s.matvec(&self.data),
        }
    }
}

fn isqrt(n: usize) -> Option<usize> {
    let mut k = 0usize;
    while k * k < n {
        k += 1;
    }
    if k * k == n {
        Some(k)
    } else {
        None
    }
}

/// col[m]: stacks the columns of a square matrix, entry (i, j) → index i + n·j.
pub fn vectorize(m: &CMatrix) -> Result<VecState, Error> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for i in 0..n {
            data[i + n * j] = m.get(i, j);
        }
    }
    Ok(VecState { dim: n * n, data })
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &VecState) -> Result<CMatrix, Error> {
    let n = isqrt(v.dim).ok_or(Error::NotPerfectSquare { dim: v.dim })?;
    Ok(CMatrix::from_fn(n, n, |i, j| v.data[i + n * j]))
}

/// Kronecker product with the block layout (a⊗b)[p·br+q, r·bc+s] = a[p][r]·b[q][s].
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for p in 0..ar {
        for r in 0..ac {
            let apr = a.get(p, r);
            if apr.norm_sqr() == 0.0 {
                continue;
            }
            for q in 0..br {
                for s in 0..bc {
                    out.set(p * br + q, r * bc + s, apr * b.get(q, s));
                }
            }
        }
    }
    out
}

/// Hilbert–Schmidt inner product Tr[a†·b].
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<Complex64, Error> {
    if (a.rows(), a.cols()) != (b.rows(), b.cols()) {
        return Err(Error::DimensionMismatch {
            a_rows: a.rows(),
            a_cols: a.cols(),
            b_rows: b.rows(),
            b_cols: b.cols(),
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.data().iter().zip(b.data().iter()) {
        acc += x.conj() * y;
    }
    Ok(acc)
}

/// Trace of the devectorized matrix: Σ v[i·(n+1)], without materializing it.
pub fn trace_of_vectorized(v: &VecState) -> Complex64 {
    let n = v.side();
    (0..n).map(|i| v.data[i * (n + 1)]).sum()
}

/// Matrix power by binary exponentiation.
pub fn matrix_power(m: &CMatrix, n: u32) -> Result<CMatrix, Error> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let mut result = CMatrix::identity(m.rows());
    let mut base = m.clone();
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    Ok(result)
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub struct EighResult {
    /// Eigenvalues sorted ascending.
    pub values: Vec<f64>,
    /// Unit eigenvectors as columns, ordered like `values`; each column's
    /// first nonzero component is made real positive for determinism.
    pub vectors: CMatrix,
}

pub fn eigh(m: &CMatrix) -> Result<EighResult, Error> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let scale = f64::max(1.0, m.max_abs());
    if !m.is_hermitian(1e-12 * scale) {
        let dev = m.max_abs_diff(&m.adjoint());
        return Err(Error::NotHermitian { max_dev: dev });
    }
    let n = m.rows();
    let mut a = m.hermitized();
    let mut v = CMatrix::identity(n);

    let off = |a: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a.get(i, j).norm_sqr();
                }
            }
        }
        libm::sqrt(s)
    };

    let tol = 1e-15 * f64::max(1.0, a.max_abs()) * (n as f64);
    let mut converged = false;
    for _sweep in 0..100 {
        if off(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.norm() <= tol / (n as f64) {
                    continue;
                }
                // Fold the phase of a[p][q] into column q so the 2×2 block is real.
                let phase = apq / cr(apq.norm());
                for i in 0..n {
                    let x = a.get(i, q) * phase.conj();
                    a.set(i, q, x);
                }
                for j in 0..n {
                    let x = a.get(q, j) * phase;
                    a.set(q, j, x);
                }
                for i in 0..n {
                    let x = v.get(i, q) * phase.conj();
                    v.set(i, q, x);
                }
                // Classic real Jacobi rotation on the (p, q) plane.
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let b = a.get(p, q).re; // = |apq| after the phase fold
                let tau = (aqq - app) / (2.0 * b);
                let t = if tau >= 0.0 {
                    1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                for i in 0..n {
                    let x = a.get(i, p);
                    let y = a.get(i, q);
                    a.set(i, p, x * cr(c) - y * cr(s));
                    a.set(i, q, x * cr(s) + y * cr(c));
                }
                for j in 0..n {
                    let x = a.get(p, j);
                    let y = a.get(q, j);
                    a.set(p, j, x * cr(c) - y * cr(s));
                    a.set(q, j, x * cr(s) + y * cr(c));
                }
                for i in 0..n {
                    let x = v.get(i, p);
                    let y = v.get(i, q);
                    v.set(i, p, x * cr(c) - y * cr(s));
                    v.set(i, q, x * cr(s) + y * cr(c));
                }
            }
        }
    }
    if !converged && off(&a) > tol {
        return Err(Error::ConvergenceFailed {
            what: "Jacobi eigensolver",
        });
    }

    // Sort ascending; stable order for degenerate eigenvalues.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(i, i)
            .re
            .partial_cmp(&a.get(j, j).re)
            .expect("eigenvalues are finite")
    });
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i).re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        // Phase convention: first nonzero component real positive.
        let mut phase = cr(1.0);
        for i in 0..n {
            let x = v.get(i, old_col);
            if x.norm() > 1e-12 {
                phase = (x / cr(x.norm())).conj();
                break;
            }
        }
        for i in 0..n {
            vectors.set(i, new_col, v.get(i, old_col) * phase);
        }
    }
    Ok(EighResult { values, vectors })
}

/// All eigenvalues of a general complex square matrix, by Householder
/// reduction to Hessenberg form followed by shifted QR iteration.
/// Returned sorted by descending modulus (ties by descending real part).
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>, Error> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    if n == 1 {
        return Ok(vec![m.get(0, 0)]);
    }
    let mut h = hessenberg(m);
    let scale = f64::max(1.0, h.max_abs());
    let eps = 1e-15 * scale;

    let mut eigs: Vec<Complex64> = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iters_at_hi = 0usize;
    let mut total_iters = 0usize;
    loop {
        // Zero out negligible subdiagonal entries.
        for k in 1..=hi {
            let sub = h.get(k, k - 1).norm();
            if sub <= 1e-15 * (h.get(k - 1, k - 1).norm() + h.get(k, k).norm()) + eps * 1e-3 {
                h.set(k, k - 1, Complex64::new(0.0, 0.0));
            }
        }
        // Deflate converged eigenvalues at the bottom.
        while hi > 0 && h.get(hi, hi - 1).norm_sqr() == 0.0 {
            eigs.push(h.get(hi, hi));
            hi -= 1;
            iters_at_hi = 0;
        }
        if hi == 0 {
            eigs.push(h.get(0, 0));
            break;
        }
        // Active window [lo..=hi]: walk up until a split.
        let mut lo = hi;
        while lo > 0 && h.get(lo, lo - 1).norm_sqr() != 0.0 {
            lo -= 1;
        }

        total_iters += 1;
        iters_at_hi += 1;
        if total_iters > 200 * n {
            return Err(Error::ConvergenceFailed {
                what: "QR eigenvalue iteration",
            });
        }

        // Wilkinson shift from the trailing 2×2 block (exceptional shift
        // every 12 stalls to break symmetry-induced cycles).
        let a = h.get(hi - 1, hi - 1);
        let b = h.get(hi - 1, hi);
        let c = h.get(hi, hi - 1);
        let d = h.get(hi, hi);
        let sigma = if iters_at_hi % 12 == 0 {
            d + cr(0.75 * c.norm())
        } else {
            let tr = a + d;
            let det = a * d - b * c;
            let disc = (tr * tr - cr(4.0) * det).sqrt();
            let l1 = (tr + disc) * cr(0.5);
            let l2 = (tr - disc) * cr(0.5);
            if (l1 - d).norm() <= (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };

        // Explicit shifted QR step on the active window.
        let w = hi - lo + 1;
        let mut block = CMatrix::from_fn(w, w, |i, j| h.get(lo + i, lo + j));
        for i in 0..w {
            let x = block.get(i, i) - sigma;
            block.set(i, i, x);
        }
        let (q, r) = qr_decompose(&block);
        let mut next = &r * &q;
        for i in 0..w {
            let x = next.get(i, i) + sigma;
            next.set(i, i, x);
        }
        for i in 0..w {
            for j in 0..w {
                h.set(lo + i, lo + j, next.get(i, j));
            }
        }
    }

    eigs.sort_by(|x, y| {
        y.norm()
            .partial_cmp(&x.norm())
            .expect("finite moduli")
            .then(y.re.partial_cmp(&x.re).expect("finite parts"))
    });
    Ok(eigs)
}

/// Householder reduction to upper Hessenberg form (similarity transform).
fn hessenberg(m: &CMatrix) -> CMatrix {
    let n = m.rows();
    let mut a = m.clone();
    for k in 0..n.saturating_sub(2) {
        // Householder vector zeroing a[k+2.., k].
        let mut norm_x = 0.0;
        for i in (k + 1)..n {
            norm_x += a.get(i, k).norm_sqr();
        }
        let norm_x = libm::sqrt(norm_x);
        if norm_x < 1e-300 {
            continue;
        }
        let x1 = a.get(k + 1, k);
        let alpha = if x1.norm() > 0.0 {
            -(x1 / cr(x1.norm())) * cr(norm_x)
        } else {
            cr(-norm_x)
        };
        let mut u = vec![Complex64::new(0.0, 0.0); n];
        for i in (k + 1)..n {
            u[i] = a.get(i, k);
        }
        u[k + 1] -= alpha;
        let unorm_sqr: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        if unorm_sqr < 1e-300 {
            continue;
        }
        let beta = 2.0 / unorm_sqr;
        // A ← P A with P = I − β u u†.
        for j in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in (k + 1)..n {
                dot += u[i].conj() * a.get(i, j);
            }
            let dot = dot * cr(beta);
            for i in (k + 1)..n {
                let x = a.get(i, j) - u[i] * dot;
                a.set(i, j, x);
            }
        }
        // A ← A P.
        for i in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for j in (k + 1)..n {
                dot += a.get(i, j) * u[j];
            }
            let dot = dot * cr(beta);
            for j in (k + 1)..n {
                let x = a.get(i, j) - dot * u[j].conj();
                a.set(i, j, x);
            }
        }
    }
    a
}

/// Householder QR: returns (Q, R) with A = Q·R, Q unitary, R upper triangular.
fn qr_decompose(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.rows();
    let mut r = a.clone();
    let mut q = CMatrix::identity(n);
    for k in 0..n {
        let mut norm_x = 0.0;
        for i in k..n {
            norm_x += r.get(i, k).norm_sqr();
        }
        let norm_x = libm::sqrt(norm_x);
        if norm_x < 1e-300 {
            continue;
        }
        let x1 = r.get(k, k);
        let alpha = if x1.norm() > 0.0 {
            -(x1 / cr(x1.norm())) * cr(norm_x)
        } else {
            cr(-norm_x)
        };
        let mut u = vec![Complex64::new(0.0, 0.0); n];
        for i in k..n {
            u[i] = r.get(i, k);
        }
        u[k] -= alpha;
        let unorm_sqr: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        if unorm_sqr < 1e-300 {
            continue;
        }
        let beta = 2.0 / unorm_sqr;
        // R ← P R.
        for j in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in k..n {
                dot += u[i].conj() * r.get(i, j);
            }
            let dot = dot * cr(beta);
            for i in k..n {
                let x = r.get(i, j) - u[i] * dot;
                r.set(i, j, x);
            }
        }
        // Q ← Q P (P is Hermitian and self-inverse).
        for i in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for j in k..n {
                dot += q.get(i, j) * u[j];
            }
            let dot = dot * cr(beta);
            for j in k..n {
                let x = q.get(i, j) - dot * u[j].conj();
                q.set(i, j, x);
            }
        }
    }
    (q, r)
}

/// Matrix exponential exp(scale·h).
///
/// Hermitian h goes through the eigendecomposition (exact unitarity for
/// imaginary scale); anything else through 13th-order Padé scaling-and-squaring.
pub fn expm_hermitian_generator(h: &CMatrix, scale: Complex64) -> Result<CMatrix, Error> {
    if !h.is_square() {
        return Err(Error::NotSquare {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    let tol = 1e-12 * f64::max(1.0, h.max_abs());
    if h.is_hermitian(tol) {
        let eig = eigh(h)?;
        let d: Vec<Complex64> = eig.values.iter().map(|&l| (scale * cr(l)).exp()).collect();
        let vd = &eig.vectors * &CMatrix::from_diag(&d);
        Ok(&vd * &eig.vectors.adjoint())
    } else {
        expm_pade(&h.scale(scale))
    }
}

/// Padé-13 scaling-and-squaring matrix exponential.
fn expm_pade(a: &CMatrix) -> Result<CMatrix, Error> {
    const THETA_13: f64 = 5.371920351148152;
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = a.rows();
    let norm = a.one_norm();
    let s: u32 = if norm > THETA_13 {
        let s = libm::ceil(libm::log2(norm / THETA_13));
        if s > 200.0 {
            return Err(Error::ConvergenceFailed {
                what: "expm scaling (operator norm astronomically large)",
            });
        }
        s as u32
    } else {
        0
    };
    let a = a.scale(cr(libm::pow(2.0, -(s as f64))));
    let id = CMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &(&(&a6.scale(cr(B[13])) + &a4.scale(cr(B[11]))) + &a2.scale(cr(B[9]))) * &a6;
    let u_poly = &(&(&u_inner + &a6.scale(cr(B[7]))) + &a4.scale(cr(B[5])))
        + &(&a2.scale(cr(B[3])) + &id.scale(cr(B[1])));
    let u = &a * &u_poly;

    let v_inner = &(&(&a6.scale(cr(B[12])) + &a4.scale(cr(B[10]))) + &a2.scale(cr(B[8]))) * &a6;
    let v = &(&(&v_inner + &a6.scale(cr(B[6]))) + &a4.scale(cr(B[4])))
        + &(&a2.scale(cr(B[2])) + &id.scale(cr(B[0])));

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut x = lu_solve_matrix(&lhs, &rhs)?;
    for _ in 0..s {
        x = &x * &x;
    }
    Ok(x)
}

/// Solves A·X = B by LU with partial pivoting.
pub fn lu_solve_matrix(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, Error> {
    assert!(a.is_square());
    assert_eq!(a.rows(), b.rows());
    let n = a.rows();
    let mut lu = a.clone();
    let mut x = b.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        // Partial pivot.
        let mut pivot = k;
        let mut best = lu.get(k, k).norm();
        for i in (k + 1)..n {
            let v = lu.get(i, k).norm();
            if v > best {
                best = v;
                pivot = i;
            }
        }
        if best < 1e-300 {
            return Err(Error::ConvergenceFailed {
                what: "LU solve (singular matrix)",
            });
        }
        if pivot != k {
            for j in 0..n {
                let t = lu.get(k, j);
                lu.set(k, j, lu.get(pivot, j));
                lu.set(pivot, j, t);
            }
            perm.swap(k, pivot);
        }
        let inv = cr(1.0) / lu.get(k, k);
        for i in (k + 1)..n {
            let f = lu.get(i, k) * inv;
            lu.set(i, k, f);
            for j in (k + 1)..n {
                let v = lu.get(i, j) - f * lu.get(k, j);
                lu.set(i, j, v);
            }
        }
    }
    // Apply the permutation to the right-hand side.
    let mut pb = CMatrix::zeros(n, x.cols());
    for i in 0..n {
        for j in 0..x.cols() {
            pb.set(i, j, x.get(perm[i], j));
        }
    }
    x = pb;
    // Forward substitution (unit lower triangular).
    for j in 0..x.cols() {
        for i in 0..n {
            let mut acc = x.get(i, j);
            for k in 0..i {
                acc -= lu.get(i, k) * x.get(k, j);
            }
            x.set(i, j, acc);
        }
        // Back substitution.
        for i in (0..n).rev() {
            let mut acc = x.get(i, j);
            for k in (i + 1)..n {
                acc -= lu.get(i, k) * x.get(k, j);
            }
            x.set(i, j, acc / lu.get(i, i));
        }
    }
    Ok(x)
}

/// Choi matrix of a superoperator in the column-stacking convention:
/// J[n·p + r, n·q + s] = S[r + n·s, p + n·q]. The map is completely
/// positive iff J is positive semidefinite.
pub fn choi_matrix(s: &CMatrix) -> Result<CMatrix, Error> {
    if !s.is_square() {
        return Err(Error::NotSquare {
            rows: s.rows(),
            cols: s.cols(),
        });
    }
    let n = isqrt(s.rows()).ok_or(Error::NotPerfectSquare { dim: s.rows() })?;
    Ok(CMatrix::from_fn(n * n, n * n, |row, col| {
        let (p, r) = (row / n, row % n);
        let (q, ss) = (col / n, col % n);
        s.get(r + n * ss, p + n * q)
    }))
}
