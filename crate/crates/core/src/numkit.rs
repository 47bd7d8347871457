//! Small dense complex linear algebra.
//!
//! Everything here is sized for the problems this crate actually solves: 2×2
//! operators, 4×4 two-qubit unitaries and secular matrices of order at most a
//! few dozen. Storage is dense and row-major.

use std::fmt;
use std::ops::Index;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for the Hermiticity precondition of the eigensolvers.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalue gaps below this are treated as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;
/// Sweep cap for the cyclic Jacobi solver.
pub const MAX_JACOBI_SWEEPS: usize = 100;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Dense complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    data: Vec<C64>,
}

impl ComplexVector {
    pub fn new(data: Vec<C64>) -> Result<Self> {
        if let Some(i) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { data })
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self {
            data: values.iter().map(|&x| re(x)).collect(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![C64::default(); dim],
        }
    }

    /// Computational basis vector |index⟩.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[index] = re(1.0);
        v
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &ComplexVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "inner product of dims {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn sub(&self, other: &ComplexVector) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "difference of dims {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Self {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scale(re(1.0 / n))
    }

    /// |self⟩⟨other|
    pub fn outer(&self, other: &ComplexVector) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim(), other.dim(), |i, j| {
            self.data[i] * other.data[j].conj()
        })
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;

    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}×{cols} matrix",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| re(x)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::default(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { re(1.0) } else { C64::default() })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { re(values[i]) } else { C64::default() })
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

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.cols + j] = z;
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    fn zip_with(&self, other: &Self, what: &str, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{what} of {}×{} and {}×{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sum", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "difference", |a, b| a - b)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// ‖self − other‖_F, or infinity when shapes differ.
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).map_or(f64::INFINITY, |d| d.frobenius_norm())
    }

    /// ‖A − A†‖_F; infinity for non-square input.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.distance(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol * self.frobenius_norm().max(1.0)
    }

    /// ‖U†U − I‖_F; infinity for non-square input.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let gram = matmul(&self.adjoint(), self).expect("square");
        gram.distance(&Self::identity(self.rows))
    }

    pub fn mul_vec(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if self.cols != v.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}×{} matrix applied to a {}-vector",
                self.rows,
                self.cols,
                v.dim()
            )));
        }
        let data = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect();
        Ok(ComplexVector { data })
    }

    /// Kronecker product, `self` as the slow (leftmost) factor.
    pub fn kron(&self, other: &Self) -> Self {
        Self::from_fn(self.rows * other.rows, self.cols * other.cols, |i, j| {
            self.get(i / other.rows, j / other.cols) * other.get(i % other.rows, j % other.cols)
        })
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector {
            data: (0..self.rows).map(|i| self.get(i, j)).collect(),
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                let z = self.get(i, j);
                write!(f, "{}{:+}i", z.re, z.im)?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "product of {}×{} and {}×{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = ComplexMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.get(i, k);
            if aik == C64::default() {
                continue;
            }
            for j in 0..b.cols {
                out.data[i * b.cols + j] += aik * b.get(k, j);
            }
        }
    }
    Ok(out)
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<ComplexVector>,
}

impl EigenDecomposition {
    /// Σ λᵢ |vᵢ⟩⟨vᵢ|
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            out = out.add(&v.outer(v).scale(re(*lambda))).expect("same shape");
        }
        out
    }

    /// Orthogonal projector onto the eigenspace of eigenvalue `index`,
    /// including every eigenvalue within [`DEGENERACY_GAP`] of it.
    pub fn projector(&self, index: usize) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let target = self.eigenvalues[index];
        let mut out = ComplexMatrix::zeros(n, n);
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            if (lambda - target).abs() < DEGENERACY_GAP {
                out = out.add(&v.outer(v)).expect("same shape");
            }
        }
        out
    }
}

fn check_hermitian(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigensolver needs a square matrix, got {}×{}",
            a.rows, a.cols
        )));
    }
    if !a.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::NotHermitian(a.hermiticity_defect()));
    }
    Ok(())
}

/// Rotates `v` so that its largest-magnitude entry is real and non-negative.
/// Near-ties go to the lowest index.
pub fn fix_phase(v: &ComplexVector) -> ComplexVector {
    let largest = v.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if largest == 0.0 {
        return v.clone();
    }
    let pivot = v
        .as_slice()
        .iter()
        .find(|z| z.norm() >= largest * (1.0 - 1e-12))
        .copied()
        .expect("largest entry exists");
    let mut out = v.scale(pivot.conj() / pivot.norm());
    // the pivot is real by construction; clear its rounding residue
    if let Some(z) = out.data.iter_mut().find(|z| z.norm() >= largest * (1.0 - 1e-12)) {
        *z = re(z.norm());
    }
    out
}

/// Closed-form eigendecomposition of a 2×2 Hermitian matrix.
pub fn eig_hermitian_2x2(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    check_hermitian(a)?;
    if a.rows != 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected 2×2, got {}×{}",
            a.rows, a.cols
        )));
    }
    let p = a.get(0, 0).re;
    let d = a.get(1, 1).re;
    // average the two off-diagonal copies so tiny asymmetries cancel
    let off = 0.5 * (a.get(0, 1) + a.get(1, 0).conj());
    let mean = 0.5 * (p + d);
    let half_diff = 0.5 * (p - d);
    let radius = half_diff.hypot(off.norm());

    if 2.0 * radius < DEGENERACY_GAP {
        return Ok(EigenDecomposition {
            eigenvalues: vec![mean, mean],
            eigenvectors: vec![ComplexVector::basis(2, 0), ComplexVector::basis(2, 1)],
        });
    }

    // pick the formulas that avoid cancellation in h ± r
    let (upper, lower) = if half_diff >= 0.0 {
        (
            vec![re(half_diff + radius), off.conj()],
            vec![-off, re(half_diff + radius)],
        )
    } else {
        (
            vec![off, re(radius - half_diff)],
            vec![re(radius - half_diff), -off.conj()],
        )
    };
    let upper = fix_phase(&ComplexVector { data: upper }.normalized());
    let lower = fix_phase(&ComplexVector { data: lower }.normalized());
    Ok(EigenDecomposition {
        eigenvalues: vec![mean - radius, mean + radius],
        eigenvectors: vec![lower, upper],
    })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a.get(i, j).norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Full Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Each pivot `(p, q)` is first made real by a diagonal phase on column `q`,
/// then annihilated by a real plane rotation. Iteration stops once the
/// off-diagonal Frobenius norm drops to `1e-12·‖A‖_F`.
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    check_hermitian(a)?;
    let n = a.rows;
    let scale = a.frobenius_norm();
    let mut work = a.clone();
    // symmetrize so that the iteration sees an exactly Hermitian matrix
    for i in 0..n {
        let d = work.get(i, i).re;
        work.set(i, i, re(d));
        for j in (i + 1)..n {
            let z = 0.5 * (work.get(i, j) + work.get(j, i).conj());
            work.set(i, j, z);
            work.set(j, i, z.conj());
        }
    }
    let mut vectors = ComplexMatrix::identity(n);
    let threshold = 1e-12 * scale;

    let mut sweeps = 0;
    while off_diagonal_norm(&work) > threshold {
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off_diagonal_norm(&work),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut work, &mut vectors, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| work.get(i, i).re.total_cmp(&work.get(j, j).re));
    let eigenvalues = order.iter().map(|&i| work.get(i, i).re).collect();
    let eigenvectors = order
        .iter()
        .map(|&i| fix_phase(&vectors.column(i).normalized()))
        .collect();
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn rotate(work: &mut ComplexMatrix, vectors: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = work.get(p, q);
    let magnitude = apq.norm();
    if magnitude == 0.0 {
        return;
    }
    let phase = apq / magnitude;
    let app = work.get(p, p).re;
    let aqq = work.get(q, q).re;
    let tau = (aqq - app) / (2.0 * magnitude);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;

    // U restricted to (p, q): diag(1, conj(phase)) · [[c, s], [-s, c]]
    let u_pp = re(cs);
    let u_pq = re(sn);
    let u_qp = -sn * phase.conj();
    let u_qq = cs * phase.conj();

    let n = work.rows;
    for k in 0..n {
        let akp = work.get(k, p);
        let akq = work.get(k, q);
        work.set(k, p, akp * u_pp + akq * u_qp);
        work.set(k, q, akp * u_pq + akq * u_qq);

        let vkp = vectors.get(k, p);
        let vkq = vectors.get(k, q);
        vectors.set(k, p, vkp * u_pp + vkq * u_qp);
        vectors.set(k, q, vkp * u_pq + vkq * u_qq);
    }
    for k in 0..n {
        let apk = work.get(p, k);
        let aqk = work.get(q, k);
        work.set(p, k, u_pp.conj() * apk + u_qp.conj() * aqk);
        work.set(q, k, u_pq.conj() * apk + u_qq.conj() * aqk);
    }
    work.set(p, q, C64::default());
    work.set(q, p, C64::default());
    let dp = work.get(p, p).re;
    let dq = work.get(q, q).re;
    work.set(p, p, re(dp));
    work.set(q, q, re(dq));
}
