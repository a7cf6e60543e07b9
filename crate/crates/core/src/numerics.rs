//! Dense complex linear algebra used by every other module.
//!
//! Matrices here are small (at most a few hundred rows), so everything is
//! dense and backed by `nalgebra`. Hermitian exponentials go through a full
//! eigendecomposition, which keeps e^{-iHt} unitary to roundoff and lets the
//! spectrum be reused across many evaluation times.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default absolute entrywise tolerance for Hermiticity and unitarity checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

static TOLERANCE_BITS: AtomicU64 = AtomicU64::new(0x3DDB_7CDF_D9D7_BDBB); // 1e-10

/// Current global numeric tolerance.
pub fn tolerance() -> f64 {
    f64::from_bits(TOLERANCE_BITS.load(Ordering::Relaxed))
}

/// Override the global numeric tolerance. Non-positive or non-finite values
/// are ignored.
pub fn set_tolerance(tol: f64) {
    if tol.is_finite() && tol > 0.0 {
        TOLERANCE_BITS.store(tol.to_bits(), Ordering::Relaxed);
    }
}

const EIGEN_EPS: f64 = 1e-15;
const MAX_SOLVER_ITERS: usize = 10_000;

pub const I: Complex64 = Complex64::new(0.0, 1.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense square complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    /// Build from `dim * dim` row-major entries.
    pub fn from_row_major(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(DMatrix::from_row_slice(dim, dim, entries)))
    }

    /// Build from a flat row-major list whose length must be a perfect square.
    pub fn from_flat(entries: &[Complex64]) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim * dim != entries.len() {
            return Err(Error::NotSquare { len: entries.len() });
        }
        Self::from_row_major(dim, entries)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let entries: Vec<Complex64> = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self::from_row_major(dim, &entries)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    pub fn inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.0[(row, col)] = value;
    }

    pub fn to_row_major(&self) -> Vec<Complex64> {
        let n = self.dim();
        (0..n * n).map(|k| self.0[(k / n, k % n)]).collect()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        self.0.diagonal().iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn conjugate(&self) -> Self {
        Self(self.0.conjugate())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Kronecker product `self ⊗ other`; `self` acts on the more significant index.
    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn unitarity_defect(&self) -> f64 {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.dim()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(v.len(), n, "vector length must match matrix dimension");
        (0..n)
            .map(|i| (0..n).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn ensure_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim();
        writeln!(f, "ComplexMatrix({n}x{n}) [")?;
        for i in 0..n {
            write!(f, "  ")?;
            for j in 0..n {
                let z = self.0[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Eigendecomposition `H = V·diag(λ)·V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl HermitianSpectrum {
    pub fn new(h: &ComplexMatrix) -> Result<Self> {
        let deviation = h.hermiticity_defect();
        if deviation > tolerance() {
            return Err(Error::NotHermitian { deviation });
        }
        // Symmetrize so the solver sees an exactly Hermitian input.
        let sym = (&h.0 + h.0.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = sym
            .try_symmetric_eigen(EIGEN_EPS, MAX_SOLVER_ITERS)
            .ok_or(Error::EigendecompositionFailure)?;
        Ok(Self {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    /// `V·diag(f(λ_k))·V†`.
    pub fn map(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let phase = f(lambda);
            for x in scaled.column_mut(k).iter_mut() {
                *x *= phase;
            }
        }
        ComplexMatrix(scaled * v.adjoint())
    }

    /// e^{-iHt}.
    pub fn evolution(&self, t: f64) -> ComplexMatrix {
        self.map(|lambda| Complex64::from_polar(1.0, -lambda * t))
    }

    /// Largest |λ|, i.e. the spectral norm of H.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

/// e^{-iHt} via Hermitian eigendecomposition.
pub fn expm_hermitian_evolution(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    Ok(HermitianSpectrum::new(h)?.evolution(t))
}

/// `[(H)^n, U]`: the n-fold nested commutator `[H, [H, … [H, U]]]`, with `n = 0`
/// returning `U`.
pub fn nested_commutator(h: &ComplexMatrix, u: &ComplexMatrix, n: usize) -> Result<ComplexMatrix> {
    h.ensure_same_dim(u)?;
    let mut c = u.clone();
    for _ in 0..n {
        c = h.commutator(&c);
    }
    Ok(c)
}

/// All nested commutators `[(H)^k, U]` for `k = 0..=n`.
pub fn nested_commutators(
    h: &ComplexMatrix,
    u: &ComplexMatrix,
    n: usize,
) -> Result<Vec<ComplexMatrix>> {
    h.ensure_same_dim(u)?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(u.clone());
    for k in 0..n {
        let next = h.commutator(&out[k]);
        out.push(next);
    }
    Ok(out)
}

/// Hilbert–Schmidt norm sqrt(Tr[A†A]).
pub fn hs_norm(a: &ComplexMatrix) -> f64 {
    hs_norm_sq(a).sqrt()
}

pub fn hs_norm_sq(a: &ComplexMatrix) -> f64 {
    a.0.iter().map(|z| z.norm_sqr()).sum()
}

/// Singular values in descending order.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let svd = a
        .0
        .clone()
        .try_svd(false, false, f64::EPSILON, MAX_SOLVER_ITERS)
        .ok_or(Error::ConvergenceFailure)?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Induced 2-norm (largest singular value).
pub fn spectral_norm(a: &ComplexMatrix) -> Result<f64> {
    if a.max_abs() == 0.0 {
        return Ok(0.0);
    }
    Ok(singular_values(a)?[0])
}

/// Largest singular value together with its right singular vector.
pub fn top_singular_pair(a: &ComplexMatrix) -> Result<(f64, Vec<Complex64>)> {
    let svd = a
        .0
        .clone()
        .try_svd(false, true, f64::EPSILON, MAX_SOLVER_ITERS)
        .ok_or(Error::ConvergenceFailure)?;
    let v_t = svd.v_t.ok_or(Error::ConvergenceFailure)?;
    let (k, sigma) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::ConvergenceFailure)?;
    // Row k of V† is the conjugate of the k-th right singular vector.
    let v: Vec<Complex64> = v_t.row(k).iter().map(|z| z.conj()).collect();
    Ok((sigma, v))
}

pub fn vector_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner_product(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Computational basis vector `|index⟩` of dimension `dim`.
pub fn basis_state(dim: usize, index: usize) -> Vec<Complex64> {
    let mut v = vec![ZERO; dim];
    v[index] = ONE;
    v
}
