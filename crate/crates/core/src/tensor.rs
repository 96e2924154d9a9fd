//! Dense complex linear algebra on small qubit registers.
//!
//! Operators are stored row-major. Tensor factors are ordered big-endian:
//! factor 0 is the most significant index of the Kronecker product.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hermiticity and PSD checks are made at this tolerance.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<Complex64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out.data[i * dim + i] = ONE;
        }
        out
    }

    /// Builds an operator from row-major entries.
    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    pub fn from_real(dim: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(dim, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut out = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            out.data[i * values.len() + i] = Complex64::new(v, 0.0);
        }
        out
    }

    /// `|v><v|` for an (unnormalized) vector `v`.
    pub fn outer(v: &[Complex64]) -> Self {
        let dim = v.len();
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                out.data[i * dim + j] = v[i] * v[j].conj();
            }
        }
        out
    }

    /// `|i><j|` in dimension `dim`.
    pub fn basis_element(dim: usize, i: usize, j: usize) -> Self {
        let mut out = Self::zeros(dim);
        out.data[i * dim + j] = ONE;
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    /// Entry-wise complex conjugate (not transposed).
    pub fn conj(&self) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * factor).collect() }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * factor).collect() }
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: v.len() });
        }
        Ok((0..self.dim)
            .map(|i| self.data[i * self.dim..(i + 1) * self.dim].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `U A U^dagger`.
    pub fn conjugate_by(&self, u: &Operator) -> Result<Operator> {
        u.matmul(self)?.matmul(&u.adjoint())
    }

    /// Largest entry of `|A - A^dagger|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        worst
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        Operator { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        Operator { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs).expect("operator dimensions differ")
    }
}

/// Subsystem dimensions of a tensor-product space, most significant first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorShape {
    factors: Vec<usize>,
}

impl FactorShape {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.contains(&0) {
            return Err(Error::InvalidSubsystems(format!("factor dimensions {factors:?}")));
        }
        Ok(Self { factors })
    }

    pub fn qubits(n: usize) -> Self {
        Self { factors: vec![2; n.max(1)] }
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().product()
    }

    pub fn check(&self, op: &Operator) -> Result<()> {
        if self.total_dim() != op.dim() {
            return Err(Error::ShapeMismatch { product: self.total_dim(), dim: op.dim() });
        }
        Ok(())
    }

    /// Shape of the subsystems listed in `keep` (ascending factor order).
    pub fn select(&self, keep: &[usize]) -> Self {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        Self { factors: keep.iter().map(|&k| self.factors[k]).collect() }
    }
}

pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let (m, n) = (a.dim, b.dim);
    let dim = m * n;
    let mut out = Operator::zeros(dim);
    for i in 0..m {
        for j in 0..m {
            let aij = a.data[i * m + j];
            if aij == ZERO {
                continue;
            }
            for k in 0..n {
                let row = (i * n + k) * dim + j * n;
                for l in 0..n {
                    out.data[row + l] = aij * b.data[k * n + l];
                }
            }
        }
    }
    out
}

pub fn kron_all<'a>(ops: impl IntoIterator<Item = &'a Operator>) -> Operator {
    ops.into_iter().fold(Operator::identity(1), |acc, op| kron(&acc, op))
}

pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Traces out every factor not listed in `keep`. Kept factors appear in
/// ascending order in the result; an empty `keep` gives the 1x1 trace.
pub fn partial_trace(rho: &Operator, shape: &FactorShape, keep: &[usize]) -> Result<Operator> {
    shape.check(rho)?;
    let n_factors = shape.len();
    let mut kept = vec![false; n_factors];
    for &k in keep {
        if k >= n_factors {
            return Err(Error::InvalidSubsystems(format!("factor {k} of {n_factors}")));
        }
        if kept[k] {
            return Err(Error::InvalidSubsystems(format!("factor {k} listed twice")));
        }
        kept[k] = true;
    }

    // Split every full index into (kept part, traced part).
    let dim = rho.dim();
    let mut kept_idx = vec![0usize; dim];
    let mut traced_idx = vec![0usize; dim];
    for (full, (ki, ti)) in kept_idx.iter_mut().zip(traced_idx.iter_mut()).enumerate() {
        let mut rem = full;
        let (mut kmul, mut tmul) = (1, 1);
        for f in (0..n_factors).rev() {
            let d = shape.factors[f];
            let digit = rem % d;
            rem /= d;
            if kept[f] {
                *ki += digit * kmul;
                kmul *= d;
            } else {
                *ti += digit * tmul;
                tmul *= d;
            }
        }
    }

    let out_dim: usize = (0..n_factors).filter(|&f| kept[f]).map(|f| shape.factors[f]).product();
    let mut out = Operator::zeros(out_dim);
    for i in 0..dim {
        for j in 0..dim {
            if traced_idx[i] == traced_idx[j] {
                out.data[kept_idx[i] * out_dim + kept_idx[j]] += rho.data[i * dim + j];
            }
        }
    }
    Ok(out)
}

/// Eigen-decomposition of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns, matching `values`.
    pub vectors: Operator,
}

impl HermEig {
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        (0..self.vectors.dim()).map(|i| self.vectors.get(i, k)).collect()
    }

    /// `V f(Λ) V^dagger`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Operator {
        let n = self.vectors.dim();
        let mut out = Operator::zeros(n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors.get(i, k) * w;
                for j in 0..n {
                    out.data[i * n + j] += vi * self.vectors.get(j, k).conj();
                }
            }
        }
        out
    }
}

pub fn herm_eig(h: &Operator) -> Result<HermEig> {
    let deviation = h.hermiticity_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let n = h.dim();
    let m = DMatrix::from_fn(n, n, |i, j| {
        // Symmetrize so the solver sees an exactly Hermitian input.
        (h.get(i, j) + h.get(j, i).conj()) * 0.5
    });
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = Operator::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, col, eig.eigenvectors[(i, k)]);
        }
    }
    Ok(HermEig { values, vectors })
}

/// Principal square root of a positive semidefinite operator. Eigenvalues in
/// `[-1e-10, 0)` are treated as round-off and clamped to zero.
pub fn sqrt_psd(m: &Operator) -> Result<Operator> {
    let eig = herm_eig(m)?;
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -HERMITIAN_TOL {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(eig.map_values(|x| x.max(0.0).sqrt()))
}

/// Frobenius (Hilbert-Schmidt) distance.
pub fn l2_distance(a: &Operator, b: &Operator) -> Result<f64> {
    a.check_same_dim(b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt())
}
