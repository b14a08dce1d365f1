//! Dense complex matrix algebra on tensor-product spaces.
//!
//! Site 0 is always the slowest-varying tensor index: for site dimensions
//! `[d0, d1, d2]` the computational basis index of `|i0 i1 i2>` is
//! `(i0 * d1 + i1) * d2 + i2`. Every routine in the crate follows this
//! convention, including [`Matrix::kron`] (left factor is slower).

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Hermiticity tolerance (absolute, entrywise).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Unit-trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Slack on the smallest eigenvalue of a density matrix.
pub const PSD_TOL: f64 = 1e-9;
/// Largest dimension for which dense operators on the full space are built.
pub const DENSE_LIMIT: usize = 2500;

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Square dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::default(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = c(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major entries; `data.len()` must be a square.
    pub fn from_row_major(data: Vec<C64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() || dim == 0 {
            return Err(Error::InputDomain(format!(
                "{} entries do not form a nonempty square matrix",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = c(v, 0.0);
        }
        m
    }

    /// `|v><v|`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let aik = self.data[i * n + k];
                if aik == C64::default() {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Matrix, factor: C64) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn adjoint(&self) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Matrix) -> C64 {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = C64::default();
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }

    /// Kronecker product with `self` as the slower-varying factor.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let (m, n) = (self.dim, other.dim);
        let dim = m * n;
        let mut out = Matrix::zeros(dim);
        for i1 in 0..m {
            for j1 in 0..m {
                let a = self[(i1, j1)];
                if a == C64::default() {
                    continue;
                }
                for i2 in 0..n {
                    for j2 in 0..n {
                        out.data[(i1 * n + i2) * dim + j1 * n + j2] = a * other[(i2, j2)];
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest `|a_ij - conj(a_ji)|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

/// A square complex matrix known to be Hermitian within [`HERMITIAN_TOL`].
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator(Matrix);

impl HermitianOperator {
    pub fn new(m: Matrix) -> Result<Self> {
        if m.dim() == 0 {
            return Err(Error::InputDomain("operator dimension must be >= 1".into()));
        }
        let dev = m.hermiticity_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self(m))
    }

    /// Skips the Hermiticity check; callers guarantee it by construction.
    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self(Matrix::diagonal(values))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `Tr(self * other)`, real for Hermitian pairs.
    pub fn trace_product(&self, other: &HermitianOperator) -> f64 {
        self.0.trace_product(&other.0).re
    }

    pub fn square(&self) -> HermitianOperator {
        Self(self.0.mul(&self.0))
    }

    pub fn scale(&self, factor: f64) -> HermitianOperator {
        Self(self.0.scale(factor))
    }

    pub fn add(&self, other: &HermitianOperator) -> HermitianOperator {
        Self(self.0.add(&other.0))
    }

    pub fn sub(&self, other: &HermitianOperator) -> HermitianOperator {
        Self(self.0.sub(&other.0))
    }
}

/// Eigen-decomposition of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, `eigenvectors[i]` belongs to `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<C64>>,
}

impl Spectrum {
    /// `sum_i lambda_i v_i v_i^dagger`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.eigenvalues.len();
        let mut m = Matrix::zeros(n);
        for (lam, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            for i in 0..n {
                let vi = v[i] * *lam;
                for j in 0..n {
                    m[(i, j)] += vi * v[j].conj();
                }
            }
        }
        m
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }
}

/// Quantum state on a tensor-product space.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    site_dims: Vec<usize>,
    op: HermitianOperator,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(site_dims: Vec<usize>, m: Matrix) -> Result<Self> {
        let rho = Self::checked_without_spectrum(site_dims, m)?;
        let min = hermitian_eig(&rho.op)?.min();
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(rho)
    }

    fn checked_without_spectrum(site_dims: Vec<usize>, m: Matrix) -> Result<Self> {
        let total = total_dim(&site_dims)?;
        if total != m.dim() {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: m.dim(),
            });
        }
        let op = HermitianOperator::new(m)?;
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        Ok(Self { site_dims, op })
    }

    /// `|psi><psi|`; the vector must be normalized within [`TRACE_TOL`].
    pub fn from_pure(site_dims: Vec<usize>, amplitudes: &[C64]) -> Result<Self> {
        let total = total_dim(&site_dims)?;
        if total != amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: amplitudes.len(),
            });
        }
        Self::checked_without_spectrum(site_dims, Matrix::outer(amplitudes))
    }

    /// `1 / D`.
    pub fn maximally_mixed(site_dims: Vec<usize>) -> Result<Self> {
        let total = total_dim(&site_dims)?;
        Ok(Self {
            site_dims,
            op: HermitianOperator::from_matrix_unchecked(
                Matrix::identity(total).scale(1.0 / total as f64),
            ),
        })
    }

    /// Convex combination; weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InputDomain("empty mixture".into()))?
            .1;
        let total: f64 = parts.iter().map(|(w, _)| *w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InputDomain(
                "mixture weights must be nonnegative and sum to 1".into(),
            ));
        }
        let mut m = Matrix::zeros(first.dim());
        for (w, rho) in parts {
            if rho.site_dims != first.site_dims {
                return Err(Error::InputDomain("mixture of states on different spaces".into()));
            }
            m.add_assign_scaled(rho.matrix(), c(*w, 0.0));
        }
        Self::checked_without_spectrum(first.site_dims.clone(), m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn site_dims(&self) -> &[usize] {
        &self.site_dims
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &Matrix {
        self.op.matrix()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.op.trace_product(&self.op)
    }

    /// `Tr(rho X)`.
    pub fn expectation(&self, x: &HermitianOperator) -> Result<f64> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(self.op.trace_product(x))
    }
}

pub(crate) fn total_dim(site_dims: &[usize]) -> Result<usize> {
    if site_dims.is_empty() || site_dims.contains(&0) {
        return Err(Error::InputDomain(
            "site dimensions must be a nonempty list of positive integers".into(),
        ));
    }
    site_dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::InputDomain("total dimension overflows".into()))
}

pub fn kron(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator::from_matrix_unchecked(a.matrix().kron(b.matrix()))
}

/// Reduced state on the sites in `keep` (kept in ascending site order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let dims = rho.site_dims();
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() {
        return Err(Error::InputDomain("partial trace needs at least one kept site".into()));
    }
    if let Some(&bad) = keep.iter().find(|&&s| s >= dims.len()) {
        return Err(Error::InputDomain(format!(
            "site {bad} out of range for {} sites",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|s| !keep.contains(s)).collect();
    let strides = site_strides(dims);

    let keep_offsets = subsystem_offsets(&keep, dims, &strides);
    let trace_offsets = subsystem_offsets(&traced, dims, &strides);
    let dk = keep_offsets.len();
    let m = rho.matrix();
    let mut out = Matrix::zeros(dk);
    for (i, &oi) in keep_offsets.iter().enumerate() {
        for (j, &oj) in keep_offsets.iter().enumerate() {
            let mut acc = C64::default();
            for &ot in &trace_offsets {
                acc += m[(oi + ot, oj + ot)];
            }
            out[(i, j)] = acc;
        }
    }
    let kept_dims = keep.iter().map(|&s| dims[s]).collect();
    Ok(DensityMatrix {
        site_dims: kept_dims,
        op: HermitianOperator::from_matrix_unchecked(out),
    })
}

/// Row-major stride of each site.
pub(crate) fn site_strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for s in (0..dims.len().saturating_sub(1)).rev() {
        strides[s] = strides[s + 1] * dims[s + 1];
    }
    strides
}

/// Full-space index offsets of every basis state of a subsystem, enumerated
/// with the first listed site slowest.
fn subsystem_offsets(sites: &[usize], dims: &[usize], strides: &[usize]) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for &s in sites {
        let mut next = Vec::with_capacity(offsets.len() * dims[s]);
        for &o in &offsets {
            for a in 0..dims[s] {
                next.push(o + a * strides[s]);
            }
        }
        offsets = next;
    }
    offsets
}

/// `1 ⊗ ... ⊗ x ⊗ ... ⊗ 1` with `x` on `site`.
pub fn embed_site(x: &HermitianOperator, site: usize, site_dims: &[usize]) -> Result<HermitianOperator> {
    if site >= site_dims.len() {
        return Err(Error::InputDomain(format!(
            "site {site} out of range for {} sites",
            site_dims.len()
        )));
    }
    if x.dim() != site_dims[site] {
        return Err(Error::DimensionMismatch {
            expected: site_dims[site],
            got: x.dim(),
        });
    }
    let before: usize = site_dims[..site].iter().product();
    let after: usize = site_dims[site + 1..].iter().product();
    let m = Matrix::identity(before)
        .kron(x.matrix())
        .kron(&Matrix::identity(after));
    Ok(HermitianOperator::from_matrix_unchecked(m))
}

/// Adds `(1 ⊗ .. ⊗ op ⊗ .. ⊗ 1) v` into `out`, without materializing the
/// embedded operator.
pub fn apply_local_into(op: &Matrix, site: usize, dims: &[usize], v: &[C64], out: &mut [C64]) {
    let d = dims[site];
    debug_assert_eq!(op.dim(), d);
    let stride: usize = dims[site + 1..].iter().product();
    let block = d * stride;
    let total = v.len();
    let mut x = vec![C64::default(); d];
    for outer in (0..total).step_by(block) {
        for inner in 0..stride {
            let base = outer + inner;
            for (b, xb) in x.iter_mut().enumerate() {
                *xb = v[base + b * stride];
            }
            for a in 0..d {
                let row = op.row(a);
                let mut acc = C64::default();
                for (m, xb) in row.iter().zip(&x) {
                    acc += m * xb;
                }
                out[base + a * stride] += acc;
            }
        }
    }
}

/// Eigendecomposition by cyclic complex Jacobi rotations.
///
/// Sweeps until the largest off-diagonal magnitude drops below
/// `1e-13 * max(1, ||H||_F)` or 100 sweeps have run.
pub fn hermitian_eig(h: &HermitianOperator) -> Result<Spectrum> {
    let m = h.matrix();
    let dev = m.hermiticity_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.dim();
    // Work on the exactly Hermitian part.
    let mut a: Vec<C64> = Matrix::from_fn(n, |i, j| {
        if i == j {
            c(m[(i, i)].re, 0.0)
        } else {
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        }
    })
    .data
    .clone();
    let mut v = Matrix::identity(n).data;
    let tol = JACOBI_TOL * m.frobenius_norm().max(1.0);

    let max_off = |a: &[C64]| {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[i * n + j].norm());
            }
        }
        off
    };

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if max_off(&a) < tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let mag = apq.norm();
                if mag < tol {
                    continue;
                }
                let phase = apq / mag;
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                // U = diag(1, conj(phase)) * [[c, s], [-s, c]]
                let u_qp = -phase.conj() * sn;
                let u_qq = phase.conj() * cs;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * cs + akq * u_qp;
                    a[k * n + q] = akp * sn + akq * u_qq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * cs + aqk * u_qp.conj();
                    a[q * n + k] = apk * sn + aqk * u_qq.conj();
                }
                a[p * n + q] = C64::default();
                a[q * n + p] = C64::default();
                a[p * n + p] = c(app - t * mag, 0.0);
                a[q * n + q] = c(aqq + t * mag, 0.0);

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * cs + vkq * u_qp;
                    v[k * n + q] = vkp * sn + vkq * u_qq;
                }
            }
        }
    }
    if !converged {
        let residual = max_off(&a);
        if residual >= tol {
            return Err(Error::NoConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
                residual,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let eigenvalues = order.iter().map(|&i| a[i * n + i].re).collect();
    let eigenvectors = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row * n + col]).collect())
        .collect();
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> HermitianOperator {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = c(rng.sample(StandardNormal), 0.0);
            for j in (i + 1)..n {
                let z = c(rng.sample(StandardNormal), rng.sample(StandardNormal));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        HermitianOperator::new(m).unwrap()
    }

    pub fn random_state_vector(rng: &mut impl Rng, n: usize) -> Vec<C64> {
        let v: Vec<C64> = (0..n)
            .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = norm_sqr(&v).sqrt();
        v.into_iter().map(|z| z / norm).collect()
    }

    /// Full-rank random state `G G^dagger / Tr`.
    pub fn random_density(rng: &mut impl Rng, site_dims: Vec<usize>) -> DensityMatrix {
        let n: usize = site_dims.iter().product();
        let g = Matrix::from_fn(n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let m = g.mul(&g.adjoint());
        let tr = m.trace().re;
        DensityMatrix::new(site_dims, m.scale(1.0 / tr)).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;

    fn pauli_z() -> HermitianOperator {
        HermitianOperator::diagonal(&[1.0, -1.0])
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let k = kron(&HermitianOperator::identity(2), &HermitianOperator::identity(2));
        assert_eq!(k.matrix(), &Matrix::identity(4));
    }

    #[test]
    fn kron_of_diagonals() {
        let k = kron(&pauli_z(), &pauli_z());
        assert_eq!(k.matrix(), &Matrix::diagonal(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn kron_trace_is_multiplicative() {
        let mut r = rng(1);
        let x = random_hermitian(&mut r, 3);
        let y = random_hermitian(&mut r, 3);
        let k = kron(&x, &y);
        assert_eq!(k.dim(), 9);
        assert!((k.trace() - x.trace() * y.trace()).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut r = rng(2);
        let a = random_density(&mut r, vec![2]);
        let b = random_density(&mut r, vec![3]);
        let ab = DensityMatrix::new(vec![2, 3], a.matrix().kron(b.matrix())).unwrap();
        let ra = partial_trace(&ab, &[0]).unwrap();
        let rb = partial_trace(&ab, &[1]).unwrap();
        assert_eq!(ra.site_dims(), &[2]);
        assert!(ra.matrix().max_abs_diff(a.matrix()) < 1e-13);
        assert!(rb.matrix().max_abs_diff(b.matrix()) < 1e-13);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::from_pure(
            vec![2, 2],
            &[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)],
        )
        .unwrap();
        let r1 = partial_trace(&bell, &[1]).unwrap();
        assert!(r1.matrix().max_abs_diff(&Matrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_of_qutrit_ghz() {
        let amp = 1.0 / 3f64.sqrt();
        let mut psi = vec![C64::default(); 27];
        for i in 0..3 {
            psi[i * 9 + i * 3 + i] = c(amp, 0.0);
        }
        let rho = DensityMatrix::from_pure(vec![3, 3, 3], &psi).unwrap();
        // Explicit sum over the computational basis of sites 0 and 2.
        let mut expected = Matrix::zeros(3);
        for a in 0..3 {
            for b in 0..3 {
                for x in 0..3 {
                    for z in 0..3 {
                        expected[(a, b)] += rho.matrix()[(x * 9 + a * 3 + z, x * 9 + b * 3 + z)];
                    }
                }
            }
        }
        let r1 = partial_trace(&rho, &[1]).unwrap();
        assert!(r1.matrix().max_abs_diff(&expected) < 1e-15);
        assert!(r1.matrix().max_abs_diff(&Matrix::diagonal(&[1.0 / 3.0; 3])) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_keep_sets() {
        let rho = DensityMatrix::maximally_mixed(vec![2, 2]).unwrap();
        assert!(matches!(partial_trace(&rho, &[]), Err(Error::InputDomain(_))));
        assert!(matches!(partial_trace(&rho, &[2]), Err(Error::InputDomain(_))));
    }

    #[test]
    fn partial_traces_compose() {
        let mut r = rng(3);
        let rho = random_density(&mut r, vec![2, 3, 2]);
        let direct = partial_trace(&rho, &[2]).unwrap();
        let staged = partial_trace(&partial_trace(&rho, &[1, 2]).unwrap(), &[1]).unwrap();
        assert!(direct.matrix().max_abs_diff(staged.matrix()) < 1e-14);
        let tr = partial_trace(&rho, &[0, 2]).unwrap().operator().trace();
        assert!((tr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_of_diagonal() {
        let s = hermitian_eig(&HermitianOperator::diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 2.0, 3.0]);
        assert!((s.eigenvectors[0][1].norm() - 1.0).abs() < 1e-15);
        assert!((s.eigenvectors[1][2].norm() - 1.0).abs() < 1e-15);
        assert!((s.eigenvectors[2][0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eig_of_pauli_x() {
        let x = HermitianOperator::new(Matrix::from_fn(2, |i, j| {
            if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) }
        }))
        .unwrap();
        let s = hermitian_eig(&x).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut r = rng(4);
        let h = random_hermitian(&mut r, 6);
        let s = hermitian_eig(&h).unwrap();
        assert!(s.reconstruct().max_abs_diff(h.matrix()) < 1e-10);
        for i in 0..6 {
            for j in 0..6 {
                let g = inner(&s.eigenvectors[i], &s.eigenvectors[j]);
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g - c(e, 0.0)).norm() < 1e-10);
            }
        }
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = Matrix::from_fn(2, |i, j| if i < j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!(matches!(
            hermitian_eig(&HermitianOperator::from_matrix_unchecked(m)),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn embed_site_cases() {
        let mut r = rng(5);
        let x = random_hermitian(&mut r, 3);
        let single = embed_site(&x, 0, &[3]).unwrap();
        assert_eq!(single.matrix(), x.matrix());

        let dims = [2, 3, 2];
        let id = embed_site(&HermitianOperator::identity(3), 1, &dims).unwrap();
        assert_eq!(id.matrix(), &Matrix::identity(12));

        let e = embed_site(&x, 1, &dims).unwrap();
        assert!((e.trace() - x.trace() * 4.0).abs() < 1e-12);
        assert!(matches!(
            embed_site(&x, 0, &dims),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn embedded_operators_commute() {
        let mut r = rng(6);
        let dims = [2, 3];
        let a = embed_site(&random_hermitian(&mut r, 2), 0, &dims).unwrap();
        let b = embed_site(&random_hermitian(&mut r, 3), 1, &dims).unwrap();
        let ab = a.matrix().mul(b.matrix());
        let ba = b.matrix().mul(a.matrix());
        assert!(ab.max_abs_diff(&ba) < 1e-12);
    }

    #[test]
    fn apply_local_matches_embedded_matrix() {
        let mut r = rng(7);
        let dims = [2, 3, 2];
        let x = random_hermitian(&mut r, 3);
        let v = random_state_vector(&mut r, 12);
        let mut out = vec![C64::default(); 12];
        apply_local_into(x.matrix(), 1, &dims, &v, &mut out);
        let dense = embed_site(&x, 1, &dims).unwrap().matrix().apply(&v);
        for (a, b) in out.iter().zip(&dense) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = Matrix::identity(2);
        assert!(matches!(
            DensityMatrix::new(vec![2], bad_trace),
            Err(Error::InvalidTrace(_))
        ));
        let not_psd = Matrix::diagonal(&[1.5, -0.5]);
        assert!(matches!(
            DensityMatrix::new(vec![2], not_psd),
            Err(Error::NotPositive(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn eig_is_accurate(seed in any::<u64>(), n in 1usize..9) {
                let mut r = rng(seed);
                let h = random_hermitian(&mut r, n);
                let s = hermitian_eig(&h).unwrap();
                prop_assert!(s.reconstruct().max_abs_diff(h.matrix()) < 1e-10);
            }

            #[test]
            fn partial_trace_is_linear(seed in any::<u64>(), q in 0.0f64..1.0) {
                let mut r = rng(seed);
                let a = random_density(&mut r, vec![2, 2, 2]);
                let b = random_density(&mut r, vec![2, 2, 2]);
                let mix = DensityMatrix::mixture(&[(q, &a), (1.0 - q, &b)]).unwrap();
                let lhs = partial_trace(&mix, &[0, 2]).unwrap();
                let rhs = partial_trace(&a, &[0, 2]).unwrap().matrix().scale(q)
                    .add(&partial_trace(&b, &[0, 2]).unwrap().matrix().scale(1.0 - q));
                prop_assert!(lhs.matrix().max_abs_diff(&rhs) < 1e-14);
            }
        }
    }
}
