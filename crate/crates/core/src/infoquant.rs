//! Metric-adjusted skew information, variance, and their sums over the
//! collective observables `𝔸^(uv) = sum_i A_i^(uv)`.
//!
//! Skew information is evaluated through a [`SpectralState`]: explicit
//! eigenpairs plus one implicit degenerate level. Pairs inside the implicit
//! level carry no weight, so only `Xv` for the explicit vectors is needed.
//! For isotropic mixtures this reduces a `D x D` contraction to one vector.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    apply_local_into, c, hermitian_eig, inner, norm_sqr, DensityMatrix, HermitianOperator, Matrix,
    Spectrum, C64, DENSE_LIMIT,
};
use crate::povm::SymmetricMeasurement;

/// Eigenvalues below this are exactly zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-12;
/// Eigenvalue pairs closer than this contribute nothing.
pub const EQUAL_EIGENVALUE_TOL: f64 = 1e-12;

/// The two built-in operator monotone families.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum MonotoneFunction {
    /// `(1+x)/2`
    #[default]
    Qfi,
    /// `w(1-w)(x-1)^2 / ((x^w - 1)(x^(1-w) - 1))`
    Wyd { omega: f64 },
}

impl MonotoneFunction {
    pub fn wyd(omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega < 1.0) {
            return Err(Error::InputDomain(format!("WYD omega must lie in (0, 1), got {omega}")));
        }
        Ok(MonotoneFunction::Wyd { omega })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::InputDomain(format!("monotone function needs x >= 0, got {x}")));
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        match *self {
            MonotoneFunction::Qfi => 0.5 * (1.0 + x),
            MonotoneFunction::Wyd { omega } => {
                if x == 1.0 {
                    return 1.0;
                }
                let ln = (x - 1.0).ln_1p();
                let num = omega * (1.0 - omega) * (x - 1.0) * (x - 1.0);
                num / ((omega * ln).exp_m1() * ((1.0 - omega) * ln).exp_m1())
            }
        }
    }

    pub fn f0(&self) -> f64 {
        match *self {
            MonotoneFunction::Qfi => 0.5,
            MonotoneFunction::Wyd { omega } => omega * (1.0 - omega),
        }
    }

    /// Largest deviation from `x f(1/x) = f(x)` over a few sample points.
    pub fn symmetry_deviation(&self) -> f64 {
        [0.1, 0.5, 2.0, 10.0]
            .iter()
            .map(|&x| (x * self.eval_unchecked(1.0 / x) - self.eval_unchecked(x)).abs())
            .fold(0.0, f64::max)
    }

    /// `(a-b)^2 / (b f(a/b))` with the `b -> 0` limit `a / f(0)`.
    pub fn weight(&self, a: f64, b: f64) -> f64 {
        let a = if a < ZERO_EIGENVALUE_TOL { 0.0 } else { a };
        let b = if b < ZERO_EIGENVALUE_TOL { 0.0 } else { b };
        if (a - b).abs() < EQUAL_EIGENVALUE_TOL {
            return 0.0;
        }
        if b == 0.0 {
            return a / self.f0();
        }
        (a - b) * (a - b) / (b * self.eval_unchecked(a / b))
    }
}

impl fmt::Display for MonotoneFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonotoneFunction::Qfi => f.write_str("qfi"),
            MonotoneFunction::Wyd { omega } => write!(f, "wyd:{omega}"),
        }
    }
}

impl FromStr for MonotoneFunction {
    type Err = Error;

    /// `qfi`, `wyd` (omega 1/2) or `wyd:<omega>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "qfi" => Ok(MonotoneFunction::Qfi),
            "wyd" => MonotoneFunction::wyd(0.5),
            _ => {
                let omega = lower
                    .strip_prefix("wyd:")
                    .and_then(|w| w.parse::<f64>().ok())
                    .ok_or_else(|| Error::InputDomain(format!("unknown monotone function {s:?}")))?;
                MonotoneFunction::wyd(omega)
            }
        }
    }
}

impl Serialize for MonotoneFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for MonotoneFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which side of the criteria is being evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quantity {
    Skew(MonotoneFunction),
    Variance,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Skew(func) => func.fmt(f),
            Quantity::Variance => f.write_str("variance"),
        }
    }
}

/// A Hermitian operator known only through its action and two traces.
pub trait HermitianAction: Sync {
    fn dim(&self) -> usize;
    /// `out = X v`.
    fn apply(&self, v: &[C64], out: &mut [C64]);
    fn trace(&self) -> f64;
    /// `Tr X^2`.
    fn trace_sq(&self) -> f64;
}

impl HermitianAction for HermitianOperator {
    fn dim(&self) -> usize {
        HermitianOperator::dim(self)
    }

    fn apply(&self, v: &[C64], out: &mut [C64]) {
        let m = self.matrix();
        for (i, o) in out.iter_mut().enumerate() {
            *o = m.row(i).iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    fn trace(&self) -> f64 {
        HermitianOperator::trace(self)
    }

    fn trace_sq(&self) -> f64 {
        self.trace_product(self)
    }
}

/// `sum_i A_i` over `n` sites of dimension `d`.
#[derive(Clone, Debug)]
pub struct CollectiveObservable {
    op: HermitianOperator,
    dims: Vec<usize>,
}

impl CollectiveObservable {
    pub fn new(op: HermitianOperator, n_sites: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InputDomain("collective observable needs n >= 1".into()));
        }
        let d = op.dim();
        d.checked_pow(n_sites as u32)
            .ok_or_else(|| Error::InputDomain("total dimension overflows".into()))?;
        Ok(Self {
            op,
            dims: vec![d; n_sites],
        })
    }

    pub fn single_site(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Dense `𝔸`, only for `d^N <= DENSE_LIMIT`.
    pub fn materialize(&self) -> Result<HermitianOperator> {
        let dim = self.total_dim();
        if dim > DENSE_LIMIT {
            return Err(Error::SizeInfeasible {
                dim,
                limit: DENSE_LIMIT,
            });
        }
        let mut m = Matrix::zeros(dim);
        let mut e = vec![C64::default(); dim];
        let mut col = vec![C64::default(); dim];
        for j in 0..dim {
            e[j] = c(1.0, 0.0);
            self.apply(&e, &mut col);
            for (i, z) in col.iter().enumerate() {
                m[(i, j)] = *z;
            }
            e[j] = C64::default();
        }
        Ok(HermitianOperator::from_matrix_unchecked(m))
    }
}

impl HermitianAction for CollectiveObservable {
    fn dim(&self) -> usize {
        self.total_dim()
    }

    fn apply(&self, v: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = C64::default());
        for site in 0..self.dims.len() {
            apply_local_into(self.op.matrix(), site, &self.dims, v, out);
        }
    }

    fn trace(&self) -> f64 {
        let (n, d) = (self.dims.len() as f64, self.op.dim() as f64);
        n * self.op.trace() * d.powi(self.dims.len() as i32 - 1)
    }

    fn trace_sq(&self) -> f64 {
        let (nu, d) = (self.dims.len() as i32, self.op.dim() as f64);
        let n = nu as f64;
        let tr = self.op.trace();
        n * self.op.trace_product(&self.op) * d.powi(nu - 1)
            + n * (n - 1.0) * tr * tr * d.powi(nu - 2)
    }
}

/// Eigen-decomposition split into explicit eigenpairs and one implicit level.
///
/// The implicit level covers the orthogonal complement of the explicit
/// vectors with a single eigenvalue.
#[derive(Clone, Debug)]
pub struct SpectralState {
    dim: usize,
    values: Vec<f64>,
    vectors: Vec<Vec<C64>>,
    residual: f64,
}

impl SpectralState {
    /// Keeps the largest degenerate cluster implicit.
    pub fn from_spectrum(spec: &Spectrum) -> Self {
        let dim = spec.eigenvalues.len();
        let clean: Vec<f64> = spec
            .eigenvalues
            .iter()
            .map(|&l| if l < ZERO_EIGENVALUE_TOL { 0.0 } else { l })
            .collect();
        // Ascending, so clusters are contiguous runs.
        let (mut best_start, mut best_len) = (0, 0);
        let mut start = 0;
        for i in 1..=dim {
            if i == dim || (clean[i] - clean[start]).abs() >= EQUAL_EIGENVALUE_TOL {
                if i - start > best_len {
                    best_start = start;
                    best_len = i - start;
                }
                start = i;
            }
        }
        let cluster = best_start..best_start + best_len;
        let residual = if best_len > 0 {
            clean[cluster.clone()].iter().sum::<f64>() / best_len as f64
        } else {
            0.0
        };
        let mut values = Vec::with_capacity(dim - best_len);
        let mut vectors = Vec::with_capacity(dim - best_len);
        for i in (0..dim).filter(|i| !cluster.contains(i)) {
            values.push(clean[i]);
            vectors.push(spec.eigenvectors[i].clone());
        }
        Self {
            dim,
            values,
            vectors,
            residual,
        }
    }

    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        Ok(Self::from_spectrum(&hermitian_eig(rho.operator())?))
    }

    /// `sum_k p_k |psi_k><psi_k|` via the Gram matrix of `sqrt(p_k) psi_k`;
    /// the zero space is the implicit level.
    pub fn from_pure_mixture(parts: &[(f64, &[C64])]) -> Result<Self> {
        let dim = parts
            .first()
            .ok_or_else(|| Error::InputDomain("empty mixture".into()))?
            .1
            .len();
        if parts.iter().any(|(w, v)| *w < 0.0 || v.len() != dim) {
            return Err(Error::InputDomain("mixture weights must be nonnegative on one space".into()));
        }
        let m = parts.len();
        let cols: Vec<Vec<C64>> = parts
            .iter()
            .map(|(w, v)| v.iter().map(|z| z * w.sqrt()).collect())
            .collect();
        let gram = Matrix::from_fn(m, |i, j| inner(&cols[i], &cols[j]));
        let spec = hermitian_eig(&HermitianOperator::new(gram)?)?;
        let mut values = Vec::new();
        let mut vectors = Vec::new();
        for (lam, u) in spec.eigenvalues.iter().zip(&spec.eigenvectors) {
            if *lam < ZERO_EIGENVALUE_TOL {
                continue;
            }
            let scale = 1.0 / lam.sqrt();
            let mut v = vec![C64::default(); dim];
            for (uk, col) in u.iter().zip(&cols) {
                for (vi, ci) in v.iter_mut().zip(col) {
                    *vi += ci * uk * scale;
                }
            }
            values.push(*lam);
            vectors.push(v);
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > crate::linalg::TRACE_TOL {
            return Err(Error::InvalidTrace(total));
        }
        Ok(Self {
            dim,
            values,
            vectors,
            residual: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn explicit_rank(&self) -> usize {
        self.values.len()
    }

    fn residual_multiplicity(&self) -> f64 {
        (self.dim - self.values.len()) as f64
    }

    /// `X v_e` for every explicit vector.
    fn images<X: HermitianAction + ?Sized>(&self, x: &X) -> Vec<Vec<C64>> {
        self.vectors
            .iter()
            .map(|v| {
                let mut out = vec![C64::default(); self.dim];
                x.apply(v, &mut out);
                out
            })
            .collect()
    }

    pub fn skew_information<X: HermitianAction + ?Sized>(&self, x: &X, f: MonotoneFunction) -> f64 {
        let images = self.images(x);
        let r = self.residual;
        let mut total = 0.0;
        let mut projected = vec![0.0; self.values.len()];
        for (e, xe) in images.iter().enumerate() {
            for (e2, v2) in self.vectors.iter().enumerate() {
                let m = inner(v2, xe).norm_sqr();
                projected[e] += m;
                total += f.weight(self.values[e2], self.values[e]) * m;
            }
        }
        if self.residual_multiplicity() > 0.0 {
            for (e, xe) in images.iter().enumerate() {
                let leak = (norm_sqr(xe) - projected[e]).max(0.0);
                let l = self.values[e];
                total += (f.weight(l, r) + f.weight(r, l)) * leak;
            }
        }
        0.5 * f.f0() * total
    }

    pub fn variance<X: HermitianAction + ?Sized>(&self, x: &X) -> f64 {
        let images = self.images(x);
        let (mut mean_e, mut sq_e) = (0.0, 0.0);
        let (mut mean_w, mut sq_w) = (0.0, 0.0);
        for ((l, v), xv) in self.values.iter().zip(&self.vectors).zip(&images) {
            let m = inner(v, xv).re;
            let s = norm_sqr(xv);
            mean_e += m;
            sq_e += s;
            mean_w += l * m;
            sq_w += l * s;
        }
        let r = self.residual;
        let mean = mean_w + r * (x.trace() - mean_e);
        let second = sq_w + r * (x.trace_sq() - sq_e);
        second - mean * mean
    }

    pub fn quantity<X: HermitianAction + ?Sized>(&self, x: &X, q: Quantity) -> f64 {
        match q {
            Quantity::Skew(f) => self.skew_information(x, f),
            Quantity::Variance => self.variance(x),
        }
    }
}

fn check_dims(rho: &DensityMatrix, x: &HermitianOperator) -> Result<()> {
    if rho.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: x.dim(),
        });
    }
    Ok(())
}

/// `I_f(rho, X) = (f(0)/2) sum_ij (l_i - l_j)^2 / (l_j f(l_i/l_j)) |<i|X|j>|^2`.
pub fn skew_information(rho: &DensityMatrix, x: &HermitianOperator, f: MonotoneFunction) -> Result<f64> {
    check_dims(rho, x)?;
    Ok(SpectralState::from_density(rho)?.skew_information(x, f))
}

/// `Tr(rho X^2) - Tr(rho X)^2`.
pub fn variance(rho: &DensityMatrix, x: &HermitianOperator) -> Result<f64> {
    check_dims(rho, x)?;
    let mean = rho.operator().trace_product(x);
    Ok(rho.matrix().trace_product(&x.matrix().mul(x.matrix())).re - mean * mean)
}

/// Pure-state moments of `𝔸` plus its traces over the full space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollectiveMoments {
    pub mean: f64,
    pub second_moment: f64,
    pub trace_op: f64,
    pub trace_op_sq: f64,
}

/// Moments of `𝔸 = sum_i a_i` on a permutation-invariant (up to sign) pure
/// state, from its one- and two-site reduced states.
pub fn collective_moments_from_rdms(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    a: &HermitianOperator,
    n: usize,
) -> Result<CollectiveMoments> {
    let d = a.dim();
    if rho1.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho1.dim(),
        });
    }
    if rho2.dim() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            got: rho2.dim(),
        });
    }
    if n == 0 {
        return Err(Error::InputDomain("n must be at least 1".into()));
    }
    let nf = n as f64;
    let a2 = a.square();
    let mean = nf * rho1.operator().trace_product(a);
    let mut second = nf * rho1.operator().trace_product(&a2);
    if n > 1 {
        let aa = a.matrix().kron(a.matrix());
        second += nf * (nf - 1.0) * rho2.matrix().trace_product(&aa).re;
    }
    let ni = n as i32;
    let df = d as f64;
    let tr = a.trace();
    Ok(CollectiveMoments {
        mean,
        second_moment: second,
        trace_op: nf * tr * df.powi(ni - 1),
        trace_op_sq: nf * a2.trace() * df.powi(ni - 1) + nf * (nf - 1.0) * tr * tr * df.powi(ni - 2),
    })
}

/// Moments of `𝔸` on a dense pure state.
pub fn collective_moments_dense(psi: &[C64], a: &HermitianOperator, n: usize) -> Result<CollectiveMoments> {
    let obs = CollectiveObservable::new(a.clone(), n)?;
    if psi.len() != obs.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: obs.total_dim(),
            got: psi.len(),
        });
    }
    let mut xpsi = vec![C64::default(); psi.len()];
    obs.apply(psi, &mut xpsi);
    Ok(CollectiveMoments {
        mean: inner(psi, &xpsi).re,
        second_moment: norm_sqr(&xpsi),
        trace_op: obs.trace(),
        trace_op_sq: obs.trace_sq(),
    })
}

fn uniform_site_dim(rho_dims: &[usize], d: usize) -> Result<()> {
    if let Some(&bad) = rho_dims.iter().find(|&&x| x != d) {
        return Err(Error::DimensionMismatch { expected: d, got: bad });
    }
    Ok(())
}

/// `sum_{u,v} Q(𝔸^(uv), rho)` on the dense state.
pub fn criterion_lhs_dense(rho: &DensityMatrix, m: &SymmetricMeasurement, q: Quantity) -> Result<f64> {
    if rho.dim() > DENSE_LIMIT {
        return Err(Error::SizeInfeasible {
            dim: rho.dim(),
            limit: DENSE_LIMIT,
        });
    }
    uniform_site_dim(rho.site_dims(), m.d())?;
    let state = SpectralState::from_density(rho)?;
    criterion_lhs_spectral(&state, rho.site_dims().len(), m, q)
}

/// As [`criterion_lhs_dense`] for a state already in spectral form on `n`
/// sites of dimension `m.d()`.
pub fn criterion_lhs_spectral(state: &SpectralState, n: usize, m: &SymmetricMeasurement, q: Quantity) -> Result<f64> {
    let effects: Vec<&HermitianOperator> = m.iter_effects().collect();
    let obs: Vec<CollectiveObservable> = effects
        .iter()
        .map(|a| CollectiveObservable::new((*a).clone(), n))
        .collect::<Result<_>>()?;
    if obs[0].total_dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: obs[0].total_dim(),
            got: state.dim(),
        });
    }
    let parts: Vec<f64> = obs.par_iter().map(|o| state.quantity(o, q)).collect();
    Ok(parts.iter().sum())
}

/// `sum_{u,v} Q(𝔸^(uv), p|psi><psi| + (1-p)/D)` from pure-state moments.
pub fn criterion_lhs_isotropic(moments: &[CollectiveMoments], p: f64, d: usize, n: usize, q: Quantity) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InputDomain(format!("p must lie in [0, 1], got {p}")));
    }
    let big_d = (d as f64).powi(n as i32);
    let l1 = p + (1.0 - p) / big_d;
    let l0 = (1.0 - p) / big_d;
    let mut total = 0.0;
    for mo in moments {
        let var_psi = mo.second_moment - mo.mean * mo.mean;
        total += match q {
            Quantity::Skew(f) => 0.5 * f.f0() * (f.weight(l1, l0) + f.weight(l0, l1)) * var_psi,
            Quantity::Variance => {
                let mean = p * mo.mean + (1.0 - p) * mo.trace_op / big_d;
                p * mo.second_moment + (1.0 - p) * mo.trace_op_sq / big_d - mean * mean
            }
        };
    }
    Ok(total)
}
