//! Orthonormal traceless Hermitian operator bases and their `(u, v)` grouping.

use crate::error::{Error, Result};
use crate::linalg::{c, HermitianOperator, Matrix};

/// Traceless part of an orthonormal Hermitian basis `{1/sqrt(d), C_i}`,
/// optionally arranged into an `s x (t-1)` grid.
#[derive(Clone, Debug)]
pub struct OperatorBasis {
    d: usize,
    ops: Vec<HermitianOperator>,
    grouping: Option<Grouping>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grouping {
    pub s: usize,
    pub t: usize,
}

impl OperatorBasis {
    /// Accepts any family of `d^2 - 1` traceless, pairwise orthonormal
    /// Hermitian operators (checked to 1e-12).
    pub fn from_operators(d: usize, ops: Vec<HermitianOperator>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InputDomain(format!("basis dimension d = {d} < 2")));
        }
        if ops.len() != d * d - 1 {
            return Err(Error::InputDomain(format!(
                "expected {} traceless operators, got {}",
                d * d - 1,
                ops.len()
            )));
        }
        if let Some(op) = ops.iter().find(|o| o.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: op.dim(),
            });
        }
        let basis = Self {
            d,
            ops,
            grouping: None,
        };
        let dev = basis.orthonormality_deviation();
        if dev > 1e-12 {
            return Err(Error::InputDomain(format!(
                "operators are not orthonormal and traceless (deviation {dev:.3e})"
            )));
        }
        Ok(basis)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn operators(&self) -> &[HermitianOperator] {
        &self.ops
    }

    pub fn grouping(&self) -> Option<Grouping> {
        self.grouping
    }

    /// `C^(uv)` with zero-based `u < s`, `v < t - 1`.
    pub fn element(&self, u: usize, v: usize) -> Option<&HermitianOperator> {
        let g = self.grouping?;
        if u >= g.s || v + 1 >= g.t {
            return None;
        }
        self.ops.get(u * (g.t - 1) + v)
    }

    /// The `t - 1` operators of group `u`.
    pub fn group(&self, u: usize) -> Option<&[HermitianOperator]> {
        let g = self.grouping?;
        if u >= g.s {
            return None;
        }
        let w = g.t - 1;
        Some(&self.ops[u * w..(u + 1) * w])
    }

    /// Largest deviation from `Tr(C_i C_j) = delta_ij`, `Tr C_i = 0`.
    pub fn orthonormality_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for (i, a) in self.ops.iter().enumerate() {
            dev = dev.max(a.matrix().trace().norm());
            for b in &self.ops[i..] {
                let g = a.matrix().trace_product(b.matrix());
                let target = if std::ptr::eq(a, b) { 1.0 } else { 0.0 };
                dev = dev.max((g - c(target, 0.0)).norm());
            }
        }
        dev
    }
}

/// Generalized Gell-Mann basis with unit Hilbert-Schmidt norm.
///
/// Order: symmetric `(E_jk + E_kj)/sqrt(2)` for `j < k` lexicographic, then
/// antisymmetric `-i(E_jk - E_kj)/sqrt(2)` in the same order, then the
/// `d - 1` diagonal operators `diag(1, .., 1, -l, 0, ..)/sqrt(l(l+1))`.
pub fn gell_mann_basis(d: usize) -> Result<OperatorBasis> {
    if d < 2 {
        return Err(Error::InputDomain(format!("Gell-Mann basis needs d >= 2, got {d}")));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| ((j + 1)..d).map(move |k| (j, k)))
        .collect();
    let mut ops = Vec::with_capacity(d * d - 1);
    for &(j, k) in &pairs {
        let mut m = Matrix::zeros(d);
        m[(j, k)] = c(h, 0.0);
        m[(k, j)] = c(h, 0.0);
        ops.push(HermitianOperator::from_matrix_unchecked(m));
    }
    for &(j, k) in &pairs {
        let mut m = Matrix::zeros(d);
        m[(j, k)] = c(0.0, -h);
        m[(k, j)] = c(0.0, h);
        ops.push(HermitianOperator::from_matrix_unchecked(m));
    }
    for l in 1..d {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut diag = vec![0.0; d];
        for x in diag.iter_mut().take(l) {
            *x = norm;
        }
        diag[l] = -(l as f64) * norm;
        ops.push(HermitianOperator::diagonal(&diag));
    }
    Ok(OperatorBasis {
        d,
        ops,
        grouping: None,
    })
}

/// Assigns operator `(u-1)(t-1) + (v-1)` to `(u, v)` (1-based), i.e. row-major blocks.
pub fn group_basis(basis: &OperatorBasis, s: usize, t: usize) -> Result<OperatorBasis> {
    check_completeness(basis.d, s, t)?;
    Ok(OperatorBasis {
        d: basis.d,
        ops: basis.ops.clone(),
        grouping: Some(Grouping { s, t }),
    })
}

pub(crate) fn check_completeness(d: usize, s: usize, t: usize) -> Result<()> {
    if s == 0 || t < 2 || s * (t - 1) != d * d - 1 {
        return Err(Error::Completeness { d, s, t });
    }
    Ok(())
}

/// The four canonical informationally complete `(s, t)` families for `d`:
/// `(1, d^2)`, `(d+1, d)`, `(d^2-1, 2)`, `(d-1, d+2)`.
///
/// The last one degenerates for `d = 2` (`s = 1, t = 4` coincides with the first).
pub fn canonical_families(d: usize) -> [(usize, usize); 4] {
    [(1, d * d), (d + 1, d), (d * d - 1, 2), (d - 1, d + 2)]
}
