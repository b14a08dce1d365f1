//! Benchmark pure states, their one- and two-site reduced states, and the
//! isotropic mixtures `p|psi><psi| + (1-p)/D`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infoquant::{collective_moments_dense, collective_moments_from_rdms, CollectiveMoments};
use crate::linalg::{c, partial_trace, total_dim, DensityMatrix, Matrix, C64, DENSE_LIMIT};
use crate::povm::SymmetricMeasurement;

/// Largest state vector built for dense moment evaluation.
const VECTOR_LIMIT: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq)]
pub enum PureStateDescriptor {
    /// `sum_i |i..i> / sqrt(d)`
    Ghz { d: usize, n: usize },
    /// Totally antisymmetric state of `n` sites with `d = n`.
    Antisymmetric { n: usize },
    Custom { d: usize, n: usize, amplitudes: Vec<C64> },
}

/// `p|psi><psi| + (1-p)/d^N` with `p` supplied per evaluation.
#[derive(Clone, Debug)]
pub struct IsotropicFamily {
    descriptor: PureStateDescriptor,
    d: usize,
    n: usize,
    rdm1: DensityMatrix,
    rdm2: DensityMatrix,
}

pub fn ghz_qudit(d: usize, n: usize) -> Result<IsotropicFamily> {
    if d < 2 || n < 2 {
        return Err(Error::InputDomain(format!("GHZ state needs d >= 2 and N >= 2, got d={d}, N={n}")));
    }
    let df = d as f64;
    let rdm1 = Matrix::identity(d).scale(1.0 / df);
    // Tracing out a third site kills the |ii><jj| coherences.
    let rdm2 = Matrix::from_fn(d * d, |a, b| {
        let (i, i2) = (a / d, a % d);
        let (j, j2) = (b / d, b % d);
        if i == i2 && j == j2 && (n == 2 || i == j) {
            c(1.0 / df, 0.0)
        } else {
            C64::default()
        }
    });
    Ok(IsotropicFamily {
        descriptor: PureStateDescriptor::Ghz { d, n },
        d,
        n,
        rdm1: DensityMatrix::new(vec![d], rdm1)?,
        rdm2: DensityMatrix::new(vec![d, d], rdm2)?,
    })
}

pub fn antisymmetric_state(n: usize) -> Result<IsotropicFamily> {
    if n < 2 {
        return Err(Error::InputDomain(format!("antisymmetric state needs N >= 2, got {n}")));
    }
    let d = n;
    let nf = n as f64;
    let rdm1 = Matrix::identity(d).scale(1.0 / nf);
    // 2/(N(N-1)) * (1 - SWAP)/2
    let w = 1.0 / (nf * (nf - 1.0));
    let rdm2 = Matrix::from_fn(d * d, |a, b| {
        let swapped = (a % d) * d + a / d;
        let mut v = if a == b { w } else { 0.0 };
        if b == swapped {
            v -= w;
        }
        c(v, 0.0)
    });
    Ok(IsotropicFamily {
        descriptor: PureStateDescriptor::Antisymmetric { n },
        d,
        n,
        rdm1: DensityMatrix::new(vec![d], rdm1)?,
        rdm2: DensityMatrix::new(vec![d, d], rdm2)?,
    })
}

/// Arbitrary normalized pure state on `n` sites of dimension `d`.
///
/// Reduced states are taken on sites 0 and (0, 1); moments are always
/// computed on the dense vector, so no symmetry is assumed.
pub fn custom_state(d: usize, n: usize, amplitudes: Vec<C64>) -> Result<IsotropicFamily> {
    if d < 2 || n < 2 {
        return Err(Error::InputDomain(format!("custom state needs d >= 2 and N >= 2, got d={d}, N={n}")));
    }
    let dims = vec![d; n];
    let dim = total_dim(&dims)?;
    if amplitudes.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: amplitudes.len(),
        });
    }
    if dim > DENSE_LIMIT {
        return Err(Error::SizeInfeasible {
            dim,
            limit: DENSE_LIMIT,
        });
    }
    let rho = DensityMatrix::from_pure(dims, &amplitudes)?;
    let rdm1 = partial_trace(&rho, &[0])?;
    let rdm2 = partial_trace(&rho, &[0, 1])?;
    Ok(IsotropicFamily {
        descriptor: PureStateDescriptor::Custom { d, n, amplitudes },
        d,
        n,
        rdm1,
        rdm2,
    })
}

impl IsotropicFamily {
    pub fn descriptor(&self) -> &PureStateDescriptor {
        &self.descriptor
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rdm1(&self) -> &DensityMatrix {
        &self.rdm1
    }

    pub fn rdm2(&self) -> &DensityMatrix {
        &self.rdm2
    }

    pub fn site_dims(&self) -> Vec<usize> {
        vec![self.d; self.n]
    }

    /// `d^N` as a float; exact for the sizes that matter and finite far beyond.
    pub fn total_dim_f64(&self) -> f64 {
        (self.d as f64).powi(self.n as i32)
    }

    pub fn name(&self) -> &'static str {
        match self.descriptor {
            PureStateDescriptor::Ghz { .. } => "ghz",
            PureStateDescriptor::Antisymmetric { .. } => "antisym",
            PureStateDescriptor::Custom { .. } => "custom",
        }
    }

    /// Dense `|psi>`.
    pub fn amplitudes(&self) -> Result<Vec<C64>> {
        let dim = self
            .d
            .checked_pow(self.n as u32)
            .filter(|&x| x <= VECTOR_LIMIT)
            .ok_or(Error::SizeInfeasible {
                dim: usize::MAX,
                limit: VECTOR_LIMIT,
            })?;
        Ok(match &self.descriptor {
            PureStateDescriptor::Ghz { d, .. } => {
                let mut psi = vec![C64::default(); dim];
                let step = (dim - 1) / (d - 1);
                for i in 0..*d {
                    psi[i * step] = c(1.0 / (*d as f64).sqrt(), 0.0);
                }
                psi
            }
            PureStateDescriptor::Antisymmetric { n } => antisymmetric_amplitudes(*n, dim),
            PureStateDescriptor::Custom { amplitudes, .. } => amplitudes.clone(),
        })
    }

    /// Dense `rho(p)`; only for `d^N <= DENSE_LIMIT`.
    pub fn materialize_dense(&self, p: f64) -> Result<DensityMatrix> {
        check_p(p)?;
        let dim = self.d.checked_pow(self.n as u32).unwrap_or(usize::MAX);
        if dim > DENSE_LIMIT {
            return Err(Error::SizeInfeasible {
                dim,
                limit: DENSE_LIMIT,
            });
        }
        let psi = self.amplitudes()?;
        let mut m = Matrix::outer(&psi).scale(p);
        m.add_assign_scaled(&Matrix::identity(dim), c((1.0 - p) / dim as f64, 0.0));
        DensityMatrix::new(self.site_dims(), m)
    }

    /// Pure-state moments of every collective effect, `(u, v)` lexicographic.
    pub fn moments(&self, m: &SymmetricMeasurement) -> Result<Vec<CollectiveMoments>> {
        if m.d() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: m.d(),
            });
        }
        match &self.descriptor {
            PureStateDescriptor::Custom { amplitudes, .. } => m
                .iter_effects()
                .map(|a| collective_moments_dense(amplitudes, a, self.n))
                .collect(),
            _ => m
                .iter_effects()
                .map(|a| collective_moments_from_rdms(&self.rdm1, &self.rdm2, a, self.n))
                .collect(),
        }
    }

    /// `p^2 + 2p(1-p)/D + (1-p)^2/D`.
    pub fn purity(&self, p: f64) -> f64 {
        let dd = self.total_dim_f64();
        p * p + 2.0 * p * (1.0 - p) / dd + (1.0 - p) * (1.0 - p) / dd
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InputDomain(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// `sum_sigma sgn(sigma) |sigma(0) .. sigma(n-1)> / sqrt(n!)` via Heap's algorithm.
fn antisymmetric_amplitudes(n: usize, dim: usize) -> Vec<C64> {
    let mut psi = vec![C64::default(); dim];
    let norm = 1.0 / (1..=n).map(|x| x as f64).product::<f64>().sqrt();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut counters = vec![0usize; n];
    let mut sign = 1.0;
    let index = |perm: &[usize]| perm.iter().fold(0usize, |acc, &x| acc * n + x);
    psi[index(&perm)] = c(norm, 0.0);
    let mut i = 1;
    while i < n {
        if counters[i] < i {
            let j = if i % 2 == 0 { 0 } else { counters[i] };
            perm.swap(j, i);
            sign = -sign;
            psi[index(&perm)] = c(sign * norm, 0.0);
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    psi
}

/// On-disk pure state: `{"site_dims": [..], "amplitudes": [[re, im], ..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureStateFile {
    pub site_dims: Vec<usize>,
    pub amplitudes: Vec<[f64; 2]>,
}

impl PureStateFile {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Requires all site dimensions equal.
    pub fn into_family(self) -> Result<IsotropicFamily> {
        let d = *self
            .site_dims
            .first()
            .ok_or_else(|| Error::InputDomain("site_dims is empty".into()))?;
        if self.site_dims.iter().any(|&x| x != d) {
            return Err(Error::InputDomain("site dimensions must all be equal".into()));
        }
        let amps = self.amplitudes.iter().map(|[re, im]| c(*re, *im)).collect();
        custom_state(d, self.site_dims.len(), amps)
    }
}
