//! The two k-stretchability tests, noise thresholds, and checks of the
//! block-level operator inequalities behind the bounds.
//!
//! A k-stretchable state satisfies
//!
//! ```text
//! sum_{u,v} I_f(𝔸^(uv), rho) <= I_{N+k}      (skew criterion)
//! sum_{u,v} V(𝔸^(uv), rho)   >= V_{N+k}      (variance criterion)
//! ```
//!
//! so a violation certifies k-nonstretchability; satisfaction proves nothing.

use std::collections::HashMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::canonical_families;
use crate::error::{Error, Result};
use crate::infoquant::{
    criterion_lhs_dense, criterion_lhs_isotropic, criterion_lhs_spectral, CollectiveMoments, CollectiveObservable,
    HermitianAction, MonotoneFunction, Quantity, SpectralState,
};
use crate::linalg::{c, hermitian_eig, inner, DensityMatrix, Matrix, C64, DENSE_LIMIT};
use crate::partitions::{bound_i, bound_v, enumerate_kstretch, BoundInputs, MSource, StretchPartition};
use crate::povm::{RChoice, SymmetricMeasurement};
use crate::states::{check_p, IsotropicFamily};

/// Verdicts need the inequality broken by more than this.
pub const VERDICT_MARGIN: f64 = 1e-9;
/// Slack for the block-level inequality checks.
pub const BOUND_CHECK_SLACK: f64 = 1e-9;
const GRID_POINTS: usize = 101;
const BISECTION_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    KNonstretchable,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub n: usize,
    pub k: i64,
    pub d: usize,
    pub s: usize,
    pub t: usize,
    pub r: f64,
    pub f: MonotoneFunction,
    /// Mixing weight for isotropic inputs.
    pub p: Option<f64>,
    pub lhs_skew: f64,
    pub i_bound: f64,
    pub violated_skew: bool,
    pub lhs_var: f64,
    pub v_bound: f64,
    pub violated_var: bool,
    pub m_source: MSource,
}

impl CriterionReport {
    pub const CSV_HEADER: &'static str =
        "N,k,d,s,t,r,f,p,lhs_skew,i_bound,violated_skew,lhs_var,v_bound,violated_var,m_source";

    pub fn verdict(&self) -> Verdict {
        if self.violated_skew || self.violated_var {
            Verdict::KNonstretchable
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn csv_row(&self) -> String {
        [
            self.n.to_string(),
            self.k.to_string(),
            self.d.to_string(),
            self.s.to_string(),
            self.t.to_string(),
            format_g12(self.r),
            self.f.to_string(),
            self.p.map(format_g12).unwrap_or_default(),
            format_g12(self.lhs_skew),
            format_g12(self.i_bound),
            self.violated_skew.to_string(),
            format_g12(self.lhs_var),
            format_g12(self.v_bound),
            self.violated_var.to_string(),
            self.m_source.to_string(),
        ]
        .join(",")
    }
}

/// 12 significant digits, `%g` style, locale independent.
pub fn format_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// What to evaluate the criteria on.
#[derive(Clone, Copy, Debug)]
pub enum StateInput<'a> {
    Dense(&'a DensityMatrix),
    Isotropic { family: &'a IsotropicFamily, p: f64 },
    /// Pre-decomposed state on `n` sites of dimension `m.d()`.
    Spectral { state: &'a SpectralState, n: usize },
}

impl StateInput<'_> {
    fn n_sites(&self) -> usize {
        match self {
            StateInput::Dense(rho) => rho.site_dims().len(),
            StateInput::Isotropic { family, .. } => family.n(),
            StateInput::Spectral { n, .. } => *n,
        }
    }

    fn p(&self) -> Option<f64> {
        match self {
            StateInput::Isotropic { p, .. } => Some(*p),
            _ => None,
        }
    }
}

fn check_k(n: usize, k: i64) -> Result<()> {
    if k < 1 - n as i64 || k > n as i64 - 1 {
        return Err(Error::InputDomain(format!(
            "k = {k} outside [1 - N, N - 1] = [{}, {}]",
            1 - n as i64,
            n as i64 - 1
        )));
    }
    Ok(())
}

/// Both criteria on one state.
pub fn evaluate(
    state: StateInput<'_>,
    m: &SymmetricMeasurement,
    f: MonotoneFunction,
    k: i64,
    source: MSource,
) -> Result<CriterionReport> {
    let n = state.n_sites();
    check_k(n, k)?;
    let inputs = BoundInputs::new(n, k, m)?;
    let (lhs_skew, lhs_var) = match state {
        StateInput::Dense(rho) => {
            if rho.dim() > DENSE_LIMIT {
                return Err(Error::SizeInfeasible {
                    dim: rho.dim(),
                    limit: DENSE_LIMIT,
                });
            }
            let spectral = SpectralState::from_density(rho)?;
            if let Some(&bad) = rho.site_dims().iter().find(|&&x| x != m.d()) {
                return Err(Error::DimensionMismatch { expected: m.d(), got: bad });
            }
            (
                criterion_lhs_spectral(&spectral, n, m, Quantity::Skew(f))?,
                criterion_lhs_spectral(&spectral, n, m, Quantity::Variance)?,
            )
        }
        StateInput::Isotropic { family, p } => {
            check_p(p)?;
            let moments = family.moments(m)?;
            (
                criterion_lhs_isotropic(&moments, p, family.d(), n, Quantity::Skew(f))?,
                criterion_lhs_isotropic(&moments, p, family.d(), n, Quantity::Variance)?,
            )
        }
        StateInput::Spectral { state, n } => (
            criterion_lhs_spectral(state, n, m, Quantity::Skew(f))?,
            criterion_lhs_spectral(state, n, m, Quantity::Variance)?,
        ),
    };
    let i_bound = bound_i(&inputs, source)?;
    let v_bound = bound_v(&inputs, source)?;
    Ok(CriterionReport {
        n,
        k,
        d: m.d(),
        s: m.s(),
        t: m.t(),
        r: m.r(),
        f,
        p: state.p(),
        lhs_skew,
        i_bound,
        violated_skew: skew_violated(lhs_skew, i_bound),
        lhs_var,
        v_bound,
        violated_var: variance_violated(lhs_var, v_bound),
        m_source: source,
    })
}

pub fn skew_violated(lhs: f64, bound: f64) -> bool {
    lhs > bound + VERDICT_MARGIN
}

pub fn variance_violated(lhs: f64, bound: f64) -> bool {
    lhs < bound - VERDICT_MARGIN
}

/// Violation indicator of one criterion along `p` for an isotropic family.
pub struct ThresholdProblem {
    moments: Vec<CollectiveMoments>,
    d: usize,
    n: usize,
    quantity: Quantity,
    bound: f64,
}

impl ThresholdProblem {
    pub fn new(
        family: &IsotropicFamily,
        m: &SymmetricMeasurement,
        quantity: Quantity,
        k: i64,
        source: MSource,
    ) -> Result<Self> {
        check_k(family.n(), k)?;
        let inputs = BoundInputs::new(family.n(), k, m)?;
        let bound = match quantity {
            Quantity::Skew(_) => bound_i(&inputs, source)?,
            Quantity::Variance => bound_v(&inputs, source)?,
        };
        Ok(Self {
            moments: family.moments(m)?,
            d: family.d(),
            n: family.n(),
            quantity,
            bound,
        })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn lhs(&self, p: f64) -> Result<f64> {
        criterion_lhs_isotropic(&self.moments, p, self.d, self.n, self.quantity)
    }

    pub fn violated(&self, p: f64) -> Result<bool> {
        let lhs = self.lhs(p)?;
        Ok(match self.quantity {
            Quantity::Skew(_) => skew_violated(lhs, self.bound),
            Quantity::Variance => variance_violated(lhs, self.bound),
        })
    }

    pub fn solve(&self) -> Result<Option<f64>> {
        solve_threshold(|p| self.violated(p))
    }
}

/// Smallest violating `p`, to 1e-6, or `None` if `p = 1` is not violated.
///
/// The indicator must be monotone (never violated, then always) on a
/// 101-point grid before bisection starts.
pub fn solve_threshold(violated: impl Fn(f64) -> Result<bool> + Sync) -> Result<Option<f64>> {
    let grid: Vec<(f64, bool)> = (0..GRID_POINTS)
        .into_par_iter()
        .map(|i| {
            let p = i as f64 / (GRID_POINTS - 1) as f64;
            violated(p).map(|v| (p, v))
        })
        .collect::<Result<_>>()?;
    let flips = grid.windows(2).filter(|w| w[0].1 != w[1].1).count();
    let last = grid[GRID_POINTS - 1].1;
    if flips > 1 || (flips == 1 && !last) {
        return Err(Error::NonMonotone { grid });
    }
    if !last {
        return Ok(None);
    }
    let first = grid.iter().position(|(_, v)| *v).expect("p = 1 is violated");
    if first == 0 {
        return Ok(Some(0.0));
    }
    let (mut lo, mut hi) = (grid[first - 1].0, grid[first].0);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if violated(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

pub fn threshold_p(
    family: &IsotropicFamily,
    m: &SymmetricMeasurement,
    quantity: Quantity,
    k: i64,
    source: MSource,
) -> Result<Option<f64>> {
    ThresholdProblem::new(family, m, quantity, k, source)?.solve()
}

/// Reference closed form for the variance threshold of the antisymmetric
/// family at `k = 3 - N` with the `(1, N^2)` measurement.
pub fn antisymmetric_variance_threshold_formula(n: usize, r: f64) -> f64 {
    let nf = n as f64;
    let n3r2 = nf.powi(3) * r * r;
    (n3r2 * (nf + 1.0) * (nf + 3.0) + nf + 1.0) / (n3r2 * (nf + 1.0).powi(2) * (nf - 1.0) + nf - 1.0)
}

/// Result of checking a two-sided scalar inequality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RangeCheck {
    pub lower: f64,
    pub upper: f64,
    pub observed_min: f64,
    pub observed_max: f64,
    pub passed: bool,
    /// Lower and upper bound coincide with the observations.
    pub tight: bool,
}

impl RangeCheck {
    fn new(lower: f64, upper: f64, observed_min: f64, observed_max: f64) -> Self {
        Self {
            lower,
            upper,
            observed_min,
            observed_max,
            passed: observed_min >= lower - BOUND_CHECK_SLACK && observed_max <= upper + BOUND_CHECK_SLACK,
            tight: (upper - lower).abs() <= BOUND_CHECK_SLACK
                && (observed_max - upper).abs() <= BOUND_CHECK_SLACK
                && (observed_min - lower).abs() <= BOUND_CHECK_SLACK,
        }
    }
}

/// Spectrum of `sum_{u,v} (𝔸^(uv))^2` on a block of `n` sites against
/// `[K(d+1)n + (s/t - K(1+1/d))n^2, K(d-1)n + (s/t + K(1-1/d))n^2]`.
pub fn collective_square_bounds(m: &SymmetricMeasurement, n: usize) -> Result<RangeCheck> {
    let dim = m.d().checked_pow(n as u32).unwrap_or(usize::MAX);
    if n == 0 || dim > DENSE_LIMIT {
        return Err(Error::SizeInfeasible {
            dim,
            limit: DENSE_LIMIT,
        });
    }
    let mut sum = Matrix::zeros(dim);
    for a in m.iter_effects() {
        let big = CollectiveObservable::new(a.clone(), n)?.materialize()?;
        sum.add_assign_scaled(&big.matrix().mul(big.matrix()), c(1.0, 0.0));
    }
    let spec = hermitian_eig(&crate::linalg::HermitianOperator::new(sum)?)?;
    let (d, s, t, nf) = (m.d() as f64, m.s() as f64, m.t() as f64, n as f64);
    let kk = m.square_coefficient();
    let lower = kk * (d + 1.0) * nf + (s / t - kk * (1.0 + 1.0 / d)) * nf * nf;
    let upper = kk * (d - 1.0) * nf + (s / t + kk * (1.0 - 1.0 / d)) * nf * nf;
    Ok(RangeCheck::new(lower, upper, spec.min(), spec.max()))
}

/// `sum_{u,v} Tr(𝔸^(uv) psi)^2` for a pure state on `n` sites against
/// `[(d^2-1)n/(t(t-1)), (d-1)(d^2+t^2 chi)n^2/(d t(t-1))]`.
pub fn block_probability_bounds(m: &SymmetricMeasurement, psi: &DensityMatrix) -> Result<RangeCheck> {
    if psi.dim() > DENSE_LIMIT {
        return Err(Error::SizeInfeasible {
            dim: psi.dim(),
            limit: DENSE_LIMIT,
        });
    }
    let purity = psi.purity();
    if (purity - 1.0).abs() > 1e-10 {
        return Err(Error::InputDomain(format!("state is not pure (purity {purity})")));
    }
    if let Some(&bad) = psi.site_dims().iter().find(|&&x| x != m.d()) {
        return Err(Error::DimensionMismatch { expected: m.d(), got: bad });
    }
    let n = psi.site_dims().len();
    let mut sum = 0.0;
    for a in m.iter_effects() {
        let obs = CollectiveObservable::new(a.clone(), n)?;
        sum += expectation_dense(psi, &obs).powi(2);
    }
    let (d, t, nf) = (m.d() as f64, m.t() as f64, n as f64);
    let lower = (d * d - 1.0) * nf / (t * (t - 1.0));
    let upper = (d - 1.0) * (d * d + t * t * m.chi()) * nf * nf / (d * t * (t - 1.0));
    Ok(RangeCheck::new(lower, upper, sum, sum))
}

fn expectation_dense(rho: &DensityMatrix, x: &CollectiveObservable) -> f64 {
    let dim = rho.dim();
    let mut e = vec![C64::default(); dim];
    let mut col = vec![C64::default(); dim];
    let mut acc = 0.0;
    for j in 0..dim {
        e[j] = c(1.0, 0.0);
        x.apply(&e, &mut col);
        e[j] = C64::default();
        // Tr(rho X) = sum_j (rho X)_jj = sum_{j,i} rho_ji X_ij
        acc += rho
            .matrix()
            .row(j)
            .iter()
            .zip(&col)
            .map(|(r, xv)| (r * xv).re)
            .sum::<f64>();
    }
    acc
}

/// Haar-random pure state of dimension `dim`.
pub fn haar_state(rng: &mut impl Rng, dim: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = inner(&v, &v).re.sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// A random pure state factorizing along a random k-stretchable partition.
#[derive(Clone, Debug)]
pub struct StretchableSample {
    pub partition: StretchPartition,
    /// Sites of each block, aligned with `partition.parts()`.
    pub blocks: Vec<Vec<usize>>,
    pub amplitudes: Vec<C64>,
}

/// Uniform over admissible block-size multisets, random site assignment,
/// Haar-random state within each block.
pub fn random_kstretchable_pure(rng: &mut impl Rng, d: usize, n: usize, k: i64) -> Result<StretchableSample> {
    let options = enumerate_kstretch(n, k)?;
    let partition = options
        .partitions
        .choose(rng)
        .ok_or_else(|| Error::InputDomain(format!("no {k}-stretchable partition of {n}")))?
        .clone();
    let mut sites: Vec<usize> = (0..n).collect();
    sites.shuffle(rng);
    let mut blocks = Vec::new();
    let mut offset = 0;
    for &size in partition.parts() {
        let mut b = sites[offset..offset + size].to_vec();
        b.sort_unstable();
        blocks.push(b);
        offset += size;
    }
    let factors: Vec<Vec<C64>> = blocks
        .iter()
        .map(|b| haar_state(rng, d.pow(b.len() as u32)))
        .collect();
    let dim = d.pow(n as u32);
    let mut digits = vec![0usize; n];
    let mut amplitudes = Vec::with_capacity(dim);
    for idx in 0..dim {
        let mut rem = idx;
        for s in (0..n).rev() {
            digits[s] = rem % d;
            rem /= d;
        }
        let mut amp = c(1.0, 0.0);
        for (b, f) in blocks.iter().zip(&factors) {
            let local = b.iter().fold(0usize, |acc, &s| acc * d + digits[s]);
            amp *= f[local];
        }
        amplitudes.push(amp);
    }
    Ok(StretchableSample {
        partition,
        blocks,
        amplitudes,
    })
}

/// One soundness trial and its verdicts.
#[derive(Clone, Debug, Serialize)]
pub struct SoundnessCase {
    pub d: usize,
    pub n: usize,
    pub k: i64,
    pub s: usize,
    pub t: usize,
    pub terms: usize,
    pub report: CriterionReport,
}

/// Random k-stretchable states (pure or mixtures of up to three) with
/// `d in {2, 3}`, `N in 3..=5`, random canonical measurement family.
pub fn soundness_sweep(seed: u64, trials: usize) -> Result<Vec<SoundnessCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache: HashMap<(usize, usize, usize), SymmetricMeasurement> = HashMap::new();
    let mut cases = Vec::with_capacity(trials);
    for _ in 0..trials {
        let d = rng.random_range(2..=3usize);
        let n = rng.random_range(3..=5usize);
        let k = rng.random_range((1 - n as i64)..=(n as i64 - 1));
        let (s, t) = *canonical_families(d).choose(&mut rng).expect("four families");
        let m = match cache.get(&(d, s, t)) {
            Some(m) => m.clone(),
            None => {
                let m = SymmetricMeasurement::gell_mann(d, s, t, RChoice::Max)?;
                cache.insert((d, s, t), m.clone());
                m
            }
        };
        let terms = rng.random_range(1..=3usize);
        let raw: Vec<f64> = (0..terms).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut parts = Vec::with_capacity(terms);
        for w in raw {
            parts.push((w / total, random_kstretchable_pure(&mut rng, d, n, k)?.amplitudes));
        }
        let f = if rng.random_bool(0.5) {
            MonotoneFunction::Qfi
        } else {
            MonotoneFunction::wyd(rng.random_range(0.1..0.9))?
        };
        let refs: Vec<(f64, &[C64])> = parts.iter().map(|(w, v)| (*w, v.as_slice())).collect();
        let state = SpectralState::from_pure_mixture(&refs)?;
        let report = evaluate(StateInput::Spectral { state: &state, n }, &m, f, k, MSource::Enumeration)?;
        cases.push(SoundnessCase {
            d,
            n,
            k,
            s,
            t,
            terms,
            report,
        });
    }
    Ok(cases)
}

/// Dense-path LHS for an isotropic family, for cross-checking the fast path.
pub fn isotropic_lhs_dense(family: &IsotropicFamily, p: f64, m: &SymmetricMeasurement, q: Quantity) -> Result<f64> {
    criterion_lhs_dense(&family.materialize_dense(p)?, m, q)
}
