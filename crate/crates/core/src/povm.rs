//! Informationally complete `(s, t)`-POVMs built from a grouped operator basis.
//!
//! With `C^(u) = sum_v C^(uv)`:
//!
//! ```text
//! B^(uv) = C^(u) - sqrt(t)(sqrt(t)+1) C^(uv)    v < t
//! B^(ut) = (sqrt(t)+1) C^(u)
//! A^(uv) = 1/t + r B^(uv)
//! chi    = d/t^2 + r^2 (t-1)(sqrt(t)+1)^2
//! ```
//!
//! Every identity the downstream bounds rely on is certified when a
//! [`SymmetricMeasurement`] is built.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::{check_completeness, gell_mann_basis, group_basis, OperatorBasis};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eig, DensityMatrix, HermitianOperator, Matrix};

const POSITIVITY_TOL: f64 = 1e-10;
const RESOLUTION_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;
const SQUARE_SUM_TOL: f64 = 1e-10;

/// Choice of the construction parameter `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RChoice {
    Value(f64),
    #[serde(with = "max_literal")]
    Max,
}

mod max_literal {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("max")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "max" {
            Ok(())
        } else {
            Err(de::Error::custom(format!("expected \"max\", got {s:?}")))
        }
    }
}

impl FromStr for RChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("max") {
            return Ok(RChoice::Max);
        }
        s.parse::<f64>()
            .map(RChoice::Value)
            .map_err(|_| Error::InputDomain(format!("r must be a number or \"max\", got {s:?}")))
    }
}

impl fmt::Display for RChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RChoice::Value(r) => write!(f, "{r}"),
            RChoice::Max => f.write_str("max"),
        }
    }
}

/// The positivity window `[-1/(t lambda_max), 1/(t |lambda_min|)]` for `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RRange {
    pub neg: f64,
    pub pos: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl RRange {
    pub fn contains(&self, r: f64) -> bool {
        let slack = RESOLUTION_TOL * self.pos.abs().max(self.neg.abs());
        r >= self.neg - slack && r <= self.pos + slack
    }

    /// The admissible `r` of largest magnitude, which maximizes `chi`.
    pub fn chi_maximizing(&self) -> f64 {
        if self.pos >= -self.neg {
            self.pos
        } else {
            self.neg
        }
    }
}

/// `B^(uv)` for a grouped basis, indexed `[u][v]` with `v` in `0..t`.
pub fn build_b_operators(basis: &OperatorBasis) -> Result<Vec<Vec<HermitianOperator>>> {
    let g = basis.grouping().ok_or_else(|| {
        Error::InputDomain("basis must be grouped into (u, v) blocks first".into())
    })?;
    let st = (g.t as f64).sqrt();
    let mut out = Vec::with_capacity(g.s);
    for u in 0..g.s {
        let group = basis.group(u).expect("grouping covers u < s");
        let mut cu = Matrix::zeros(basis.d());
        for op in group {
            cu.add_assign_scaled(op.matrix(), c(1.0, 0.0));
        }
        let mut row = Vec::with_capacity(g.t);
        for op in group {
            let b = cu.sub(&op.matrix().scale(st * (st + 1.0)));
            row.push(HermitianOperator::from_matrix_unchecked(b));
        }
        row.push(HermitianOperator::from_matrix_unchecked(cu.scale(st + 1.0)));
        out.push(row);
    }
    Ok(out)
}

/// Positivity window from the global extreme eigenvalues of all `B^(uv)`.
pub fn r_range(b_ops: &[Vec<HermitianOperator>]) -> Result<RRange> {
    let t = b_ops.first().map(|row| row.len()).unwrap_or(0);
    let mut lambda_min = f64::INFINITY;
    let mut lambda_max = f64::NEG_INFINITY;
    for b in b_ops.iter().flatten() {
        let spec = hermitian_eig(b)?;
        lambda_min = lambda_min.min(spec.min());
        lambda_max = lambda_max.max(spec.max());
    }
    let scale = lambda_max.abs().max(lambda_min.abs());
    if t == 0 || !scale.is_finite() || scale < 1e-14 || lambda_max <= 0.0 || lambda_min >= 0.0 {
        return Err(Error::Construction(
            "B operators are degenerate (no positive and negative spectrum)".into(),
        ));
    }
    let t = t as f64;
    Ok(RRange {
        neg: -1.0 / (t * lambda_max),
        pos: 1.0 / (t * lambda_min.abs()),
        lambda_min,
        lambda_max,
    })
}

pub fn chi_from_r(d: usize, t: usize, r: f64) -> f64 {
    let tf = t as f64;
    d as f64 / (tf * tf) + r * r * (tf - 1.0) * (tf.sqrt() + 1.0).powi(2)
}

/// `r^2 t (sqrt(t)+1)^2`, the recurring prefactor of the operator bounds.
pub fn square_coefficient(t: usize, r: f64) -> f64 {
    let tf = t as f64;
    r * r * tf * (tf.sqrt() + 1.0).powi(2)
}

/// A full `(s, t)`-POVM with its parameters.
#[derive(Clone, Debug)]
pub struct SymmetricMeasurement {
    d: usize,
    s: usize,
    t: usize,
    r: f64,
    chi: f64,
    effects: Vec<Vec<HermitianOperator>>,
}

/// Builds `A^(uv) = 1/t + r B^(uv)` from a basis (grouped here if needed).
pub fn build_stpovm(basis: &OperatorBasis, s: usize, t: usize, r: RChoice) -> Result<SymmetricMeasurement> {
    check_completeness(basis.d(), s, t)?;
    let grouped = match basis.grouping() {
        Some(g) if g.s == s && g.t == t => basis.clone(),
        _ => group_basis(basis, s, t)?,
    };
    let b_ops = build_b_operators(&grouped)?;
    let range = r_range(&b_ops)?;
    let r = match r {
        RChoice::Max => range.chi_maximizing(),
        RChoice::Value(r) => {
            if !range.contains(r) {
                return Err(Error::Positivity {
                    r,
                    lo: range.neg,
                    hi: range.pos,
                });
            }
            r
        }
    };
    let d = basis.d();
    let effects = effects_from_b(&b_ops, d, t, r);
    let m = SymmetricMeasurement {
        d,
        s,
        t,
        r,
        chi: chi_from_r(d, t, r),
        effects,
    };
    let cert = m.certify();
    if !cert.passed() {
        let failed: Vec<String> = cert
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} (residual {:.3e})", c.name, c.residual))
            .collect();
        return Err(Error::Construction(format!(
            "certification failed: {}",
            failed.join("; ")
        )));
    }
    Ok(m)
}

/// `A^(uv) = 1/t + r B^(uv)` without any checks.
pub fn effects_from_b(b_ops: &[Vec<HermitianOperator>], d: usize, t: usize, r: f64) -> Vec<Vec<HermitianOperator>> {
    let base = Matrix::identity(d).scale(1.0 / t as f64);
    b_ops
        .iter()
        .map(|row| {
            row.iter()
                .map(|b| {
                    let mut a = base.clone();
                    a.add_assign_scaled(b.matrix(), c(r, 0.0));
                    HermitianOperator::from_matrix_unchecked(a)
                })
                .collect()
        })
        .collect()
}

impl SymmetricMeasurement {
    /// Convenience: Gell-Mann basis with lexicographic grouping.
    pub fn gell_mann(d: usize, s: usize, t: usize, r: RChoice) -> Result<Self> {
        build_stpovm(&gell_mann_basis(d)?, s, t, r)
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn s(&self) -> usize {
        self.s
    }
    pub fn t(&self) -> usize {
        self.t
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Indexed `[u][v]`, zero-based.
    pub fn effects(&self) -> &[Vec<HermitianOperator>] {
        &self.effects
    }

    /// All `s * t` effects in `(u, v)` lexicographic order.
    pub fn iter_effects(&self) -> impl Iterator<Item = &HermitianOperator> {
        self.effects.iter().flatten()
    }

    pub fn square_coefficient(&self) -> f64 {
        square_coefficient(self.t, self.r)
    }

    /// Every construction identity with its residual.
    pub fn certify(&self) -> Certification {
        let (d, s, t) = (self.d as f64, self.s, self.t as f64);
        let chi = self.chi;
        let mut checks = Vec::new();

        checks.push(CertCheck::new(
            "informational completeness s(t-1) = d^2-1",
            if self.s * (self.t - 1) == self.d * self.d - 1 { 0.0 } else { 1.0 },
            0.0,
        ));

        let mut min_eig = f64::INFINITY;
        for a in self.iter_effects() {
            match hermitian_eig(a) {
                Ok(spec) => min_eig = min_eig.min(spec.min()),
                Err(_) => min_eig = f64::NEG_INFINITY,
            }
        }
        checks.push(CertCheck::new(
            "effects positive semidefinite",
            (-min_eig).max(0.0),
            POSITIVITY_TOL,
        ));

        let id = Matrix::identity(self.d);
        let mut resolution = 0.0f64;
        for row in &self.effects {
            let mut sum = Matrix::zeros(self.d);
            for a in row {
                sum.add_assign_scaled(a.matrix(), c(1.0, 0.0));
            }
            resolution = resolution.max(sum.max_abs_diff(&id));
        }
        checks.push(CertCheck::new("sum_v A^(uv) = 1", resolution, RESOLUTION_TOL));

        let mut tr_dev = 0.0f64;
        let mut purity_dev = 0.0f64;
        let mut same_dev = 0.0f64;
        let mut cross_dev = 0.0f64;
        let same_target = (d - t * chi) / (t * (t - 1.0));
        let cross_target = d / (t * t);
        for (u, row) in self.effects.iter().enumerate() {
            for (v, a) in row.iter().enumerate() {
                tr_dev = tr_dev.max((a.trace() - d / t).abs());
                for (u2, row2) in self.effects.iter().enumerate().skip(u) {
                    for (v2, a2) in row2.iter().enumerate() {
                        if u2 == u && v2 < v {
                            continue;
                        }
                        let g = a.trace_product(a2);
                        if u2 == u && v2 == v {
                            purity_dev = purity_dev.max((g - chi).abs());
                        } else if u2 == u {
                            same_dev = same_dev.max((g - same_target).abs());
                        } else {
                            cross_dev = cross_dev.max((g - cross_target).abs());
                        }
                    }
                }
            }
        }
        checks.push(CertCheck::new("Tr A^(uv) = d/t", tr_dev, SYMMETRY_TOL));
        checks.push(CertCheck::new("Tr (A^(uv))^2 = chi", purity_dev, SYMMETRY_TOL));
        checks.push(CertCheck::new(
            "Tr A^(uv)A^(uv') = (d-t chi)/(t(t-1))",
            same_dev,
            SYMMETRY_TOL,
        ));
        checks.push(CertCheck::new("Tr A^(uv)A^(u'v') = d/t^2", cross_dev, SYMMETRY_TOL));

        let lower = d / (t * t);
        let upper = (d * d / (t * t)).min(d / t);
        let chi_violation = if chi <= lower {
            // strict inequality; report at least 1 so any tolerance fails
            (lower - chi).max(1.0)
        } else {
            (chi - upper).max(0.0)
        };
        checks.push(CertCheck::new("d/t^2 < chi <= min(d^2/t^2, d/t)", chi_violation, RESOLUTION_TOL));

        checks.push(CertCheck::new(
            "sum (A^(uv))^2 = [s/t + r^2 t(sqrt t+1)^2 (d-1/d)] 1",
            square_sum_residual(&self.effects, self.d, s, self.t, self.r),
            SQUARE_SUM_TOL,
        ));
        Certification { checks }
    }

    pub fn to_document(&self) -> MeasurementDocument {
        MeasurementDocument {
            d: self.d,
            s: self.s,
            t: self.t,
            r: self.r,
            chi: self.chi,
            effects: self
                .effects
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|a| a.matrix().data().iter().map(|z| [z.re, z.im]).collect())
                        .collect()
                })
                .collect(),
        }
    }

    /// Rebuilds and re-certifies a measurement from its document form.
    pub fn from_document(doc: &MeasurementDocument) -> Result<Self> {
        if doc.effects.len() != doc.s || doc.effects.iter().any(|row| row.len() != doc.t) {
            return Err(Error::InputDomain("effects array must be s x t".into()));
        }
        let mut effects = Vec::with_capacity(doc.s);
        for row in &doc.effects {
            let mut ops = Vec::with_capacity(doc.t);
            for entries in row {
                let m = Matrix::from_row_major(entries.iter().map(|[re, im]| c(*re, *im)).collect())?;
                if m.dim() != doc.d {
                    return Err(Error::DimensionMismatch {
                        expected: doc.d,
                        got: m.dim(),
                    });
                }
                ops.push(HermitianOperator::new(m)?);
            }
            effects.push(ops);
        }
        let m = Self {
            d: doc.d,
            s: doc.s,
            t: doc.t,
            r: doc.r,
            chi: doc.chi,
            effects,
        };
        let expected_chi = chi_from_r(doc.d, doc.t, doc.r);
        if (expected_chi - doc.chi).abs() > SYMMETRY_TOL {
            return Err(Error::Construction(format!(
                "chi = {} inconsistent with r (expected {expected_chi})",
                doc.chi
            )));
        }
        if !m.certify().passed() {
            return Err(Error::Construction("document fails certification".into()));
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(s)?)
    }
}

/// Serialized form: row-major complex entries as `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDocument {
    pub d: usize,
    pub s: usize,
    pub t: usize,
    pub r: f64,
    pub chi: f64,
    pub effects: Vec<Vec<Vec<[f64; 2]>>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertCheck {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CertCheck {
    fn new(name: &'static str, residual: f64, tolerance: f64) -> Self {
        Self {
            name,
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Certification {
    pub checks: Vec<CertCheck>,
}

impl Certification {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `sum_{u,v} (A^(uv))^2` minus its closed-form scalar multiple of the identity.
pub fn square_sum_residual(effects: &[Vec<HermitianOperator>], d: usize, s: usize, t: usize, r: f64) -> f64 {
    let mut sum = Matrix::zeros(d);
    for a in effects.iter().flatten() {
        sum.add_assign_scaled(&a.matrix().mul(a.matrix()), c(1.0, 0.0));
    }
    let df = d as f64;
    let scalar = s as f64 / t as f64 + square_coefficient(t, r) * (df - 1.0 / df);
    sum.max_abs_diff(&Matrix::identity(d).scale(scalar))
}

pub fn verify_square_sum(m: &SymmetricMeasurement) -> f64 {
    square_sum_residual(&m.effects, m.d, m.s, m.t, m.r)
}

/// `sum_{u,v} [Tr(A^(uv) rho)]^2`, summed directly.
pub fn probability_square_sum(m: &SymmetricMeasurement, rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != m.d {
        return Err(Error::DimensionMismatch {
            expected: m.d,
            got: rho.dim(),
        });
    }
    Ok(m.iter_effects()
        .map(|a| rho.operator().trace_product(a).powi(2))
        .sum())
}

/// Closed form of the probability square sum as a function of the purity.
pub fn probability_square_sum_formula(m: &SymmetricMeasurement, purity: f64) -> f64 {
    let (d, t) = (m.d as f64, m.t as f64);
    let t2chi = t * t * m.chi;
    (d * (t2chi - d) * purity + d * d * d - t2chi) / (d * t * (t - 1.0))
}

/// `(d-1)(d^2 + t^2 chi)/(d t (t-1))`: the pure-state value (and upper bound).
pub fn pure_probability_square_sum(m: &SymmetricMeasurement) -> f64 {
    let (d, t) = (m.d as f64, m.t as f64);
    (d - 1.0) * (d * d + t * t * m.chi) / (d * t * (t - 1.0))
}
