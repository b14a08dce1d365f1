//! k-stretchable block-size partitions and the bounds `I_{N+k}`, `V_{N+k}`.
//!
//! A partition of `N` parties is k-stretchable when its largest block minus
//! its number of blocks is at most `k`. Only block sizes matter, so integer
//! partitions are enumerated rather than set partitions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::check_completeness;
use crate::error::{Error, Result};
use crate::povm::{chi_from_r, square_coefficient, SymmetricMeasurement};

/// Block sizes in non-increasing order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StretchPartition {
    parts: Vec<usize>,
}

impl StretchPartition {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(Error::InputDomain("partition parts must be positive".into()));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    /// `max part - number of parts`.
    pub fn stretchability(&self) -> i64 {
        self.parts[0] as i64 - self.parts.len() as i64
    }

    pub fn sum_squares(&self) -> u64 {
        self.parts.iter().map(|&p| (p * p) as u64).sum()
    }

    /// One row of `■` per block, longest first.
    pub fn young_diagram(&self) -> String {
        self.parts
            .iter()
            .map(|&p| "■".repeat(p))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl fmt::Display for StretchPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "[{}]", s.join(","))
    }
}

#[derive(Clone, Debug)]
pub struct KStretchEnumeration {
    pub n: usize,
    /// After clamping to at most `N - 1`.
    pub k: i64,
    pub partitions: Vec<StretchPartition>,
    /// Set when `k < 1 - N`: no partition qualifies.
    pub infeasible: bool,
}

fn clamp_k(n: usize, k: i64) -> i64 {
    k.min(n as i64 - 1)
}

/// Calls `visit` for every k-stretchable partition of `n`, in descending
/// lexicographic order.
fn visit_kstretch(n: usize, k: i64, visit: &mut impl FnMut(&[usize])) {
    fn rec(rem: usize, max_part: usize, need: i64, parts: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if rem == 0 {
            if parts.len() as i64 >= need {
                visit(parts);
            }
            return;
        }
        // Even all ones cannot reach the required count.
        if ((parts.len() + rem) as i64) < need {
            return;
        }
        for a in (1..=max_part.min(rem)).rev() {
            parts.push(a);
            rec(rem - a, a, need, parts, visit);
            parts.pop();
        }
    }
    let mut parts = Vec::with_capacity(n);
    for first in (1..=n).rev() {
        let need = first as i64 - k;
        if 1 + (n - first) as i64 >= need {
            parts.push(first);
            rec(n - first, first, need, &mut parts, visit);
            parts.pop();
        }
    }
}

pub fn enumerate_kstretch(n: usize, k: i64) -> Result<KStretchEnumeration> {
    if n == 0 {
        return Err(Error::InputDomain("N must be at least 1".into()));
    }
    let k = clamp_k(n, k);
    if k < 1 - n as i64 {
        log::warn!("k = {k} < 1 - N = {}: no k-stretchable partition", 1 - n as i64);
        return Ok(KStretchEnumeration {
            n,
            k,
            partitions: Vec::new(),
            infeasible: true,
        });
    }
    let mut partitions = Vec::new();
    visit_kstretch(n, k, &mut |p| {
        partitions.push(StretchPartition { parts: p.to_vec() })
    });
    Ok(KStretchEnumeration {
        n,
        k,
        partitions,
        infeasible: false,
    })
}

/// Exact `max sum n_i^2` over k-stretchable partitions, by exhaustive search.
pub fn max_sum_squares(n: usize, k: i64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InputDomain("N must be at least 1".into()));
    }
    let k = clamp_k(n, k);
    if k < 1 - n as i64 {
        return Err(Error::InputDomain(format!(
            "k = {k} < 1 - N = {}: no k-stretchable partition",
            1 - n as i64
        )));
    }
    let mut best = 0u64;
    visit_kstretch(n, k, &mut |p| {
        best = best.max(p.iter().map(|&x| (x * x) as u64).sum());
    });
    Ok(best)
}

/// Which closed-form bracket applies to `(N, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bracket {
    /// `N + k = 1`: the bound has its own formula, no bracket.
    Single,
    Odd,
    Ten,
    Sixteen,
    Other,
}

impl fmt::Display for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bracket::Single => "n+k=1",
            Bracket::Odd => "odd",
            Bracket::Ten => "n+k=10",
            Bracket::Sixteen => "n+k=16",
            Bracket::Other => "other",
        })
    }
}

pub fn bracket(n: usize, k: i64) -> Result<Bracket> {
    let nk = n as i64 + k;
    if nk < 1 {
        return Err(Error::InputDomain(format!("N + k = {nk} < 1")));
    }
    Ok(match nk {
        1 => Bracket::Single,
        _ if nk % 2 == 1 => Bracket::Odd,
        10 if n >= 8 => Bracket::Ten,
        16 if n >= 12 => Bracket::Sixteen,
        _ => Bracket::Other,
    })
}

/// The closed-form value of `M`; `None` when `N + k = 1`.
pub fn closed_form_m(n: usize, k: i64) -> Result<Option<i64>> {
    let nk = n as i64 + k;
    let n = n as i64;
    Ok(match bracket(n as usize, k)? {
        Bracket::Single => None,
        Bracket::Odd => Some((nk * nk - 1) / 4 + n),
        Bracket::Ten => Some(34 - k),
        Bracket::Sixteen => Some(76 - k),
        // nk is even here, so both quotients are exact
        Bracket::Other => Some(nk * nk / 4 + nk / 2 + 2),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MSource {
    #[default]
    Enumeration,
    ClosedForm,
}

impl fmt::Display for MSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MSource::Enumeration => "enumeration",
            MSource::ClosedForm => "closed_form",
        })
    }
}

impl FromStr for MSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "enumeration" | "enum" => Ok(MSource::Enumeration),
            "closed_form" | "closed" => Ok(MSource::ClosedForm),
            _ => Err(Error::InputDomain(format!("unknown m source {s:?}"))),
        }
    }
}

/// Everything the bounds depend on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub k: i64,
    pub d: usize,
    pub s: usize,
    pub t: usize,
    pub r: f64,
    pub chi: f64,
}

impl BoundInputs {
    pub fn new(n: usize, k: i64, m: &SymmetricMeasurement) -> Result<Self> {
        let inputs = Self {
            n,
            k: clamp_k(n, k),
            d: m.d(),
            s: m.s(),
            t: m.t(),
            r: m.r(),
            chi: m.chi(),
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InputDomain("N must be at least 1".into()));
        }
        if (self.n as i64) + self.k < 1 {
            return Err(Error::InputDomain(format!("N + k = {} < 1", self.n as i64 + self.k)));
        }
        check_completeness(self.d, self.s, self.t)?;
        let expected = chi_from_r(self.d, self.t, self.r);
        if (expected - self.chi).abs() > 1e-10 {
            return Err(Error::InputDomain(format!(
                "chi = {} inconsistent with r = {} (expected {expected})",
                self.chi, self.r
            )));
        }
        Ok(())
    }

    fn k_clamped(&self) -> i64 {
        clamp_k(self.n, self.k)
    }

    fn m(&self, source: MSource) -> Result<f64> {
        let k = self.k_clamped();
        Ok(match source {
            MSource::Enumeration => max_sum_squares(self.n, k)? as f64,
            // The odd bracket evaluated at N + k = 1 gives N.
            MSource::ClosedForm => closed_form_m(self.n, k)?.unwrap_or(self.n as i64) as f64,
        })
    }

    /// `(d-1)(d^2 + t^2 chi)/(d t (t-1))`.
    fn pure_probability_sum(&self) -> f64 {
        let (d, t) = (self.d as f64, self.t as f64);
        (d - 1.0) * (d * d + t * t * self.chi) / (d * t * (t - 1.0))
    }
}

/// Upper bound on the summed skew information of a k-stretchable state.
pub fn bound_i(inputs: &BoundInputs, source: MSource) -> Result<f64> {
    inputs.validate()?;
    let (n, d, s, t) = (inputs.n as f64, inputs.d as f64, inputs.s as f64, inputs.t as f64);
    let kk = square_coefficient(inputs.t, inputs.r);
    if inputs.n as i64 + inputs.k_clamped() == 1 {
        let t2chi = t * t * inputs.chi;
        let p = (d * (t2chi - d) + d * d * d - t2chi) / (d * t * (t - 1.0));
        return Ok(n * (s / t + kk * (d - 1.0 / d) - p));
    }
    let m = inputs.m(source)?;
    Ok(n * (kk * (d - 1.0) - (d * d - 1.0) / (t * (t - 1.0))) + (s / t + kk * (1.0 - 1.0 / d)) * m)
}

/// Lower bound on the summed variance of a k-stretchable state.
pub fn bound_v(inputs: &BoundInputs, source: MSource) -> Result<f64> {
    inputs.validate()?;
    let (n, d, s, t) = (inputs.n as f64, inputs.d as f64, inputs.s as f64, inputs.t as f64);
    let kk = square_coefficient(inputs.t, inputs.r);
    let m = inputs.m(source)?;
    Ok(kk * (d + 1.0) * n + (s / t - kk * (1.0 + 1.0 / d) - inputs.pure_probability_sum()) * m)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundValues {
    pub max_sum_squares: u64,
    pub closed_form_m: Option<i64>,
    pub i_bound: f64,
    pub v_bound: f64,
}

pub fn bounds(inputs: &BoundInputs, source: MSource) -> Result<BoundValues> {
    let k = inputs.k_clamped();
    Ok(BoundValues {
        max_sum_squares: max_sum_squares(inputs.n, k)?,
        closed_form_m: closed_form_m(inputs.n, k)?,
        i_bound: bound_i(inputs, source)?,
        v_bound: bound_v(inputs, source)?,
    })
}

/// One `(N, k)` comparison of closed-form and enumerated `M`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub n: usize,
    pub k: i64,
    pub bracket: Bracket,
    pub closed_form: i64,
    pub enumerated: u64,
}

impl AuditRow {
    pub fn agrees(&self) -> bool {
        self.closed_form == self.enumerated as i64
    }
}

impl Serialize for Bracket {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Every `(N, k)` with `N <= max_n` where a closed-form bracket applies.
pub fn closed_form_audit(max_n: usize) -> Vec<AuditRow> {
    let mut rows = Vec::new();
    for n in 1..=max_n {
        for k in (2 - n as i64)..=(n as i64 - 1) {
            let closed = closed_form_m(n, k).expect("N + k >= 2").expect("not the N + k = 1 branch");
            rows.push(AuditRow {
                n,
                k,
                bracket: bracket(n, k).expect("N + k >= 2"),
                closed_form: closed,
                enumerated: max_sum_squares(n, k).expect("k >= 1 - N"),
            });
        }
    }
    rows
}

pub fn audit_csv(rows: &[AuditRow]) -> String {
    let mut out = String::from("N,k,n_plus_k,bracket,closed_form,enumerated,agree\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            r.k,
            r.n as i64 + r.k,
            r.bracket,
            r.closed_form,
            r.enumerated,
            r.agrees()
        ));
    }
    out
}
