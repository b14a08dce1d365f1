//! Run configuration: the flag set, its JSON form, and value parsing.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use nonstretch_core::{MSource, MonotoneFunction, Quantity, RChoice};
use serde::{Deserialize, Serialize};

/// Prefix of the reproducibility line at the top of every artifact.
pub const CONFIG_PREFIX: &str = "# config: ";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ghz,
    Antisym,
    File,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Every flag of every subcommand. Unset fields are omitted from the JSON
/// echo, so the echo is exactly what was asked for.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Filled in from the subcommand; a config file naming another command is rejected.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,

    /// Local dimension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Number of measurements.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    /// Outcomes per measurement.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    /// Construction parameter, a number or "max".
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<RChoice>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    /// Pure state JSON for `--family file`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_file: Option<PathBuf>,
    /// Party counts, comma separated.
    #[arg(long = "N", value_delimiter = ',')]
    #[serde(rename = "N", skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<usize>,
    /// Mixing weights, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub p: Vec<f64>,
    /// Evenly spaced weights as `start:stop:count`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_range: Option<String>,
    /// Stretchability: an integer, or `c-N` for a value tied to each N.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<String>,
    /// `qfi`, `wyd`, `wyd:<omega>`, `variance` or `all`; comma separated.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    /// `enumeration` or `closed_form`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_source: Option<MSource>,
    /// Evaluate on the dense density matrix instead of reduced states.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub dense: bool,
    /// Print Young diagrams of the enumerated partitions.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub diagrams: bool,
    /// Number of random states in a sweep.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Seed for random sweeps (default 0).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Where to write the measurement JSON.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub povm_out: Option<PathBuf>,

    /// Output file (default stdout).
    #[arg(long, short)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Reads a config file. Accepts either bare JSON or a previous output
/// artifact whose first line is the config echo.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let json = match text.lines().next() {
        Some(first) if first.starts_with(CONFIG_PREFIX) => &first[CONFIG_PREFIX.len()..],
        _ => text.trim(),
    };
    serde_json::from_str(json).with_context(|| format!("parsing config {}", path.display()))
}

impl RunConfig {
    /// Fields set in `file` replace those given as flags, except that an
    /// `--output` flag wins so a replayed artifact does not overwrite itself.
    pub fn overlay(self, file: RunConfig) -> Result<RunConfig> {
        let output = self.output.clone();
        let mut base = serde_json::to_value(&self)?;
        let top = serde_json::to_value(&file)?;
        if let (Some(b), serde_json::Value::Object(t)) = (base.as_object_mut(), top) {
            b.extend(t);
        }
        let mut merged: RunConfig = serde_json::from_value(base)?;
        if output.is_some() {
            merged.output = output;
        }
        Ok(merged)
    }

    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn m_source(&self) -> MSource {
        self.m_source.unwrap_or_default()
    }

    pub fn require_d(&self) -> Result<usize> {
        self.d.ok_or_else(|| anyhow!("--d is required"))
    }

    pub fn require_n(&self) -> Result<Vec<usize>> {
        if self.n.is_empty() {
            bail!("--N is required");
        }
        let mut ns = self.n.clone();
        ns.sort_unstable();
        ns.dedup();
        Ok(ns)
    }

    pub fn k_spec(&self) -> Result<KSpec> {
        self.k
            .as_deref()
            .ok_or_else(|| anyhow!("--k is required"))
            .and_then(KSpec::parse)
    }

    /// Weights from `--p` and `--p-range`, ascending and deduplicated.
    pub fn p_values(&self) -> Result<Vec<f64>> {
        let mut ps = self.p.clone();
        if let Some(range) = &self.p_range {
            ps.extend(parse_p_range(range)?);
        }
        if ps.is_empty() {
            bail!("give --p or --p-range");
        }
        if let Some(bad) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            bail!("p = {bad} outside [0, 1]");
        }
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        Ok(ps)
    }

    pub fn quantities(&self) -> Result<Vec<Quantity>> {
        parse_quantities(self.f.as_deref().unwrap_or("qfi"))
    }
}

/// `k` either fixed or as `c - N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KSpec {
    Fixed(i64),
    OffsetFromN(i64),
}

impl KSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(c) = s.strip_suffix("-N") {
            let c = c.trim().parse().map_err(|_| anyhow!("bad k {s:?}, expected an integer or c-N"))?;
            return Ok(KSpec::OffsetFromN(c));
        }
        s.parse()
            .map(KSpec::Fixed)
            .map_err(|_| anyhow!("bad k {s:?}, expected an integer or c-N"))
    }

    pub fn at(self, n: usize) -> i64 {
        match self {
            KSpec::Fixed(k) => k,
            KSpec::OffsetFromN(c) => c - n as i64,
        }
    }
}

fn parse_p_range(s: &str) -> Result<Vec<f64>> {
    let fields: Vec<&str> = s.split(':').collect();
    let [start, stop, count] = fields.as_slice() else {
        bail!("bad p-range {s:?}, expected start:stop:count");
    };
    let start: f64 = start.trim().parse().context("p-range start")?;
    let stop: f64 = stop.trim().parse().context("p-range stop")?;
    let count: usize = count.trim().parse().context("p-range count")?;
    Ok(match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    })
}

pub fn parse_quantities(s: &str) -> Result<Vec<Quantity>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim) {
        match item {
            "variance" => out.push(Quantity::Variance),
            "all" => out.extend([
                Quantity::Skew(MonotoneFunction::Qfi),
                Quantity::Skew(MonotoneFunction::wyd(0.5)?),
                Quantity::Variance,
            ]),
            other => out.push(Quantity::Skew(other.parse()?)),
        }
    }
    let mut unique = Vec::with_capacity(out.len());
    for q in out {
        if !unique.contains(&q) {
            unique.push(q);
        }
    }
    Ok(unique)
}
