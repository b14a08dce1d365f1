//! Subcommand bodies. Each returns a [`Report`]; nothing here prints.

use anyhow::{anyhow, bail, Context, Result};
use nonstretch_core::basis::group_basis;
use nonstretch_core::criteria::{format_g12, soundness_sweep, threshold_p};
use nonstretch_core::partitions::{bounds, bracket, closed_form_m, enumerate_kstretch, BoundInputs};
use nonstretch_core::povm::{build_b_operators, r_range};
use nonstretch_core::states::PureStateFile;
use nonstretch_core::{
    antisymmetric_state, evaluate, gell_mann_basis, ghz_qudit, CriterionReport, IsotropicFamily, MonotoneFunction,
    Quantity, RChoice, StateInput, SymmetricMeasurement,
};
use serde_json::json;

use crate::config::{Family, RunConfig};
use crate::report::{csv_field, Report};

fn g(x: f64) -> String {
    format_g12(x)
}

/// `(s, t)` from flags, defaulting to `(1, d^2)` when both are absent.
fn family_shape(cfg: &RunConfig, d: usize) -> Result<(usize, usize)> {
    match (cfg.s, cfg.t) {
        (Some(s), Some(t)) => Ok((s, t)),
        (None, None) => Ok((1, d * d)),
        _ => bail!("give both --s and --t, or neither for the (1, d^2) measurement"),
    }
}

fn measurement(cfg: &RunConfig, d: usize) -> Result<SymmetricMeasurement> {
    let (s, t) = family_shape(cfg, d)?;
    let r = cfg.r.unwrap_or(RChoice::Max);
    SymmetricMeasurement::gell_mann(d, s, t, r).with_context(|| format!("building the ({s},{t}) measurement at d={d}"))
}

/// The states and measurements a sweep runs over, one per `N`.
struct Sweep {
    cases: Vec<(IsotropicFamily, SymmetricMeasurement)>,
}

impl Sweep {
    fn build(cfg: &RunConfig) -> Result<Self> {
        let family = cfg.family.ok_or_else(|| anyhow!("--family is required"))?;
        let mut cases = Vec::new();
        match family {
            Family::File => {
                let path = cfg.state_file.as_ref().ok_or_else(|| anyhow!("--family file needs --state-file"))?;
                let fam = PureStateFile::load(path)?.into_family()?;
                if !cfg.n.is_empty() && cfg.n != [fam.n()] {
                    bail!("--N {:?} does not match the {} sites in the state file", cfg.n, fam.n());
                }
                if cfg.d.is_some_and(|d| d != fam.d()) {
                    bail!("--d does not match the state file's site dimension {}", fam.d());
                }
                let m = measurement(cfg, fam.d())?;
                cases.push((fam, m));
            }
            Family::Ghz => {
                let d = cfg.require_d()?;
                let m = measurement(cfg, d)?;
                for n in cfg.require_n()? {
                    cases.push((ghz_qudit(d, n)?, m.clone()));
                }
            }
            Family::Antisym => {
                for n in cfg.require_n()? {
                    if cfg.d.is_some_and(|d| d != n) {
                        bail!("the antisymmetric state needs d = N, got d = {} at N = {n}", cfg.d.unwrap_or(0));
                    }
                    cases.push((antisymmetric_state(n)?, measurement(cfg, n)?));
                }
            }
        }
        Ok(Self { cases })
    }
}

pub fn povm(cfg: &RunConfig) -> Result<Report> {
    let d = cfg.require_d()?;
    let (s, t) = family_shape(cfg, d)?;
    let grouped = group_basis(&gell_mann_basis(d)?, s, t)?;
    let range = r_range(&build_b_operators(&grouped)?)?;
    let m = SymmetricMeasurement::gell_mann(d, s, t, cfg.r.unwrap_or(RChoice::Max))?;
    let cert = m.certify();

    let mut rep = Report::new("check,residual,tolerance,passed");
    rep.note(format!("r_range: [{}, {}]", g(range.neg), g(range.pos)));
    rep.note(format!("r: {}", g(m.r())));
    rep.note(format!("chi: {}", g(m.chi())));
    for chk in &cert.checks {
        rep.push(
            format!("{},{},{},{}", csv_field(chk.name), g(chk.residual), g(chk.tolerance), chk.passed),
            chk,
        )?;
    }
    rep.extra.insert("r_range".into(), json!([range.neg, range.pos]));
    rep.extra.insert("measurement".into(), serde_json::to_value(m.to_document())?);
    if let Some(path) = &cfg.povm_out {
        std::fs::write(path, m.to_json()?).with_context(|| format!("writing {}", path.display()))?;
    }
    rep.ok = cert.passed();
    if !rep.ok {
        rep.note("certification FAILED");
    }
    Ok(rep)
}

/// Skew functions for the criteria table; `variance` alone maps to QFI since
/// each row carries both criteria.
fn skew_functions(cfg: &RunConfig) -> Result<Vec<MonotoneFunction>> {
    let mut out = Vec::new();
    for q in cfg.quantities()? {
        let f = match q {
            Quantity::Skew(f) => f,
            Quantity::Variance => MonotoneFunction::Qfi,
        };
        if !out.contains(&f) {
            out.push(f);
        }
    }
    Ok(out)
}

pub fn criteria(cfg: &RunConfig) -> Result<Report> {
    let sweep = Sweep::build(cfg)?;
    let ps = cfg.p_values()?;
    let fs = skew_functions(cfg)?;
    let kspec = cfg.k_spec()?;
    let source = cfg.m_source();

    let mut rep = Report::new(CriterionReport::CSV_HEADER);
    for (fam, m) in &sweep.cases {
        let k = kspec.at(fam.n());
        for &p in &ps {
            let dense = if cfg.dense { Some(fam.materialize_dense(p)?) } else { None };
            for &f in &fs {
                let input = match &dense {
                    Some(rho) => StateInput::Dense(rho),
                    None => StateInput::Isotropic { family: fam, p },
                };
                let mut report =
                    evaluate(input, m, f, k, source).with_context(|| format!("N={} p={p} f={f}", fam.n()))?;
                report.p = Some(p);
                rep.push(report.csv_row(), &report)?;
            }
        }
    }
    Ok(rep)
}

pub fn threshold(cfg: &RunConfig) -> Result<Report> {
    let sweep = Sweep::build(cfg)?;
    let quantities = cfg.quantities()?;
    let kspec = cfg.k_spec()?;
    let source = cfg.m_source();
    if cfg.p_range.is_some() || !cfg.p.is_empty() {
        log::warn!("threshold always scans p over [0, 1]; --p and --p-range are ignored");
    }

    let mut rep = Report::new("N,k,d,s,t,r,criterion,f,p_star");
    for (fam, m) in &sweep.cases {
        let k = kspec.at(fam.n());
        for &q in &quantities {
            let p_star = threshold_p(fam, m, q, k, source).with_context(|| format!("N={} {q}", fam.n()))?;
            let (criterion, f) = match q {
                Quantity::Skew(f) => ("skew", f.to_string()),
                Quantity::Variance => ("variance", String::new()),
            };
            let p_text = p_star.map_or_else(|| "NONE".to_string(), g);
            rep.push(
                format!(
                    "{},{k},{},{},{},{},{criterion},{f},{p_text}",
                    fam.n(),
                    m.d(),
                    m.s(),
                    m.t(),
                    g(m.r())
                ),
                json!({
                    "N": fam.n(), "k": k, "d": m.d(), "s": m.s(), "t": m.t(), "r": m.r(),
                    "criterion": criterion, "f": f, "p_star": p_star,
                }),
            )?;
        }
    }
    Ok(rep)
}

pub fn partitions(cfg: &RunConfig) -> Result<Report> {
    let kspec = cfg.k_spec()?;
    let source = cfg.m_source();
    let m = match cfg.d {
        Some(d) => Some(measurement(cfg, d)?),
        None => None,
    };

    let mut rep = Report::new("N,k,partitions,max_sum_squares,bracket,closed_form,agree,i_bound,v_bound");
    let mut diagrams = Vec::new();
    for n in cfg.require_n()? {
        let k = kspec.at(n);
        let en = enumerate_kstretch(n, k)?;
        let max_sq = (!en.infeasible).then(|| en.partitions.iter().map(|p| p.sum_squares()).max().unwrap_or(0));
        let br = bracket(n, k).ok();
        let closed = closed_form_m(n, k).ok().flatten();
        let agree = match (closed, max_sq) {
            (Some(c), Some(e)) => Some(c == e as i64),
            _ => None,
        };
        let bv = match (&m, en.infeasible) {
            (Some(m), false) => Some(bounds(&BoundInputs::new(n, k, m)?, source)?),
            _ => None,
        };
        let opt = |x: Option<String>| x.unwrap_or_default();
        rep.push(
            [
                n.to_string(),
                k.to_string(),
                en.partitions.len().to_string(),
                opt(max_sq.map(|x| x.to_string())),
                opt(br.map(|b| b.to_string())),
                opt(closed.map(|x| x.to_string())),
                opt(agree.map(|x| x.to_string())),
                opt(bv.as_ref().map(|b| g(b.i_bound))),
                opt(bv.as_ref().map(|b| g(b.v_bound))),
            ]
            .join(","),
            json!({
                "N": n, "k": k, "partitions": en.partitions.len(), "max_sum_squares": max_sq,
                "bracket": br.map(|b| b.to_string()), "closed_form": closed, "agree": agree,
                "i_bound": bv.as_ref().map(|b| b.i_bound), "v_bound": bv.as_ref().map(|b| b.v_bound),
            }),
        )?;
        if agree == Some(false) {
            rep.note(format!("N={n} k={k}: closed form {} disagrees with enumeration {}", closed.unwrap_or(0), max_sq.unwrap_or(0)));
        }
        if en.infeasible {
            rep.note(format!("N={n} k={k}: no k-stretchable partition"));
        }
        if cfg.diagrams {
            for p in &en.partitions {
                rep.note(format!("N={n} k={k} partition {p}"));
                for line in p.young_diagram().lines() {
                    rep.note(format!("  {line}"));
                }
                diagrams.push(json!({"N": n, "k": k, "parts": p.parts(), "diagram": p.young_diagram()}));
            }
        }
    }
    if cfg.diagrams {
        rep.extra.insert("diagrams".into(), serde_json::Value::Array(diagrams));
    }
    Ok(rep)
}

pub fn sweep(cfg: &RunConfig) -> Result<Report> {
    let seed = cfg.seed.unwrap_or(0);
    let trials = cfg.trials.unwrap_or(200);
    let cases = soundness_sweep(seed, trials)?;
    let mut rep = Report::new(CriterionReport::CSV_HEADER);
    let mut false_hits = 0;
    for case in &cases {
        if case.report.violated_skew || case.report.violated_var {
            false_hits += 1;
        }
        rep.push(case.report.csv_row(), case)?;
    }
    rep.note(format!("seed: {seed}"));
    rep.note(format!("false violations: {false_hits} of {}", cases.len()));
    rep.ok = false_hits == 0;
    Ok(rep)
}
