use orlicz_lab::carleson::{build_profile, recommended_sampling, CarlesonProfile, ProfileRequest};
use orlicz_lab::concave::{build_sequence, build_v, orlicz_from_v, ratio_delta, StopReason};
use orlicz_lab::criteria::{run_battery, write_evidence_csv, BatteryConfig, ConsistencyCheck, ConsistencyRow};
use orlicz_lab::orlicz::{certify as certify_class, check_implications, GridSpec, GrowthCondition, ImplicationStatus, OrliczFunction};
use orlicz_lab::symbol::SymbolMap;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::AnalysisConfig;
use crate::output::{ConsistencySummary, Outputs};
use crate::{code, Failure};

pub struct Status {
    pub exit_code: i32,
    pub consistency: Option<ConsistencySummary>,
    pub message: Option<String>,
}

impl Status {
    fn ok() -> Self {
        Self {
            exit_code: 0,
            consistency: None,
            message: None,
        }
    }
}

fn csv_error(e: csv::Error) -> Failure {
    Failure::from(orlicz_lab::Error::from(e))
}

fn done(mut w: csv::Writer<std::fs::File>) -> Result<(), Failure> {
    w.flush().map_err(|e| Failure {
        code: code::IO,
        message: e.to_string(),
    })
}

fn symbol(cfg: &AnalysisConfig) -> Result<SymbolMap, Failure> {
    let family = cfg
        .symbol
        .clone()
        .ok_or_else(|| Failure::config("config has no symbol".into()))?;
    if let Some((z, modulus)) = family.self_map_violation() {
        return Err(Failure {
            code: code::SELF_MAP,
            message: format!(
                "self-map violation: symbol maps {} to modulus {modulus}",
                z.describe()
            ),
        });
    }
    let map = SymbolMap::new(family)?;
    if let Some(dim) = cfg.dim {
        if dim != map.dim() {
            return Err(Failure::config(format!(
                "dim = {dim} but the symbol acts on C^{}",
                map.dim()
            )));
        }
    }
    Ok(map)
}

fn psi(cfg: &AnalysisConfig) -> Result<&OrliczFunction, Failure> {
    cfg.orlicz
        .as_ref()
        .ok_or_else(|| Failure::config("config has no orlicz function".into()))
}

fn summarize<'a>(statuses: impl Iterator<Item = &'a ImplicationStatus>) -> ConsistencySummary {
    let mut s = ConsistencySummary::default();
    for status in statuses {
        s.rows += 1;
        match status {
            ImplicationStatus::Consistent => s.consistent += 1,
            ImplicationStatus::Inconsistent => s.inconsistent += 1,
            ImplicationStatus::Undetermined => s.undetermined += 1,
        }
    }
    s
}

fn snake<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

pub fn certify(cfg: &AnalysisConfig, out: &mut Outputs) -> Result<Status, Failure> {
    let psi = psi(cfg)?;
    let grid = GridSpec::default();
    let certs = out.timed("certify", || {
        GrowthCondition::ALL
            .par_iter()
            .map(|&c| certify_class(psi, c, &grid))
            .collect::<orlicz_lab::Result<Vec<_>>>()
    })?;
    let rows = check_implications(&certs);
    out.json("certificates.json", "certificates", &certs)?;
    out.csv("certificates.csv", "certificates", |file| {
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["condition", "verdict", "witness", "dropped_points"]).map_err(csv_error)?;
        for c in &certs {
            let witness = c.witness.as_ref().map_or(String::new(), |x| {
                serde_json::to_string(x).unwrap_or_default()
            });
            w.write_record([snake(&c.condition), c.verdict.to_string(), witness, c.dropped_points.to_string()])
                .map_err(csv_error)?;
        }
        done(w)
    })?;
    out.csv("implications.csv", "implications", |file| {
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["implication", "status"]).map_err(csv_error)?;
        for r in &rows {
            w.write_record([snake(&r.implication), snake(&r.status)]).map_err(csv_error)?;
        }
        done(w)
    })?;
    let summary = summarize(rows.iter().map(|r| &r.status));
    Ok(Status {
        exit_code: if summary.inconsistent > 0 { 2 } else { 0 },
        consistency: Some(summary),
        message: None,
    })
}

fn profile_request(cfg: &AnalysisConfig, map: &SymbolMap) -> ProfileRequest {
    let mut req = ProfileRequest::new(cfg.space, cfg.samples.n_per_cell, cfg.seed);
    if let Some(h) = &cfg.grids.h_grid {
        req.h_grid = h.clone();
    }
    if let Some(r) = &cfg.grids.r_grid {
        req.r_grid = r.clone();
    }
    req.sampling = cfg.samples.sampling.unwrap_or_else(|| recommended_sampling(map));
    req
}

fn write_profile(out: &mut Outputs, profile: &CarlesonProfile) -> Result<(), Failure> {
    out.json("profile.json", "profile", profile)?;
    out.csv("profile.csv", "profile", |file| Ok(profile.write_csv(file)?))
}

pub fn profile(cfg: &AnalysisConfig, out: &mut Outputs) -> Result<Status, Failure> {
    let map = symbol(cfg)?;
    let req = profile_request(cfg, &map);
    let profile = out.timed("profile", || build_profile(&map, &req))?;
    write_profile(out, &profile)?;
    let mut status = Status::ok();
    if profile.flagged {
        status.message = Some(format!(
            "warning: {} boundary points did not converge",
            profile.unconverged
        ));
    }
    Ok(status)
}

fn check_label(check: &ConsistencyCheck) -> (String, String) {
    let value = serde_json::to_value(check).unwrap_or_default();
    let field = |k: &str| value.get(k).and_then(|v| v.as_str()).unwrap_or_default().to_string();
    (field("check"), field("implication"))
}

fn write_consistency(file: std::fs::File, rows: &[ConsistencyRow]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["check", "implication", "status", "detail"]).map_err(csv_error)?;
    for r in rows {
        let (check, implication) = check_label(&r.check);
        w.write_record([check, implication, snake(&r.status), r.detail.clone()])
            .map_err(csv_error)?;
    }
    done(w)
}

pub fn analyze(cfg: &AnalysisConfig, out: &mut Outputs) -> Result<Status, Failure> {
    let map = symbol(cfg)?;
    let psi = psi(cfg)?;
    let req = profile_request(cfg, &map);
    let profile = out.timed("profile", || build_profile(&map, &req))?;
    let mut bc = BatteryConfig::new(cfg.seed);
    bc.ratio.samples_per_r = cfg.samples.ratio_per_r;
    bc.sup_samples = cfg.samples.sup;
    if let Some(r) = &cfg.grids.ratio_r_grid {
        bc.ratio.r_grid = r.clone();
    }
    if let Some(a) = &cfg.grids.a_grid {
        bc.a_grid = a.clone();
    }
    if let Some(c) = &cfg.grids.c_grid {
        bc.c_grid = c.clone();
    }
    let battery = out.timed("battery", || run_battery(&map, psi, &profile, &bc))?;
    write_profile(out, &profile)?;
    out.json("battery.json", "battery", &battery)?;
    for r in &battery.reports {
        out.json(&format!("criteria/{}.json", r.criterion.name()), "criterion", r)?;
    }
    out.csv("criteria.csv", "criteria", |file| {
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["criterion", "verdict", "margin", "rule", "hypotheses"]).map_err(csv_error)?;
        for r in &battery.reports {
            let rule = serde_json::to_value(r.rule)
                .ok()
                .and_then(|v| v.get("rule").and_then(|s| s.as_str().map(String::from)))
                .unwrap_or_default();
            w.write_record([
                r.criterion.name().to_string(),
                r.verdict.to_string(),
                r.margin.to_string(),
                rule,
                snake(&r.hypotheses),
            ])
            .map_err(csv_error)?;
        }
        done(w)
    })?;
    out.csv("evidence.csv", "evidence", |file| Ok(write_evidence_csv(&battery.reports, file)?))?;
    out.csv("consistency.csv", "consistency", |file| write_consistency(file, &battery.consistency))?;
    let summary = summarize(battery.consistency.iter().map(|r| &r.status));
    Ok(Status {
        exit_code: battery.exit_code(),
        consistency: Some(summary),
        message: None,
    })
}

#[derive(Serialize)]
struct LemmaArtifact<'a> {
    f: String,
    g: String,
    sequence: &'a orlicz_lab::concave::BreakpointSequence,
    v: Option<orlicz_lab::concave::ConcaveMajorant>,
    ratio: Option<orlicz_lab::concave::RatioDelta>,
    psi: Option<OrliczFunction>,
}

pub fn lemma32(cfg: &AnalysisConfig, out: &mut Outputs) -> Result<Status, Failure> {
    let lemma = cfg
        .lemma
        .as_ref()
        .ok_or_else(|| Failure::config("config has no lemma section".into()))?;
    let seq = out.timed("sequence", || build_sequence(&lemma.f, &lemma.g, lemma.n_max))?;
    out.csv("breakpoints.csv", "breakpoints", |file| {
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["n", "a", "b", "preimage"]).map_err(csv_error)?;
        for (n, a) in seq.a.iter().enumerate() {
            let opt = |x: f64| if x.is_nan() { String::new() } else { x.to_string() };
            w.write_record([n.to_string(), a.to_string(), opt(seq.b[n]), opt(seq.preimages[n])])
                .map_err(csv_error)?;
        }
        done(w)
    })?;
    let (v, ratio, psi) = if seq.a.len() >= 4 {
        let v = build_v(&seq)?;
        let ratio = ratio_delta(&v, &lemma.f, &lemma.g, &lemma.x_grid())?;
        let psi = orlicz_from_v(&v)?;
        out.csv("majorant.csv", "majorant", |file| {
            let mut w = csv::Writer::from_writer(file);
            w.write_record(["n", "breakpoint", "value", "slope"]).map_err(csv_error)?;
            for (n, (x, y)) in v.breakpoints().iter().zip(v.values()).enumerate() {
                let slope = v.slopes().get(n).map_or(String::new(), |s| s.to_string());
                w.write_record([n.to_string(), x.to_string(), y.to_string(), slope]).map_err(csv_error)?;
            }
            done(w)
        })?;
        (Some(v), Some(ratio), Some(psi))
    } else {
        (None, None, None)
    };
    let artifact = LemmaArtifact {
        f: lemma.f.label(),
        g: lemma.g.label(),
        sequence: &seq,
        v,
        ratio,
        psi,
    };
    out.json("lemma32.json", "lemma", &artifact)?;
    let mut status = Status::ok();
    if let StopReason::ExhaustedDomain { last_n } = seq.stop {
        status.exit_code = code::EXHAUSTED;
        status.message = Some(format!("domain exhausted after a_{last_n}"));
    }
    Ok(status)
}
