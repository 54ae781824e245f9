//! Boundedness and compactness criteria for composition operators, evaluated
//! on Carleson profiles, symbols and Orlicz functions.
//!
//! Every report carries the decision rule and the evidence rows it was
//! decided from; [`CriterionReport::recompute`] re-derives the verdict from
//! those two alone.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::carleson::{stratified_window_masses, CarlesonProfile, StrataSpec};
use crate::geometry::{koranyi_aperture_bound, n_alpha, BallPoint, Sampler, Space};
use crate::orlicz::{
    certify, check_implications, ClassCertificate, GridSpec, GrowthCondition, Implication,
    ImplicationStatus, OrliczFunction,
};
use crate::rng::tags;
use crate::stats::{fit_line, mean, LineFit};
use crate::symbol::SymbolMap;
use crate::{Error, Result, Verdict};

const LOG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionId {
    PsiCarlesonBigOh,
    PsiCarlesonLittleOh,
    BoundaryRatioAlpha,
    BoundaryRatioSimplified,
    ClassicalAngularRatio,
    HInftyCompact,
    LensLowerBoundExponent,
    Delta2SharpSufficiency,
    KoranyiApertureVerdict,
}

impl CriterionId {
    pub const ALL: [CriterionId; 9] = [
        Self::PsiCarlesonBigOh,
        Self::PsiCarlesonLittleOh,
        Self::BoundaryRatioAlpha,
        Self::BoundaryRatioSimplified,
        Self::ClassicalAngularRatio,
        Self::HInftyCompact,
        Self::LensLowerBoundExponent,
        Self::Delta2SharpSufficiency,
        Self::KoranyiApertureVerdict,
    ];

    /// Criteria whose Pass is a claim that `C_φ` is compact.
    pub fn is_compactness(self) -> bool {
        matches!(
            self,
            Self::PsiCarlesonLittleOh
                | Self::BoundaryRatioAlpha
                | Self::BoundaryRatioSimplified
                | Self::ClassicalAngularRatio
                | Self::HInftyCompact
                | Self::KoranyiApertureVerdict
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::PsiCarlesonBigOh => "psi_carleson_big_oh",
            Self::PsiCarlesonLittleOh => "psi_carleson_little_oh",
            Self::BoundaryRatioAlpha => "boundary_ratio_alpha",
            Self::BoundaryRatioSimplified => "boundary_ratio_simplified",
            Self::ClassicalAngularRatio => "classical_angular_ratio",
            Self::HInftyCompact => "h_infty_compact",
            Self::LensLowerBoundExponent => "lens_lower_bound_exponent",
            Self::Delta2SharpSufficiency => "delta2_sharp_sufficiency",
            Self::KoranyiApertureVerdict => "koranyi_aperture_verdict",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRow {
    /// Series label: `A`, `C`, an exponent, or a slot index; 0 for single-series rules.
    pub group: f64,
    pub parameter: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub std_error: Option<f64>,
    /// `lhs` is zero by a closed-form argument rather than by sampling.
    #[serde(default)]
    pub exact: bool,
}

impl EvidenceRow {
    fn new(group: f64, parameter: f64, lhs: f64, rhs: f64) -> Self {
        Self {
            group,
            parameter,
            lhs,
            rhs,
            std_error: None,
            exact: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum DecisionRule {
    /// Rows `(A; h, profile(h), ln ψ(Aψ⁻¹(h^{-E})))`. The log product is fitted
    /// against `ln(1/h)` over the `tail` smallest reliable cells.
    CarlesonProduct {
        vanishing: bool,
        max_rel_error: f64,
        tail: usize,
        min_points: usize,
        flat: f64,
        max_slope_error: f64,
    },
    /// Rows `(group; 1 - r, R(r), d(r))` with `d` the natural variable of the
    /// denominator; `ln R` is fitted against `ln d` over the `tail` rows nearest the sphere.
    RatioLimit {
        group: f64,
        theta: f64,
        tail: usize,
        gamma_pass: f64,
        gamma_fail: f64,
    },
    /// Rows `(0; 0, sampled sup, bound)` and optionally `(0; 1, closed form, bound)`.
    SupNorm { bound: f64 },
    /// Rows `(0; h, mass, h^target)`; `ln mass` fitted against `ln h`.
    SlopeBound {
        target: f64,
        slack: f64,
        max_rel_error: f64,
        fit_points: usize,
        min_points: usize,
    },
    /// Rows `(C; y, lhs, rhs)` in the log domain, `y` increasing within a group.
    SuffixInequality { min_tail_fraction: f64 },
    /// Inputs of the aperture prediction encoded as rows, see [`koranyi_aperture_verdict`].
    AperturePrediction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisScope {
    /// The theorem behind the criterion needs no class membership.
    NotRequired,
    Within,
    /// Some required class was certified to fail; the verdict is not a compactness claim.
    Outside,
    Unverified,
}

impl HypothesisScope {
    pub fn label(self) -> &'static str {
        match self {
            Self::NotRequired => "no class hypothesis",
            Self::Within => "within theorem hypotheses",
            Self::Outside => "outside theorem hypotheses",
            Self::Unverified => "hypotheses not certified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion: CriterionId,
    pub inputs: serde_json::Value,
    pub verdict: Verdict,
    pub margin: f64,
    pub rule: DecisionRule,
    pub evidence: Vec<EvidenceRow>,
    /// Named by-products of the decision (fitted slopes, plateaus, witnesses).
    pub scalars: BTreeMap<String, f64>,
    pub hypotheses: HypothesisScope,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub verdict: Verdict,
    pub margin: f64,
    pub scalars: BTreeMap<String, f64>,
}

impl CriterionReport {
    fn decide(
        criterion: CriterionId,
        inputs: serde_json::Value,
        rule: DecisionRule,
        evidence: Vec<EvidenceRow>,
        notes: Vec<String>,
    ) -> Self {
        let out = evaluate_rule(&rule, &evidence);
        Self {
            criterion,
            inputs,
            verdict: out.verdict,
            margin: out.margin,
            rule,
            evidence,
            scalars: out.scalars,
            hypotheses: HypothesisScope::NotRequired,
            notes,
        }
    }

    /// Verdict and margin re-derived from the rule and the evidence rows.
    pub fn recompute(&self) -> Outcome {
        evaluate_rule(&self.rule, &self.evidence)
    }

    pub fn with_hypotheses(mut self, scope: HypothesisScope) -> Self {
        self.hypotheses = scope;
        self
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars.get(name).copied()
    }
}

/// Applies a decision rule to evidence rows.
pub fn evaluate_rule(rule: &DecisionRule, rows: &[EvidenceRow]) -> Outcome {
    match *rule {
        DecisionRule::CarlesonProduct {
            vanishing,
            max_rel_error,
            tail,
            min_points,
            flat,
            max_slope_error,
        } => carleson_product(rows, vanishing, max_rel_error, tail, min_points, flat, max_slope_error),
        DecisionRule::RatioLimit {
            group,
            theta,
            tail,
            gamma_pass,
            gamma_fail,
        } => ratio_limit(rows, group, theta, tail, gamma_pass, gamma_fail),
        DecisionRule::SupNorm { bound } => sup_norm_rule(rows, bound),
        DecisionRule::SlopeBound {
            target,
            slack,
            max_rel_error,
            fit_points,
            min_points,
        } => slope_bound(rows, target, slack, max_rel_error, fit_points, min_points),
        DecisionRule::SuffixInequality { min_tail_fraction } => suffix_inequality(rows, min_tail_fraction),
        DecisionRule::AperturePrediction => aperture_prediction(rows),
    }
}

fn outcome(verdict: Verdict, margin: f64, scalars: &[(&str, f64)]) -> Outcome {
    Outcome {
        verdict,
        margin,
        scalars: scalars
            .iter()
            .filter(|(_, v)| v.is_finite())
            .map(|(k, v)| (k.to_string(), *v))
            .collect(),
    }
}

fn groups(rows: &[EvidenceRow]) -> Vec<f64> {
    let mut g: Vec<f64> = rows.iter().map(|r| r.group).collect();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Trend {
    Small,
    Large,
    Unknown,
}

fn carleson_product(
    rows: &[EvidenceRow],
    vanishing: bool,
    max_rel_error: f64,
    tail: usize,
    min_points: usize,
    flat: f64,
    max_slope_error: f64,
) -> Outcome {
    let mut trends = Vec::new();
    let mut best_bounded: Option<(f64, f64)> = None;
    let mut extreme_slope = if vanishing { f64::NEG_INFINITY } else { f64::INFINITY };
    for a in groups(rows) {
        let mut series: Vec<&EvidenceRow> = rows.iter().filter(|r| r.group == a).collect();
        series.sort_by(|x, y| y.parameter.total_cmp(&x.parameter));
        let k = series.len();
        let zero_tail = k >= min_points && series[k - min_points..].iter().all(|r| r.exact && r.lhs == 0.0);
        if zero_tail {
            trends.push(Trend::Small);
            if best_bounded.is_none() {
                best_bounded = Some((a, f64::NEG_INFINITY));
            }
            continue;
        }
        let reliable: Vec<&&EvidenceRow> = series
            .iter()
            .filter(|r| r.lhs > 0.0 && r.std_error.is_some_and(|s| s <= max_rel_error * r.lhs))
            .collect();
        let used = &reliable[reliable.len().saturating_sub(tail)..];
        if used.len() < min_points {
            trends.push(Trend::Unknown);
            continue;
        }
        let x: Vec<f64> = used.iter().map(|r| -r.parameter.ln()).collect();
        let y: Vec<f64> = used.iter().map(|r| r.lhs.ln() + r.rhs).collect();
        let Some(fit) = fit_line(&x, &y) else {
            trends.push(Trend::Unknown);
            continue;
        };
        let (s, sigma) = (fit.slope, fit.slope_std_error);
        if sigma > max_slope_error {
            trends.push(Trend::Unknown);
            continue;
        }
        let trend = if vanishing {
            extreme_slope = extreme_slope.max(s);
            if s < -flat - 2.0 * sigma {
                Trend::Small
            } else {
                Trend::Large
            }
        } else {
            extreme_slope = extreme_slope.min(s);
            if s <= flat + 2.0 * sigma {
                Trend::Small
            } else {
                Trend::Large
            }
        };
        if trend == Trend::Small && best_bounded.is_none() {
            let sup = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            best_bounded = Some((a, sup));
        }
        trends.push(trend);
    }
    if trends.is_empty() {
        return outcome(Verdict::Inconclusive, f64::NAN, &[]);
    }
    if vanishing {
        let verdict = if trends.iter().all(|t| *t == Trend::Small) {
            Verdict::Pass
        } else if trends.contains(&Trend::Large) {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        let margin = if extreme_slope.is_finite() { extreme_slope } else { f64::NEG_INFINITY };
        outcome(verdict, margin, &[("max_slope", extreme_slope)])
    } else {
        match best_bounded {
            Some((a, sup)) => outcome(Verdict::Pass, sup, &[("a", a), ("ln_sup_product", sup)]),
            None => {
                let verdict = if trends.iter().all(|t| *t == Trend::Large) {
                    Verdict::Fail
                } else {
                    Verdict::Inconclusive
                };
                outcome(verdict, extreme_slope, &[("min_slope", extreme_slope)])
            }
        }
    }
}

fn ratio_limit(rows: &[EvidenceRow], group: f64, theta: f64, tail: usize, gamma_pass: f64, gamma_fail: f64) -> Outcome {
    let mut series: Vec<&EvidenceRow> = rows.iter().filter(|r| r.group == group).collect();
    series.sort_by(|x, y| y.parameter.total_cmp(&x.parameter));
    if series.len() < tail || tail < 3 {
        return outcome(Verdict::Inconclusive, f64::NAN, &[]);
    }
    let last = &series[series.len() - tail..];
    let values: Vec<f64> = last.iter().map(|r| r.lhs).collect();
    let plateau = mean(&values);
    let top = values.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return outcome(Verdict::Pass, 0.0, &[("plateau", 0.0)]);
    }
    let positive: Vec<&&EvidenceRow> = last.iter().filter(|r| r.lhs > 0.0 && r.rhs > 0.0).collect();
    let x: Vec<f64> = positive.iter().map(|r| r.rhs.ln()).collect();
    let y: Vec<f64> = positive.iter().map(|r| r.lhs.ln()).collect();
    let Some(fit) = (positive.len() >= 3).then(|| fit_line(&x, &y)).flatten() else {
        return outcome(Verdict::Inconclusive, plateau, &[("plateau", plateau)]);
    };
    let gamma = fit.slope;
    let verdict = if gamma >= gamma_pass || (top < theta && gamma >= gamma_fail) {
        Verdict::Pass
    } else if gamma < gamma_fail && plateau >= theta {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    outcome(verdict, plateau, &[("plateau", plateau), ("gamma", gamma), ("tail_max", top)])
}

fn sup_norm_rule(rows: &[EvidenceRow], bound: f64) -> Outcome {
    let sampled = rows.iter().find(|r| r.parameter == 0.0).map(|r| r.lhs);
    let closed = rows.iter().find(|r| r.parameter == 1.0).map(|r| r.lhs);
    match (closed, sampled) {
        (Some(c), _) => {
            let v = if c < bound { Verdict::Pass } else { Verdict::Fail };
            outcome(v, 1.0 - c, &[("sup_norm", c)])
        }
        (None, Some(s)) => {
            let v = if s >= bound { Verdict::Fail } else { Verdict::Inconclusive };
            outcome(v, 1.0 - s, &[("sup_norm_lower_bound", s)])
        }
        (None, None) => outcome(Verdict::Inconclusive, f64::NAN, &[]),
    }
}

fn slope_bound(
    rows: &[EvidenceRow],
    target: f64,
    slack: f64,
    max_rel_error: f64,
    fit_points: usize,
    min_points: usize,
) -> Outcome {
    let mut reliable: Vec<&EvidenceRow> = rows
        .iter()
        .filter(|r| r.lhs > 0.0 && r.std_error.is_some_and(|s| s <= max_rel_error * r.lhs))
        .collect();
    reliable.sort_by(|x, y| y.parameter.total_cmp(&x.parameter));
    let used = &reliable[reliable.len().saturating_sub(fit_points)..];
    if used.len() < min_points {
        return outcome(Verdict::Inconclusive, f64::NAN, &[("reliable_cells", used.len() as f64)]);
    }
    let x: Vec<f64> = used.iter().map(|r| r.parameter.ln()).collect();
    let y: Vec<f64> = used.iter().map(|r| r.lhs.ln()).collect();
    let Some(fit) = fit_line(&x, &y) else {
        return outcome(Verdict::Inconclusive, f64::NAN, &[]);
    };
    let verdict = if fit.slope <= target + slack { Verdict::Pass } else { Verdict::Fail };
    outcome(
        verdict,
        fit.slope - target,
        &[
            ("slope", fit.slope),
            ("intercept", fit.intercept),
            ("slope_std_error", fit.slope_std_error),
            ("reliable_cells", used.len() as f64),
        ],
    )
}

fn log_le(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + LOG_TOL * lhs.abs().max(rhs.abs()).max(1.0)
}

fn suffix_inequality(rows: &[EvidenceRow], min_tail_fraction: f64) -> Outcome {
    let mut all_violate = true;
    let mut least_excess = f64::INFINITY;
    let gs = groups(rows);
    for &c in &gs {
        let mut series: Vec<&EvidenceRow> = rows.iter().filter(|r| r.group == c).collect();
        series.sort_by(|x, y| x.parameter.total_cmp(&y.parameter));
        let n = series.len();
        if n == 0 {
            continue;
        }
        let holds: Vec<bool> = series.iter().map(|r| log_le(r.lhs, r.rhs)).collect();
        let mut start = n;
        while start > 0 && holds[start - 1] {
            start -= 1;
        }
        if n - start >= ((min_tail_fraction * n as f64).ceil() as usize).max(1) {
            let y0 = series[start].parameter;
            return outcome(Verdict::Pass, c, &[("c", c), ("y0", y0)]);
        }
        let y_top = series[n - 1].parameter / 10.0;
        let violated = series.iter().zip(&holds).any(|(r, h)| !h && r.parameter >= y_top);
        all_violate &= violated;
        least_excess = least_excess.min(series[n - 1].lhs - series[n - 1].rhs);
    }
    if !gs.is_empty() && all_violate {
        outcome(Verdict::Fail, least_excess, &[("least_excess", least_excess)])
    } else {
        outcome(Verdict::Inconclusive, f64::NAN, &[])
    }
}

/// Evidence slots of the aperture prediction.
mod slot {
    pub const SUP_NORM: f64 = 1.0;
    pub const APERTURE: f64 = 2.0;
    pub const DELTA2_NABLA2: f64 = 3.0;
    pub const DELTA_SHARP: f64 = 4.0;
    pub const SUFFICIENCY: f64 = 5.0;
    pub const LENS: f64 = 6.0;
}

fn verdict_code(v: Verdict) -> f64 {
    match v {
        Verdict::Pass => 1.0,
        Verdict::Fail => -1.0,
        Verdict::Inconclusive => 0.0,
    }
}

fn aperture_prediction(rows: &[EvidenceRow]) -> Outcome {
    let find = |g: f64| rows.iter().find(|r| r.group == g);
    if let Some(s) = find(slot::SUP_NORM) {
        if s.lhs < s.rhs {
            return outcome(Verdict::Pass, s.rhs - s.lhs, &[("sup_norm", s.lhs)]);
        }
    }
    let Some(ap) = find(slot::APERTURE) else {
        return outcome(Verdict::Inconclusive, f64::NAN, &[]);
    };
    // inverse apertures: b < b_N iff 1/b > 1/b_N, and b_1 = +inf maps to 0
    let (inv_b, inv_bn) = (ap.lhs, ap.rhs);
    let margin = inv_b - inv_bn;
    let code = |g: f64| find(g).map_or(0.0, |r| r.lhs);
    if code(slot::DELTA2_NABLA2) == 1.0 {
        let verdict = if margin > 1e-12 * inv_bn.max(1e-300) && margin > 0.0 {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        };
        return outcome(verdict, margin, &[("inverse_aperture", inv_b), ("inverse_bound", inv_bn)]);
    }
    if code(slot::DELTA_SHARP) == 1.0 && find(slot::LENS).is_some() && code(slot::SUFFICIENCY) == 1.0 {
        return outcome(Verdict::Fail, margin, &[("inverse_aperture", inv_b), ("inverse_bound", inv_bn)]);
    }
    outcome(Verdict::Inconclusive, margin, &[("inverse_aperture", inv_b), ("inverse_bound", inv_bn)])
}

/// Orlicz functions every battery is run against: two powers, two
/// exponential powers and a log-exponential.
pub fn builtin_psi() -> Vec<OrliczFunction> {
    vec![
        OrliczFunction::Power { p: 2.0 },
        OrliczFunction::Power { p: 4.0 },
        OrliczFunction::ExpPower { a: 1.0, b: 1.0 },
        OrliczFunction::ExpPower { a: 1.0, b: 2.0 },
        OrliczFunction::LogExp { a: 1.0, b: 2.0 },
    ]
}

/// `A` grid for the Carleson fits.
pub fn default_a_grid() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0, 16.0]
}

/// `1 - 2^{-k}`, `k = 1..20`.
pub fn default_ratio_r_grid() -> Vec<f64> {
    (1..=20).map(|k| 1.0 - 2f64.powi(-k)).collect()
}

/// `{1} ∪ {2^k : k = 1..20}`.
pub fn default_c_grid() -> Vec<f64> {
    std::iter::once(1.0).chain((1..=20).map(|k| 2f64.powi(k))).collect()
}

/// `2^k`, `k = 4..128`.
pub fn default_y_grid() -> Vec<f64> {
    (4..=128).map(|k| 2f64.powi(k)).collect()
}

/// `h = 2^{-kβ}`, `k = 4..14`: the lens masses then decay by a fixed factor per cell.
pub fn default_lens_h_grid(beta: f64) -> Vec<f64> {
    (4..=14).map(|k| 2f64.powf(-(k as f64) * beta)).collect()
}

fn space_json(space: Space) -> serde_json::Value {
    serde_json::to_value(space).unwrap_or(serde_json::Value::Null)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarlesonMode {
    BigOh,
    LittleOh,
}

/// Tests `profile(h) ≲ 1/ψ(Aψ⁻¹(h^{-E}))` for some `A` (big-oh) or the
/// little-oh version for every `A`.
pub fn psi_carleson_fit(
    profile: &CarlesonProfile,
    psi: &OrliczFunction,
    exponent: Option<f64>,
    mode: CarlesonMode,
    a_grid: &[f64],
) -> Result<CriterionReport> {
    let expected = n_alpha(profile.dim, profile.space)?;
    let exponent = exponent.unwrap_or(expected);
    if (exponent - expected).abs() > 1e-12 * expected {
        return Err(Error::ProfileMismatch(format!(
            "exponent {exponent} does not match {} in dimension {} (expected {expected})",
            profile.space.label(),
            profile.dim
        )));
    }
    if a_grid.is_empty() || a_grid.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::InvalidParameter("A grid must be non-empty and positive".into()));
    }
    let mut evidence = Vec::new();
    let mut notes = Vec::new();
    for &a in a_grid {
        for rec in &profile.records {
            let inner = psi.inverse_ln(-exponent * rec.h.ln())?;
            let ln_bound = psi.ln_evaluate(a * inner)?;
            if !ln_bound.is_finite() {
                notes.push(format!("A = {a}, h = {}: ψ saturated, cell dropped", rec.h));
                continue;
            }
            evidence.push(EvidenceRow {
                group: a,
                parameter: rec.h,
                lhs: rec.estimate,
                rhs: ln_bound,
                std_error: Some(rec.std_error),
                exact: rec.estimate == 0.0 && profile.is_exact_zero(rec.h),
            });
        }
    }
    let (id, vanishing) = match mode {
        CarlesonMode::BigOh => (CriterionId::PsiCarlesonBigOh, false),
        CarlesonMode::LittleOh => (CriterionId::PsiCarlesonLittleOh, true),
    };
    let rule = DecisionRule::CarlesonProduct {
        vanishing,
        max_rel_error: 0.3,
        tail: 5,
        min_points: 3,
        flat: 0.1,
        max_slope_error: 0.5,
    };
    let inputs = json!({
        "symbol": profile.symbol,
        "space": space_json(profile.space),
        "dim": profile.dim,
        "psi": psi.label(),
        "exponent": exponent,
        "a_grid": a_grid,
        "seed": profile.seed,
    });
    Ok(CriterionReport::decide(id, inputs, rule, evidence, notes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSettings {
    pub r_grid: Vec<f64>,
    pub samples_per_r: usize,
    pub seed: u64,
}

impl RatioSettings {
    pub fn new(samples_per_r: usize, seed: u64) -> Self {
        Self {
            r_grid: default_ratio_r_grid(),
            samples_per_r,
            seed,
        }
    }

    fn check(&self) -> Result<()> {
        let ok = self.r_grid.len() >= 5
            && self.r_grid.windows(2).all(|w| w[0] < w[1])
            && self.r_grid.iter().all(|r| *r > 0.0 && *r < 1.0);
        if !ok {
            return Err(Error::InvalidParameter(
                "ratio grid needs at least 5 increasing radii in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Probe directions: coordinate axes followed by random sphere points.
    fn directions(&self, dim: usize) -> Vec<BallPoint> {
        let mut dirs: Vec<BallPoint> = (0..dim)
            .map(|i| {
                let mut c = vec![0.0; dim];
                c[i] = 1.0;
                BallPoint::from_real(&c).expect("unit vector")
            })
            .collect();
        dirs.extend(
            Sampler::sphere(dim, self.seed)
                .with_tag(self.seed, tags::RATIO)
                .collect(self.samples_per_r),
        );
        dirs
    }
}

/// `min_{|z| = r} (1 - |φ(z)|)` over the probe directions, with `1 - r` recomputed from `r`.
fn min_gap(map: &SymbolMap, dirs: &[BallPoint], r: f64) -> Result<f64> {
    let mut gap = f64::INFINITY;
    for d in dirs {
        let w = map.apply(&d.scaled(r))?;
        gap = gap.min(1.0 - w.norm());
    }
    Ok(gap)
}

fn ratio_rows(
    psi: &OrliczFunction,
    map: &SymbolMap,
    exponent: f64,
    settings: &RatioSettings,
    dirs: &[BallPoint],
    notes: &mut Vec<String>,
) -> Result<Vec<EvidenceRow>> {
    let mut rows = Vec::new();
    for &r in &settings.r_grid {
        let delta = 1.0 - r;
        let gap = min_gap(map, dirs, r)?;
        let num = if gap > 0.0 { psi.inverse_ln(-exponent * gap.ln()) } else { Err(Error::InverseOutOfRange { y: f64::INFINITY }) };
        let den = psi.inverse_ln(-exponent * delta.ln());
        match (num, den) {
            (Ok(num), Ok(den)) if den > 0.0 && num.is_finite() => {
                rows.push(EvidenceRow::new(exponent, delta, num / den, 1.0 / den));
            }
            _ => notes.push(format!("exponent {exponent}, r = {r}: ψ⁻¹ saturated, radius dropped")),
        }
    }
    Ok(rows)
}

fn ratio_rule(group: f64) -> DecisionRule {
    DecisionRule::RatioLimit {
        group,
        theta: 0.01,
        tail: 5,
        gamma_pass: 0.15,
        gamma_fail: 0.05,
    }
}

/// `R(r) = max_{|z| = r} ψ⁻¹((1 - |φ(z)|)^{-E}) / ψ⁻¹((1 - r)^{-E})` with
/// `E = N + α + 1`, or `E = N` for the Hardy space.
pub fn boundary_ratio_alpha(
    psi: &OrliczFunction,
    map: &SymbolMap,
    space: Space,
    settings: &RatioSettings,
) -> Result<CriterionReport> {
    settings.check()?;
    let exponent = n_alpha(map.dim(), space)?;
    let dirs = settings.directions(map.dim());
    let mut notes = Vec::new();
    let rows = ratio_rows(psi, map, exponent, settings, &dirs, &mut notes)?;
    let inputs = json!({
        "symbol": map.label(),
        "psi": psi.label(),
        "space": space_json(space),
        "exponent": exponent,
        "r_grid": settings.r_grid,
        "samples_per_r": settings.samples_per_r,
        "seed": settings.seed,
    });
    Ok(CriterionReport::decide(
        CriterionId::BoundaryRatioAlpha,
        inputs,
        ratio_rule(exponent),
        rows,
        notes,
    ))
}

/// The ratio with exponent 1. Rows for the exponents `N + α + 1`, `α ∈ {0, 1, 2}`,
/// are kept as further groups so [`alpha_independence`] can compare verdicts.
pub fn boundary_ratio_simplified(
    psi: &OrliczFunction,
    map: &SymbolMap,
    settings: &RatioSettings,
) -> Result<CriterionReport> {
    settings.check()?;
    let dirs = settings.directions(map.dim());
    let n = map.dim() as f64;
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    for e in [1.0, n + 1.0, n + 2.0, n + 3.0] {
        rows.extend(ratio_rows(psi, map, e, settings, &dirs, &mut notes)?);
    }
    let inputs = json!({
        "symbol": map.label(),
        "psi": psi.label(),
        "exponents": [1.0, n + 1.0, n + 2.0, n + 3.0],
        "r_grid": settings.r_grid,
        "samples_per_r": settings.samples_per_r,
        "seed": settings.seed,
    });
    Ok(CriterionReport::decide(
        CriterionId::BoundaryRatioSimplified,
        inputs,
        ratio_rule(1.0),
        rows,
        notes,
    ))
}

/// `max_{|z| = r} (1 - |z|)/(1 - |φ(z)|)`.
pub fn classical_angular_ratio(map: &SymbolMap, settings: &RatioSettings) -> Result<CriterionReport> {
    settings.check()?;
    let dirs = settings.directions(map.dim());
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for &r in &settings.r_grid {
        let delta = 1.0 - r;
        let gap = min_gap(map, &dirs, r)?;
        if gap > 0.0 {
            rows.push(EvidenceRow::new(0.0, delta, delta / gap, delta));
        } else {
            notes.push(format!("r = {r}: image on the sphere to working precision, radius dropped"));
        }
    }
    let inputs = json!({
        "symbol": map.label(),
        "r_grid": settings.r_grid,
        "samples_per_r": settings.samples_per_r,
        "seed": settings.seed,
    });
    Ok(CriterionReport::decide(
        CriterionId::ClassicalAngularRatio,
        inputs,
        ratio_rule(0.0),
        rows,
        notes,
    ))
}

/// `‖φ‖_∞ < 1 - 10^{-6}`.
pub fn h_infty_compact(map: &SymbolMap, samples: usize, seed: u64) -> Result<CriterionReport> {
    let bound = 1.0 - 1e-6;
    let sup = map.sup_norm_estimate(samples, seed)?;
    let mut rows = vec![EvidenceRow::new(0.0, 0.0, sup.lower_bound, bound)];
    if let Some(c) = sup.closed_form {
        rows.push(EvidenceRow {
            exact: true,
            ..EvidenceRow::new(0.0, 1.0, c, bound)
        });
    }
    let inputs = json!({ "symbol": map.label(), "samples": samples, "seed": seed });
    Ok(CriterionReport::decide(
        CriterionId::HInftyCompact,
        inputs,
        DecisionRule::SupNorm { bound },
        rows,
        Vec::new(),
    ))
}

/// Log-log slope of the lens window masses at `1` against the lower-bound
/// exponent `(2 + α)/β` (Bergman) or `1/β` (Hardy).
pub fn lens_exponent_check(
    beta: f64,
    space: Space,
    h_grid: Option<&[f64]>,
    strata: StrataSpec,
    seed: u64,
) -> Result<CriterionReport> {
    let map = SymbolMap::lens(beta)?;
    let target = match space {
        Space::Bergman { alpha } => (2.0 + alpha) / beta,
        Space::Hardy => 1.0 / beta,
    };
    let h_grid = h_grid.map_or_else(|| default_lens_h_grid(beta), <[f64]>::to_vec);
    let masses = stratified_window_masses(&map, space, &BallPoint::e1(1), &h_grid, strata, seed)?;
    let rows = h_grid
        .iter()
        .zip(&masses)
        .map(|(&h, m)| EvidenceRow {
            std_error: Some(m.std_error),
            ..EvidenceRow::new(0.0, h, m.estimate, h.powf(target))
        })
        .collect();
    let inputs = json!({
        "beta": beta,
        "space": space_json(space),
        "h_grid": h_grid,
        "strata": strata,
        "seed": seed,
    });
    let rule = DecisionRule::SlopeBound {
        target,
        slack: 0.15,
        max_rel_error: 0.3,
        fit_points: 6,
        min_points: 4,
    };
    Ok(CriterionReport::decide(
        CriterionId::LensLowerBoundExponent,
        inputs,
        rule,
        rows,
        Vec::new(),
    ))
}

/// `ψ(y)^{1/(Nβ)} <= ψ(Cy)` for some `C` on a suffix of the `y` grid.
pub fn delta2sharp_sufficiency(
    psi: &OrliczFunction,
    beta: f64,
    n: usize,
    c_grid: &[f64],
    y_grid: &[f64],
) -> Result<CriterionReport> {
    if !(beta > 0.0 && beta < 1.0) || n == 0 {
        return Err(Error::InvalidParameter(format!("need β in (0, 1) and N >= 1, got {beta}, {n}")));
    }
    if c_grid.is_empty() || y_grid.len() < 4 || !y_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidParameter("C grid empty or y grid not increasing".into()));
    }
    let s = 1.0 / (n as f64 * beta);
    let mut rows = Vec::new();
    let mut dropped = 0;
    for &c in c_grid {
        for &y in y_grid {
            let (lhs, rhs) = (psi.ln_evaluate(y)?, psi.ln_evaluate(c * y)?);
            if lhs.is_finite() && rhs.is_finite() {
                rows.push(EvidenceRow::new(c, y, s * lhs, rhs));
            } else {
                dropped += 1;
            }
        }
    }
    let notes = if dropped > 0 { vec![format!("{dropped} grid points dropped: ln ψ not finite")] } else { Vec::new() };
    let inputs = json!({
        "psi": psi.label(),
        "beta": beta,
        "n": n,
        "exponent": s,
        "c_grid": c_grid,
        "y_range": [y_grid[0], y_grid[y_grid.len() - 1]],
    });
    Ok(CriterionReport::decide(
        CriterionId::Delta2SharpSufficiency,
        inputs,
        DecisionRule::SuffixInequality { min_tail_fraction: 0.5 },
        rows,
        notes,
    ))
}

fn cert_verdict(certs: &[ClassCertificate], c: GrowthCondition) -> Verdict {
    certs
        .iter()
        .find(|x| x.condition == c)
        .map_or(Verdict::Inconclusive, |x| x.verdict)
}

fn both(a: Verdict, b: Verdict) -> Verdict {
    match (a, b) {
        (Verdict::Pass, Verdict::Pass) => Verdict::Pass,
        (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
        _ => Verdict::Inconclusive,
    }
}

/// Predicted compactness from the image aperture and the growth classes of `ψ`:
/// compact when `‖φ‖_∞ < 1`; for `Δ₂ ∩ ∇₂` compact when the aperture is below
/// `b_N` (every aperture when `N = 1`); for `Δ²` the lens maps are the
/// non-compact examples once the sufficiency inequality holds.
pub fn koranyi_aperture_verdict(
    map: &SymbolMap,
    certs: &[ClassCertificate],
    sufficiency: Option<Verdict>,
) -> Result<CriterionReport> {
    let n = map.dim();
    let mut rows = Vec::new();
    if let Some(s) = map.closed_form_sup() {
        rows.push(EvidenceRow::new(slot::SUP_NORM, 0.0, s, 1.0 - 1e-6));
    }
    let containment = map.koranyi_containment();
    let b_n = koranyi_aperture_bound(n);
    if let Some((_, b)) = &containment {
        let inv_bn = if b_n.is_finite() { 1.0 / b_n } else { 0.0 };
        rows.push(EvidenceRow::new(slot::APERTURE, n as f64, 1.0 / b, inv_bn));
    }
    let d2n2 = both(
        cert_verdict(certs, GrowthCondition::Delta2),
        cert_verdict(certs, GrowthCondition::Nabla2),
    );
    rows.push(EvidenceRow::new(slot::DELTA2_NABLA2, 0.0, verdict_code(d2n2), 0.0));
    rows.push(EvidenceRow::new(
        slot::DELTA_SHARP,
        0.0,
        verdict_code(cert_verdict(certs, GrowthCondition::DeltaSharp2)),
        0.0,
    ));
    if let Some(v) = sufficiency {
        rows.push(EvidenceRow::new(slot::SUFFICIENCY, 0.0, verdict_code(v), 0.0));
    }
    if let Some(beta) = map.lens_beta() {
        rows.push(EvidenceRow::new(slot::LENS, 0.0, beta, 0.0));
    }
    let mut notes = Vec::new();
    if containment.is_none() {
        notes.push("no Korányi region of finite aperture is known to contain the image".into());
    }
    let inputs = json!({
        "symbol": map.label(),
        "n": n,
        "aperture": containment.as_ref().map(|c| c.1),
        "b_n": b_n.is_finite().then_some(b_n),
        "delta2_and_nabla2": d2n2,
        "delta_sharp2": cert_verdict(certs, GrowthCondition::DeltaSharp2),
        "sufficiency": sufficiency,
    });
    Ok(CriterionReport::decide(
        CriterionId::KoranyiApertureVerdict,
        inputs,
        DecisionRule::AperturePrediction,
        rows,
        notes,
    ))
}

/// Growth classes the theorem behind a criterion assumes.
pub fn required_classes(id: CriterionId, space: Space) -> Vec<GrowthCondition> {
    use GrowthCondition::*;
    match (id, space) {
        (CriterionId::PsiCarlesonBigOh, Space::Hardy) => vec![Nabla2, UniformNabla0],
        (CriterionId::PsiCarlesonBigOh, Space::Bergman { .. }) => vec![UniformNabla0],
        (CriterionId::PsiCarlesonLittleOh, Space::Hardy) => vec![Nabla2, Nabla0],
        (CriterionId::PsiCarlesonLittleOh, Space::Bergman { .. }) => vec![Nabla0],
        (CriterionId::BoundaryRatioAlpha, Space::Bergman { .. }) => vec![Nabla0],
        (CriterionId::BoundaryRatioSimplified, _) => vec![DeltaSharp2],
        _ => Vec::new(),
    }
}

pub fn hypothesis_scope(id: CriterionId, space: Space, certs: &[ClassCertificate]) -> HypothesisScope {
    let needed = required_classes(id, space);
    if needed.is_empty() {
        return HypothesisScope::NotRequired;
    }
    let verdicts: Vec<Verdict> = needed.iter().map(|c| cert_verdict(certs, *c)).collect();
    if verdicts.iter().all(|v| *v == Verdict::Pass) {
        HypothesisScope::Within
    } else if verdicts.contains(&Verdict::Fail) {
        HypothesisScope::Outside
    } else {
        HypothesisScope::Unverified
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "check", content = "implication", rename_all = "snake_case")]
pub enum ConsistencyCheck {
    /// `‖φ‖_∞ < 1` forces every compactness criterion to pass.
    SupNormImpliesCompactness,
    /// The vanishing Carleson condition forces the boundary ratio to vanish.
    VanishingCarlesonImpliesRatio,
    /// For `Δ²` functions the ratio verdict does not depend on the exponent.
    AlphaIndependence,
    /// For power functions the Orlicz ratio is a power of the classical one.
    PowerReduction,
    /// Predicted aperture verdict against the computed boundary ratio.
    ApertureAgreement,
    /// Lens maps under `Δ²` functions: classical ratio passes, Orlicz ratio fails.
    LensSeparation,
    /// `Δ²` membership makes the sufficiency inequality hold.
    DeltaSharpSufficiency,
    ClassImplication(Implication),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    #[serde(flatten)]
    pub check: ConsistencyCheck,
    pub status: ImplicationStatus,
    pub detail: String,
}

fn implication(premise: bool, conclusions: &[Verdict]) -> ImplicationStatus {
    if !premise || conclusions.iter().all(|v| *v == Verdict::Pass) {
        ImplicationStatus::Consistent
    } else if conclusions.contains(&Verdict::Fail) {
        ImplicationStatus::Inconsistent
    } else {
        ImplicationStatus::Undetermined
    }
}

fn agreement(a: Verdict, b: Verdict) -> ImplicationStatus {
    match (a, b) {
        (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => ImplicationStatus::Undetermined,
        _ if a == b => ImplicationStatus::Consistent,
        _ => ImplicationStatus::Inconsistent,
    }
}

/// Ratio verdicts per exponent group of a simplified-ratio report.
pub fn ratio_verdicts_by_exponent(report: &CriterionReport) -> Vec<(f64, Verdict)> {
    groups(&report.evidence)
        .into_iter()
        .map(|g| (g, evaluate_rule(&ratio_rule(g), &report.evidence).verdict))
        .collect()
}

/// Compares the exponent groups of a simplified-ratio report; only binding when `ψ` is `Δ²`.
pub fn alpha_independence(report: &CriterionReport, delta_sharp: Verdict) -> ConsistencyRow {
    let per = ratio_verdicts_by_exponent(report);
    let has = |v: Verdict| per.iter().any(|(_, x)| *x == v);
    let status = if delta_sharp != Verdict::Pass {
        ImplicationStatus::Consistent
    } else if has(Verdict::Pass) && has(Verdict::Fail) {
        ImplicationStatus::Inconsistent
    } else if has(Verdict::Inconclusive) {
        ImplicationStatus::Undetermined
    } else {
        ImplicationStatus::Consistent
    };
    let listing: Vec<String> = per.iter().map(|(e, v)| format!("E = {e}: {v}")).collect();
    ConsistencyRow {
        check: ConsistencyCheck::AlphaIndependence,
        status,
        detail: format!("Δ² {delta_sharp}; {}", listing.join(", ")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryConfig {
    pub ratio: RatioSettings,
    pub a_grid: Vec<f64>,
    pub c_grid: Vec<f64>,
    pub y_grid: Vec<f64>,
    pub sup_samples: usize,
    pub lens_h_grid: Option<Vec<f64>>,
    pub strata: StrataSpec,
    pub certify_grid: GridSpec,
    pub seed: u64,
}

impl BatteryConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            ratio: RatioSettings::new(64, seed),
            a_grid: default_a_grid(),
            c_grid: default_c_grid(),
            y_grid: default_y_grid(),
            sup_samples: 4096,
            lens_h_grid: None,
            strata: StrataSpec::default(),
            certify_grid: GridSpec::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub symbol: String,
    pub psi: String,
    pub space: Space,
    pub certificates: Vec<ClassCertificate>,
    pub reports: Vec<CriterionReport>,
    pub consistency: Vec<ConsistencyRow>,
}

/// Process exit status of a battery: consistent, inconsistent, inconclusive only.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INCONSISTENT: i32 = 2;
    pub const INCONCLUSIVE: i32 = 3;
}

impl BatteryReport {
    pub fn report(&self, id: CriterionId) -> Option<&CriterionReport> {
        self.reports.iter().find(|r| r.criterion == id)
    }

    pub fn verdict(&self, id: CriterionId) -> Option<Verdict> {
        self.report(id).map(|r| r.verdict)
    }

    pub fn inconsistencies(&self) -> usize {
        self.consistency
            .iter()
            .filter(|r| r.status == ImplicationStatus::Inconsistent)
            .count()
    }

    pub fn exit_code(&self) -> i32 {
        if self.inconsistencies() > 0 {
            exit::INCONSISTENT
        } else if self.reports.iter().all(|r| r.verdict == Verdict::Inconclusive) {
            exit::INCONCLUSIVE
        } else {
            exit::OK
        }
    }
}

enum Task {
    BigOh,
    LittleOh,
    RatioAlpha,
    RatioSimplified,
    Classical,
    SupNorm,
    LensExponent(f64),
}

/// Runs every applicable criterion for `map` and `psi` on the profile's space,
/// then the consistency checks between them.
pub fn run_battery(
    map: &SymbolMap,
    psi: &OrliczFunction,
    profile: &CarlesonProfile,
    cfg: &BatteryConfig,
) -> Result<BatteryReport> {
    if profile.dim != map.dim() || profile.symbol != map.label() {
        return Err(Error::ProfileMismatch(format!(
            "profile of {} (dimension {}) given for {}",
            profile.symbol,
            profile.dim,
            map.label()
        )));
    }
    let space = profile.space;
    let certificates = GrowthCondition::ALL
        .par_iter()
        .map(|&c| certify(psi, c, &cfg.certify_grid))
        .collect::<Result<Vec<_>>>()?;
    let lens_beta = map.lens_beta();
    let mut tasks = vec![
        Task::BigOh,
        Task::LittleOh,
        Task::RatioAlpha,
        Task::RatioSimplified,
        Task::Classical,
        Task::SupNorm,
    ];
    if let (Some(beta), 1) = (lens_beta, map.dim()) {
        tasks.push(Task::LensExponent(beta));
    }
    let mut reports = tasks
        .par_iter()
        .map(|t| match t {
            Task::BigOh => psi_carleson_fit(profile, psi, None, CarlesonMode::BigOh, &cfg.a_grid),
            Task::LittleOh => psi_carleson_fit(profile, psi, None, CarlesonMode::LittleOh, &cfg.a_grid),
            Task::RatioAlpha => boundary_ratio_alpha(psi, map, space, &cfg.ratio),
            Task::RatioSimplified => boundary_ratio_simplified(psi, map, &cfg.ratio),
            Task::Classical => classical_angular_ratio(map, &cfg.ratio),
            Task::SupNorm => h_infty_compact(map, cfg.sup_samples, cfg.seed),
            Task::LensExponent(beta) => {
                lens_exponent_check(*beta, space, cfg.lens_h_grid.as_deref(), cfg.strata, cfg.seed)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let sufficiency = match lens_beta {
        Some(beta) => {
            let r = delta2sharp_sufficiency(psi, beta, map.dim(), &cfg.c_grid, &cfg.y_grid)?;
            let v = r.verdict;
            reports.push(r);
            Some(v)
        }
        None => None,
    };
    reports.push(koranyi_aperture_verdict(map, &certificates, sufficiency)?);
    let reports: Vec<CriterionReport> = {
        let mut r: Vec<CriterionReport> = reports
            .into_iter()
            .map(|r| {
                let scope = hypothesis_scope(r.criterion, space, &certificates);
                r.with_hypotheses(scope)
            })
            .collect();
        r.sort_by_key(|r| r.criterion);
        r
    };
    let consistency = consistency_rows(psi, map, &certificates, &reports);
    Ok(BatteryReport {
        symbol: map.label(),
        psi: psi.label(),
        space,
        certificates,
        reports,
        consistency,
    })
}

fn consistency_rows(
    psi: &OrliczFunction,
    map: &SymbolMap,
    certs: &[ClassCertificate],
    reports: &[CriterionReport],
) -> Vec<ConsistencyRow> {
    let verdict = |id: CriterionId| {
        reports
            .iter()
            .find(|r| r.criterion == id)
            .map_or(Verdict::Inconclusive, |r| r.verdict)
    };
    let delta_sharp = cert_verdict(certs, GrowthCondition::DeltaSharp2);
    let mut rows = Vec::new();

    let sup_pass = verdict(CriterionId::HInftyCompact) == Verdict::Pass;
    let others: Vec<(CriterionId, Verdict)> = CriterionId::ALL
        .iter()
        .filter(|id| id.is_compactness() && **id != CriterionId::HInftyCompact)
        .filter(|id| reports.iter().any(|r| r.criterion == **id))
        .map(|&id| (id, verdict(id)))
        .collect();
    let listing: Vec<String> = others.iter().map(|(id, v)| format!("{}: {v}", id.name())).collect();
    rows.push(ConsistencyRow {
        check: ConsistencyCheck::SupNormImpliesCompactness,
        status: implication(sup_pass, &others.iter().map(|x| x.1).collect::<Vec<_>>()),
        detail: format!("sup norm below one: {sup_pass}; {}", listing.join(", ")),
    });

    let little = verdict(CriterionId::PsiCarlesonLittleOh);
    let ratio = verdict(CriterionId::BoundaryRatioAlpha);
    rows.push(ConsistencyRow {
        check: ConsistencyCheck::VanishingCarlesonImpliesRatio,
        status: implication(little == Verdict::Pass, &[ratio]),
        detail: format!("little-oh {little}, boundary ratio {ratio}"),
    });

    if let Some(r) = reports.iter().find(|r| r.criterion == CriterionId::BoundaryRatioSimplified) {
        rows.push(alpha_independence(r, delta_sharp));
    }

    if let OrliczFunction::Power { p } = psi {
        let classical = verdict(CriterionId::ClassicalAngularRatio);
        rows.push(ConsistencyRow {
            check: ConsistencyCheck::PowerReduction,
            status: agreement(ratio, classical),
            detail: format!("power {p}: boundary ratio {ratio}, classical {classical}"),
        });
    }

    let predicted = verdict(CriterionId::KoranyiApertureVerdict);
    rows.push(ConsistencyRow {
        check: ConsistencyCheck::ApertureAgreement,
        status: if predicted == Verdict::Inconclusive {
            ImplicationStatus::Consistent
        } else {
            agreement(predicted, ratio)
        },
        detail: format!("predicted {predicted}, boundary ratio {ratio}"),
    });

    if map.lens_beta().is_some() && delta_sharp == Verdict::Pass {
        let classical = verdict(CriterionId::ClassicalAngularRatio);
        let status = match (classical, ratio) {
            (Verdict::Pass, Verdict::Fail) => ImplicationStatus::Consistent,
            (Verdict::Fail, _) | (_, Verdict::Pass) => ImplicationStatus::Inconsistent,
            _ => ImplicationStatus::Undetermined,
        };
        rows.push(ConsistencyRow {
            check: ConsistencyCheck::LensSeparation,
            status,
            detail: format!("classical {classical}, boundary ratio {ratio}"),
        });
    }

    if reports.iter().any(|r| r.criterion == CriterionId::Delta2SharpSufficiency) {
        let suff = verdict(CriterionId::Delta2SharpSufficiency);
        rows.push(ConsistencyRow {
            check: ConsistencyCheck::DeltaSharpSufficiency,
            status: implication(delta_sharp == Verdict::Pass, &[suff]),
            detail: format!("Δ² {delta_sharp}, sufficiency {suff}"),
        });
    }

    for row in check_implications(certs) {
        rows.push(ConsistencyRow {
            check: ConsistencyCheck::ClassImplication(row.implication),
            status: row.status,
            detail: String::new(),
        });
    }
    rows
}

/// Criterion evidence as CSV: one row per evidence entry, tagged with the criterion name.
pub fn write_evidence_csv<W: std::io::Write>(reports: &[CriterionReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["criterion", "group", "parameter", "lhs", "rhs", "std_error", "exact"])?;
    for r in reports {
        for e in &r.evidence {
            w.write_record([
                r.criterion.name().to_string(),
                e.group.to_string(),
                e.parameter.to_string(),
                e.lhs.to_string(),
                e.rhs.to_string(),
                e.std_error.map_or(String::new(), |s| s.to_string()),
                e.exact.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Fitted slope of `ln y` against `ln x`, exposed for callers building their own series.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    fit_line(&lx, &ly)
}
