//! Breakpoint sequences and piecewise-affine concave majorants built from a
//! pair of increasing unbounded functions `f`, `g`, so that
//! `v(f(x)) / v(g(x))` stays bounded below.

use crate::error::{Error, Result};
use crate::orlicz::OrliczFunction;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonotoneKind {
    /// `x^q`, `q > 0`.
    Power { q: f64 },
    /// `e^{a x}`, `a > 0`.
    Exp { a: f64 },
    /// `ln(1 + x)`.
    Log,
    /// Linear interpolation of strictly increasing `(x, y)` pairs.
    Tabulated { points: Vec<(f64, f64)> },
}

/// An increasing function on `[0, x_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMonotone")]
pub struct MonotoneFunctionSpec {
    kind: MonotoneKind,
    x_max: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMonotone {
    kind: MonotoneKind,
    x_max: Option<f64>,
}

impl TryFrom<RawMonotone> for MonotoneFunctionSpec {
    type Error = Error;
    fn try_from(raw: RawMonotone) -> Result<Self> {
        match raw.x_max {
            Some(x_max) => Self::new(raw.kind, x_max),
            None => Self::unbounded(raw.kind),
        }
    }
}

impl MonotoneFunctionSpec {
    pub fn new(kind: MonotoneKind, x_max: f64) -> Result<Self> {
        if !(x_max > 0.0) {
            return Err(Error::InvalidParameter("x_max must be positive".into()));
        }
        match &kind {
            MonotoneKind::Power { q } if !(q.is_finite() && *q > 0.0) => {
                return Err(Error::InvalidParameter("power form needs q > 0".into()))
            }
            MonotoneKind::Exp { a } if !(a.is_finite() && *a > 0.0) => {
                return Err(Error::InvalidParameter("exp form needs a > 0".into()))
            }
            MonotoneKind::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidParameter(
                        "tabulated function needs two points".into(),
                    ));
                }
                for w in points.windows(2) {
                    if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                        return Err(Error::NotMonotone(format!(
                            "entries {:?} and {:?}",
                            w[0], w[1]
                        )));
                    }
                }
                if points[0].0 > 0.0 || points.last().unwrap().0 < x_max {
                    return Err(Error::InvalidParameter(
                        "table must cover [0, x_max]".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(Self { kind, x_max })
    }

    /// Closed forms on `[0, f64::MAX]`; tables on their own extent.
    pub fn unbounded(kind: MonotoneKind) -> Result<Self> {
        let x_max = match &kind {
            MonotoneKind::Tabulated { points } => points.last().map_or(0.0, |p| p.0),
            _ => f64::MAX,
        };
        Self::new(kind, x_max)
    }

    pub fn power(q: f64) -> Result<Self> {
        Self::unbounded(MonotoneKind::Power { q })
    }

    pub fn tabulate(f: impl Fn(f64) -> f64, xs: &[f64]) -> Result<Self> {
        let points = xs.iter().map(|&x| (x, f(x))).collect();
        Self::unbounded(MonotoneKind::Tabulated { points })
    }

    pub fn kind(&self) -> &MonotoneKind {
        &self.kind
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn label(&self) -> String {
        match &self.kind {
            MonotoneKind::Power { q } => format!("x^{q}"),
            MonotoneKind::Exp { a } => format!("exp({a}x)"),
            MonotoneKind::Log => "ln(1+x)".to_string(),
            MonotoneKind::Tabulated { points } => format!("tabulated({} points)", points.len()),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=self.x_max).contains(&x) {
            return Err(Error::OutsideTable {
                x,
                lo: 0.0,
                hi: self.x_max,
            });
        }
        Ok(match &self.kind {
            MonotoneKind::Power { q } => x.powf(*q),
            MonotoneKind::Exp { a } => (a * x).exp(),
            MonotoneKind::Log => x.ln_1p(),
            MonotoneKind::Tabulated { points } => interp(points, x, |p| p.0, |p| p.1),
        })
    }

    /// Largest `x` in the domain with `self(x) <= y`, or `None` when `y` is
    /// beyond the range over the domain.
    pub fn sup_preimage(&self, y: f64) -> Option<f64> {
        let guess = match &self.kind {
            MonotoneKind::Power { q } => y.max(0.0).powf(1.0 / q),
            MonotoneKind::Exp { a } => {
                if y < 1.0 {
                    return None;
                }
                y.ln() / a
            }
            MonotoneKind::Log => y.exp_m1(),
            MonotoneKind::Tabulated { points } => {
                if y > points.last().unwrap().1 {
                    return None;
                }
                if y < points[0].1 {
                    return None;
                }
                interp(points, y, |p| p.1, |p| p.0)
            }
        };
        if !guess.is_finite() || guess > self.x_max {
            return None;
        }
        // snap to the last float whose image stays at or below y
        let mut x = guess;
        for _ in 0..64 {
            let up = x.next_up();
            if up > self.x_max || self.eval(up).ok()? > y {
                break;
            }
            x = up;
        }
        while x > 0.0 && self.eval(x).ok()? > y {
            x = x.next_down();
        }
        Some(x)
    }
}

fn interp<T>(points: &[T], at: f64, key: impl Fn(&T) -> f64, val: impl Fn(&T) -> f64) -> f64 {
    let i = points.partition_point(|p| key(p) <= at);
    if i == 0 {
        return val(&points[0]);
    }
    if i >= points.len() {
        return val(points.last().unwrap());
    }
    let (k0, k1) = (key(&points[i - 1]), key(&points[i]));
    let (v0, v1) = (val(&points[i - 1]), val(&points[i]));
    v0 + (v1 - v0) * (at - k0) / (k1 - k0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    /// `f^{-1}(a_{n+1})` left the domain while computing `a_{last_n + 1}`.
    ExhaustedDomain { last_n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakpointSequence {
    /// `a_0, a_1, ...`
    pub a: Vec<f64>,
    /// `b_n = sup { g(x) : f(x) <= a_{n-1} }` for `n >= 2`; `b[0]`, `b[1]` are unused.
    pub b: Vec<f64>,
    /// Preimages `x_n` with `b_n = g(x_n)`.
    pub preimages: Vec<f64>,
    pub stop: StopReason,
}

/// Runs the recurrence `a_{n+2} = max(g(f^{-1}(a_{n+1})), 2 a_{n+1} - a_n)`
/// from `a_0 = 0`, `a_1 = 1` up to `a_{n_max}`.
pub fn build_sequence(
    f: &MonotoneFunctionSpec,
    g: &MonotoneFunctionSpec,
    n_max: usize,
) -> Result<BreakpointSequence> {
    if n_max < 3 {
        return Err(Error::InvalidParameter(format!(
            "n_max must be at least 3, got {n_max}"
        )));
    }
    let mut a = vec![0.0, 1.0];
    let mut b = vec![f64::NAN, f64::NAN];
    let mut preimages = vec![f64::NAN, f64::NAN];
    let mut stop = StopReason::Completed;
    while a.len() <= n_max {
        let n = a.len() - 2;
        let x = match f.sup_preimage(a[n + 1]) {
            Some(x) if x <= g.x_max() => x,
            _ => {
                stop = StopReason::ExhaustedDomain { last_n: n + 1 };
                break;
            }
        };
        let bn = g.eval(x)?;
        let spacing = a[n + 1] + (a[n + 1] - a[n]);
        let next = bn.max(spacing);
        if !next.is_finite() {
            stop = StopReason::ExhaustedDomain { last_n: n + 1 };
            break;
        }
        a.push(next);
        b.push(bn);
        preimages.push(x);
    }
    Ok(BreakpointSequence {
        a,
        b,
        preimages,
        stop,
    })
}

impl BreakpointSequence {
    /// `a_{n+2} - a_{n+1} >= a_{n+1} - a_n >= 1` at every stored index; returns the failing `n`.
    pub fn check_spacing(&self) -> Option<usize> {
        let a = &self.a;
        (0..a.len().saturating_sub(1)).find(|&n| {
            let d = a[n + 1] - a[n];
            let grows = n + 2 >= a.len() || a[n + 2] - a[n + 1] >= d;
            !(d >= 1.0 && grows)
        })
    }

    /// For every grid `x` with `f(x) <= a_{n+1}`, checks `g(x) <= a_{n+2}`; returns the
    /// first failing `(n, x)`.
    pub fn check_domination(
        &self,
        f: &MonotoneFunctionSpec,
        g: &MonotoneFunctionSpec,
        x_grid: &[f64],
    ) -> Result<Option<(usize, f64)>> {
        for n in 0..self.a.len().saturating_sub(2) {
            for &x in x_grid {
                if x > f.x_max() || x > g.x_max() {
                    continue;
                }
                if f.eval(x)? <= self.a[n + 1] && g.eval(x)? > self.a[n + 2] {
                    return Ok(Some((n, x)));
                }
            }
        }
        Ok(None)
    }
}

/// Piecewise-affine concave increasing `v` with `v(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMajorant")]
pub struct ConcaveMajorant {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    values: Vec<f64>,
    #[serde(default)]
    strictified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMajorant {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    values: Option<Vec<f64>>,
    #[serde(default)]
    strictified: bool,
    provenance: Option<String>,
}

impl TryFrom<RawMajorant> for ConcaveMajorant {
    type Error = Error;
    fn try_from(raw: RawMajorant) -> Result<Self> {
        let mut v = ConcaveMajorant::from_slopes(raw.breakpoints, raw.slopes)?;
        if let Some(values) = raw.values {
            if values.len() != v.values.len()
                || values
                    .iter()
                    .zip(&v.values)
                    .any(|(a, b)| (a - b).abs() > 1e-12 * b.abs().max(1.0))
            {
                return Err(Error::InvalidParameter(
                    "stored values disagree with breakpoints and slopes".into(),
                ));
            }
            v.values = values;
        }
        v.strictified = raw.strictified;
        v.provenance = raw.provenance;
        Ok(v)
    }
}

impl ConcaveMajorant {
    /// Builds `v` from breakpoints `0 = a_0 < a_1 < ...` and nonincreasing positive slopes.
    pub fn from_slopes(breakpoints: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || slopes.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidParameter(
                "need m + 1 breakpoints and m slopes, m >= 1".into(),
            ));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidParameter("first breakpoint must be 0".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0] && w[1].is_finite())) {
            return Err(Error::NotMonotone("breakpoints".into()));
        }
        if slopes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter("slopes must be positive".into()));
        }
        if slopes.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::NotMonotone("slopes must be nonincreasing".into()));
        }
        let mut values = vec![0.0];
        for (i, s) in slopes.iter().enumerate() {
            values.push(values[i] + s * (breakpoints[i + 1] - breakpoints[i]));
        }
        Ok(Self {
            breakpoints,
            slopes,
            values,
            strictified: false,
            provenance: None,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// `v(a_n)` for every breakpoint.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_strictified(&self) -> bool {
        self.strictified
    }

    pub fn provenance(&self) -> Option<&str> {
        self.provenance.as_deref()
    }

    pub fn with_provenance(mut self, text: impl Into<String>) -> Self {
        self.provenance = Some(text.into());
        self
    }

    fn segment(knots: &[f64], x: f64) -> usize {
        knots.partition_point(|&k| k <= x).saturating_sub(1).min(knots.len() - 2)
    }

    /// `v(x)`; beyond the last breakpoint `v` continues with the last slope.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let i = Self::segment(&self.breakpoints, x);
        self.values[i] + self.slopes[i] * (x - self.breakpoints[i])
    }

    /// `v^{-1}(y)`.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let i = Self::segment(&self.values, y);
        self.breakpoints[i] + (y - self.values[i]) / self.slopes[i]
    }

    /// Copy with slopes divided by `1 + 1e-6 n`, making them strictly decreasing.
    pub fn strictified(&self) -> Self {
        let slopes: Vec<f64> = self
            .slopes
            .iter()
            .enumerate()
            .map(|(n, s)| s / (1.0 + 1e-6 * n as f64))
            .collect();
        let mut out = Self::from_slopes(self.breakpoints.clone(), slopes)
            .expect("scaling keeps slopes positive and nonincreasing");
        out.strictified = true;
        out.provenance = self.provenance.clone();
        out
    }

    /// First `n >= 1` at which `v(a_{n+1}) - v(a_n)` differs from `1/sqrt(n)` by more
    /// than two ulps of `v(a_{n+1})`.
    pub fn check_increments(&self) -> Option<usize> {
        (1..self.values.len() - 1).find(|&n| {
            let step = self.values[n + 1] - self.values[n];
            let ulp = self.values[n + 1].next_up() - self.values[n + 1];
            (step - 1.0 / (n as f64).sqrt()).abs() > 2.0 * ulp
        })
    }
}

/// `v` with slope 1 on `(a_0, a_1)` and `ε_n = 1/(sqrt(n)(a_{n+1} - a_n))` after.
pub fn build_v(seq: &BreakpointSequence) -> Result<ConcaveMajorant> {
    let a = &seq.a;
    if a.len() < 3 || a[0] != 0.0 || a[1] != 1.0 {
        return Err(Error::InvalidParameter(
            "sequence must start 0, 1 and have at least three terms".into(),
        ));
    }
    if let Some(n) = seq.check_spacing() {
        return Err(Error::NotMonotone(format!("spacing fails at n = {n}")));
    }
    let mut slopes = vec![1.0];
    let mut values = vec![0.0, 1.0];
    for n in 1..a.len() - 1 {
        let inc = 1.0 / (n as f64).sqrt();
        slopes.push(inc / (a[n + 1] - a[n]));
        values.push(values[n] + inc);
    }
    let mut v = ConcaveMajorant::from_slopes(a.clone(), slopes)?;
    // telescoped values are exact partial sums; the slope-accumulated ones only agree to rounding
    v.values = values;
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioDelta {
    /// Minimum of `v(f(x)) / v(g(x))` over usable grid points.
    pub delta_hat: f64,
    pub argmin_x: f64,
    /// Index `n` with `a_n <= f(argmin) < a_{n+1}`.
    pub bracket_n: usize,
    /// `v(a_n) / v(a_{n+2})` at the argmin bracket, when `a_{n+2}` was built.
    pub structural_bound: Option<f64>,
    /// `Σ_{k<=n} k^{-1/2} / Σ_{k<=n+2} k^{-1/2}` at the argmin bracket.
    pub partial_sum_bound: f64,
    pub points_used: usize,
    /// Grid points dropped for lying before `f(x) = 1` or beyond the built range.
    pub points_truncated: usize,
}

/// `Σ_{k=1}^{n} k^{-1/2}`.
pub fn partial_sum(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / (k as f64).sqrt()).sum()
}

pub fn ratio_delta(
    v: &ConcaveMajorant,
    f: &MonotoneFunctionSpec,
    g: &MonotoneFunctionSpec,
    x_grid: &[f64],
) -> Result<RatioDelta> {
    let a = v.breakpoints();
    let a_last = *a.last().unwrap();
    let mut best: Option<(f64, f64, f64)> = None;
    let mut used = 0;
    let mut truncated = 0;
    for &x in x_grid {
        if x > f.x_max() || x > g.x_max() {
            truncated += 1;
            continue;
        }
        let (fx, gx) = (f.eval(x)?, g.eval(x)?);
        if fx < 1.0 || fx > a_last || gx > a_last {
            truncated += 1;
            continue;
        }
        used += 1;
        let ratio = v.eval(fx) / v.eval(gx);
        if best.is_none_or(|(r, _, _)| ratio < r) {
            best = Some((ratio, x, fx));
        }
    }
    let Some((delta_hat, argmin_x, f_at)) = best else {
        return Err(Error::InvalidParameter(
            "no grid point lies within the built range".into(),
        ));
    };
    let bracket_n = a.partition_point(|&an| an <= f_at).saturating_sub(1);
    let vals = v.values();
    let structural_bound = vals.get(bracket_n + 2).map(|&top| vals[bracket_n] / top);
    Ok(RatioDelta {
        delta_hat,
        argmin_x,
        bracket_n,
        structural_bound,
        partial_sum_bound: partial_sum(bracket_n) / partial_sum(bracket_n + 2),
        points_used: used,
        points_truncated: truncated,
    })
}

/// `ψ = v^{-1}`.
pub fn orlicz_from_v(v: &ConcaveMajorant) -> Result<OrliczFunction> {
    if v.breakpoints().len() < 4 {
        return Err(Error::InvalidParameter(
            "need at least four breakpoints".into(),
        ));
    }
    Ok(OrliczFunction::PiecewiseAffineInverse(v.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> MonotoneFunctionSpec {
        MonotoneFunctionSpec::power(1.0).unwrap()
    }

    fn x2() -> MonotoneFunctionSpec {
        MonotoneFunctionSpec::power(2.0).unwrap()
    }

    #[test]
    fn identity_pair_gives_integers() {
        let seq = build_sequence(&x(), &x(), 12).unwrap();
        let expect: Vec<f64> = (0..=12).map(|n| n as f64).collect();
        assert_eq!(seq.a, expect);
        assert_eq!(seq.stop, StopReason::Completed);
    }

    #[test]
    fn square_pair_prefix() {
        let seq = build_sequence(&x(), &x2(), 7).unwrap();
        assert_eq!(&seq.a[..6], &[0.0, 1.0, 2.0, 4.0, 16.0, 256.0]);
        assert_eq!(seq.a[6], 65536.0);
        let seq = build_sequence(&x2(), &x(), 9).unwrap();
        assert_eq!(seq.a, (0..=9).map(|n| n as f64).collect::<Vec<_>>());
    }

    #[test]
    fn exhausted_domain_is_reported() {
        let xs: Vec<f64> = (0..=500).map(|i| i as f64 * 0.1).collect();
        let g = MonotoneFunctionSpec::tabulate(f64::exp, &xs).unwrap();
        let seq = build_sequence(&x(), &g, 10).unwrap();
        assert_eq!(seq.stop, StopReason::ExhaustedDomain { last_n: 4 });
        assert_eq!(seq.a.len(), 5);
    }

    #[test]
    fn too_short_request() {
        assert!(build_sequence(&x(), &x(), 2).is_err());
    }

    #[test]
    fn non_monotone_table() {
        let kind = MonotoneKind::Tabulated {
            points: vec![(0.0, 0.0), (1.0, 2.0), (2.0, 1.0)],
        };
        assert!(matches!(
            MonotoneFunctionSpec::unbounded(kind),
            Err(Error::NotMonotone(_))
        ));
    }

    #[test]
    fn v_values_and_concavity() {
        let seq = build_sequence(&x(), &x(), 10).unwrap();
        let v = build_v(&seq).unwrap();
        assert_eq!(v.eval(0.0), 0.0);
        assert_eq!(v.eval(1.0), 1.0);
        assert!(v.check_increments().is_none());
        // v(a_n) = 1 + Σ_{k<n} k^{-1/2}
        for n in 1..=10 {
            let expect = 1.0 + partial_sum(n - 1);
            assert!((v.values()[n] - expect).abs() < 1e-14);
        }
        let s = v.slopes();
        assert!(s.windows(2).all(|w| w[1] <= w[0]));
        assert!(s[1..].windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn strictification_is_strict() {
        let seq = build_sequence(&x(), &x(), 10).unwrap();
        let v = build_v(&seq).unwrap().strictified();
        assert!(v.is_strictified());
        assert!(v.slopes().windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn inverse_round_trip() {
        let seq = build_sequence(&x(), &x2(), 8).unwrap();
        let v = build_v(&seq).unwrap();
        for &y in &[0.0, 0.3, 1.0, 2.5, 4.0, 5.5, 100.0] {
            let back = v.eval(v.inverse(y));
            assert!((back - y).abs() <= 1e-12 * y.max(1.0), "{y} {back}");
        }
    }

    #[test]
    fn ratio_fixture() {
        assert!((partial_sum(10) / partial_sum(12) - 0.894_82).abs() < 1e-5);
        let seq = build_sequence(&x(), &x(), 12).unwrap();
        let v = build_v(&seq).unwrap();
        let grid: Vec<f64> = (1..=40).map(|i| i as f64 * 0.25).collect();
        let r = ratio_delta(&v, &x(), &x(), &grid).unwrap();
        assert_eq!(r.delta_hat, 1.0);
    }

    #[test]
    fn json_round_trip() {
        let seq = build_sequence(&x(), &x2(), 6).unwrap();
        let v = build_v(&seq).unwrap().with_provenance("f=x, g=x^2");
        let text = serde_json::to_string(&v).unwrap();
        let back: ConcaveMajorant = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
        let psi: OrliczFunction = serde_json::from_str(&format!(
            r#"{{"family":"piecewise_affine_inverse","params":{text}}}"#
        ))
        .unwrap();
        assert_eq!(psi.evaluate(1.0).unwrap(), 1.0);
    }
}
