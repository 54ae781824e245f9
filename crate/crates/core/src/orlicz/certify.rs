//! Growth-class certification on a finite grid.
//!
//! Every inequality is compared in the log domain. A witness constant passes
//! when the inequality holds on a grid suffix covering at least
//! `min_tail_fraction` of the points; a class fails when every candidate
//! constant is violated somewhere in the top decade of the grid.

use super::OrliczFunction;
use crate::error::{Error, Result};
use crate::Verdict;
use serde::{Deserialize, Serialize};

const LOG_TOL: f64 = 1e-9;
const MIN_GRID: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthCondition {
    /// `ψ(βx) >= 2β ψ(x)` for large `x`.
    Nabla2,
    /// For each `B > 1` some `C_B` with `ψ(Bx)/ψ(x) <= ψ(C_B B y)/ψ(y)`, `x <= y`.
    Nabla0,
    /// `Nabla0` with one constant for every `B`.
    UniformNabla0,
    /// `ψ(2x) <= K ψ(x)` for large `x`.
    Delta2,
    /// `ψ(x)^2 <= ψ(Cx)` for large `x`.
    DeltaSharp2,
}

impl GrowthCondition {
    pub const ALL: [GrowthCondition; 5] = [
        Self::Nabla2,
        Self::Nabla0,
        Self::UniformNabla0,
        Self::Delta2,
        Self::DeltaSharp2,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_grid: Vec<f64>,
    pub betas: Vec<f64>,
    pub k_candidates: Vec<f64>,
    pub c_candidates: Vec<f64>,
    pub b_values: Vec<f64>,
    pub cb_candidates: Vec<f64>,
    pub min_tail_fraction: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        let pow2 = |lo: i32, hi: i32| (lo..=hi).map(|k| 2f64.powi(k)).collect::<Vec<_>>();
        let mut cb = vec![1.0];
        cb.extend(pow2(1, 20));
        Self {
            x_grid: pow2(4, 128),
            betas: vec![1.5, 2.0, 4.0],
            k_candidates: pow2(1, 20),
            c_candidates: pow2(1, 20),
            b_values: vec![2.0, 4.0, 8.0, 16.0],
            cb_candidates: cb,
            min_tail_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Nabla2 { beta: f64, x0: f64 },
    Delta2 { k: f64, x0: f64 },
    DeltaSharp2 { c: f64, x0: f64 },
    /// One `(B, C_B, x0)` triple per tested `B`.
    Nabla0 { per_b: Vec<(f64, f64, f64)> },
    UniformNabla0 { c: f64, x0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCertificate {
    pub condition: GrowthCondition,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub test_grid: GridSpec,
    /// Grid points dropped because `ln ψ` was not finite there.
    pub dropped_points: usize,
}

/// Log-domain values needed by every condition, cached per grid.
struct LogTable<'a> {
    psi: &'a OrliczFunction,
    xs: Vec<f64>,
    ln: Vec<f64>,
}

impl<'a> LogTable<'a> {
    fn ln_at(&self, x: f64) -> Result<f64> {
        self.psi.ln_evaluate(x)
    }
}

fn le(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + LOG_TOL * lhs.abs().max(rhs.abs()).max(1.0)
}

/// Per-candidate outcome on the grid.
struct CandidateScan {
    suffix_start: usize,
    top_decade_violation: bool,
}

fn scan(holds: &[bool], xs: &[f64]) -> CandidateScan {
    let n = holds.len();
    let mut start = n;
    while start > 0 && holds[start - 1] {
        start -= 1;
    }
    let x_top = xs[n - 1] / 10.0;
    let top_decade_violation = holds
        .iter()
        .zip(xs)
        .any(|(&h, &x)| !h && x >= x_top);
    CandidateScan {
        suffix_start: start,
        top_decade_violation,
    }
}

fn min_tail(n: usize, fraction: f64) -> usize {
    ((n as f64) * fraction).ceil().max(1.0) as usize
}

/// Picks the passing candidate with the longest suffix, or decides Fail /
/// Inconclusive. Returns `(verdict, Some((candidate index, x0)))`.
fn decide(scans: &[CandidateScan], xs: &[f64], fraction: f64) -> (Verdict, Option<(usize, f64)>) {
    let n = xs.len();
    let need = min_tail(n, fraction);
    let best = scans
        .iter()
        .enumerate()
        .filter(|(_, s)| n - s.suffix_start >= need)
        .min_by_key(|(_, s)| s.suffix_start);
    if let Some((i, s)) = best {
        return (Verdict::Pass, Some((i, xs[s.suffix_start])));
    }
    if !scans.is_empty() && scans.iter().all(|s| s.top_decade_violation) {
        (Verdict::Fail, None)
    } else {
        (Verdict::Inconclusive, None)
    }
}

fn build_table<'a>(psi: &'a OrliczFunction, grid: &GridSpec) -> Result<(LogTable<'a>, usize)> {
    if grid.x_grid.len() < MIN_GRID {
        return Err(Error::GridTooSmall {
            len: grid.x_grid.len(),
            min: MIN_GRID,
        });
    }
    let mut xs = grid.x_grid.clone();
    xs.sort_by(f64::total_cmp);
    let mut kept = Vec::with_capacity(xs.len());
    let mut ln = Vec::with_capacity(xs.len());
    let mut dropped = 0;
    for x in xs {
        match psi.ln_evaluate(x) {
            Ok(v) if v.is_finite() => {
                kept.push(x);
                ln.push(v);
            }
            // tables and saturated exponents leave gaps rather than poisoning comparisons
            Ok(_) | Err(Error::OutsideTable { .. }) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    if kept.len() < MIN_GRID {
        return Err(Error::GridTooSmall {
            len: kept.len(),
            min: MIN_GRID,
        });
    }
    Ok((LogTable { psi, xs: kept, ln }, dropped))
}

/// `ln ψ(s x) - ln ψ(x)` over the table, `None` where the shifted value is not finite.
fn log_ratio(t: &LogTable, s: f64) -> Result<Vec<Option<f64>>> {
    t.xs
        .iter()
        .zip(&t.ln)
        .map(|(&x, &l)| match t.ln_at(s * x) {
            Ok(v) if v.is_finite() => Ok(Some(v - l)),
            Ok(_) | Err(Error::OutsideTable { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

fn nabla2_holds(t: &LogTable, beta: f64) -> Result<Vec<bool>> {
    let target = (2.0 * beta).ln();
    Ok(log_ratio(t, beta)?
        .into_iter()
        .map(|r| r.is_some_and(|r| le(target, r)))
        .collect())
}

fn delta2_holds(t: &LogTable, k: f64) -> Result<Vec<bool>> {
    let bound = k.ln();
    Ok(log_ratio(t, 2.0)?
        .into_iter()
        .map(|r| r.is_some_and(|r| le(r, bound)))
        .collect())
}

fn delta_sharp_holds(t: &LogTable, c: f64) -> Result<Vec<bool>> {
    t.xs
        .iter()
        .zip(&t.ln)
        .map(|(&x, &l)| match t.ln_at(c * x) {
            Ok(v) if v.is_finite() => Ok(le(2.0 * l, v)),
            // ψ(Cx) saturated while ψ(x)^2 is finite in the log domain: the inequality holds
            Ok(v) if v == f64::INFINITY => Ok(true),
            Ok(_) | Err(Error::OutsideTable { .. }) => Ok(false),
            Err(e) => Err(e),
        })
        .collect()
}

/// `sup_{y >= x} ψ(Bx)/ψ(x) <= ψ(C B y)/ψ(y)` at each grid `x`.
fn nabla0_holds(t: &LogTable, b: f64, c: f64) -> Result<Vec<bool>> {
    let lhs = log_ratio(t, b)?;
    let rhs = log_ratio(t, c * b)?;
    let n = lhs.len();
    let mut suffix_min = vec![f64::INFINITY; n + 1];
    for i in (0..n).rev() {
        // an unrepresentable right side is a huge ratio, never the binding one
        let r = rhs[i].unwrap_or(f64::INFINITY);
        suffix_min[i] = suffix_min[i + 1].min(r);
    }
    Ok((0..n)
        .map(|i| lhs[i].is_some_and(|l| le(l, suffix_min[i])))
        .collect())
}

fn certify_single(
    t: &LogTable,
    grid: &GridSpec,
    candidates: &[f64],
    holds: impl Fn(&LogTable, f64) -> Result<Vec<bool>>,
) -> Result<(Verdict, Option<(f64, f64)>)> {
    let scans = candidates
        .iter()
        .map(|&c| holds(t, c).map(|h| scan(&h, &t.xs)))
        .collect::<Result<Vec<_>>>()?;
    let (verdict, pick) = decide(&scans, &t.xs, grid.min_tail_fraction);
    Ok((verdict, pick.map(|(i, x0)| (candidates[i], x0))))
}

/// Certifies one growth condition for `psi` on `grid`.
pub fn certify(
    psi: &OrliczFunction,
    condition: GrowthCondition,
    grid: &GridSpec,
) -> Result<ClassCertificate> {
    let (t, dropped_points) = build_table(psi, grid)?;
    let (verdict, witness) = match condition {
        GrowthCondition::Nabla2 => {
            let (v, w) = certify_single(&t, grid, &grid.betas, nabla2_holds)?;
            (v, w.map(|(beta, x0)| Witness::Nabla2 { beta, x0 }))
        }
        GrowthCondition::Delta2 => {
            let (v, w) = certify_single(&t, grid, &grid.k_candidates, delta2_holds)?;
            (v, w.map(|(k, x0)| Witness::Delta2 { k, x0 }))
        }
        GrowthCondition::DeltaSharp2 => {
            let (v, w) = certify_single(&t, grid, &grid.c_candidates, delta_sharp_holds)?;
            (v, w.map(|(c, x0)| Witness::DeltaSharp2 { c, x0 }))
        }
        GrowthCondition::Nabla0 => {
            let mut per_b = Vec::new();
            let mut verdicts = Vec::new();
            for &b in &grid.b_values {
                let (v, w) =
                    certify_single(&t, grid, &grid.cb_candidates, |t, c| nabla0_holds(t, b, c))?;
                verdicts.push(v);
                if let Some((c, x0)) = w {
                    per_b.push((b, c, x0));
                }
            }
            let verdict = if verdicts.iter().all(|v| *v == Verdict::Pass) {
                Verdict::Pass
            } else if verdicts.contains(&Verdict::Fail) {
                Verdict::Fail
            } else {
                Verdict::Inconclusive
            };
            let witness = (verdict == Verdict::Pass).then_some(Witness::Nabla0 { per_b });
            (verdict, witness)
        }
        GrowthCondition::UniformNabla0 => {
            let holds_all = |t: &LogTable, c: f64| -> Result<Vec<bool>> {
                let mut acc = vec![true; t.xs.len()];
                for &b in &grid.b_values {
                    for (a, h) in acc.iter_mut().zip(nabla0_holds(t, b, c)?) {
                        *a &= h;
                    }
                }
                Ok(acc)
            };
            let (v, w) = certify_single(&t, grid, &grid.cb_candidates, holds_all)?;
            (v, w.map(|(c, x0)| Witness::UniformNabla0 { c, x0 }))
        }
    };
    Ok(ClassCertificate {
        condition,
        verdict,
        witness,
        test_grid: grid.clone(),
        dropped_points,
    })
}

impl ClassCertificate {
    /// Re-checks the stored witness on every stored grid point at or beyond its `x0`.
    pub fn revalidate(&self, psi: &OrliczFunction) -> Result<bool> {
        let Some(witness) = &self.witness else {
            return Ok(self.verdict != Verdict::Pass);
        };
        let (t, _) = build_table(psi, &self.test_grid)?;
        let beyond = |h: Vec<bool>, x0: f64| {
            h.iter().zip(&t.xs).all(|(&ok, &x)| ok || x < x0)
        };
        Ok(match witness {
            Witness::Nabla2 { beta, x0 } => beyond(nabla2_holds(&t, *beta)?, *x0),
            Witness::Delta2 { k, x0 } => beyond(delta2_holds(&t, *k)?, *x0),
            Witness::DeltaSharp2 { c, x0 } => beyond(delta_sharp_holds(&t, *c)?, *x0),
            Witness::Nabla0 { per_b } => {
                let mut ok = true;
                for &(b, c, x0) in per_b {
                    ok &= beyond(nabla0_holds(&t, b, c)?, x0);
                }
                ok
            }
            Witness::UniformNabla0 { c, x0 } => {
                let mut ok = true;
                for &b in &self.test_grid.b_values {
                    ok &= beyond(nabla0_holds(&t, b, *c)?, *x0);
                }
                ok
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Implication {
    UniformNabla0ImpliesNabla2,
    DeltaSharp2ImpliesUniformNabla0,
    UniformNabla0ImpliesNabla0,
}

impl Implication {
    pub const ALL: [Implication; 3] = [
        Self::UniformNabla0ImpliesNabla2,
        Self::DeltaSharp2ImpliesUniformNabla0,
        Self::UniformNabla0ImpliesNabla0,
    ];

    pub fn ends(self) -> (GrowthCondition, GrowthCondition) {
        use GrowthCondition::*;
        match self {
            Self::UniformNabla0ImpliesNabla2 => (UniformNabla0, Nabla2),
            Self::DeltaSharp2ImpliesUniformNabla0 => (DeltaSharp2, UniformNabla0),
            Self::UniformNabla0ImpliesNabla0 => (UniformNabla0, Nabla0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImplicationStatus {
    Consistent,
    /// Premise certified Pass while the conclusion certified Fail.
    Inconsistent,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImplicationRow {
    pub implication: Implication,
    pub status: ImplicationStatus,
}

/// Compares certificates against the known implications between the classes.
pub fn check_implications(certs: &[ClassCertificate]) -> Vec<ImplicationRow> {
    let verdict = |c: GrowthCondition| certs.iter().find(|x| x.condition == c).map(|x| x.verdict);
    Implication::ALL
        .iter()
        .map(|&implication| {
            let (from, to) = implication.ends();
            let status = match (verdict(from), verdict(to)) {
                (Some(Verdict::Pass), Some(Verdict::Pass)) => ImplicationStatus::Consistent,
                (Some(Verdict::Pass), Some(Verdict::Fail)) => ImplicationStatus::Inconsistent,
                (Some(Verdict::Pass), _) => ImplicationStatus::Undetermined,
                (Some(_), _) => ImplicationStatus::Consistent,
                (None, _) => ImplicationStatus::Undetermined,
            };
            ImplicationRow {
                implication,
                status,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdicts(psi: &OrliczFunction) -> Vec<Verdict> {
        let grid = GridSpec::default();
        GrowthCondition::ALL
            .iter()
            .map(|&c| certify(psi, c, &grid).unwrap().verdict)
            .collect()
    }

    #[test]
    fn power_classes() {
        use Verdict::*;
        // order: Nabla2, Nabla0, UniformNabla0, Delta2, DeltaSharp2
        let psi = OrliczFunction::power(2.0).unwrap();
        assert_eq!(verdicts(&psi), vec![Pass, Pass, Pass, Pass, Fail]);
    }

    #[test]
    fn exp_power_classes() {
        use Verdict::*;
        let psi = OrliczFunction::exp_power(1.0, 2.0).unwrap();
        assert_eq!(verdicts(&psi), vec![Pass, Pass, Pass, Fail, Pass]);
    }

    #[test]
    fn log_exp_classes() {
        use Verdict::*;
        let psi = OrliczFunction::log_exp(1.0, 2.0).unwrap();
        let v = verdicts(&psi);
        assert_eq!(v[0], Pass);
        assert_eq!(v[3], Fail);
        assert_eq!(v[4], Fail);
    }

    #[test]
    fn witnesses_revalidate() {
        let grid = GridSpec::default();
        for psi in [
            OrliczFunction::power(3.0).unwrap(),
            OrliczFunction::exp_power(1.0, 1.0).unwrap(),
            OrliczFunction::log_exp(1.0, 2.0).unwrap(),
        ] {
            for c in GrowthCondition::ALL {
                let cert = certify(&psi, c, &grid).unwrap();
                assert!(cert.revalidate(&psi).unwrap(), "{} {c:?}", psi.label());
            }
        }
    }

    #[test]
    fn small_grid_rejected() {
        let grid = GridSpec {
            x_grid: vec![16.0, 32.0, 64.0],
            ..GridSpec::default()
        };
        let psi = OrliczFunction::power(2.0).unwrap();
        assert!(matches!(
            certify(&psi, GrowthCondition::Delta2, &grid),
            Err(Error::GridTooSmall { .. })
        ));
    }

    #[test]
    fn implication_rows() {
        let grid = GridSpec::default();
        let psi = OrliczFunction::exp_power(1.0, 2.0).unwrap();
        let certs: Vec<_> = GrowthCondition::ALL
            .iter()
            .map(|&c| certify(&psi, c, &grid).unwrap())
            .collect();
        let rows = check_implications(&certs);
        assert!(rows.iter().all(|r| r.status == ImplicationStatus::Consistent));
        assert!(check_implications(&[])
            .iter()
            .all(|r| r.status == ImplicationStatus::Undetermined));
    }
}
