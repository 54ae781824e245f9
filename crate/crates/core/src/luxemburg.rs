//! Luxemburg norms on finite probability spaces and Monte-Carlo estimates of
//! Hardy-Orlicz and Bergman-Orlicz norms.

use crate::error::{Error, Result};
use crate::geometry::{BallPoint, Sampler};
use crate::orlicz::{OrliczFunction, DEFAULT_INVERSE_TOL};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Read;

pub const DEFAULT_TOL: f64 = 1e-10;

/// `|f|` sampled on a finite probability space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    values: Vec<f64>,
    weights: Vec<f64>,
    label: String,
}

#[derive(Deserialize)]
struct CsvRow {
    value: f64,
    weight: f64,
}

impl SampledFunction {
    pub fn new(values: Vec<f64>, weights: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() || values.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values against {} weights",
                values.len(),
                weights.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("value {v} is not a finite modulus")));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidParameter("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        // summation of n terms of 1/n may drift by a few ulps per term
        let slack = 1e-12f64.max(4.0 * weights.len() as f64 * f64::EPSILON);
        if (total - 1.0).abs() > slack {
            return Err(Error::InvalidParameter(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            values,
            weights,
            label: label.into(),
        })
    }

    pub fn uniform(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let n = values.len().max(1);
        Self::new(values, vec![1.0 / n as f64; n], label)
    }

    /// Reads `value,weight` rows.
    pub fn from_csv<R: Read>(reader: R, label: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let (mut values, mut weights) = (Vec::new(), Vec::new());
        for row in rdr.deserialize() {
            let row: CsvRow = row?;
            values.push(row.value);
            weights.push(row.weight);
        }
        Self::new(values, weights, label)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.values.iter().map(|v| v * lambda.abs()).collect(),
            self.weights.clone(),
            self.label.clone(),
        )
    }
}

/// `Σ w_i ψ(f_i / c)`.
pub fn modular(psi: &OrliczFunction, f: &SampledFunction, c: f64) -> Result<f64> {
    let mut total = 0.0;
    for (v, w) in f.values.iter().zip(&f.weights) {
        total += w * psi.evaluate(v / c)?;
        if total == f64::INFINITY {
            break;
        }
    }
    Ok(total)
}

/// `inf { C > 0 : Σ w_i ψ(|f_i| / C) <= 1 }` by bisection. The result `C` has
/// modular at most 1 while `C (1 - tol)` has modular above 1.
pub fn luxemburg_norm(psi: &OrliczFunction, f: &SampledFunction, tol: f64) -> Result<f64> {
    let m = f.values.iter().copied().fold(0.0, f64::max);
    if m == 0.0 {
        return Ok(0.0);
    }
    let w_min = f.weights.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = m / psi.inverse(1.0, DEFAULT_INVERSE_TOL)?;
    let mut lo = match psi.inverse(1.0 / w_min, DEFAULT_INVERSE_TOL) {
        Ok(x) if x > 0.0 => m / x,
        _ => hi,
    };
    while modular(psi, f, hi)? > 1.0 {
        hi *= 2.0;
    }
    while modular(psi, f, lo)? <= 1.0 {
        if lo < f64::MIN_POSITIVE {
            return Ok(lo);
        }
        hi = lo;
        lo *= 0.5;
    }
    loop {
        let mid = if hi > 2.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            return Ok(hi);
        }
        if modular(psi, f, mid)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol * hi && modular(psi, f, hi)? > 1.0 - 10.0 * tol {
            return Ok(hi);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    /// `(r, ‖f_r‖)` for Hardy estimates; empty for Bergman ones.
    pub per_radius: Vec<(f64, f64)>,
    pub samples: usize,
    pub seed: u64,
}

fn moduli(
    f: &dyn Fn(&BallPoint) -> Complex64,
    points: impl Iterator<Item = BallPoint>,
) -> Result<Vec<f64>> {
    points
        .map(|z| {
            let v = f(&z).norm();
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFiniteSample { point: z.describe() })
            }
        })
        .collect()
}

/// `max_r ‖f(r ·)‖_{L^ψ(σ_N)}` over `r_grid`, with `σ_N` sampled.
pub fn hardy_norm_estimate(
    psi: &OrliczFunction,
    f: &dyn Fn(&BallPoint) -> Complex64,
    n: usize,
    r_grid: &[f64],
    sphere_samples: usize,
    seed: u64,
) -> Result<NormEstimate> {
    if r_grid.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(Error::InvalidParameter("radii must lie in (0, 1)".into()));
    }
    let sphere = Sampler::sphere(n, seed).collect(sphere_samples);
    let mut per_radius = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let vals = moduli(f, sphere.iter().map(|z| z.scaled(r)))?;
        let sampled = SampledFunction::uniform(vals, format!("r={r}"))?;
        per_radius.push((r, luxemburg_norm(psi, &sampled, DEFAULT_TOL)?));
    }
    let value = per_radius.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(NormEstimate {
        value,
        per_radius,
        samples: sphere_samples,
        seed,
    })
}

/// `‖f‖_{L^ψ(v_α)}` with `v_α` sampled.
pub fn bergman_norm_estimate(
    psi: &OrliczFunction,
    f: &dyn Fn(&BallPoint) -> Complex64,
    n: usize,
    alpha: f64,
    ball_samples: usize,
    seed: u64,
) -> Result<NormEstimate> {
    let points = Sampler::ball(n, alpha, seed)?.collect(ball_samples);
    let vals = moduli(f, points.into_iter())?;
    let sampled = SampledFunction::uniform(vals, "bergman")?;
    Ok(NormEstimate {
        value: luxemburg_norm(psi, &sampled, DEFAULT_TOL)?,
        per_radius: Vec::new(),
        samples: ball_samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn power(p: f64) -> OrliczFunction {
        OrliczFunction::power(p).unwrap()
    }

    fn families() -> Vec<OrliczFunction> {
        vec![
            power(1.0),
            power(2.0),
            power(4.0),
            OrliczFunction::exp_power(1.0, 1.0).unwrap(),
            OrliczFunction::exp_power(1.0, 2.0).unwrap(),
            OrliczFunction::log_exp(1.0, 2.0).unwrap(),
        ]
    }

    fn sample(values: Vec<f64>, raw_weights: Vec<f64>) -> SampledFunction {
        let total: f64 = raw_weights.iter().sum();
        let mut weights: Vec<f64> = raw_weights.iter().map(|w| w / total).collect();
        let drift: f64 = 1.0 - weights.iter().sum::<f64>();
        weights[0] += drift;
        SampledFunction::new(values, weights, "test").unwrap()
    }

    #[test]
    fn constant_functions() {
        let f = SampledFunction::uniform(vec![3.0; 10], "c").unwrap();
        for p in [1.0, 2.0, 4.0] {
            assert!((luxemburg_norm(&power(p), &f, 1e-12).unwrap() - 3.0).abs() < 1e-10);
        }
        let e = OrliczFunction::exp_power(1.0, 1.0).unwrap();
        assert!((luxemburg_norm(&e, &f, 1e-12).unwrap() - 3.0 / LN_2).abs() < 1e-9);
    }

    #[test]
    fn half_indicator() {
        let f = SampledFunction::new(vec![1.0, 0.0], vec![0.5, 0.5], "ind").unwrap();
        let n = luxemburg_norm(&power(2.0), &f, 1e-12).unwrap();
        assert!((n - 0.5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn zero_function() {
        let f = SampledFunction::uniform(vec![0.0; 4], "zero").unwrap();
        assert_eq!(luxemburg_norm(&power(2.0), &f, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn validation() {
        assert!(SampledFunction::new(vec![1.0], vec![0.5], "x").is_err());
        assert!(SampledFunction::new(vec![1.0, 2.0], vec![1.0], "x").is_err());
        assert!(SampledFunction::new(vec![f64::NAN], vec![1.0], "x").is_err());
    }

    #[test]
    fn csv_import() {
        let text = "value,weight\n1.0,0.25\n2.0,0.75\n";
        let f = SampledFunction::from_csv(text.as_bytes(), "csv").unwrap();
        assert_eq!(f.values(), &[1.0, 2.0]);
        assert!(SampledFunction::from_csv("value,weight\n1.0,0.5\n".as_bytes(), "bad").is_err());
    }

    #[test]
    fn constant_bergman_and_hardy() {
        let one = |_: &BallPoint| Complex64::new(1.0, 0.0);
        let h = hardy_norm_estimate(&power(2.0), &one, 2, &[0.5, 0.9], 512, 3).unwrap();
        assert!((h.value - 1.0).abs() < 1e-9);
        let e = OrliczFunction::exp_power(1.0, 1.0).unwrap();
        let b = bergman_norm_estimate(&e, &|_: &BallPoint| Complex64::new(2.0, 0.0), 1, 0.0, 512, 3).unwrap();
        assert!((b.value - 2.0 / LN_2).abs() < 1e-8);
        let zero = |_: &BallPoint| Complex64::new(0.0, 0.0);
        assert_eq!(bergman_norm_estimate(&e, &zero, 2, 1.0, 64, 1).unwrap().value, 0.0);
    }

    #[test]
    fn non_finite_values_are_reported() {
        let bad = |_: &BallPoint| Complex64::new(f64::INFINITY, 0.0);
        assert!(matches!(
            bergman_norm_estimate(&power(2.0), &bad, 1, 0.0, 16, 1),
            Err(Error::NonFiniteSample { .. })
        ));
    }

    fn arb_sample() -> impl Strategy<Value = SampledFunction> {
        (1usize..30).prop_flat_map(|n| {
            (
                prop::collection::vec(0.0f64..50.0, n),
                prop::collection::vec(0.01f64..1.0, n),
            )
                .prop_map(|(v, w)| sample(v, w))
        })
    }

    proptest! {
        #[test]
        fn power_equality(f in arb_sample(), pi in 0usize..3) {
            let p = [1.0, 2.0, 4.0][pi];
            let direct: f64 = f.values().iter().zip(f.weights()).map(|(v, w)| w * v.powf(p)).sum::<f64>().powf(1.0 / p);
            let n = luxemburg_norm(&power(p), &f, 1e-10).unwrap();
            prop_assert!((n - direct).abs() <= 1e-8 * direct.max(1e-300));
        }

        #[test]
        fn homogeneity(f in arb_sample(), idx in 0usize..6, li in 0usize..3) {
            let psi = &families()[idx];
            let lambda = [0.5, 2.0, 10.0][li];
            let base = luxemburg_norm(psi, &f, 1e-10).unwrap();
            let scaled = luxemburg_norm(psi, &f.scaled(lambda).unwrap(), 1e-10).unwrap();
            prop_assert!((scaled - lambda * base).abs() <= 3e-10 * lambda * base.max(1e-300));
        }

        #[test]
        fn monotone_in_f(f in arb_sample(), idx in 0usize..6, bump in 0.0f64..5.0) {
            let psi = &families()[idx];
            let g = SampledFunction::new(
                f.values().iter().map(|v| v + bump).collect(),
                f.weights().to_vec(),
                "g",
            ).unwrap();
            let tol = 1e-10;
            let (nf, ng) = (luxemburg_norm(psi, &f, tol).unwrap(), luxemburg_norm(psi, &g, tol).unwrap());
            prop_assert!(nf <= ng * (1.0 + tol));
        }

        #[test]
        fn unit_integral(f in arb_sample(), idx in 0usize..6) {
            let psi = &families()[idx];
            let tol = 1e-10;
            let c = luxemburg_norm(psi, &f, tol).unwrap();
            prop_assume!(c > 0.0);
            let at = modular(psi, &f, c).unwrap();
            prop_assert!(at <= 1.0 && at > 1.0 - 10.0 * tol, "modular {}", at);
            prop_assert!(modular(psi, &f, c * (1.0 - tol)).unwrap() > 1.0);
        }
    }
}
