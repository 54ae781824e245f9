//! Points, approach regions, windows and sampling measures on the unit ball
//! of `C^N`.

use crate::error::{Error, Result};
use crate::rng::{tags, Draws, SampleStream};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::FRAC_PI_2;
use std::io::Write;

/// Slack allowed on `|z| <= 1` for points produced by normalization.
const NORM_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    coords: Vec<Complex64>,
    norm: f64,
}

fn euclidean_norm(coords: &[Complex64]) -> f64 {
    coords.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

impl BallPoint {
    /// A point of the closed ball.
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("a point needs at least one coordinate".into()));
        }
        let norm = euclidean_norm(&coords);
        if !(norm <= 1.0 + NORM_SLACK) {
            return Err(Error::InvalidParameter(format!(
                "point of norm {norm} lies outside the closed ball"
            )));
        }
        Ok(Self { coords, norm })
    }

    /// Builds a point without the closed-ball check, for images that callers validate.
    pub(crate) fn unchecked(coords: Vec<Complex64>) -> Self {
        let norm = euclidean_norm(&coords);
        Self { coords, norm }
    }

    pub fn from_real(coords: &[f64]) -> Result<Self> {
        Self::new(coords.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn origin(dim: usize) -> Self {
        Self::unchecked(vec![Complex64::new(0.0, 0.0); dim])
    }

    /// The unit vector `e_1` of `C^dim`.
    pub fn e1(dim: usize) -> Self {
        let mut coords = vec![Complex64::new(0.0, 0.0); dim];
        coords[0] = Complex64::new(1.0, 0.0);
        Self::unchecked(coords)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_interior(&self) -> bool {
        self.norm < 1.0
    }

    pub fn is_unit(&self) -> bool {
        (self.norm - 1.0).abs() <= NORM_SLACK
    }

    /// `<z, w> = Σ z_i conj(w_i)`.
    pub fn inner(&self, other: &BallPoint) -> Complex64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn scaled(&self, r: f64) -> Self {
        Self::unchecked(self.coords.iter().map(|c| c * r).collect())
    }

    /// `z / |z|`, or `None` at the origin.
    pub fn direction(&self) -> Option<Self> {
        (self.norm > 0.0).then(|| self.scaled(1.0 / self.norm))
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self
            .coords
            .iter()
            .map(|c| format!("{}{:+}i", c.re, c.im))
            .collect();
        format!("({})", parts.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Space {
    Hardy,
    Bergman { alpha: f64 },
}

impl Space {
    pub fn bergman(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > -1.0) {
            return Err(Error::InvalidParameter(format!("weight alpha = {alpha} must exceed -1")));
        }
        Ok(Self::Bergman { alpha })
    }

    pub fn label(&self) -> String {
        match self {
            Space::Hardy => "hardy".into(),
            Space::Bergman { alpha } => format!("bergman(alpha={alpha})"),
        }
    }
}

/// Window-scaling exponent: `N + α + 1` for weighted Bergman spaces, `N` for Hardy.
pub fn n_alpha(n: usize, space: Space) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    match space {
        Space::Hardy => Ok(n as f64),
        Space::Bergman { alpha } => {
            Space::bergman(alpha)?;
            Ok(n as f64 + alpha + 1.0)
        }
    }
}

fn unit_center(zeta: BallPoint) -> Result<BallPoint> {
    if !zeta.is_unit() {
        return Err(Error::InvalidParameter(format!(
            "center must be a unit vector, has norm {}",
            zeta.norm()
        )));
    }
    Ok(zeta)
}

/// `{ z : |1 - <z, ζ>| < (a/2)(1 - |z|^2) }`; `a = +inf` is the whole ball.
#[derive(Debug, Clone, PartialEq)]
pub struct KoranyiRegion {
    zeta: BallPoint,
    aperture: f64,
}

impl KoranyiRegion {
    pub fn new(zeta: BallPoint, aperture: f64) -> Result<Self> {
        if !(aperture > 1.0) {
            return Err(Error::InvalidParameter(format!("aperture {aperture} must exceed 1")));
        }
        Ok(Self {
            zeta: unit_center(zeta)?,
            aperture,
        })
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn contains(&self, z: &BallPoint) -> bool {
        if self.aperture == f64::INFINITY {
            return z.is_interior();
        }
        if !z.is_interior() {
            return false;
        }
        let lhs = (Complex64::new(1.0, 0.0) - z.inner(&self.zeta)).norm();
        lhs < 0.5 * self.aperture * (1.0 - z.norm() * z.norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// Points of the open ball only.
    Open,
    /// Points of the closed ball.
    Closed,
}

/// `{ z : |1 - <z, ζ>| < h }`.
#[derive(Debug, Clone, PartialEq)]
pub struct CarlesonWindow {
    zeta: BallPoint,
    h: f64,
    closure: Closure,
}

impl CarlesonWindow {
    pub fn new(zeta: BallPoint, h: f64, closure: Closure) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidParameter(format!("window size h = {h} must lie in (0, 1)")));
        }
        Ok(Self {
            zeta: unit_center(zeta)?,
            h,
            closure,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn zeta(&self) -> &BallPoint {
        &self.zeta
    }

    pub fn contains(&self, z: &BallPoint) -> bool {
        let admissible = match self.closure {
            Closure::Open => z.is_interior(),
            Closure::Closed => z.norm() <= 1.0 + NORM_SLACK,
        };
        admissible && window_distance(z, &self.zeta) < self.h
    }
}

/// `|1 - <z, ζ>|`.
pub fn window_distance(z: &BallPoint, zeta: &BallPoint) -> f64 {
    (Complex64::new(1.0, 0.0) - z.inner(zeta)).norm()
}

/// The shell `r0 < |z| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corona {
    r0: f64,
}

impl Corona {
    pub fn new(r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0 < 1.0) {
            return Err(Error::InvalidParameter(format!("corona radius {r0} must lie in (0, 1)")));
        }
        Ok(Self { r0 })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn contains(&self, z: &BallPoint) -> bool {
        self.r0 < z.norm() && z.is_interior()
    }
}

/// `1 / cos(π / 2N)`, with `+inf` for `N = 1`.
pub fn koranyi_aperture_bound(n: usize) -> f64 {
    if n <= 1 {
        f64::INFINITY
    } else {
        1.0 / (FRAC_PI_2 / n as f64).cos()
    }
}

/// Normalizer making `c_α (1 - |z|^2)^α dv` a probability measure.
pub fn c_alpha(n: usize, alpha: f64) -> f64 {
    let n = n as f64;
    (ln_gamma(n + alpha + 1.0) - ln_gamma(n + 1.0) - ln_gamma(alpha + 1.0)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureKind {
    SphereSigma,
    BallWeighted { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub n: usize,
    pub c_alpha: Option<f64>,
}

impl MeasureSpec {
    pub fn for_space(n: usize, space: Space) -> Result<Self> {
        n_alpha(n, space)?;
        Ok(match space {
            Space::Hardy => Self {
                kind: MeasureKind::SphereSigma,
                n,
                c_alpha: None,
            },
            Space::Bergman { alpha } => Self {
                kind: MeasureKind::BallWeighted { alpha },
                n,
                c_alpha: Some(c_alpha(n, alpha)),
            },
        })
    }
}

const RADIAL_NODES: usize = 4096;
const RADIAL_S_MIN: f64 = 1e-12;

/// Law of `s = 1 - |z|^2` under `v_α`, i.e. `Beta(α + 1, N)`, inverted through a
/// log-log spline of its CDF.
#[derive(Debug, Clone)]
pub struct RadialLaw {
    n: usize,
    alpha: f64,
    ln_s: Vec<f64>,
    ln_cdf: Vec<f64>,
}

impl RadialLaw {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        Space::bergman(alpha)?;
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        let (a, b) = (alpha + 1.0, n as f64);
        let lo = RADIAL_S_MIN.ln();
        let step = -lo / (RADIAL_NODES - 1) as f64;
        let mut ln_s = Vec::with_capacity(RADIAL_NODES);
        let mut ln_cdf = Vec::with_capacity(RADIAL_NODES);
        for k in 0..RADIAL_NODES {
            let ls = if k + 1 == RADIAL_NODES { 0.0 } else { lo + step * k as f64 };
            let g = if k + 1 == RADIAL_NODES { 1.0 } else { beta_reg(a, b, ls.exp()) };
            ln_s.push(ls);
            ln_cdf.push(g.ln());
        }
        for k in 1..RADIAL_NODES {
            if !(ln_cdf[k] > ln_cdf[k - 1]) {
                return Err(Error::NotMonotone(format!(
                    "radial CDF table for N = {n}, alpha = {alpha} at node {k}"
                )));
            }
        }
        Ok(Self {
            n,
            alpha,
            ln_s,
            ln_cdf,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `P(|z| <= r)` from the regularized incomplete beta function.
    pub fn radius_cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= 1.0 {
            return 1.0;
        }
        beta_reg(self.n as f64, self.alpha + 1.0, r * r)
    }

    /// `P(1 - |z|^2 <= s)`.
    pub fn tail_cdf(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        beta_reg(self.alpha + 1.0, self.n as f64, s)
    }

    /// The `s` with `P(1 - |z|^2 <= s) = q`, for `q` in `(0, 1]`.
    pub fn tail_quantile(&self, q: f64) -> f64 {
        let lq = q.ln();
        let s = if lq <= self.ln_cdf[0] {
            // G(s) ~ c s^{α+1} near 0
            (self.ln_s[0] + (lq - self.ln_cdf[0]) / (self.alpha + 1.0)).exp()
        } else if lq >= 0.0 {
            1.0
        } else {
            let k = self.ln_cdf.partition_point(|&g| g <= lq).min(RADIAL_NODES - 1);
            let (g0, g1) = (self.ln_cdf[k - 1], self.ln_cdf[k]);
            let (s0, s1) = (self.ln_s[k - 1], self.ln_s[k]);
            (s0 + (lq - g0) * (s1 - s0) / (g1 - g0)).exp()
        };
        // keep 1 - s representable below 1
        s.clamp(4.0 * f64::EPSILON, 1.0)
    }

    /// Radius whose tail variable has CDF value `q`.
    pub fn radius_from_tail(&self, q: f64) -> f64 {
        (1.0 - self.tail_quantile(q)).sqrt()
    }
}

/// Point on the unit sphere of `C^n` from `2n` draws.
pub fn sphere_point(n: usize, draws: &mut Draws) -> BallPoint {
    loop {
        let coords: Vec<Complex64> = (0..n)
            .map(|_| {
                let (x, y) = draws.normal_pair();
                Complex64::new(x, y)
            })
            .collect();
        let norm = euclidean_norm(&coords);
        // Box-Muller with u1 in (0, 1] cannot return all zeros except with u1 = 1 in every pair
        if norm > 0.0 {
            return BallPoint::unchecked(coords.into_iter().map(|c| c / norm).collect());
        }
    }
}

/// Reproducible sampler for `σ_N` or `v_α`. Sample `i` depends only on `(seed, i)`.
#[derive(Debug, Clone)]
pub struct Sampler {
    n: usize,
    radial: Option<RadialLaw>,
    stream: SampleStream,
}

impl Sampler {
    pub fn sphere(n: usize, seed: u64) -> Self {
        Self {
            n,
            radial: None,
            stream: SampleStream::new(seed, tags::SPHERE, 2 * n as u64),
        }
    }

    pub fn ball(n: usize, alpha: f64, seed: u64) -> Result<Self> {
        Ok(Self {
            n,
            radial: Some(RadialLaw::new(n, alpha)?),
            stream: SampleStream::new(seed, tags::BALL, 2 * n as u64 + 1),
        })
    }

    pub fn for_space(n: usize, space: Space, seed: u64) -> Result<Self> {
        match space {
            Space::Hardy => Ok(Self::sphere(n, seed)),
            Space::Bergman { alpha } => Self::ball(n, alpha, seed),
        }
    }

    /// Same law on a different stream tag.
    pub fn with_tag(mut self, seed: u64, tag: u64) -> Self {
        self.stream = SampleStream::new(seed, tag, self.stream.draws_per_sample());
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radial(&self) -> Option<&RadialLaw> {
        self.radial.as_ref()
    }

    /// Calls `visit(i, z)` for samples `start..start + count`.
    pub fn for_each(&self, start: u64, count: u64, mut visit: impl FnMut(u64, BallPoint)) {
        let mut draws = self.stream.at(start);
        for i in start..start + count {
            let dir = sphere_point(self.n, &mut draws);
            let z = match &self.radial {
                None => dir,
                Some(law) => {
                    let q = 1.0 - draws.uniform();
                    dir.scaled(law.radius_from_tail(q))
                }
            };
            visit(i, z);
        }
    }

    /// Sample `i` with the tail variable restricted to CDF values in `(q_lo, q_hi]`.
    /// Only ball samplers have a tail variable.
    pub fn stratified_point(&self, i: u64, q_lo: f64, q_hi: f64) -> BallPoint {
        let mut draws = self.stream.at(i);
        let dir = sphere_point(self.n, &mut draws);
        let law = self.radial.as_ref().expect("stratified sampling needs a ball sampler");
        let q = q_hi - (q_hi - q_lo) * draws.uniform();
        dir.scaled(law.radius_from_tail(q))
    }

    pub fn collect(&self, count: usize) -> Vec<BallPoint> {
        let mut out = Vec::with_capacity(count);
        self.for_each(0, count as u64, |_, z| out.push(z));
        out
    }
}

/// `count` points uniform on the unit sphere of `C^n`.
pub fn sample_sphere(n: usize, count: usize, seed: u64) -> Vec<BallPoint> {
    Sampler::sphere(n, seed).collect(count)
}

/// `count` points with density `c_α (1 - |z|^2)^α`.
pub fn sample_ball_weighted(n: usize, alpha: f64, count: usize, seed: u64) -> Result<Vec<BallPoint>> {
    Ok(Sampler::ball(n, alpha, seed)?.collect(count))
}

/// Writes samples as CSV with `re_k`, `im_k` columns and a uniform weight column.
pub fn write_samples_csv<W: Write>(points: &[BallPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = points.first().map_or(0, BallPoint::dim);
    let mut header: Vec<String> = Vec::new();
    for k in 1..=dim {
        header.push(format!("re_{k}"));
        header.push(format!("im_{k}"));
    }
    header.push("weight".into());
    w.write_record(&header)?;
    let weight = 1.0 / points.len().max(1) as f64;
    for p in points {
        let mut row: Vec<String> = Vec::with_capacity(2 * dim + 1);
        for c in p.coords() {
            row.push(c.re.to_string());
            row.push(c.im.to_string());
        }
        row.push(weight.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponents() {
        assert_eq!(n_alpha(1, Space::Bergman { alpha: 0.0 }).unwrap(), 2.0);
        assert_eq!(n_alpha(2, Space::Bergman { alpha: 1.0 }).unwrap(), 4.0);
        assert_eq!(n_alpha(3, Space::Hardy).unwrap(), 3.0);
        assert!(n_alpha(1, Space::Bergman { alpha: -1.0 }).is_err());
    }

    #[test]
    fn koranyi_examples() {
        let one = BallPoint::e1(1);
        let zero = BallPoint::origin(1);
        assert!(KoranyiRegion::new(one.clone(), 2.5).unwrap().contains(&zero));
        assert!(!KoranyiRegion::new(one.clone(), 1.5).unwrap().contains(&zero));
        let z = BallPoint::from_real(&[1.0 - 1e-3]).unwrap();
        assert!(KoranyiRegion::new(one.clone(), 1.1).unwrap().contains(&z));
        assert!(KoranyiRegion::new(one, f64::INFINITY).unwrap().contains(&zero));
    }

    #[test]
    fn window_examples() {
        let one = BallPoint::e1(1);
        for h in [0.5, 0.1, 1e-3] {
            let w = CarlesonWindow::new(one.clone(), h, Closure::Open).unwrap();
            assert!(w.contains(&BallPoint::from_real(&[1.0 - h / 2.0]).unwrap()));
            assert!(!w.contains(&BallPoint::from_real(&[-1.0]).unwrap()));
        }
        let w = CarlesonWindow::new(one.clone(), 0.5, Closure::Open).unwrap();
        assert!(!w.contains(&BallPoint::origin(1)));
        // the boundary point itself belongs only to the closed window
        assert!(!w.contains(&one));
        assert!(CarlesonWindow::new(one.clone(), 0.5, Closure::Closed).unwrap().contains(&one));
    }

    #[test]
    fn aperture_bounds() {
        assert_eq!(koranyi_aperture_bound(1), f64::INFINITY);
        assert!((koranyi_aperture_bound(2) - 2f64.sqrt()).abs() < 1e-14);
        for n in 2..50 {
            assert!(koranyi_aperture_bound(n + 1) < koranyi_aperture_bound(n));
            assert!(koranyi_aperture_bound(n) > 1.0);
        }
    }

    #[test]
    fn normalizer_closed_forms() {
        assert!((c_alpha(1, 0.0) - 1.0).abs() < 1e-12);
        // N = 1, α = 1: 1 / ∫ (1 - r^2) 2r dr = 2
        assert!((c_alpha(1, 1.0) - 2.0).abs() < 1e-12);
        assert!((c_alpha(2, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_samples_are_unit() {
        for p in sample_sphere(3, 2000, 11) {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_quantile_closed_forms() {
        // N = 1, α = 0: s is uniform; N = 1, α = 1: G(s) = s^2
        let flat = RadialLaw::new(1, 0.0).unwrap();
        let quad = RadialLaw::new(1, 1.0).unwrap();
        for &q in &[1e-20, 1e-9, 1e-3, 0.2, 0.5, 0.9, 1.0] {
            let s = flat.tail_quantile(q);
            assert!((s - q.max(4.0 * f64::EPSILON)).abs() <= 1e-9 * q, "{q} {s}");
            let s = quad.tail_quantile(q);
            assert!((s - q.sqrt()).abs() <= 1e-6 * q.sqrt(), "{q} {s}");
        }
    }

    #[test]
    fn radii_pass_ks() {
        for (n, alpha) in [(1, 0.0), (1, 1.0), (2, 0.5), (3, -0.5)] {
            let count = 20_000;
            let law = RadialLaw::new(n, alpha).unwrap();
            let mut radii: Vec<f64> = sample_ball_weighted(n, alpha, count, 5)
                .unwrap()
                .iter()
                .map(BallPoint::norm)
                .collect();
            radii.sort_by(f64::total_cmp);
            let d = radii
                .iter()
                .enumerate()
                .map(|(i, &r)| {
                    let f = law.radius_cdf(r);
                    (f - i as f64 / count as f64).abs().max((f - (i + 1) as f64 / count as f64).abs())
                })
                .fold(0.0, f64::max);
            assert!(d < 4.0 / (count as f64).sqrt(), "N={n} alpha={alpha} D={d}");
        }
    }

    #[test]
    fn ranges_match_full_stream() {
        let sampler = Sampler::ball(2, 1.0, 3).unwrap();
        let all = sampler.collect(50);
        let mut tail = Vec::new();
        sampler.for_each(20, 30, |_, z| tail.push(z));
        assert_eq!(&all[20..], &tail[..]);
    }

    #[test]
    fn csv_export() {
        let pts = vec![BallPoint::new(vec![c(0.5, -0.25), c(0.0, 0.0)]).unwrap()];
        let mut buf = Vec::new();
        write_samples_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "re_1,im_1,re_2,im_2,weight\n0.5,-0.25,0,0,1\n");
    }

    proptest! {
        #[test]
        fn windows_nest(re in -1.0f64..1.0, im in -1.0f64..1.0, h1 in 0.01f64..0.99, h2 in 0.01f64..0.99) {
            prop_assume!(re * re + im * im < 1.0);
            let z = BallPoint::new(vec![c(re, im)]).unwrap();
            let (lo, hi) = if h1 < h2 { (h1, h2) } else { (h2, h1) };
            let small = CarlesonWindow::new(BallPoint::e1(1), lo, Closure::Open).unwrap();
            let big = CarlesonWindow::new(BallPoint::e1(1), hi, Closure::Open).unwrap();
            prop_assert!(!small.contains(&z) || big.contains(&z));
        }

        #[test]
        fn regions_nest(re in -1.0f64..1.0, im in -1.0f64..1.0, a1 in 1.01f64..10.0, a2 in 1.01f64..10.0) {
            prop_assume!(re * re + im * im < 1.0);
            let z = BallPoint::new(vec![c(re, im), c(0.0, 0.0)]).unwrap();
            let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
            let small = KoranyiRegion::new(BallPoint::e1(2), lo).unwrap();
            let big = KoranyiRegion::new(BallPoint::e1(2), hi).unwrap();
            prop_assert!(!small.contains(&z) || big.contains(&z));
        }
    }
}
