//! Monte-Carlo estimates of pull-back measures on Carleson windows and corona
//! sets, and sup-over-center profiles.
//!
//! Every estimate is an integer count over a counter-based sample stream, so
//! results do not depend on how the work is split across threads.

use crate::error::{Error, Result};
use crate::geometry::{window_distance, BallPoint, Sampler, Space};
use crate::rng::{tags, SampleStream};
use crate::symbol::SymbolMap;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

const CHUNK: u64 = 8192;
pub const MIN_SAMPLES: usize = 1000;

/// Hardy radial grid `1 - 2^{-k}`, `k = 2..12`.
pub fn default_r_grid() -> Vec<f64> {
    (2..=12).map(|k| 1.0 - 2f64.powi(-k)).collect()
}

/// Dyadic window sizes `2^{-1}, ..., 2^{-14}`.
pub fn default_h_grid() -> Vec<f64> {
    (1..=14).map(|k| 2f64.powi(-k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMass {
    pub estimate: f64,
    pub std_error: f64,
    pub hits: u64,
    pub n: u64,
}

impl WindowMass {
    /// Binomial estimate; an empty cell reports `3/n` as its error.
    pub fn binomial(hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        let std_error = if hits == 0 {
            3.0 / n as f64
        } else {
            (p * (1.0 - p) / n as f64).sqrt()
        };
        Self {
            estimate: p,
            std_error,
            hits,
            n,
        }
    }

    pub fn relative_error(&self) -> f64 {
        if self.estimate > 0.0 {
            self.std_error / self.estimate
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Continuous extension of the symbol to the sphere.
    ClosedForm,
    /// Radial limit along `1 - 2^{-k}`, `k = 4..24`; unconverged points are counted.
    Radial,
}

/// Fixed dyadic strata for the disc: tail probability of `1 - |z|^2` and angle
/// from the window center. Only for dimension one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrataSpec {
    pub radial: usize,
    pub angular: usize,
    pub per_cell: usize,
}

impl Default for StrataSpec {
    fn default() -> Self {
        Self {
            radial: 40,
            angular: 24,
            per_cell: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampling {
    Plain,
    Stratified(StrataSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterStrategy {
    /// Random unit centers besides `e_1`.
    pub random: usize,
    /// Directions of the largest images in the pilot run.
    pub image_driven: usize,
    pub pilot: usize,
    #[serde(default)]
    pub extra: Vec<BallPoint>,
}

impl Default for CenterStrategy {
    fn default() -> Self {
        Self {
            random: 4,
            image_driven: 8,
            pilot: 4096,
            extra: Vec::new(),
        }
    }
}

fn check_h_grid(h_grid: &[f64]) -> Result<()> {
    if h_grid.is_empty() {
        return Err(Error::InvalidParameter("empty h grid".into()));
    }
    if h_grid.iter().any(|h| !(*h > 0.0 && *h < 1.0)) {
        return Err(Error::InvalidParameter("window sizes must lie in (0, 1)".into()));
    }
    if h_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("h grid must be strictly decreasing".into()));
    }
    Ok(())
}

fn check_r_grid(r_grid: &[f64]) -> Result<()> {
    if r_grid.is_empty() || r_grid.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(Error::InvalidParameter("radii must lie in (0, 1)".into()));
    }
    Ok(())
}

/// Hit counts `[group][center][h]`; Hardy groups are the radii then the boundary.
struct Counts {
    hits: Vec<u64>,
    unconverged: u64,
}

struct Counter<'a> {
    map: &'a SymbolMap,
    space: Space,
    centers: Vec<BallPoint>,
    h_grid: Vec<f64>,
    r_grid: Vec<f64>,
    boundary: BoundaryMode,
}

impl Counter<'_> {
    fn groups(&self) -> usize {
        match self.space {
            Space::Hardy => self.r_grid.len() + 1,
            Space::Bergman { .. } => 1,
        }
    }

    fn cells(&self) -> usize {
        self.groups() * self.centers.len() * self.h_grid.len()
    }

    fn index(&self, group: usize, center: usize, h: usize) -> usize {
        (group * self.centers.len() + center) * self.h_grid.len() + h
    }

    /// Images of one sample, one per group; the flag marks an unconverged boundary limit.
    fn images(&self, z: &BallPoint) -> Result<(Vec<BallPoint>, bool)> {
        match self.space {
            Space::Bergman { .. } => Ok((vec![self.map.apply(z)?], false)),
            Space::Hardy => {
                let mut out = Vec::with_capacity(self.r_grid.len() + 1);
                for &r in &self.r_grid {
                    out.push(self.map.apply(&z.scaled(r))?);
                }
                let (b, unconverged) = match self.boundary {
                    BoundaryMode::ClosedForm => (self.map.boundary_value(z)?, false),
                    BoundaryMode::Radial => {
                        let lim = self.map.boundary_limit(z, &crate::symbol::default_r_seq(), 1e-6)?;
                        (lim.point, !lim.converged)
                    }
                };
                out.push(b);
                Ok((out, unconverged))
            }
        }
    }

    fn tally(&self, images: &[BallPoint], hits: &mut [u64]) {
        let nh = self.h_grid.len();
        for (g, w) in images.iter().enumerate() {
            for (c, center) in self.centers.iter().enumerate() {
                let d = window_distance(w, center);
                // h_grid decreases: the windows containing w form a prefix
                let inside = self.h_grid.partition_point(|&h| h > d);
                let base = self.index(g, c, 0);
                for slot in &mut hits[base..base + inside.min(nh)] {
                    *slot += 1;
                }
            }
        }
    }

    fn count(&self, sampler: &Sampler, n: u64) -> Result<Counts> {
        let chunks: Vec<u64> = (0..n).step_by(CHUNK as usize).collect();
        let partial = chunks
            .par_iter()
            .map(|&start| {
                let len = CHUNK.min(n - start);
                let mut hits = vec![0u64; self.cells()];
                let mut unconverged = 0;
                let mut err = None;
                sampler.for_each(start, len, |_, z| {
                    if err.is_some() {
                        return;
                    }
                    match self.images(&z) {
                        Ok((imgs, flag)) => {
                            unconverged += flag as u64;
                            self.tally(&imgs, &mut hits);
                        }
                        Err(e) => err = Some(e),
                    }
                });
                match err {
                    Some(e) => Err(e),
                    None => Ok(Counts { hits, unconverged }),
                }
            })
            .collect::<Vec<Result<Counts>>>();
        let mut total = Counts {
            hits: vec![0; self.cells()],
            unconverged: 0,
        };
        for part in partial {
            let part = part?;
            for (t, p) in total.hits.iter_mut().zip(part.hits) {
                *t += p;
            }
            total.unconverged += part.unconverged;
        }
        Ok(total)
    }
}

/// `v_α(φ^{-1}(S(ζ, h)))` by plain Monte Carlo.
pub fn bergman_window_mass(
    map: &SymbolMap,
    alpha: f64,
    zeta: &BallPoint,
    h: f64,
    n: usize,
    seed: u64,
) -> Result<WindowMass> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_SAMPLES} samples")));
    }
    check_h_grid(&[h])?;
    let counter = Counter {
        map,
        space: Space::bergman(alpha)?,
        centers: vec![zeta.clone()],
        h_grid: vec![h],
        r_grid: Vec::new(),
        boundary: BoundaryMode::ClosedForm,
    };
    let counts = counter.count(&Sampler::ball(map.dim(), alpha, seed)?, n as u64)?;
    Ok(WindowMass::binomial(counts.hits[0], n as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyWindowMass {
    /// Largest mass of `{ξ : φ(rξ) ∈ S̄(ζ, h)}` over the radial grid.
    pub sup_r: WindowMass,
    pub argmax_r: f64,
    /// Mass under the boundary values of `φ`.
    pub boundary: WindowMass,
    pub unconverged: u64,
    /// More than 1% of boundary limits failed to converge.
    pub flagged: bool,
}

pub fn hardy_window_mass(
    map: &SymbolMap,
    zeta: &BallPoint,
    h: f64,
    r_grid: &[f64],
    n: usize,
    seed: u64,
    boundary: BoundaryMode,
) -> Result<HardyWindowMass> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_SAMPLES} samples")));
    }
    check_h_grid(&[h])?;
    check_r_grid(r_grid)?;
    let counter = Counter {
        map,
        space: Space::Hardy,
        centers: vec![zeta.clone()],
        h_grid: vec![h],
        r_grid: r_grid.to_vec(),
        boundary,
    };
    let n64 = n as u64;
    let counts = counter.count(&Sampler::sphere(map.dim(), seed), n64)?;
    let (best_g, best_hits) = (0..r_grid.len())
        .map(|g| (g, counts.hits[g]))
        .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
    Ok(HardyWindowMass {
        sup_r: WindowMass::binomial(best_hits, n64),
        argmax_r: r_grid[best_g],
        boundary: WindowMass::binomial(counts.hits[r_grid.len()], n64),
        unconverged: counts.unconverged,
        flagged: counts.unconverged as f64 > 0.01 * n as f64,
    })
}

/// Mass of `{|φ| > r0}`; for Hardy spaces the largest over `r_grid` of the mass
/// of `{ξ : |φ(rξ)| > r0}`.
pub fn corona_mass(
    map: &SymbolMap,
    space: Space,
    r0: f64,
    r_grid: &[f64],
    n: usize,
    seed: u64,
) -> Result<WindowMass> {
    crate::geometry::Corona::new(r0)?;
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_SAMPLES} samples")));
    }
    let radii: Vec<Option<f64>> = match space {
        Space::Hardy => {
            check_r_grid(r_grid)?;
            r_grid.iter().map(|&r| Some(r)).collect()
        }
        Space::Bergman { .. } => vec![None],
    };
    let sampler = Sampler::for_space(map.dim(), space, seed)?;
    let n64 = n as u64;
    let chunks: Vec<u64> = (0..n64).step_by(CHUNK as usize).collect();
    let parts = chunks
        .par_iter()
        .map(|&start| {
            let mut hits = vec![0u64; radii.len()];
            let mut err = None;
            sampler.for_each(start, CHUNK.min(n64 - start), |_, z| {
                for (slot, r) in hits.iter_mut().zip(&radii) {
                    let p = r.map_or_else(|| z.clone(), |r| z.scaled(r));
                    match map.apply(&p) {
                        Ok(w) => *slot += (w.norm() > r0) as u64,
                        Err(e) => err = Some(e),
                    }
                }
            });
            err.map_or(Ok(hits), Err)
        })
        .collect::<Vec<Result<Vec<u64>>>>();
    let mut total = vec![0u64; radii.len()];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part?) {
            *t += p;
        }
    }
    Ok(WindowMass::binomial(total.into_iter().max().unwrap_or(0), n64))
}

/// `(lower, upper, weight)` of dyadic strata over `(0, 1]`; the last stratum
/// absorbs everything below `2^{-(count-1)}`.
fn dyadic_strata(count: usize) -> Vec<(f64, f64, f64)> {
    (0..count)
        .map(|j| {
            let hi = 2f64.powi(-(j as i32));
            if j + 1 == count {
                (0.0, hi, hi)
            } else {
                (0.5 * hi, hi, 0.5 * hi)
            }
        })
        .collect()
}

/// Window masses at a boundary point of the disc by stratified sampling:
/// angle from the center in dyadic strata of `π`, and (Bergman) tail
/// probability of `1 - |z|^2` in dyadic strata. Hardy masses use boundary values.
pub fn stratified_window_masses(
    map: &SymbolMap,
    space: Space,
    center: &BallPoint,
    h_grid: &[f64],
    strata: StrataSpec,
    seed: u64,
) -> Result<Vec<WindowMass>> {
    if map.dim() != 1 || center.dim() != 1 || !center.is_unit() {
        return Err(Error::InvalidParameter(
            "stratified sampling is implemented for the disc with a unit center".into(),
        ));
    }
    check_h_grid(h_grid)?;
    if strata.per_cell == 0 || strata.angular == 0 || strata.radial == 0 {
        return Err(Error::InvalidParameter("empty strata".into()));
    }
    let radial = match space {
        Space::Hardy => vec![(1.0, 1.0, 1.0)],
        Space::Bergman { .. } => dyadic_strata(strata.radial),
    };
    let law = match space {
        Space::Bergman { alpha } => Some(Sampler::ball(1, alpha, seed)?),
        Space::Hardy => None,
    };
    let angular = dyadic_strata(strata.angular);
    let phase = center.coords()[0].arg();
    let stream = SampleStream::new(seed, tags::STRATA, 3);
    let cells: Vec<(usize, usize)> = (0..radial.len())
        .flat_map(|j| (0..angular.len()).map(move |k| (j, k)))
        .collect();
    let per = strata.per_cell as u64;
    let nh = h_grid.len();
    let parts = cells
        .par_iter()
        .enumerate()
        .map(|(cell, &(j, k))| {
            let mut hits = vec![0u64; nh];
            let mut draws = stream.at(cell as u64 * per);
            let (t_lo, t_hi, _) = angular[k];
            let (q_lo, q_hi, _) = radial[j];
            for _ in 0..per {
                let ut = draws.uniform();
                let sign = if draws.uniform() < 0.5 { -1.0 } else { 1.0 };
                let uq = draws.uniform();
                let theta = PI * (t_hi - (t_hi - t_lo) * ut);
                let r = match &law {
                    None => 1.0,
                    Some(s) => {
                        let q = q_hi - (q_hi - q_lo) * uq;
                        s.radial().expect("ball sampler").radius_from_tail(q)
                    }
                };
                let z = BallPoint::new(vec![Complex64::from_polar(r, phase + sign * theta)])?;
                let w = match space {
                    Space::Hardy => map.boundary_value(&z)?,
                    Space::Bergman { .. } => map.apply(&z)?,
                };
                let d = window_distance(&w, center);
                let inside = h_grid.partition_point(|&h| h > d);
                for slot in &mut hits[..inside] {
                    *slot += 1;
                }
            }
            Ok(hits)
        })
        .collect::<Vec<Result<Vec<u64>>>>();
    let mut estimate = vec![0.0; nh];
    let mut variance = vec![0.0; nh];
    let mut total_hits = vec![0u64; nh];
    for ((j, k), part) in cells.iter().zip(parts) {
        let weight = radial[*j].2 * angular[*k].2;
        for (i, h) in part?.into_iter().enumerate() {
            let p = h as f64 / per as f64;
            estimate[i] += weight * p;
            variance[i] += weight * weight * p * (1.0 - p) / per as f64;
            total_hits[i] += h;
        }
    }
    let n = per * cells.len() as u64;
    Ok((0..nh)
        .map(|i| WindowMass {
            estimate: estimate[i],
            std_error: if total_hits[i] == 0 {
                3.0 / per as f64
            } else {
                variance[i].sqrt()
            },
            hits: total_hits[i],
            n,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub h: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub hits: u64,
    pub n: u64,
    pub argmax_center: BallPoint,
    /// Radius attaining the sup (Hardy); `1` when the boundary values attain it.
    pub argmax_r: Option<f64>,
    pub boundary_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlesonProfile {
    pub space: Space,
    pub dim: usize,
    pub symbol: String,
    pub seed: u64,
    pub sampling: Sampling,
    pub n_per_cell: usize,
    pub r_grid: Vec<f64>,
    pub centers: Vec<BallPoint>,
    pub records: Vec<ProfileRecord>,
    pub unconverged: u64,
    pub flagged: bool,
    /// Closed-form `‖φ‖_∞`; windows with `h < 1 - image_radius` carry no mass.
    pub image_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRequest {
    pub space: Space,
    pub h_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub centers: CenterStrategy,
    pub n_per_cell: usize,
    pub sampling: Sampling,
    pub boundary: BoundaryMode,
    pub seed: u64,
}

impl ProfileRequest {
    pub fn new(space: Space, n_per_cell: usize, seed: u64) -> Self {
        Self {
            space,
            h_grid: default_h_grid(),
            r_grid: default_r_grid(),
            centers: CenterStrategy::default(),
            n_per_cell,
            sampling: Sampling::Plain,
            boundary: BoundaryMode::ClosedForm,
            seed,
        }
    }
}

/// Stratified sampling for lens maps of the disc, whose window masses decay
/// too fast for plain Monte Carlo; plain sampling otherwise.
pub fn recommended_sampling(map: &SymbolMap) -> Sampling {
    match (map.lens_beta(), map.dim()) {
        (Some(_), 1) => Sampling::Stratified(StrataSpec::default()),
        _ => Sampling::Plain,
    }
}

fn candidate_centers(map: &SymbolMap, req: &ProfileRequest) -> Result<Vec<BallPoint>> {
    let dim = map.dim();
    let mut centers = vec![BallPoint::e1(dim)];
    centers.extend(req.centers.extra.iter().cloned());
    let random = Sampler::sphere(dim, req.seed).with_tag(req.seed, tags::CENTERS);
    centers.extend(random.collect(req.centers.random));
    if req.centers.image_driven > 0 && req.centers.pilot > 0 {
        let pilot = Sampler::for_space(dim, req.space, req.seed)?.collect(req.centers.pilot);
        let mut images = Vec::with_capacity(pilot.len());
        for z in &pilot {
            images.push(match req.space {
                Space::Hardy => map.boundary_value(z)?,
                Space::Bergman { .. } => map.apply(z)?,
            });
        }
        images.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        for w in images {
            if centers.len() >= 1 + req.centers.extra.len() + req.centers.random + req.centers.image_driven {
                break;
            }
            let Some(dir) = w.direction() else { continue };
            let duplicate = centers.iter().any(|c| window_distance(&dir, c) < 1e-12);
            if !duplicate {
                centers.push(dir);
            }
        }
    }
    Ok(centers)
}

/// Sup over candidate centers of the window masses of the pull-back measure.
pub fn build_profile(map: &SymbolMap, req: &ProfileRequest) -> Result<CarlesonProfile> {
    check_h_grid(&req.h_grid)?;
    if let Space::Hardy = req.space {
        check_r_grid(&req.r_grid)?;
    }
    let r_grid = match req.space {
        Space::Hardy => req.r_grid.clone(),
        Space::Bergman { .. } => Vec::new(),
    };
    if let Sampling::Stratified(strata) = req.sampling {
        let center = BallPoint::e1(map.dim());
        let masses = stratified_window_masses(map, req.space, &center, &req.h_grid, strata, req.seed)?;
        let records = req
            .h_grid
            .iter()
            .zip(masses)
            .map(|(&h, m)| ProfileRecord {
                h,
                estimate: m.estimate,
                std_error: m.std_error,
                hits: m.hits,
                n: m.n,
                argmax_center: center.clone(),
                argmax_r: matches!(req.space, Space::Hardy).then_some(1.0),
                boundary_estimate: matches!(req.space, Space::Hardy).then_some(m.estimate),
            })
            .collect();
        return Ok(CarlesonProfile {
            space: req.space,
            dim: map.dim(),
            symbol: map.label(),
            seed: req.seed,
            sampling: req.sampling,
            n_per_cell: strata.per_cell,
            r_grid: Vec::new(),
            centers: vec![center],
            records,
            unconverged: 0,
            flagged: false,
            image_radius: map.closed_form_sup(),
        });
    }
    if req.n_per_cell < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "n_per_cell = {} is below {MIN_SAMPLES}",
            req.n_per_cell
        )));
    }
    let centers = candidate_centers(map, req)?;
    let counter = Counter {
        map,
        space: req.space,
        centers: centers.clone(),
        h_grid: req.h_grid.clone(),
        r_grid: r_grid.clone(),
        boundary: req.boundary,
    };
    let n = req.n_per_cell as u64;
    let sampler = Sampler::for_space(map.dim(), req.space, req.seed)?;
    let counts = counter.count(&sampler, n)?;
    let groups = counter.groups();
    // the sup is located on one sample and measured on an independent one,
    // so the maximum over noisy centers does not bias the estimate upward
    let picks: Vec<(usize, usize)> = (0..req.h_grid.len())
        .map(|k| {
            let mut best = (0u64, 0usize, 0usize);
            for g in 0..groups {
                for c in 0..centers.len() {
                    let hits = counts.hits[counter.index(g, c, k)];
                    if hits > best.0 {
                        best = (hits, g, c);
                    }
                }
            }
            (best.1, best.2)
        })
        .collect();
    let mut chosen: Vec<usize> = picks.iter().map(|p| p.1).collect();
    chosen.sort_unstable();
    chosen.dedup();
    let slot = |c: usize| chosen.binary_search(&c).expect("chosen center");
    let evaluator = Counter {
        centers: chosen.iter().map(|&c| centers[c].clone()).collect(),
        ..counter
    };
    let fresh = Sampler::for_space(map.dim(), req.space, req.seed)?.with_tag(req.seed, tags::EVALUATE);
    let second = evaluator.count(&fresh, n)?;
    let records = req
        .h_grid
        .iter()
        .enumerate()
        .map(|(k, &h)| {
            let (g, c) = picks[k];
            let hits = second.hits[evaluator.index(g, slot(c), k)];
            let mass = WindowMass::binomial(hits, n);
            let (argmax_r, boundary_estimate) = match req.space {
                Space::Hardy => {
                    let r = r_grid.get(g).copied().unwrap_or(1.0);
                    let b = second.hits[evaluator.index(groups - 1, slot(c), k)];
                    (Some(r), Some(b as f64 / n as f64))
                }
                Space::Bergman { .. } => (None, None),
            };
            ProfileRecord {
                h,
                estimate: mass.estimate,
                std_error: mass.std_error,
                hits,
                n,
                argmax_center: centers[c].clone(),
                argmax_r,
                boundary_estimate,
            }
        })
        .collect();
    let unconverged = counts.unconverged + second.unconverged;
    Ok(CarlesonProfile {
        space: req.space,
        dim: map.dim(),
        symbol: map.label(),
        seed: req.seed,
        sampling: req.sampling,
        n_per_cell: req.n_per_cell,
        r_grid,
        centers,
        records,
        unconverged,
        flagged: unconverged as f64 > 0.02 * n as f64,
        image_radius: map.closed_form_sup(),
    })
}

impl CarlesonProfile {
    /// Largest drop in `h` direction beyond twice the summed standard errors.
    pub fn monotonicity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for w in self.records.windows(2) {
            // records run from large to small h
            let drop = w[1].estimate - w[0].estimate;
            let slack = 2.0 * (w[0].std_error + w[1].std_error);
            worst = worst.max(drop - slack);
        }
        worst
    }

    /// Whether the record at `h` is zero by the closed-form image bound rather than by sampling.
    pub fn is_exact_zero(&self, h: f64) -> bool {
        self.image_radius.is_some_and(|s| h < 1.0 - s)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["h", "estimate", "std_error", "n", "hits"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        for k in 1..=self.dim {
            header.push(format!("argmax_re_{k}"));
            header.push(format!("argmax_im_{k}"));
        }
        let hardy = matches!(self.space, Space::Hardy);
        if hardy {
            header.push("argmax_r".into());
            header.push("boundary_estimate".into());
        }
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.h.to_string(),
                r.estimate.to_string(),
                r.std_error.to_string(),
                r.n.to_string(),
                r.hits.to_string(),
            ];
            for c in r.argmax_center.coords() {
                row.push(c.re.to_string());
                row.push(c.im.to_string());
            }
            if hardy {
                row.push(r.argmax_r.map_or(String::new(), |x| x.to_string()));
                row.push(r.boundary_estimate.map_or(String::new(), |x| x.to_string()));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_symbol_masses_are_exact() {
        let map = SymbolMap::constant(&[0.9]).unwrap();
        let e1 = BallPoint::e1(1);
        assert_eq!(bergman_window_mass(&map, 0.0, &e1, 0.05, 2000, 1).unwrap().estimate, 0.0);
        assert_eq!(bergman_window_mass(&map, 0.0, &e1, 0.2, 2000, 1).unwrap().estimate, 1.0);
    }

    #[test]
    fn empty_cells_report_floor() {
        let m = WindowMass::binomial(0, 1000);
        assert_eq!(m.std_error, 3e-3);
        assert!(m.relative_error().is_infinite());
    }

    #[test]
    fn too_few_samples() {
        let map = SymbolMap::identity(1);
        let e1 = BallPoint::e1(1);
        assert!(bergman_window_mass(&map, 0.0, &e1, 0.5, 999, 1).is_err());
        let mut req = ProfileRequest::new(Space::Bergman { alpha: 0.0 }, 500, 1);
        assert!(build_profile(&map, &req).is_err());
        req.n_per_cell = 2000;
        req.h_grid = vec![0.1, 0.2];
        assert!(build_profile(&map, &req).is_err());
    }

    #[test]
    fn strata_weights_sum_to_one() {
        for n in [1, 2, 10, 40] {
            let total: f64 = dyadic_strata(n).iter().map(|s| s.2).sum();
            assert_eq!(total, 1.0);
        }
    }

    #[test]
    fn profile_is_deterministic_and_monotone() {
        let map = SymbolMap::lens(0.5).unwrap();
        let req = ProfileRequest::new(Space::Bergman { alpha: 0.0 }, 20_000, 42);
        let a = build_profile(&map, &req).unwrap();
        let b = build_profile(&map, &req).unwrap();
        assert_eq!(a, b);
        assert!(a.monotonicity_defect() <= 0.0);
        assert!(a.records.iter().all(|r| (0.0..=1.0).contains(&r.estimate)));
    }

    #[test]
    fn partition_independence() {
        let map = SymbolMap::identity(2);
        let e1 = BallPoint::e1(2);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = pool.install(|| bergman_window_mass(&map, 1.0, &e1, 0.3, 30_000, 7)).unwrap();
        let b = single.install(|| bergman_window_mass(&map, 1.0, &e1, 0.3, 30_000, 7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_columns() {
        let map = SymbolMap::constant(&[0.3]).unwrap();
        let mut req = ProfileRequest::new(Space::Hardy, 1000, 1);
        req.h_grid = vec![0.5, 0.25];
        req.r_grid = vec![0.5, 0.75];
        let p = build_profile(&map, &req).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, "h,estimate,std_error,n,hits,argmax_re_1,argmax_im_1,argmax_r,boundary_estimate");
        assert_eq!(text.lines().count(), 3);
    }
}
