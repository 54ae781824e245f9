//! Holomorphic self-maps of the unit ball used as composition symbols.

use crate::error::{Error, Result};
use crate::geometry::{BallPoint, Sampler};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum SymbolFamily {
    Constant { w0: Vec<Complex64> },
    /// `z ↦ r z`; `r = 1` is the identity.
    Dilation { r: f64, dim: usize },
    /// `z ↦ (λ_1 z_1, ..., λ_N z_N)`.
    Diagonal { lambda: Vec<Complex64> },
    /// `ℓ_β(z) = 1 - (1 - z)^β` on the disc.
    Lens { beta: f64 },
    /// `z ↦ (ℓ_β(z_1), 0, ..., 0)`.
    EmbeddedLens { beta: f64, dim: usize },
    /// `z ↦ φ(r z)`.
    Radial { r: f64, inner: Box<SymbolMap> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymbolFamily", into = "SymbolFamily")]
pub struct SymbolMap {
    family: SymbolFamily,
    dim: usize,
}

impl From<SymbolMap> for SymbolFamily {
    fn from(map: SymbolMap) -> Self {
        map.family
    }
}

impl TryFrom<SymbolFamily> for SymbolMap {
    type Error = Error;
    fn try_from(family: SymbolFamily) -> Result<Self> {
        SymbolMap::new(family)
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("lens exponent beta = {beta} must lie in (0, 1)")))
    }
}

fn lens(beta: f64, z: Complex64) -> Complex64 {
    Complex64::new(1.0, 0.0) - (Complex64::new(1.0, 0.0) - z).powf(beta)
}

/// `β = (2/π) arccos(1/b)`.
pub fn beta_from_aperture(b: f64) -> Result<f64> {
    if !(b > 1.0) {
        return Err(invalid(format!("aperture b = {b} must exceed 1")));
    }
    if b == f64::INFINITY {
        return Ok(1.0);
    }
    Ok((1.0 / b).acos() / FRAC_PI_2)
}

/// `b = 1 / cos(βπ/2)`.
pub fn aperture_from_beta(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(1.0 / (beta * FRAC_PI_2).cos())
}

/// Aperture `a` with `ℓ_β(z) ∈ Γ(1, a)` whenever `|1 - ℓ_β(z)| = t` and `b t < 2`.
pub fn lens_local_aperture(beta: f64, t: f64) -> Option<f64> {
    let b = aperture_from_beta(beta).ok()?;
    (b * t < 2.0).then(|| b / (1.0 - 0.5 * b * t))
}

/// `sup 2|1 - w| / (1 - |w|^2)` over the image of the disc under `ℓ_β`, taken on the
/// boundary curve (the quotient is log-subharmonic, so the sup sits there).
pub fn lens_global_aperture(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let mut sup: f64 = 0.0;
    let mut visit = |theta: f64| {
        let w = lens(beta, Complex64::from_polar(1.0, theta));
        let denom = 1.0 - w.norm_sqr();
        if denom > 0.0 {
            sup = sup.max(2.0 * (Complex64::new(1.0, 0.0) - w).norm() / denom);
        }
    };
    for k in 0..=4000 {
        visit(PI * 1e-9f64.powf(1.0 - k as f64 / 4000.0));
        visit(PI * k as f64 / 4000.0);
    }
    Ok(sup)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNorm {
    /// Largest `|φ(z)|` seen on samples and radial sweeps.
    pub lower_bound: f64,
    pub closed_form: Option<f64>,
}

impl SupNorm {
    /// Closed form when known, sampled bound otherwise.
    pub fn best(&self) -> f64 {
        self.closed_form.unwrap_or(self.lower_bound)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLimit {
    pub point: BallPoint,
    pub converged: bool,
    pub steps: usize,
}

/// Default radial sequence `1 - 2^{-k}`, `k = 4..24`.
pub fn default_r_seq() -> Vec<f64> {
    (4..=24).map(|k| 1.0 - 2f64.powi(-k)).collect()
}

impl SymbolFamily {
    fn raw(&self, z: &[Complex64]) -> Vec<Complex64> {
        match self {
            SymbolFamily::Constant { w0 } => w0.clone(),
            SymbolFamily::Dilation { r, .. } => z.iter().map(|c| c * r).collect(),
            SymbolFamily::Diagonal { lambda } => z.iter().zip(lambda).map(|(c, l)| c * l).collect(),
            SymbolFamily::Lens { beta } => vec![lens(*beta, z[0])],
            SymbolFamily::EmbeddedLens { beta, dim } => {
                let mut w = vec![Complex64::new(0.0, 0.0); *dim];
                w[0] = lens(*beta, z[0]);
                w
            }
            SymbolFamily::Radial { r, inner } => {
                let scaled: Vec<Complex64> = z.iter().map(|c| c * r).collect();
                inner.family.raw(&scaled)
            }
        }
    }

    fn probe_dim(&self) -> usize {
        match self {
            SymbolFamily::Constant { w0 } => w0.len(),
            SymbolFamily::Dilation { dim, .. } | SymbolFamily::EmbeddedLens { dim, .. } => *dim,
            SymbolFamily::Diagonal { lambda } => lambda.len(),
            SymbolFamily::Lens { .. } => 1,
            SymbolFamily::Radial { inner, .. } => inner.dim,
        }
    }

    /// First interior probe point whose unchecked image leaves the open ball.
    ///
    /// Probes the origin and `t u e_k` for `t = 1 - 10^{-9}` and `u ∈ {±1, ±i}`.
    /// Parameters the probe cannot evaluate (zero dimension) yield `None`.
    pub fn self_map_violation(&self) -> Option<(BallPoint, f64)> {
        let dim = self.probe_dim();
        if dim == 0 {
            return None;
        }
        let t = 1.0 - 1e-9;
        let mut probes = vec![vec![Complex64::new(0.0, 0.0); dim]];
        for k in 0..dim {
            for u in [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::i(), -Complex64::i()] {
                let mut z = vec![Complex64::new(0.0, 0.0); dim];
                z[k] = u * t;
                probes.push(z);
            }
        }
        probes.into_iter().find_map(|z| {
            let modulus = self.raw(&z).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            (!(modulus < 1.0)).then(|| (BallPoint::unchecked(z), modulus))
        })
    }
}

impl SymbolMap {
    pub fn new(family: SymbolFamily) -> Result<Self> {
        let dim = match &family {
            SymbolFamily::Constant { w0 } => {
                BallPoint::new(w0.clone())?;
                let norm = w0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if norm >= 1.0 {
                    return Err(invalid("constant symbol must lie in the open ball"));
                }
                w0.len()
            }
            SymbolFamily::Dilation { r, dim } => {
                if !(*r > 0.0 && *r <= 1.0) || *dim == 0 {
                    return Err(invalid("dilation needs r in (0, 1] and dim >= 1"));
                }
                *dim
            }
            SymbolFamily::Diagonal { lambda } => {
                let total: f64 = lambda.iter().map(|c| c.norm_sqr()).sum();
                if lambda.is_empty() || !(total <= 1.0 + 1e-12) {
                    return Err(invalid("diagonal symbol needs Σ|λ_i|^2 <= 1"));
                }
                lambda.len()
            }
            SymbolFamily::Lens { beta } => {
                check_beta(*beta)?;
                1
            }
            SymbolFamily::EmbeddedLens { beta, dim } => {
                check_beta(*beta)?;
                if *dim == 0 {
                    return Err(invalid("embedded lens needs dim >= 1"));
                }
                *dim
            }
            SymbolFamily::Radial { r, inner } => {
                if !(*r > 0.0 && *r < 1.0) {
                    return Err(invalid("radial restriction needs r in (0, 1)"));
                }
                inner.dim
            }
        };
        Ok(Self { family, dim })
    }

    pub fn constant(w0: &[f64]) -> Result<Self> {
        Self::new(SymbolFamily::Constant {
            w0: w0.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        })
    }

    pub fn dilation(r: f64, dim: usize) -> Result<Self> {
        Self::new(SymbolFamily::Dilation { r, dim })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(SymbolFamily::Dilation { r: 1.0, dim }).expect("identity is valid")
    }

    pub fn lens(beta: f64) -> Result<Self> {
        Self::new(SymbolFamily::Lens { beta })
    }

    pub fn embedded_lens(beta: f64, dim: usize) -> Result<Self> {
        Self::new(SymbolFamily::EmbeddedLens { beta, dim })
    }

    pub fn family(&self) -> &SymbolFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> String {
        match &self.family {
            SymbolFamily::Constant { w0 } => {
                let norm = w0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                format!("constant(|w0|={norm})")
            }
            SymbolFamily::Dilation { r, dim } if *r == 1.0 => format!("identity(N={dim})"),
            SymbolFamily::Dilation { r, dim } => format!("dilation(r={r},N={dim})"),
            SymbolFamily::Diagonal { lambda } => format!("diagonal(N={})", lambda.len()),
            SymbolFamily::Lens { beta } => format!("lens(beta={beta})"),
            SymbolFamily::EmbeddedLens { beta, dim } => format!("embedded_lens(beta={beta},N={dim})"),
            SymbolFamily::Radial { r, inner } => format!("{}∘(r={r})", inner.label()),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.family, SymbolFamily::Dilation { r, .. } if r == 1.0)
    }

    /// Lens exponent for the lens families.
    pub fn lens_beta(&self) -> Option<f64> {
        match &self.family {
            SymbolFamily::Lens { beta } | SymbolFamily::EmbeddedLens { beta, .. } => Some(*beta),
            _ => None,
        }
    }

    fn raw(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.family.raw(z)
    }

    fn check_dim(&self, z: &BallPoint) -> Result<()> {
        if z.dim() != self.dim {
            return Err(invalid(format!(
                "{} acts on C^{}, got a point of C^{}",
                self.label(),
                self.dim,
                z.dim()
            )));
        }
        Ok(())
    }

    /// `φ(z)` for interior `z`; an image on or outside the sphere is an error.
    pub fn apply(&self, z: &BallPoint) -> Result<BallPoint> {
        self.check_dim(z)?;
        if !z.is_interior() {
            return Err(invalid(format!("{} is not an interior point", z.describe())));
        }
        let w = BallPoint::unchecked(self.raw(z.coords()));
        if !(w.norm() < 1.0) {
            return Err(Error::SelfMapViolation {
                family: self.label(),
                point: z.describe(),
                modulus: w.norm(),
            });
        }
        Ok(w)
    }

    /// Continuous extension of `φ` to a point of the sphere. Every implemented
    /// family extends continuously to the closed ball.
    pub fn boundary_value(&self, zeta: &BallPoint) -> Result<BallPoint> {
        self.check_dim(zeta)?;
        let w = BallPoint::unchecked(self.raw(zeta.coords()));
        if !(w.norm() <= 1.0 + 1e-12) {
            return Err(Error::SelfMapViolation {
                family: self.label(),
                point: zeta.describe(),
                modulus: w.norm(),
            });
        }
        Ok(w)
    }

    /// `z ↦ φ(r z)`, simplified within the family where possible.
    pub fn radial_restriction(&self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(invalid(format!("restriction radius {r} must lie in (0, 1)")));
        }
        match &self.family {
            SymbolFamily::Constant { .. } => Ok(self.clone()),
            SymbolFamily::Dilation { r: s, dim } => Self::dilation(s * r, *dim),
            SymbolFamily::Diagonal { lambda } => Self::new(SymbolFamily::Diagonal {
                lambda: lambda.iter().map(|l| l * r).collect(),
            }),
            SymbolFamily::Radial { r: s, inner } => Self::new(SymbolFamily::Radial {
                r: s * r,
                inner: inner.clone(),
            }),
            _ => Self::new(SymbolFamily::Radial {
                r,
                inner: Box::new(self.clone()),
            }),
        }
    }

    /// Radial limit of `φ(r ζ)` along `r_seq`: stops once successive images
    /// differ by less than `tol`, otherwise returns the last image unconverged.
    pub fn boundary_limit(&self, zeta: &BallPoint, r_seq: &[f64], tol: f64) -> Result<BoundaryLimit> {
        self.check_dim(zeta)?;
        if r_seq.is_empty() {
            return Err(invalid("empty radial sequence"));
        }
        let mut prev = self.apply(&zeta.scaled(r_seq[0]))?;
        for (k, &r) in r_seq.iter().enumerate().skip(1) {
            let next = self.apply(&zeta.scaled(r))?;
            let diff: f64 = prev
                .coords()
                .iter()
                .zip(next.coords())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            prev = next;
            if diff < tol {
                return Ok(BoundaryLimit {
                    point: prev,
                    converged: true,
                    steps: k + 1,
                });
            }
        }
        Ok(BoundaryLimit {
            point: prev,
            converged: false,
            steps: r_seq.len(),
        })
    }

    /// Largest `|φ|` over `v_0` samples and radial sweeps toward the boundary along
    /// their directions, with the closed form where the family has one.
    pub fn sup_norm_estimate(&self, samples: usize, seed: u64) -> Result<SupNorm> {
        let sampler = Sampler::ball(self.dim, 0.0, seed)?;
        let mut best: f64 = 0.0;
        let mut err = None;
        sampler.for_each(0, samples as u64, |_, z| {
            if err.is_some() {
                return;
            }
            let mut probe = |p: &BallPoint| match self.apply(p) {
                Ok(w) => best = best.max(w.norm()),
                Err(e) => err = Some(e),
            };
            probe(&z);
            if let Some(dir) = z.direction() {
                for k in 1..=30 {
                    probe(&dir.scaled(1.0 - 2f64.powi(-k)));
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        // the real axis is where the lens families approach the sphere
        for k in 1..=30 {
            best = best.max(self.apply(&BallPoint::e1(self.dim).scaled(1.0 - 2f64.powi(-k)))?.norm());
        }
        Ok(SupNorm {
            lower_bound: best,
            closed_form: self.closed_form_sup(),
        })
    }

    /// `‖φ‖_∞` where the family has a closed form.
    pub fn closed_form_sup(&self) -> Option<f64> {
        match &self.family {
            SymbolFamily::Constant { w0 } => Some(w0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()),
            SymbolFamily::Dilation { r, .. } => Some(*r),
            SymbolFamily::Diagonal { lambda } => Some(lambda.iter().map(|c| c.norm()).fold(0.0, f64::max)),
            SymbolFamily::Lens { .. } | SymbolFamily::EmbeddedLens { .. } => Some(1.0),
            SymbolFamily::Radial { .. } => None,
        }
    }

    /// Center and aperture of a Korányi region known to contain the image, or
    /// `None` when no region of finite aperture does.
    pub fn koranyi_containment(&self) -> Option<(BallPoint, f64)> {
        let e1 = BallPoint::e1(self.dim);
        match &self.family {
            SymbolFamily::Constant { w0 } => {
                let w = BallPoint::unchecked(w0.clone());
                let zeta = w.direction().unwrap_or(e1);
                Some((zeta, 2.0 / (1.0 + w.norm()) * (1.0 + 1e-9)))
            }
            SymbolFamily::Dilation { r, .. } => (*r < 1.0).then(|| (e1, 2.0 / (1.0 - r))),
            SymbolFamily::Diagonal { lambda } => {
                let m = lambda.iter().map(|c| c.norm()).fold(0.0, f64::max);
                (m < 1.0).then(|| (e1, 2.0 / (1.0 - m)))
            }
            SymbolFamily::Lens { beta } | SymbolFamily::EmbeddedLens { beta, .. } => {
                lens_global_aperture(*beta).ok().map(|b| (e1, b * (1.0 + 1e-6)))
            }
            SymbolFamily::Radial { inner, .. } => inner.koranyi_containment(),
        }
    }
}
