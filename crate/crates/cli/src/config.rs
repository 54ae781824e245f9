use std::path::PathBuf;

use orlicz_lab::carleson::Sampling;
use orlicz_lab::concave::MonotoneFunctionSpec;
use orlicz_lab::geometry::Space;
use orlicz_lab::orlicz::OrliczFunction;
use orlicz_lab::symbol::SymbolFamily;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// One JSON document driving every subcommand. Sections a command does not
/// use are ignored by it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub seed: u64,
    #[serde(default)]
    pub symbol: Option<SymbolFamily>,
    #[serde(default)]
    pub orlicz: Option<OrliczFunction>,
    #[serde(default = "default_space")]
    pub space: Space,
    /// Ball dimension; when given it must match the symbol.
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub samples: Samples,
    #[serde(default)]
    pub lemma: Option<LemmaConfig>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_space() -> Space {
    Space::Bergman { alpha: 0.0 }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    pub h_grid: Option<Vec<f64>>,
    /// Radii for Hardy slice sups.
    pub r_grid: Option<Vec<f64>>,
    /// Radii for the boundary ratios.
    pub ratio_r_grid: Option<Vec<f64>>,
    pub a_grid: Option<Vec<f64>>,
    pub c_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Samples {
    #[serde(default = "Samples::default_per_cell")]
    pub n_per_cell: usize,
    #[serde(default = "Samples::default_per_r")]
    pub ratio_per_r: usize,
    #[serde(default = "Samples::default_sup")]
    pub sup: usize,
    /// Overrides the sampling chosen for the symbol.
    #[serde(default)]
    pub sampling: Option<Sampling>,
}

impl Samples {
    fn default_per_cell() -> usize {
        1 << 16
    }
    fn default_per_r() -> usize {
        64
    }
    fn default_sup() -> usize {
        4096
    }
}

impl Default for Samples {
    fn default() -> Self {
        Self {
            n_per_cell: Self::default_per_cell(),
            ratio_per_r: Self::default_per_r(),
            sup: Self::default_sup(),
            sampling: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    pub f: MonotoneFunctionSpec,
    pub g: MonotoneFunctionSpec,
    #[serde(default = "LemmaConfig::default_n_max")]
    pub n_max: usize,
    /// Points at which `v(f)/v(g)` is minimized; defaults to `2^{k/4}`, `k = 0..=200`.
    #[serde(default)]
    pub x_grid: Option<Vec<f64>>,
}

impl LemmaConfig {
    fn default_n_max() -> usize {
        40
    }

    pub fn x_grid(&self) -> Vec<f64> {
        self.x_grid
            .clone()
            .unwrap_or_else(|| (0..=200).map(|k| 2f64.powf(k as f64 / 4.0)).collect())
    }
}

pub const MIN_N_PER_CELL: usize = 100;
pub const MIN_N_MAX: usize = 3;

fn config_error(msg: impl Into<String>) -> Failure {
    Failure::config(msg.into())
}

fn check_open_unit(name: &str, grid: &[f64], decreasing: bool) -> Result<(), Failure> {
    if grid.is_empty() {
        return Err(config_error(format!("{name} is empty")));
    }
    if let Some(x) = grid.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
        return Err(config_error(format!("{name} entry {x} outside (0, 1)")));
    }
    let ordered = grid
        .windows(2)
        .all(|w| if decreasing { w[1] < w[0] } else { w[1] > w[0] });
    if !ordered {
        let dir = if decreasing { "decreasing" } else { "increasing" };
        return Err(config_error(format!("{name} must be strictly {dir}")));
    }
    Ok(())
}

fn check_at_least_one(name: &str, grid: &[f64]) -> Result<(), Failure> {
    if grid.is_empty() {
        return Err(config_error(format!("{name} is empty")));
    }
    match grid.iter().find(|x| !(x.is_finite() && **x >= 1.0)) {
        Some(x) => Err(config_error(format!("{name} entry {x} must be finite and >= 1"))),
        None => Ok(()),
    }
}

impl AnalysisConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| config_error(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if let Space::Bergman { alpha } = self.space {
            Space::bergman(alpha).map_err(Failure::from)?;
        }
        if self.dim == Some(0) {
            return Err(config_error("dim must be at least 1"));
        }
        let g = &self.grids;
        if let Some(h) = &g.h_grid {
            check_open_unit("h_grid", h, true)?;
        }
        if let Some(r) = &g.r_grid {
            check_open_unit("r_grid", r, false)?;
        }
        if let Some(r) = &g.ratio_r_grid {
            check_open_unit("ratio_r_grid", r, false)?;
            if r.len() < 5 {
                return Err(config_error("ratio_r_grid needs at least 5 radii"));
            }
        }
        if let Some(a) = &g.a_grid {
            check_at_least_one("a_grid", a)?;
        }
        if let Some(c) = &g.c_grid {
            check_at_least_one("c_grid", c)?;
        }
        let s = &self.samples;
        if s.n_per_cell < MIN_N_PER_CELL {
            return Err(config_error(format!("n_per_cell must be at least {MIN_N_PER_CELL}")));
        }
        if s.ratio_per_r == 0 || s.sup == 0 {
            return Err(config_error("sample counts must be positive"));
        }
        if let Some(lemma) = &self.lemma {
            if lemma.n_max < MIN_N_MAX {
                return Err(config_error(format!(
                    "n_max = {} is below the minimum {MIN_N_MAX}",
                    lemma.n_max
                )));
            }
            if let Some(xs) = &lemma.x_grid {
                if xs.is_empty() || xs.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(config_error("lemma x_grid needs finite non-negative points"));
                }
            }
        }
        Ok(())
    }
}
