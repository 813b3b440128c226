use std::path::{Path, PathBuf};

use anyhow::Result;
use harmonium::analysis::{GridAxis, SweepGrid};
use harmonium::gpc::{find_catalog, load_catalog, GpcCatalog};
use harmonium::model::SystemSpec;
use harmonium::spectral::SolverOptions;
use serde::{Deserialize, Serialize};

/// Input problems that map to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()).into())
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: SystemBlock,
    #[serde(default)]
    pub pipeline: PipelineBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(rename = "N")]
    pub n_particles: Option<usize>,
    /// Spatial dimension; must agree with `omega` when both are given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(rename = "K")]
    pub coupling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub spin: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Setting {
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compression: Option<f64>,
    /// Active setting (N′, d′) the spectrum is truncated to.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Setting>,
    /// Catalog file; otherwise the override directory or the built-in set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub kappa: GridAxis,
    pub chi: GridAxis,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<GridAxis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

const LARGEST_D: usize = 10;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("config {}: {e}", path.display())).into())
    }

    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    fn particles(&self) -> Result<usize> {
        match self.system.n_particles {
            Some(0) => invalid("system.N must be at least 1"),
            Some(n) => Ok(n),
            None => invalid("missing field system.N"),
        }
    }

    pub fn system_spec(&self) -> Result<SystemSpec> {
        let s = &self.system;
        let n = self.particles()?;
        let Some(omega) = s.omega.clone() else {
            return invalid("missing field system.omega");
        };
        if omega.is_empty() {
            return invalid("system.omega needs at least one frequency");
        }
        if let Some(dim) = s.n {
            if dim != omega.len() {
                return invalid(format!("system.n = {dim} but system.omega has {} entries", omega.len()));
            }
        }
        let given = [s.coupling.is_some(), s.kappa.is_some(), s.delta.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return invalid("system needs exactly one of K, kappa, delta");
        }
        let mass = s.mass.unwrap_or(1.0);
        let spec = if let Some(k) = s.coupling {
            SystemSpec::new(n, omega, mass, k)
        } else {
            if s.mass.is_some_and(|m| m != 1.0) {
                return invalid("system.mass is only allowed together with K");
            }
            match (s.kappa, s.delta) {
                (Some(kappa), _) => SystemSpec::from_kappa(n, omega, kappa),
                (_, Some(delta)) => SystemSpec::from_delta(n, omega, delta),
                _ => unreachable!(),
            }
        }
        .map_err(|e| ConfigError(e.to_string()))?;
        if s.spin || s.b.is_some() {
            return spec.with_field(s.b.unwrap_or(0.0)).map_err(|e| ConfigError(e.to_string()).into());
        }
        Ok(spec)
    }

    pub fn solver(&self) -> Result<SolverOptions> {
        let p = &self.pipeline;
        let d = SolverOptions::default();
        let opts = SolverOptions {
            tolerance: p.tolerance.unwrap_or(d.tolerance),
            initial_size: p.initial_size.or(d.initial_size),
            max_size: p.max_size.unwrap_or(d.max_size),
            scale_factor: p.scale_factor.unwrap_or(d.scale_factor),
            compression: p.compression.unwrap_or(d.compression),
            compare_count: d.compare_count,
        };
        if !(opts.tolerance > 0.0 && opts.scale_factor > 0.0 && opts.compression >= 0.0) {
            return invalid("pipeline.tolerance and pipeline.scale_factor must be positive");
        }
        Ok(opts)
    }

    /// Requested setting, or (N, 10) when N ≤ 4.
    pub fn setting(&self) -> Result<Setting> {
        let n = self.particles()?;
        match self.pipeline.truncation {
            Some(t) if t.n > n || t.d < t.n => {
                invalid(format!("pipeline.truncation ({}, {}) does not fit N = {n}", t.n, t.d))
            }
            Some(t) => Ok(t),
            None if n <= 4 => Ok(Setting { n, d: LARGEST_D }),
            None => invalid("missing field pipeline.truncation (no default setting for N > 4)"),
        }
    }

    pub fn catalog(&self) -> Result<GpcCatalog> {
        let Setting { n, d } = self.setting()?;
        let found = match &self.pipeline.catalog {
            Some(path) => {
                if !path.exists() {
                    return invalid(format!("pipeline.catalog {} does not exist", path.display()));
                }
                load_catalog(path, Some((n, d)))
            }
            None => find_catalog(n, d),
        };
        found.map_err(|e| ConfigError(e.to_string()).into())
    }

    pub fn grid(&self) -> Result<SweepGrid> {
        let Some(sw) = &self.sweep else {
            return invalid("missing block sweep");
        };
        let n_particles = self.particles()?;
        let dimension = match (self.system.n, &self.system.omega) {
            (Some(d), _) => d,
            (None, Some(w)) => w.len(),
            (None, None) => return invalid("missing field system.n"),
        };
        let grid = SweepGrid {
            n_particles,
            dimension,
            kappa: sw.kappa.clone(),
            chi: sw.chi.clone(),
            field: sw.b.clone(),
        };
        grid.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(grid)
    }

    pub fn output_format(&self, flag: Option<Format>, default: Format) -> Format {
        flag.or(self.output.format).unwrap_or(default)
    }

    pub fn output_path(&self, flag: Option<PathBuf>) -> Option<PathBuf> {
        flag.or_else(|| self.output.path.clone())
    }
}
