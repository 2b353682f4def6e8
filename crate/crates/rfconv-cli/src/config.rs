use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Spacing and extent of a one-dimensional grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub log: bool,
}

impl GridSpec {
    pub fn linear(min: f64, max: f64, count: usize) -> Self {
        Self {
            min,
            max,
            count,
            log: false,
        }
    }

    pub fn logarithmic(min: f64, max: f64, count: usize) -> Self {
        Self {
            min,
            max,
            count,
            log: true,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.log {
            rfconv::analysis::log_space(self.min, self.max, self.count)
        } else {
            rfconv::analysis::lin_space(self.min, self.max, self.count)
        }
    }

    fn validate(&self, name: &str) -> Result<(), CliError> {
        if self.count < 2 {
            return Err(CliError::Config(format!(
                "grid `{name}` needs count >= 2, got {}",
                self.count
            )));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(CliError::Config(format!(
                "grid `{name}` needs finite min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.log && self.min <= 0.0 {
            return Err(CliError::Config(format!("log grid `{name}` needs min > 0")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub psi1: f64,
    pub psi2: f64,
    pub f1_sq: f64,
    pub tau_sq: f64,
    pub activation: String,
    pub quad_order: usize,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            psi1: 2.5,
            psi2: 1.5,
            f1_sq: 1.0,
            tau_sq: 0.0,
            activation: "shifted-relu".into(),
            quad_order: rfconv::DEFAULT_QUAD_ORDER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub d: usize,
    pub n_features: usize,
    pub n_samples: usize,
    pub replicates: usize,
    pub base_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            d: 200,
            n_features: 500,
            n_samples: 300,
            replicates: 20,
            base_seed: 20_190_601,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Unscaled multipliers for the uniform family (and the theory table).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<GridSpec>,
    /// Multipliers for the interpolator family; defaults to `lambda`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_t: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi1: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi2: Option<GridSpec>,
}

/// What `kernel-limit` sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMode {
    /// Limits over the psi2 grid, one file per noise level.
    #[default]
    Psi2,
    /// Uniform bound at norm levels `psi2^p` over the psi2 grid.
    Levels,
    /// Finite-width values and deltas over the psi1 grid at fixed psi2.
    FiniteWidth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub mode: KernelMode,
    /// Noise levels for the psi2 sweep; empty means `params.tau_sq` only.
    #[serde(default)]
    pub noise_levels: Vec<f64>,
    /// Exponents `p` for the level sweep.
    #[serde(default)]
    pub level_exponents: Vec<f64>,
    /// Prefactor of the level sweep, `A = scale * psi2^p`.
    pub level_scale: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            mode: KernelMode::Psi2,
            noise_levels: vec![],
            level_exponents: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            level_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogdetConfig {
    pub dims: Vec<usize>,
    /// Imaginary parts `u` of `xi = i u`.
    pub u: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub replicates: usize,
}

impl Default for LogdetConfig {
    fn default() -> Self {
        Self {
            dims: vec![100, 200, 400],
            u: vec![0.5],
            lambdas: vec![0.5, 1.0, 2.0],
            replicates: 10,
        }
    }
}

/// Everything a run needs. Missing sections take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Prefix of every output file.
    pub figure: String,
    pub output_dir: PathBuf,
    pub alpha: f64,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub logdet: LogdetConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            figure: "run".into(),
            output_dir: PathBuf::from("."),
            alpha: 1.5,
            params: ParamsConfig::default(),
            grids: Grids::default(),
            sim: SimConfig::default(),
            kernel: KernelConfig::default(),
            logdet: LogdetConfig::default(),
        }
    }
}

/// Published parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
        })
    }
}

impl Preset {
    pub fn config(self) -> RunConfig {
        let mut c = RunConfig {
            figure: self.to_string(),
            ..RunConfig::default()
        };
        match self {
            Self::Fig1 => {
                c.grids.psi2 = Some(GridSpec::logarithmic(1e2, 1e4, 16));
                c.kernel.noise_levels = vec![0.0, 0.1];
            }
            Self::Fig2 => {
                c.params.activation = "relu".into();
                c.grids.lambda = Some(GridSpec::linear(0.426, 2.0, 8));
                c.grids.lambda_t = Some(GridSpec::linear(0.21, 2.0, 8));
            }
            Self::Fig3 => {
                c.params.tau_sq = 0.1;
                c.grids.psi2 = Some(GridSpec::logarithmic(1e2, 1e4, 16));
                c.kernel.mode = KernelMode::Levels;
            }
            Self::Fig4 => {
                c.params.tau_sq = 0.1;
                c.params.psi2 = 1.5;
                c.grids.psi1 = Some(GridSpec::logarithmic(10.0, 1e4, 12));
                c.kernel.mode = KernelMode::FiniteWidth;
            }
        }
        c
    }
}

/// Recursively overlay `top` onto `base`; tables merge, everything else replaces.
pub fn merge_tables(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge_tables(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl RunConfig {
    /// Preset (or defaults), overlaid with the file at `path` if any.
    pub fn load(preset: Option<Preset>, path: Option<&Path>) -> Result<Self, CliError> {
        let base = preset.map(Preset::config).unwrap_or_default();
        let Some(path) = path else {
            return Ok(base);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::overlay(base, &text)
    }

    /// Overlay TOML text onto an existing configuration.
    pub fn overlay(base: Self, text: &str) -> Result<Self, CliError> {
        let top: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let mut table =
            toml::Table::try_from(&base).map_err(|e| CliError::Config(e.to_string()))?;
        merge_tables(&mut table, top);
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn model_params(&self) -> Result<rfconv::ModelParams, CliError> {
        let p = &self.params;
        let profile = rfconv::preset(&p.activation, p.quad_order)
            .map_err(|e| CliError::Config(e.to_string()))?;
        rfconv::ModelParams::new(p.psi1, p.psi2, p.f1_sq, p.tau_sq, profile)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.grids;
        for (name, spec) in [
            ("lambda", &g.lambda),
            ("lambda_t", &g.lambda_t),
            ("psi1", &g.psi1),
            ("psi2", &g.psi2),
        ] {
            if let Some(s) = spec {
                s.validate(name)?;
            }
        }
        if self.alpha.is_nan() || self.alpha <= 1.0 {
            return Err(CliError::Config(format!(
                "alpha must exceed 1, got {}",
                self.alpha
            )));
        }
        if self.figure.is_empty() || self.figure.contains(['/', '\\']) {
            return Err(CliError::Config(format!(
                "invalid figure id `{}`",
                self.figure
            )));
        }
        self.model_params()?;
        Ok(())
    }

    pub fn require_grid<'a>(
        &self,
        spec: &'a Option<GridSpec>,
        name: &str,
    ) -> Result<&'a GridSpec, CliError> {
        spec.as_ref()
            .ok_or_else(|| CliError::Config(format!("this command needs grids.{name}")))
    }

    pub fn output_path(&self, family: &str) -> PathBuf {
        self.output_dir
            .join(format!("{}_{}.csv", self.figure, family))
    }
}
