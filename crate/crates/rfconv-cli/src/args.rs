use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{GridSpec, KernelMode, Preset, RunConfig};
use crate::error::CliError;

/// Asymptotic uniform-convergence bounds for random features regression.
#[derive(Debug, Parser)]
#[command(name = "rfconv", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Penalized values, norm levels and min-norm risk over a lambda grid.
    Theory {
        /// Also write the rational-form and limit-direction diagnostics.
        #[arg(long)]
        diagnostics: bool,
    },
    /// Monte Carlo replicates of the penalized maximizers and the min-norm interpolator.
    Simulate,
    /// Fit log-log slopes to columns of a CSV.
    Powerlaw(PowerlawArgs),
    /// Kernel-regime limits and finite-width deltas.
    KernelLimit {
        #[arg(long, value_enum)]
        mode: Option<KernelMode>,
    },
    /// Empirical log-determinant against its limit.
    LogdetCheck,
    /// Simulate and compare against theory with z-scores.
    Compare,
}

#[derive(Debug, Args)]
pub struct PowerlawArgs {
    /// CSV to read.
    #[arg(long)]
    pub input: PathBuf,
    /// Abscissa column.
    #[arg(long)]
    pub x: String,
    /// Ordinate column; repeat for several fits.
    #[arg(long, required = true)]
    pub y: Vec<String>,
    /// Subtracted from every ordinate before the fit.
    #[arg(long, default_value_t = 0.0)]
    pub subtract: f64,
    /// Fit window `min:max`; the top decade of x by default.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(f64, f64)>,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML configuration; its values override the preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Start from a published parameter set.
    #[arg(long = "paper-defaults", global = true, value_enum)]
    pub preset: Option<Preset>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,

    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Prefix of the output files.
    #[arg(long, global = true)]
    pub figure: Option<String>,

    #[arg(long, global = true)]
    pub psi1: Option<f64>,
    #[arg(long, global = true)]
    pub psi2: Option<f64>,
    #[arg(long, global = true)]
    pub f1_sq: Option<f64>,
    #[arg(long, global = true)]
    pub tau_sq: Option<f64>,
    #[arg(long, global = true)]
    pub activation: Option<String>,
    #[arg(long, global = true)]
    pub quad_order: Option<usize>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,

    /// `min:max:count[:log]`
    #[arg(long, global = true, value_parser = parse_grid)]
    pub lambda_grid: Option<GridSpec>,
    #[arg(long, global = true, value_parser = parse_grid)]
    pub lambda_t_grid: Option<GridSpec>,
    #[arg(long, global = true, value_parser = parse_grid)]
    pub psi1_grid: Option<GridSpec>,
    #[arg(long, global = true, value_parser = parse_grid)]
    pub psi2_grid: Option<GridSpec>,

    #[arg(long, global = true)]
    pub d: Option<usize>,
    #[arg(long, global = true)]
    pub n_features: Option<usize>,
    #[arg(long, global = true)]
    pub n_samples: Option<usize>,
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

pub fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    match parts.as_slice() {
        [a, b, n] | [a, b, n, _] => {
            let log = match parts.get(3).map(|t| t.trim()) {
                None | Some("lin") => false,
                Some("log") => true,
                Some(other) => return Err(format!("unknown spacing `{other}` (use lin or log)")),
            };
            Ok(GridSpec {
                min: num(a)?,
                max: num(b)?,
                count: n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?,
                log,
            })
        }
        _ => Err("expected min:max:count[:log]".into()),
    }
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected min:max")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
    Ok((a, b))
}

impl CommonArgs {
    /// Preset, then file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::load(self.preset, self.config.as_deref())?;
        macro_rules! set {
            ($field:expr, $flag:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(c.output_dir, self.output_dir);
        set!(c.figure, self.figure);
        set!(c.params.psi1, self.psi1);
        set!(c.params.psi2, self.psi2);
        set!(c.params.f1_sq, self.f1_sq);
        set!(c.params.tau_sq, self.tau_sq);
        set!(c.params.activation, self.activation);
        set!(c.params.quad_order, self.quad_order);
        set!(c.alpha, self.alpha);
        set!(c.sim.d, self.d);
        set!(c.sim.n_features, self.n_features);
        set!(c.sim.n_samples, self.n_samples);
        set!(c.sim.replicates, self.replicates);
        set!(c.sim.base_seed, self.seed);
        if let Some(g) = &self.lambda_grid {
            c.grids.lambda = Some(g.clone());
        }
        if let Some(g) = &self.lambda_t_grid {
            c.grids.lambda_t = Some(g.clone());
        }
        if let Some(g) = &self.psi1_grid {
            c.grids.psi1 = Some(g.clone());
        }
        if let Some(g) = &self.psi2_grid {
            c.grids.psi2 = Some(g.clone());
        }
        Ok(c)
    }
}
