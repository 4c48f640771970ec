use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use railbridge::{Config, Error, Order, Result};

pub const SEED_ENV: &str = "RAILBRIDGE_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "railbridge",
    version,
    about = "Single-/dual-rail teleportation simulator and homodyne tomography"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Teleport the six canonical inputs and report the conditional states.
    Simulate(Common),
    /// Draw homodyne quadratures from a density-matrix JSON file.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Density-matrix JSON of the state to measure.
        #[arg(long)]
        state: PathBuf,
    },
    /// Maximum-likelihood reconstruction from a quadrature CSV file.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Quadrature CSV with header `theta_rad,x`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Wigner function of a density-matrix JSON file on a square grid.
    Wigner {
        #[command(flatten)]
        common: Common,
        /// Single-mode density-matrix JSON.
        #[arg(long)]
        state: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Entanglement swapping: joint reconstruction and witness.
    Swap(Common),
    /// Efficiencies and pair amplitudes derived from count rates.
    Rates(Common),
    /// Teleportation and swapping from simulation through reconstruction.
    Pipeline(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Experiment configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Random seed; falls back to $RAILBRIDGE_SEED, then the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Photon cutoff: per source mode, or of the fit for `reconstruct`.
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Homodyne efficiency (sampling) and efficiency correction.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Click-detector efficiency.
    #[arg(long = "eta-d")]
    pub eta_d: Option<f64>,
    /// Source expansion: `pert` or `exact`.
    #[arg(long)]
    pub order: Option<Order>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Quadratures per state.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Bootstrap resamples for error bars.
    #[arg(long)]
    pub resamples: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// Lower bound of both phase-space axes.
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    pub grid_min: f64,
    /// Upper bound of both phase-space axes.
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub grid_max: f64,
    /// Points per axis.
    #[arg(long, default_value_t = 101)]
    pub grid_points: usize,
}

impl Common {
    /// Config file (or defaults) with flag overrides applied. Seed
    /// precedence: flag, environment, file.
    pub fn resolve(&self) -> Result<Config> {
        let mut c = match &self.config {
            Some(path) => Config::from_path(path)?,
            None => Config::default(),
        };
        if let Some(v) = self.cutoff {
            c.source.cutoff = v;
        }
        if let Some(v) = self.eta {
            c.eta = v;
        }
        if let Some(v) = self.eta_d {
            c.source.eta_d = v;
        }
        if let Some(v) = self.order {
            c.source.order = v;
        }
        if let Some(v) = self.samples {
            c.samples = v;
        }
        if let Some(v) = self.resamples {
            c.resamples = v;
        }
        if let Some(seed) = self.seed.map(Ok).or_else(env_seed).transpose()? {
            c.seed = seed;
        }
        c.validate()?;
        Ok(c)
    }
}

fn env_seed() -> Option<Result<u64>> {
    let raw = std::env::var(SEED_ENV).ok()?;
    Some(raw.trim().parse().map_err(|_| Error::ConfigValue {
        key: SEED_ENV.to_string(),
        message: format!("`{raw}` is not a non-negative integer"),
    }))
}
