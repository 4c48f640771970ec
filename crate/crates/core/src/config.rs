//! Flat key-value experiment configuration (TOML syntax).
//!
//! ```toml
//! gamma1 = 0.20
//! gamma23 = 0.054
//! alpha = 0.20
//! alpha_phase = 0.0
//! eta_d = 0.03
//! eta = 0.5
//! order = "exact"
//! cutoff = 2
//! seed = 7
//! ```

use std::path::Path;

use serde::Serialize;
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::optics::Order;
use crate::protocol::SourceParams;
use crate::rates::RateModel;

pub const REQUIRED_KEYS: [&str; 7] = ["gamma1", "gamma23", "alpha", "eta_d", "eta", "order", "cutoff"];

pub const OPTIONAL_KEYS: [&str; 13] = [
    "alpha_phase",
    "gamma1_phase",
    "delta_phi23",
    "seed",
    "samples",
    "recon_cutoff",
    "resamples",
    "laser_rate",
    "alpha_rate",
    "gamma1_rate",
    "gamma23_rate",
    "coincidence_rate",
    "projector_loss_factor",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Config {
    pub source: SourceParams,
    /// Homodyne detection efficiency applied when sampling, and the
    /// correction used by corrected reconstructions.
    pub eta: f64,
    pub seed: u64,
    pub samples: usize,
    pub recon_cutoff: usize,
    pub resamples: usize,
    pub rates: RateModel,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            source: SourceParams::default(),
            eta: 0.5,
            seed: 0,
            samples: 2000,
            recon_cutoff: 4,
            resamples: 10,
            rates: RateModel::default(),
        }
    }
}

impl std::str::FromStr for Config {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0);
            Error::Parse {
                line,
                message: e.message().to_string(),
            }
        })?;
        Config::from_table(&table)
    }
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn from_table(table: &Table) -> Result<Self> {
        let unknown: Vec<String> = table
            .keys()
            .filter(|k| !REQUIRED_KEYS.contains(&k.as_str()) && !OPTIONAL_KEYS.contains(&k.as_str()))
            .cloned()
            .collect();
        if !unknown.is_empty() {
            return Err(Error::UnknownKeys(unknown));
        }
        let missing: Vec<String> = REQUIRED_KEYS
            .iter()
            .filter(|k| !table.contains_key(**k))
            .map(|k| k.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingKeys(missing));
        }

        let d = Config::default();
        let f = |key: &str, default: f64| float(table, key).map(|v| v.unwrap_or(default));
        let u = |key: &str, default: u64| integer(table, key).map(|v| v.unwrap_or(default));
        let order = match table.get("order") {
            Some(Value::String(s)) => s.parse::<Order>().map_err(|e| value_error("order", e.to_string()))?,
            _ => return Err(value_error("order", "expected a string")),
        };
        let source = SourceParams {
            gamma1: f("gamma1", 0.0)?,
            gamma23: f("gamma23", 0.0)?,
            alpha: f("alpha", 0.0)?,
            phi_gamma1: f("gamma1_phase", d.source.phi_gamma1)?,
            phi_alpha: f("alpha_phase", d.source.phi_alpha)?,
            delta_phi23: f("delta_phi23", d.source.delta_phi23)?,
            eta_d: f("eta_d", 0.0)?,
            order,
            cutoff: u("cutoff", 0)? as usize,
        };
        let rates = RateModel {
            laser_rate: f("laser_rate", d.rates.laser_rate)?,
            alpha_rate: f("alpha_rate", d.rates.alpha_rate)?,
            gamma1_rate: f("gamma1_rate", d.rates.gamma1_rate)?,
            gamma23_rate: f("gamma23_rate", d.rates.gamma23_rate)?,
            coincidence_rate: f("coincidence_rate", d.rates.coincidence_rate)?,
            projector_loss_factor: f("projector_loss_factor", d.rates.projector_loss_factor)?,
        };
        let config = Config {
            source,
            eta: f("eta", 0.0)?,
            seed: u("seed", d.seed)?,
            samples: u("samples", d.samples as u64)? as usize,
            recon_cutoff: u("recon_cutoff", d.recon_cutoff as u64)? as usize,
            resamples: u("resamples", d.resamples as u64)? as usize,
            rates,
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks every value and names the offending key.
    pub fn validate(&self) -> Result<()> {
        self.source.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => value_error(name, reason),
            Error::InvalidCutoff(c) => value_error("cutoff", format!("{c} out of range")),
            other => other,
        })?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(value_error("eta", format!("{} outside (0, 1]", self.eta)));
        }
        if self.samples == 0 {
            return Err(value_error("samples", "must be positive"));
        }
        if self.recon_cutoff == 0 || self.recon_cutoff > crate::fock::MAX_CUTOFF {
            return Err(value_error(
                "recon_cutoff",
                format!("{} out of range", self.recon_cutoff),
            ));
        }
        self.rates.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => value_error(name, reason),
            other => other,
        })
    }

    /// The same configuration as a flat table, keys sorted.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new();
        let s = &self.source;
        let mut put = |k: &str, v: Value| {
            t.insert(k.to_string(), v);
        };
        put("gamma1", Value::Float(s.gamma1));
        put("gamma23", Value::Float(s.gamma23));
        put("alpha", Value::Float(s.alpha));
        put("gamma1_phase", Value::Float(s.phi_gamma1));
        put("alpha_phase", Value::Float(s.phi_alpha));
        put("delta_phi23", Value::Float(s.delta_phi23));
        put("eta_d", Value::Float(s.eta_d));
        put("order", Value::String(s.order.to_string()));
        put("cutoff", Value::Integer(s.cutoff as i64));
        put("eta", Value::Float(self.eta));
        put("seed", Value::Integer(self.seed as i64));
        put("samples", Value::Integer(self.samples as i64));
        put("recon_cutoff", Value::Integer(self.recon_cutoff as i64));
        put("resamples", Value::Integer(self.resamples as i64));
        let r = &self.rates;
        put("laser_rate", Value::Float(r.laser_rate));
        put("alpha_rate", Value::Float(r.alpha_rate));
        put("gamma1_rate", Value::Float(r.gamma1_rate));
        put("gamma23_rate", Value::Float(r.gamma23_rate));
        put("coincidence_rate", Value::Float(r.coincidence_rate));
        put("projector_loss_factor", Value::Float(r.projector_loss_factor));
        t
    }

    pub fn to_toml(&self) -> String {
        self.to_table().to_string()
    }
}

fn value_error(key: &str, message: impl Into<String>) -> Error {
    Error::ConfigValue {
        key: key.to_string(),
        message: message.into(),
    }
}

fn float(table: &Table, key: &str) -> Result<Option<f64>> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::Float(v)) => Ok(Some(*v)),
        Some(Value::Integer(v)) => Ok(Some(*v as f64)),
        Some(other) => Err(value_error(
            key,
            format!("expected a number, found {}", other.type_str()),
        )),
    }
}

fn integer(table: &Table, key: &str) -> Result<Option<u64>> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::Integer(v)) if *v >= 0 => Ok(Some(*v as u64)),
        Some(Value::Integer(v)) => Err(value_error(key, format!("{v} is negative"))),
        Some(other) => Err(value_error(
            key,
            format!("expected a non-negative integer, found {}", other.type_str()),
        )),
    }
}
