//! End-to-end runs: simulate the conditional states, sample homodyne data,
//! reconstruct with and without efficiency correction, and score the result.

use std::collections::BTreeMap;
use std::thread;

use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::homodyne::{sample, PhaseMode, QuadratureDataset};
use crate::io::DensityJson;
use crate::protocol::{swap_conditional, swap_entanglement, teleport, SectorProbability, B};
use crate::qubit::Polarisation;
use crate::rates::EfficiencyBudget;
use crate::tomography::{
    bootstrap_fidelity, combined_error, drift_spread, entanglement_witness, fidelity_to_pure,
    joint_reconstruct_swapped, maxlik_reconstruct, ReconstructionOptions, Witness,
};

/// Efficiency correction used for corrected reconstructions, and its drift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Correction {
    pub eta: f64,
    pub drift: f64,
}

impl Correction {
    pub fn from_config(config: &Config) -> Self {
        Self {
            eta: config.eta,
            drift: EfficiencyBudget::default().drift,
        }
    }

    fn etas(&self) -> Vec<f64> {
        vec![self.eta - self.drift, self.eta, (self.eta + self.drift).min(1.0)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TeleportRow {
    pub input: Polarisation,
    pub seed: u64,
    /// Probability per pulse of the triple coincidence.
    pub probability: f64,
    pub bad_fraction: f64,
    pub sectors: Vec<SectorProbability>,
    /// Fidelity of the simulated conditional state, before homodyne loss.
    pub simulated_fidelity: f64,
    pub fidelity_uncorrected: f64,
    pub fidelity_corrected: f64,
    pub bootstrap_error: f64,
    pub drift_error: f64,
    pub error: f64,
    pub simulated: DensityJson,
    pub uncorrected: DensityJson,
    pub corrected: DensityJson,
    #[serde(skip)]
    pub dataset: QuadratureDataset,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TeleportReport {
    pub samples: usize,
    pub eta: f64,
    pub correction: Correction,
    pub rows: Vec<TeleportRow>,
    pub mean_simulated: f64,
    pub mean_uncorrected: f64,
    pub mean_corrected: f64,
}

/// Teleports the six inputs, samples `config.samples` quadratures of each
/// output at efficiency `config.eta` and reconstructs them. The six inputs run
/// on separate threads with seeds `config.seed + index`.
pub fn teleportation_pipeline(config: &Config) -> Result<TeleportReport> {
    config.validate()?;
    let correction = Correction::from_config(config);
    let rows = thread::scope(|s| {
        let handles: Vec<_> = Polarisation::ALL
            .iter()
            .enumerate()
            .map(|(i, &pol)| s.spawn(move || teleport_row(config, correction, pol, config.seed.wrapping_add(i as u64))))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::param("pipeline", "worker panicked")))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mean = |f: fn(&TeleportRow) -> f64| rows.iter().map(f).sum::<f64>() / rows.len() as f64;
    Ok(TeleportReport {
        samples: config.samples,
        eta: config.eta,
        correction,
        mean_simulated: mean(|r| r.simulated_fidelity),
        mean_uncorrected: mean(|r| r.fidelity_uncorrected),
        mean_corrected: mean(|r| r.fidelity_corrected),
        rows,
    })
}

fn teleport_row(config: &Config, correction: Correction, input: Polarisation, seed: u64) -> Result<TeleportRow> {
    let outcome = teleport(&input.qubit(), &config.source)?;
    let dataset = sample(&outcome.rho, config.samples, PhaseMode::Uniform, config.eta, seed)?;
    let opts = ReconstructionOptions {
        cutoff: config.recon_cutoff,
        ..ReconstructionOptions::default()
    };
    let uncorrected = maxlik_reconstruct(&dataset, &opts)?;
    let corrected_opts = ReconstructionOptions {
        eta: correction.eta,
        ..opts
    };
    let corrected = maxlik_reconstruct(&dataset, &corrected_opts)?;
    let target = &outcome.target;
    let fidelity_corrected = fidelity_to_pure(&corrected.rho, target)?;
    let drift_error = drift_spread(&dataset, &opts, &correction.etas(), target)?.spread;
    let bootstrap_error = bootstrap_fidelity(&dataset, &corrected_opts, target, config.resamples, seed)?;
    Ok(TeleportRow {
        input,
        seed,
        probability: outcome.probability,
        bad_fraction: outcome.bad_fraction(),
        sectors: outcome.sectors.clone(),
        simulated_fidelity: outcome.fidelity,
        fidelity_uncorrected: fidelity_to_pure(&uncorrected.rho, target)?,
        fidelity_corrected,
        bootstrap_error,
        drift_error,
        error: combined_error(bootstrap_error, drift_error),
        simulated: DensityJson::from(&outcome.rho),
        uncorrected: DensityJson::from(&uncorrected.rho),
        corrected: DensityJson::from(&corrected.rho),
        dataset,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SwapSetting {
    pub setting: Polarisation,
    pub seed: u64,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SwapReport {
    pub samples: usize,
    pub eta: f64,
    pub settings: Vec<SwapSetting>,
    /// Witness on the simulated state before homodyne loss.
    pub simulated: Witness,
    pub uncorrected: Witness,
    pub corrected: Witness,
    pub corrected_state: DensityJson,
    pub uncorrected_state: DensityJson,
    #[serde(skip)]
    pub datasets: BTreeMap<Polarisation, QuadratureDataset>,
}

/// Projects D onto each of the six analyser settings, samples B, and
/// reconstructs the joint D-polarisation ⊗ B state.
pub fn swap_pipeline(config: &Config) -> Result<SwapReport> {
    config.validate()?;
    let p = &config.source;
    let runs = thread::scope(|s| {
        let handles: Vec<_> = Polarisation::ALL
            .iter()
            .enumerate()
            .map(|(i, &pol)| {
                s.spawn(move || {
                    let seed = config.seed.wrapping_add(i as u64);
                    let (rho, probability) = swap_conditional(p, &pol.qubit())?;
                    let data = sample(&rho, config.samples, PhaseMode::Uniform, config.eta, seed)?;
                    Ok((
                        SwapSetting {
                            setting: pol,
                            seed,
                            probability,
                        },
                        data,
                    ))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::param("pipeline", "worker panicked")))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut settings = Vec::with_capacity(runs.len());
    let mut datasets = BTreeMap::new();
    for (setting, mut data) in runs {
        data.source_label = B.to_string();
        datasets.insert(setting.setting, data);
        settings.push(setting);
    }
    let opts = ReconstructionOptions {
        cutoff: config.recon_cutoff,
        ..ReconstructionOptions::default()
    };
    let uncorrected = joint_reconstruct_swapped(&datasets, &opts)?;
    let corrected = joint_reconstruct_swapped(
        &datasets,
        &ReconstructionOptions {
            eta: config.eta,
            ..opts
        },
    )?;
    Ok(SwapReport {
        samples: config.samples,
        eta: config.eta,
        settings,
        simulated: entanglement_witness(&swap_entanglement(p)?.state)?,
        uncorrected: entanglement_witness(&uncorrected.state)?,
        corrected: entanglement_witness(&corrected.state)?,
        corrected_state: DensityJson::from(&corrected.state.to_density()?),
        uncorrected_state: DensityJson::from(&uncorrected.state.to_density()?),
        datasets,
    })
}
