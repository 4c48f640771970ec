use std::fs;
use std::path::Path;

use railbridge::homodyne::{sample, PhaseMode};
use railbridge::io::{
    density_from_json, quadratures_to_csv, read_quadratures, wigner_to_csv, DensityJson, ReconstructionJson,
};
use railbridge::pipeline::{swap_pipeline, teleportation_pipeline, SwapReport, TeleportReport};
use railbridge::protocol::{teleport, triple_budget, SectorProbability, TripleBudget};
use railbridge::rates::{rate_report, EfficiencyBudget, RateReport};
use railbridge::tomography::{linspace, maxlik_reconstruct, wigner, ReconstructionOptions};
use railbridge::{Config, DensityMatrix, Error, Order, Polarisation, Result};
use serde::Serialize;

use crate::args::{Common, GridArgs};
use crate::output::OutputDir;

/// Mode label given to states reconstructed from a quadrature file.
const MODE_LABEL: &str = "m";

#[derive(Serialize)]
struct SimulateRow {
    input: Polarisation,
    probability: f64,
    fidelity: f64,
    bad_fraction: f64,
    sectors: Vec<SectorProbability>,
    state: DensityJson,
    target: DensityJson,
}

#[derive(Serialize)]
struct SimulateReport {
    order: Order,
    rows: Vec<SimulateRow>,
    mean_fidelity: f64,
    budget: TripleBudget,
}

pub fn simulate(common: &Common) -> Result<()> {
    let config = common.resolve()?;
    let mut out = OutputDir::create(&common.out, "simulate")?;
    let rows = Polarisation::ALL
        .iter()
        .map(|&pol| {
            let o = teleport(&pol.qubit(), &config.source)?;
            Ok(SimulateRow {
                input: pol,
                probability: o.probability,
                fidelity: o.fidelity,
                bad_fraction: o.bad_fraction(),
                sectors: o.sectors.clone(),
                state: DensityJson::from(&o.rho),
                target: DensityJson::from(&o.target.to_density()?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = SimulateReport {
        order: config.source.order,
        mean_fidelity: rows.iter().map(|r| r.fidelity).sum::<f64>() / rows.len() as f64,
        budget: triple_budget(&config.source),
        rows,
    };
    println!("{:<6}{:>14}{:>10}{:>10}", "input", "probability", "fidelity", "bad");
    for r in &report.rows {
        println!(
            "{:<6}{:>14.4e}{:>10.4}{:>10.4}",
            r.input, r.probability, r.fidelity, r.bad_fraction
        );
    }
    println!("mean fidelity {:.4}", report.mean_fidelity);
    out.json("simulate.json", "simulate", &report)?;
    out.finish(&config)
}

/// Efficiency for `sample` and `reconstruct`: the flag, else the config
/// file's value, else 1 (no loss, no correction).
fn standalone_eta(common: &Common, config: &Config) -> f64 {
    match (common.eta, &common.config) {
        (Some(eta), _) => eta,
        (None, Some(_)) => config.eta,
        (None, None) => 1.0,
    }
}

pub fn sample_state(common: &Common, state: &Path) -> Result<()> {
    let config = common.resolve()?;
    let mut out = OutputDir::create(&common.out, "sample")?;
    let rho = read_density(state)?;
    out.input(state);
    let eta = standalone_eta(common, &config);
    let data = sample(&rho, config.samples, PhaseMode::Uniform, eta, config.seed)?;
    out.text("quadratures.csv", &quadratures_to_csv(&data)?)?;
    println!("{} quadratures at eta {eta}", data.len());
    out.finish(&config)
}

pub fn reconstruct(common: &Common, input: &Path) -> Result<()> {
    let mut config = Common {
        cutoff: None,
        ..common.clone()
    }
    .resolve()?;
    if let Some(c) = common.cutoff {
        config.recon_cutoff = c;
        config.validate()?;
    }
    let mut out = OutputDir::create(&common.out, "reconstruct")?;
    let eta = standalone_eta(common, &config);
    let data = read_quadratures(fs::File::open(input)?, eta, MODE_LABEL)?;
    out.input(input);
    let opts = ReconstructionOptions {
        cutoff: config.recon_cutoff,
        eta,
        ..ReconstructionOptions::default()
    };
    let result = maxlik_reconstruct(&data, &opts)?;
    println!(
        "{} samples, {} iterations, converged {}, log-likelihood {:.6}",
        data.len(),
        result.iterations,
        result.converged,
        result.final_loglik()
    );
    out.json(
        "reconstruction.json",
        "reconstruction",
        &ReconstructionJson::from(&result),
    )?;
    out.finish(&config)
}

pub fn wigner_grid(common: &Common, state: &Path, grid: &GridArgs) -> Result<()> {
    let config = common.resolve()?;
    if !(grid.grid_points >= 2 && grid.grid_min < grid.grid_max) {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "need at least 2 points and grid_min < grid_max".into(),
        });
    }
    let mut out = OutputDir::create(&common.out, "wigner")?;
    let rho = read_density(state)?;
    out.input(state);
    let axis = linspace(grid.grid_min, grid.grid_max, grid.grid_points);
    let w = wigner(&rho, &axis, &axis)?;
    println!("minimum {:.6}, integral {:.6}", w.min(), w.integral());
    out.text("wigner.csv", &wigner_to_csv(&w))?;
    out.finish(&config)
}

pub fn swap(common: &Common) -> Result<()> {
    let config = common.resolve()?;
    let mut out = OutputDir::create(&common.out, "swap")?;
    let report = swap_pipeline(&config)?;
    print_swap(&report);
    out.json("swap.json", "swap", &report)?;
    out.finish(&config)
}

fn print_swap(r: &SwapReport) {
    for (name, w) in [
        ("simulated", r.simulated),
        ("uncorrected", r.uncorrected),
        ("corrected", r.corrected),
    ] {
        let verdict = if w.entangled { "entangled" } else { "not certified" };
        println!("{name:<12} fidelity {:.4}  {verdict}", w.fidelity);
    }
}

#[derive(Serialize)]
struct RatesOutput {
    rates: RateReport,
    efficiency: EfficiencyBudget,
    efficiency_discrepancy: f64,
}

pub fn rates(common: &Common) -> Result<()> {
    let config = common.resolve()?;
    let mut out = OutputDir::create(&common.out, "rates")?;
    let efficiency = EfficiencyBudget::default();
    let report = RatesOutput {
        rates: rate_report(&config.rates)?,
        efficiency_discrepancy: efficiency.discrepancy(),
        efficiency,
    };
    let r = &report.rates;
    println!(
        "eta_d {:.4}  gamma1 {:.4}  gamma23 {:.4}  alpha {:.4}",
        r.eta_d, r.gamma1, r.gamma23, r.alpha
    );
    println!(
        "triple rate {:.4} Hz predicted, {} ± {} Hz observed",
        r.predicted_triple_rate, r.observed_triple_rate, r.observed_triple_rate_err
    );
    out.json("rates.json", "rates", &report)?;
    out.finish(&config)
}

#[derive(Serialize)]
struct PipelineOutput<'a> {
    teleport: &'a TeleportReport,
    swap: &'a SwapReport,
}

pub fn pipeline(common: &Common) -> Result<()> {
    let config = common.resolve()?;
    let mut out = OutputDir::create(&common.out, "pipeline")?;
    let teleport = teleportation_pipeline(&config)?;
    let swap = swap_pipeline(&config)?;
    let axis = linspace(-5.0, 5.0, 101);
    for row in &teleport.rows {
        let p = row.input.label();
        out.text(&format!("quadratures_{p}.csv"), &quadratures_to_csv(&row.dataset)?)?;
        for (kind, state) in [("uncorrected", &row.uncorrected), ("corrected", &row.corrected)] {
            let w = wigner(&state.to_density()?, &axis, &axis)?;
            out.text(&format!("wigner_{p}_{kind}.csv"), &wigner_to_csv(&w))?;
        }
    }
    for (pol, data) in &swap.datasets {
        out.text(
            &format!("swap_quadratures_{}.csv", pol.label()),
            &quadratures_to_csv(data)?,
        )?;
    }
    println!(
        "{:<6}{:>11}{:>13}{:>11}{:>9}",
        "input", "simulated", "uncorrected", "corrected", "error"
    );
    for r in &teleport.rows {
        println!(
            "{:<6}{:>11.4}{:>13.4}{:>11.4}{:>9.4}",
            r.input, r.simulated_fidelity, r.fidelity_uncorrected, r.fidelity_corrected, r.error
        );
    }
    println!(
        "{:<6}{:>11.4}{:>13.4}{:>11.4}",
        "mean", teleport.mean_simulated, teleport.mean_uncorrected, teleport.mean_corrected
    );
    print_swap(&swap);
    out.json(
        "pipeline.json",
        "pipeline",
        &PipelineOutput {
            teleport: &teleport,
            swap: &swap,
        },
    )?;
    out.finish(&config)
}

fn read_density(path: &Path) -> Result<DensityMatrix> {
    density_from_json(&fs::read_to_string(path)?)
}
