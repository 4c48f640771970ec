//! Browser bindings. Every export returns a JSON string (or an error
//! message), so the same functions are callable and testable natively.

use railbridge::homodyne::{sample, PhaseMode};
use railbridge::io::DensityJson;
use railbridge::protocol::{teleport, SourceParams};
use railbridge::rates::{rate_report, RateModel};
use railbridge::tomography::{fidelity_to_pure, linspace, maxlik_reconstruct, wigner, ReconstructionOptions};
use railbridge::{Order, QubitSpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_SAMPLES: usize = 50_000;
const MAX_GRID: usize = 201;

fn source(gamma1: f64, gamma23: f64, alpha: f64, eta_d: f64, exact: bool) -> SourceParams {
    let base = if exact {
        SourceParams::exact()
    } else {
        SourceParams::default()
    };
    SourceParams {
        gamma1,
        gamma23,
        alpha,
        eta_d,
        order: if exact { Order::Exact } else { Order::Perturbative },
        ..base
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct TeleportView {
    fidelity: f64,
    probability: f64,
    bad_fraction: f64,
    /// Bloch vector of the output restricted to {|0⟩, |1⟩}.
    bloch: [f64; 3],
    rho: DensityJson,
}

/// Teleports the qubit at Bloch angles (theta, phi) and reports the output
/// state of the single-rail mode.
#[wasm_bindgen]
pub fn teleport_qubit(
    theta: f64,
    phi: f64,
    gamma1: f64,
    gamma23: f64,
    alpha: f64,
    eta_d: f64,
    exact: bool,
) -> Result<String, String> {
    let p = source(gamma1, gamma23, alpha, eta_d, exact);
    let out = teleport(&QubitSpec::from_bloch(theta, phi), &p).map_err(|e| e.to_string())?;
    let m = out.rho.matrix();
    let norm = m[(0, 0)].re + m[(1, 1)].re;
    let c = m[(0, 1)].conj() / norm;
    to_json(&TeleportView {
        fidelity: out.fidelity,
        probability: out.probability,
        bad_fraction: out.bad_fraction(),
        bloch: [2.0 * c.re, 2.0 * c.im, (m[(0, 0)].re - m[(1, 1)].re) / norm],
        rho: DensityJson::from(&out.rho),
    })
}

#[derive(Serialize)]
struct WignerView {
    q: Vec<f64>,
    p: Vec<f64>,
    simulated: Vec<Vec<f64>>,
    reconstructed: Vec<Vec<f64>>,
    fidelity: f64,
    iterations: usize,
}

/// Teleports (theta, phi) at exact order, samples `samples` quadratures
/// through a detector of efficiency `eta`, reconstructs (optionally
/// correcting for `eta`) and returns both Wigner functions on a
/// `points`×`points` grid over [−extent, extent]².
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn teleport_and_reconstruct(
    theta: f64,
    phi: f64,
    samples: usize,
    eta: f64,
    correct: bool,
    seed: u64,
    points: usize,
    extent: f64,
) -> Result<String, String> {
    if samples == 0 || samples > MAX_SAMPLES {
        return Err(format!("samples must be in 1..={MAX_SAMPLES}"));
    }
    if !(2..=MAX_GRID).contains(&points) || !(extent > 0.0) {
        return Err(format!("grid needs 2..={MAX_GRID} points and a positive extent"));
    }
    let out = teleport(&QubitSpec::from_bloch(theta, phi), &SourceParams::exact()).map_err(|e| e.to_string())?;
    let data = sample(&out.rho, samples, PhaseMode::Uniform, eta, seed).map_err(|e| e.to_string())?;
    let opts = ReconstructionOptions {
        eta: if correct { eta } else { 1.0 },
        ..ReconstructionOptions::default()
    };
    let recon = maxlik_reconstruct(&data, &opts).map_err(|e| e.to_string())?;
    let axis = linspace(-extent, extent, points);
    let sim = wigner(&out.rho, &axis, &axis).map_err(|e| e.to_string())?;
    let rec = wigner(&recon.rho, &axis, &axis).map_err(|e| e.to_string())?;
    to_json(&WignerView {
        fidelity: fidelity_to_pure(&recon.rho, &out.target).map_err(|e| e.to_string())?,
        iterations: recon.iterations,
        q: axis.clone(),
        p: axis,
        simulated: sim.values,
        reconstructed: rec.values,
    })
}

/// Source amplitudes and predicted triple rate from measured count rates.
#[wasm_bindgen]
pub fn rates_from_counts(
    laser_rate: f64,
    alpha_rate: f64,
    gamma1_rate: f64,
    gamma23_rate: f64,
    coincidence_rate: f64,
    projector_loss_factor: f64,
) -> Result<String, String> {
    let model = RateModel {
        laser_rate,
        alpha_rate,
        gamma1_rate,
        gamma23_rate,
        coincidence_rate,
        projector_loss_factor,
    };
    to_json(&rate_report(&model).map_err(|e| e.to_string())?)
}
