//! Linear-optical elements, sources and click detectors acting on sparse
//! Fock states.
//!
//! Polarisation modes of a spatial mode `X` are labelled `X.H` and `X.V`.
//! Jones conventions (acting on (H, V) amplitudes):
//!
//! * HWP(θ) = [[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]
//! * QWP(θ) = R(−θ) diag(i, 1) R(θ), i.e. phase i on the slow axis at θ
//! * beam splitter: a → √t a + √(1−t) b, b → √(1−t) a − √t b
//!
//! Two-mode maps are lifted to Fock space with exact factorial-weighted
//! transition amplitudes.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ModeRegister, Occupation, PureState, NULL_PROBABILITY};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Expansion order of photon sources.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    /// Vacuum plus the first-order term only, as in the usual weak-source
    /// expansion.
    #[default]
    #[serde(rename = "pert")]
    Perturbative,
    /// Full photon-number distribution up to the cutoff.
    #[serde(rename = "exact")]
    Exact,
}

impl std::str::FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pert" | "perturbative" | "perturbative-1" => Ok(Order::Perturbative),
            "exact" => Ok(Order::Exact),
            other => Err(Error::param(
                "order",
                format!("expected `pert` or `exact`, got `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            Order::Perturbative => "pert",
            Order::Exact => "exact",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pol {
    H,
    V,
}

/// `X.H` / `X.V`.
pub fn mode_label(spatial: &str, pol: Pol) -> String {
    match pol {
        Pol::H => format!("{spatial}.H"),
        Pol::V => format!("{spatial}.V"),
    }
}

pub fn rotation(angle: f64) -> Matrix2<Complex64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(
        Complex64::new(c, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(c, 0.0),
    )
}

pub fn hwp_jones(angle: f64) -> Matrix2<Complex64> {
    let (s, c) = (2.0 * angle).sin_cos();
    Matrix2::new(
        Complex64::new(c, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(-c, 0.0),
    )
}

pub fn qwp_jones(angle: f64) -> Matrix2<Complex64> {
    let retarder = Matrix2::new(Complex64::new(0.0, 1.0), ZERO, ZERO, ONE);
    rotation(-angle) * retarder * rotation(angle)
}

/// Unitary sending polarisation `p` to H and its orthogonal partner to V.
pub fn analyser_unitary(p_h: Complex64, p_v: Complex64) -> Matrix2<Complex64> {
    Matrix2::new(p_h.conj(), p_v.conj(), -p_v, p_h)
}

fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, "must be finite"))
    }
}

fn polarisation_pair(state: &PureState, spatial: &str) -> Result<(usize, usize)> {
    let reg = state.register();
    let h = reg.position(&mode_label(spatial, Pol::H));
    let v = reg.position(&mode_label(spatial, Pol::V));
    match (h, v) {
        (Ok(h), Ok(v)) => Ok((h, v)),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

/// Applies a 2×2 mode transformation between two labelled modes.
pub fn mode_unitary(state: &PureState, a: &str, b: &str, u: &Matrix2<Complex64>) -> Result<PureState> {
    let i = state.register().position(a)?;
    let j = state.register().position(b)?;
    Ok(state.mode_transform(i, j, u))
}

/// Jones matrix applied to the H/V modes of one spatial mode.
pub fn polarisation_unitary(state: &PureState, spatial: &str, jones: &Matrix2<Complex64>) -> Result<PureState> {
    let (h, v) = polarisation_pair(state, spatial)?;
    Ok(state.mode_transform(h, v, jones))
}

pub fn beam_splitter(state: &PureState, a: &str, b: &str, transmissivity: f64) -> Result<PureState> {
    if !(0.0..=1.0).contains(&transmissivity) {
        return Err(Error::param(
            "transmissivity",
            format!("{transmissivity} outside [0, 1]"),
        ));
    }
    let t = transmissivity.sqrt();
    let r = (1.0 - transmissivity).sqrt();
    let u = Matrix2::new(
        Complex64::new(t, 0.0),
        Complex64::new(r, 0.0),
        Complex64::new(r, 0.0),
        Complex64::new(-t, 0.0),
    );
    mode_unitary(state, a, b, &u)
}

pub fn half_wave_plate(state: &PureState, spatial: &str, angle: f64) -> Result<PureState> {
    check_finite("angle", angle)?;
    polarisation_unitary(state, spatial, &hwp_jones(angle))
}

pub fn quarter_wave_plate(state: &PureState, spatial: &str, angle: f64) -> Result<PureState> {
    check_finite("angle", angle)?;
    polarisation_unitary(state, spatial, &qwp_jones(angle))
}

/// Transmits H and reflects V: the V modes of `in1` and `in2` are exchanged.
pub fn polarising_bs(state: &PureState, in1: &str, in2: &str) -> Result<PureState> {
    let reg = state.register();
    let v1 = reg.position(&mode_label(in1, Pol::V))?;
    let v2 = reg.position(&mode_label(in2, Pol::V))?;
    reg.position(&mode_label(in1, Pol::H))?;
    reg.position(&mode_label(in2, Pol::H))?;
    Ok(state.swap_positions(v1, v2))
}

/// Multiplies each amplitude by e^{inφ}, n the photon number of `mode`.
pub fn phase_shift(state: &PureState, mode: &str, phi: f64) -> Result<PureState> {
    check_finite("phi", phi)?;
    let p = state.register().position(mode)?;
    Ok(state.map_amplitudes(|occ| Complex64::from_polar(1.0, phi * occ.counts()[p] as f64)))
}

/// Linear polariser transmitting cos(θ)|H⟩ + sin(θ)|V⟩. Post-selects on no
/// photon being absorbed; returns the normalized transmitted state and the
/// probability of that outcome.
pub fn polariser(state: &PureState, spatial: &str, angle: f64) -> Result<(PureState, f64)> {
    check_finite("angle", angle)?;
    let (h, v) = polarisation_pair(state, spatial)?;
    let rotated = state.mode_transform(h, v, &rotation(angle));
    let kept = rotated.filter(|occ| occ.counts()[v] == 0);
    let back = kept.mode_transform(h, v, &rotation(-angle));
    let probability = back.norm_sqr() / state.norm_sqr();
    if probability < NULL_PROBABILITY {
        return Err(Error::NullOutcome(probability));
    }
    Ok((back.normalize()?, probability))
}

/// Amplitudes c_n of a two-mode squeezed vacuum Σ c_n |n, n⟩.
pub fn pair_amplitudes(gamma: Complex64, cutoff: usize, order: Order) -> Result<Vec<Complex64>> {
    if gamma.norm() >= 1.0 || !gamma.norm().is_finite() {
        return Err(Error::param("gamma", format!("|γ| = {} must be below 1", gamma.norm())));
    }
    let mut amps = match order {
        Order::Perturbative => vec![ONE, gamma],
        Order::Exact => {
            let scale = (1.0 - gamma.norm_sqr()).sqrt();
            (0..=cutoff).map(|n| gamma.powu(n as u32) * scale).collect()
        }
    };
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    Ok(amps)
}

/// Fills two vacuum modes with a photon-pair state Σ c_n |n, n⟩.
///
/// Every term of `state` must have both modes empty.
pub fn two_mode_squeezer(state: &PureState, a: &str, b: &str, gamma: Complex64, order: Order) -> Result<PureState> {
    let reg = state.register();
    let (i, j) = (reg.position(a)?, reg.position(b)?);
    let amps = pair_amplitudes(gamma, reg.cutoff(), order)?;
    let mut terms = Vec::new();
    for (occ, &amp) in state.terms() {
        if occ.counts()[i] != 0 || occ.counts()[j] != 0 {
            return Err(Error::param(
                "state",
                format!("squeezer modes `{a}`, `{b}` are not in vacuum"),
            ));
        }
        for (n, &c) in amps.iter().enumerate() {
            let mut counts = occ.counts().to_vec();
            counts[i] = n as u8;
            counts[j] = n as u8;
            terms.push((counts, amp * c));
        }
    }
    PureState::from_terms(reg.clone(), terms)
}

/// Single-mode coherent state |α⟩ on a fresh register.
///
/// The exact form is Poissonian up to the cutoff and renormalized; a warning
/// is logged when the discarded weight exceeds 1e-4.
pub fn coherent_state(label: &str, alpha: Complex64, cutoff: usize, order: Order) -> Result<PureState> {
    let register = ModeRegister::single(label, cutoff)?;
    let terms: Vec<(Vec<u8>, Complex64)> = match order {
        Order::Perturbative => vec![(vec![0], ONE), (vec![1], alpha)],
        Order::Exact => {
            let mut amp = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
            let mut terms = Vec::with_capacity(cutoff + 1);
            for n in 0..=cutoff {
                if n > 0 {
                    amp *= alpha / (n as f64).sqrt();
                }
                terms.push((vec![n as u8], amp));
            }
            let kept: f64 = terms.iter().map(|(_, a)| a.norm_sqr()).sum();
            if 1.0 - kept > 1e-4 {
                log::warn!(
                    "coherent state |α|² = {:.3} truncated at cutoff {cutoff}: discarded weight {:.2e}",
                    alpha.norm_sqr(),
                    1.0 - kept
                );
            }
            terms
        }
    };
    PureState::from_terms(register, terms)?.normalize_keep_phase()
}

impl PureState {
    /// Unit norm without the global-phase convention of `normalize`.
    pub(crate) fn normalize_keep_phase(&self) -> Result<PureState> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scale(Complex64::new(1.0 / norm, 0.0)))
    }
}

/// Threshold (click / no-click) single-photon counter with efficiency η_d.
#[derive(Clone, Debug, PartialEq)]
pub struct ClickPOVM {
    pub eta_d: f64,
    pub no_click: DMatrix<Complex64>,
    pub click: DMatrix<Complex64>,
}

impl ClickPOVM {
    /// Probability of a click given n photons: 1 − (1−η_d)^n.
    pub fn click_probability(&self, n: usize) -> f64 {
        click_probability(self.eta_d, n)
    }
}

pub fn click_probability(eta_d: f64, n: usize) -> f64 {
    1.0 - (1.0 - eta_d).powi(n as i32)
}

pub fn spcm_povm(eta_d: f64, cutoff: usize) -> Result<ClickPOVM> {
    if !(0.0..=1.0).contains(&eta_d) {
        return Err(Error::param("eta_d", format!("{eta_d} outside [0, 1]")));
    }
    let dim = cutoff + 1;
    let click = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(click_probability(eta_d, i), 0.0)
        } else {
            ZERO
        }
    });
    let no_click = DMatrix::identity(dim, dim) - &click;
    Ok(ClickPOVM { eta_d, no_click, click })
}

/// Declarative optical element, used to describe circuits as data.
#[derive(Clone, Debug, PartialEq)]
pub enum ElementSpec {
    BeamSplitter {
        a: String,
        b: String,
        transmissivity: f64,
    },
    Pbs {
        in1: String,
        in2: String,
    },
    Hwp {
        spatial: String,
        angle: f64,
    },
    Qwp {
        spatial: String,
        angle: f64,
    },
    Polariser {
        spatial: String,
        angle: f64,
    },
    PhaseShift {
        mode: String,
        phi: f64,
    },
    TwoModeSqueezer {
        a: String,
        b: String,
        gamma: Complex64,
        order: Order,
    },
}

impl ElementSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ElementSpec::BeamSplitter { transmissivity, .. } => {
                if !(0.0..=1.0).contains(transmissivity) {
                    return Err(Error::param(
                        "transmissivity",
                        format!("{transmissivity} outside [0, 1]"),
                    ));
                }
            }
            ElementSpec::Hwp { angle, .. } | ElementSpec::Qwp { angle, .. } | ElementSpec::Polariser { angle, .. } => {
                check_finite("angle", *angle)?
            }
            ElementSpec::PhaseShift { phi, .. } => check_finite("phi", *phi)?,
            ElementSpec::TwoModeSqueezer { gamma, .. } => {
                if gamma.norm() >= 1.0 {
                    return Err(Error::param("gamma", "|γ| must be below 1"));
                }
            }
            ElementSpec::Pbs { .. } => {}
        }
        Ok(())
    }

    /// Applies the element. Polarisers return the normalized transmitted state.
    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        self.validate()?;
        match self {
            ElementSpec::BeamSplitter { a, b, transmissivity } => beam_splitter(state, a, b, *transmissivity),
            ElementSpec::Pbs { in1, in2 } => polarising_bs(state, in1, in2),
            ElementSpec::Hwp { spatial, angle } => half_wave_plate(state, spatial, *angle),
            ElementSpec::Qwp { spatial, angle } => quarter_wave_plate(state, spatial, *angle),
            ElementSpec::Polariser { spatial, angle } => polariser(state, spatial, *angle).map(|(s, _)| s),
            ElementSpec::PhaseShift { mode, phi } => phase_shift(state, mode, *phi),
            ElementSpec::TwoModeSqueezer { a, b, gamma, order } => two_mode_squeezer(state, a, b, *gamma, *order),
        }
    }
}

/// Applies a sequence of elements in order.
pub fn apply_circuit(state: &PureState, elements: &[ElementSpec]) -> Result<PureState> {
    elements.iter().try_fold(state.clone(), |s, e| e.apply(&s))
}

/// Total photon number of a term restricted to some positions.
pub(crate) fn photons_in(occ: &Occupation, positions: &[usize]) -> usize {
    positions.iter().map(|&p| occ.counts()[p] as usize).sum()
}
