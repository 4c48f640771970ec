//! The teleportation experiment: photon sources, heralding, the polarising
//! Bell analyser, post-selected teleportation and entanglement swapping,
//! false-positive accounting and the calibration scans.
//!
//! Modes: the heralded dual-rail photon lives in A (H, V) and its herald in
//! D (H, V); the resource state occupies C (H, V) and the single-rail output
//! mode B (V only).

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, ModeRegister, Occupation, PureState, NULL_PROBABILITY};
use crate::optics::{
    analyser_unitary, beam_splitter, click_probability, coherent_state, half_wave_plate, mode_unitary, photons_in,
    polarisation_unitary, polarising_bs, quarter_wave_plate, rotation, two_mode_squeezer, Order,
};
use crate::qubit::{Polarisation, QubitSpec};
use crate::tomography::HybridDensity;

pub const A_H: &str = "A.H";
pub const A_V: &str = "A.V";
pub const C_H: &str = "C.H";
pub const C_V: &str = "C.V";
pub const B: &str = "B.V";
pub const D_H: &str = "D.H";
pub const D_V: &str = "D.V";

/// Half-wave plates at π/8 rotate the polarisation by π/4 (a Hadamard on
/// H/V), mapping the PBS input state Φ⁻ onto Ψ⁺.
pub const BELL_HWP_ANGLE: f64 = FRAC_PI_8;
/// Polarisers behind the PBS transmit +π/4 in one output and −π/4 in the other.
pub const BELL_POLARISER_ANGLE: f64 = FRAC_PI_4;

/// Source amplitudes and detector settings.
///
/// Amplitudes are given as moduli and phases; the complex amplitude carries
/// e^{−iφ}, so the teleported single-rail state picks up the relative phase
/// e^{−i(φ_γ1 − φ_α)}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    pub gamma1: f64,
    pub gamma23: f64,
    pub alpha: f64,
    pub phi_gamma1: f64,
    pub phi_alpha: f64,
    /// Phase between the two crystals feeding A and D.
    pub delta_phi23: f64,
    pub eta_d: f64,
    pub order: Order,
    /// Photon cutoff of each source mode.
    pub cutoff: usize,
}

impl Default for SourceParams {
    fn default() -> Self {
        Self {
            gamma1: 0.20,
            gamma23: 0.054,
            alpha: 0.20,
            phi_gamma1: 0.0,
            phi_alpha: 0.0,
            delta_phi23: 0.0,
            eta_d: 0.03,
            order: Order::Perturbative,
            cutoff: 2,
        }
    }
}

impl SourceParams {
    pub fn exact() -> Self {
        Self {
            order: Order::Exact,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma1", self.gamma1),
            ("gamma23", self.gamma23),
            ("alpha", self.alpha),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::param(name, format!("modulus {v} outside [0, 1)")));
            }
        }
        if !(0.0..=1.0).contains(&self.eta_d) || self.eta_d == 0.0 {
            return Err(Error::param("eta_d", format!("{} outside (0, 1]", self.eta_d)));
        }
        for (name, v) in [
            ("gamma1_phase", self.phi_gamma1),
            ("alpha_phase", self.phi_alpha),
            ("delta_phi23", self.delta_phi23),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.cutoff == 0 || 4 * self.cutoff > crate::fock::MAX_CUTOFF {
            return Err(Error::InvalidCutoff(self.cutoff));
        }
        Ok(())
    }

    pub fn gamma1_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.gamma1, -self.phi_gamma1)
    }

    pub fn alpha_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.alpha, -self.phi_alpha)
    }

    /// Register cutoff large enough that no optical mixing of the A and C
    /// modes can push photons past it.
    fn optics_cutoff(&self) -> usize {
        4 * self.cutoff
    }
}

/// |Ω⟩ on (C.H, C.V, B.V): a crystal pair in (C.H, B.V) together with the
/// coherent state in C.V.
pub fn build_resource_omega(p: &SourceParams) -> Result<PureState> {
    p.validate()?;
    let (g, a) = (p.gamma1_amplitude(), p.alpha_amplitude());
    match p.order {
        Order::Perturbative => {
            let reg = ModeRegister::new([C_H, C_V, B], p.cutoff)?;
            let one = Complex64::new(1.0, 0.0);
            PureState::from_terms(reg, [(vec![0, 0, 0], one), (vec![1, 0, 1], g), (vec![0, 1, 0], a)])?
                .normalize_keep_phase()
        }
        Order::Exact => {
            let pair_reg = ModeRegister::new([C_H, B], p.cutoff)?;
            let pair = two_mode_squeezer(&PureState::vacuum(pair_reg), C_H, B, g, Order::Exact)?;
            let coherent = coherent_state(C_V, a, p.cutoff, Order::Exact)?;
            pair.tensor(&coherent)?.reorder(&[C_H, C_V, B])
        }
    }
}

/// |Ψ⟩ on (A.H, A.V, D.H, D.V): two crystals emitting (A.H, D.V) and
/// (A.V, D.H) pairs with relative phase `delta_phi23`.
pub fn build_bell_pair(p: &SourceParams) -> Result<PureState> {
    p.validate()?;
    let reg = ModeRegister::new([A_H, A_V, D_H, D_V], p.cutoff)?;
    let g = Complex64::new(p.gamma23, 0.0);
    let g_rot = g * Complex64::from_polar(1.0, p.delta_phi23);
    match p.order {
        Order::Perturbative => {
            let one = Complex64::new(1.0, 0.0);
            PureState::from_terms(
                reg,
                [
                    (vec![0, 0, 0, 0], one),
                    (vec![1, 0, 0, 1], g),
                    (vec![0, 1, 1, 0], g_rot),
                ],
            )?
            .normalize_keep_phase()
        }
        Order::Exact => {
            let s = two_mode_squeezer(&PureState::vacuum(reg), A_H, D_V, g, Order::Exact)?;
            two_mode_squeezer(&s, A_V, D_H, g_rot, Order::Exact)
        }
    }
}

/// Single-photon bra on (D.H, D.V) with polarisation `p`.
fn single_photon(h: &str, v: &str, p: &QubitSpec, cutoff: usize) -> Result<PureState> {
    let reg = ModeRegister::new([h, v], cutoff)?;
    PureState::from_terms(reg, [(vec![1, 0], p.a), (vec![0, 1], p.b)])
}

/// Ideal heralding: projects D onto one photon with polarisation
/// `projection` and returns the normalized state left in the other modes.
pub fn herald_qubit(bell: &PureState, projection: &QubitSpec) -> Result<(PureState, f64)> {
    let bra = single_photon(D_H, D_V, projection, bell.register().cutoff())?;
    let (rest, probability) = bell.project(&bra)?;
    Ok((rest.normalize_keep_phase()?, probability))
}

/// Rotates D so that polarisation `projection` leaves through D.H.
pub fn herald_analyser(state: &PureState, projection: &QubitSpec) -> Result<PureState> {
    mode_unitary(state, D_H, D_V, &analyser_unitary(projection.a, projection.b))
}

/// Ideal projection of (A, C) onto ⟨Ψ⁺| = (⟨H_A V_C| + ⟨V_A H_C|)/√2.
/// Returns the unnormalized remainder and its squared norm.
pub fn bell_projection_ideal(state: &PureState) -> Result<(PureState, f64)> {
    let reg = ModeRegister::new([A_H, A_V, C_H, C_V], state.register().cutoff())?;
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let bra = PureState::from_terms(reg, [(vec![1, 0, 0, 1], s), (vec![0, 1, 1, 0], s)])?;
    state.project(&bra)
}

/// The optical part of the Bell analyser: half-wave plates on A and C, the
/// PBS, and rotations that send each polariser's transmitted polarisation to
/// the .H mode of its output. Detectors then sit on A.H and C.H; A.V and C.V
/// are absorbed by the polarisers.
pub fn bell_analyser(state: &PureState) -> Result<PureState> {
    let needed = state
        .terms()
        .map(|(occ, _)| {
            let pos = state.register().positions(&[A_H, A_V, C_H, C_V]).unwrap_or_default();
            photons_in(occ, &pos)
        })
        .max()
        .unwrap_or(0);
    let s = if needed > state.register().cutoff() {
        state.with_cutoff(needed)?
    } else {
        state.clone()
    };
    let s = half_wave_plate(&s, "A", BELL_HWP_ANGLE)?;
    let s = half_wave_plate(&s, "C", BELL_HWP_ANGLE)?;
    let s = polarising_bs(&s, "A", "C")?;
    let s = polarisation_unitary(&s, "A", &rotation(BELL_POLARISER_ANGLE))?;
    polarisation_unitary(&s, "C", &rotation(-BELL_POLARISER_ANGLE))
}

/// One threshold detector, possibly spanning several modes, and the outcome
/// being post-selected.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub modes: Vec<String>,
    pub click: bool,
}

impl Detection {
    pub fn click<S: AsRef<str>>(modes: &[S]) -> Self {
        Self {
            modes: modes.iter().map(|m| m.as_ref().to_string()).collect(),
            click: true,
        }
    }

    pub fn no_click<S: AsRef<str>>(modes: &[S]) -> Self {
        Self {
            click: false,
            ..Self::click(modes)
        }
    }
}

fn detection_weight(state: &PureState, detections: &[Detection], eta_d: f64) -> Result<impl Fn(&Occupation) -> f64> {
    let resolved = detections
        .iter()
        .map(|d| Ok((state.register().positions(&d.modes)?, d.click)))
        .collect::<Result<Vec<_>>>()?;
    Ok(move |occ: &Occupation| {
        resolved.iter().fold(1.0, |w, (pos, click)| {
            let p = click_probability(eta_d, photons_in(occ, pos));
            w * if *click { p } else { 1.0 - p }
        })
    })
}

/// Conditional state of `keep` given the detection outcomes, all other modes
/// traced out. The returned operator is unnormalized; its trace is the
/// probability of the outcome.
pub fn post_select<S: AsRef<str>>(
    state: &PureState,
    detections: &[Detection],
    eta_d: f64,
    keep: &[S],
) -> Result<DensityMatrix> {
    for d in detections {
        if let Some(m) = d.modes.iter().find(|m| keep.iter().any(|k| k.as_ref() == m.as_str())) {
            return Err(Error::OverlappingModes(m.clone()));
        }
    }
    let weight = detection_weight(state, detections, eta_d)?;
    state.weighted_reduced_density(keep, weight)
}

/// Probability of the detection outcomes with everything else traced out.
pub fn detection_probability(state: &PureState, detections: &[Detection], eta_d: f64) -> Result<f64> {
    let weight = detection_weight(state, detections, eta_d)?;
    Ok(state.terms().map(|(occ, a)| a.norm_sqr() * weight(occ)).sum())
}

/// Physical Bell analyser with click detectors. Returns the normalized state
/// of `keep` and the coincidence probability.
pub fn bell_projection_physical<S: AsRef<str>>(
    state: &PureState,
    eta_d: f64,
    keep: &[S],
) -> Result<(DensityMatrix, f64)> {
    let out = bell_analyser(state)?;
    let rho = post_select(&out, &[Detection::click(&[A_H]), Detection::click(&[C_H])], eta_d, keep)?;
    let probability = rho.trace().re;
    if probability < NULL_PROBABILITY {
        return Err(Error::NullOutcome(probability));
    }
    Ok((rho.normalize()?, probability))
}

/// Photon numbers entering the Bell analyser from A and from C.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sector {
    pub n_a: u8,
    pub n_c: u8,
}

impl Sector {
    pub const GOOD: Sector = Sector { n_a: 1, n_c: 1 };
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorProbability {
    #[serde(flatten)]
    pub sector: Sector,
    pub probability: f64,
}

/// Splits `state` by the photon numbers in A and C, runs each part through the
/// Bell analyser and post-selects. Parts with different photon numbers do not
/// interfere because every term carries as many photons in D as in A.
fn run_sectors(
    state: &PureState,
    detections: &[Detection],
    eta_d: f64,
    keep: &[&str],
) -> Result<Vec<(Sector, DensityMatrix)>> {
    let reg = state.register();
    let (a_pos, c_pos) = (reg.positions(&[A_H, A_V])?, reg.positions(&[C_H, C_V])?);
    let mut sectors: BTreeMap<Sector, ()> = BTreeMap::new();
    for (occ, _) in state.terms() {
        let sector = Sector {
            n_a: photons_in(occ, &a_pos) as u8,
            n_c: photons_in(occ, &c_pos) as u8,
        };
        sectors.insert(sector, ());
    }
    let mut out = Vec::new();
    for sector in sectors.into_keys() {
        if sector.n_a + sector.n_c < 2 {
            continue;
        }
        let part = state.filter(|occ| {
            photons_in(occ, &a_pos) == sector.n_a as usize && photons_in(occ, &c_pos) == sector.n_c as usize
        });
        let rho = post_select(&bell_analyser(&part)?, detections, eta_d, keep)?;
        if rho.trace().re > 0.0 {
            out.push((sector, rho));
        }
    }
    Ok(out)
}

fn joint_source_state(p: &SourceParams) -> Result<PureState> {
    let joint = build_bell_pair(p)?.tensor(&build_resource_omega(p)?)?;
    joint.with_cutoff(p.optics_cutoff())
}

/// The single-rail state expected in B for input `chi`:
/// a·α|0⟩ + b·γ1|1⟩, normalized.
pub fn ideal_teleported_state(chi: &QubitSpec, p: &SourceParams) -> Result<PureState> {
    let reg = ModeRegister::single(B, p.cutoff)?;
    PureState::from_terms(
        reg,
        [
            (vec![0], chi.a * p.alpha_amplitude()),
            (vec![1], chi.b * p.gamma1_amplitude()),
        ],
    )?
    .normalize_keep_phase()
}

fn pure_fidelity(rho: &DensityMatrix, target: &PureState) -> Result<f64> {
    let v = target.to_dense()?;
    let value = (v.adjoint() * rho.matrix() * &v)[(0, 0)];
    Ok(value.re.clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TeleportOutcome {
    pub input: QubitSpec,
    /// Normalized conditional state of B.
    pub rho: DensityMatrix,
    /// Probability per pulse of the herald-and-coincidence event.
    pub probability: f64,
    pub target: PureState,
    pub fidelity: f64,
    /// Contributions by photon numbers entering the Bell analyser; empty for
    /// the ideal-projector path.
    pub sectors: Vec<SectorProbability>,
}

impl TeleportOutcome {
    /// Share of post-selected events that did not come from one photon in A
    /// and one in C.
    pub fn bad_fraction(&self) -> f64 {
        let good: f64 = self
            .sectors
            .iter()
            .filter(|s| s.sector == Sector::GOOD)
            .map(|s| s.probability)
            .sum();
        if self.sectors.is_empty() {
            0.0
        } else {
            1.0 - good / self.probability
        }
    }
}

/// Teleports `chi` through the full setup: the herald in D is analysed
/// along the polarisation that prepares `chi` in A and detected with a click
/// detector, and the Bell analyser uses click detectors behind polarisers.
pub fn teleport(chi: &QubitSpec, p: &SourceParams) -> Result<TeleportOutcome> {
    let joint = herald_analyser(&joint_source_state(p)?, &chi.herald_projection())?;
    let detections = [
        Detection::click(&[A_H]),
        Detection::click(&[C_H]),
        Detection::click(&[D_H]),
    ];
    let parts = run_sectors(&joint, &detections, p.eta_d, &[B])?;
    let mut total: Option<DensityMatrix> = None;
    let mut sectors = Vec::with_capacity(parts.len());
    for (sector, rho) in parts {
        sectors.push(SectorProbability {
            sector,
            probability: rho.trace().re,
        });
        total = Some(match total {
            None => rho,
            Some(acc) => DensityMatrix::new(acc.register().clone(), acc.matrix() + rho.matrix())?,
        });
    }
    let total = total.ok_or(Error::NullOutcome(0.0))?;
    let probability = total.trace().re;
    if probability < NULL_PROBABILITY {
        return Err(Error::NullOutcome(probability));
    }
    let rho = total.normalize()?.with_cutoff(p.cutoff)?;
    let target = ideal_teleported_state(chi, p)?;
    let fidelity = pure_fidelity(&rho, &target)?;
    Ok(TeleportOutcome {
        input: *chi,
        rho,
        probability,
        target,
        fidelity,
        sectors,
    })
}

/// Teleportation with ideal projections: D projected onto the herald
/// polarisation, (A, C) projected onto Ψ⁺.
pub fn teleport_ideal(chi: &QubitSpec, p: &SourceParams) -> Result<TeleportOutcome> {
    let (alice, p_herald) = herald_qubit(&build_bell_pair(p)?, &chi.herald_projection())?;
    let joint = alice.tensor(&build_resource_omega(p)?)?;
    let (bob, p_bell) = bell_projection_ideal(&joint)?;
    let bob = bob.normalize_keep_phase()?;
    let rho = bob.to_density()?;
    let target = ideal_teleported_state(chi, p)?;
    let fidelity = pure_fidelity(&rho, &target)?;
    Ok(TeleportOutcome {
        input: *chi,
        rho,
        probability: p_herald * p_bell,
        target,
        fidelity,
        sectors: Vec::new(),
    })
}

/// [`teleport`] for the six canonical inputs, in `Polarisation::ALL` order.
pub fn teleport_six(p: &SourceParams) -> Result<Vec<TeleportOutcome>> {
    Polarisation::ALL.iter().map(|pol| teleport(&pol.qubit(), p)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwapOutcome {
    /// Normalized effective state of the D photon and mode B.
    pub state: HybridDensity,
    /// Coincidence-and-herald probability per pulse to first order in η_d.
    pub probability: f64,
}

/// Entanglement swapping: the joint state of D and B after a Bell analyser
/// coincidence, with no herald measurement in D.
///
/// D is represented by the polarisation of one photon removed from it, i.e.
/// the state seen by a weak polarisation-resolving click detector:
/// ρ[(i,b),(j,b')] ∝ Tr_rest ⟨b| a_i ρ a_j† |b'⟩ for i, j ∈ {H, V}.
pub fn swap_entanglement(p: &SourceParams) -> Result<SwapOutcome> {
    let out = bell_analyser(&joint_source_state(p)?)?;
    let reg = out.register();
    let (ah, ch) = (reg.position(A_H)?, reg.position(C_H)?);
    let rest = reg.positions(&[A_H, A_V, C_H, C_V])?;
    let (dh, dv, b) = (reg.position(D_H)?, reg.position(D_V)?, reg.position(B)?);
    let c = p.cutoff;
    let mut groups: BTreeMap<(Occupation, [u8; 2]), (f64, Vec<(usize, Complex64)>)> = BTreeMap::new();
    for (occ, &amp) in out.terms() {
        let counts = occ.counts();
        let w = click_probability(p.eta_d, counts[ah] as usize) * click_probability(p.eta_d, counts[ch] as usize);
        if w == 0.0 {
            continue;
        }
        for (pol, pos) in [(0usize, dh), (1, dv)] {
            let n = counts[pos];
            if n == 0 {
                continue;
            }
            let mut d = [counts[dh], counts[dv]];
            d[pol] -= 1;
            let nb = counts[b] as usize;
            if nb > c {
                return Err(Error::InvalidCutoff(nb));
            }
            groups
                .entry((occ.pick(&rest), d))
                .or_insert_with(|| (w, Vec::new()))
                .1
                .push((pol * (c + 1) + nb, amp * (n as f64).sqrt()));
        }
    }
    let dim = 2 * (c + 1);
    let mut m = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
    for (w, entries) in groups.values() {
        for &(i, x) in entries {
            for &(j, y) in entries {
                m[(i, j)] += x * y.conj() * *w;
            }
        }
    }
    let trace = m.trace().re;
    if trace < NULL_PROBABILITY {
        return Err(Error::NullOutcome(trace));
    }
    let state = HybridDensity::new(c, m / Complex64::new(trace, 0.0))?;
    Ok(SwapOutcome {
        state,
        probability: trace * p.eta_d,
    })
}

/// Conditional state of B when D is analysed along `setting` and clicks,
/// after a Bell analyser coincidence. Returns the normalized state and the
/// event probability.
pub fn swap_conditional(p: &SourceParams, setting: &QubitSpec) -> Result<(DensityMatrix, f64)> {
    let joint = herald_analyser(&joint_source_state(p)?, setting)?;
    let detections = [
        Detection::click(&[A_H]),
        Detection::click(&[C_H]),
        Detection::click(&[D_H]),
    ];
    let rho = post_select(&bell_analyser(&joint)?, &detections, p.eta_d, &[B])?;
    let probability = rho.trace().re;
    if probability < NULL_PROBABILITY {
        return Err(Error::NullOutcome(probability));
    }
    Ok((rho.normalize()?.with_cutoff(p.cutoff)?, probability))
}

/// Leading-order triple-coincidence scalings:
/// p_good = η_d³|γ1|²|γ23|², p_bad,A = 2η_d³|γ23|⁴, p_bad,C = 2η_d³|γ1|⁴|γ23|².
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TripleBudget {
    pub p_good: f64,
    pub p_bad_a: f64,
    pub p_bad_c: f64,
    pub fraction_bad: f64,
}

pub fn triple_budget(p: &SourceParams) -> TripleBudget {
    let eta3 = p.eta_d.powi(3);
    let (g1, g23) = (p.gamma1 * p.gamma1, p.gamma23 * p.gamma23);
    let p_good = eta3 * g1 * g23;
    let p_bad_a = 2.0 * eta3 * g23 * g23;
    let p_bad_c = 2.0 * eta3 * g1 * g1 * g23;
    let total = p_good + p_bad_a + p_bad_c;
    TripleBudget {
        p_good,
        p_bad_a,
        p_bad_c,
        fraction_bad: if total > 0.0 { (p_bad_a + p_bad_c) / total } else { 0.0 },
    }
}

/// Triple coincidences (D click regardless of polarisation plus a Bell
/// analyser coincidence) from the full simulation, split by origin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulatedBudget {
    pub sectors: Vec<SectorProbability>,
    pub p_total: f64,
    pub p_good: f64,
    /// Two or more photons from A, none from C.
    pub p_bad_a: f64,
    /// One photon from A, two or more from C.
    pub p_bad_c: f64,
    /// Everything else (several photons on both sides).
    pub p_higher: f64,
    pub fraction_bad: f64,
}

pub fn simulated_budget(p: &SourceParams) -> Result<SimulatedBudget> {
    let detections = [
        Detection::click(&[A_H]),
        Detection::click(&[C_H]),
        Detection::click(&[D_H, D_V]),
    ];
    let parts = run_sectors(&joint_source_state(p)?, &detections, p.eta_d, &[B])?;
    let sectors: Vec<SectorProbability> = parts
        .into_iter()
        .map(|(sector, rho)| SectorProbability {
            sector,
            probability: rho.trace().re,
        })
        .collect();
    let sum =
        |f: &dyn Fn(&Sector) -> bool| -> f64 { sectors.iter().filter(|s| f(&s.sector)).map(|s| s.probability).sum() };
    let p_total = sum(&|_| true);
    let p_good = sum(&|s| *s == Sector::GOOD);
    let p_bad_a = sum(&|s| s.n_a >= 2 && s.n_c == 0);
    let p_bad_c = sum(&|s| s.n_a == 1 && s.n_c >= 2);
    let p_higher = p_total - p_good - p_bad_a - p_bad_c;
    if p_total < NULL_PROBABILITY {
        return Err(Error::NullOutcome(p_total));
    }
    Ok(SimulatedBudget {
        fraction_bad: 1.0 - p_good / p_total,
        sectors,
        p_total,
        p_good,
        p_bad_a,
        p_bad_c,
        p_higher,
    })
}

/// Monte Carlo triple-coincidence counts over an integration window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TripleCounts {
    pub pulses: f64,
    pub p_good: f64,
    pub p_total: f64,
    pub good: u64,
    pub total: u64,
}

impl TripleCounts {
    pub fn good_rate(&self, laser_rate_hz: f64) -> f64 {
        self.good as f64 * laser_rate_hz / self.pulses
    }
}

/// Draws Poisson counts of good and bad triple coincidences for
/// `laser_rate_hz · duration_s` pulses, using the simulated per-pulse
/// probabilities.
pub fn simulate_triple_counts<R: Rng>(
    p: &SourceParams,
    laser_rate_hz: f64,
    duration_s: f64,
    rng: &mut R,
) -> Result<TripleCounts> {
    if !(laser_rate_hz > 0.0 && duration_s > 0.0) {
        return Err(Error::param("duration_s", "rate and duration must be positive"));
    }
    let budget = simulated_budget(p)?;
    let pulses = laser_rate_hz * duration_s;
    let draw = |mean: f64, rng: &mut R| -> Result<u64> {
        if mean <= 0.0 {
            return Ok(0);
        }
        let d = Poisson::new(mean).map_err(|e| Error::param("poisson", e.to_string()))?;
        Ok(d.sample(rng) as u64)
    };
    let good = draw(pulses * budget.p_good, rng)?;
    let bad = draw(pulses * (budget.p_total - budget.p_good), rng)?;
    Ok(TripleCounts {
        pulses,
        p_good: budget.p_good,
        p_total: budget.p_total,
        good,
        total: good + bad,
    })
}

/// Two-photon interference of a heralded crystal photon with the coherent
/// state on a 50:50 beam splitter. `overlap` is the fraction of the photon in
/// the coherent state's mode; the remainder is fully distinguishable.
/// Returns 1 − P_cc(overlap)/P_cc(0) for herald-conditioned coincidences.
///
/// At perturbative order this equals `overlap`. At exact order, crystal double
/// pairs add coincidences that do not interfere, which caps the visibility
/// near 0.37 when α = γ1.
pub fn hom_visibility(p: &SourceParams, overlap: f64) -> Result<f64> {
    let matched = hom_coincidence(p, overlap)?;
    let reference = hom_coincidence(p, 0.0)?;
    if reference < NULL_PROBABILITY {
        return Err(Error::NullOutcome(reference));
    }
    Ok(1.0 - matched / reference)
}

fn hom_coincidence(p: &SourceParams, overlap: f64) -> Result<f64> {
    p.validate()?;
    if !(0.0..=1.0).contains(&overlap) {
        return Err(Error::param("overlap", format!("{overlap} outside [0, 1]")));
    }
    let (sig, sig_x, idler, lo, lo_x) = ("S", "S'", "I", "L", "L'");
    let pair = two_mode_squeezer(
        &PureState::vacuum(ModeRegister::new([sig, sig_x, idler], p.cutoff)?),
        sig,
        idler,
        p.gamma1_amplitude(),
        p.order,
    )?;
    let coherent = coherent_state(lo, p.alpha_amplitude(), p.cutoff, p.order)?;
    let empty = PureState::vacuum(ModeRegister::single(lo_x, p.cutoff)?);
    let s = pair.tensor(&coherent)?.tensor(&empty)?.with_cutoff(2 * p.cutoff)?;
    let s = beam_splitter(&s, sig, sig_x, overlap)?;
    let s = beam_splitter(&s, sig, lo, 0.5)?;
    let s = beam_splitter(&s, sig_x, lo_x, 0.5)?;
    detection_probability(
        &s,
        &[
            Detection::click(&[idler]),
            Detection::click(&[sig, sig_x]),
            Detection::click(&[lo, lo_x]),
        ],
        p.eta_d,
    )
}

/// Mode overlap giving a target HOM visibility, by bisection.
pub fn solve_hom_overlap(p: &SourceParams, target: f64) -> Result<f64> {
    let (v0, v1) = (hom_visibility(p, 0.0)?, hom_visibility(p, 1.0)?);
    if !(v0.min(v1)..=v0.max(v1)).contains(&target) {
        return Err(Error::param(
            "target",
            format!("visibility {target} outside reachable range [{v0:.4}, {v1:.4}]"),
        ));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if hom_visibility(p, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Herald setting and analysis basis for the polarisation-correlation scans.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanBasis {
    Linear,
    Diagonal,
    Circular,
}

impl ScanBasis {
    pub const ALL: [ScanBasis; 3] = [ScanBasis::Linear, ScanBasis::Diagonal, ScanBasis::Circular];

    fn herald(self) -> Polarisation {
        match self {
            ScanBasis::Linear => Polarisation::V,
            ScanBasis::Diagonal => Polarisation::D,
            ScanBasis::Circular => Polarisation::R,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VisibilityScan {
    pub basis: ScanBasis,
    pub angles: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub visibility: f64,
}

/// Coincidences between a D click (analysed along V, D or R) and an A click
/// behind a rotating half-wave plate and an H polariser. In the circular
/// basis a quarter-wave plate at π/4 precedes the half-wave plate.
pub fn bell_visibility_scan(p: &SourceParams, basis: ScanBasis, points: usize) -> Result<VisibilityScan> {
    if points < 2 {
        return Err(Error::param("points", "need at least two angles"));
    }
    let bell = build_bell_pair(p)?.with_cutoff(2 * p.cutoff)?;
    let mut s = herald_analyser(&bell, &basis.herald().qubit())?;
    if basis == ScanBasis::Circular {
        s = quarter_wave_plate(&s, "A", FRAC_PI_4)?;
    }
    let detections = [Detection::click(&[D_H]), Detection::click(&[A_H])];
    let angles: Vec<f64> = (0..points)
        .map(|k| k as f64 * std::f64::consts::FRAC_PI_2 / points as f64)
        .collect();
    let probabilities = angles
        .iter()
        .map(|&theta| detection_probability(&half_wave_plate(&s, "A", theta)?, &detections, p.eta_d))
        .collect::<Result<Vec<_>>>()?;
    let max = probabilities.iter().copied().fold(f64::MIN, f64::max);
    let min = probabilities.iter().copied().fold(f64::MAX, f64::min);
    Ok(VisibilityScan {
        basis,
        angles,
        probabilities,
        visibility: if max + min > 0.0 {
            (max - min) / (max + min)
        } else {
            0.0
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhotonCountOutcome {
    pub counts: [u8; 2],
    pub probability: f64,
}

/// Overlaps two single-rail modes on a symmetric beam splitter and resolves
/// the photon numbers at both outputs. Other modes are traced out.
pub fn single_rail_bell_measurement(state: &PureState, a: &str, b: &str) -> Result<Vec<PhotonCountOutcome>> {
    let out = beam_splitter(state, a, b, 0.5)?;
    let (i, j) = (out.register().position(a)?, out.register().position(b)?);
    let mut dist: BTreeMap<[u8; 2], f64> = BTreeMap::new();
    let norm = out.norm_sqr();
    for (occ, amp) in out.terms() {
        *dist.entry([occ.counts()[i], occ.counts()[j]]).or_insert(0.0) += amp.norm_sqr() / norm;
    }
    Ok(dist
        .into_iter()
        .map(|(counts, probability)| PhotonCountOutcome { counts, probability })
        .collect())
}
