//! Maximum-likelihood homodyne tomography with loss correction, fidelity,
//! Wigner functions and the polarisation ⊗ Fock state of the swapping run.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{hermitian_part, loss_weight, DensityMatrix, ModeRegister, PureState};
use crate::homodyne::QuadratureDataset;
use crate::qubit::{Polarisation, QubitSpec};
use crate::special::{factorial, hermite_functions, laguerre};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionOptions {
    pub cutoff: usize,
    /// Detector efficiency folded into the POVM; 1 means no correction.
    pub eta: f64,
    /// Stop once the relative log-likelihood gain of a step falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial dilution d of R → (1−d)I + dR; halved whenever a step would
    /// lower the likelihood.
    pub dilution: f64,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self {
            cutoff: 4,
            eta: 1.0,
            tol: 1e-10,
            max_iter: 10_000,
            dilution: 1.0,
        }
    }
}

impl ReconstructionOptions {
    pub fn with_eta(eta: f64) -> Self {
        Self { eta, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::param("eta", format!("{} outside (0, 1]", self.eta)));
        }
        if !(self.dilution > 0.0 && self.dilution <= 1.0) {
            return Err(Error::param("dilution", format!("{} outside (0, 1]", self.dilution)));
        }
        if self.cutoff == 0 || self.cutoff > crate::fock::MAX_CUTOFF {
            return Err(Error::InvalidCutoff(self.cutoff));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::param("tol", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult {
    pub rho: DensityMatrix,
    pub iterations: usize,
    /// Mean log-likelihood per sample after each accepted step (index 0 is
    /// the starting point).
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    pub eta_used: f64,
    /// Dilution in force at the end.
    pub dilution: f64,
}

impl ReconstructionResult {
    pub fn final_loglik(&self) -> f64 {
        *self.loglik_trace.last().unwrap_or(&f64::NEG_INFINITY)
    }
}

/// Loss-degraded quadrature projector
/// Π_η(θ,x)_mn = Σ_k √(B(m,k) B(n,k)) e^{i(m−n)θ} ψ_{m−k}(x) ψ_{n−k}(x),
/// so that Tr[ρ Π_η] is the quadrature density of ρ after loss η.
pub fn quadrature_povm(theta: f64, x: f64, eta: f64, cutoff: usize) -> Result<DMatrix<Complex64>> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::param("eta", format!("{eta} outside (0, 1]")));
    }
    let d = cutoff + 1;
    let psi = hermite_functions(x, cutoff);
    let mut pi = DMatrix::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            let s: f64 = (0..=m.min(n))
                .map(|k| (loss_weight(m, k, eta) * loss_weight(n, k, eta)).sqrt() * psi[m - k] * psi[n - k])
                .sum();
            pi[(m, n)] = Complex64::from_polar(s, (m as f64 - n as f64) * theta);
        }
    }
    Ok(pi)
}

/// POVM elements of a dataset stored as packed real vectors: for a Hermitian
/// ρ packed as (ρ_mm; Re ρ_mn; Im ρ_mn for m<n), Tr[ρΠ] is a dot product.
#[derive(Clone, Debug)]
struct PackedPovm {
    d: usize,
    len: usize,
    data: Vec<f64>,
}

impl PackedPovm {
    fn build(data: &QuadratureDataset, eta: f64, cutoff: usize) -> Result<Self> {
        let d = cutoff + 1;
        let len = d * d;
        let mut out = Vec::with_capacity(data.len() * len);
        for s in &data.samples {
            if !(s.theta.is_finite() && s.x.is_finite()) {
                return Err(Error::param("samples", "non-finite quadrature sample"));
            }
            let pi = quadrature_povm(s.theta, s.x, eta, cutoff)?;
            for m in 0..d {
                out.push(pi[(m, m)].re);
            }
            for m in 0..d {
                for n in m + 1..d {
                    // Tr[ρΠ] ⊃ ρ_mn Π_nm + ρ_nm Π_mn = 2 Re ρ_mn Re Π_nm − 2 Im ρ_mn Im Π_nm
                    out.push(2.0 * pi[(n, m)].re);
                    out.push(-2.0 * pi[(n, m)].im);
                }
            }
        }
        Ok(Self { d, len, data: out })
    }

    fn samples(&self) -> usize {
        self.data.len() / self.len
    }

    fn pack(&self, rho: &DMatrix<Complex64>) -> Vec<f64> {
        let d = self.d;
        let mut g = Vec::with_capacity(self.len);
        for m in 0..d {
            g.push(rho[(m, m)].re);
        }
        for m in 0..d {
            for n in m + 1..d {
                g.push(rho[(m, n)].re);
                g.push(rho[(m, n)].im);
            }
        }
        g
    }

    /// Rebuilds Σ_j w_j Π_j from Σ_j w_j f_j.
    fn unpack(&self, s: &[f64]) -> DMatrix<Complex64> {
        let d = self.d;
        let mut r = DMatrix::zeros(d, d);
        let mut idx = d;
        for m in 0..d {
            r[(m, m)] = Complex64::new(s[m], 0.0);
        }
        for m in 0..d {
            for n in m + 1..d {
                let nm = Complex64::new(s[idx] / 2.0, -s[idx + 1] / 2.0);
                r[(n, m)] = nm;
                r[(m, n)] = nm.conj();
                idx += 2;
            }
        }
        r
    }

    /// One pass over the data: the packed Σ_j Π_j / p_j (scaled by `scale`)
    /// added into `acc`, and Σ_j ln p_j returned.
    fn fused(&self, rho: &DMatrix<Complex64>, scale: f64, acc: &mut [f64]) -> Result<f64> {
        const RESCALE: f64 = 1e200;
        let g = self.pack(rho);
        // running product of the p_j, kept in range by explicit rescaling,
        // so that only one logarithm is taken per pass
        let (mut product, mut rescales) = (1.0f64, 0i32);
        for (index, f) in self.data.chunks_exact(self.len).enumerate() {
            let p = dot(f, &g);
            if !(p >= 1e-300) {
                return Err(Error::VanishingLikelihood { index, value: p });
            }
            product *= p;
            if product < 1.0 / RESCALE {
                product *= RESCALE;
                rescales += 1;
            } else if product > RESCALE {
                product /= RESCALE;
                rescales -= 1;
            }
            let w = scale / p;
            for (a, v) in acc.iter_mut().zip(f) {
                *a += w * v;
            }
        }
        Ok(product.ln() - rescales as f64 * RESCALE.ln())
    }

    /// Probabilities Tr[ρΠ_j] for every sample.
    fn probabilities(&self, rho: &DMatrix<Complex64>, out: &mut Vec<f64>) {
        let g = self.pack(rho);
        out.clear();
        out.extend(self.data.chunks_exact(self.len).map(|f| dot(f, &g)));
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // independent partial sums keep the FP adds from serialising
    let mut acc = [0.0; 4];
    let (a4, b4) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = a4.remainder().iter().zip(b4.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in a4.zip(b4) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

fn check_probabilities(probs: &[f64]) -> Result<f64> {
    let mut ll = 0.0;
    for (index, &p) in probs.iter().enumerate() {
        if !(p >= 1e-300) {
            return Err(Error::VanishingLikelihood { index, value: p });
        }
        ll += p.ln();
    }
    Ok(ll / probs.len() as f64)
}

/// One diluted step: ((1−d)I + dR) ρ ((1−d)I + dR), renormalized.
fn rho_r_rho(rho: &DMatrix<Complex64>, r: &DMatrix<Complex64>, dilution: f64) -> DMatrix<Complex64> {
    let dim = rho.nrows();
    let op = DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(1.0 - dilution, 0.0)
        + r * Complex64::new(dilution, 0.0);
    let next = hermitian_part(&(&op * rho * &op));
    let tr = next.trace().re;
    next / Complex64::new(tr, 0.0)
}

/// Single-mode likelihood problem: the dataset with its POVM elements.
#[derive(Clone, Debug)]
pub struct MaxLikProblem {
    povm: PackedPovm,
    label: String,
    cutoff: usize,
}

impl MaxLikProblem {
    pub fn new(data: &QuadratureDataset, eta: f64, cutoff: usize) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            povm: PackedPovm::build(data, eta, cutoff)?,
            label: data.source_label.clone(),
            cutoff,
        })
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    /// Mean log-likelihood per sample.
    pub fn loglik(&self, rho: &DMatrix<Complex64>) -> Result<f64> {
        let mut probs = Vec::with_capacity(self.povm.samples());
        self.povm.probabilities(rho, &mut probs);
        check_probabilities(&probs)
    }

    /// R(ρ) = (1/N) Σ_j Π_j / Tr[ρΠ_j].
    pub fn r_operator(&self, rho: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        let mut acc = vec![0.0; self.povm.len];
        self.povm.fused(rho, 1.0 / self.povm.samples() as f64, &mut acc)?;
        Ok(self.povm.unpack(&acc))
    }

    /// One diluted iteration.
    pub fn step(&self, rho: &DMatrix<Complex64>, dilution: f64) -> Result<DMatrix<Complex64>> {
        Ok(rho_r_rho(rho, &self.r_operator(rho)?, dilution))
    }
}

/// Runs the iteration loop on any problem exposing (loglik, R).
fn iterate(
    start: DMatrix<Complex64>,
    opts: &ReconstructionOptions,
    r_and_ll: impl Fn(&DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, f64)>,
) -> Result<(DMatrix<Complex64>, Vec<f64>, usize, bool, f64)> {
    const MIN_DILUTION: f64 = 1.0 / 1024.0;
    let mut rho = start;
    let (mut r, mut ll) = r_and_ll(&rho)?;
    let mut trace = vec![ll];
    let mut dilution = opts.dilution;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let candidate = rho_r_rho(&rho, &r, dilution);
        let (r_next, ll_next) = match r_and_ll(&candidate) {
            Ok(v) => v,
            Err(Error::VanishingLikelihood { .. }) if dilution > MIN_DILUTION => {
                dilution /= 2.0;
                continue;
            }
            Err(e) => return Err(e),
        };
        if ll_next < ll {
            if dilution > MIN_DILUTION {
                dilution /= 2.0;
                continue;
            }
            converged = true;
            break;
        }
        iterations += 1;
        let gain = (ll_next - ll) / ll.abs().max(f64::MIN_POSITIVE);
        rho = candidate;
        r = r_next;
        ll = ll_next;
        trace.push(ll);
        if gain < opts.tol {
            converged = true;
            break;
        }
    }
    Ok((rho, trace, iterations, converged, dilution))
}

/// Iterative maximum-likelihood reconstruction of a single-mode state.
pub fn maxlik_reconstruct(data: &QuadratureDataset, opts: &ReconstructionOptions) -> Result<ReconstructionResult> {
    opts.validate()?;
    let problem = MaxLikProblem::new(data, opts.eta, opts.cutoff)?;
    let d = problem.dim();
    let start = DMatrix::identity(d, d) / Complex64::new(d as f64, 0.0);
    let n = problem.povm.samples() as f64;
    let (rho, loglik_trace, iterations, converged, dilution) = iterate(start, opts, |rho| {
        let mut acc = vec![0.0; problem.povm.len];
        let ll = problem.povm.fused(rho, 1.0 / n, &mut acc)?;
        Ok((problem.povm.unpack(&acc), ll / n))
    })?;
    let label = if problem.label.is_empty() {
        "B.V".to_string()
    } else {
        problem.label.clone()
    };
    let rho = DensityMatrix::new(ModeRegister::single(&label, opts.cutoff)?, rho)?;
    Ok(ReconstructionResult {
        rho,
        iterations,
        loglik_trace,
        converged,
        eta_used: opts.eta,
        dilution,
    })
}

/// Joint state of one photon's polarisation in D and the Fock mode B, with
/// basis index pol·(c+1) + n and the H block first.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridDensity {
    cutoff: usize,
    matrix: DMatrix<Complex64>,
}

impl HybridDensity {
    pub fn new(cutoff: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = 2 * (cutoff + 1);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: matrix.nrows(),
            });
        }
        Ok(Self { cutoff, matrix })
    }

    /// (|H,1⟩ + e^{iφ}|V,0⟩)/√2.
    pub fn max_entangled(cutoff: usize, phi: f64) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::InvalidCutoff(cutoff));
        }
        let dim = 2 * (cutoff + 1);
        let mut v = nalgebra::DVector::<Complex64>::zeros(dim);
        v[1] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[cutoff + 1] = Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, phi);
        Self::new(cutoff, &v * v.adjoint())
    }

    pub fn maximally_mixed(cutoff: usize) -> Result<Self> {
        let dim = 2 * (cutoff + 1);
        Self::new(cutoff, DMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0))
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn index(&self, pol: usize, n: usize) -> usize {
        pol * (self.cutoff + 1) + n
    }

    /// ⟨p|ρ|p⟩ on B: the (unnormalized) B state when D is found along `p`.
    pub fn conditional(&self, p: &QubitSpec) -> DMatrix<Complex64> {
        block_project(&self.matrix, p, self.cutoff + 1)
    }

    /// Embeds into a Fock density matrix on (D.H, D.V, B.V) with D carrying
    /// exactly one photon.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let reg = ModeRegister::new(["D.H", "D.V", "B.V"], self.cutoff)?;
        let dim = reg.dim().ok_or(Error::TooLarge(usize::MAX))?;
        let idx = |pol: usize, n: usize| {
            let d = if pol == 0 { [1u8, 0] } else { [0, 1] };
            reg.index_of(&[d[0], d[1], n as u8])
        };
        let mut m = DMatrix::zeros(dim, dim);
        let d = self.cutoff + 1;
        for (i, j) in (0..2 * d).flat_map(|i| (0..2 * d).map(move |j| (i, j))) {
            m[(idx(i / d, i % d), idx(j / d, j % d))] = self.matrix[(i, j)];
        }
        DensityMatrix::new(reg, m)
    }

    /// Inverse of [`HybridDensity::to_density`]; weight outside the
    /// one-photon-in-D sector is an error.
    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        let reg = rho.register();
        let pos = reg.positions(&["D.H", "D.V", "B.V"])?;
        if reg.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                actual: reg.len(),
            });
        }
        let c = reg.cutoff();
        let d = c + 1;
        let index = |pol: usize, n: usize| {
            let mut counts = vec![0u8; 3];
            counts[pos[pol]] = 1;
            counts[pos[2]] = n as u8;
            reg.index_of(&counts)
        };
        let m = DMatrix::from_fn(2 * d, 2 * d, |i, j| {
            rho.matrix()[(index(i / d, i % d), index(j / d, j % d))]
        });
        let outside = rho.trace().re - m.trace().re;
        if outside.abs() > 1e-9 {
            return Err(Error::InvalidDensity(format!(
                "weight {outside:e} outside the single-photon sector of D"
            )));
        }
        Self::new(c, m)
    }
}

fn block_project(m: &DMatrix<Complex64>, p: &QubitSpec, d: usize) -> DMatrix<Complex64> {
    let pv = [p.a, p.b];
    DMatrix::from_fn(d, d, |n, k| {
        let mut s = ZERO;
        for i in 0..2 {
            for j in 0..2 {
                s += pv[i].conj() * pv[j] * m[(i * d + n, j * d + k)];
            }
        }
        s
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridReconstruction {
    pub state: HybridDensity,
    pub iterations: usize,
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    pub eta_used: f64,
}

/// Maximum likelihood over the product POVM {|p_s⟩⟨p_s| ⊗ Π_η(θ,x)} for the
/// six D analyser settings.
pub fn joint_reconstruct_swapped(
    datasets: &BTreeMap<Polarisation, QuadratureDataset>,
    opts: &ReconstructionOptions,
) -> Result<HybridReconstruction> {
    opts.validate()?;
    let missing: Vec<String> = Polarisation::ALL
        .iter()
        .filter(|p| !datasets.contains_key(p))
        .map(|p| p.label().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingSettings(missing));
    }
    let blocks = Polarisation::ALL
        .iter()
        .map(|p| Ok((p.qubit(), PackedPovm::build(&datasets[p], opts.eta, opts.cutoff)?)))
        .collect::<Result<Vec<_>>>()?;
    let total: usize = blocks.iter().map(|(_, b)| b.samples()).sum();
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    let d = opts.cutoff + 1;
    let start = DMatrix::identity(2 * d, 2 * d) / Complex64::new((2 * d) as f64, 0.0);
    let (rho, loglik_trace, iterations, converged, _) = iterate(start, opts, |rho| {
        let mut r = DMatrix::<Complex64>::zeros(2 * d, 2 * d);
        let mut ll = 0.0;
        for (p, povm) in &blocks {
            if povm.samples() == 0 {
                continue;
            }
            let mut acc = vec![0.0; povm.len];
            ll += povm.fused(&block_project(rho, p, d), 1.0 / total as f64, &mut acc)?;
            let rs = povm.unpack(&acc);
            let pv = [p.a, p.b];
            for i in 0..2 {
                for j in 0..2 {
                    let c = pv[i] * pv[j].conj();
                    for n in 0..d {
                        for k in 0..d {
                            r[(i * d + n, j * d + k)] += c * rs[(n, k)];
                        }
                    }
                }
            }
        }
        Ok((r, ll / total as f64))
    })?;
    Ok(HybridReconstruction {
        state: HybridDensity::new(opts.cutoff, rho)?,
        iterations,
        loglik_trace,
        converged,
        eta_used: opts.eta,
    })
}

/// Uhlmann fidelity (Tr √(√σ ρ √σ))² of two density matrices.
pub fn fidelity_matrices(rho: &DMatrix<Complex64>, sigma: &DMatrix<Complex64>) -> Result<f64> {
    if rho.shape() != sigma.shape() || rho.nrows() != rho.ncols() {
        return Err(Error::DimensionMismatch {
            expected: rho.nrows(),
            actual: sigma.nrows(),
        });
    }
    let (rho, sigma) = (hermitian_part(rho), hermitian_part(sigma));
    for m in [&rho, &sigma] {
        let min = m.clone().symmetric_eigenvalues().min();
        if min < crate::fock::EIGENVALUE_FLOOR {
            return Err(Error::InvalidDensity(format!("eigenvalue {min:e}")));
        }
    }
    let eig = sigma.clone().symmetric_eigen();
    let (top, top_idx) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .fold((f64::MIN, 0), |a, b| if b.0 > a.0 { b } else { a });
    let tr_sigma = sigma.trace().re;
    if (top - tr_sigma).abs() < 1e-12 {
        // σ pure: F = ⟨ψ|ρ|ψ⟩
        let v = eig.eigenvectors.column(top_idx);
        let f = (v.adjoint() * &rho * v)[(0, 0)].re * top;
        return Ok(f.clamp(0.0, 1.0));
    }
    let sqrt_vals = eig.eigenvalues.map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0));
    let vecs = &eig.eigenvectors;
    let sqrt_sigma = vecs * DMatrix::from_diagonal(&sqrt_vals) * vecs.adjoint();
    let inner = hermitian_part(&(&sqrt_sigma * &rho * &sqrt_sigma));
    let s: f64 = inner
        .symmetric_eigenvalues()
        .iter()
        .map(|&v| if v > 1e-14 { v.sqrt() } else { 0.0 })
        .sum();
    Ok((s * s).clamp(0.0, 1.0))
}

pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    fidelity_matrices(rho.matrix(), sigma.matrix())
}

/// ⟨ψ|ρ|ψ⟩ for a normalized pure target; `target` may have a lower cutoff
/// than `rho`.
pub fn fidelity_to_pure(rho: &DensityMatrix, target: &PureState) -> Result<f64> {
    let t = target
        .with_cutoff(rho.register().cutoff())?
        .reorder(rho.register().labels())?;
    let v = t.to_dense()?;
    Ok((v.adjoint() * rho.matrix() * &v)[(0, 0)].re.clamp(0.0, 1.0))
}

/// Wigner function values on a rectangular grid; `values[i][j]` is W(q_i, p_j).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WignerGrid {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl WignerGrid {
    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// Rectangle-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        let dq = step(&self.q);
        let dp = step(&self.p);
        self.values.iter().flatten().sum::<f64>() * dq * dp
    }
}

fn step(v: &[f64]) -> f64 {
    if v.len() > 1 {
        (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64
    } else {
        1.0
    }
}

pub fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// W(q, p) = Σ ρ_mn W_{|m⟩⟨n|}(q, p) with, for m ≥ n,
/// W_{|m⟩⟨n|} = ((−1)^n/π) √(n!/m!) (√2(q − ip))^{m−n} e^{−r²} L_n^{(m−n)}(2r²).
pub fn wigner_point(rho: &DMatrix<Complex64>, q: f64, p: f64) -> f64 {
    let d = rho.nrows();
    let r2 = q * q + p * p;
    let z = Complex64::new(q, -p) * std::f64::consts::SQRT_2;
    let gauss = (-r2).exp() / PI;
    let mut w = 0.0;
    for n in 0..d {
        let mut zpow = Complex64::new(1.0, 0.0);
        for m in n..d {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let k = m - n;
            let kernel = zpow * (sign * gauss * (factorial(n) / factorial(m)).sqrt() * laguerre(n, k, 2.0 * r2));
            if k == 0 {
                w += (rho[(m, n)] * kernel).re;
            } else {
                w += 2.0 * (rho[(m, n)] * kernel).re;
            }
            zpow *= z;
        }
    }
    w
}

pub fn wigner(rho: &DensityMatrix, q_grid: &[f64], p_grid: &[f64]) -> Result<WignerGrid> {
    if rho.register().len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: rho.register().len(),
        });
    }
    if q_grid.is_empty() || p_grid.is_empty() {
        return Err(Error::param("grid", "empty Wigner grid"));
    }
    let values = q_grid
        .iter()
        .map(|&q| p_grid.iter().map(|&p| wigner_point(rho.matrix(), q, p)).collect())
        .collect();
    Ok(WignerGrid {
        q: q_grid.to_vec(),
        p: p_grid.to_vec(),
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Witness {
    /// max_φ fidelity to (|H,1⟩ + e^{iφ}|V,0⟩)/√2.
    pub fidelity: f64,
    pub phase: f64,
    pub entangled: bool,
}

/// Fidelity to the closest maximally entangled state of the family; above ½
/// certifies entanglement.
pub fn entanglement_witness(state: &HybridDensity) -> Result<Witness> {
    if state.cutoff() == 0 {
        return Err(Error::InvalidCutoff(0));
    }
    let (h1, v0) = (state.index(0, 1), state.index(1, 0));
    let m = state.matrix();
    let tr = m.trace().re;
    let coherence = m[(h1, v0)];
    let fidelity = 0.5 * (m[(h1, h1)].re + m[(v0, v0)].re + 2.0 * coherence.norm()) / tr;
    Ok(Witness {
        fidelity,
        phase: -coherence.arg(),
        entangled: fidelity > 0.5,
    })
}

/// Fidelities reconstructed at several assumed efficiencies; half the range
/// is reported as the drift contribution to the error bar.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftSpread {
    pub etas: Vec<f64>,
    pub fidelities: Vec<f64>,
    pub spread: f64,
}

pub fn drift_spread(
    data: &QuadratureDataset,
    opts: &ReconstructionOptions,
    etas: &[f64],
    target: &PureState,
) -> Result<DriftSpread> {
    let fidelities = etas
        .iter()
        .map(|&eta| {
            let r = maxlik_reconstruct(data, &ReconstructionOptions { eta, ..*opts })?;
            fidelity_to_pure(&r.rho, target)
        })
        .collect::<Result<Vec<_>>>()?;
    let max = fidelities.iter().copied().fold(f64::MIN, f64::max);
    let min = fidelities.iter().copied().fold(f64::MAX, f64::min);
    Ok(DriftSpread {
        etas: etas.to_vec(),
        fidelities,
        spread: if etas.is_empty() { 0.0 } else { 0.5 * (max - min) },
    })
}

/// Standard deviation of the fidelity over bootstrap resamples of the data.
pub fn bootstrap_fidelity(
    data: &QuadratureDataset,
    opts: &ReconstructionOptions,
    target: &PureState,
    resamples: usize,
    seed: u64,
) -> Result<f64> {
    if resamples < 2 || data.is_empty() {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let samples = (0..data.len())
            .map(|_| data.samples[rng.random_range(0..data.len())])
            .collect();
        let resampled = QuadratureDataset::new(samples, data.eta_assumed, data.source_label.clone());
        values.push(fidelity_to_pure(&maxlik_reconstruct(&resampled, opts)?.rho, target)?);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    Ok(var.sqrt())
}

/// Statistical and drift errors added in quadrature.
pub fn combined_error(statistical: f64, drift: f64) -> f64 {
    statistical.hypot(drift)
}
