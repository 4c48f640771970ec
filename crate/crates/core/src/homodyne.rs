//! Balanced homodyne detection: quadrature distributions, seeded sampling
//! with detector loss, and phase estimation from quadrature means.
//!
//! Conventions: [q, p] = i, X_θ = q cos θ + p sin θ, vacuum variance ½.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{loss_channel, DensityMatrix, ModeRegister};
use crate::special::hermite_functions;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSample {
    #[serde(rename = "theta_rad")]
    pub theta: f64,
    pub x: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureDataset {
    pub samples: Vec<QuadratureSample>,
    /// Detection efficiency the data were taken (or generated) with.
    pub eta_assumed: f64,
    pub source_label: String,
}

impl QuadratureDataset {
    pub fn new(samples: Vec<QuadratureSample>, eta_assumed: f64, source_label: impl Into<String>) -> Self {
        Self {
            samples,
            eta_assumed,
            source_label: source_label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Uniform quadrature grid used for inverse-CDF sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            min: -6.0,
            max: 6.0,
            points: 2048,
        }
    }
}

impl Grid {
    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points).map(|i| self.min + i as f64 * h).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.points < 16 || !(self.max > self.min) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::GridTooCoarse(format!(
                "need at least 16 points on a finite interval, got {} on [{}, {}]",
                self.points, self.min, self.max
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PhaseMode {
    /// Local-oscillator phase drawn uniformly from [0, 2π).
    Uniform,
    Fixed(f64),
}

fn single_mode(rho: &DensityMatrix) -> Result<&str> {
    match rho.register().labels() {
        [label] => Ok(label.as_str()),
        labels => Err(Error::DimensionMismatch {
            expected: 1,
            actual: labels.len(),
        }),
    }
}

/// Harmonic decomposition of the quadrature marginal:
/// pr(x|θ) = h_0(x) + 2 Σ_{k>0} Re[e^{ikθ} h_k(x)],
/// h_k(x) = Σ_m ρ_{m,m+k} ψ_m(x) ψ_{m+k}(x).
fn harmonics(matrix: &DMatrix<Complex64>, psi: &[f64]) -> Vec<Complex64> {
    let d = matrix.nrows();
    (0..d)
        .map(|k| (0..d - k).map(|m| matrix[(m, m + k)] * (psi[m] * psi[m + k])).sum())
        .collect()
}

fn combine(h: &[Complex64], theta: f64) -> f64 {
    h.iter().enumerate().fold(0.0, |acc, (k, hk)| {
        if k == 0 {
            acc + hk.re
        } else {
            acc + 2.0 * (Complex64::from_polar(1.0, k as f64 * theta) * hk).re
        }
    })
}

/// Quadrature probability density pr(x|θ) = Σ ρ_mn e^{i(n−m)θ} ψ_m(x) ψ_n(x).
#[derive(Clone, Debug)]
pub struct QuadraturePdf {
    matrix: DMatrix<Complex64>,
    theta: f64,
}

impl QuadraturePdf {
    pub fn new(rho: &DensityMatrix, theta: f64) -> Result<Self> {
        single_mode(rho)?;
        if !theta.is_finite() {
            return Err(Error::param("theta", "must be finite"));
        }
        Ok(Self {
            matrix: rho.matrix().clone(),
            theta,
        })
    }

    pub fn density(&self, x: f64) -> f64 {
        let psi = hermite_functions(x, self.matrix.nrows() - 1);
        combine(&harmonics(&self.matrix, &psi), self.theta)
    }
}

pub fn quadrature_pdf(rho: &DensityMatrix, theta: f64) -> Result<QuadraturePdf> {
    QuadraturePdf::new(rho, theta)
}

/// Inverse-CDF sampler for one single-mode state. The cumulative integrals of
/// every harmonic are tabulated once on the grid, so the CDF at any phase
/// costs one short sum per grid point.
#[derive(Clone, Debug)]
pub struct QuadratureSampler {
    grid: Grid,
    xs: Vec<f64>,
    /// cumulative[i][k] = ∫_{min}^{x_i} h_k (trapezoid rule).
    cumulative: Vec<Vec<Complex64>>,
}

impl QuadratureSampler {
    pub fn new(rho: &DensityMatrix, grid: Grid) -> Result<Self> {
        single_mode(rho)?;
        grid.validate()?;
        let d = rho.dim();
        let xs = grid.values();
        let h = grid.step();
        let mut cumulative = Vec::with_capacity(xs.len());
        let mut acc = vec![Complex64::new(0.0, 0.0); d];
        let mut prev: Option<Vec<Complex64>> = None;
        for &x in &xs {
            let cur = harmonics(rho.matrix(), &hermite_functions(x, d - 1));
            if let Some(p) = &prev {
                for k in 0..d {
                    acc[k] += (p[k] + cur[k]) * (0.5 * h);
                }
            }
            cumulative.push(acc.clone());
            prev = Some(cur);
        }
        let sampler = Self { grid, xs, cumulative };
        // the edges must hold negligible density and the mass must be complete
        for theta in [0.0, 0.25 * TAU, 0.5 * TAU, 0.75 * TAU, 0.125 * TAU] {
            let total = sampler.cdf_index(theta, sampler.xs.len() - 1);
            if (total - 1.0).abs() > 1e-6 * rho.trace().re.max(1.0) {
                return Err(Error::GridTooCoarse(format!(
                    "grid captures probability {total} at θ = {theta:.3}; widen or refine it"
                )));
            }
        }
        Ok(sampler)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn cdf_index(&self, theta: f64, i: usize) -> f64 {
        combine(&self.cumulative[i], theta)
    }

    /// CDF at `x`, linearly interpolated between grid points.
    pub fn cdf(&self, theta: f64, x: f64) -> f64 {
        if x <= self.grid.min {
            return 0.0;
        }
        if x >= self.grid.max {
            return self.cdf_index(theta, self.xs.len() - 1);
        }
        let t = (x - self.grid.min) / self.grid.step();
        let i = (t.floor() as usize).min(self.xs.len() - 2);
        let f = t - i as f64;
        (1.0 - f) * self.cdf_index(theta, i) + f * self.cdf_index(theta, i + 1)
    }

    /// Quadrature value whose CDF at phase `theta` equals `u`.
    pub fn invert(&self, theta: f64, u: f64) -> Result<f64> {
        let last = self.xs.len() - 1;
        let target = u * self.cdf_index(theta, last);
        let (mut lo, mut hi) = (0usize, last);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf_index(theta, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (c0, c1) = (self.cdf_index(theta, lo), self.cdf_index(theta, hi));
        if c1 < c0 - 1e-12 {
            return Err(Error::GridTooCoarse(format!(
                "CDF decreases between x = {} and x = {}",
                self.xs[lo], self.xs[hi]
            )));
        }
        let f = if c1 > c0 {
            ((target - c0) / (c1 - c0)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        Ok(self.xs[lo] + f * (self.xs[hi] - self.xs[lo]))
    }

    pub fn draw<R: Rng>(&self, phase: PhaseMode, rng: &mut R) -> Result<QuadratureSample> {
        let theta = match phase {
            PhaseMode::Uniform => rng.random_range(0.0..TAU),
            PhaseMode::Fixed(t) => t,
        };
        let u: f64 = rng.random();
        Ok(QuadratureSample {
            theta,
            x: self.invert(theta, u)?,
        })
    }
}

/// Applies detector loss `eta` to a single-mode state.
pub fn apply_detector_loss(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    let label = single_mode(rho)?.to_string();
    let cutoff = rho.register().cutoff();
    rho.apply_channel(&loss_channel(eta, cutoff)?, &[label])
}

/// Draws `n` quadrature samples from `rho` seen through a detector of
/// efficiency `eta`.
pub fn sample_with<R: Rng>(
    rho: &DensityMatrix,
    n: usize,
    phase: PhaseMode,
    eta: f64,
    grid: Grid,
    rng: &mut R,
) -> Result<QuadratureDataset> {
    if n == 0 {
        return Err(Error::param("samples", "need at least one sample"));
    }
    let degraded = apply_detector_loss(rho, eta)?;
    let sampler = QuadratureSampler::new(&degraded, grid)?;
    let samples = (0..n).map(|_| sampler.draw(phase, rng)).collect::<Result<Vec<_>>>()?;
    let label = rho.register().labels()[0].clone();
    Ok(QuadratureDataset::new(samples, eta, label))
}

/// [`sample_with`] on the default grid with a ChaCha8 stream seeded by `seed`.
pub fn sample(rho: &DensityMatrix, n: usize, phase: PhaseMode, eta: f64, seed: u64) -> Result<QuadratureDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(rho, n, phase, eta, Grid::default(), &mut rng)
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `values` and a continuous CDF.
pub fn ks_statistic(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &v)| {
        let f = cdf(v);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// KS distance of the sample phases from the uniform distribution on [0, 2π).
pub fn phase_uniformity(data: &QuadratureDataset) -> f64 {
    let thetas: Vec<f64> = data.samples.iter().map(|s| s.theta.rem_euclid(TAU)).collect();
    ks_statistic(&thetas, |t| (t / TAU).clamp(0.0, 1.0))
}

/// (α|0⟩ + γ e^{−iφ}|1⟩)/norm, the state whose quadrature mean tracks the
/// phase of the single-rail channel.
pub fn phase_reference_state(alpha: f64, gamma: f64, phi: f64, label: &str, cutoff: usize) -> Result<DensityMatrix> {
    let reg = ModeRegister::single(label, cutoff)?;
    let state = crate::fock::PureState::from_terms(
        reg,
        [
            (vec![0], Complex64::new(alpha, 0.0)),
            (vec![1], Complex64::from_polar(gamma, -phi)),
        ],
    )?
    .normalize()?;
    state.to_density()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseEstimate {
    /// Phase φ in the model ⟨X_θ⟩ = A cos(θ + φ), in (−π, π].
    pub phi: f64,
    pub std_error: f64,
    pub amplitude: f64,
    pub samples: usize,
}

impl PhaseEstimate {
    /// Standard error as a fraction of a full period.
    pub fn relative_accuracy(&self) -> f64 {
        self.std_error / TAU
    }
}

/// Least-squares fit of x ≈ c₁ cos θ + c₂ sin θ, giving φ = atan2(−c₂, c₁)
/// and its standard error from the fit covariance.
pub fn estimate_phase(samples: &[QuadratureSample]) -> Result<PhaseEstimate> {
    if samples.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: samples.len(),
        });
    }
    let mut ata = Matrix2::<f64>::zeros();
    let mut atb = Vector2::<f64>::zeros();
    for s in samples {
        let v = Vector2::new(s.theta.cos(), s.theta.sin());
        ata += v * v.transpose();
        atb += v * s.x;
    }
    let inv = ata
        .try_inverse()
        .ok_or_else(|| Error::param("samples", "phases do not span both quadratures"))?;
    let coef = inv * atb;
    let rss: f64 = samples
        .iter()
        .map(|s| (s.x - coef[0] * s.theta.cos() - coef[1] * s.theta.sin()).powi(2))
        .sum();
    let s2 = rss / (samples.len() - 2) as f64;
    let cov = inv * s2;
    let r2 = coef.norm_squared();
    if r2 == 0.0 {
        return Err(Error::param("samples", "no phase dependence in the quadrature mean"));
    }
    let grad = Vector2::new(coef[1] / r2, -coef[0] / r2);
    let var = (grad.transpose() * cov * grad)[(0, 0)];
    Ok(PhaseEstimate {
        phi: (-coef[1]).atan2(coef[0]),
        std_error: var.max(0.0).sqrt(),
        amplitude: r2.sqrt(),
        samples: samples.len(),
    })
}

/// Independent estimates over consecutive windows of `window` samples;
/// a trailing partial window is dropped.
pub fn estimate_phase_windows(data: &QuadratureDataset, window: usize) -> Result<Vec<PhaseEstimate>> {
    if window < 3 || data.len() < window {
        return Err(Error::InsufficientSamples {
            needed: window.max(3),
            got: data.len(),
        });
    }
    data.samples.chunks_exact(window).map(estimate_phase).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AccuracyPoint {
    pub samples_per_window: usize,
    pub mean_std_error: f64,
    pub relative_accuracy: f64,
}

/// Phase accuracy against window size for the reference state, averaging the
/// reported standard error over `windows` independent windows per size.
pub fn phase_accuracy_curve(
    state: &DensityMatrix,
    window_sizes: &[usize],
    windows: usize,
    eta: f64,
    seed: u64,
) -> Result<Vec<AccuracyPoint>> {
    if windows == 0 {
        return Err(Error::param("windows", "need at least one window"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let degraded = apply_detector_loss(state, eta)?;
    let sampler = QuadratureSampler::new(&degraded, Grid::default())?;
    window_sizes
        .iter()
        .map(|&n| {
            let mut total = 0.0;
            for _ in 0..windows {
                let samples = (0..n)
                    .map(|_| sampler.draw(PhaseMode::Uniform, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                total += estimate_phase(&samples)?.std_error;
            }
            let mean = total / windows as f64;
            Ok(AccuracyPoint {
                samples_per_window: n,
                mean_std_error: mean,
                relative_accuracy: mean / TAU,
            })
        })
        .collect()
}

/// Window size reaching `target` relative accuracy, extrapolated from the
/// largest point of a curve with the 1/√n law.
pub fn samples_for_accuracy(curve: &[AccuracyPoint], target: f64) -> Result<usize> {
    let last = curve.last().ok_or(Error::EmptyDataset)?;
    if !(target > 0.0) {
        return Err(Error::param("target", "must be positive"));
    }
    let ratio = last.relative_accuracy / target;
    Ok((last.samples_per_window as f64 * ratio * ratio).ceil() as usize)
}
