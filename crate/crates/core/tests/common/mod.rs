#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use railbridge::{DensityMatrix, ModeRegister, PureState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `n` complex numbers with components in [−1, 1].
pub fn complex_vec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n).prop_map(|v| v.into_iter().map(|(a, b)| c(a, b)).collect())
}

/// Normalized pure state on `labels` with every basis ket populated.
pub fn pure_from(labels: &[&str], cutoff: usize, amps: &[Complex64]) -> Option<PureState> {
    let reg = ModeRegister::new(labels.iter().copied(), cutoff).unwrap();
    let dim = reg.dim().unwrap();
    let terms: Vec<_> = (0..dim)
        .map(|i| (reg.occupation_of(i).counts().to_vec(), amps[i]))
        .collect();
    PureState::from_terms(reg, terms).unwrap().normalize().ok()
}

/// ρ = G G† / Tr, G a d×d matrix from `amps` (d² entries).
pub fn density_from(label: &str, cutoff: usize, amps: &[Complex64]) -> DensityMatrix {
    let d = cutoff + 1;
    let g = DMatrix::from_fn(d, d, |i, j| amps[i * d + j]);
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(ModeRegister::single(label, cutoff).unwrap(), m / tr).unwrap()
}

pub fn random_density(label: &str, cutoff: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let d = cutoff + 1;
    let amps: Vec<Complex64> = (0..d * d)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    density_from(label, cutoff, &amps)
}

pub fn random_pure_single(label: &str, cutoff: usize, rng: &mut ChaCha8Rng) -> PureState {
    let amps: Vec<Complex64> = (0..=cutoff)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    pure_from(&[label], cutoff, &amps).expect("nonzero")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn min_eigenvalue(rho: &DensityMatrix) -> f64 {
    rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
}
