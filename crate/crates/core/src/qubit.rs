//! Dual-rail qubit amplitudes and the six canonical polarisation settings.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// a|H⟩ + b|V⟩. Also used as a polarisation analyser direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitSpec {
    pub a: Complex64,
    pub b: Complex64,
}

impl QubitSpec {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        let norm = a.norm_sqr() + b.norm_sqr();
        if (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::param("qubit", format!("|a|²+|b|² = {norm}, expected 1")));
        }
        Ok(Self { a, b })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(a: Complex64, b: Complex64) -> Result<Self> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            a: a / norm,
            b: b / norm,
        })
    }

    /// Point on the Bloch sphere: cos(θ/2)|H⟩ + e^{iφ} sin(θ/2)|V⟩.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        Self {
            a: Complex64::new((theta / 2.0).cos(), 0.0),
            b: Complex64::from_polar((theta / 2.0).sin(), phi),
        }
    }

    pub fn h() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
        }
    }

    pub fn v() -> Self {
        Self {
            a: Complex64::new(0.0, 0.0),
            b: Complex64::new(1.0, 0.0),
        }
    }

    /// The orthogonal qubit −b*|H⟩ + a*|V⟩.
    pub fn orthogonal(&self) -> Self {
        Self {
            a: -self.b.conj(),
            b: self.a.conj(),
        }
    }

    /// Polarisation onto which mode D must be projected so that the heralded
    /// photon in A carries this qubit: (b*, a*).
    pub fn herald_projection(&self) -> Self {
        Self {
            a: self.b.conj(),
            b: self.a.conj(),
        }
    }

    /// Bloch vector (x, y, z) with z = |a|² − |b|².
    pub fn bloch(&self) -> [f64; 3] {
        let c = self.a.conj() * self.b;
        [2.0 * c.re, 2.0 * c.im, self.a.norm_sqr() - self.b.norm_sqr()]
    }
}

/// The six inputs used in the teleportation run, and the six analyser
/// settings used for the swapped-state reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarisation {
    V,
    H,
    D,
    A,
    R,
    L,
}

impl Polarisation {
    pub const ALL: [Polarisation; 6] = [
        Polarisation::V,
        Polarisation::H,
        Polarisation::D,
        Polarisation::A,
        Polarisation::R,
        Polarisation::L,
    ];

    pub fn qubit(self) -> QubitSpec {
        let s = FRAC_1_SQRT_2;
        let (a, b) = match self {
            Polarisation::H => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            Polarisation::V => (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
            Polarisation::D => (Complex64::new(s, 0.0), Complex64::new(s, 0.0)),
            Polarisation::A => (Complex64::new(s, 0.0), Complex64::new(-s, 0.0)),
            Polarisation::R => (Complex64::new(s, 0.0), Complex64::new(0.0, s)),
            Polarisation::L => (Complex64::new(s, 0.0), Complex64::new(0.0, -s)),
        };
        QubitSpec { a, b }
    }

    pub fn label(self) -> &'static str {
        match self {
            Polarisation::H => "H",
            Polarisation::V => "V",
            Polarisation::D => "D",
            Polarisation::A => "A",
            Polarisation::R => "R",
            Polarisation::L => "L",
        }
    }

    /// Basis partner (H↔V, D↔A, R↔L).
    pub fn partner(self) -> Polarisation {
        match self {
            Polarisation::H => Polarisation::V,
            Polarisation::V => Polarisation::H,
            Polarisation::D => Polarisation::A,
            Polarisation::A => Polarisation::D,
            Polarisation::R => Polarisation::L,
            Polarisation::L => Polarisation::R,
        }
    }
}

impl fmt::Display for Polarisation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.label())
    }
}

impl FromStr for Polarisation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Polarisation::ALL
            .into_iter()
            .find(|p| p.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param("polarisation", format!("unknown setting `{s}`")))
    }
}
