use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Largest supported per-mode cutoff. Occupations are stored as `u8`.
pub const MAX_CUTOFF: usize = 64;

/// Ordered set of optical modes sharing one photon-number cutoff.
///
/// Basis states are ordered lexicographically by occupation, first mode most
/// significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeRegister {
    labels: Vec<String>,
    cutoff: usize,
}

impl ModeRegister {
    pub fn new<I, S>(labels: I, cutoff: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if cutoff == 0 || cutoff > MAX_CUTOFF {
            return Err(Error::InvalidCutoff(cutoff));
        }
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateMode(label.clone()));
            }
        }
        Ok(Self { labels, cutoff })
    }

    pub fn single(label: &str, cutoff: usize) -> Result<Self> {
        Self::new([label], cutoff)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn local_dim(&self) -> usize {
        self.cutoff + 1
    }

    /// Dense Hilbert-space dimension, `None` on overflow.
    pub fn dim(&self) -> Option<usize> {
        self.local_dim().checked_pow(self.labels.len() as u32)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut seen = HashSet::new();
        labels
            .iter()
            .map(|l| {
                let l = l.as_ref();
                if !seen.insert(l.to_string()) {
                    return Err(Error::DuplicateMode(l.to_string()));
                }
                self.position(l)
            })
            .collect()
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        Self::new(self.labels.clone(), cutoff)
    }

    pub(crate) fn concat(&self, other: &ModeRegister) -> Result<Self> {
        if let Some(dup) = other.labels.iter().find(|l| self.contains(l)) {
            return Err(Error::OverlappingModes(dup.clone()));
        }
        let labels = self.labels.iter().chain(other.labels.iter()).cloned();
        Self::new(labels, self.cutoff.max(other.cutoff))
    }

    /// Sub-register made of the modes at `positions`, in that order.
    pub(crate) fn select(&self, positions: &[usize]) -> Self {
        Self {
            labels: positions.iter().map(|&p| self.labels[p].clone()).collect(),
            cutoff: self.cutoff,
        }
    }

    /// Positions not listed in `positions`, in register order.
    pub(crate) fn complement(&self, positions: &[usize]) -> Vec<usize> {
        (0..self.len()).filter(|p| !positions.contains(p)).collect()
    }

    pub fn index_of(&self, counts: &[u8]) -> usize {
        let d = self.local_dim();
        counts.iter().fold(0, |acc, &n| acc * d + n as usize)
    }

    pub fn occupation_of(&self, mut index: usize) -> Occupation {
        let d = self.local_dim();
        let mut counts = vec![0u8; self.len()];
        for slot in counts.iter_mut().rev() {
            *slot = (index % d) as u8;
            index /= d;
        }
        Occupation(counts)
    }

    pub(crate) fn check_counts(&self, counts: &[u8]) -> Result<()> {
        if counts.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: counts.len(),
            });
        }
        for (label, &n) in self.labels.iter().zip(counts) {
            if n as usize > self.cutoff {
                return Err(Error::OccupationOutOfRange {
                    mode: label.clone(),
                    count: n as usize,
                    cutoff: self.cutoff,
                });
            }
        }
        Ok(())
    }
}

/// Photon numbers per mode, in register order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occupation(pub(crate) Vec<u8>);

impl Occupation {
    pub fn new(counts: Vec<u8>) -> Self {
        Self(counts)
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }

    pub(crate) fn pick(&self, positions: &[usize]) -> Occupation {
        Occupation(positions.iter().map(|&p| self.0[p]).collect())
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}
