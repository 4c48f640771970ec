use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

use super::{DensityMatrix, ModeRegister, Occupation, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::special::factorial;

/// Amplitudes below this magnitude are dropped from sparse states.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Projection outcomes below this probability are reported as null.
pub const NULL_PROBABILITY: f64 = 1e-15;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sparse pure state over a truncated multimode Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    register: ModeRegister,
    amplitudes: BTreeMap<Occupation, Complex64>,
}

impl PureState {
    pub fn vacuum(register: ModeRegister) -> Self {
        let zero = Occupation(vec![0; register.len()]);
        Self {
            register,
            amplitudes: BTreeMap::from([(zero, Complex64::new(1.0, 0.0))]),
        }
    }

    pub fn basis(register: ModeRegister, counts: &[u8]) -> Result<Self> {
        Self::from_terms(register, [(counts.to_vec(), Complex64::new(1.0, 0.0))])
    }

    /// Builds a state from `(counts, amplitude)` pairs; repeated kets add up.
    pub fn from_terms<I>(register: ModeRegister, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u8>, Complex64)>,
    {
        let mut amplitudes = BTreeMap::new();
        for (counts, amp) in terms {
            register.check_counts(&counts)?;
            *amplitudes.entry(Occupation(counts)).or_insert(ZERO) += amp;
        }
        Ok(Self::from_map(register, amplitudes))
    }

    pub(crate) fn from_map(register: ModeRegister, mut amplitudes: BTreeMap<Occupation, Complex64>) -> Self {
        amplitudes.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        Self { register, amplitudes }
    }

    pub(crate) fn from_hash(register: ModeRegister, map: HashMap<Occupation, Complex64>) -> Self {
        Self::from_map(register, map.into_iter().collect())
    }

    pub fn register(&self) -> &ModeRegister {
        &self.register
    }

    pub fn labels(&self) -> &[String] {
        self.register.labels()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn amplitude(&self, counts: &[u8]) -> Complex64 {
        self.amplitudes
            .get(&Occupation(counts.to_vec()))
            .copied()
            .unwrap_or(ZERO)
    }

    /// Number of stored (nonzero) amplitudes.
    pub fn num_terms(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Unit norm, with the first nonzero amplitude (lexicographic order) made
    /// real and non-negative.
    pub fn normalize(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let lead = self.amplitudes.values().next().copied().unwrap_or(ZERO);
        let phase = if lead.norm() > 0.0 {
            lead.conj() / lead.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        Ok(self.scale(phase / norm))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let amplitudes = self.amplitudes.iter().map(|(k, &a)| (k.clone(), a * factor)).collect();
        Self::from_map(self.register.clone(), amplitudes)
    }

    /// Superposition `self + other` over identical mode labels.
    pub fn add(&self, other: &PureState) -> Result<Self> {
        self.check_same_labels(other)?;
        let mut amplitudes = self.amplitudes.clone();
        for (k, &a) in &other.amplitudes {
            *amplitudes.entry(k.clone()).or_insert(ZERO) += a;
        }
        let register = self
            .register
            .with_cutoff(self.register.cutoff().max(other.register.cutoff()))?;
        Ok(Self::from_map(register, amplitudes))
    }

    /// Keeps only the terms accepted by `keep`.
    pub fn filter(&self, keep: impl Fn(&Occupation) -> bool) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .filter(|(k, _)| keep(k))
            .map(|(k, &a)| (k.clone(), a))
            .collect();
        Self {
            register: self.register.clone(),
            amplitudes,
        }
    }

    /// ⟨self|other⟩ over identical mode labels.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        self.check_same_labels(other)?;
        Ok(self
            .amplitudes
            .iter()
            .filter_map(|(k, a)| other.amplitudes.get(k).map(|b| a.conj() * b))
            .sum())
    }

    /// |⟨self|other⟩|² for normalized inputs.
    pub fn overlap(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    fn check_same_labels(&self, other: &PureState) -> Result<()> {
        if self.labels() != other.labels() {
            return Err(Error::DimensionMismatch {
                expected: self.register.len(),
                actual: other.register.len(),
            });
        }
        Ok(())
    }

    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        let register = self.register.concat(&other.register)?;
        let mut amplitudes = BTreeMap::new();
        for (ka, &a) in &self.amplitudes {
            for (kb, &b) in &other.amplitudes {
                let mut counts = ka.0.clone();
                counts.extend_from_slice(&kb.0);
                amplitudes.insert(Occupation(counts), a * b);
            }
        }
        Ok(Self::from_map(register, amplitudes))
    }

    /// Applies ⟨bra| on the modes of `bra`. Returns the unnormalized remainder
    /// on the other modes together with its squared norm.
    pub fn project(&self, bra: &PureState) -> Result<(PureState, f64)> {
        let positions = self.register.positions(bra.labels())?;
        let rest = self.register.complement(&positions);
        let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (k, &a) in &self.amplitudes {
            if let Some(b) = bra.amplitudes.get(&k.pick(&positions)) {
                *out.entry(k.pick(&rest)).or_insert(ZERO) += b.conj() * a;
            }
        }
        let remainder = Self::from_map(self.register.select(&rest), out);
        let probability = remainder.norm_sqr();
        if probability < NULL_PROBABILITY {
            return Err(Error::NullOutcome(probability));
        }
        Ok((remainder, probability))
    }

    /// Same state with modes permuted into `labels` order.
    pub fn reorder<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        if labels.len() != self.register.len() {
            return Err(Error::DimensionMismatch {
                expected: self.register.len(),
                actual: labels.len(),
            });
        }
        let positions = self.register.positions(labels)?;
        let register = self.register.select(&positions);
        let amplitudes = self.amplitudes.iter().map(|(k, &a)| (k.pick(&positions), a)).collect();
        Ok(Self { register, amplitudes })
    }

    /// Moves the state to a register with a different cutoff. Lowering the
    /// cutoff fails if any stored term would be cut.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        let register = self.register.with_cutoff(cutoff)?;
        for k in self.amplitudes.keys() {
            register.check_counts(&k.0)?;
        }
        Ok(Self {
            register,
            amplitudes: self.amplitudes.clone(),
        })
    }

    pub fn to_dense(&self) -> Result<DVector<Complex64>> {
        let dim = self.dense_dim()?;
        let mut v = DVector::zeros(dim);
        for (k, &a) in &self.amplitudes {
            v[self.register.index_of(&k.0)] = a;
        }
        Ok(v)
    }

    pub fn from_dense(register: ModeRegister, v: &DVector<Complex64>) -> Result<Self> {
        let dim = register.dim().ok_or(Error::TooLarge(usize::MAX))?;
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        let amplitudes = v
            .iter()
            .enumerate()
            .map(|(i, &a)| (register.occupation_of(i), a))
            .collect();
        Ok(Self::from_map(register, amplitudes))
    }

    fn dense_dim(&self) -> Result<usize> {
        match self.register.dim() {
            Some(d) if d <= DENSE_LIMIT => Ok(d),
            Some(d) => Err(Error::TooLarge(d)),
            None => Err(Error::TooLarge(usize::MAX)),
        }
    }

    /// |ψ⟩⟨ψ| over the full register (no normalization applied).
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let v = self.to_dense()?;
        DensityMatrix::new(self.register.clone(), &v * v.adjoint())
    }

    /// Reduced density operator on `keep`, computed directly from the sparse
    /// amplitudes (no normalization applied).
    pub fn reduced_density<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityMatrix> {
        self.weighted_reduced_density(keep, |_| 1.0)
    }

    /// Reduced density operator on `keep` where each branch of the traced
    /// modes is weighted by `weight`. The weight must depend only on the
    /// traced modes (it is evaluated on a representative occupation of each
    /// branch); this is how number-diagonal detector POVMs are applied.
    pub fn weighted_reduced_density<S: AsRef<str>>(
        &self,
        keep: &[S],
        weight: impl Fn(&Occupation) -> f64,
    ) -> Result<DensityMatrix> {
        let kept = self.register.positions(keep)?;
        let rest = self.register.complement(&kept);
        let sub = self.register.select(&kept);
        let dim = match sub.dim() {
            Some(d) if d <= DENSE_LIMIT => d,
            Some(d) => return Err(Error::TooLarge(d)),
            None => return Err(Error::TooLarge(usize::MAX)),
        };
        let mut groups: BTreeMap<Occupation, (f64, Vec<(usize, Complex64)>)> = BTreeMap::new();
        for (k, &a) in &self.amplitudes {
            groups
                .entry(k.pick(&rest))
                .or_insert_with(|| (weight(k), Vec::new()))
                .1
                .push((sub.index_of(&k.pick(&kept).0), a));
        }
        let mut rho = DMatrix::zeros(dim, dim);
        for (w, entries) in groups.values() {
            if *w == 0.0 {
                continue;
            }
            for &(i, a) in entries {
                for &(j, b) in entries {
                    rho[(i, j)] += a * b.conj() * *w;
                }
            }
        }
        DensityMatrix::new(sub, rho)
    }

    /// Applies an operator on `modes` (basis ordered by `modes`) through the
    /// sparse representation.
    pub fn apply_local<S: AsRef<str>>(&self, modes: &[S], op: &DMatrix<Complex64>) -> Result<Self> {
        let positions = self.register.positions(modes)?;
        let local = self.register.select(&positions);
        let local_dim = local.dim().ok_or(Error::TooLarge(usize::MAX))?;
        if op.nrows() != local_dim || op.ncols() != local_dim {
            return Err(Error::DimensionMismatch {
                expected: local_dim,
                actual: op.nrows(),
            });
        }
        let mut out: HashMap<Occupation, Complex64> = HashMap::new();
        for (k, &a) in &self.amplitudes {
            let col = local.index_of(&k.pick(&positions).0);
            for row in 0..local_dim {
                let m = op[(row, col)];
                if m == ZERO {
                    continue;
                }
                let mut counts = k.0.clone();
                for (slot, &n) in positions.iter().zip(local.occupation_of(row).counts()) {
                    counts[*slot] = n;
                }
                *out.entry(Occupation(counts)).or_insert(ZERO) += m * a;
            }
        }
        Ok(Self::from_hash(self.register.clone(), out))
    }

    /// Multiplies every amplitude by `f(occupation)`.
    pub(crate) fn map_amplitudes(&self, f: impl Fn(&Occupation) -> Complex64) -> Self {
        let amplitudes = self.amplitudes.iter().map(|(k, &a)| (k.clone(), a * f(k))).collect();
        Self::from_map(self.register.clone(), amplitudes)
    }

    /// Exchanges the contents of two modes.
    pub(crate) fn swap_positions(&self, i: usize, j: usize) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .map(|(k, &a)| {
                let mut counts = k.0.clone();
                counts.swap(i, j);
                (Occupation(counts), a)
            })
            .collect();
        Self {
            register: self.register.clone(),
            amplitudes,
        }
    }

    /// Lifts a 2×2 single-photon mode transformation to Fock space:
    /// a_i† → u00 a_i† + u10 a_j†, a_j† → u01 a_i† + u11 a_j†.
    ///
    /// Terms pushed past the cutoff are dropped; callers size the register so
    /// that this does not happen.
    pub(crate) fn mode_transform(&self, i: usize, j: usize, u: &Matrix2<Complex64>) -> Self {
        let cutoff = self.register.cutoff();
        let mut cache: HashMap<(u8, u8), Vec<(u8, u8, Complex64)>> = HashMap::new();
        let mut out: HashMap<Occupation, Complex64> = HashMap::new();
        for (k, &a) in &self.amplitudes {
            let (ni, nj) = (k.0[i], k.0[j]);
            let table = cache
                .entry((ni, nj))
                .or_insert_with(|| transition_table(ni as usize, nj as usize, u, cutoff));
            for &(p, q, amp) in table.iter() {
                let mut counts = k.0.clone();
                counts[i] = p;
                counts[j] = q;
                *out.entry(Occupation(counts)).or_insert(ZERO) += amp * a;
            }
        }
        Self::from_hash(self.register.clone(), out)
    }

    /// Mean photon number of one mode (state assumed normalized).
    pub fn mean_photon_number(&self, mode: &str) -> Result<f64> {
        let p = self.register.position(mode)?;
        Ok(self.amplitudes.iter().map(|(k, a)| k.0[p] as f64 * a.norm_sqr()).sum())
    }
}

/// Output amplitudes of |ni, nj⟩ under the two-mode linear map `u`, with the
/// factorial weights √(p! q! / ni! nj!).
fn transition_table(ni: usize, nj: usize, u: &Matrix2<Complex64>, cutoff: usize) -> Vec<(u8, u8, Complex64)> {
    let total = ni + nj;
    let mut coeff = vec![ZERO; total + 1];
    for k in 0..=ni {
        let first = crate::special::binomial(ni, k) * u[(0, 0)].powu(k as u32) * u[(1, 0)].powu((ni - k) as u32);
        if first == ZERO {
            continue;
        }
        for l in 0..=nj {
            let second = crate::special::binomial(nj, l) * u[(0, 1)].powu(l as u32) * u[(1, 1)].powu((nj - l) as u32);
            coeff[k + l] += first * second;
        }
    }
    let norm = (factorial(ni) * factorial(nj)).sqrt();
    coeff
        .into_iter()
        .enumerate()
        .filter(|&(p, c)| c != ZERO && p <= cutoff && total - p <= cutoff)
        .map(|(p, c)| {
            let q = total - p;
            let w = (factorial(p) * factorial(q)).sqrt() / norm;
            (p as u8, q as u8, c * w)
        })
        .collect()
}
