use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ModeRegister, QuantumChannel, DENSE_LIMIT};
use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const EIGENVALUE_FLOOR: f64 = -1e-9;

/// Dense density operator over a [`ModeRegister`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    register: ModeRegister,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Wraps a matrix after a shape check. Physical validity is checked
    /// separately by [`DensityMatrix::validate`].
    pub fn new(register: ModeRegister, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = register.dim().ok_or(Error::TooLarge(usize::MAX))?;
        if dim > DENSE_LIMIT {
            return Err(Error::TooLarge(dim));
        }
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: matrix.nrows(),
            });
        }
        Ok(Self { register, matrix })
    }

    /// |n⟩⟨n| on a single mode.
    pub fn fock(label: &str, cutoff: usize, n: usize) -> Result<Self> {
        let register = ModeRegister::single(label, cutoff)?;
        if n > cutoff {
            return Err(Error::OccupationOutOfRange {
                mode: label.to_string(),
                count: n,
                cutoff,
            });
        }
        let mut m = DMatrix::zeros(cutoff + 1, cutoff + 1);
        m[(n, n)] = Complex64::new(1.0, 0.0);
        Self::new(register, m)
    }

    /// Diagonal state Σ p_n |n⟩⟨n| on a single mode.
    pub fn diagonal(label: &str, populations: &[f64]) -> Result<Self> {
        let cutoff = populations.len().saturating_sub(1).max(1);
        let register = ModeRegister::single(label, cutoff)?;
        let mut m = DMatrix::zeros(cutoff + 1, cutoff + 1);
        for (n, &p) in populations.iter().enumerate() {
            m[(n, n)] = Complex64::new(p, 0.0);
        }
        Self::new(register, m)
    }

    pub fn maximally_mixed(register: ModeRegister) -> Result<Self> {
        let dim = register.dim().ok_or(Error::TooLarge(usize::MAX))?;
        Self::new(register, DMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0))
    }

    pub fn register(&self) -> &ModeRegister {
        &self.register
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn normalize(&self) -> Result<Self> {
        let tr = self.trace().re;
        if tr <= 0.0 || !tr.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            register: self.register.clone(),
            matrix: &self.matrix / Complex64::new(tr, 0.0),
        })
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Checks Hermiticity, unit trace and the eigenvalue floor.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!("Hermiticity error {herm:e}")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < EIGENVALUE_FLOOR {
            return Err(Error::InvalidDensity(format!("eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<Self> {
        let kept = self.register.positions(keep)?;
        let rest = self.register.complement(&kept);
        let sub = self.register.select(&kept);
        let sub_dim = sub.dim().ok_or(Error::TooLarge(usize::MAX))?;
        let dim = self.dim();
        let occ: Vec<_> = (0..dim).map(|i| self.register.occupation_of(i)).collect();
        let kept_index: Vec<usize> = occ.iter().map(|o| sub.index_of(&o.pick(&kept).0)).collect();
        let rest_occ: Vec<_> = occ.iter().map(|o| o.pick(&rest)).collect();
        let mut out = DMatrix::zeros(sub_dim, sub_dim);
        for i in 0..dim {
            for j in 0..dim {
                if rest_occ[i] == rest_occ[j] {
                    out[(kept_index[i], kept_index[j])] += self.matrix[(i, j)];
                }
            }
        }
        Self::new(sub, out)
    }

    /// Tr[ρ A].
    pub fn expectation(&self, op: &DMatrix<Complex64>) -> Result<Complex64> {
        if op.shape() != self.matrix.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: op.nrows(),
            });
        }
        Ok((&self.matrix * op).trace())
    }

    /// Tr[ρ A] for Hermitian `op`; rejects non-Hermitian operators.
    pub fn expectation_real(&self, op: &DMatrix<Complex64>) -> Result<f64> {
        let herm = hermiticity_error(op);
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        Ok(self.expectation(op)?.re)
    }

    /// ρ → Σ_k K_k ρ K_k† with the Kraus operators acting on `modes`.
    pub fn apply_channel<S: AsRef<str>>(&self, channel: &QuantumChannel, modes: &[S]) -> Result<Self> {
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for k in channel.kraus() {
            let full = embed_operator(&self.register, modes, k)?;
            out += &full * &self.matrix * full.adjoint();
        }
        Self::new(self.register.clone(), out)
    }

    /// Resizes every mode to `cutoff`. Truncation fails if it would discard
    /// more than 1e-12 of population.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        let register = self.register.with_cutoff(cutoff)?;
        let new_dim = register.dim().ok_or(Error::TooLarge(usize::MAX))?;
        let mut out = DMatrix::zeros(new_dim, new_dim);
        let mut dropped = 0.0;
        let mapping: Vec<Option<usize>> = (0..self.dim())
            .map(|i| {
                let o = self.register.occupation_of(i);
                register.check_counts(&o.0).ok().map(|_| register.index_of(&o.0))
            })
            .collect();
        for i in 0..self.dim() {
            match mapping[i] {
                Some(ni) => {
                    for j in 0..self.dim() {
                        if let Some(nj) = mapping[j] {
                            out[(ni, nj)] = self.matrix[(i, j)];
                        }
                    }
                }
                None => dropped += self.matrix[(i, i)].re.abs(),
            }
        }
        if dropped > 1e-12 {
            return Err(Error::InvalidDensity(format!(
                "truncating to cutoff {cutoff} discards population {dropped:e}"
            )));
        }
        Self::new(register, out)
    }

    /// Applies e^{iφ n̂} on one mode: ρ_mn → ρ_mn e^{iφ(m−n)}.
    pub fn rotate_phase(&self, mode: &str, phi: f64) -> Result<Self> {
        let p = self.register.position(mode)?;
        let mut out = self.matrix.clone();
        for i in 0..self.dim() {
            let ni = self.register.occupation_of(i).0[p] as f64;
            for j in 0..self.dim() {
                let nj = self.register.occupation_of(j).0[p] as f64;
                out[(i, j)] *= Complex64::from_polar(1.0, phi * (ni - nj));
            }
        }
        Self::new(self.register.clone(), out)
    }

    /// Convex combination `(1-w)·self + w·other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<Self> {
        if self.register != other.register {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let m = &self.matrix * Complex64::new(1.0 - w, 0.0) + &other.matrix * Complex64::new(w, 0.0);
        Self::new(self.register.clone(), m)
    }
}

pub(crate) fn hermiticity_error(m: &DMatrix<Complex64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry modulus.
pub fn max_modulus(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub(crate) fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub(crate) fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Lifts an operator on `modes` (basis ordered by `modes`) to the full register.
pub fn embed_operator<S: AsRef<str>>(
    register: &ModeRegister,
    modes: &[S],
    op: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>> {
    let positions = register.positions(modes)?;
    let local = register.select(&positions);
    let local_dim = local.dim().ok_or(Error::TooLarge(usize::MAX))?;
    if op.nrows() != local_dim || op.ncols() != local_dim {
        return Err(Error::DimensionMismatch {
            expected: local_dim,
            actual: op.nrows(),
        });
    }
    let dim = register.dim().ok_or(Error::TooLarge(usize::MAX))?;
    if dim > DENSE_LIMIT {
        return Err(Error::TooLarge(dim));
    }
    let rest = register.complement(&positions);
    let occ: Vec<_> = (0..dim).map(|i| register.occupation_of(i)).collect();
    let local_index: Vec<usize> = occ.iter().map(|o| local.index_of(&o.pick(&positions).0)).collect();
    let rest_occ: Vec<_> = occ.iter().map(|o| o.pick(&rest)).collect();
    let mut full = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            if rest_occ[i] == rest_occ[j] {
                full[(i, j)] = op[(local_index[i], local_index[j])];
            }
        }
    }
    Ok(full)
}

/// Photon-number operator on one mode with the given cutoff.
pub fn number_operator(cutoff: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(cutoff + 1, cutoff + 1, |i, j| {
        if i == j {
            Complex64::new(i as f64, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Annihilation operator on one mode with the given cutoff.
pub fn annihilation_operator(cutoff: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(cutoff + 1, cutoff + 1, |i, j| {
        if j == i + 1 {
            Complex64::new((j as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::PureState;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn number_expectation_of_single_photon() {
        let rho = DensityMatrix::fock("B", 2, 1).unwrap();
        assert!((rho.expectation_real(&number_operator(2)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_hermitian_expectation_is_rejected() {
        let rho = DensityMatrix::fock("B", 2, 1).unwrap();
        assert!(matches!(
            rho.expectation_real(&annihilation_operator(2)),
            Err(Error::NotHermitian(_))
        ));
        // the complex-valued form still works
        assert_eq!(rho.expectation(&annihilation_operator(2)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn partial_trace_of_product_returns_factor() {
        let reg = ModeRegister::new(["a"], 2).unwrap();
        let x = PureState::from_terms(reg, [(vec![0], c(0.6, 0.0)), (vec![1], c(0.0, 0.8))]).unwrap();
        let y = PureState::from_terms(ModeRegister::new(["b"], 2).unwrap(), [(vec![2], c(1.0, 0.0))]).unwrap();
        let rho = x.tensor(&y).unwrap().to_density().unwrap();
        let rx = rho.partial_trace(&["a"]).unwrap();
        let expected = x.to_density().unwrap();
        assert!((rx.matrix() - expected.matrix()).norm() < 1e-15);
        rx.validate().unwrap();
    }

    #[test]
    fn validate_catches_broken_states() {
        let reg = ModeRegister::single("a", 1).unwrap();
        let bad_trace = DensityMatrix::new(reg.clone(), DMatrix::identity(2, 2)).unwrap();
        assert!(bad_trace.validate().is_err());
        let negative = DensityMatrix::new(
            reg.clone(),
            DMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]),
        )
        .unwrap();
        assert!(negative.validate().is_err());
        let skew = DensityMatrix::new(
            reg,
            DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)]),
        )
        .unwrap();
        assert!(skew.validate().is_err());
    }

    #[test]
    fn cutoff_change_pads_and_truncates() {
        let rho = DensityMatrix::fock("B", 2, 1).unwrap();
        let up = rho.with_cutoff(4).unwrap();
        assert_eq!(up.dim(), 5);
        assert_eq!(up.matrix()[(1, 1)], c(1.0, 0.0));
        let down = up.with_cutoff(1).unwrap();
        assert_eq!(down.dim(), 2);
        assert!(DensityMatrix::fock("B", 2, 2).unwrap().with_cutoff(1).is_err());
    }
}
