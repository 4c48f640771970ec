use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::binomial;

pub const TRACE_PRESERVATION_TOL: f64 = 1e-10;

/// CPTP map given by a finite Kraus set acting on a block of modes.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumChannel {
    kraus: Vec<DMatrix<Complex64>>,
}

impl QuantumChannel {
    /// Builds a channel and checks Σ K†K = I within [`TRACE_PRESERVATION_TOL`].
    pub fn new(kraus: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let dim = kraus
            .first()
            .map(|k| k.nrows())
            .ok_or_else(|| Error::param("kraus", "empty Kraus set"))?;
        for k in &kraus {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: k.nrows(),
                });
            }
        }
        let channel = Self { kraus };
        let err = channel.trace_preservation_error();
        if err > TRACE_PRESERVATION_TOL {
            return Err(Error::param("kraus", format!("not trace preserving (error {err:e})")));
        }
        Ok(channel)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            kraus: vec![DMatrix::identity(dim, dim)],
        }
    }

    pub fn kraus(&self) -> &[DMatrix<Complex64>] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    /// max |Σ K†K − I|.
    pub fn trace_preservation_error(&self) -> f64 {
        let dim = self.dim();
        let sum = self
            .kraus
            .iter()
            .fold(DMatrix::<Complex64>::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
        super::max_modulus(&(sum - DMatrix::identity(dim, dim)))
    }

    /// `other ∘ self`: apply `self` first.
    pub fn then(&self, other: &QuantumChannel) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let kraus = other
            .kraus
            .iter()
            .flat_map(|b| self.kraus.iter().map(move |a| b * a))
            .collect();
        Ok(Self { kraus })
    }

    /// Σ K† A K: the Heisenberg-picture image of an operator.
    pub fn adjoint_apply(&self, op: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.kraus
            .iter()
            .fold(DMatrix::zeros(self.dim(), self.dim()), |acc, k| {
                acc + k.adjoint() * op * k
            })
    }

    /// ρ → Σ K ρ K† on a bare matrix of matching dimension.
    pub fn apply_matrix(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.kraus
            .iter()
            .fold(DMatrix::zeros(self.dim(), self.dim()), |acc, k| {
                acc + k * rho * k.adjoint()
            })
    }
}

/// Kraus weights B(m, k) = C(m,k) η^{m−k} (1−η)^k of losing k of m photons.
pub fn loss_weight(m: usize, k: usize, eta: f64) -> f64 {
    if k > m {
        return 0.0;
    }
    binomial(m, k) * eta.powi((m - k) as i32) * (1.0 - eta).powi(k as i32)
}

/// Single-mode pure-loss channel with transmissivity `eta`:
/// ⟨m−k|K_k|m⟩ = √B(m,k).
pub fn loss_channel(eta: f64, cutoff: usize) -> Result<QuantumChannel> {
    if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
        return Err(Error::param("eta", format!("transmissivity {eta} outside [0, 1]")));
    }
    let dim = cutoff + 1;
    if eta == 1.0 {
        return Ok(QuantumChannel::identity(dim));
    }
    let kraus = (0..dim)
        .map(|k| {
            DMatrix::from_fn(dim, dim, |row, col| {
                if col >= k && row == col - k {
                    Complex64::new(loss_weight(col, k, eta).sqrt(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    QuantumChannel::new(kraus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_transmissivity_is_identity() {
        let ch = loss_channel(1.0, 3).unwrap();
        assert_eq!(ch.kraus().len(), 1);
        assert_eq!(ch.kraus()[0], DMatrix::identity(4, 4));
    }

    #[test]
    fn loss_channel_is_trace_preserving() {
        for &eta in &[0.0, 0.1, 0.5, 0.93] {
            assert!(loss_channel(eta, 6).unwrap().trace_preservation_error() < 1e-14);
        }
    }

    #[test]
    fn rejects_out_of_range_eta() {
        assert!(loss_channel(1.2, 2).is_err());
        assert!(loss_channel(-0.1, 2).is_err());
    }

    #[test]
    fn non_trace_preserving_kraus_set_is_rejected() {
        let k = DMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
        assert!(QuantumChannel::new(vec![k]).is_err());
    }
}
