//! Count-rate arithmetic for the click detectors and the homodyne efficiency
//! budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transmission loss of the half-wave-plate/polariser pairs in the Bell
/// analyser, expressed as the factor by which it divides singles rates.
pub const DEFAULT_LOSS_FACTOR: f64 = 4.0;

/// Measured triple-coincidence rate (Hz) and its uncertainty.
pub const OBSERVED_TRIPLE_RATE: f64 = 0.16;
pub const OBSERVED_TRIPLE_RATE_ERR: f64 = 0.03;

/// Singles and coincidence rates, all in Hz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub laser_rate: f64,
    pub alpha_rate: f64,
    pub gamma1_rate: f64,
    pub gamma23_rate: f64,
    /// Coincidences between a D analyser detector and a Bell-analyser
    /// detector for pairs from the A/D source.
    pub coincidence_rate: f64,
    pub projector_loss_factor: f64,
}

impl Default for RateModel {
    fn default() -> Self {
        Self {
            laser_rate: 76e6,
            alpha_rate: 22e3,
            gamma1_rate: 22e3,
            gamma23_rate: 1.7e3,
            coincidence_rate: 51.0,
            projector_loss_factor: DEFAULT_LOSS_FACTOR,
        }
    }
}

impl RateModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("laser_rate", self.laser_rate),
            ("alpha_rate", self.alpha_rate),
            ("gamma1_rate", self.gamma1_rate),
            ("gamma23_rate", self.gamma23_rate),
            ("coincidence_rate", self.coincidence_rate),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("{v} is not a non-negative rate")));
            }
        }
        if self.coincidence_rate > self.gamma23_rate {
            return Err(Error::param(
                "coincidence_rate",
                format!("{} exceeds gamma23_rate {}", self.coincidence_rate, self.gamma23_rate),
            ));
        }
        if !(self.projector_loss_factor.is_finite() && self.projector_loss_factor > 0.0) {
            return Err(Error::param("projector_loss_factor", "must be positive"));
        }
        Ok(())
    }

    pub fn eta_d(&self) -> Result<f64> {
        estimate_eta_d(self.coincidence_rate, self.gamma23_rate)
    }
}

/// Detection efficiency as the ratio of heralded coincidences to singles.
pub fn estimate_eta_d(coincidence_rate: f64, singles_rate: f64) -> Result<f64> {
    if !(singles_rate > 0.0) {
        return Err(Error::param("singles_rate", format!("{singles_rate} must be positive")));
    }
    if !(coincidence_rate >= 0.0 && coincidence_rate <= singles_rate) {
        return Err(Error::param(
            "coincidence_rate",
            format!("{coincidence_rate} outside [0, {singles_rate}]"),
        ));
    }
    Ok(coincidence_rate / singles_rate)
}

/// Pair amplitude from a singles rate measured behind the analyser:
/// γ = √(loss_factor · R / (R_L · η_d)).
pub fn estimate_gamma(rate: f64, laser_rate: f64, eta_d: f64, loss_factor: f64) -> Result<f64> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::param("rate", format!("{rate} is not a non-negative rate")));
    }
    if !(laser_rate > 0.0) {
        return Err(Error::param("laser_rate", format!("{laser_rate} must be positive")));
    }
    if !(eta_d > 0.0) {
        return Err(Error::param("eta_d", format!("{eta_d} must be positive")));
    }
    if !(loss_factor > 0.0) {
        return Err(Error::param("loss_factor", format!("{loss_factor} must be positive")));
    }
    Ok((loss_factor * rate / (laser_rate * eta_d)).sqrt())
}

/// Inverse of [`estimate_gamma`]: the singles rate a pair amplitude produces.
pub fn singles_rate(gamma: f64, laser_rate: f64, eta_d: f64, loss_factor: f64) -> Result<f64> {
    if !(loss_factor > 0.0) {
        return Err(Error::param("loss_factor", format!("{loss_factor} must be positive")));
    }
    Ok(gamma * gamma * laser_rate * eta_d / loss_factor)
}

/// Leading-order rate of genuine triple coincidences, R_L · ½ η_d³ γ1² γ23².
pub fn predict_triple_rate(laser_rate: f64, eta_d: f64, gamma1: f64, gamma23: f64) -> f64 {
    laser_rate * 0.5 * eta_d.powi(3) * (gamma1 * gamma1) * (gamma23 * gamma23)
}

/// Everything derivable from a [`RateModel`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub model: RateModel,
    pub eta_d: f64,
    pub gamma1: f64,
    pub gamma23: f64,
    pub alpha: f64,
    /// γ1 with loss factor 1, showing what the bare formula gives for rates
    /// measured behind the polarisers.
    pub gamma1_without_loss_factor: f64,
    pub predicted_triple_rate: f64,
    pub observed_triple_rate: f64,
    pub observed_triple_rate_err: f64,
    pub note: String,
}

pub fn rate_report(model: &RateModel) -> Result<RateReport> {
    model.validate()?;
    let eta_d = model.eta_d()?;
    let k = model.projector_loss_factor;
    let gamma1 = estimate_gamma(model.gamma1_rate, model.laser_rate, eta_d, k)?;
    let gamma23 = estimate_gamma(model.gamma23_rate, model.laser_rate, eta_d, k)?;
    Ok(RateReport {
        model: model.clone(),
        eta_d,
        gamma1,
        gamma23,
        alpha: estimate_gamma(model.alpha_rate, model.laser_rate, eta_d, k)?,
        gamma1_without_loss_factor: estimate_gamma(model.gamma1_rate, model.laser_rate, eta_d, 1.0)?,
        predicted_triple_rate: predict_triple_rate(model.laser_rate, eta_d, gamma1, gamma23),
        observed_triple_rate: OBSERVED_TRIPLE_RATE,
        observed_triple_rate_err: OBSERVED_TRIPLE_RATE_ERR,
        note: format!(
            "amplitudes multiply the singles rates by the projector loss factor {k} to undo the analyser \
             transmission; eta_d is the plain coincidence/singles ratio"
        ),
    })
}

/// Homodyne efficiency as a product of independent factors, next to the
/// value measured by tomography of a heralded photon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBudget {
    pub loss_factor: f64,
    pub mode_match: f64,
    pub photodiode_qe: f64,
    pub product: f64,
    pub measured_eta: f64,
    pub drift: f64,
}

impl EfficiencyBudget {
    /// Product minus measured efficiency.
    pub fn discrepancy(&self) -> f64 {
        self.product - self.measured_eta
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.measured_eta - self.drift, self.measured_eta + self.drift)
    }

    /// Efficiencies at which to repeat a corrected reconstruction.
    pub fn drift_etas(&self) -> [f64; 3] {
        let (lo, hi) = self.interval();
        [lo, self.measured_eta, hi]
    }
}

impl Default for EfficiencyBudget {
    fn default() -> Self {
        efficiency_budget([0.80, 0.81, 0.86], 0.50, 0.025).expect("default factors are valid")
    }
}

pub fn efficiency_budget(factors: [f64; 3], measured_eta: f64, drift: f64) -> Result<EfficiencyBudget> {
    for (name, v) in [
        ("loss_factor", factors[0]),
        ("mode_match", factors[1]),
        ("photodiode_qe", factors[2]),
        ("measured_eta", measured_eta),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::param(name, format!("{v} outside [0, 1]")));
        }
    }
    if !(drift >= 0.0 && drift <= measured_eta) {
        return Err(Error::param("drift", format!("{drift} outside [0, {measured_eta}]")));
    }
    Ok(EfficiencyBudget {
        loss_factor: factors[0],
        mode_match: factors[1],
        photodiode_qe: factors[2],
        product: factors[0] * factors[1] * factors[2],
        measured_eta,
        drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_d_examples() {
        assert!((estimate_eta_d(51.0, 1700.0).unwrap() - 0.030).abs() < 1e-12);
        assert_eq!(estimate_eta_d(1700.0, 1700.0).unwrap(), 1.0);
        assert!((estimate_eta_d(25.5, 1700.0).unwrap() - 0.015).abs() < 1e-12);
        assert!(estimate_eta_d(1.0, 0.0).is_err());
    }

    #[test]
    fn loss_factor_matters() {
        let g = estimate_gamma(22e3, 76e6, 0.03, 1.0).unwrap();
        assert!((g - 0.0982).abs() < 5e-4);
        assert!(estimate_gamma(22e3, 76e6, 0.0, 4.0).is_err());
    }

    #[test]
    fn budget_drift_interval() {
        let b = EfficiencyBudget::default();
        assert!((b.product - 0.55728).abs() < 1e-12);
        let (lo, hi) = b.interval();
        assert!((lo - 0.475).abs() < 1e-12 && (hi - 0.525).abs() < 1e-12);
    }

    #[test]
    fn report_uses_default_model() {
        let r = rate_report(&RateModel::default()).unwrap();
        assert!((r.eta_d - 0.03).abs() < 1e-12);
        assert!((r.predicted_triple_rate - 0.12).abs() < 0.01);
    }

    #[test]
    fn rejects_excess_coincidences() {
        let m = RateModel {
            coincidence_rate: 2e3,
            ..RateModel::default()
        };
        assert!(m.validate().is_err());
    }
}
