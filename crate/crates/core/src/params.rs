use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Physical parameters of the particle and its bath.
///
/// Temperatures are stored as thermal energies (`k_B = 1`). `hbar = 0` and
/// `tau = 0` select the classical white-noise limit. The temperature is
/// strictly positive: there is no zero-temperature form of the temperature
/// operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBathParams", into = "RawBathParams")]
pub struct BathParams {
    mass: f64,
    gamma: f64,
    tau: f64,
    temperature: f64,
    hbar: f64,
    dim: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBathParams {
    mass: f64,
    gamma: f64,
    #[serde(default)]
    tau: f64,
    temperature: f64,
    #[serde(default)]
    hbar: f64,
    #[serde(default = "default_dim")]
    dim: usize,
}

fn default_dim() -> usize {
    1
}

impl TryFrom<RawBathParams> for BathParams {
    type Error = crate::Error;

    fn try_from(r: RawBathParams) -> Result<Self> {
        BathParams::new(r.mass, r.gamma, r.tau, r.temperature, r.hbar, r.dim)
    }
}

impl From<BathParams> for RawBathParams {
    fn from(p: BathParams) -> Self {
        RawBathParams {
            mass: p.mass,
            gamma: p.gamma,
            tau: p.tau,
            temperature: p.temperature,
            hbar: p.hbar,
            dim: p.dim,
        }
    }
}

impl BathParams {
    pub fn new(
        mass: f64,
        gamma: f64,
        tau: f64,
        temperature: f64,
        hbar: f64,
        dim: usize,
    ) -> Result<Self> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and > 0, got {v}")))
            }
        };
        let non_negative = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and >= 0, got {v}")))
            }
        };
        positive("mass", mass)?;
        positive("gamma", gamma)?;
        non_negative("tau", tau)?;
        positive("temperature", temperature)?;
        non_negative("hbar", hbar)?;
        if !(1..=3).contains(&dim) {
            return Err(invalid("dim", format!("must be 1, 2 or 3, got {dim}")));
        }
        let p = BathParams {
            mass,
            gamma,
            tau,
            temperature,
            hbar,
            dim,
        };
        if !p.theta().is_finite() {
            return Err(invalid("hbar", "hbar * gamma / temperature overflows"));
        }
        Ok(p)
    }

    /// Classical bath (`hbar = 0`, `tau = 0`) in one dimension.
    pub fn classical(mass: f64, gamma: f64, temperature: f64) -> Result<Self> {
        Self::new(mass, gamma, 0.0, temperature, 0.0, 1)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Thermal energy `k_B T`.
    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    /// Dimensionless quantumness of the bath, `beta hbar gamma`.
    pub fn theta(&self) -> f64 {
        self.hbar * self.gamma / self.temperature
    }

    /// Classical diffusion constant `k_B T / (m gamma)`.
    pub fn diffusion(&self) -> f64 {
        self.temperature / (self.mass * self.gamma)
    }

    pub fn is_classical(&self) -> bool {
        self.hbar == 0.0 && self.tau == 0.0
    }

    pub fn with_mass(self, mass: f64) -> Result<Self> {
        Self::new(mass, self.gamma, self.tau, self.temperature, self.hbar, self.dim)
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(self.mass, gamma, self.tau, self.temperature, self.hbar, self.dim)
    }

    pub fn with_tau(self, tau: f64) -> Result<Self> {
        Self::new(self.mass, self.gamma, tau, self.temperature, self.hbar, self.dim)
    }

    pub fn with_temperature(self, temperature: f64) -> Result<Self> {
        Self::new(self.mass, self.gamma, self.tau, temperature, self.hbar, self.dim)
    }

    pub fn with_hbar(self, hbar: f64) -> Result<Self> {
        Self::new(self.mass, self.gamma, self.tau, self.temperature, hbar, self.dim)
    }

    pub fn with_dim(self, dim: usize) -> Result<Self> {
        Self::new(self.mass, self.gamma, self.tau, self.temperature, self.hbar, dim)
    }

    /// Same bath with `hbar = 0` and `tau = 0`.
    pub fn classical_limit(self) -> Self {
        BathParams {
            hbar: 0.0,
            tau: 0.0,
            ..self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(BathParams::new(1.0, 1.0, 0.0, 1.0, 0.0, 1).is_ok());
        assert!(BathParams::new(1.0, 1.0, 0.0, 0.0, 1.0, 1).is_err());
        assert!(BathParams::new(-1.0, 1.0, 0.0, 1.0, 1.0, 1).is_err());
        assert!(BathParams::new(1.0, 0.0, 0.0, 1.0, 1.0, 1).is_err());
        assert!(BathParams::new(1.0, 1.0, -1e-3, 1.0, 1.0, 1).is_err());
        assert!(BathParams::new(1.0, 1.0, 0.0, 1.0, -1.0, 1).is_err());
        assert!(BathParams::new(1.0, 1.0, 0.0, 1.0, 1.0, 4).is_err());
        assert!(BathParams::new(1.0, 1.0, 0.0, f64::NAN, 1.0, 1).is_err());
    }

    #[test]
    fn derived_groups() {
        let p = BathParams::new(2.0, 3.0, 0.0, 0.5, 0.25, 3).unwrap();
        assert_eq!(p.theta(), 0.25 * 3.0 / 0.5);
        assert_eq!(p.beta(), 2.0);
        assert_eq!(p.diffusion(), 0.5 / 6.0);
        assert!(p.classical_limit().is_classical());
    }

    #[test]
    fn deserialization_validates() {
        let bad: std::result::Result<BathParams, _> =
            serde_json::from_str(r#"{"mass":1,"gamma":1,"temperature":0}"#);
        assert!(bad.is_err());
        let ok: BathParams =
            serde_json::from_str(r#"{"mass":1,"gamma":2,"temperature":3,"hbar":0.5}"#).unwrap();
        assert_eq!(ok.dim(), 1);
        assert_eq!(ok.tau(), 0.0);
    }
}
