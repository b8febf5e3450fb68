//! SI physical constants (CODATA 2018 recommended values).

use serde::{Deserialize, Serialize};

/// Planck constant, exact since the 2019 SI redefinition [J s].
pub const PLANCK_SI: f64 = 6.626_070_15e-34;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsTable {
    /// Speed of light [m/s], exact.
    pub c: f64,
    /// Elementary charge [C], exact.
    pub e: f64,
    /// Vacuum permittivity [F/m].
    pub eps0: f64,
    /// Reduced Planck constant [J s], `h / 2 pi` with exact `h`.
    pub hbar_si: f64,
    /// Boltzmann constant [J/K], exact.
    pub kb_si: f64,
    /// Fine-structure constant.
    pub alpha: f64,
}

impl ConstantsTable {
    /// `e^2 / (4 pi eps0 hbar c)`, for checking `alpha` against the rest of the table.
    pub fn alpha_from_definition(&self) -> f64 {
        self.e * self.e / (4.0 * std::f64::consts::PI * self.eps0 * self.hbar_si * self.c)
    }

    /// Radiation-reaction time `e^2 / (6 pi eps0 m c^3)` of a point charge `e` with mass `m` [kg].
    pub fn radiation_time(&self, mass_kg: f64) -> f64 {
        self.e * self.e / (6.0 * std::f64::consts::PI * self.eps0 * mass_kg * self.c.powi(3))
    }
}

/// CODATA 2018 table.
pub fn constants() -> ConstantsTable {
    ConstantsTable {
        c: 299_792_458.0,
        e: 1.602_176_634e-19,
        eps0: 8.854_187_812_8e-12,
        hbar_si: PLANCK_SI / (2.0 * std::f64::consts::PI),
        kb_si: 1.380_649e-23,
        alpha: 7.297_352_569_3e-3,
    }
}
