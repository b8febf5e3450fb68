//! External potentials `U(r)` and their gradients.
//!
//! In `d > 1` dimensions a potential acts as a sum of identical
//! one-dimensional terms, one per Cartesian component.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::SpaceGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Free,
    /// `k (r - center)^2 / 2`.
    Harmonic { stiffness: f64, center: f64 },
    /// `a r^4 - b r^2`.
    DoubleWell { quartic: f64, quadratic: f64 },
    /// Values on a grid, interpolated linearly (`order = 1`) or by cubic
    /// Hermite splines with centred slopes (`order = 3`).
    Tabulated(TabulatedPotential),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedPotential {
    grid: SpaceGrid,
    values: Vec<f64>,
    order: usize,
}

impl TabulatedPotential {
    pub fn new(grid: SpaceGrid, values: Vec<f64>, order: usize) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("expected {} samples, got {}", grid.len(), values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "must be finite"));
        }
        if order != 1 && order != 3 {
            return Err(invalid("order", format!("must be 1 or 3, got {order}")));
        }
        Ok(TabulatedPotential {
            grid,
            values,
            order,
        })
    }

    fn sample(&self, i: isize) -> f64 {
        let m = self.values.len() as isize;
        if self.grid.periodic() {
            self.values[i.rem_euclid(m) as usize]
        } else {
            self.values[i.clamp(0, m - 1) as usize]
        }
    }

    fn slope(&self, i: isize) -> f64 {
        let m = self.values.len() as isize;
        let h = self.grid.spacing();
        if !self.grid.periodic() && (i <= 0 || i >= m - 1) {
            let (a, b) = if i <= 0 { (0, 1) } else { (m - 2, m - 1) };
            return (self.sample(b) - self.sample(a)) / h;
        }
        (self.sample(i + 1) - self.sample(i - 1)) / (2.0 * h)
    }

    /// Cell index and local coordinate in [0, 1].
    fn locate(&self, r: f64) -> Option<(isize, f64)> {
        let h = self.grid.spacing();
        let mut s = (r - self.grid.position(0)) / h;
        let m = self.values.len() as f64;
        if self.grid.periodic() {
            s = s.rem_euclid(m);
        } else if s < 0.0 || s > m - 1.0 {
            return None;
        }
        let i = (s.floor() as isize).min(self.values.len() as isize - 1);
        let i = if !self.grid.periodic() {
            i.min(self.values.len() as isize - 2)
        } else {
            i
        };
        Some((i, s - i as f64))
    }

    fn eval(&self, r: f64) -> (f64, f64) {
        let h = self.grid.spacing();
        let Some((i, t)) = self.locate(r) else {
            // Flat continuation outside a bounded table.
            let edge = if r < self.grid.position(0) {
                self.values[0]
            } else {
                self.values[self.values.len() - 1]
            };
            return (edge, 0.0);
        };
        let (y0, y1) = (self.sample(i), self.sample(i + 1));
        if self.order == 1 {
            return (y0 + t * (y1 - y0), (y1 - y0) / h);
        }
        let (m0, m1) = (self.slope(i) * h, self.slope(i + 1) * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let deriv = (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1;
        (value, deriv / h)
    }
}

impl Potential {
    pub fn harmonic(stiffness: f64) -> Self {
        Potential::Harmonic {
            stiffness,
            center: 0.0,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { stiffness, center } => 0.5 * stiffness * (r - center).powi(2),
            Potential::DoubleWell { quartic, quadratic } => {
                let r2 = r * r;
                quartic * r2 * r2 - quadratic * r2
            }
            Potential::Tabulated(t) => t.eval(r).0,
        }
    }

    pub fn gradient(&self, r: f64) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { stiffness, center } => stiffness * (r - center),
            Potential::DoubleWell { quartic, quadratic } => {
                4.0 * quartic * r * r * r - 2.0 * quadratic * r
            }
            Potential::Tabulated(t) => t.eval(r).1,
        }
    }

    /// Largest curvature `U''` over the physically relevant range, used for
    /// step-size bounds. `None` for the free particle.
    pub fn max_curvature(&self, extent: f64) -> Option<f64> {
        match self {
            Potential::Free => None,
            Potential::Harmonic { stiffness, .. } => Some(stiffness.abs()),
            Potential::DoubleWell { quartic, quadratic } => {
                let at_edge = (12.0 * quartic * extent * extent - 2.0 * quadratic).abs();
                let at_minimum = (4.0 * quadratic).abs();
                Some(at_edge.max(at_minimum).max((2.0 * quadratic).abs()))
            }
            Potential::Tabulated(t) => {
                let h = t.grid.spacing();
                let m = t.values.len() as isize;
                let range = if t.grid.periodic() { 0..m } else { 1..m - 1 };
                range
                    .map(|i| {
                        ((t.sample(i + 1) - 2.0 * t.sample(i) + t.sample(i - 1)) / (h * h)).abs()
                    })
                    .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::Harmonic { stiffness, center } => {
                if !(stiffness.is_finite() && *stiffness > 0.0) {
                    return Err(invalid("stiffness", "must be finite and > 0"));
                }
                if !center.is_finite() {
                    return Err(invalid("center", "must be finite"));
                }
            }
            Potential::DoubleWell { quartic, quadratic } => {
                if !(quartic.is_finite() && *quartic > 0.0) {
                    return Err(invalid("quartic", "must be finite and > 0"));
                }
                if !quadratic.is_finite() {
                    return Err(invalid("quadratic", "must be finite"));
                }
            }
            Potential::Free | Potential::Tabulated(_) => {}
        }
        Ok(())
    }
}
