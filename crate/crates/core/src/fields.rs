//! Probability densities on space and phase-space grids.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::SpaceGrid;
use crate::io::{fmt_f64, CsvTable};
use crate::potential::Potential;

/// Configurational density `rho(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub grid: SpaceGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl DensityField {
    pub fn new(grid: SpaceGrid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("expected {} samples, got {}", grid.len(), values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "density must be finite"));
        }
        Ok(DensityField { grid, values, time })
    }

    /// Rescales `values` to unit mass.
    pub fn normalized(grid: SpaceGrid, mut values: Vec<f64>) -> Result<Self> {
        let mass = grid.integrate(&values);
        if !(mass.is_finite() && mass > 0.0) {
            return Err(invalid("values", "density has no positive mass"));
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Self::new(grid, values, 0.0)
    }

    pub fn from_fn(grid: SpaceGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.positions().into_iter().map(f).collect();
        Self::normalized(grid, values)
    }

    pub fn uniform(grid: SpaceGrid) -> Result<Self> {
        Self::from_fn(grid, |_| 1.0)
    }

    pub fn gaussian(grid: SpaceGrid, center: f64, sigma: f64) -> Result<Self> {
        Self::from_fn(grid, |r| (-(r - center).powi(2) / (2.0 * sigma * sigma)).exp())
    }

    /// Normalized Boltzmann density `exp(-U / T)`.
    pub fn boltzmann(grid: SpaceGrid, potential: &Potential, temperature: f64) -> Result<Self> {
        let u: Vec<f64> = grid.positions().iter().map(|&r| potential.value(r)).collect();
        let u_min = u.iter().cloned().fold(f64::INFINITY, f64::min);
        let values = u.iter().map(|v| (-(v - u_min) / temperature).exp()).collect();
        Self::normalized(grid, values)
    }

    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn mean(&self) -> f64 {
        let x = self.grid.positions();
        self.grid
            .integrate(&x.iter().zip(&self.values).map(|(x, r)| x * r).collect::<Vec<_>>())
            / self.mass()
    }

    pub fn variance(&self) -> f64 {
        let x = self.grid.positions();
        let mu = self.mean();
        self.grid.integrate(
            &x.iter()
                .zip(&self.values)
                .map(|(x, r)| (x - mu).powi(2) * r)
                .collect::<Vec<_>>(),
        ) / self.mass()
    }

    /// Largest pointwise deviation from `other`, relative to `other`'s maximum.
    pub fn max_relative_deviation(&self, other: &DensityField) -> f64 {
        let scale = other.values.iter().cloned().fold(0.0, f64::max);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale
    }

    /// `int |rho - other| dr`.
    pub fn l1_distance(&self, other: &DensityField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.spacing()
    }

    /// Columns `r, rho`.
    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["r", "rho"]);
        t.meta("time", fmt_f64(self.time))
            .meta("periodic", self.grid.periodic());
        for (r, v) in self.grid.positions().into_iter().zip(&self.values) {
            t.push(vec![r, *v]);
        }
        t
    }
}

/// Phase-space density `f(p, r)` in one spatial dimension.
///
/// Momentum cells are centred at `p_j = -p_max + (j + 1/2) dp`; storage is
/// momentum-fastest, `values[i * np + j]` for space index `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceField {
    pub space: SpaceGrid,
    pub p_max: f64,
    pub np: usize,
    pub values: Vec<f64>,
    pub time: f64,
}

impl PhaseSpaceField {
    pub fn new(space: SpaceGrid, p_max: f64, np: usize, values: Vec<f64>, time: f64) -> Result<Self> {
        if !(p_max.is_finite() && p_max > 0.0) {
            return Err(invalid("p_max", "must be finite and > 0"));
        }
        if np < 4 {
            return Err(invalid("np", format!("need at least 4 momentum cells, got {np}")));
        }
        if values.len() != space.len() * np {
            return Err(invalid(
                "values",
                format!("expected {} samples, got {}", space.len() * np, values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "phase-space density must be finite"));
        }
        Ok(PhaseSpaceField {
            space,
            p_max,
            np,
            values,
            time,
        })
    }

    pub fn from_fn(
        space: SpaceGrid,
        p_max: f64,
        np: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let dp = 2.0 * p_max / np as f64;
        let mut values = Vec::with_capacity(space.len() * np);
        for r in space.positions() {
            for j in 0..np {
                let p = -p_max + (j as f64 + 0.5) * dp;
                values.push(f(p, r));
            }
        }
        let mut field = Self::new(space, p_max, np, values, 0.0)?;
        let mass = field.mass();
        if !(mass.is_finite() && mass > 0.0) {
            return Err(invalid("values", "phase-space density has no positive mass"));
        }
        field.values.iter_mut().for_each(|v| *v /= mass);
        Ok(field)
    }

    /// Normalized `exp(-p^2 / 2mT) exp(-U / T)`.
    pub fn maxwell_boltzmann(
        space: SpaceGrid,
        p_max: f64,
        np: usize,
        potential: &Potential,
        mass: f64,
        temperature: f64,
    ) -> Result<Self> {
        let u_min = space
            .positions()
            .iter()
            .map(|&r| potential.value(r))
            .fold(f64::INFINITY, f64::min);
        Self::from_fn(space, p_max, np, |p, r| {
            (-p * p / (2.0 * mass * temperature)).exp()
                * (-(potential.value(r) - u_min) / temperature).exp()
        })
    }

    pub fn dp(&self) -> f64 {
        2.0 * self.p_max / self.np as f64
    }

    pub fn momentum(&self, j: usize) -> f64 {
        -self.p_max + (j as f64 + 0.5) * self.dp()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.np).map(|j| self.momentum(j)).collect()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.np + j]
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dp() * self.space.spacing()
    }

    /// `rho(r) = int f dp`.
    pub fn marginal(&self) -> DensityField {
        let dp = self.dp();
        let values = self
            .values
            .chunks(self.np)
            .map(|col| col.iter().sum::<f64>() * dp)
            .collect();
        DensityField {
            grid: self.space,
            values,
            time: self.time,
        }
    }

    /// Momentum moment `<p^k>` of the whole field.
    pub fn momentum_moment(&self, k: i32) -> f64 {
        let p = self.momenta();
        let total: f64 = self.values.iter().sum();
        self.values
            .chunks(self.np)
            .map(|col| col.iter().zip(&p).map(|(f, p)| f * p.powi(k)).sum::<f64>())
            .sum::<f64>()
            / total
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Long format, columns `r, p, f`.
    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["r", "p", "f"]);
        t.meta("time", fmt_f64(self.time))
            .meta("periodic", self.space.periodic())
            .meta("p_max", fmt_f64(self.p_max))
            .meta("np", self.np);
        let p = self.momenta();
        for (r, col) in self.space.positions().into_iter().zip(self.values.chunks(self.np)) {
            for (p, f) in p.iter().zip(col) {
                t.push(vec![r, *p, *f]);
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boltzmann_is_normalized() {
        let g = SpaceGrid::new(10.0, 101, false).unwrap();
        let rho = DensityField::boltzmann(g, &Potential::harmonic(1.0), 0.5).unwrap();
        assert!((rho.mass() - 1.0).abs() < 1e-14);
        assert!((rho.variance() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn maxwell_boltzmann_moments() {
        let g = SpaceGrid::new(12.0, 64, false).unwrap();
        let f = PhaseSpaceField::maxwell_boltzmann(g, 8.0, 64, &Potential::harmonic(1.0), 1.0, 1.0)
            .unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-14);
        assert!((f.momentum_moment(2) - 1.0).abs() < 1e-10);
        assert!(f.momentum_moment(1).abs() < 1e-14);
        assert!((f.marginal().mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tables_round_trip_values() {
        let g = SpaceGrid::new(4.0, 8, true).unwrap();
        let rho = DensityField::gaussian(g, 0.3, 0.7).unwrap();
        let back = CsvTable::parse(&rho.to_table().to_string_lossy()).unwrap();
        assert_eq!(back.column("rho").unwrap(), rho.values);
        let f = PhaseSpaceField::maxwell_boltzmann(g, 6.0, 6, &Potential::Free, 1.0, 1.0).unwrap();
        let back = CsvTable::parse(&f.to_table().to_string_lossy()).unwrap();
        assert_eq!(back.column("f").unwrap(), f.values);
        assert_eq!(back.rows.len(), 48);
    }
}
