//! Hydrodynamic moments of a phase-space density and the residuals of the
//! continuity and force-balance equations they should satisfy.

use serde::{Deserialize, Serialize};

use super::kramers::SpatialWeights;
use crate::error::{invalid, Result};
use crate::fields::PhaseSpaceField;
use crate::grid::SpaceGrid;
use crate::params::BathParams;
use crate::potential::Potential;

/// Cells with `rho` below this floor report zero velocity.
const RHO_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentFields {
    pub grid: SpaceGrid,
    pub time: f64,
    /// `rho = int f dp`.
    pub density: Vec<f64>,
    /// `V = int p f dp / (m rho)`.
    pub velocity: Vec<f64>,
    /// `Pi = int p (p/m - V) f dp`.
    pub pressure: Vec<f64>,
}

pub fn extract_moments(f: &PhaseSpaceField, mass: f64) -> MomentFields {
    let p = f.momenta();
    let dp = f.dp();
    let mut density = Vec::with_capacity(f.space.len());
    let mut velocity = Vec::with_capacity(f.space.len());
    let mut pressure = Vec::with_capacity(f.space.len());
    for col in f.values.chunks(f.np) {
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (f, p) in col.iter().zip(&p) {
            m0 += f;
            m1 += f * p;
            m2 += f * p * p;
        }
        let (m0, m1, m2) = (m0 * dp, m1 * dp, m2 * dp);
        let v = if m0 > RHO_FLOOR { m1 / (mass * m0) } else { 0.0 };
        density.push(m0);
        velocity.push(v);
        pressure.push(m2 / mass - m1 * v);
    }
    MomentFields {
        grid: f.space,
        time: f.time,
        density,
        velocity,
        pressure,
    }
}

/// Central difference `(u_{i+1} - u_{i-1}) / 2h` on the cells where it exists.
fn central(u: &[f64], grid: &SpaceGrid) -> Vec<Option<f64>> {
    let n = u.len();
    let h = grid.spacing();
    (0..n)
        .map(|i| {
            if grid.periodic() {
                Some((u[(i + 1) % n] - u[(i + n - 1) % n]) / (2.0 * h))
            } else if i == 0 || i + 1 == n {
                None
            } else {
                Some((u[i + 1] - u[i - 1]) / (2.0 * h))
            }
        })
        .collect()
}

fn check_series(series: &[MomentFields]) -> Result<f64> {
    if series.len() < 3 {
        return Err(invalid("series", "need at least three time levels"));
    }
    let dt = series[1].time - series[0].time;
    for w in series.windows(2) {
        let step = w[1].time - w[0].time;
        if !(step > 0.0) || (step - dt).abs() > 1e-9 * dt {
            return Err(invalid("series", "time levels must be equally spaced and increasing"));
        }
        if w[1].grid != w[0].grid {
            return Err(invalid("series", "time levels use different grids"));
        }
    }
    Ok(dt)
}

/// Max-norm residual of `d_t rho + d_r (rho V) = 0` over interior time levels,
/// with centred differences in time and space.
pub fn residual_continuity(series: &[MomentFields]) -> Result<f64> {
    let dt = check_series(series)?;
    let mut worst = 0.0_f64;
    for k in 1..series.len() - 1 {
        let cur = &series[k];
        let flux: Vec<f64> = cur.density.iter().zip(&cur.velocity).map(|(r, v)| r * v).collect();
        let div = central(&flux, &cur.grid);
        for (i, d) in div.iter().enumerate() {
            if let Some(d) = d {
                let rate = (series[k + 1].density[i] - series[k - 1].density[i]) / (2.0 * dt);
                worst = worst.max((rate + d).abs());
            }
        }
    }
    Ok(worst)
}

/// Max-norm residual of
/// `m rho (d_t V + V d_r V) + m gamma rho V + rho d_r U + d_r Pi = 0`.
///
/// `d_r U` is the well-balanced force of the Klein-Kramers solver, and
/// `d_r Pi` is split as `(Pi / a) d_r a + a d_r (Pi / a)` with the same face
/// difference for `d_r a`, so a discrete equilibrium leaves only rounding.
pub fn residual_force_balance(
    series: &[MomentFields],
    potential: &Potential,
    params: &BathParams,
) -> Result<f64> {
    let dt = check_series(series)?;
    let grid = series[0].grid;
    let (m, gamma, beta) = (params.mass(), params.gamma(), params.beta());
    let w = SpatialWeights::new(&grid, potential, beta)?;
    let n = grid.len();
    let mut worst = 0.0_f64;
    for k in 1..series.len() - 1 {
        let cur = &series[k];
        let reduced: Vec<f64> = cur.pressure.iter().zip(&w.a).map(|(p, a)| p / a).collect();
        let dv = central(&cur.velocity, &grid);
        let dreduced = central(&reduced, &grid);
        for i in 0..n {
            if let (Some(dv), Some(dr)) = (dv[i], dreduced[i]) {
                let rho = cur.density[i];
                let v = cur.velocity[i];
                let vt = (series[k + 1].velocity[i] - series[k - 1].velocity[i]) / (2.0 * dt);
                let dpi = -beta * cur.pressure[i] * w.force[i] + w.a[i] * dr;
                let r = m * rho * (vt + v * dv) + m * gamma * rho * v + rho * w.force[i] + dpi;
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}
