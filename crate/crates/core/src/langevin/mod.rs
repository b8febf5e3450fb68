//! Time-domain integration of `m R'' + m gamma R' = -grad U + F` with a
//! pre-synthesized colored force.
//!
//! The force is an exogenous forcing sampled on the time grid, so a plain
//! second-order Heun step applies; no white-noise stochastic calculus is
//! assumed. The radiation-reaction term (`tau`) is not integrated here: its
//! third-derivative dynamics has runaway solutions. It enters only the
//! spectral and PDE analyses.
//!
//! In `d` dimensions the potential is a separable sum and each Cartesian
//! component evolves independently under its own force component.

mod ensemble;

pub use ensemble::{
    momentum_dispersion_empirical, run_ensemble, EnsembleOptions, EnsembleStats, Histogram,
    HistogramSpec, InitialState, ObservableStats,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::io::CsvTable;
use crate::noise::NoiseTrajectory;
use crate::params::BathParams;
use crate::potential::Potential;

/// Largest admissible `gamma dt`.
pub const MAX_GAMMA_DT: f64 = 0.1;
/// Largest admissible `omega_max dt` for the fastest potential frequency.
pub const MAX_OMEGA_DT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: TimeGrid,
    /// `positions[c][i]` is component `c` at time index `i`.
    pub positions: Vec<Vec<f64>>,
    pub momenta: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn components(&self) -> usize {
        self.positions.len()
    }

    pub fn to_table(&self) -> CsvTable {
        let d = self.components();
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=d).map(|c| format!("R_{c}")));
        cols.extend((1..=d).map(|c| format!("P_{c}")));
        let mut t = CsvTable::new(cols);
        t.meta("dt", crate::io::fmt_f64(self.grid.dt()));
        for i in 0..self.grid.len() {
            let mut row = vec![self.grid.time(i)];
            row.extend(self.positions.iter().map(|s| s[i]));
            row.extend(self.momenta.iter().map(|s| s[i]));
            t.push(row);
        }
        t
    }
}

/// Heun predictor-corrector for one Cartesian component. Accepts `gamma = 0`.
#[derive(Debug, Clone)]
pub struct HeunIntegrator {
    potential: Potential,
    mass: f64,
    gamma: f64,
}

impl HeunIntegrator {
    pub fn new(potential: Potential, mass: f64, gamma: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(invalid("mass", "must be finite and > 0"));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(invalid("gamma", "must be finite and >= 0"));
        }
        potential.validate()?;
        Ok(HeunIntegrator {
            potential,
            mass,
            gamma,
        })
    }

    fn rhs(&self, r: f64, p: f64, f: f64) -> (f64, f64) {
        (p / self.mass, -self.potential.gradient(r) - self.gamma * p + f)
    }

    /// One step from `(r, p)` with forcing `f0` at the start and `f1` at the end.
    pub fn step(&self, r: f64, p: f64, f0: f64, f1: f64, dt: f64) -> (f64, f64) {
        let (dr0, dp0) = self.rhs(r, p, f0);
        let (rp, pp) = (r + dt * dr0, p + dt * dp0);
        let (dr1, dp1) = self.rhs(rp, pp, f1);
        (r + 0.5 * dt * (dr0 + dr1), p + 0.5 * dt * (dp0 + dp1))
    }

    /// Integrates over `forcing.len()` grid points starting from `(r0, p0)`.
    pub fn run(&self, dt: f64, forcing: &[f64], r0: f64, p0: f64) -> (Vec<f64>, Vec<f64>) {
        let n = forcing.len();
        let mut rs = Vec::with_capacity(n);
        let mut ps = Vec::with_capacity(n);
        let (mut r, mut p) = (r0, p0);
        rs.push(r);
        ps.push(p);
        for i in 1..n {
            (r, p) = self.step(r, p, forcing[i - 1], forcing[i], dt);
            rs.push(r);
            ps.push(p);
        }
        (rs, ps)
    }
}

/// Spatial range the particle can reach, used to bound the potential curvature.
fn motion_extent(potential: &Potential, temperature: f64, r0: &[f64]) -> f64 {
    let start = r0.iter().fold(0.0_f64, |a, r| a.max(r.abs()));
    match potential {
        Potential::DoubleWell { quartic, quadratic } => {
            let well = (quadratic.max(0.0) / (2.0 * quartic)).sqrt();
            start.max(well + (10.0 * temperature / quartic).powf(0.25))
        }
        _ => start,
    }
}

/// Checks the step-size bounds `gamma dt < 0.1` and `omega_max dt <= 0.2`.
pub fn check_step(potential: &Potential, params: &BathParams, dt: f64, r0: &[f64]) -> Result<()> {
    if params.gamma() * dt >= MAX_GAMMA_DT {
        return Err(Error::StepSize {
            reason: format!("gamma dt = {} must be below {MAX_GAMMA_DT}", params.gamma() * dt),
            suggested_dt: 0.5 * MAX_GAMMA_DT / params.gamma(),
        });
    }
    let extent = motion_extent(potential, params.temperature(), r0);
    if let Some(k) = potential.max_curvature(extent) {
        let omega = (k / params.mass()).sqrt();
        if omega * dt > MAX_OMEGA_DT {
            return Err(Error::StepSize {
                reason: format!(
                    "potential frequency {omega} is under-resolved: omega dt = {}",
                    omega * dt
                ),
                suggested_dt: MAX_OMEGA_DT / omega,
            });
        }
    }
    Ok(())
}

/// Integrates the Langevin equation driven by `noise` from `initial = (R0, P0)`.
pub fn integrate(
    potential: &Potential,
    params: &BathParams,
    grid: TimeGrid,
    noise: &NoiseTrajectory,
    initial: (&[f64], &[f64]),
) -> Result<Trajectory> {
    let (r0, p0) = initial;
    if noise.grid != grid {
        return Err(Error::Argument(
            "noise grid must equal the integration grid".into(),
        ));
    }
    let d = noise.components();
    if r0.len() != d || p0.len() != d {
        return Err(Error::Argument(format!(
            "initial state must have {d} components to match the noise"
        )));
    }
    check_step(potential, params, grid.dt(), r0)?;
    let heun = HeunIntegrator::new(potential.clone(), params.mass(), params.gamma())?;
    let (positions, momenta) = (0..d)
        .map(|c| heun.run(grid.dt(), &noise.samples[c], r0[c], p0[c]))
        .unzip();
    Ok(Trajectory {
        grid,
        positions,
        momenta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::sample_noise;

    fn silent(grid: TimeGrid, d: usize, value: f64) -> NoiseTrajectory {
        let p = BathParams::classical(1.0, 1.0, 1.0).unwrap();
        let mut n = sample_noise(grid, p, 0.0, 0, d).unwrap();
        n.samples.iter_mut().flatten().for_each(|x| *x = value);
        n
    }

    #[test]
    fn damped_free_motion() {
        let params = BathParams::classical(2.0, 0.5, 1.0).unwrap();
        let dt = 0.001;
        let n = (5.0 / params.gamma() / dt) as usize;
        let grid = TimeGrid::new(0.0, dt, n + 1 + (n + 1) % 2).unwrap();
        let traj = integrate(&Potential::Free, &params, grid, &silent(grid, 1, 0.0), (&[0.0], &[3.0]))
            .unwrap();
        let t = grid.time(n);
        let expected = 3.0 * (-params.gamma() * t).exp();
        assert!((traj.momenta[0][n] - expected).abs() / expected < 1e-6);
    }

    #[test]
    fn harmonic_energy_conserved_without_friction() {
        let heun = HeunIntegrator::new(Potential::harmonic(1.0), 1.0, 0.0).unwrap();
        let dt = 1e-3;
        let steps = (100.0 * 2.0 * std::f64::consts::PI / dt) as usize;
        let (rs, ps) = heun.run(dt, &vec![0.0; steps + 1], 1.0, 0.0);
        let e0 = 0.5;
        let e1 = 0.5 * ps[steps].powi(2) + 0.5 * rs[steps].powi(2);
        assert!((e1 - e0).abs() / e0 < 1e-6, "{e1}");
    }

    #[test]
    fn constant_force_terminal_momentum() {
        let params = BathParams::classical(1.0, 2.0, 1.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.01, 2000).unwrap();
        let traj = integrate(&Potential::Free, &params, grid, &silent(grid, 2, 0.7), (&[0.0, 0.0], &[0.0, 0.0]))
            .unwrap();
        for c in 0..2 {
            assert!((traj.momenta[c][1999] - 0.35).abs() / 0.35 < 1e-6);
        }
    }

    #[test]
    fn second_order_convergence() {
        // Smooth forcing cos(t) in a harmonic well; reference at dt / 8.
        let heun = HeunIntegrator::new(Potential::harmonic(2.0), 1.0, 0.3).unwrap();
        let t_end = 4.0;
        let run = |dt: f64| {
            let n = (t_end / dt).round() as usize;
            let f: Vec<f64> = (0..=n).map(|i| (i as f64 * dt).cos()).collect();
            let (r, _) = heun.run(dt, &f, 0.5, 0.0);
            r[n]
        };
        let dt = 0.02;
        let reference = run(dt / 8.0);
        let e1 = (run(dt) - reference).abs();
        let e2 = (run(dt / 2.0) - reference).abs();
        let ratio = e1 / e2;
        assert!((3.3..4.9).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn step_bounds_are_enforced() {
        let params = BathParams::classical(1.0, 2.0, 1.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.06, 16).unwrap();
        match integrate(&Potential::Free, &params, grid, &silent(grid, 1, 0.0), (&[0.0], &[0.0])) {
            Err(Error::StepSize { suggested_dt, .. }) => assert!(suggested_dt * 2.0 < 0.1),
            other => panic!("{other:?}"),
        }
        let grid = TimeGrid::new(0.0, 0.01, 16).unwrap();
        let stiff = Potential::harmonic(1e4);
        assert!(matches!(
            integrate(&stiff, &params, grid, &silent(grid, 1, 0.0), (&[0.0], &[0.0])),
            Err(Error::StepSize { .. })
        ));
    }

    #[test]
    fn mismatched_noise_is_rejected() {
        let params = BathParams::classical(1.0, 1.0, 1.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.01, 16).unwrap();
        let other = TimeGrid::new(0.0, 0.01, 32).unwrap();
        assert!(integrate(&Potential::Free, &params, grid, &silent(other, 1, 0.0), (&[0.0], &[0.0])).is_err());
        assert!(integrate(&Potential::Free, &params, grid, &silent(grid, 2, 0.0), (&[0.0], &[0.0])).is_err());
    }

    #[test]
    fn deterministic() {
        let params = BathParams::new(1.0, 1.0, 0.0, 1.0, 1.0, 2).unwrap();
        let grid = TimeGrid::new(0.0, 0.01, 512).unwrap();
        let noise = sample_noise(grid, params, 50.0, 8, 2).unwrap();
        let a = integrate(&Potential::harmonic(1.0), &params, grid, &noise, (&[0.1, 0.2], &[0.0, 0.0])).unwrap();
        let b = integrate(&Potential::harmonic(1.0), &params, grid, &noise, (&[0.1, 0.2], &[0.0, 0.0])).unwrap();
        assert_eq!(a, b);
    }
}
