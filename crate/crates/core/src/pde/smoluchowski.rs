//! Conservative finite-volume solver for `m gamma^ d_t rho = d_r (rho U' + T^ d_r rho)`
//! and its Bohm-potential extension.
//!
//! The classical flux is the Scharfetter-Gummel flux
//! `J = (T / dr) [B(dpsi) rho_i - B(-dpsi) rho_{i+1}]`, `psi = U / T`,
//! `B(x) = x / (e^x - 1)`, which makes the sampled Boltzmann density an exact
//! discrete steady state. Bounded grids have zero-flux walls; periodic grids
//! wrap. Mass is conserved to rounding in both cases.

use serde::{Deserialize, Serialize};

use super::linalg::{solve_cyclic_tridiagonal, solve_tridiagonal, tridiagonal_apply};
use super::{bernoulli_fn, check_smoluchowski_lag, relative_change, History, Scheme, SolverManifest};
use crate::error::{invalid, Error, Result};
use crate::fields::DensityField;
use crate::grid::SpaceGrid;
use crate::operators::bohm_potential;
use crate::params::BathParams;
use crate::potential::Potential;

/// Values below this are treated as a loss of positivity.
const NEGATIVITY_TOLERANCE: f64 = -1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoluchowskiOptions {
    pub dt: f64,
    /// Integration stops after `round(t_end / dt)` steps.
    pub t_end: f64,
    pub scheme: Scheme,
    pub quantum_correction: bool,
    /// Store every `snapshot_every`-th level; 0 keeps only the first and last.
    pub snapshot_every: usize,
}

impl SmoluchowskiOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        SmoluchowskiOptions {
            dt,
            t_end,
            scheme: Scheme::BackwardEuler,
            quantum_correction: false,
            snapshot_every: 0,
        }
    }

    fn steps(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", "must be finite and > 0"));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(invalid("t_end", "must be finite and >= 0"));
        }
        Ok((self.t_end / self.dt).round() as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRun {
    pub snapshots: Vec<DensityField>,
    pub manifest: SolverManifest,
}

impl DensityRun {
    pub fn last(&self) -> &DensityField {
        self.snapshots.last().expect("a run stores at least one snapshot")
    }
}

/// Tridiagonal `L` with `d_t rho = L rho` for the classical flux.
struct Operator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    periodic: bool,
}

impl Operator {
    fn drift_diffusion(grid: &SpaceGrid, potential: &Potential, params: &BathParams) -> Self {
        let n = grid.len();
        let t = params.temperature();
        let psi: Vec<f64> = grid.positions().iter().map(|&r| potential.value(r) / t).collect();
        let scale = t / (params.mass() * params.gamma() * grid.spacing().powi(2));
        Self::from_faces(n, grid.periodic(), |i, j| {
            let dpsi = psi[j] - psi[i];
            (scale * bernoulli_fn(dpsi), scale * bernoulli_fn(-dpsi))
        })
    }

    fn laplacian(grid: &SpaceGrid) -> Self {
        let s = 1.0 / grid.spacing().powi(2);
        Self::from_faces(grid.len(), grid.periodic(), |_, _| (s, s))
    }

    /// `face(i, j)` gives `(alpha, beta)` of the face flux `alpha u_i - beta u_j` with `j = i + 1`.
    fn from_faces(n: usize, periodic: bool, face: impl Fn(usize, usize) -> (f64, f64)) -> Self {
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let faces = if periodic { n } else { n - 1 };
        for i in 0..faces {
            let j = (i + 1) % n;
            let (a, b) = face(i, j);
            // Flux out of i into j.
            diag[i] -= a;
            upper[i] += b;
            diag[j] -= b;
            lower[j] += a;
        }
        Operator {
            lower,
            diag,
            upper,
            periodic,
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        tridiagonal_apply(&self.lower, &self.diag, &self.upper, x, self.periodic)
    }

    /// Solves `(I - c L) x = rhs` in place.
    fn solve_shifted(&self, c: f64, rhs: &mut [f64]) {
        let lower: Vec<f64> = self.lower.iter().map(|v| -c * v).collect();
        let upper: Vec<f64> = self.upper.iter().map(|v| -c * v).collect();
        let diag: Vec<f64> = self.diag.iter().map(|v| 1.0 - c * v).collect();
        if self.periodic {
            solve_cyclic_tridiagonal(&lower, &diag, &upper, rhs);
        } else {
            solve_tridiagonal(&lower, &diag, &upper, rhs);
        }
    }

    fn max_rate(&self) -> f64 {
        self.diag.iter().fold(0.0_f64, |a, d| a.max(d.abs()))
    }
}

/// Divergence `d_r (rho d_r Q)` of the Bohm drift with face densities
/// `(rho_i + rho_{i+1}) / 2` and zero flux through walls.
pub fn bohm_divergence(rho: &DensityField, params: &BathParams) -> Result<Vec<f64>> {
    let q = bohm_potential(rho, params)?.values;
    let grid = rho.grid;
    let n = grid.len();
    let h = grid.spacing();
    let faces = if grid.periodic() { n } else { n - 1 };
    let mut div = vec![0.0; n];
    for i in 0..faces {
        let j = (i + 1) % n;
        let flux = 0.5 * (rho.values[i] + rho.values[j]) * (q[j] - q[i]) / h;
        div[i] += flux / h;
        div[j] -= flux / h;
    }
    Ok(div)
}

fn validate_initial(rho0: &DensityField, potential: &Potential) -> Result<()> {
    potential.validate()?;
    if rho0.values.iter().any(|&v| v < 0.0) {
        return Err(invalid("rho0", "density must be non-negative"));
    }
    if !(rho0.mass() > 0.0) {
        return Err(invalid("rho0", "density must carry positive mass"));
    }
    Ok(())
}

fn march(
    rho0: &DensityField,
    potential: &Potential,
    params: &BathParams,
    options: &SmoluchowskiOptions,
    bohm: bool,
) -> Result<DensityRun> {
    validate_initial(rho0, potential)?;
    let steps = options.steps()?;
    let dt = options.dt;
    let grid = rho0.grid;
    let op = Operator::drift_diffusion(&grid, potential, params);
    let theta = options.scheme.theta();
    if options.scheme == Scheme::CrankNicolson && dt * op.max_rate() > 2.0 {
        return Err(Error::StepSize {
            reason: format!(
                "Crank-Nicolson loses positivity for dt |L_ii| = {} > 2",
                dt * op.max_rate()
            ),
            suggested_dt: 2.0 / op.max_rate(),
        });
    }
    let lagged = options.quantum_correction && (params.hbar() > 0.0 || params.tau() > 0.0);
    if lagged {
        check_smoluchowski_lag(options.scheme, params, dt)?;
    }
    if bohm && params.hbar() > 0.0 {
        let limit = params.mass().powi(2) * params.gamma() * grid.spacing().powi(4)
            / (2.0 * params.hbar().powi(2));
        if dt > limit {
            return Err(Error::StepSize {
                reason: "explicit Bohm term exceeds its dr^4 stability bound".into(),
                suggested_dt: limit,
            });
        }
    }
    let lap = Operator::laplacian(&grid);
    let mg = params.mass() * params.gamma();
    let kappa = params.hbar().powi(2) / (12.0 * params.temperature());

    let mut rho = rho0.values.clone();
    let mut history = History::new(4);
    history.push(&rho);
    let mut snapshots = vec![DensityField {
        grid,
        values: rho.clone(),
        time: 0.0,
    }];
    let mut residual_history = Vec::with_capacity(steps);
    let mut min_value = rho.iter().cloned().fold(f64::INFINITY, f64::min);

    for n in 0..steps {
        let time = n as f64 * dt;
        let mut rhs = rho.clone();
        if theta < 1.0 {
            let lr = op.apply(&rho);
            rhs.iter_mut().zip(&lr).for_each(|(r, l)| *r += (1.0 - theta) * dt * l);
        }
        if lagged && history.full() {
            // S = -kappa Lap(d_t^2 rho) + m tau d_t^3 rho.
            let d2 = history.second_difference(dt, 0);
            let lap_d2 = lap.apply(&d2);
            let d3 = history.third_difference(dt);
            let tau = params.tau();
            for i in 0..rhs.len() {
                let source = -kappa * lap_d2[i] + params.mass() * tau * d3[i];
                rhs[i] += dt * source / mg;
            }
        }
        if bohm && params.hbar() > 0.0 {
            let field = DensityField {
                grid,
                values: rho.clone(),
                time,
            };
            let div = bohm_divergence(&field, params).map_err(|e| match e {
                Error::DegenerateDensity { cell, value, .. } => Error::SchemeFailure {
                    time,
                    reason: format!("density lost positivity at cell {cell}: {value}"),
                },
                other => other,
            })?;
            rhs.iter_mut().zip(&div).for_each(|(r, d)| *r += dt * d / mg);
        }
        op.solve_shifted(theta * dt, &mut rhs);
        let new_min = rhs.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(new_min >= NEGATIVITY_TOLERANCE) {
            return Err(Error::SchemeFailure {
                time: time + dt,
                reason: format!("density became negative: min = {new_min}"),
            });
        }
        min_value = min_value.min(new_min);
        residual_history.push(relative_change(&rhs, &rho));
        rho = rhs;
        history.push(&rho);
        let k = n + 1;
        if (options.snapshot_every > 0 && k % options.snapshot_every == 0) || k == steps {
            snapshots.push(DensityField {
                grid,
                values: rho.clone(),
                time: k as f64 * dt,
            });
        }
    }
    let final_mass = grid.integrate(&rho);
    Ok(DensityRun {
        snapshots,
        manifest: SolverManifest {
            solver: if bohm { "smoluchowski_bohm" } else { "smoluchowski" }.into(),
            scheme: format!("{:?}", options.scheme),
            params: *params,
            space: grid,
            momentum: None,
            dt,
            steps,
            quantum_correction: options.quantum_correction,
            residual_history,
            initial_mass: rho0.mass(),
            final_mass,
            min_value,
        },
    })
}

/// Integrates the Smoluchowski equation; with `options.quantum_correction`
/// the lagged temperature and radiation-friction corrections are added.
pub fn solve_smoluchowski(
    rho0: &DensityField,
    potential: &Potential,
    params: &BathParams,
    options: &SmoluchowskiOptions,
) -> Result<DensityRun> {
    march(rho0, potential, params, options, false)
}

/// Adds the Bohm drift `d_r (rho d_r Q)` explicitly, with `Q` recomputed every
/// step. Requires `rho0 > 0` and `dt <= m^2 gamma dr^4 / (2 hbar^2)`.
pub fn solve_smoluchowski_quantum(
    rho0: &DensityField,
    potential: &Potential,
    params: &BathParams,
    options: &SmoluchowskiOptions,
) -> Result<DensityRun> {
    if params.hbar() > 0.0 && rho0.values.iter().any(|&v| v <= 0.0) {
        return Err(invalid("rho0", "the Bohm potential needs a strictly positive density"));
    }
    march(rho0, potential, params, options, true)
}
