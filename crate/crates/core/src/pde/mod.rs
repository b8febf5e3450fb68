//! Grid solvers for the Klein-Kramers and Smoluchowski equations, moment
//! extraction, and the per-mode characteristic roots of the semiclassical
//! Smoluchowski equation.
//!
//! Quantum corrections enter through the semiclassical truncations
//! `T^ ~ T (1 - (beta hbar)^2 d_t^2 / 12)` and `gamma^ ~ gamma - tau d_t^2`.
//! Time derivatives inside the corrections are estimated from the last three
//! (or four) stored time levels and applied as an explicit source. Every
//! correction vanishes identically on a stationary state, so equilibria of the
//! classical schemes remain equilibria with corrections on.
//!
//! The explicit lag is stable only while `dt` is not too small against `beta hbar`
//! and `sqrt(tau / gamma)`; the bounds are enforced with
//! [`Error::StepTooSmall`](crate::Error::StepTooSmall).

mod kramers;
mod linalg;
mod modes;
mod moments;
mod smoluchowski;

pub use kramers::{solve_kramers, KramersOptions, PhaseSpaceRun};
pub use linalg::{solve_cyclic_tridiagonal, solve_tridiagonal, tridiagonal_apply};
pub use modes::{free_mode_evolution, FreeModeRoots, ModeOrder};
pub use moments::{extract_moments, residual_continuity, residual_force_balance, MomentFields};
pub use smoluchowski::{
    bohm_divergence, solve_smoluchowski, solve_smoluchowski_quantum, DensityRun,
    SmoluchowskiOptions,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpaceGrid;
use crate::params::BathParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    BackwardEuler,
    CrankNicolson,
}

impl Scheme {
    fn theta(self) -> f64 {
        match self {
            Scheme::BackwardEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        }
    }

    /// Admissible `(beta hbar / dt, tau / (gamma dt^2))` for the lagged corrections.
    fn lag_limits(self) -> (f64, f64) {
        match self {
            Scheme::BackwardEuler => (1.5, 0.4),
            Scheme::CrankNicolson => (1.0, 0.3),
        }
    }
}

/// Run record: scheme, grids, flags and per-step change history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverManifest {
    pub solver: String,
    pub scheme: String,
    pub params: BathParams,
    pub space: SpaceGrid,
    /// `(p_max, np)` for phase-space solvers.
    pub momentum: Option<(f64, usize)>,
    pub dt: f64,
    pub steps: usize,
    pub quantum_correction: bool,
    /// `max |u^{n+1} - u^n| / max |u^n|` for every step.
    pub residual_history: Vec<f64>,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub min_value: f64,
}

/// `x / (e^x - 1)`.
pub(crate) fn bernoulli_fn(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        1.0 - x / 2.0 + x2 / 12.0 - x2 * x2 / 720.0
    } else {
        x / x.exp_m1()
    }
}

pub(crate) fn check_smoluchowski_lag(scheme: Scheme, params: &BathParams, dt: f64) -> Result<()> {
    let (r_max, c_max) = scheme.lag_limits();
    let bh = params.beta() * params.hbar();
    let tau = params.tau();
    if bh <= r_max * dt && tau <= c_max * params.gamma() * dt * dt {
        return Ok(());
    }
    let suggested_dt = (bh / r_max).max((tau / (c_max * params.gamma())).sqrt());
    Err(Error::StepTooSmall {
        reason: format!(
            "lagged quantum correction unstable: beta hbar / dt = {} (limit {r_max}), \
             tau / (gamma dt^2) = {} (limit {c_max})",
            bh / dt,
            tau / (params.gamma() * dt * dt)
        ),
        suggested_dt,
    })
}

pub(crate) fn check_kramers_lag(params: &BathParams, dt: f64) -> Result<()> {
    let bh = params.beta() * params.hbar();
    let load = (bh / dt).powi(2) + 12.0 * params.tau() / (params.gamma() * dt * dt);
    if load <= 3.0 {
        return Ok(());
    }
    Err(Error::StepTooSmall {
        reason: format!(
            "lagged quantum correction unstable: (beta hbar/dt)^2 + 12 tau/(gamma dt^2) = {load} exceeds 3"
        ),
        suggested_dt: ((bh * bh + 12.0 * params.tau() / params.gamma()) / 3.0).sqrt(),
    })
}

/// Sliding window of the most recent time levels, newest last.
#[derive(Debug, Clone)]
pub(crate) struct History {
    levels: Vec<Vec<f64>>,
    depth: usize,
}

impl History {
    pub(crate) fn new(depth: usize) -> Self {
        History {
            levels: Vec::with_capacity(depth),
            depth,
        }
    }

    pub(crate) fn push(&mut self, level: &[f64]) {
        if self.levels.len() == self.depth {
            self.levels.remove(0);
        }
        self.levels.push(level.to_vec());
    }

    pub(crate) fn full(&self) -> bool {
        self.levels.len() == self.depth
    }

    /// Backward second difference of the newest three levels over `dt^2`.
    pub(crate) fn second_difference(&self, dt: f64, offset: usize) -> Vec<f64> {
        let k = self.levels.len() - offset;
        let (a, b, c) = (&self.levels[k - 1], &self.levels[k - 2], &self.levels[k - 3]);
        let s = 1.0 / (dt * dt);
        a.iter()
            .zip(b)
            .zip(c)
            .map(|((a, b), c)| (a - 2.0 * b + c) * s)
            .collect()
    }

    /// Backward second difference of `(u^k - u^{k-1}) / dt` over the newest four levels.
    pub(crate) fn third_difference(&self, dt: f64) -> Vec<f64> {
        let newer = self.second_difference(dt, 0);
        let older = self.second_difference(dt, 1);
        newer.iter().zip(&older).map(|(a, b)| (a - b) / dt).collect()
    }
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let scale = old.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    new.iter()
        .zip(old)
        .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()))
        / scale
}
