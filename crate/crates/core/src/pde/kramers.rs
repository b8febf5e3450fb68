//! Klein-Kramers solver for `d_t f + (p/m) d_r f - U' d_p f = gamma^ d_p (p f + m T^ d_p f)`
//! on a 1D x 1D phase-space grid.
//!
//! Strang splitting: half a collision step, a full transport step, half a
//! collision step.
//!
//! Transport is well balanced. With the weights `a(r) = exp(-beta (U - U_min))`
//! and `b(p) = exp(-beta p^2 / 2m)` sampled at cells and at faces, the
//! discrete velocity and force are
//! `v_j = -(b_{j+1/2} - b_{j-1/2}) / (beta dp b_j)` and
//! `G_i = -(a_{i+1/2} - a_{i-1/2}) / (beta dr a_i)`. Fluxes are
//! `v_j a_face (f/a)_face` in `r` and `-G_i b_face (f/b)_face` in `p`, with
//! MUSCL-minmod reconstruction of the ratios. This makes `a_i b_j` an exact
//! discrete steady state. Time stepping is SSP-RK2 under
//! `dt (max|v| rho_a / dr + max|G| rho_b / dp) <= 0.5`, where `rho_a`, `rho_b`
//! are the largest face-to-cell weight ratios.
//!
//! Collision uses the Scharfetter-Gummel flux in `p` with `psi = p^2 / 2mT`
//! and backward Euler, one tridiagonal solve per spatial column. Momentum
//! walls at `+-p_max` and bounded spatial walls carry zero flux.

use serde::{Deserialize, Serialize};

use super::linalg::{solve_tridiagonal, tridiagonal_apply};
use super::{bernoulli_fn, check_kramers_lag, relative_change, History, SolverManifest};
use crate::error::{invalid, Error, Result};
use crate::fields::PhaseSpaceField;
use crate::grid::SpaceGrid;
use crate::params::BathParams;
use crate::potential::Potential;

/// Largest admissible transport CFL number.
pub const MAX_CFL: f64 = 0.5;
/// Largest admissible `beta (U_max - U_min)` and `beta p_max^2 / 2m`.
const MAX_WEIGHT_EXPONENT: f64 = 600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KramersOptions {
    /// `None` picks the largest step with CFL number 0.4 that divides `t_end`.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub quantum_correction: bool,
    /// Store every `snapshot_every`-th level; 0 keeps only the first and last.
    pub snapshot_every: usize,
}

impl KramersOptions {
    pub fn new(t_end: f64) -> Self {
        KramersOptions {
            dt: None,
            t_end,
            quantum_correction: false,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceRun {
    pub snapshots: Vec<PhaseSpaceField>,
    pub manifest: SolverManifest,
    pub cfl: f64,
}

impl PhaseSpaceRun {
    pub fn last(&self) -> &PhaseSpaceField {
        self.snapshots.last().expect("a run stores at least one snapshot")
    }
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// One-dimensional flux-form advection data along a line of `n` cells.
struct Line {
    /// Equilibrium weight per cell.
    w: Vec<f64>,
    /// Weight on face `k + 1/2`; the last face is a wall unless periodic.
    w_face: Vec<f64>,
    periodic: bool,
}

impl Line {

    fn faces(&self) -> usize {
        if self.periodic {
            self.w.len()
        } else {
            self.w.len() - 1
        }
    }

    /// Largest `w_face / w_cell` over both neighbours of every face.
    fn max_ratio(&self) -> f64 {
        let n = self.w.len();
        (0..self.faces())
            .map(|k| {
                let f = self.w_face[k];
                (f / self.w[k]).max(f / self.w[(k + 1) % n])
            })
            .fold(1.0, f64::max)
    }

    /// Adds `-(F_{k+1/2} - F_{k-1/2}) / h` for speed `c` along the line of
    /// values `u` (read with stride) into `out`.
    fn divergence(&self, c: f64, h: f64, u: &dyn Fn(usize) -> f64, out: &mut dyn FnMut(usize, f64)) {
        let n = self.w.len();
        let g = |k: isize| -> Option<f64> {
            if self.periodic {
                let k = k.rem_euclid(n as isize) as usize;
                Some(u(k) / self.w[k])
            } else if k < 0 || k >= n as isize {
                None
            } else {
                Some(u(k as usize) / self.w[k as usize])
            }
        };
        let slope = |k: isize| -> f64 {
            match (g(k - 1), g(k), g(k + 1)) {
                (Some(l), Some(m), Some(r)) => minmod(m - l, r - m),
                _ => 0.0,
            }
        };
        for k in 0..self.faces() {
            let (lo, hi) = (k as isize, k as isize + 1);
            let g_face = if c >= 0.0 {
                g(lo).expect("face has cells") + 0.5 * slope(lo)
            } else {
                g(hi).expect("face has cells") - 0.5 * slope(hi)
            };
            let flux = c * self.w_face[k] * g_face / h;
            out(k, -flux);
            out((k + 1) % n, flux);
        }
    }
}

/// Equilibrium weights in `r` and the well-balanced discrete force.
pub(crate) struct SpatialWeights {
    pub(crate) a: Vec<f64>,
    /// Face `i + 1/2` for every cell; the last one is the right wall unless periodic.
    pub(crate) a_face: Vec<f64>,
    pub(crate) force: Vec<f64>,
}

impl SpatialWeights {
    pub(crate) fn new(space: &SpaceGrid, potential: &Potential, beta: f64) -> Result<Self> {
        let h = space.spacing();
        let positions = space.positions();
        let u: Vec<f64> = positions.iter().map(|&r| potential.value(r)).collect();
        let u_face: Vec<f64> = positions.iter().map(|&r| potential.value(r + 0.5 * h)).collect();
        let u_left = if space.periodic() {
            u_face[u.len() - 1]
        } else {
            potential.value(positions[0] - 0.5 * h)
        };
        let all = u.iter().chain(&u_face).chain(std::iter::once(&u_left));
        let u_min = all.clone().cloned().fold(f64::INFINITY, f64::min);
        let u_max = all.cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(beta * (u_max - u_min) <= MAX_WEIGHT_EXPONENT) {
            return Err(invalid("space", "potential range too large for the equilibrium weights"));
        }
        let w = |v: f64| (-beta * (v - u_min)).exp();
        let a: Vec<f64> = u.iter().map(|&v| w(v)).collect();
        let a_face: Vec<f64> = u_face.iter().map(|&v| w(v)).collect();
        let a_left = w(u_left);
        let force = (0..a.len())
            .map(|i| {
                let left = if i == 0 { a_left } else { a_face[i - 1] };
                -(a_face[i] - left) / (beta * h * a[i])
            })
            .collect();
        Ok(SpatialWeights { a, a_face, force })
    }
}

struct Transport {
    nr: usize,
    np: usize,
    dr: f64,
    dp: f64,
    r_line: Line,
    p_line: Line,
    velocity: Vec<f64>,
    force: Vec<f64>,
}

impl Transport {
    fn rhs(&self, f: &[f64]) -> Vec<f64> {
        let (nr, np) = (self.nr, self.np);
        let mut out = vec![0.0; f.len()];
        for j in 0..np {
            let b = self.p_line.w[j];
            self.r_line.divergence(
                self.velocity[j],
                self.dr,
                &|i| f[i * np + j] / b,
                &mut |i, d| out[i * np + j] += d * b,
            );
        }
        for i in 0..nr {
            let a = self.r_line.w[i];
            let row = &f[i * np..(i + 1) * np];
            let dst = &mut out[i * np..(i + 1) * np];
            self.p_line
                .divergence(-self.force[i], self.dp, &|j| row[j] / a, &mut |j, d| dst[j] += d * a);
        }
        out
    }

    fn cfl(&self, dt: f64) -> f64 {
        let vmax = self.velocity.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let gmax = self.force.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        dt * (vmax * self.r_line.max_ratio() / self.dr + gmax * self.p_line.max_ratio() / self.dp)
    }

    /// SSP-RK2.
    fn step(&self, f: &[f64], dt: f64) -> Vec<f64> {
        let k1 = self.rhs(f);
        let f1: Vec<f64> = f.iter().zip(&k1).map(|(u, k)| u + dt * k).collect();
        let k2 = self.rhs(&f1);
        f.iter()
            .zip(&f1)
            .zip(&k2)
            .map(|((u, v), k)| 0.5 * u + 0.5 * (v + dt * k))
            .collect()
    }
}

/// Tridiagonal collision operator in `p`, identical for every column.
struct Collision {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Collision {
    fn new(momenta: &[f64], dp: f64, params: &BathParams) -> Self {
        let np = momenta.len();
        let mt = params.mass() * params.temperature();
        let scale = params.gamma() * mt / (dp * dp);
        let mut lower = vec![0.0; np];
        let mut diag = vec![0.0; np];
        let mut upper = vec![0.0; np];
        for j in 0..np - 1 {
            let dpsi = (momenta[j + 1].powi(2) - momenta[j].powi(2)) / (2.0 * mt);
            let (a, b) = (scale * bernoulli_fn(dpsi), scale * bernoulli_fn(-dpsi));
            diag[j] -= a;
            upper[j] += b;
            diag[j + 1] -= b;
            lower[j + 1] += a;
        }
        Collision { lower, diag, upper }
    }

    fn apply(&self, column: &[f64]) -> Vec<f64> {
        tridiagonal_apply(&self.lower, &self.diag, &self.upper, column, false)
    }

    /// Backward Euler over `dt` for every column, with explicit `source`.
    fn step(&self, f: &mut [f64], np: usize, dt: f64, source: Option<&[f64]>) {
        let lower: Vec<f64> = self.lower.iter().map(|v| -dt * v).collect();
        let upper: Vec<f64> = self.upper.iter().map(|v| -dt * v).collect();
        let diag: Vec<f64> = self.diag.iter().map(|v| 1.0 - dt * v).collect();
        for (i, column) in f.chunks_mut(np).enumerate() {
            if let Some(s) = source {
                column
                    .iter_mut()
                    .zip(&s[i * np..(i + 1) * np])
                    .for_each(|(c, s)| *c += dt * s);
            }
            solve_tridiagonal(&lower, &diag, &upper, column);
        }
    }
}

/// Zero-flux `d_p^2` along one column.
fn momentum_laplacian(column: &[f64], dp: f64) -> Vec<f64> {
    let n = column.len();
    let s = 1.0 / (dp * dp);
    (0..n)
        .map(|j| {
            let mut v = 0.0;
            if j > 0 {
                v += column[j - 1] - column[j];
            }
            if j + 1 < n {
                v += column[j + 1] - column[j];
            }
            v * s
        })
        .collect()
}

/// Integrates the Klein-Kramers equation from `f0` to `options.t_end`.
///
/// With `quantum_correction`, the source
/// `-gamma m kappa d_p^2 (d_t^2 f) - tau d_t^2 (d_p (p f + m T d_p f))`,
/// `kappa = hbar^2 / 12 T`, is added to both collision half steps, with
/// `d_t^2 f` from the last three full steps. The `tau` term applies the
/// lagged friction correction to the whole dissipative flux.
pub fn solve_kramers(
    f0: &PhaseSpaceField,
    potential: &Potential,
    params: &BathParams,
    options: &KramersOptions,
) -> Result<PhaseSpaceRun> {
    potential.validate()?;
    let (m, t) = (params.mass(), params.temperature());
    let beta = params.beta();
    if f0.p_max < 6.0 * (m * t).sqrt() {
        return Err(invalid(
            "p_max",
            format!("must be at least 6 sqrt(m T) = {}", 6.0 * (m * t).sqrt()),
        ));
    }
    if beta * f0.p_max * f0.p_max / (2.0 * m) > MAX_WEIGHT_EXPONENT {
        return Err(invalid("p_max", "momentum range too wide for the equilibrium weights"));
    }
    if f0.values.iter().any(|&v| v < 0.0) {
        return Err(invalid("f0", "phase-space density must be non-negative"));
    }
    if !(options.t_end.is_finite() && options.t_end >= 0.0) {
        return Err(invalid("t_end", "must be finite and >= 0"));
    }
    let space = f0.space;
    let (nr, np) = (space.len(), f0.np);
    let (dr, dp) = (space.spacing(), f0.dp());

    let weights = SpatialWeights::new(&space, potential, beta)?;
    let momenta = f0.momenta();
    let bw = |p: f64| (-beta * p * p / (2.0 * m)).exp();
    let b: Vec<f64> = momenta.iter().map(|&p| bw(p)).collect();
    let b_face: Vec<f64> = momenta.iter().map(|&p| bw(p + 0.5 * dp)).collect();
    let velocity = (0..np)
        .map(|j| {
            let left = bw(momenta[j] - 0.5 * dp);
            -(b_face[j] - left) / (beta * dp * b[j])
        })
        .collect();
    let transport = Transport {
        nr,
        np,
        dr,
        dp,
        r_line: Line {
            w: weights.a,
            w_face: weights.a_face,
            periodic: space.periodic(),
        },
        p_line: Line {
            w: b,
            w_face: b_face,
            periodic: false,
        },
        velocity,
        force: weights.force,
    };

    let unit_cfl = transport.cfl(1.0);
    let (dt, steps) = match options.dt {
        Some(dt) => {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(invalid("dt", "must be finite and > 0"));
            }
            (dt, (options.t_end / dt).round() as usize)
        }
        None => {
            let steps = (options.t_end * unit_cfl / 0.4).ceil().max(1.0) as usize;
            (options.t_end / steps as f64, steps)
        }
    };
    let cfl = dt * unit_cfl;
    if cfl > MAX_CFL {
        return Err(Error::StepSize {
            reason: format!("transport CFL number {cfl} exceeds {MAX_CFL}"),
            suggested_dt: MAX_CFL / unit_cfl,
        });
    }
    let lagged = options.quantum_correction && (params.hbar() > 0.0 || params.tau() > 0.0);
    if lagged {
        check_kramers_lag(params, dt)?;
    }
    let collision = Collision::new(&momenta, dp, params);
    let kappa = params.hbar().powi(2) / (12.0 * t);

    let mut f = f0.values.clone();
    let mut history = History::new(3);
    history.push(&f);
    let mut snapshots = vec![f0.clone()];
    let mut residual_history = Vec::with_capacity(steps);
    let mut min_value = f0.min_value();
    let snapshot = |values: &[f64], time: f64| PhaseSpaceField {
        space,
        p_max: f0.p_max,
        np,
        values: values.to_vec(),
        time,
    };

    for n in 0..steps {
        let source = (lagged && history.full()).then(|| {
            let d2 = history.second_difference(dt, 0);
            let mut s = Vec::with_capacity(d2.len());
            for column in d2.chunks(np) {
                let lap = momentum_laplacian(column, dp);
                let coll = collision.apply(column);
                s.extend(lap.iter().zip(&coll).map(|(l, c)| {
                    -params.gamma() * m * kappa * l - params.tau() / params.gamma() * c
                }));
            }
            s
        });
        let mut next = f.clone();
        collision.step(&mut next, np, 0.5 * dt, source.as_deref());
        next = transport.step(&next, dt);
        collision.step(&mut next, np, 0.5 * dt, source.as_deref());
        let time = (n + 1) as f64 * dt;
        let new_min = next.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(new_min >= -1e-12) {
            return Err(Error::SchemeFailure {
                time,
                reason: format!("phase-space density became negative: min = {new_min}"),
            });
        }
        min_value = min_value.min(new_min);
        residual_history.push(relative_change(&next, &f));
        f = next;
        history.push(&f);
        let k = n + 1;
        if (options.snapshot_every > 0 && k % options.snapshot_every == 0) || k == steps {
            snapshots.push(snapshot(&f, time));
        }
    }
    let final_mass = f.iter().sum::<f64>() * dr * dp;
    Ok(PhaseSpaceRun {
        snapshots,
        manifest: SolverManifest {
            solver: "kramers".into(),
            scheme: "strang(backward_euler collision, ssp_rk2 muscl transport)".into(),
            params: *params,
            space,
            momentum: Some((f0.p_max, np)),
            dt,
            steps,
            quantum_correction: options.quantum_correction,
            residual_history,
            initial_mass: f0.mass(),
            final_mass,
            min_value,
        },
        cfl,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minmod_values() {
        assert_eq!(minmod(1.0, 2.0), 1.0);
        assert_eq!(minmod(-3.0, -2.0), -2.0);
        assert_eq!(minmod(1.0, -1.0), 0.0);
    }

    #[test]
    fn collision_preserves_maxwellian_and_mass() {
        let params = BathParams::classical(1.5, 2.0, 0.8).unwrap();
        let space = SpaceGrid::new(1.0, 4, true).unwrap();
        let p_max = 8.0 * (params.mass() * params.temperature()).sqrt();
        let f = PhaseSpaceField::maxwell_boltzmann(space, p_max, 48, &Potential::Free, 1.5, 0.8).unwrap();
        let c = Collision::new(&f.momenta(), f.dp(), &params);
        let out = c.apply(&f.values[..48]);
        let scale = f.values.iter().cloned().fold(0.0, f64::max) * params.gamma();
        assert!(out.iter().all(|v| v.abs() < 1e-13 * scale));
        let skewed: Vec<f64> = (0..48).map(|j| (j as f64 * 0.1).sin().abs()).collect();
        assert!(c.apply(&skewed).iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn rejects_narrow_momentum_grid_and_large_steps() {
        let params = BathParams::classical(1.0, 1.0, 1.0).unwrap();
        let space = SpaceGrid::new(8.0, 16, true).unwrap();
        let f = PhaseSpaceField::maxwell_boltzmann(space, 4.0, 16, &Potential::Free, 1.0, 1.0).unwrap();
        assert!(solve_kramers(&f, &Potential::Free, &params, &KramersOptions::new(1.0)).is_err());
        let f = PhaseSpaceField::maxwell_boltzmann(space, 8.0, 16, &Potential::Free, 1.0, 1.0).unwrap();
        let opts = KramersOptions {
            dt: Some(1.0),
            ..KramersOptions::new(1.0)
        };
        assert!(matches!(
            solve_kramers(&f, &Potential::Free, &params, &opts),
            Err(Error::StepSize { .. })
        ));
    }
}
