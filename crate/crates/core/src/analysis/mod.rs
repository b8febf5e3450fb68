//! Quadrature and closed-form results: equilibrium momentum dispersion, the
//! cutoff-frequency equation, the density dispersion relation, and the
//! temperature at which the quantum corrections cancel.

pub mod quadrature;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::ConstantsTable;
use crate::error::{Error, Result};
use crate::params::BathParams;
use crate::special::x_coth_x;
use quadrature::{brent, integrate};

/// Geometric break points `s, 10 s, 100 s, ...` below `limit`.
fn decade_breaks(start: f64, limit: f64) -> Vec<f64> {
    std::iter::successors(Some(start), |x| Some(x * 10.0))
        .take_while(|&x| x < limit)
        .take(40)
        .collect()
}

/// Equilibrium `<P^2>` of a free particle with the force spectrum cut off at `omega_max`:
/// `(d m gamma / pi) int_0^omega_max hbar w coth(beta hbar w / 2) / (w^2 + gamma^2) dw`.
pub fn momentum_dispersion_integral(omega_max: f64, params: &BathParams) -> Result<f64> {
    if !(omega_max >= 0.0) {
        return Err(Error::Argument(format!("cutoff must be >= 0, got {omega_max}")));
    }
    let (m, g, t) = (params.mass(), params.gamma(), params.temperature());
    let half_bh = 0.5 * params.beta() * params.hbar();
    let prefactor = params.dim() as f64 * m * g / PI;
    if omega_max.is_infinite() {
        if params.hbar() > 0.0 {
            return Ok(f64::INFINITY);
        }
        return Ok(params.dim() as f64 * m * t);
    }
    if params.hbar() == 0.0 {
        // Closed form: 2 T int dw / (w^2 + g^2) = (2 T / g) atan(omega_max / g).
        return Ok(prefactor * 2.0 * t / g * (omega_max / g).atan());
    }
    let mut breaks = decade_breaks(g, omega_max);
    breaks.extend(decade_breaks(1.0 / half_bh, omega_max));
    breaks.sort_by(f64::total_cmp);
    let q = integrate(
        |w| 2.0 * t * x_coth_x(half_bh * w) / (w * w + g * g),
        0.0,
        omega_max,
        &breaks,
        0.0,
        1e-12,
    )?;
    Ok(prefactor * q.value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffResult {
    pub omega: f64,
    /// `|residual| / 2 pi` of the cutoff equation at `omega`.
    pub residual: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    /// Geometric-mean estimate `(2 pi gamma T / hbar)^(1/2)`.
    pub estimate: f64,
}

impl CutoffResult {
    pub fn ratio_to_estimate(&self) -> f64 {
        self.omega / self.estimate
    }
}

/// Residual `beta hbar gamma int_0^1 coth(beta hbar omega sqrt(x) / 2) / (x + (gamma/omega)^2) dx - 2 pi`,
/// evaluated after `x = u^2` as `int_0^1 (2/a) u a coth(a u) / (u^2 + g^2) du`.
pub fn cutoff_residual(omega: f64, params: &BathParams) -> Result<f64> {
    let theta = params.theta();
    let a = 0.5 * params.beta() * params.hbar() * omega;
    let g = params.gamma() / omega;
    let g2 = g * g;
    let breaks: Vec<f64> = [g, 1.0 / a].into_iter().filter(|&x| x < 1.0).collect();
    let q = integrate(
        |u| 2.0 / a * x_coth_x(a * u) / (u * u + g2),
        0.0,
        1.0,
        &breaks,
        1e-12 / theta,
        1e-14,
    )?;
    Ok(theta * q.value - 2.0 * PI)
}

/// Solves the cutoff equation for `omega` by Brent's method.
///
/// The residual is increasing in `omega`; the bracket starts at
/// `[0.01, 100]` times the geometric-mean estimate and widens by decades.
pub fn solve_cutoff(params: &BathParams) -> Result<CutoffResult> {
    if params.hbar() <= 0.0 {
        return Err(Error::Domain(
            "the cutoff is infinite in the classical limit hbar = 0".into(),
        ));
    }
    let estimate = (2.0 * PI * params.gamma() * params.temperature() / params.hbar()).sqrt();
    let f = |w: f64| cutoff_residual(w, params);
    let (mut lo, mut hi) = (0.01 * estimate, 100.0 * estimate);
    let (mut f_lo, mut f_hi) = (f(lo)?, f(hi)?);
    for _ in 0..20 {
        if f_lo < 0.0 && f_hi > 0.0 {
            break;
        }
        if f_lo >= 0.0 {
            lo *= 0.1;
            f_lo = f(lo)?;
        }
        if f_hi <= 0.0 {
            hi *= 10.0;
            f_hi = f(hi)?;
        }
    }
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::NoBracket { lo, hi, f_lo, f_hi });
    }
    let mid = (lo * hi).sqrt();
    let f_mid = f(mid)?;
    if !(f_lo < f_mid && f_mid < f_hi) {
        return Err(Error::Convergence(format!(
            "cutoff residual is not monotone on [{lo}, {hi}]: {f_lo}, {f_mid}, {f_hi}"
        )));
    }
    // The quadrature cannot fail inside the bracket once the endpoints succeeded.
    let root = brent(
        |w| f(w).unwrap_or(f64::NAN),
        lo,
        hi,
        1e-15 * estimate,
        200,
    )?;
    let residual = f(root.x)?.abs() / (2.0 * PI);
    if residual > 1e-10 {
        return Err(Error::Convergence(format!(
            "cutoff residual {residual} above 1e-10 at omega = {}",
            root.x
        )));
    }
    Ok(CutoffResult {
        omega: root.x,
        residual,
        iterations: root.iterations,
        bracket: (lo, hi),
        estimate,
    })
}

/// Cutoff at the collision frequency, `2 pi (T/m)^(1/2) / lambda` for mean free path `lambda`.
pub fn collision_cutoff(lambda: f64, params: &BathParams) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Argument(format!("mean free path must be > 0, got {lambda}")));
    }
    Ok(2.0 * PI * (params.temperature() / params.mass()).sqrt() / lambda)
}

/// Friction `2 pi hbar / (m lambda^2)` implied by mean free path `lambda`.
pub fn implied_friction(lambda: f64, params: &BathParams) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Argument(format!("mean free path must be > 0, got {lambda}")));
    }
    Ok(2.0 * PI * params.hbar() / (params.mass() * lambda * lambda))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionSolution {
    pub omega: f64,
    /// Principal root `q^2` of the quadratic in `q^2`.
    pub q2: Complex64,
    /// The other root.
    pub q2_alt: Complex64,
    /// Principal square root of `q2`; `-q` is the mirrored mode.
    pub q: Complex64,
    /// Relative back-substitution residual of `q2`.
    pub residual: f64,
    /// `omega = 0`, where `q2 = 0` is returned without solving.
    pub zero_frequency: bool,
    /// `hbar = 0`, where the relation is linear in `q^2`.
    pub classical: bool,
}

/// Coefficients `(A, B, C)` of `A y^2 + B y + C = 0` with `y = q^2`.
fn dispersion_coefficients(omega: f64, params: &BathParams) -> (f64, f64, Complex64) {
    let m = params.mass();
    let a = (params.hbar() / (2.0 * m)).powi(2);
    let b = params.temperature() / m * x_coth_x(0.5 * params.beta() * params.hbar() * omega);
    let c = Complex64::new(0.0, -omega * (params.gamma() + params.tau() * omega * omega));
    (a, b, c)
}

fn relative_residual(y: Complex64, a: f64, b: f64, c: Complex64) -> f64 {
    let value = y * y * a + y * b + c;
    let scale = a * y.norm_sqr() + b * y.norm() + c.norm();
    value.norm() / scale
}

/// Solves `(hbar/2m)^2 q^4 + (hbar w/2m) coth(beta hbar w/2) q^2 - i w (gamma + tau w^2) = 0`
/// for `q^2`, taking the root
/// `(m w / hbar) [ (coth^2 + 4i(gamma/w + tau w))^(1/2) - coth ]` with the principal square root.
pub fn dispersion_q2(omega: f64, params: &BathParams) -> Result<DispersionSolution> {
    if !omega.is_finite() {
        return Err(Error::Argument(format!("frequency must be finite, got {omega}")));
    }
    let zero = Complex64::new(0.0, 0.0);
    if omega == 0.0 {
        return Ok(DispersionSolution {
            omega,
            q2: zero,
            q2_alt: zero,
            q: zero,
            residual: 0.0,
            zero_frequency: true,
            classical: params.hbar() == 0.0,
        });
    }
    let (a, b, c) = dispersion_coefficients(omega, params);
    let (q2, q2_alt, classical) = if params.hbar() == 0.0 {
        (-c / b, Complex64::new(f64::NAN, f64::NAN), true)
    } else {
        let hbar = params.hbar();
        let m = params.mass();
        let ct = crate::special::coth_stable(0.5 * params.beta() * hbar * omega)?;
        let z = Complex64::new(0.0, 4.0 * (params.gamma() / omega + params.tau() * omega));
        let s = (Complex64::new(ct * ct, 0.0) + z).sqrt();
        // s - ct without cancellation when s and ct point the same way.
        let diff = if s.re * ct >= 0.0 { z / (s + ct) } else { s - ct };
        let y = diff * (m * omega / hbar);
        (y, -y - b / a, false)
    };
    let residual = relative_residual(q2, a, b, c);
    let tolerance = 1e-8;
    if !(residual <= tolerance) {
        return Err(Error::BranchSelection {
            omega,
            residual,
            tolerance,
        });
    }
    Ok(DispersionSolution {
        omega,
        q2,
        q2_alt,
        q: q2.sqrt(),
        residual,
        zero_frequency: false,
        classical,
    })
}

/// Temperature `T* = (hbar/2) (gamma / 3 tau)^(1/2)` at which `tau / gamma = (beta hbar)^2 / 12`.
pub fn classical_reduction_temperature(params: &BathParams) -> Result<f64> {
    if params.tau() <= 0.0 {
        return Err(Error::Domain("T* requires tau > 0".into()));
    }
    if params.hbar() <= 0.0 {
        return Err(Error::Domain("T* requires hbar > 0".into()));
    }
    Ok(0.5 * params.hbar() * (params.gamma() / (3.0 * params.tau())).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalTd {
    /// Kelvin.
    pub t_star: f64,
    /// m^2 / s.
    pub diffusion: f64,
    pub product: f64,
    /// `hbar c^2 / (8 k_B alpha)`.
    pub reference: f64,
    pub relative_deviation: f64,
}

/// `T*`, `D = k_B T* / (m gamma)` and their product in SI units for a point
/// charge `e` of mass `params.mass()` kg, with `tau = e^2 / (6 pi eps0 m c^3)`.
/// `params.gamma()` is read in 1/s; `params.tau()` and `params.hbar()` are ignored.
pub fn universal_td(params: &BathParams, constants: &ConstantsTable) -> UniversalTd {
    let m = params.mass();
    let gamma = params.gamma();
    let tau = constants.radiation_time(m);
    let hbar = constants.hbar_si;
    let kb = constants.kb_si;
    let t_star = hbar / (2.0 * kb) * (gamma / (3.0 * tau)).sqrt();
    let diffusion = kb * t_star / (m * gamma);
    let product = t_star * diffusion;
    let reference = hbar * constants.c * constants.c / (8.0 * kb * constants.alpha);
    UniversalTd {
        t_star,
        diffusion,
        product,
        reference,
        relative_deviation: (product - reference).abs() / reference,
    }
}
