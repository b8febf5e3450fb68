//! Characteristic roots of a free Fourier mode `rho ~ exp(i q r + s t)`.
//!
//! The semiclassical Smoluchowski equation gives
//! `-m tau s^3 - kappa q^2 s^2 + m gamma s + T q^2 = 0` with
//! `kappa = hbar^2 / 12 T`. The physical root continues the classical
//! `s0 = -T q^2 / (m gamma)`; the others are artefacts of truncating the
//! temperature and friction operators and are reported, not hidden.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::BathParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeOrder {
    Classical,
    #[default]
    Semiclassical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeModeRoots {
    pub q: f64,
    /// `s0 = -T q^2 / (m gamma)`.
    pub classical: f64,
    /// Root continued from `s0` as `hbar^2` and `tau` are switched on together.
    pub physical: Complex64,
    /// All roots, physical first.
    pub roots: Vec<Complex64>,
    /// Some root has `Re s <= 0`.
    pub has_decaying_root: bool,
    /// Roots with `Re s > 0`.
    pub growing: Vec<Complex64>,
}

const HOMOTOPY_STEPS: usize = 16;

/// Cubic coefficients `[c0, c1, c2, c3]` with both corrections scaled by
/// `lambda`: `hbar^2 -> lambda hbar^2`, `tau -> lambda tau`. The classical
/// reduction temperature is invariant along this path.
fn coefficients(q: f64, params: &BathParams, lambda: f64) -> [f64; 4] {
    let (m, t) = (params.mass(), params.temperature());
    let kappa = params.hbar().powi(2) / (12.0 * t);
    [
        t * q * q,
        m * params.gamma(),
        -kappa * lambda * q * q,
        -m * params.tau() * lambda,
    ]
}

fn horner(c: &[f64; 4], s: Complex64) -> (Complex64, Complex64) {
    let p = ((s * c[3] + c[2]) * s + c[1]) * s + c[0];
    let dp = (s * (3.0 * c[3]) + 2.0 * c[2]) * s + c[1];
    (p, dp)
}

fn newton(c: &[f64; 4], mut s: Complex64) -> Option<Complex64> {
    for _ in 0..60 {
        let (p, dp) = horner(c, s);
        if dp.norm() == 0.0 {
            return None;
        }
        let step = p / dp;
        s -= step;
        if step.norm() <= 1e-15 * s.norm() || p.norm() == 0.0 {
            return Some(s);
        }
    }
    let (p, _) = horner(c, s);
    let scale = c[0].abs() + c[1].abs() * s.norm();
    (p.norm() <= 1e-12 * scale.max(f64::MIN_POSITIVE)).then_some(s)
}

/// Roots of `a s^2 + b s + c` avoiding cancellation.
fn quadratic_roots(a: Complex64, b: Complex64, c: Complex64) -> Vec<Complex64> {
    if a.norm() == 0.0 {
        return if b.norm() == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = (b * b - a * c * 4.0).sqrt();
    let sign = if (b.conj() * disc).re >= 0.0 { 1.0 } else { -1.0 };
    let w = -(b + disc * sign) * 0.5;
    if w.norm() == 0.0 {
        return vec![Complex64::new(0.0, 0.0); 2];
    }
    vec![w / a, c / w]
}

/// Roots of the mode equation for wavenumber `q`.
pub fn free_mode_evolution(q: f64, params: &BathParams, order: ModeOrder) -> Result<FreeModeRoots> {
    if !q.is_finite() {
        return Err(invalid("q", "must be finite"));
    }
    if params.gamma() <= 0.0 {
        return Err(invalid("gamma", "mode equation needs gamma > 0"));
    }
    let s0 = -params.temperature() * q * q / (params.mass() * params.gamma());
    let classical_only = order == ModeOrder::Classical || (params.hbar() == 0.0 && params.tau() == 0.0);
    if classical_only {
        let root = Complex64::new(s0, 0.0);
        return Ok(FreeModeRoots {
            q,
            classical: s0,
            physical: root,
            roots: vec![root],
            has_decaying_root: true,
            growing: vec![],
        });
    }

    // Continue s0 along lambda in (0, 1], halving the increment whenever
    // Newton fails to settle.
    let mut s = Complex64::new(s0, 0.0);
    let mut lambda = 0.0;
    let mut h = 1.0 / HOMOTOPY_STEPS as f64;
    while lambda < 1.0 {
        let next = (lambda + h).min(1.0);
        match newton(&coefficients(q, params, next), s) {
            Some(root) if (root - s).norm() <= 0.5 * s.norm().max(s0.abs()).max(1e-300) => {
                s = root;
                lambda = next;
            }
            _ => {
                h *= 0.5;
                if h < 1e-6 {
                    return Err(Error::Convergence(format!(
                        "mode continuation stalled at lambda = {lambda} for q = {q}"
                    )));
                }
            }
        }
    }
    let c = coefficients(q, params, 1.0);
    // Deflate: c3 s^3 + c2 s^2 + c1 s + c0 = (s - s1)(c3 s^2 + e1 s + e0).
    let e1 = Complex64::new(c[2], 0.0) + s * c[3];
    let e0 = Complex64::new(c[1], 0.0) + s * e1;
    let mut roots = vec![s];
    roots.extend(quadratic_roots(Complex64::new(c[3], 0.0), e1, e0));
    let growing: Vec<Complex64> = roots.iter().copied().filter(|r| r.re > 0.0).collect();
    Ok(FreeModeRoots {
        q,
        classical: s0,
        physical: s,
        has_decaying_root: roots.iter().any(|r| r.re <= 0.0),
        roots,
        growing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::classical_reduction_temperature;

    #[test]
    fn classical_limit_is_pure_diffusion() {
        let p = BathParams::classical(2.0, 0.5, 1.5).unwrap();
        let r = free_mode_evolution(0.7, &p, ModeOrder::Semiclassical).unwrap();
        assert_eq!(r.roots.len(), 1);
        assert!((r.physical.re + 1.5 * 0.49 / 1.0).abs() < 1e-15);
    }

    #[test]
    fn roots_satisfy_the_cubic() {
        let p = BathParams::new(1.0, 2.0, 0.05, 0.7, 0.4, 1).unwrap();
        for q in [0.0, 0.1, 1.0, 3.0] {
            let r = free_mode_evolution(q, &p, ModeOrder::Semiclassical).unwrap();
            assert_eq!(r.roots.len(), 3);
            let c = coefficients(q, &p, 1.0);
            for s in &r.roots {
                let (v, _) = horner(&c, *s);
                let scale = c[0].abs() + c[1].abs() * s.norm() + c[3].abs() * s.norm().powi(3);
                assert!(v.norm() <= 1e-12 * scale.max(1e-300), "q={q} s={s}");
            }
            assert!(r.physical.re <= 0.0);
        }
    }

    #[test]
    fn small_hbar_perturbation() {
        // tau = 0: s = s0 + d1 (1 + 2 kappa q^2 s0 / (m gamma)) + O(hbar^6),
        // d1 = kappa q^2 s0^2 / (m gamma).
        let p = BathParams::new(1.0, 1.0, 0.0, 1.0, 0.01, 1).unwrap();
        let q = 1.3;
        let r = free_mode_evolution(q, &p, ModeOrder::Semiclassical).unwrap();
        let s0 = r.classical;
        let kappa = 1e-4 / 12.0;
        let d1 = kappa * q * q * s0 * s0;
        let predicted = s0 + d1 * (1.0 + 2.0 * kappa * q * q * s0);
        assert!((r.physical.re - predicted).abs() < 1e-12);
        assert_eq!(r.roots.len(), 2);
    }

    #[test]
    fn reduction_temperature_restores_classical_root() {
        let base = BathParams::new(1.0, 2.0, 0.01, 1.0, 0.3, 1).unwrap();
        let ts = classical_reduction_temperature(&base).unwrap();
        let p = base.with_temperature(ts).unwrap();
        for q in [0.2, 1.0, 4.0] {
            let r = free_mode_evolution(q, &p, ModeOrder::Semiclassical).unwrap();
            assert!((r.physical.re / r.classical - 1.0).abs() < 1e-12, "{r:?}");
            assert!(r.physical.im.abs() < 1e-12 * r.classical.abs());
        }
    }
}
