//! Frequency-domain time operators and the Bohm quantum potential.
//!
//! The temperature operator `T^ = T (beta E^/2) coth(beta E^/2)` with
//! `E^ = i hbar d/dt` and the friction operator `gamma^ = gamma - tau d^2/dt^2`
//! act only through time derivatives. They are realized as multipliers on the
//! discrete frequency grid; no time-domain kernel is ever built.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::DensityField;
use crate::grid::{SpaceGrid, TimeGrid};
use crate::params::BathParams;
use crate::special::{half_coth_series_coefficients, x_coth_x, BERNOULLI_MAX_INDEX};

/// Convergence radius of the Bernoulli series of `(x/2) coth(x/2)` in `x = beta hbar omega`.
pub const SERIES_RADIUS: f64 = 2.0 * std::f64::consts::PI;

/// Densities below this fraction of the maximum are rejected by [`bohm_potential`].
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Exact temperature-operator symbol `T (x/2) coth(x/2)`, `x = beta hbar omega`.
pub fn temperature_symbol(omega: f64, params: &BathParams) -> f64 {
    let x = params.beta() * params.hbar() * omega;
    params.temperature() * x_coth_x(0.5 * x)
}

/// Bernoulli-series truncation `T sum_{n<=order} B_2n x^{2n} / (2n)!`.
///
/// `order = 1` is the semi-classical operator `T (1 + x^2 / 12)`.
pub fn temperature_symbol_series(omega: f64, params: &BathParams, order: usize) -> Result<f64> {
    if order > BERNOULLI_MAX_INDEX {
        return Err(Error::Argument(format!(
            "series order {order} exceeds the cap {BERNOULLI_MAX_INDEX}"
        )));
    }
    let x = params.beta() * params.hbar() * omega;
    if x.abs() >= SERIES_RADIUS {
        return Err(Error::Domain(format!(
            "|beta hbar omega| = {} is outside the convergence radius 2 pi",
            x.abs()
        )));
    }
    let x2 = x * x;
    let coeffs = &half_coth_series_coefficients()[..=order];
    // Horner in x^2.
    let sum = coeffs.iter().rev().fold(0.0, |acc, c| acc * x2 + c);
    Ok(params.temperature() * sum)
}

/// Friction-operator symbol `gamma + tau omega^2`.
pub fn friction_symbol(omega: f64, params: &BathParams) -> f64 {
    params.gamma() + params.tau() * omega * omega
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpectralSymbol {
    Identity,
    TemperatureExact(BathParams),
    TemperatureSeries { params: BathParams, order: usize },
    Friction { gamma: f64, tau: f64 },
    /// `E^ = i hbar d/dt`, symbol `hbar omega` (real, odd).
    Energy { hbar: f64 },
    /// `d/dt`, symbol `-i omega`.
    TimeDerivative,
    Product(Vec<SpectralSymbol>),
}

impl SpectralSymbol {
    pub fn friction(params: &BathParams) -> Self {
        SpectralSymbol::Friction {
            gamma: params.gamma(),
            tau: params.tau(),
        }
    }

    pub fn eval(&self, omega: f64) -> Result<Complex64> {
        Ok(match self {
            SpectralSymbol::Identity => Complex64::new(1.0, 0.0),
            SpectralSymbol::TemperatureExact(p) => temperature_symbol(omega, p).into(),
            SpectralSymbol::TemperatureSeries { params, order } => {
                temperature_symbol_series(omega, params, *order)?.into()
            }
            SpectralSymbol::Friction { gamma, tau } => (gamma + tau * omega * omega).into(),
            SpectralSymbol::Energy { hbar } => (hbar * omega).into(),
            SpectralSymbol::TimeDerivative => Complex64::new(0.0, -omega),
            SpectralSymbol::Product(factors) => {
                let mut acc = Complex64::new(1.0, 0.0);
                for f in factors {
                    acc *= f.eval(omega)?;
                }
                acc
            }
        })
    }
}

/// Applies `symbol` to a real periodic signal sampled on `grid`.
///
/// The symbol must be real and even on the grid frequencies so that the
/// output stays real.
pub fn apply_time_symbol(
    signal: &[f64],
    grid: &TimeGrid,
    symbol: &SpectralSymbol,
) -> Result<Vec<f64>> {
    let n = grid.len();
    if signal.len() != n {
        return Err(Error::Argument(format!(
            "signal has {} samples, grid has {n}",
            signal.len()
        )));
    }
    let multipliers = (0..n)
        .map(|j| symbol.eval(grid.omega_at_bin(j)))
        .collect::<Result<Vec<_>>>()?;
    for (j, s) in multipliers.iter().enumerate() {
        let k = grid.signed_index(j);
        let mirror = multipliers[grid.bin_of(-k)];
        let scale = s.norm().max(1e-300);
        if s.im.abs() > 1e-12 * scale || (s.re - mirror.re).abs() > 1e-12 * scale {
            return Err(Error::NonRealSymbol {
                omega: grid.omega(k),
                re: s.re,
                im: s.im,
            });
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward.process(&mut buf);
    for (b, s) in buf.iter_mut().zip(&multipliers) {
        *b *= s.re;
    }
    inverse.process(&mut buf);
    let norm = 1.0 / n as f64;
    Ok(buf.iter().map(|c| c.re * norm).collect())
}

/// Bohm potential `Q = -hbar^2 (sqrt rho)'' / (2 m sqrt rho)` on a space grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumPotentialField {
    pub grid: SpaceGrid,
    pub values: Vec<f64>,
}

/// Second derivative by the three-point stencil; bounded grids use the
/// second-order one-sided stencil at the two end points.
pub(crate) fn second_derivative(values: &[f64], grid: &SpaceGrid) -> Vec<f64> {
    let m = values.len();
    let h2 = grid.spacing().powi(2);
    let mut out = vec![0.0; m];
    for i in 0..m {
        out[i] = if grid.periodic() {
            let l = values[(i + m - 1) % m];
            let r = values[(i + 1) % m];
            (l - 2.0 * values[i] + r) / h2
        } else if i == 0 {
            (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) / h2
        } else if i == m - 1 {
            (2.0 * values[m - 1] - 5.0 * values[m - 2] + 4.0 * values[m - 3] - values[m - 4]) / h2
        } else {
            (values[i - 1] - 2.0 * values[i] + values[i + 1]) / h2
        };
    }
    out
}

pub fn bohm_potential(rho: &DensityField, params: &BathParams) -> Result<QuantumPotentialField> {
    let max = rho.values.iter().cloned().fold(0.0, f64::max);
    let floor = DENSITY_FLOOR * max;
    if let Some((cell, &value)) = rho
        .values
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v > floor && v > 0.0))
    {
        return Err(Error::DegenerateDensity { cell, value, floor });
    }
    let scale = -params.hbar().powi(2) / (2.0 * params.mass());
    if scale == 0.0 {
        return Ok(QuantumPotentialField {
            grid: rho.grid,
            values: vec![0.0; rho.values.len()],
        });
    }
    let amplitude: Vec<f64> = rho.values.iter().map(|v| v.sqrt()).collect();
    let curvature = second_derivative(&amplitude, &rho.grid);
    let values = curvature
        .iter()
        .zip(&amplitude)
        .map(|(c, a)| scale * c / a)
        .collect();
    Ok(QuantumPotentialField {
        grid: rho.grid,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quantum(hbar: f64) -> BathParams {
        BathParams::new(1.0, 1.0, 0.0, 1.0, hbar, 1).unwrap()
    }

    #[test]
    fn temperature_symbol_limits() {
        let p = quantum(0.7);
        assert_eq!(temperature_symbol(0.0, &p), 1.0);
        let c = BathParams::new(1.0, 1.0, 0.0, 2.5, 0.0, 1).unwrap();
        assert_eq!(temperature_symbol(123.0, &c), 2.5);
        // beta hbar omega = 2 -> T coth(1)
        let v = temperature_symbol(2.0 / 0.7, &p);
        assert!((v - 1.313_035_285_499_331_3).abs() < 1e-14);
    }

    #[test]
    fn series_truncations() {
        let p = quantum(1.0);
        assert_eq!(temperature_symbol_series(1.3, &p, 0).unwrap(), 1.0);
        let v = temperature_symbol_series(1.0, &p, 1).unwrap();
        assert!((v - (1.0 + 1.0 / 12.0)).abs() < 1e-15);
        let exact = temperature_symbol(2.0, &p);
        let s = temperature_symbol_series(2.0, &p, 20).unwrap();
        assert!((s - exact).abs() / exact < 1e-10);
        assert!(temperature_symbol_series(1.0, &p, 31).is_err());
    }

    #[test]
    fn series_converges_inside_pi() {
        let p = quantum(1.0);
        for i in 0..=50 {
            let w = std::f64::consts::PI * i as f64 / 50.0;
            let exact = temperature_symbol(w, &p);
            let s = temperature_symbol_series(w, &p, 20).unwrap();
            assert!((s - exact).abs() / exact < 1e-10, "omega = {w}");
        }
    }

    #[test]
    fn series_refuses_outside_radius() {
        let p = quantum(1.0);
        let w = SERIES_RADIUS + 1e-9;
        let err = temperature_symbol_series(w, &p, 5).unwrap_err();
        assert!(err.to_string().contains("2 pi"));
        assert!(temperature_symbol(w, &p).is_finite());
    }

    #[test]
    fn friction_values() {
        let p = BathParams::new(1.0, 1.0, 0.01, 1.0, 0.0, 1).unwrap();
        assert_eq!(friction_symbol(10.0, &p), 2.0);
        assert_eq!(friction_symbol(0.0, &p), 1.0);
        assert_eq!(friction_symbol(3.0, &p.with_tau(0.0).unwrap()), 1.0);
    }

    #[test]
    fn symbols_are_even() {
        let p = BathParams::new(1.0, 2.0, 0.3, 0.8, 1.1, 1).unwrap();
        for w in [0.0, 0.1, 1.7, 40.0] {
            assert_eq!(temperature_symbol(w, &p), temperature_symbol(-w, &p));
            assert_eq!(friction_symbol(w, &p), friction_symbol(-w, &p));
        }
    }

    #[test]
    fn semiclassical_series_equals_energy_squared_form() {
        // T + beta E^2 / 12 with E <-> hbar omega.
        let p = quantum(0.4);
        let e2 = SpectralSymbol::Product(vec![
            SpectralSymbol::Energy { hbar: 0.4 },
            SpectralSymbol::Energy { hbar: 0.4 },
        ]);
        for w in [0.3, 2.0, 7.0] {
            let lhs = temperature_symbol_series(w, &p, 1).unwrap();
            let rhs = p.temperature() + p.beta() * e2.eval(w).unwrap().re / 12.0;
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn apply_constant_and_identity() {
        let grid = TimeGrid::new(0.0, 0.1, 64).unwrap();
        let p = quantum(0.5);
        let out =
            apply_time_symbol(&[3.0; 64], &grid, &SpectralSymbol::TemperatureExact(p)).unwrap();
        assert!(out.iter().all(|v| (v - 3.0).abs() < 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sig: Vec<f64> = (0..64).map(|_| rng.random::<f64>() - 0.5).collect();
        let out = apply_time_symbol(&sig, &grid, &SpectralSymbol::Identity).unwrap();
        assert!(sig.iter().zip(&out).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn cosine_is_an_eigenfunction() {
        let grid = TimeGrid::new(0.0, 0.05, 256).unwrap();
        let p = quantum(0.9);
        let k = 7;
        let w = grid.omega(k);
        let sig: Vec<f64> = grid.times().map(|t| (w * t).cos()).collect();
        let out = apply_time_symbol(&sig, &grid, &SpectralSymbol::TemperatureExact(p)).unwrap();
        let lambda = temperature_symbol(w, &p);
        for (a, b) in sig.iter().zip(&out) {
            assert!((a * lambda - b).abs() < 1e-10);
        }
    }

    #[test]
    fn non_real_symbols_are_rejected() {
        let grid = TimeGrid::new(0.0, 0.1, 16).unwrap();
        let sig = vec![1.0; 16];
        assert!(matches!(
            apply_time_symbol(&sig, &grid, &SpectralSymbol::TimeDerivative),
            Err(Error::NonRealSymbol { .. })
        ));
        assert!(apply_time_symbol(&sig, &grid, &SpectralSymbol::Energy { hbar: 1.0 }).is_err());
        assert!(apply_time_symbol(&sig[..8], &grid, &SpectralSymbol::Identity).is_err());
    }

    proptest! {
        #[test]
        fn apply_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let grid = TimeGrid::new(0.0, 0.02, 128).unwrap();
            let p = BathParams::new(1.0, 1.0, 0.05, 1.0, 0.3, 1).unwrap();
            let sym = SpectralSymbol::Product(vec![
                SpectralSymbol::TemperatureExact(p),
                SpectralSymbol::friction(&p),
            ]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f: Vec<f64> = (0..128).map(|_| rng.random::<f64>() - 0.5).collect();
            let g: Vec<f64> = (0..128).map(|_| rng.random::<f64>() - 0.5).collect();
            let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
            let lhs = apply_time_symbol(&mix, &grid, &sym).unwrap();
            let sf = apply_time_symbol(&f, &grid, &sym).unwrap();
            let sg = apply_time_symbol(&g, &grid, &sym).unwrap();
            let scale = lhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for i in 0..128 {
                prop_assert!((lhs[i] - (a * sf[i] + b * sg[i])).abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn bohm_trivial_cases() {
        let grid = SpaceGrid::new(4.0, 64, true).unwrap();
        let rho = DensityField::uniform(grid).unwrap();
        let q = bohm_potential(&rho, &quantum(1.0)).unwrap();
        assert!(q.values.iter().all(|v| v.abs() < 1e-12));
        let rho = DensityField::gaussian(SpaceGrid::new(8.0, 64, false).unwrap(), 0.0, 1.0).unwrap();
        let q = bohm_potential(&rho, &quantum(1.0).classical_limit()).unwrap();
        assert!(q.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bohm_gaussian_matches_symbolic_oracle() {
        let (hbar, m, sigma) = (0.8, 1.5, 0.7);
        let p = BathParams::new(m, 1.0, 0.0, 1.0, hbar, 1).unwrap();
        let grid = SpaceGrid::new(6.0, 601, false).unwrap();
        let rho = DensityField::gaussian(grid, 0.0, sigma).unwrap();
        let q = bohm_potential(&rho, &p).unwrap();
        let h = grid.spacing();
        for (i, r) in grid.positions().into_iter().enumerate() {
            let exact = hbar * hbar / (4.0 * m * sigma * sigma)
                - hbar * hbar * r * r / (8.0 * m * sigma.powi(4));
            // Stencil truncation error ~ h^2 (sqrt rho)'''' / sqrt rho, quartic in r.
            let tol = h * h * (0.2 + 0.3 * r * r + 0.1 * r.powi(4));
            assert!((q.values[i] - exact).abs() < tol, "r = {r}");
        }
    }

    #[test]
    fn bohm_rejects_nodes() {
        let grid = SpaceGrid::new(4.0, 16, false).unwrap();
        let mut v = vec![1.0; 16];
        v[5] = 0.0;
        let rho = DensityField::new(grid, v, 0.0).unwrap();
        match bohm_potential(&rho, &quantum(1.0)) {
            Err(Error::DegenerateDensity { cell, .. }) => assert_eq!(cell, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn bohm_scale_covariance(c in 1e-3f64..1e3, eps in 0.0f64..0.5) {
            let grid = SpaceGrid::new(2.0, 64, true).unwrap();
            let rho = DensityField::from_fn(grid, |r| 1.0 + eps * (std::f64::consts::PI * r).sin()).unwrap();
            let scaled = DensityField::new(grid, rho.values.iter().map(|v| v * c).collect(), 0.0).unwrap();
            let p = quantum(0.6);
            let q1 = bohm_potential(&rho, &p).unwrap();
            let q2 = bohm_potential(&scaled, &p).unwrap();
            let scale = q1.values.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
            for (a, b) in q1.values.iter().zip(&q2.values) {
                prop_assert!((a - b).abs() <= 1e-12 * scale.max(1.0));
            }
        }
    }
}
