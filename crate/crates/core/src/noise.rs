//! Quantum fluctuation-dissipation spectrum and synthesis of stationary
//! Gaussian Langevin forces with that spectrum.
//!
//! Synthesis works directly in frequency space: every mode `|omega_k| <= cutoff`
//! gets an independent complex Gaussian amplitude with variance
//! `n S(omega_k) / dt`, the spectrum is Hermitian-symmetrized and transformed
//! back. The resulting force is periodic with period `n dt`, so its discrete
//! periodogram has expectation exactly `S(omega_k)`. The `omega = 0` mode is
//! dropped: the force has zero sample mean by construction.
//!
//! Random streams: realization `r`, component `c` of seed `s` draws from
//! `ChaCha20(seed = s, stream = 4 r + c)`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::io::CsvTable;
use crate::params::BathParams;
use crate::special::x_coth_x;

/// Two-sided force spectral density `m gamma hbar omega coth(beta hbar omega / 2)`
/// per Cartesian component, equal to `2 m gamma T` at `omega = 0` and at `hbar = 0`.
pub fn fdt_spectral_density(omega: f64, params: &BathParams) -> f64 {
    let x = 0.5 * params.beta() * params.hbar() * omega;
    2.0 * params.mass() * params.gamma() * params.temperature() * x_coth_x(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrajectory {
    pub grid: TimeGrid,
    pub cutoff: f64,
    pub seed: u64,
    pub realization: u64,
    pub params: BathParams,
    /// One sample vector per Cartesian component.
    pub samples: Vec<Vec<f64>>,
}

impl NoiseTrajectory {
    pub fn components(&self) -> usize {
        self.samples.len()
    }

    pub fn to_table(&self) -> CsvTable {
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=self.components()).map(|c| format!("F_{c}")));
        let mut t = CsvTable::new(cols);
        let p = &self.params;
        t.meta(
            "params",
            format!(
                "mass={} gamma={} tau={} temperature={} hbar={} dim={}",
                p.mass(),
                p.gamma(),
                p.tau(),
                p.temperature(),
                p.hbar(),
                p.dim()
            ),
        )
        .meta("seed", self.seed)
        .meta("realization", self.realization)
        .meta("cutoff", crate::io::fmt_f64(self.cutoff))
        .meta("dt", crate::io::fmt_f64(self.grid.dt()));
        for i in 0..self.grid.len() {
            let mut row = vec![self.grid.time(i)];
            row.extend(self.samples.iter().map(|s| s[i]));
            t.push(row);
        }
        t
    }
}

/// Precomputed mode amplitudes and FFT plan for repeated synthesis on one grid.
#[derive(Clone)]
pub struct NoiseSynthesizer {
    grid: TimeGrid,
    params: BathParams,
    cutoff: f64,
    components: usize,
    amplitudes: Vec<f64>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for NoiseSynthesizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseSynthesizer")
            .field("grid", &self.grid)
            .field("params", &self.params)
            .field("cutoff", &self.cutoff)
            .field("components", &self.components)
            .finish()
    }
}

impl NoiseSynthesizer {
    pub fn new(grid: TimeGrid, params: BathParams, cutoff: f64) -> Result<Self> {
        Self::with_spectrum(grid, params, cutoff, |w| fdt_spectral_density(w, &params))
    }

    /// Synthesizer for an arbitrary even target spectrum.
    pub fn with_spectrum(
        grid: TimeGrid,
        params: BathParams,
        cutoff: f64,
        spectrum: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff >= 0.0) {
            return Err(Error::Argument(format!("cutoff must be finite and >= 0, got {cutoff}")));
        }
        let nyquist = grid.nyquist();
        if cutoff > nyquist * (1.0 + 1e-12) {
            return Err(Error::GridResolution {
                cutoff,
                nyquist,
                required_dt: std::f64::consts::PI / cutoff,
            });
        }
        let n = grid.len();
        let limit = cutoff * (1.0 + 1e-12);
        let scale = n as f64 / grid.dt();
        let amplitudes = (0..n)
            .map(|j| {
                let w = grid.omega_at_bin(j);
                if j == 0 || w.abs() > limit {
                    0.0
                } else {
                    (scale * spectrum(w)).sqrt()
                }
            })
            .collect();
        let inverse = FftPlanner::<f64>::new().plan_fft_inverse(n);
        Ok(NoiseSynthesizer {
            grid,
            params,
            cutoff,
            components: params.dim(),
            amplitudes,
            inverse,
        })
    }

    pub fn with_components(mut self, components: usize) -> Result<Self> {
        if !(1..=3).contains(&components) {
            return Err(Error::Argument(format!(
                "component count must be 1, 2 or 3, got {components}"
            )));
        }
        self.components = components;
        Ok(self)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Per-component variance of the synthesized process,
    /// `(1 / n dt) sum_k S(omega_k)` over the retained modes.
    pub fn expected_variance(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum::<f64>() / (self.grid.len() as f64).powi(2)
    }

    fn component(&self, seed: u64, realization: u64, component: usize) -> Vec<f64> {
        let n = self.grid.len();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(4 * realization + component as u64);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let half = n / 2;
        let root_half = std::f64::consts::FRAC_1_SQRT_2;
        for j in 1..half {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            let amp = self.amplitudes[j];
            let z = Complex64::new(a, b) * (amp * root_half);
            buf[j] = z;
            buf[n - j] = z.conj();
        }
        let a: f64 = StandardNormal.sample(&mut rng);
        buf[half] = Complex64::new(a * self.amplitudes[half], 0.0);
        self.inverse.process(&mut buf);
        let norm = 1.0 / n as f64;
        buf.iter().map(|c| c.re * norm).collect()
    }

    /// Deterministic realization `realization` of seed `seed`.
    pub fn realization(&self, seed: u64, realization: u64) -> NoiseTrajectory {
        let samples = (0..self.components)
            .map(|c| self.component(seed, realization, c))
            .collect();
        NoiseTrajectory {
            grid: self.grid,
            cutoff: self.cutoff,
            seed,
            realization,
            params: self.params,
            samples,
        }
    }
}

/// One realization of the FDT-colored Langevin force with `component_count` components.
pub fn sample_noise(
    grid: TimeGrid,
    params: BathParams,
    cutoff: f64,
    seed: u64,
    component_count: usize,
) -> Result<NoiseTrajectory> {
    Ok(NoiseSynthesizer::new(grid, params, cutoff)?
        .with_components(component_count)?
        .realization(seed, 0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBand {
    pub omega_lo: f64,
    pub omega_hi: f64,
    /// Inclusive range of non-negative frequency indices.
    pub index_lo: usize,
    pub index_hi: usize,
    /// Band-averaged power spectral density.
    pub power: f64,
    pub standard_error: f64,
}

impl SpectralBand {
    pub fn omega_center(&self) -> f64 {
        0.5 * (self.omega_lo + self.omega_hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub bands: Vec<SpectralBand>,
    pub realizations: usize,
    pub n: usize,
    pub dt: f64,
}

/// Folding weight of index `k` onto the one-sided axis.
fn fold_weight(k: usize, n: usize) -> f64 {
    if n.is_multiple_of(2) && k == n / 2 {
        1.0
    } else {
        2.0
    }
}

impl SpectrumEstimate {
    fn d_omega(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.n as f64 * self.dt)
    }

    /// Band average of `f(omega)` with the same bin weights as the estimate.
    pub fn band_average(&self, band: &SpectralBand, f: impl Fn(f64) -> f64) -> f64 {
        let dw = self.d_omega();
        let (mut num, mut den) = (0.0, 0.0);
        for k in band.index_lo..=band.index_hi {
            let w = fold_weight(k, self.n);
            num += w * f(k as f64 * dw);
            den += w;
        }
        num / den
    }

    /// Variance carried by all bands, `(1 / n dt) sum_k P_k`.
    pub fn total_power(&self) -> f64 {
        self.bands
            .iter()
            .map(|b| {
                let weight: f64 = (b.index_lo..=b.index_hi).map(|k| fold_weight(k, self.n)).sum();
                b.power * weight
            })
            .sum::<f64>()
            / (self.n as f64 * self.dt)
    }
}

/// Band-averaged periodogram `P_k = (dt / n) |X_k|^2` of a set of trajectories.
///
/// Every component of every trajectory counts as one realization. The
/// non-zero frequencies `1..=n/2` are split into `bands` contiguous bands.
pub fn periodogram(trajectories: &[NoiseTrajectory], bands: usize) -> Result<SpectrumEstimate> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::Argument("periodogram needs at least one trajectory".into()))?;
    if trajectories
        .iter()
        .any(|t| t.grid != first.grid || t.params != first.params)
    {
        return Err(Error::Argument(
            "all trajectories must share grid and params".into(),
        ));
    }
    let series: Vec<&[f64]> = trajectories
        .iter()
        .flat_map(|t| t.samples.iter().map(Vec::as_slice))
        .collect();
    periodogram_of_series(&series, first.grid, bands)
}

/// Contiguous partition of the one-sided indices `1..=n/2` into `bands` bands.
#[derive(Clone)]
pub struct BandLayout {
    n: usize,
    dt: f64,
    ranges: Vec<(usize, usize)>,
    hann: bool,
    fft: Arc<dyn Fft<f64>>,
}

impl BandLayout {
    pub fn new(n: usize, dt: f64, bands: usize, hann: bool) -> Result<Self> {
        let half = n / 2;
        if bands == 0 || bands > half {
            return Err(Error::Argument(format!(
                "band count must be in 1..={half}, got {bands}"
            )));
        }
        let per_band = half as f64 / bands as f64;
        let ranges = (0..bands)
            .map(|b| {
                let lo = 1 + (b as f64 * per_band).round() as usize;
                let hi = ((b + 1) as f64 * per_band).round() as usize;
                (lo, hi)
            })
            .collect();
        Ok(BandLayout {
            n,
            dt,
            ranges,
            hann,
            fft: FftPlanner::<f64>::new().plan_fft_forward(n),
        })
    }

    /// Band-averaged periodogram of one series. With `hann`, the series is
    /// tapered and normalized by the window energy.
    pub fn band_values(&self, series: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if series.len() != n {
            return Err(Error::Argument("series length does not match the grid".into()));
        }
        let mut buf: Vec<Complex64> = if self.hann {
            let mean = series.iter().sum::<f64>() / n as f64;
            series
                .iter()
                .enumerate()
                .map(|(i, &x)| Complex64::new((x - mean) * hann(i, n), 0.0))
                .collect()
        } else {
            series.iter().map(|&x| Complex64::new(x, 0.0)).collect()
        };
        self.fft.process(&mut buf);
        let energy = if self.hann {
            (0..n).map(|i| hann(i, n).powi(2)).sum::<f64>()
        } else {
            n as f64
        };
        let scale = self.dt / energy;
        Ok(self
            .ranges
            .iter()
            .map(|&(lo, hi)| {
                let (mut num, mut den) = (0.0, 0.0);
                for k in lo..=hi {
                    let w = fold_weight(k, n);
                    let p = 0.5 * (buf[k].norm_sqr() + buf[(n - k) % n].norm_sqr()) * scale;
                    num += w * p;
                    den += w;
                }
                num / den
            })
            .collect())
    }

    /// Mean and standard error across series. A single series gets the
    /// chi-square (two degrees of freedom per bin) error estimate.
    pub fn combine(&self, rows: &[Vec<f64>]) -> SpectrumEstimate {
        let r = rows.len();
        let d_omega = 2.0 * std::f64::consts::PI / (self.n as f64 * self.dt);
        let bands = self
            .ranges
            .iter()
            .enumerate()
            .map(|(b, &(lo, hi))| {
                let mean = rows.iter().map(|row| row[b]).sum::<f64>() / r as f64;
                let standard_error = if r > 1 {
                    let var = rows.iter().map(|row| (row[b] - mean).powi(2)).sum::<f64>()
                        / (r - 1) as f64;
                    (var / r as f64).sqrt()
                } else {
                    mean / ((hi + 1 - lo) as f64).sqrt()
                };
                SpectralBand {
                    omega_lo: lo as f64 * d_omega,
                    omega_hi: hi as f64 * d_omega,
                    index_lo: lo,
                    index_hi: hi,
                    power: mean,
                    standard_error,
                }
            })
            .collect();
        SpectrumEstimate {
            bands,
            realizations: r,
            n: self.n,
            dt: self.dt,
        }
    }
}

fn hann(i: usize, n: usize) -> f64 {
    let s = (std::f64::consts::PI * i as f64 / n as f64).sin();
    s * s
}

pub(crate) fn periodogram_of_series(
    series: &[&[f64]],
    grid: TimeGrid,
    bands: usize,
) -> Result<SpectrumEstimate> {
    let layout = BandLayout::new(grid.len(), grid.dt(), bands, false)?;
    let rows = series
        .iter()
        .map(|s| layout.band_values(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(layout.combine(&rows))
}
