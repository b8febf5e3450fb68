//! Monte-Carlo ensembles of Langevin trajectories.
//!
//! Realization `r` is driven by noise realization `r` of the seed; its
//! thermal initial state draws from stream `4 r + 3`, which the noise
//! synthesizer never uses. Realizations run in parallel and are reduced in
//! index order, so results are bit-identical for any thread count.
//!
//! Error bars come from block averaging: the post-burn-in series of every
//! realization is cut into `blocks` equal sub-blocks, the sub-blocks of all
//! realizations are concatenated in order, and consecutive runs of them form
//! `blocks` blocks whose means are treated as independent.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_step, HeunIntegrator};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::noise::{BandLayout, NoiseSynthesizer, SpectrumEstimate};
use crate::params::BathParams;
use crate::potential::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    /// Every component starts at `position` with zero momentum.
    Rest { position: f64 },
    /// Maxwell momentum; position from the classical Boltzmann law for a
    /// harmonic well, a randomly chosen minimum for a double well, else 0.
    Thermal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    /// Record every `stride`-th post-burn-in sample.
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    pub seed: u64,
    pub first_realization: u64,
    pub realizations: usize,
    /// Defaults to `10 / gamma`.
    pub burn_in: Option<f64>,
    pub blocks: usize,
    pub initial: InitialState,
    pub histogram: Option<HistogramSpec>,
    /// Band count of the per-component momentum spectrum, if wanted.
    pub spectrum_bands: Option<usize>,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        EnsembleOptions {
            seed: 0,
            first_realization: 0,
            realizations: 64,
            burn_in: None,
            blocks: 32,
            initial: InitialState::Thermal,
            histogram: None,
            spectrum_bands: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableStats {
    pub mean: f64,
    /// Standard deviation of individual samples.
    pub dispersion: f64,
    pub standard_error: f64,
    pub samples: u64,
}

/// Pooled position histogram over all components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    /// Samples recorded, including those outside `[lo, hi)`.
    pub total: u64,
}

impl Histogram {
    fn empty(spec: &HistogramSpec) -> Self {
        Histogram {
            lo: spec.lo,
            hi: spec.hi,
            counts: vec![0; spec.bins],
            total: 0,
        }
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.counts.len())
            .map(|i| self.lo + i as f64 * self.bin_width())
            .collect()
    }

    fn record(&mut self, x: f64) {
        self.total += 1;
        if x >= self.lo && x < self.hi {
            let last = self.counts.len() - 1;
            let b = ((x - self.lo) / self.bin_width()) as usize;
            self.counts[b.min(last)] += 1;
        }
    }

    fn merge(&mut self, other: &Histogram) {
        self.total += other.total;
        self.counts
            .iter_mut()
            .zip(&other.counts)
            .for_each(|(a, b)| *a += b);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub params: BathParams,
    pub cutoff: f64,
    pub realizations: usize,
    pub burn_in: f64,
    pub samples_per_realization: usize,
    /// Trace `<P^2>` summed over components.
    pub momentum_sq: ObservableStats,
    /// Trace `<R^2>` summed over components.
    pub position_sq: ObservableStats,
    pub histogram: Option<Histogram>,
    pub momentum_spectrum: Option<SpectrumEstimate>,
    pub warnings: Vec<String>,
}

/// Empirical `<P^2>` and its standard error.
pub fn momentum_dispersion_empirical(stats: &EnsembleStats) -> (f64, f64) {
    (stats.momentum_sq.mean, stats.momentum_sq.standard_error)
}

struct Partial {
    p2: Accumulator,
    r2: Accumulator,
    histogram: Option<Histogram>,
    spectrum_rows: Vec<Vec<f64>>,
}

/// Running sums plus per-sub-block sums for block averaging.
struct Accumulator {
    sum: f64,
    sum_sq: f64,
    count: u64,
    sub_blocks: Vec<(f64, u64)>,
}

impl Accumulator {
    fn from_series(series: &[f64], blocks: usize) -> Self {
        let n = series.len();
        let sub_blocks = (0..blocks)
            .map(|b| {
                let chunk = &series[b * n / blocks..(b + 1) * n / blocks];
                (chunk.iter().sum(), chunk.len() as u64)
            })
            .collect();
        Accumulator {
            sum: series.iter().sum(),
            sum_sq: series.iter().map(|x| x * x).sum(),
            count: n as u64,
            sub_blocks,
        }
    }
}

fn reduce(parts: &[&Accumulator], blocks: usize) -> ObservableStats {
    let sum: f64 = parts.iter().map(|a| a.sum).sum();
    let sum_sq: f64 = parts.iter().map(|a| a.sum_sq).sum();
    let count: u64 = parts.iter().map(|a| a.count).sum();
    let mean = sum / count as f64;
    let dispersion = (sum_sq / count as f64 - mean * mean).max(0.0).sqrt();
    let subs: Vec<(f64, u64)> = parts.iter().flat_map(|a| a.sub_blocks.iter().copied()).collect();
    let per = subs.len() / blocks;
    let block_means: Vec<f64> = subs
        .chunks(per)
        .map(|c| {
            let (s, n) = c.iter().fold((0.0, 0u64), |(s, n), (bs, bn)| (s + bs, n + bn));
            s / n as f64
        })
        .collect();
    let nb = block_means.len() as f64;
    let bm = block_means.iter().sum::<f64>() / nb;
    let var = block_means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (nb - 1.0);
    ObservableStats {
        mean,
        dispersion,
        standard_error: (var / nb).sqrt(),
        samples: count,
    }
}

fn initial_state(
    state: InitialState,
    potential: &Potential,
    params: &BathParams,
    seed: u64,
    realization: u64,
) -> (Vec<f64>, Vec<f64>) {
    let d = params.dim();
    match state {
        InitialState::Rest { position } => (vec![position; d], vec![0.0; d]),
        InitialState::Thermal => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(4 * realization + 3);
            let t = params.temperature();
            let maxwell = Normal::new(0.0, (params.mass() * t).sqrt()).expect("positive width");
            let p0: Vec<f64> = (0..d).map(|_| maxwell.sample(&mut rng)).collect();
            let r0 = (0..d)
                .map(|_| match potential {
                    Potential::Harmonic { stiffness, center } => {
                        let width = (t / stiffness).sqrt();
                        center + Normal::new(0.0, width).expect("positive width").sample(&mut rng)
                    }
                    Potential::DoubleWell { quartic, quadratic } if *quadratic > 0.0 => {
                        let well = (quadratic / (2.0 * quartic)).sqrt();
                        let u: f64 = Normal::new(0.0, 1.0).expect("unit").sample(&mut rng);
                        well.copysign(u)
                    }
                    _ => 0.0,
                })
                .collect();
            (r0, p0)
        }
    }
}

/// Runs `options.realizations` independent trajectories and reduces their
/// post-burn-in statistics.
pub fn run_ensemble(
    potential: &Potential,
    params: &BathParams,
    grid: TimeGrid,
    cutoff: f64,
    options: &EnsembleOptions,
) -> Result<EnsembleStats> {
    if options.realizations == 0 {
        return Err(Error::Argument("at least one realization is required".into()));
    }
    if options.blocks < 2 {
        return Err(Error::Argument("block averaging needs at least 2 blocks".into()));
    }
    let burn_in = options.burn_in.unwrap_or(10.0 / params.gamma());
    if !(burn_in.is_finite() && burn_in >= 0.0) {
        return Err(Error::Argument(format!("burn-in must be finite and >= 0, got {burn_in}")));
    }
    let mut warnings = Vec::new();
    if burn_in < 5.0 / params.gamma() {
        warnings.push(format!(
            "burn-in {burn_in} is shorter than 5/gamma = {}",
            5.0 / params.gamma()
        ));
    }
    let skip = (burn_in / grid.dt()).ceil() as usize;
    if skip >= grid.len() || grid.len() - skip < options.blocks {
        return Err(Error::Argument(format!(
            "burn-in {burn_in} leaves too few of the {} samples",
            grid.len()
        )));
    }
    let kept = grid.len() - skip;
    if let Some(h) = &options.histogram {
        if !(h.lo < h.hi && h.bins > 0 && h.stride > 0) {
            return Err(Error::Argument("histogram needs lo < hi, bins > 0, stride > 0".into()));
        }
    }
    let layout = options
        .spectrum_bands
        .map(|b| BandLayout::new(kept, grid.dt(), b, true))
        .transpose()?;

    let synth = NoiseSynthesizer::new(grid, *params, cutoff)?;
    let heun = HeunIntegrator::new(potential.clone(), params.mass(), params.gamma())?;
    let first = options.first_realization;
    let probe = initial_state(options.initial, potential, params, options.seed, first);
    check_step(potential, params, grid.dt(), &probe.0)?;

    let partials: Vec<Partial> = (first..first + options.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let noise = synth.realization(options.seed, r);
            let (r0, p0) = initial_state(options.initial, potential, params, options.seed, r);
            let mut p2 = vec![0.0; kept];
            let mut r2 = vec![0.0; kept];
            let mut histogram = options.histogram.as_ref().map(Histogram::empty);
            let mut spectrum_rows = Vec::new();
            for c in 0..params.dim() {
                let (rs, ps) = heun.run(grid.dt(), &noise.samples[c], r0[c], p0[c]);
                for (i, (x, p)) in rs[skip..].iter().zip(&ps[skip..]).enumerate() {
                    p2[i] += p * p;
                    r2[i] += x * x;
                }
                if let (Some(h), Some(spec)) = (histogram.as_mut(), options.histogram.as_ref()) {
                    rs[skip..].iter().step_by(spec.stride).for_each(|&x| h.record(x));
                }
                if let Some(layout) = &layout {
                    spectrum_rows.push(layout.band_values(&ps[skip..])?);
                }
            }
            Ok(Partial {
                p2: Accumulator::from_series(&p2, options.blocks),
                r2: Accumulator::from_series(&r2, options.blocks),
                histogram,
                spectrum_rows,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let momentum_sq = reduce(&partials.iter().map(|p| &p.p2).collect::<Vec<_>>(), options.blocks);
    let position_sq = reduce(&partials.iter().map(|p| &p.r2).collect::<Vec<_>>(), options.blocks);
    let histogram = options.histogram.as_ref().map(|spec| {
        let mut h = Histogram::empty(spec);
        partials
            .iter()
            .filter_map(|p| p.histogram.as_ref())
            .for_each(|o| h.merge(o));
        h
    });
    let momentum_spectrum = layout.map(|layout| {
        let rows: Vec<Vec<f64>> = partials.iter().flat_map(|p| p.spectrum_rows.clone()).collect();
        layout.combine(&rows)
    });
    Ok(EnsembleStats {
        params: *params,
        cutoff,
        realizations: options.realizations,
        burn_in,
        samples_per_realization: kept,
        momentum_sq,
        position_sq,
        histogram,
        momentum_spectrum,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_noise_equipartition_in_two_dimensions() {
        let params = BathParams::new(1.0, 1.0, 0.0, 1.0, 0.0, 2).unwrap();
        let grid = TimeGrid::new(0.0, 0.02, 1 << 14).unwrap();
        let opts = EnsembleOptions {
            realizations: 64,
            ..Default::default()
        };
        let stats = run_ensemble(&Potential::Free, &params, grid, grid.nyquist(), &opts).unwrap();
        let (v, se) = momentum_dispersion_empirical(&stats);
        // Heun with white forcing sampled on the grid: <P^2> = d m T (1 + O(gamma dt)).
        let target = 2.0 * (1.0 - 0.5 * params.gamma() * grid.dt());
        assert!((v - target).abs() < 3.0 * se + 2e-3, "{v} +- {se}");
        assert!(stats.warnings.is_empty());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let params = BathParams::new(1.0, 1.0, 0.0, 1.0, 0.5, 1).unwrap();
        let grid = TimeGrid::new(0.0, 0.05, 2048).unwrap();
        let opts = EnsembleOptions {
            realizations: 8,
            histogram: Some(HistogramSpec {
                lo: -3.0,
                hi: 3.0,
                bins: 10,
                stride: 10,
            }),
            spectrum_bands: Some(8),
            ..Default::default()
        };
        let pot = Potential::harmonic(1.0);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_ensemble(&pot, &params, grid, 20.0, &opts).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn short_burn_in_is_warned_and_json_round_trips() {
        let params = BathParams::classical(1.0, 1.0, 1.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.05, 512).unwrap();
        let opts = EnsembleOptions {
            realizations: 2,
            burn_in: Some(1.0),
            ..Default::default()
        };
        let stats = run_ensemble(&Potential::Free, &params, grid, 10.0, &opts).unwrap();
        assert_eq!(stats.warnings.len(), 1);
        let json = serde_json::to_string(&stats).unwrap();
        let back: EnsembleStats = serde_json::from_str(&json).unwrap();
        assert_eq!(back, stats);
    }

    #[test]
    fn burn_in_longer_than_run_is_rejected() {
        let params = BathParams::classical(1.0, 1.0, 1.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.05, 64).unwrap();
        let opts = EnsembleOptions::default();
        assert!(run_ensemble(&Potential::Free, &params, grid, 10.0, &opts).is_err());
    }
}
