use qbm_core::noise::{fdt_spectral_density, periodogram, sample_noise, BandLayout, NoiseSynthesizer};
use qbm_core::{BathParams, TimeGrid};

#[test]
fn white_noise_spectrum_is_flat_at_two_m_gamma_t() {
    let params = BathParams::classical(1.5, 0.8, 2.0).unwrap();
    let grid = TimeGrid::new(0.0, 0.01, 1 << 16).unwrap();
    let synth = NoiseSynthesizer::new(grid, params, grid.nyquist()).unwrap();
    let runs: Vec<_> = (0..64).map(|r| synth.realization(5, r)).collect();
    let est = periodogram(&runs, 32).unwrap();
    let level = 2.0 * 1.5 * 0.8 * 2.0;
    for band in &est.bands {
        assert!((band.power / level - 1.0).abs() < 0.05, "{band:?}");
    }
}

#[test]
fn samples_are_gaussian_and_components_independent() {
    let params = BathParams::new(1.0, 1.0, 0.0, 1.0, 0.5, 2).unwrap();
    let grid = TimeGrid::new(0.0, 0.02, 1 << 16).unwrap();
    let traj = sample_noise(grid, params, 40.0, 11, 2).unwrap();
    let x = &traj.samples[0];
    let y = &traj.samples[1];
    let n = x.len() as f64;
    let var = x.iter().map(|v| v * v).sum::<f64>() / n;
    let m3 = x.iter().map(|v| v.powi(3)).sum::<f64>() / n / var.powf(1.5);
    let m4 = x.iter().map(|v| v.powi(4)).sum::<f64>() / n / (var * var);
    // Colored samples are correlated over ~1/40; allow for the reduced sample count.
    assert!(m3.abs() < 0.1, "skewness {m3}");
    assert!((m4 - 3.0).abs() < 0.2, "kurtosis {m4}");
    let vy = y.iter().map(|v| v * v).sum::<f64>() / n;
    let cross = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / n / (var * vy).sqrt();
    assert!(cross.abs() < 0.05, "cross-correlation {cross}");
}

#[test]
fn no_power_above_the_cutoff() {
    let params = BathParams::new(1.0, 1.0, 0.0, 1.0, 0.2, 1).unwrap();
    let grid = TimeGrid::new(0.0, 0.01, 1 << 12).unwrap();
    let cutoff = 0.5 * grid.nyquist();
    let synth = NoiseSynthesizer::new(grid, params, cutoff).unwrap();
    let layout = BandLayout::new(grid.len(), grid.dt(), 64, false).unwrap();
    let rows: Vec<Vec<f64>> = (0..4)
        .map(|r| layout.band_values(&synth.realization(1, r).samples[0]).unwrap())
        .collect();
    let est = layout.combine(&rows);
    for band in &est.bands {
        if band.omega_lo > cutoff * 1.001 {
            assert!(band.power < 1e-20, "{band:?}");
        } else if band.omega_hi < cutoff {
            assert!(band.power > 0.5 * fdt_spectral_density(band.omega_center(), &params));
        }
    }
}

#[test]
fn hann_window_tracks_a_steep_spectrum() {
    // Lorentzian-filtered target: leakage from low frequencies would inflate
    // the tail without a window.
    let params = BathParams::classical(1.0, 1.0, 1.0).unwrap();
    let grid = TimeGrid::new(0.0, 0.01, 1 << 14).unwrap();
    let spectrum = |w: f64| 2.0 / (1.0 + w * w);
    let synth = NoiseSynthesizer::with_spectrum(grid, params, grid.nyquist(), spectrum).unwrap();
    let layout = BandLayout::new(grid.len(), grid.dt(), 64, true).unwrap();
    let rows: Vec<Vec<f64>> = (0..32)
        .map(|r| layout.band_values(&synth.realization(2, r).samples[0]).unwrap())
        .collect();
    let est = layout.combine(&rows);
    for band in est.bands.iter().skip(1) {
        let target = est.band_average(band, spectrum);
        assert!((band.power / target - 1.0).abs() < 4.0 * band.standard_error / band.power + 0.02, "{band:?}");
    }
}
