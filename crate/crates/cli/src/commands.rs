//! One function per subcommand. Each writes its tables through the run's
//! [`OutputDir`] and returns the diagnostics for the manifest.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use qbm_core::analysis::{
    dispersion_q2, momentum_dispersion_integral, solve_cutoff, universal_td,
};
use qbm_core::constants::constants;
use qbm_core::io::{fmt_f64, CsvTable};
use qbm_core::langevin::{integrate, run_ensemble, EnsembleOptions, InitialState};
use qbm_core::noise::{fdt_spectral_density, BandLayout, NoiseSynthesizer, NoiseTrajectory};
use qbm_core::pde::{
    extract_moments, solve_kramers, solve_smoluchowski, solve_smoluchowski_quantum, KramersOptions,
    SmoluchowskiOptions, SolverManifest,
};
use qbm_core::{BathParams, DensityField, PhaseSpaceField, Potential, SpaceGrid, TimeGrid};

use crate::config::{log_space, InitialDensity, RunConfig};
use crate::manifest::{Check, OutputDir};
use crate::CliError;

/// Largest back-substitution or root residual accepted by the analysis commands.
pub const RESIDUAL_LIMIT: f64 = 1e-10;
/// Largest relative mass drift accepted from the grid solvers.
pub const MASS_DRIFT_LIMIT: f64 = 1e-10;

#[derive(Debug, Default)]
pub struct Report {
    pub diagnostics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub solver: Option<serde_json::Value>,
}

impl Report {
    fn diag(&mut self, name: &str, value: f64) {
        self.diagnostics.insert(name.to_string(), value);
    }
}

fn params_meta(table: &mut CsvTable, p: &BathParams) {
    table.meta(
        "params",
        format!(
            "mass={} gamma={} tau={} temperature={} hbar={} dim={}",
            fmt_f64(p.mass()),
            fmt_f64(p.gamma()),
            fmt_f64(p.tau()),
            fmt_f64(p.temperature()),
            fmt_f64(p.hbar()),
            p.dim()
        ),
    );
}

/// The configured cutoff, else the solved one for a quantum bath, else Nyquist.
fn resolve_cutoff(cfg: &RunConfig, params: &BathParams, grid: &TimeGrid) -> Result<f64, CliError> {
    Ok(match cfg.noise.cutoff {
        Some(c) => c,
        None if params.hbar() > 0.0 => solve_cutoff(params)?.omega,
        None => grid.nyquist(),
    })
}

pub fn noise(cfg: &RunConfig, out: &mut OutputDir) -> Result<Report, CliError> {
    let params = cfg.bath()?;
    let grid = cfg.time_grid()?;
    let cutoff = resolve_cutoff(cfg, &params, &grid)?;
    let synth = NoiseSynthesizer::new(grid, params, cutoff)?;
    let runs: Vec<NoiseTrajectory> = (0..cfg.noise.realizations as u64)
        .into_par_iter()
        .map(|r| synth.realization(cfg.seed, r))
        .collect();
    let mut report = Report::default();

    let mut spectrum = CsvTable::new(["omega", "s_ff"]);
    params_meta(&mut spectrum, &params);
    spectrum.meta("cutoff", fmt_f64(cutoff));
    for j in 1..=grid.len() / 2 {
        let w = grid.omega_at_bin(j).abs();
        if w > cutoff * (1.0 + 1e-12) {
            break;
        }
        spectrum.push(vec![w, fdt_spectral_density(w, &params)]);
    }
    out.write_table("spectrum.csv", &spectrum)?;
    out.write_table("noise_trajectory.csv", &runs[0].to_table())?;

    let layout = BandLayout::new(grid.len(), grid.dt(), cfg.noise.bands, cfg.noise.hann)?;
    let rows: Vec<Vec<f64>> = runs
        .par_iter()
        .flat_map_iter(|t| t.samples.iter().map(|s| layout.band_values(s)).collect::<Vec<_>>())
        .collect::<Result<_, _>>()?;
    let est = layout.combine(&rows);
    let mut table = CsvTable::new(["omega_lo", "omega_hi", "power", "standard_error", "target", "ratio"]);
    params_meta(&mut table, &params);
    table.meta("realizations", est.realizations);
    table.meta("hann", cfg.noise.hann);
    let mut worst = 0.0_f64;
    for band in &est.bands {
        let target = est.band_average(band, |w| fdt_spectral_density(w, &params));
        let ratio = if target > 0.0 { band.power / target } else { f64::NAN };
        if band.omega_hi <= cutoff && target > 0.0 {
            worst = worst.max((ratio - 1.0).abs());
        }
        table.push(vec![band.omega_lo, band.omega_hi, band.power, band.standard_error, target, ratio]);
    }
    out.write_table("periodogram.csv", &table)?;

    let n = runs[0].samples[0].len() as f64;
    let sample_var = runs
        .iter()
        .flat_map(|t| &t.samples)
        .map(|s| s.iter().map(|x| x * x).sum::<f64>() / n)
        .sum::<f64>()
        / rows.len() as f64;
    report.diag("cutoff", cutoff);
    report.diag("worst_band_deviation_below_cutoff", worst);
    report.diag("expected_variance", synth.expected_variance());
    report.diag("sample_variance", sample_var);
    Ok(report)
}

pub fn langevin(cfg: &RunConfig, out: &mut OutputDir) -> Result<Report, CliError> {
    let params = cfg.bath()?;
    let grid = cfg.time_grid()?;
    let potential = cfg.potential()?;
    let cutoff = resolve_cutoff(cfg, &params, &grid)?;
    let l = &cfg.langevin;
    let opts = EnsembleOptions {
        seed: cfg.seed,
        first_realization: 0,
        realizations: l.realizations,
        burn_in: l.burn_in,
        blocks: l.blocks,
        initial: InitialState::Thermal,
        histogram: l.histogram,
        spectrum_bands: l.spectrum_bands,
    };
    let stats = run_ensemble(potential, &params, grid, cutoff, &opts)?;
    let mut report = Report::default();

    let closure = momentum_dispersion_integral(cutoff, &params)?;
    let mut obs = CsvTable::new([
        "p2_mean",
        "p2_dispersion",
        "p2_standard_error",
        "r2_mean",
        "r2_dispersion",
        "r2_standard_error",
        "p2_free_closure",
    ]);
    params_meta(&mut obs, &params);
    obs.meta("cutoff", fmt_f64(cutoff));
    obs.meta("realizations", stats.realizations);
    obs.meta("burn_in", fmt_f64(stats.burn_in));
    obs.meta("samples_per_realization", stats.samples_per_realization);
    let (p2, r2) = (&stats.momentum_sq, &stats.position_sq);
    obs.push(vec![p2.mean, p2.dispersion, p2.standard_error, r2.mean, r2.dispersion, r2.standard_error, closure]);
    out.write_table("observables.csv", &obs)?;

    if let Some(h) = &stats.histogram {
        let mut t = CsvTable::new(["r_lo", "r_hi", "count", "density"]);
        t.meta("total", h.total);
        let edges = h.edges();
        let norm = h.total as f64 * h.bin_width();
        for (b, &c) in h.counts.iter().enumerate() {
            t.push(vec![edges[b], edges[b + 1], c as f64, c as f64 / norm]);
        }
        out.write_table("histogram.csv", &t)?;
    }
    if let Some(est) = &stats.momentum_spectrum {
        let mut t = CsvTable::new(["omega_lo", "omega_hi", "power", "standard_error"]);
        for b in &est.bands {
            t.push(vec![b.omega_lo, b.omega_hi, b.power, b.standard_error]);
        }
        out.write_table("momentum_spectrum.csv", &t)?;
    }
    if l.trajectory {
        let synth = NoiseSynthesizer::new(grid, params, cutoff)?;
        let noise = synth.realization(cfg.seed, 0);
        let zero = vec![0.0; params.dim()];
        let traj = integrate(potential, &params, grid, &noise, (&zero, &zero))?;
        out.write_table("trajectory.csv", &traj.to_table())?;
    }

    report.diag("cutoff", cutoff);
    report.diag("p2_mean", p2.mean);
    report.diag("p2_standard_error", p2.standard_error);
    report.diag("r2_mean", r2.mean);
    report.diag("r2_standard_error", r2.standard_error);
    if matches!(potential, Potential::Free) {
        report.diag("p2_closure_z", (p2.mean - closure) / p2.standard_error);
    }
    report.warnings = stats.warnings.clone();
    Ok(report)
}

pub fn cutoff(cfg: &RunConfig, out: &mut OutputDir) -> Result<Report, CliError> {
    let base = cfg.bath()?;
    let c = &cfg.cutoff;
    let mut table = CsvTable::new(["theta", "hbar", "omega", "estimate", "ratio", "residual"]);
    params_meta(&mut table, &base);
    let mut worst = 0.0_f64;
    let mut omegas = Vec::new();
    let mut ratios = Vec::new();
    for theta in log_space(c.theta_min, c.theta_max, c.points) {
        let hbar = theta * base.temperature() / base.gamma();
        let params = base.with_hbar(hbar)?;
        let r = solve_cutoff(&params)?;
        worst = worst.max(r.residual);
        omegas.push(r.omega);
        ratios.push(r.ratio_to_estimate());
        table.push(vec![theta, hbar, r.omega, r.estimate, r.ratio_to_estimate(), r.residual]);
    }
    out.write_table("cutoff.csv", &table)?;
    let mut report = Report::default();
    let monotone = omegas.windows(2).all(|w| w[1] < w[0]);
    report.diag("omega_decreasing_in_theta", if monotone { 1.0 } else { 0.0 });
    report.diag("ratio_min", ratios.iter().cloned().fold(f64::INFINITY, f64::min));
    report.diag("ratio_max", ratios.iter().cloned().fold(0.0, f64::max));
    report.checks.push(Check::at_most("max_cutoff_residual", worst, RESIDUAL_LIMIT));
    Ok(report)
}

pub fn dispersion(cfg: &RunConfig, out: &mut OutputDir) -> Result<Report, CliError> {
    let params = cfg.bath()?;
    let d = &cfg.dispersion;
    let mut table = CsvTable::new(["omega", "re_q2", "im_q2", "re_q2_alt", "im_q2_alt", "residual"]);
    params_meta(&mut table, &params);
    let mut worst = 0.0_f64;
    let mut last = None;
    let mut first = None;
    for omega in log_space(d.omega_min, d.omega_max, d.points) {
        let s = dispersion_q2(omega, &params)?;
        worst = worst.max(s.residual);
        table.push(vec![omega, s.q2.re, s.q2.im, s.q2_alt.re, s.q2_alt.im, s.residual]);
        first.get_or_insert(s.q2);
        last = Some(s.q2);
    }
    out.write_table("dispersion.csv", &table)?;
    let mut report = Report::default();
    let (m, g) = (params.mass(), params.gamma());
    if let Some(q2) = first {
        report.diag("low_omega_im_q2_over_m_gamma_beta_omega", q2.im / (m * g * params.beta() * d.omega_min));
    }
    if let (Some(q2), true) = (last, params.hbar() > 0.0) {
        report.diag("high_omega_im_q2_over_2m_gamma_per_hbar", q2.im / (2.0 * m * g / params.hbar()));
    }
    report.checks.push(Check::at_most("max_back_substitution_residual", worst, RESIDUAL_LIMIT));
    Ok(report)
}

/// Unnormalized initial density as a function of position.
fn initial_profile<'a>(
    cfg: &'a RunConfig,
    grid: &SpaceGrid,
    potential: &'a Potential,
    temperature: f64,
) -> Box<dyn Fn(f64) -> f64 + 'a> {
    let length = grid.length();
    match cfg.initial {
        InitialDensity::Equilibrium => {
            let u_min = grid
                .positions()
                .iter()
                .map(|&r| potential.value(r))
                .fold(f64::INFINITY, f64::min);
            Box::new(move |r| (-(potential.value(r) - u_min) / temperature).exp())
        }
        InitialDensity::Gaussian { center, sigma } => {
            Box::new(move |r| (-(r - center).powi(2) / (2.0 * sigma * sigma)).exp())
        }
        InitialDensity::Uniform => Box::new(|_| 1.0),
        InitialDensity::Cosine { amplitude, mode } => {
            Box::new(move |r| 1.0 + amplitude * (2.0 * PI * mode as f64 * r / length).cos())
        }
    }
}

fn solver_report(report: &mut Report, manifest: &SolverManifest) {
    let drift = (manifest.final_mass - manifest.initial_mass).abs() / manifest.initial_mass;
    report.diag("steps", manifest.steps as f64);
    report.diag("dt", manifest.dt);
    report.diag("relative_mass_drift", drift);
    report.diag("min_value", manifest.min_value);
    report.diag(
        "final_step_change",
        manifest.residual_history.last().copied().unwrap_or(0.0),
    );
    report.checks.push(Check::at_most("relative_mass_drift", drift, MASS_DRIFT_LIMIT));
    report.solver = Some(serde_json::json!({
        "solver": manifest.solver,
        "scheme": manifest.scheme,
        "space": manifest.space,
        "momentum": manifest.momentum,
        "dt": manifest.dt,
        "steps": manifest.steps,
        "quantum_correction": manifest.quantum_correction,
        "initial_mass": manifest.initial_mass,
        "final_mass": manifest.final_mass,
        "min_value": manifest.min_value,
    }));
}

fn history_table(manifest: &SolverManifest) -> CsvTable {
    let mut t = CsvTable::new(["step", "relative_change"]);
    t.meta("dt", fmt_f64(manifest.dt));
    for (k, r) in manifest.residual_history.iter().enumerate() {
        t.push(vec![(k + 1) as f64, *r]);
    }
    t
}

pub fn kramers(cfg: &RunConfig, out: &mut OutputDir) -> Result<Report, CliError> {
    let params = cfg.bath()?;
    let space = cfg.space_grid()?;
    let potential = cfg.potential()?;
    let (m, t) = (params.mass(), params.temperature());
    let rho = initial_profile(cfg, &space, potential, t);
    let f0 = PhaseSpaceField::from_fn(space, cfg.momentum.p_max, cfg.momentum.points, |p, r| {
        (-p * p / (2.0 * m * t)).exp() * rho(r)
    })?;
    let k = &cfg.kramers;
    let opts = KramersOptions {
        dt: k.dt,
        t_end: k.t_end,
        quantum_correction: k.quantum_correction,
        snapshot_every: k.snapshot_every,
    };
    let run = solve_kramers(&f0, potential, &params, &opts)?;
    for (i, snap) in run.snapshots.iter().enumerate() {
        out.write_table(&format!("density_{i:04}.csv"), &snap.marginal().to_table())?;
    }
    let last = run.last();
    out.write_table("phase_space_final.csv", &last.to_table())?;
    let mom = extract_moments(last, m);
    let mut table = CsvTable::new(["r", "density", "velocity", "pressure"]);
    table.meta("time", fmt_f64(mom.time));
    for (i, r) in space.positions().into_iter().enumerate() {
        table.push(vec![r, mom.density[i], mom.velocity[i], mom.pressure[i]]);
    }
    out.write_table("moments_final.csv", &table)?;
    out.write_table("residual_history.csv", &history_table(&run.manifest))?;

    let mut report = Report::default();
    solver_report(&mut report, &run.manifest);
    let boltzmann = DensityField::boltzmann(space, potential, t)?;
    report.diag("boltzmann_deviation", last.marginal().max_relative_deviation(&boltzmann));
    report.diag("cfl", run.cfl);
    report.diag("p2_over_m_t", last.momentum_moment(2) / (last.mass() * m * t));
    Ok(report)
}

pub fn smoluchowski(cfg: &RunConfig, out: &mut OutputDir) -> Result<Report, CliError> {
    let params = cfg.bath()?;
    let grid = cfg.space_grid()?;
    let potential = cfg.potential()?;
    let t = params.temperature();
    let rho = initial_profile(cfg, &grid, potential, t);
    let rho0 = DensityField::from_fn(grid, rho)?;
    let s = &cfg.smoluchowski;
    let opts = SmoluchowskiOptions {
        dt: s.dt,
        t_end: s.t_end,
        scheme: s.scheme,
        quantum_correction: s.quantum_correction,
        snapshot_every: s.snapshot_every,
    };
    let run = if s.bohm {
        solve_smoluchowski_quantum(&rho0, potential, &params, &opts)?
    } else {
        solve_smoluchowski(&rho0, potential, &params, &opts)?
    };
    for (i, snap) in run.snapshots.iter().enumerate() {
        out.write_table(&format!("density_{i:04}.csv"), &snap.to_table())?;
    }
    out.write_table("residual_history.csv", &history_table(&run.manifest))?;

    let mut report = Report::default();
    solver_report(&mut report, &run.manifest);
    let boltzmann = DensityField::boltzmann(grid, potential, t)?;
    let deviation = run.last().max_relative_deviation(&boltzmann);
    report.diag("boltzmann_deviation", deviation);
    report.diag("variance", run.last().variance());
    if let Some(tol) = s.equilibrium_tolerance {
        report.checks.push(Check::at_most("boltzmann_deviation", deviation, tol));
    }
    Ok(report)
}

/// SI evaluation: `params.mass` in kg and `params.gamma` in 1/s.
pub fn constants_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Result<Report, CliError> {
    let k = constants();
    let params = BathParams::new(cfg.params.mass, cfg.params.gamma, 0.0, 1.0, 0.0, 1)?;
    let td = universal_td(&params, &k);
    let mut table = CsvTable::new([
        "mass_kg",
        "gamma_per_s",
        "tau_s",
        "t_star_kelvin",
        "diffusion_m2_per_s",
        "product",
        "reference",
        "relative_deviation",
    ]);
    table.meta("c", fmt_f64(k.c));
    table.meta("e", fmt_f64(k.e));
    table.meta("eps0", fmt_f64(k.eps0));
    table.meta("hbar", fmt_f64(k.hbar_si));
    table.meta("k_B", fmt_f64(k.kb_si));
    table.meta("alpha", fmt_f64(k.alpha));
    table.push(vec![
        params.mass(),
        params.gamma(),
        k.radiation_time(params.mass()),
        td.t_star,
        td.diffusion,
        td.product,
        td.reference,
        td.relative_deviation,
    ]);
    out.write_table("constants.csv", &table)?;
    let mut report = Report::default();
    report.diag("t_star", td.t_star);
    report.diag("diffusion", td.diffusion);
    report.diag("product", td.product);
    report.diag("reference", td.reference);
    report.checks.push(Check::at_most("relative_deviation", td.relative_deviation, RESIDUAL_LIMIT));
    Ok(report)
}
