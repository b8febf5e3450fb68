//! Run configuration: one TOML file, every field defaulted, validated into
//! core types before any computation starts.

use serde::{Deserialize, Serialize};

use qbm_core::constants::constants;
use qbm_core::langevin::HistogramSpec;
use qbm_core::pde::Scheme;
use qbm_core::{BathParams, Potential, SpaceGrid, TimeGrid};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// Temperatures are energies (`k_B = 1`).
    #[default]
    Reduced,
    /// `params.temperature` is in kelvin and is multiplied by `k_B` on input;
    /// all other quantities are read as SI values.
    Si,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub mass: f64,
    pub gamma: f64,
    pub tau: f64,
    pub temperature: f64,
    pub hbar: f64,
    pub dim: usize,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            mass: 1.0,
            gamma: 1.0,
            tau: 0.0,
            temperature: 1.0,
            hbar: 0.0,
            dim: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub dt: f64,
    /// Number of samples; must be even.
    pub steps: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            dt: 0.01,
            steps: 1 << 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpaceConfig {
    pub length: f64,
    pub points: usize,
    pub periodic: bool,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig {
            length: 10.0,
            points: 101,
            periodic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentumConfig {
    pub p_max: f64,
    pub points: usize,
}

impl Default for MomentumConfig {
    fn default() -> Self {
        MomentumConfig {
            p_max: 8.0,
            points: 64,
        }
    }
}

/// Initial position density of the grid solvers; phase-space runs multiply
/// it by a Maxwellian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDensity {
    /// Boltzmann density of the configured potential.
    #[default]
    Equilibrium,
    Gaussian { center: f64, sigma: f64 },
    Uniform,
    /// `1 + amplitude cos(2 pi mode r / L)`.
    Cosine { amplitude: f64, mode: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Defaults to the solved cutoff when `hbar > 0`, else the Nyquist frequency.
    pub cutoff: Option<f64>,
    pub realizations: usize,
    pub bands: usize,
    pub hann: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            cutoff: None,
            realizations: 16,
            bands: 64,
            hann: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LangevinConfig {
    pub realizations: usize,
    pub burn_in: Option<f64>,
    pub blocks: usize,
    pub histogram: Option<HistogramSpec>,
    pub spectrum_bands: Option<usize>,
    /// Also write the trajectory of realization 0, started at rest at the origin.
    pub trajectory: bool,
}

impl Default for LangevinConfig {
    fn default() -> Self {
        LangevinConfig {
            realizations: 64,
            burn_in: None,
            blocks: 32,
            histogram: None,
            spectrum_bands: None,
            trajectory: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CutoffConfig {
    pub theta_min: f64,
    pub theta_max: f64,
    pub points: usize,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        CutoffConfig {
            theta_min: 0.01,
            theta_max: 10.0,
            points: 31,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig {
            omega_min: 1e-3,
            omega_max: 1e3,
            points: 61,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KramersConfig {
    /// `None` picks a stable step automatically.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub quantum_correction: bool,
    pub snapshot_every: usize,
}

impl Default for KramersConfig {
    fn default() -> Self {
        KramersConfig {
            dt: None,
            t_end: 10.0,
            quantum_correction: false,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoluchowskiConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub quantum_correction: bool,
    /// Add the Bohm drift (requires a strictly positive density).
    pub bohm: bool,
    pub snapshot_every: usize,
    /// Fail the run if the final density deviates from Boltzmann by more than this.
    pub equilibrium_tolerance: Option<f64>,
}

impl Default for SmoluchowskiConfig {
    fn default() -> Self {
        SmoluchowskiConfig {
            dt: 0.01,
            t_end: 10.0,
            scheme: Scheme::BackwardEuler,
            quantum_correction: false,
            bohm: false,
            snapshot_every: 0,
            equilibrium_tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub units: Units,
    pub seed: u64,
    pub params: ParamsConfig,
    pub time: TimeConfig,
    pub space: SpaceConfig,
    pub momentum: MomentumConfig,
    pub potential: Potential,
    pub initial: InitialDensity,
    pub noise: NoiseConfig,
    pub langevin: LangevinConfig,
    pub cutoff: CutoffConfig,
    pub dispersion: DispersionConfig,
    pub kramers: KramersConfig,
    pub smoluchowski: SmoluchowskiConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            units: Units::Reduced,
            seed: 0,
            params: ParamsConfig::default(),
            time: TimeConfig::default(),
            space: SpaceConfig::default(),
            momentum: MomentumConfig::default(),
            potential: Potential::harmonic(1.0),
            initial: InitialDensity::Equilibrium,
            noise: NoiseConfig::default(),
            langevin: LangevinConfig::default(),
            cutoff: CutoffConfig::default(),
            dispersion: DispersionConfig::default(),
            kramers: KramersConfig::default(),
            smoluchowski: SmoluchowskiConfig::default(),
        }
    }
}

/// Prefixes a core validation error with the config section it came from.
fn in_section(section: &str, err: qbm_core::Error) -> CliError {
    match err {
        qbm_core::Error::InvalidParameter { name, reason } => {
            CliError::Validation(format!("{section}.{name}: {reason}"))
        }
        other => CliError::Validation(format!("{section}: {other}")),
    }
}

fn require(ok: bool, field: &str, reason: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{field}: {reason}")))
    }
}

fn log_range_ok(lo: f64, hi: f64, points: usize) -> bool {
    lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo && points >= 1
}

/// `points` values from `lo` to `hi`, geometrically spaced and inclusive.
pub fn log_space(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (points - 1) as f64;
    (0..points).map(|k| lo * (step * k as f64).exp()).collect()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("a run config always serializes")
    }

    pub fn bath(&self) -> Result<BathParams, CliError> {
        let p = &self.params;
        let temperature = match self.units {
            Units::Reduced => p.temperature,
            Units::Si => p.temperature * constants().kb_si,
        };
        BathParams::new(p.mass, p.gamma, p.tau, temperature, p.hbar, p.dim)
            .map_err(|e| in_section("params", e))
    }

    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        TimeGrid::new(0.0, self.time.dt, self.time.steps).map_err(|e| in_section("time", e))
    }

    pub fn space_grid(&self) -> Result<SpaceGrid, CliError> {
        SpaceGrid::new(self.space.length, self.space.points, self.space.periodic)
            .map_err(|e| in_section("space", e))
    }

    pub fn potential(&self) -> Result<&Potential, CliError> {
        self.potential.validate().map_err(|e| in_section("potential", e))?;
        Ok(&self.potential)
    }

    /// Checks every section, so a bad field is reported before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        self.bath()?;
        self.time_grid()?;
        self.space_grid()?;
        self.potential()?;
        let m = &self.momentum;
        require(m.p_max.is_finite() && m.p_max > 0.0, "momentum.p_max", "must be finite and > 0")?;
        require(m.points >= 4, "momentum.points", "need at least 4")?;
        if let Some(c) = self.noise.cutoff {
            require(c.is_finite() && c >= 0.0, "noise.cutoff", "must be finite and >= 0")?;
        }
        require(self.noise.realizations >= 1, "noise.realizations", "must be >= 1")?;
        require(self.noise.bands >= 1, "noise.bands", "must be >= 1")?;
        require(self.langevin.realizations >= 1, "langevin.realizations", "must be >= 1")?;
        require(self.langevin.blocks >= 1, "langevin.blocks", "must be >= 1")?;
        if let Some(b) = self.langevin.burn_in {
            require(b.is_finite() && b >= 0.0, "langevin.burn_in", "must be finite and >= 0")?;
        }
        if let Some(h) = self.langevin.histogram {
            require(h.lo < h.hi && h.bins > 0 && h.stride > 0, "langevin.histogram", "need lo < hi, bins > 0, stride > 0")?;
        }
        let c = &self.cutoff;
        require(log_range_ok(c.theta_min, c.theta_max, c.points), "cutoff", "need 0 < theta_min <= theta_max and points >= 1")?;
        let d = &self.dispersion;
        require(log_range_ok(d.omega_min, d.omega_max, d.points), "dispersion", "need 0 < omega_min <= omega_max and points >= 1")?;
        if let Some(dt) = self.kramers.dt {
            require(dt.is_finite() && dt > 0.0, "kramers.dt", "must be finite and > 0")?;
        }
        require(self.kramers.t_end.is_finite() && self.kramers.t_end > 0.0, "kramers.t_end", "must be finite and > 0")?;
        let s = &self.smoluchowski;
        require(s.dt.is_finite() && s.dt > 0.0, "smoluchowski.dt", "must be finite and > 0")?;
        require(s.t_end.is_finite() && s.t_end > 0.0, "smoluchowski.t_end", "must be finite and > 0")?;
        if let Some(tol) = s.equilibrium_tolerance {
            require(tol > 0.0, "smoluchowski.equilibrium_tolerance", "must be > 0")?;
        }
        match self.initial {
            InitialDensity::Gaussian { sigma, center } => {
                require(sigma.is_finite() && sigma > 0.0, "initial.sigma", "must be finite and > 0")?;
                require(center.is_finite(), "initial.center", "must be finite")?;
            }
            InitialDensity::Cosine { amplitude, .. } => {
                require(amplitude.is_finite() && amplitude.abs() < 1.0, "initial.amplitude", "need |amplitude| < 1")?;
            }
            _ => {}
        }
        Ok(())
    }
}

/// Sets the dotted `key` of a serialized config to `value`, parsed as a
/// TOML value (bare words become strings).
pub fn set_key(config: &RunConfig, key: &str, value: &str) -> Result<RunConfig, CliError> {
    let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    set_value(config, key, parsed)
}

pub fn set_value(config: &RunConfig, key: &str, value: toml::Value) -> Result<RunConfig, CliError> {
    let mut root = toml::Table::try_from(config).expect("a run config always serializes");
    let parts: Vec<&str> = key.split('.').collect();
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut table = &mut root;
    for part in path {
        table = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Validation(format!("{key}: `{part}` is not a section")))?;
    }
    table.insert(last.to_string(), value);
    toml::Value::Table(root)
        .try_into()
        .map_err(|e| CliError::Validation(format!("{key}: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<f64>,
}

/// Parses `KEY=start:stop:steps[:log]`; `steps` counts the points, endpoints included.
pub fn parse_sweep(spec: &str) -> Result<Sweep, CliError> {
    let bad = |why: &str| CliError::Validation(format!("--sweep {spec}: {why}"));
    let (key, range) = spec.split_once('=').ok_or_else(|| bad("expected KEY=start:stop:steps"))?;
    let fields: Vec<&str> = range.split(':').collect();
    let log = match fields.len() {
        3 => false,
        4 if fields[3] == "log" => true,
        _ => return Err(bad("expected start:stop:steps or start:stop:steps:log")),
    };
    let start: f64 = fields[0].parse().map_err(|_| bad("start is not a number"))?;
    let stop: f64 = fields[1].parse().map_err(|_| bad("stop is not a number"))?;
    let steps: usize = fields[2].parse().map_err(|_| bad("steps is not a count"))?;
    if steps == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(bad("need finite bounds and steps >= 1"));
    }
    let values = if log {
        if !(start > 0.0 && stop > 0.0) {
            return Err(bad("log sweeps need positive bounds"));
        }
        if stop >= start {
            log_space(start, stop, steps)
        } else {
            let mut v = log_space(stop, start, steps);
            v.reverse();
            v
        }
    } else if steps == 1 {
        vec![start]
    } else {
        (0..steps)
            .map(|k| start + (stop - start) * k as f64 / (steps - 1) as f64)
            .collect()
    };
    Ok(Sweep {
        key: key.trim().to_string(),
        values,
    })
}
