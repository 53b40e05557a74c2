//! Scenario configuration files.

use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ramsey_quench::params::{constants, derive_dimensionless, TrapSpec};
use ramsey_quench::DimensionlessParams64;

/// A configuration problem, tagged with the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error in `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub species: Species,
    pub trap: Trap,
    #[serde(default)]
    pub time: TimeGrid,
    #[serde(default)]
    pub spectrum: SpectrumSettings,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub revivals: RevivalSettings,
    #[serde(default)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Species {
    /// Ion mass in atomic mass units.
    #[serde(default = "default_mass")]
    pub mass_u: f64,
    /// Ion charge in elementary charges.
    #[serde(default = "default_charge")]
    pub charge_e: f64,
}

fn default_mass() -> f64 {
    constants::BERYLLIUM_9_MASS
}

fn default_charge() -> f64 {
    1.0
}

impl Default for Species {
    fn default() -> Self {
        Self {
            mass_u: default_mass(),
            charge_e: default_charge(),
        }
    }
}

/// Trap frequencies are ordinary frequencies; ν = 2π × value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trap {
    pub ion_count: usize,
    pub nu_x_mhz: f64,
    pub nu_y_mhz: Option<f64>,
    pub nu_dip_khz: Option<f64>,
    pub g: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default = "default_t_max")]
    pub t_max_us: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_t_max() -> f64 {
    10.0
}

fn default_samples() -> usize {
    2001
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            t_max_us: default_t_max(),
            samples: default_samples(),
        }
    }
}

/// Spectrum window; both fields default from the e-state mode frequencies.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSettings {
    pub window_us: Option<f64>,
    pub samples: Option<usize>,
}

/// Evenly spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| self.start + (self.stop - self.start) * k as f64 / last)
            .collect()
    }

    fn validate(&self, field: &str) -> Result<(), ConfigError> {
        if self.steps == 0 {
            return Err(ConfigError::new(format!("{field}.steps"), "grid must not be empty"));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(ConfigError::new(field, "start and stop must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub g: Option<Axis>,
    pub delta: Option<Axis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RevivalSettings {
    #[serde(default = "default_ion_counts")]
    pub ion_counts: Vec<usize>,
    /// Length of each record in periods of the lowest e-state mode.
    #[serde(default = "default_periods")]
    pub periods: f64,
    #[serde(default = "default_revival_samples")]
    pub samples: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_ion_counts() -> Vec<usize> {
    vec![3, 5]
}

fn default_periods() -> f64 {
    3.0
}

fn default_revival_samples() -> usize {
    30001
}

fn default_threshold() -> f64 {
    ramsey_quench::visibility::REVIVAL_THRESHOLD
}

impl Default for RevivalSettings {
    fn default() -> Self {
        Self {
            ion_counts: default_ion_counts(),
            periods: default_periods(),
            samples: default_revival_samples(),
            threshold: default_threshold(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: Option<PathBuf>,
    pub format: Option<String>,
}

/// How the single operating point was specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointSpec {
    Physical { nu_y: f64, nu_dip: f64 },
    Dimensionless { g: f64, delta: f64 },
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let field = e
                .span()
                .map(|s| locate(text, s.start))
                .unwrap_or_else(|| "<document>".into());
            ConfigError::new(field, message)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |v: f64, field: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::new(field, format!("must be positive, got {v}")))
            }
        };
        positive(self.species.mass_u, "species.mass_u")?;
        positive(self.species.charge_e, "species.charge_e")?;
        positive(self.trap.nu_x_mhz, "trap.nu_x_mhz")?;
        check_ion_count(self.trap.ion_count, "trap.ion_count")?;
        self.point_spec()?;
        positive(self.time.t_max_us, "time.t_max_us")?;
        if self.time.samples < 2 {
            return Err(ConfigError::new("time.samples", "need at least 2 samples"));
        }
        if let Some(w) = self.spectrum.window_us {
            positive(w, "spectrum.window_us")?;
        }
        if let Some(m) = self.spectrum.samples {
            if m < 3 {
                return Err(ConfigError::new("spectrum.samples", "need at least 3 samples"));
            }
        }
        if let Some(a) = &self.sweep.g {
            a.validate("sweep.g")?;
        }
        if let Some(a) = &self.sweep.delta {
            a.validate("sweep.delta")?;
            if a.start < 0.0 || a.stop < 0.0 {
                return Err(ConfigError::new("sweep.delta", "delta must be non-negative"));
            }
        }
        if self.revivals.ion_counts.is_empty() {
            return Err(ConfigError::new("revivals.ion_counts", "list must not be empty"));
        }
        for &n in &self.revivals.ion_counts {
            check_ion_count(n, "revivals.ion_counts")?;
        }
        positive(self.revivals.periods, "revivals.periods")?;
        positive(self.revivals.threshold, "revivals.threshold")?;
        if self.revivals.samples < 3 {
            return Err(ConfigError::new("revivals.samples", "need at least 3 samples"));
        }
        if let Some(f) = &self.output.format {
            if f != "csv" {
                return Err(ConfigError::new("output.format", format!("unsupported format `{f}`, only `csv`")));
            }
        }
        Ok(())
    }

    /// The operating point, if one is given. Mixing the physical and the
    /// dimensionless pair, or giving half a pair, is an error.
    pub fn point_spec(&self) -> Result<Option<PointSpec>, ConfigError> {
        let t = &self.trap;
        let physical = t.nu_y_mhz.is_some() || t.nu_dip_khz.is_some();
        let reduced = t.g.is_some() || t.delta.is_some();
        match (physical, reduced) {
            (true, true) => Err(ConfigError::new(
                "trap",
                "give either (nu_y_mhz, nu_dip_khz) or (g, delta), not both",
            )),
            (false, false) => Ok(None),
            (true, false) => {
                let nu_y = t.nu_y_mhz.ok_or_else(|| ConfigError::new("trap.nu_y_mhz", "missing; nu_dip_khz needs it"))?;
                let nu_dip = t.nu_dip_khz.ok_or_else(|| ConfigError::new("trap.nu_dip_khz", "missing; nu_y_mhz needs it"))?;
                if !(nu_y > 0.0) {
                    return Err(ConfigError::new("trap.nu_y_mhz", "must be positive"));
                }
                if !(nu_dip >= 0.0) {
                    return Err(ConfigError::new("trap.nu_dip_khz", "must be non-negative"));
                }
                Ok(Some(PointSpec::Physical {
                    nu_y: TAU * nu_y * 1e6,
                    nu_dip: TAU * nu_dip * 1e3,
                }))
            }
            (false, true) => {
                let g = t.g.ok_or_else(|| ConfigError::new("trap.g", "missing; delta needs it"))?;
                let delta = t.delta.ok_or_else(|| ConfigError::new("trap.delta", "missing; g needs it"))?;
                if !(g > -1.0) || !g.is_finite() {
                    return Err(ConfigError::new("trap.g", "must be finite and > -1"));
                }
                if !(delta >= 0.0) || !delta.is_finite() {
                    return Err(ConfigError::new("trap.delta", "must be finite and non-negative"));
                }
                Ok(Some(PointSpec::Dimensionless { g, delta }))
            }
        }
    }

    /// The operating point; required by single-point commands.
    pub fn require_point(&self) -> Result<PointSpec, ConfigError> {
        self.point_spec()?
            .ok_or_else(|| ConfigError::new("trap", "give either (nu_y_mhz, nu_dip_khz) or (g, delta)"))
    }

    pub fn nu_x(&self) -> f64 {
        TAU * self.trap.nu_x_mhz * 1e6
    }

    /// Dimensionless parameters of the operating point for `ion_count` ions.
    pub fn resolve(&self, ion_count: usize, alpha_c: f64) -> Result<DimensionlessParams64, ConfigError> {
        let spec = match self.require_point()? {
            PointSpec::Physical { nu_y, nu_dip } => TrapSpec {
                ion_count,
                ion_mass: self.species.mass_u,
                ion_charge: self.species.charge_e,
                nu_x: self.nu_x(),
                nu_y,
                nu_dip,
            },
            PointSpec::Dimensionless { g, delta } => TrapSpec::from_g_delta(
                ion_count,
                self.species.mass_u,
                self.species.charge_e,
                self.nu_x(),
                g,
                delta,
                alpha_c,
            )
            .map_err(|e| ConfigError::new("trap", e.to_string()))?,
        };
        derive_dimensionless(&spec, alpha_c).map_err(|e| ConfigError::new("trap", e.to_string()))
    }

    /// Unit conversions, which do not depend on the operating point.
    pub fn units(&self) -> Result<DimensionlessParams64, ConfigError> {
        let spec = TrapSpec {
            ion_count: self.trap.ion_count,
            ion_mass: self.species.mass_u,
            ion_charge: self.species.charge_e,
            nu_x: self.nu_x(),
            nu_y: self.nu_x(),
            nu_dip: 0.0,
        };
        derive_dimensionless(&spec, 1.0).map_err(|e| ConfigError::new("trap", e.to_string()))
    }

    /// Sweep values along g, falling back to the operating point.
    pub fn g_values(&self, alpha_c: f64) -> Result<Vec<f64>, ConfigError> {
        match &self.sweep.g {
            Some(a) => Ok(a.values()),
            None => Ok(vec![self.point_g_delta(alpha_c, "sweep.g")?.0]),
        }
    }

    pub fn delta_values(&self, alpha_c: f64) -> Result<Vec<f64>, ConfigError> {
        match &self.sweep.delta {
            Some(a) => Ok(a.values()),
            None => Ok(vec![self.point_g_delta(alpha_c, "sweep.delta")?.1]),
        }
    }

    fn point_g_delta(&self, alpha_c: f64, wanted: &str) -> Result<(f64, f64), ConfigError> {
        match self.point_spec()? {
            Some(PointSpec::Dimensionless { g, delta }) => Ok((g, delta)),
            Some(PointSpec::Physical { nu_y, nu_dip }) => {
                let nu_c2 = self.nu_x().powi(2) * alpha_c;
                Ok((nu_y * nu_y / nu_c2 - 1.0, nu_dip * nu_dip / nu_c2))
            }
            None => Err(ConfigError::new(wanted, "missing, and no operating point in [trap] to fall back on")),
        }
    }
}

fn check_ion_count(n: usize, field: &str) -> Result<(), ConfigError> {
    if n < 3 || n % 2 == 0 {
        Err(ConfigError::new(field, format!("ion count must be odd and >= 3, got {n}")))
    } else {
        Ok(())
    }
}

/// Best-effort `section.key` name for a byte offset in a TOML document.
fn locate(text: &str, offset: usize) -> String {
    let mut section = String::new();
    let mut key = String::new();
    let mut pos = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if trimmed.starts_with('[') && trimmed.ends_with(']') {
            section = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            key.clear();
        } else if let Some((k, _)) = trimmed.split_once('=') {
            key = k.trim().to_string();
        }
        if offset < pos + line.len() {
            break;
        }
        pos += line.len();
    }
    match (section.is_empty(), key.is_empty()) {
        (true, true) => "<document>".into(),
        (true, false) => key,
        (false, true) => section,
        (false, false) => format!("{section}.{key}"),
    }
}
