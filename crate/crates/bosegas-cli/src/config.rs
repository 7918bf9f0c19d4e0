//! Run configuration: human-editable TOML with a strict schema (unknown keys
//! are rejected), dotted-path overrides, and a canonical hash for the
//! manifest.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, ExitKind};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub scattering: ScatteringConfig,
    #[serde(default)]
    pub condensate: CondensateConfig,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub observables: Vec<ObservableConfig>,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub dim: usize,
    pub points_per_axis: usize,
    pub box_length: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    /// "zero" or "compact-bump".
    pub shape: String,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_support")]
    pub support_radius: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_particles")]
    pub particle_number: f64,
    /// Optional N sweep for the scattering / condensate convergence reports.
    #[serde(default)]
    pub particle_sweep: Vec<f64>,
}

fn default_amplitude() -> f64 {
    2.0
}
fn default_support() -> f64 {
    0.5
}
fn default_beta() -> f64 {
    0.5
}
fn default_particles() -> f64 {
    1.0e4
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringConfig {
    /// Neumann ball radius; 0 means "box length / 4".
    #[serde(default)]
    pub ell: f64,
    #[serde(default = "default_radial_points")]
    pub radial_points: usize,
}

fn default_radial_points() -> usize {
    12_000
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        Self {
            ell: 0.0,
            radial_points: default_radial_points(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondensateConfig {
    #[serde(default = "default_width")]
    pub initial_width: f64,
    /// "cubic" or "linear-as-printed".
    #[serde(default = "default_sigma_mode")]
    pub sigma_mode: String,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    /// 0 means the documented default 1e-3 (L / 2 pi)^2.
    #[serde(default)]
    pub dt: f64,
}

fn default_width() -> f64 {
    0.8
}
fn default_sigma_mode() -> String {
    "cubic".into()
}
fn default_t_final() -> f64 {
    0.5
}

impl Default for CondensateConfig {
    fn default() -> Self {
        Self {
            initial_width: default_width(),
            sigma_mode: default_sigma_mode(),
            t_final: default_t_final(),
            dt: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default = "default_evolve_t")]
    pub t_final: f64,
    #[serde(default = "default_evolve_dt")]
    pub dt: f64,
    /// "neumann-limit" or "as-printed".
    #[serde(default = "default_variant")]
    pub omega_variant: String,
    #[serde(default = "default_stride")]
    pub output_stride: usize,
    #[serde(default = "default_defect_limit")]
    pub defect_limit: f64,
    /// Write binary kernel snapshots of the final pair and family.
    #[serde(default = "default_true")]
    pub save_snapshots: bool,
}

fn default_evolve_t() -> f64 {
    1.0
}
fn default_evolve_dt() -> f64 {
    1e-3
}
fn default_variant() -> String {
    "neumann-limit".into()
}
fn default_stride() -> usize {
    1
}
fn default_defect_limit() -> f64 {
    1e-6
}
fn default_true() -> bool {
    true
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            t_final: default_evolve_t(),
            dt: default_evolve_dt(),
            omega_variant: default_variant(),
            output_stride: default_stride(),
            defect_limit: default_defect_limit(),
            save_snapshots: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    pub name: String,
    /// "position-window" or "momentum-window".
    pub kind: String,
    #[serde(default)]
    pub center: Vec<f64>,
    #[serde(default = "default_obs_width")]
    pub width: f64,
    #[serde(default = "default_obs_smoothing")]
    pub smoothing: f64,
    #[serde(default = "default_k_cut")]
    pub k_cut: f64,
}

fn default_obs_width() -> f64 {
    1.0
}
fn default_obs_smoothing() -> f64 {
    0.25
}
fn default_k_cut() -> f64 {
    3.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_oracle_dt")]
    pub dt: f64,
    #[serde(default = "default_oracle_t")]
    pub t_final: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_leakage")]
    pub leakage_limit: f64,
    #[serde(default = "default_probe")]
    pub probe_sector: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_modes() -> usize {
    2
}
fn default_n_max() -> usize {
    14
}
fn default_oracle_dt() -> f64 {
    1e-4
}
fn default_oracle_t() -> f64 {
    0.5
}
fn default_tolerance() -> f64 {
    1e-6
}
fn default_leakage() -> f64 {
    1e-8
}
fn default_probe() -> usize {
    2
}
fn default_samples() -> usize {
    10
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            modes: default_modes(),
            n_max: default_n_max(),
            dt: default_oracle_dt(),
            t_final: default_oracle_t(),
            tolerance: default_tolerance(),
            leakage_limit: default_leakage(),
            probe_sector: default_probe(),
            samples: default_samples(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::new(ExitKind::Config, format!("cannot read config {path:?}: {e}"))
        })?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut value: toml::Value = text
            .parse()
            .map_err(|e| CliError::new(ExitKind::Config, format!("config parse error: {e}")))?;
        for ov in overrides {
            apply_override(&mut value, ov)?;
        }
        let cfg: RunConfig = value
            .try_into()
            .map_err(|e| CliError::new(ExitKind::Config, format!("config schema error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::new(ExitKind::Config, msg));
        if !(1..=3).contains(&self.lattice.dim) {
            return bad(format!("lattice.dim must be 1..=3, got {}", self.lattice.dim));
        }
        if self.lattice.points_per_axis < 2 || self.lattice.points_per_axis % 2 != 0 {
            return bad("lattice.points_per_axis must be even and >= 2".into());
        }
        if self.lattice.box_length <= 0.0 {
            return bad("lattice.box_length must be positive".into());
        }
        match self.potential.shape.as_str() {
            "zero" | "compact-bump" => {}
            other => return bad(format!("potential.shape must be zero|compact-bump, got {other}")),
        }
        if self.potential.amplitude < 0.0 {
            return bad("potential.amplitude must be nonnegative".into());
        }
        if !(0.0 < self.potential.beta && self.potential.beta < 1.0) {
            return bad("potential.beta must lie in (0, 1)".into());
        }
        match self.condensate.sigma_mode.as_str() {
            "cubic" | "linear-as-printed" => {}
            other => {
                return bad(format!(
                    "condensate.sigma_mode must be cubic|linear-as-printed, got {other}"
                ))
            }
        }
        match self.evolve.omega_variant.as_str() {
            "neumann-limit" | "as-printed" => {}
            other => {
                return bad(format!(
                    "evolve.omega_variant must be neumann-limit|as-printed, got {other}"
                ))
            }
        }
        for obs in &self.observables {
            match obs.kind.as_str() {
                "position-window" | "momentum-window" => {}
                other => return bad(format!("observable kind {other} unknown")),
            }
        }
        Ok(())
    }

    pub fn ell(&self) -> f64 {
        if self.scattering.ell > 0.0 {
            self.scattering.ell
        } else {
            self.lattice.box_length / 4.0
        }
    }

    pub fn condensate_dt(&self) -> f64 {
        if self.condensate.dt > 0.0 {
            self.condensate.dt
        } else {
            let l = self.lattice.box_length / (2.0 * std::f64::consts::PI);
            1e-3 * l * l
        }
    }

    /// Canonical serialization (field order fixed by the struct layout).
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_toml().as_bytes());
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }
}

/// Apply a `--set path.to.key=value` override onto the raw TOML tree.
fn apply_override(root: &mut toml::Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| {
        CliError::new(
            ExitKind::Config,
            format!("override `{spec}` is not of the form key=value"),
        )
    })?;
    let parsed: toml::Value = match format!("v = {raw}").parse::<toml::Value>() {
        Ok(toml::Value::Table(t)) => t.get("v").cloned().unwrap(),
        _ => toml::Value::String(raw.to_string()),
    };
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            CliError::new(ExitKind::Config, format!("override path `{path}` hits a non-table"))
        })?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Ok(())
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.canonical_toml())
    }
}

/// A complete, documented default configuration (also used by tests).
pub fn example_config() -> &'static str {
    r#"# bosegas run configuration

[lattice]
dim = 1
points_per_axis = 128
box_length = 8.0

[potential]
shape = "compact-bump"
amplitude = 2.0
support_radius = 0.5
beta = 0.5
particle_number = 10000.0
particle_sweep = [100.0, 1000.0, 10000.0]

[scattering]
ell = 2.0
radial_points = 12000

[condensate]
initial_width = 0.8
sigma_mode = "cubic"
t_final = 0.5

[evolve]
t_final = 1.0
dt = 1e-3
omega_variant = "neumann-limit"
output_stride = 1
defect_limit = 1e-6
save_snapshots = true

[[observables]]
name = "left-window"
kind = "position-window"
center = [3.0]
width = 1.5
smoothing = 0.25

[[observables]]
name = "slow-modes"
kind = "momentum-window"
k_cut = 3.0
smoothing = 0.5

[oracle]
modes = 2
n_max = 14
dt = 1e-4
t_final = 0.5
tolerance = 1e-6
leakage_limit = 1e-8
probe_sector = 2
samples = 10

[run]
seed = 7
"#
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_parses_and_roundtrips() {
        let cfg = RunConfig::parse(example_config(), &[]).unwrap();
        let canon = cfg.canonical_toml();
        let cfg2 = RunConfig::parse(&canon, &[]).unwrap();
        assert_eq!(cfg.config_hash(), cfg2.config_hash());
        assert_eq!(cfg.ell(), 2.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "[lattice]\ndim = 1\npoints_per_axis = 16\nbox_length = 4.0\nbogus = 3\n[potential]\nshape = \"zero\"\n";
        assert!(RunConfig::parse(text, &[]).is_err());
    }

    #[test]
    fn overrides_apply_and_are_checked() {
        let cfg = RunConfig::parse(
            example_config(),
            &["lattice.points_per_axis=64".into(), "potential.beta=0.3333".into()],
        )
        .unwrap();
        assert_eq!(cfg.lattice.points_per_axis, 64);
        assert!((cfg.potential.beta - 0.3333).abs() < 1e-12);
        // unknown override key is a schema error
        assert!(RunConfig::parse(example_config(), &["lattice.nope=1".into()]).is_err());
        // invalid value is a validation error
        assert!(RunConfig::parse(example_config(), &["potential.beta=1.5".into()]).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::parse(example_config(), &[]).unwrap();
        let b = RunConfig::parse(example_config(), &["run.seed=8".into()]).unwrap();
        assert_ne!(a.config_hash(), b.config_hash());
    }
}
