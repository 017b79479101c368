//! Resolved run configuration: the single structure every invocation path
//! (flags or JSON config file) reduces to before anything is computed.
//!
//! The JSON schema mirrors these structs field for field; unknown keys are
//! rejected so a typo cannot silently fall back to a default.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use udw_cavity::experiments::{ExperimentConfig, OmegaRule, Scenario};
use udw_cavity::kinematics::Anchor;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "lower")]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4,
    Fig5a,
    Fig5b,
}

impl std::fmt::Display for FigureId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5a => "fig5a",
            FigureId::Fig5b => "fig5b",
        };
        write!(f, "{name}")
    }
}

/// Numerical overrides applied on top of the library defaults.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsOverrides {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_subdivisions: Option<usize>,
    pub max_phase_per_panel: Option<f64>,
    pub n_max: Option<u32>,
    pub tail_rel_tol: Option<f64>,
    pub validity_threshold: Option<f64>,
}

impl NumericsOverrides {
    pub fn experiment_config(&self) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        if let Some(v) = self.abs_tol {
            cfg.quad.abs_tol = v;
        }
        if let Some(v) = self.rel_tol {
            cfg.quad.rel_tol = v;
        }
        if let Some(v) = self.max_subdivisions {
            cfg.quad.max_subdivisions = v;
        }
        if let Some(v) = self.max_phase_per_panel {
            cfg.quad.max_phase_per_panel = v;
        }
        if let Some(v) = self.n_max {
            cfg.n_max = v;
        }
        if let Some(v) = self.tail_rel_tol {
            cfg.tail_rel_tol = v;
        }
        if let Some(v) = self.validity_threshold {
            cfg.validity_threshold = v;
        }
        cfg
    }
}

/// A radius or length grid: `lo:hi:points[:geom|lin]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Geometric,
    Linear,
}

impl GridSpec {
    pub fn materialize(&self) -> Result<Vec<f64>, CliError> {
        if self.points < 2 || !(self.lo > 0.0) || !(self.hi > self.lo) {
            return Err(CliError::validation(format!(
                "invalid grid {}:{}:{}; need 0 < lo < hi and at least 2 points",
                self.lo, self.hi, self.points
            )));
        }
        Ok(match self.spacing {
            Spacing::Geometric => udw_cavity::experiments::geometric_grid(self.lo, self.hi, self.points),
            Spacing::Linear => udw_cavity::experiments::linear_grid(self.lo, self.hi, self.points),
        })
    }
}

impl std::str::FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 && parts.len() != 4 {
            return Err(format!(
                "grid must be lo:hi:points[:geom|lin], got '{s}'"
            ));
        }
        let lo: f64 = parts[0].parse().map_err(|e| format!("grid lo: {e}"))?;
        let hi: f64 = parts[1].parse().map_err(|e| format!("grid hi: {e}"))?;
        let points: usize = parts[2].parse().map_err(|e| format!("grid points: {e}"))?;
        let spacing = match parts.get(3).copied() {
            None | Some("geom") => Spacing::Geometric,
            Some("lin") => Spacing::Linear,
            Some(other) => return Err(format!("unknown grid spacing '{other}'")),
        };
        Ok(GridSpec {
            lo,
            hi,
            points,
            spacing,
        })
    }
}

fn default_mass() -> f64 {
    1.0
}
fn default_coupling() -> f64 {
    0.01
}
fn default_resonant_mode() -> u32 {
    6
}

/// Detector gap selection: resonant mode index or explicit value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaSpec {
    #[serde(default)]
    pub mode: Option<u32>,
    #[serde(default)]
    pub omega: Option<f64>,
}

impl OmegaSpec {
    pub fn rule(&self) -> Result<OmegaRule, CliError> {
        match (self.mode, self.omega) {
            (Some(mode), None) => Ok(OmegaRule::ResonantMode(mode)),
            (None, Some(w)) => Ok(OmegaRule::Explicit(w)),
            (None, None) => Ok(OmegaRule::ResonantMode(default_resonant_mode())),
            (Some(_), Some(_)) => Err(CliError::validation(
                "specify either --omega-mode or --omega, not both".into(),
            )),
        }
    }
}

impl Default for OmegaSpec {
    fn default() -> Self {
        OmegaSpec {
            mode: Some(default_resonant_mode()),
            omega: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureConfig {
    pub id: FigureId,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    #[serde(default)]
    pub omega: OmegaSpec,
    /// Override of the figure's pinned cavity length set.
    #[serde(default)]
    pub lengths: Option<Vec<f64>>,
    /// Override of the figure's pinned radius grid.
    #[serde(default)]
    pub radius_grid: Option<GridSpec>,
    /// Override of the transit-fraction count (fig3).
    #[serde(default)]
    pub profile_points: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub entrance_radius: f64,
    pub length: f64,
    #[serde(default = "default_mass")]
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    pub scenario: Scenario,
    pub length: f64,
    #[serde(default)]
    pub entrance_radius: Option<f64>,
    /// Explicit proper acceleration (Rindler only; otherwise derived from
    /// the entrance radius and anchor).
    #[serde(default)]
    pub accel: Option<f64>,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    #[serde(default)]
    pub omega: OmegaSpec,
    #[serde(default)]
    pub anchor: Option<Anchor>,
    /// Fraction of the transit time to integrate (default: full transit).
    #[serde(default)]
    pub tau_fraction: Option<f64>,
    /// Leading modes verified by explicit double quadrature.
    #[serde(default)]
    pub verify_modes: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub scenario: Scenario,
    pub length: f64,
    #[serde(default)]
    pub entrance_radius: Option<f64>,
    #[serde(default)]
    pub accel: Option<f64>,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default)]
    pub anchor: Option<Anchor>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    #[serde(default = "default_profile_radius")]
    pub entrance_radius: f64,
    #[serde(default = "default_profile_length")]
    pub length: f64,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    #[serde(default)]
    pub omega: OmegaSpec,
    #[serde(default)]
    pub anchor: Option<Anchor>,
    #[serde(default)]
    pub points: Option<usize>,
}

fn default_profile_radius() -> f64 {
    10.0
}
fn default_profile_length() -> f64 {
    5.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "lower")]
pub enum SweepKind {
    Radius,
    Ratio,
    Estimator,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub lengths: Vec<f64>,
    pub radius_grid: GridSpec,
    /// Length grid for estimator sweeps (ignored otherwise).
    #[serde(default)]
    pub length_grid: Option<GridSpec>,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    #[serde(default)]
    pub omega: OmegaSpec,
    #[serde(default)]
    pub anchor: Option<Anchor>,
    #[serde(default)]
    pub scenario: Option<Scenario>,
}

/// Everything a run needs, fully resolved and validated up front.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandConfig,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub numerics: NumericsOverrides,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CommandConfig {
    Figure(FigureConfig),
    Estimator(EstimatorConfig),
    Transition(TransitionConfig),
    Trajectory(TrajectoryConfig),
    Profile(ProfileConfig),
    Sweep(SweepConfig),
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CommandConfig::Figure(_) => "figure",
            CommandConfig::Estimator(_) => "estimator",
            CommandConfig::Transition(_) => "transition",
            CommandConfig::Trajectory(_) => "trajectory",
            CommandConfig::Profile(_) => "profile",
            CommandConfig::Sweep(_) => "sweep",
        }
    }

    /// Output file stem for the CSV and manifest.
    pub fn stem(&self) -> String {
        match self {
            CommandConfig::Figure(f) => f.id.to_string(),
            other => other.name().to_string(),
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {path:?}: {e}")))?;
        let mut deserializer = serde_json::Deserializer::from_str(&text);
        serde_path_to_error(&mut deserializer)
    }
}

/// Deserialize with the failing key path in the message, so a malformed
/// value names what was wrong.
fn serde_path_to_error(
    deserializer: &mut serde_json::Deserializer<serde_json::de::StrRead<'_>>,
) -> Result<RunConfig, CliError> {
    match RunConfig::deserialize(deserializer) {
        Ok(cfg) => Ok(cfg),
        Err(e) => Err(CliError::validation(format!("invalid config file: {e}"))),
    }
}
