//! Command-line surface. Every subcommand resolves into the same
//! [`RunConfig`] a JSON config file produces.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use udw_cavity::experiments::Scenario;
use udw_cavity::kinematics::Anchor;

use crate::config::{
    CommandConfig, EstimatorConfig, FigureConfig, FigureId, GridSpec, NumericsOverrides,
    OmegaSpec, ProfileConfig, RunConfig, SweepConfig, SweepKind, TrajectoryConfig,
    TransitionConfig,
};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "udw-cavity",
    about = "Vacuum response of an Unruh-DeWitt detector crossing a Dirichlet cavity:\n\
             radial free fall outside a Schwarzschild black hole vs. matched uniform\n\
             acceleration in flat spacetime. Emits deterministic CSV tables plus a JSON\n\
             run manifest.",
    after_help = "Output directory defaults to $UDW_CAVITY_OUT, then the working directory.\n\
                  Exit codes: 0 success, 2 validation error, 3 numerical-accuracy failure."
)]
pub struct Cli {
    /// Load a full run configuration from a JSON file instead of flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory for CSV and manifest files.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Worker threads (default: all available cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(flatten)]
    pub numerics: NumericsArgs,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, Default, Args)]
pub struct NumericsArgs {
    /// Absolute quadrature tolerance.
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    /// Panel-evaluation budget per integral.
    #[arg(long, global = true)]
    pub max_subdivisions: Option<usize>,
    /// Maximum estimated phase change per quadrature panel (radians).
    #[arg(long, global = true)]
    pub max_phase: Option<f64>,
    /// Initial mode-sum truncation.
    #[arg(long, global = true)]
    pub n_max: Option<u32>,
    /// Relative tail tolerance of the mode sum.
    #[arg(long, global = true)]
    pub tail_rel_tol: Option<f64>,
    /// Estimator value above which rows are flagged as outside the
    /// quasi-local regime.
    #[arg(long, global = true)]
    pub validity_threshold: Option<f64>,
}

impl NumericsArgs {
    fn overrides(&self) -> NumericsOverrides {
        NumericsOverrides {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_subdivisions: self.max_subdivisions,
            max_phase_per_panel: self.max_phase,
            n_max: self.n_max,
            tail_rel_tol: self.tail_rel_tol,
            validity_threshold: self.validity_threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, Args)]
pub struct OmegaArgs {
    /// Cavity mode the detector gap is resonant with.
    #[arg(long = "omega-mode", value_name = "N")]
    pub omega_mode: Option<u32>,
    /// Explicit detector gap (overrides --omega-mode).
    #[arg(long, value_name = "W", conflicts_with = "omega_mode")]
    pub omega: Option<f64>,
}

impl OmegaArgs {
    fn spec(&self) -> OmegaSpec {
        match (self.omega_mode, self.omega) {
            (None, None) => OmegaSpec::default(),
            (mode, omega) => OmegaSpec { mode, omega },
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reproduce one of the pinned figure datasets.
    Figure {
        /// Which figure to reproduce.
        id: FigureId,
        /// Black-hole mass (all other inputs are interpreted in these units).
        #[arg(long = "m", default_value_t = 1.0)]
        mass: f64,
        /// Coupling strength.
        #[arg(long = "lambda", default_value_t = 0.01)]
        coupling: f64,
        #[command(flatten)]
        omega: OmegaArgs,
        /// Override the figure's pinned cavity length set.
        #[arg(long = "L-list", value_delimiter = ',', value_name = "L1,L2,...")]
        lengths: Option<Vec<f64>>,
        /// Override the figure's pinned radius grid (lo:hi:points[:geom|lin]).
        #[arg(long = "R-grid", value_name = "GRID")]
        radius_grid: Option<GridSpec>,
        /// Override the transit-fraction count (fig3 only).
        #[arg(long)]
        profile_points: Option<usize>,
    },

    /// Quasi-local validity estimator for a single cavity placement.
    Estimator {
        /// Cavity entrance radius.
        #[arg(long = "R")]
        entrance_radius: f64,
        /// Cavity proper length.
        #[arg(long = "L")]
        length: f64,
        /// Black-hole mass.
        #[arg(long = "m", default_value_t = 1.0)]
        mass: f64,
    },

    /// Transition probability for a single configuration.
    Transition {
        /// Worldline scenario.
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        /// Cavity proper length.
        #[arg(long = "L")]
        length: f64,
        /// Cavity entrance radius (required for schwarzschild; optional for
        /// rindler when --a is given).
        #[arg(long = "R")]
        entrance_radius: Option<f64>,
        /// Explicit proper acceleration (rindler only).
        #[arg(long = "a")]
        accel: Option<f64>,
        /// Black-hole mass.
        #[arg(long = "m", default_value_t = 1.0)]
        mass: f64,
        /// Coupling strength.
        #[arg(long = "lambda", default_value_t = 0.01)]
        coupling: f64,
        #[command(flatten)]
        omega: OmegaArgs,
        /// Acceleration-matching anchor.
        #[arg(long, value_enum)]
        anchor: Option<AnchorArg>,
        /// Integrate only this fraction of the transit.
        #[arg(long)]
        tau_fraction: Option<f64>,
        /// Leading modes verified by explicit double quadrature.
        #[arg(long)]
        verify_modes: Option<u32>,
    },

    /// Worldline samples in cavity-frame coordinates.
    Trajectory {
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        #[arg(long = "L")]
        length: f64,
        #[arg(long = "R")]
        entrance_radius: Option<f64>,
        #[arg(long = "a")]
        accel: Option<f64>,
        #[arg(long = "m", default_value_t = 1.0)]
        mass: f64,
        #[arg(long, value_enum)]
        anchor: Option<AnchorArg>,
        /// Number of sample points across the transit.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },

    /// Excitation probability against the fraction of the transit
    /// completed, for both scenarios.
    Profile {
        #[arg(long = "R", default_value_t = 10.0)]
        entrance_radius: f64,
        #[arg(long = "L", default_value_t = 5.0)]
        length: f64,
        #[arg(long = "m", default_value_t = 1.0)]
        mass: f64,
        #[arg(long = "lambda", default_value_t = 0.01)]
        coupling: f64,
        #[command(flatten)]
        omega: OmegaArgs,
        #[arg(long, value_enum)]
        anchor: Option<AnchorArg>,
        /// Number of transit fractions.
        #[arg(long)]
        points: Option<usize>,
    },

    /// Custom parameter sweep.
    Sweep {
        #[arg(long, value_enum)]
        kind: SweepKind,
        /// Cavity lengths.
        #[arg(long = "L-list", value_delimiter = ',', value_name = "L1,L2,...")]
        lengths: Vec<f64>,
        /// Radius grid (lo:hi:points[:geom|lin]).
        #[arg(long = "R-grid", value_name = "GRID")]
        radius_grid: GridSpec,
        /// Length grid for estimator sweeps.
        #[arg(long = "L-grid", value_name = "GRID")]
        length_grid: Option<GridSpec>,
        #[arg(long = "m", default_value_t = 1.0)]
        mass: f64,
        #[arg(long = "lambda", default_value_t = 0.01)]
        coupling: f64,
        #[command(flatten)]
        omega: OmegaArgs,
        #[arg(long, value_enum)]
        anchor: Option<AnchorArg>,
        #[arg(long, value_enum)]
        scenario: Option<ScenarioArg>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ScenarioArg {
    Schwarzschild,
    Rindler,
    Both,
}

impl From<ScenarioArg> for Scenario {
    fn from(value: ScenarioArg) -> Self {
        match value {
            ScenarioArg::Schwarzschild => Scenario::Schwarzschild,
            ScenarioArg::Rindler => Scenario::Rindler,
            ScenarioArg::Both => Scenario::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum AnchorArg {
    Entrance,
    Middle,
}

impl From<AnchorArg> for Anchor {
    fn from(value: AnchorArg) -> Self {
        match value {
            AnchorArg::Entrance => Anchor::Entrance,
            AnchorArg::Middle => Anchor::Middle,
        }
    }
}

impl Cli {
    /// Resolve flags (or the JSON config file) into the run configuration.
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        if let Some(path) = &self.config {
            if self.command.is_some() {
                return Err(CliError::validation(
                    "--config replaces the subcommand; give one or the other".into(),
                ));
            }
            let mut cfg = RunConfig::from_json_file(path)?;
            // Process-level flags may still override file settings.
            if self.out.is_some() {
                cfg.out_dir = self.out;
            }
            if self.threads.is_some() {
                cfg.threads = self.threads;
            }
            return Ok(cfg);
        }
        let command = match self.command {
            None => {
                return Err(CliError::validation(
                    "a subcommand or --config file is required; see --help".into(),
                ))
            }
            Some(c) => c,
        };
        let command = match command {
            Command::Figure {
                id,
                mass,
                coupling,
                omega,
                lengths,
                radius_grid,
                profile_points,
            } => CommandConfig::Figure(FigureConfig {
                id,
                mass,
                coupling,
                omega: omega.spec(),
                lengths,
                radius_grid,
                profile_points,
            }),
            Command::Estimator {
                entrance_radius,
                length,
                mass,
            } => CommandConfig::Estimator(EstimatorConfig {
                entrance_radius,
                length,
                mass,
            }),
            Command::Transition {
                scenario,
                length,
                entrance_radius,
                accel,
                mass,
                coupling,
                omega,
                anchor,
                tau_fraction,
                verify_modes,
            } => CommandConfig::Transition(TransitionConfig {
                scenario: scenario.into(),
                length,
                entrance_radius,
                accel,
                mass,
                coupling,
                omega: omega.spec(),
                anchor: anchor.map(Into::into),
                tau_fraction,
                verify_modes,
            }),
            Command::Trajectory {
                scenario,
                length,
                entrance_radius,
                accel,
                mass,
                anchor,
                samples,
            } => CommandConfig::Trajectory(TrajectoryConfig {
                scenario: scenario.into(),
                length,
                entrance_radius,
                accel,
                mass,
                anchor: anchor.map(Into::into),
                samples,
            }),
            Command::Profile {
                entrance_radius,
                length,
                mass,
                coupling,
                omega,
                anchor,
                points,
            } => CommandConfig::Profile(ProfileConfig {
                entrance_radius,
                length,
                mass,
                coupling,
                omega: omega.spec(),
                anchor: anchor.map(Into::into),
                points,
            }),
            Command::Sweep {
                kind,
                lengths,
                radius_grid,
                length_grid,
                mass,
                coupling,
                omega,
                anchor,
                scenario,
            } => CommandConfig::Sweep(SweepConfig {
                kind,
                lengths,
                radius_grid,
                length_grid,
                mass,
                coupling,
                omega: omega.spec(),
                anchor: anchor.map(Into::into),
                scenario: scenario.map(Into::into),
            }),
        };
        Ok(RunConfig {
            command,
            out_dir: self.out,
            threads: self.threads,
            numerics: self.numerics.overrides(),
        })
    }
}
