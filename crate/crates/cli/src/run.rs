//! Command execution: build the library calls for a resolved [`RunConfig`]
//! and render their outputs as tables.

use udw_cavity::detector::{self, CavitySpec, DetectorSpec, TransitionOptions};
use udw_cavity::experiments::{
    self, OmegaRule, RowFlag, Scenario, SweepSpec,
};
use udw_cavity::kinematics::{
    self, Anchor, FreeFallWorldline, RindlerWorldline, SchwarzschildBackground, Worldline,
};
use udw_cavity::validity;

use crate::config::{
    CommandConfig, EstimatorConfig, FigureConfig, FigureId, GridSpec, RunConfig, Spacing,
    SweepConfig, SweepKind, TrajectoryConfig, TransitionConfig,
};
use crate::output::{
    self, estimator_sweep_table, estimator_table, fmt_float, profile_table, sweep_table, Table,
};
use crate::CliError;

pub struct RunOutcome {
    pub tables: Vec<Table>,
    pub rows: usize,
    pub skipped_rows: usize,
    pub unitarity_residual_max: Option<f64>,
}

/// Pinned radius grid shared by the radius-sweep and ratio-curve figures:
/// geometric from 5 to 100 in units of the mass, 32 points.
fn default_radius_grid() -> GridSpec {
    GridSpec {
        lo: 5.0,
        hi: 100.0,
        points: 32,
        spacing: Spacing::Geometric,
    }
}

/// Pinned cavity-length set for the ratio-curve figures.
const RATIO_LENGTHS: [f64; 5] = [1e-3, 0.3, 2.0, 4.0, 6.0];

pub fn execute(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    match &cfg.command {
        CommandConfig::Figure(f) => run_figure(cfg, f),
        CommandConfig::Estimator(e) => run_estimator(e),
        CommandConfig::Transition(t) => run_transition(cfg, t),
        CommandConfig::Trajectory(t) => run_trajectory(t),
        CommandConfig::Profile(p) => {
            let spec = SweepSpec {
                scenario: Scenario::Both,
                mass: p.mass,
                lengths: vec![p.length],
                radii: vec![p.entrance_radius],
                coupling: p.coupling,
                omega_rule: p.omega.rule()?,
                anchor: p.anchor.unwrap_or(Anchor::Entrance),
                tau_fractions: Some(fractions(p.points.unwrap_or(50))?),
                config: cfg.numerics.experiment_config(),
            };
            let rows = experiments::run_transit_profile(&spec)?;
            Ok(sweep_outcome(profile_table("profile.csv", &rows), &rows))
        }
        CommandConfig::Sweep(s) => run_sweep(cfg, s),
    }
}

fn fractions(points: usize) -> Result<Vec<f64>, CliError> {
    if points == 0 {
        return Err(CliError::validation(
            "the profile needs at least one transit fraction".into(),
        ));
    }
    Ok((1..=points).map(|k| k as f64 / points as f64).collect())
}

fn count_skipped(rows: &[experiments::SweepRow]) -> usize {
    rows.iter()
        .filter(|r| r.flags.contains(&RowFlag::CavityBeyondHorizon))
        .count()
}

fn sweep_outcome(table: Table, rows: &[experiments::SweepRow]) -> RunOutcome {
    RunOutcome {
        rows: rows.len(),
        skipped_rows: count_skipped(rows),
        unitarity_residual_max: None,
        tables: vec![table],
    }
}

fn run_figure(cfg: &RunConfig, fig: &FigureConfig) -> Result<RunOutcome, CliError> {
    let mass = fig.mass;
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(CliError::validation(format!(
            "mass must be positive, got {mass}"
        )));
    }
    let radius_grid = |fallback: GridSpec| -> Result<Vec<f64>, CliError> {
        let grid = fig.radius_grid.unwrap_or(fallback);
        Ok(grid.materialize()?.iter().map(|r| r * mass).collect())
    };
    let experiment_config = cfg.numerics.experiment_config();

    match fig.id {
        FigureId::Fig2 => {
            // Estimator surface: every pinned grid point lies outside the
            // horizon; overrides that violate that are rejected up front.
            let radii = radius_grid(GridSpec {
                lo: 8.0,
                hi: 50.0,
                points: 32,
                spacing: Spacing::Geometric,
            })?;
            let lengths: Vec<f64> = fig
                .lengths
                .clone()
                .unwrap_or_else(|| experiments::linear_grid(0.5, 6.0, 12))
                .iter()
                .map(|l| l * mass)
                .collect();
            let surface = experiments::run_estimator_surface(&radii, &lengths, mass)?;
            let tables = vec![
                estimator_table("fig2.csv", &surface.surface)?,
                estimator_table("fig2_inset_radius.csv", &surface.inset_radius)?,
                estimator_table("fig2_inset_length.csv", &surface.inset_length)?,
            ];
            Ok(RunOutcome {
                rows: surface.surface.len(),
                skipped_rows: 0,
                unitarity_residual_max: None,
                tables,
            })
        }
        FigureId::Fig3 => {
            let spec = SweepSpec {
                scenario: Scenario::Both,
                mass,
                lengths: vec![fig.lengths.as_ref().map_or(5.0, |l| l[0]) * mass],
                radii: vec![10.0 * mass],
                coupling: fig.coupling,
                omega_rule: fig.omega.rule()?,
                anchor: Anchor::Entrance,
                tau_fractions: Some(fractions(fig.profile_points.unwrap_or(50))?),
                config: experiment_config,
            };
            let rows = experiments::run_transit_profile(&spec)?;
            Ok(sweep_outcome(profile_table("fig3.csv", &rows), &rows))
        }
        FigureId::Fig4 => {
            let spec = SweepSpec {
                scenario: Scenario::Both,
                mass,
                lengths: vec![fig.lengths.as_ref().map_or(4.0, |l| l[0]) * mass],
                radii: radius_grid(default_radius_grid())?,
                coupling: fig.coupling,
                omega_rule: fig.omega.rule()?,
                anchor: Anchor::Entrance,
                tau_fractions: None,
                config: experiment_config,
            };
            let rows = experiments::run_radius_sweep(&spec)?;
            Ok(sweep_outcome(sweep_table("fig4.csv", &rows), &rows))
        }
        FigureId::Fig5a | FigureId::Fig5b => {
            let anchor = if fig.id == FigureId::Fig5a {
                Anchor::Middle
            } else {
                Anchor::Entrance
            };
            let lengths = fig
                .lengths
                .clone()
                .unwrap_or_else(|| RATIO_LENGTHS.to_vec())
                .iter()
                .map(|l| l * mass)
                .collect();
            let spec = SweepSpec {
                scenario: Scenario::Both,
                mass,
                lengths,
                radii: radius_grid(default_radius_grid())?,
                coupling: fig.coupling,
                omega_rule: fig.omega.rule()?,
                anchor,
                tau_fractions: None,
                config: experiment_config,
            };
            let rows = experiments::run_ratio_curves(&spec)?;
            let name = format!("{}.csv", fig.id);
            Ok(sweep_outcome(sweep_table(&name, &rows), &rows))
        }
    }
}

fn run_estimator(cfg: &EstimatorConfig) -> Result<RunOutcome, CliError> {
    let report = validity::estimator(cfg.entrance_radius, cfg.length, cfg.mass)?;
    let row = format!(
        "{},{},{},{}",
        fmt_float(report.entrance_radius),
        fmt_float(report.length),
        fmt_float(report.mass),
        fmt_float(report.ratio)
    );
    Ok(RunOutcome {
        tables: vec![Table::new("estimator.csv", "R,L,m,estimator", vec![row])],
        rows: 1,
        skipped_rows: 0,
        unitarity_residual_max: None,
    })
}

/// Scenario-specific pieces of a single-configuration run, in internal
/// units (mass = 1).
struct SingleSetup {
    worldline: Box<dyn Worldline>,
    transit_time: f64,
    accel_internal: Option<f64>,
    estimator: Option<f64>,
}

fn single_setup(
    scenario: Scenario,
    radius_int: Option<f64>,
    accel_int: Option<f64>,
    length_int: f64,
    anchor: Anchor,
) -> Result<SingleSetup, CliError> {
    match scenario {
        Scenario::Schwarzschild => {
            let radius = radius_int.ok_or_else(|| {
                CliError::validation("the schwarzschild scenario requires --R".into())
            })?;
            if accel_int.is_some() {
                return Err(CliError::validation(
                    "--a only applies to the rindler scenario".into(),
                ));
            }
            let bg = SchwarzschildBackground::new(1.0, radius)?;
            let transit_time = kinematics::transit_time_schwarzschild(&bg, length_int)?;
            let estimator = validity::estimator(radius, length_int, 1.0)?.ratio;
            let accel = kinematics::matched_acceleration(&bg, length_int, anchor)?;
            Ok(SingleSetup {
                worldline: Box::new(FreeFallWorldline::new(bg)),
                transit_time,
                accel_internal: Some(accel),
                estimator: Some(estimator),
            })
        }
        Scenario::Rindler => {
            let accel = match (accel_int, radius_int) {
                (Some(a), None) => a,
                (None, Some(radius)) => {
                    let bg = SchwarzschildBackground::new(1.0, radius)?;
                    kinematics::matched_acceleration(&bg, length_int, anchor)?
                }
                (Some(_), Some(_)) => {
                    return Err(CliError::validation(
                        "specify either --a or --R for the rindler scenario, not both".into(),
                    ))
                }
                (None, None) => {
                    return Err(CliError::validation(
                        "the rindler scenario requires --a or --R".into(),
                    ))
                }
            };
            let estimator = match radius_int {
                Some(radius) => Some(validity::estimator(radius, length_int, 1.0)?.ratio),
                None => None,
            };
            let transit_time = kinematics::transit_time_rindler(accel, length_int)?;
            Ok(SingleSetup {
                worldline: Box::new(RindlerWorldline::new(accel)?),
                transit_time,
                accel_internal: Some(accel),
                estimator,
            })
        }
        Scenario::Both => Err(CliError::validation(
            "this command runs one scenario; use profile or sweep to compare both".into(),
        )),
    }
}

fn run_transition(cfg: &RunConfig, t: &TransitionConfig) -> Result<RunOutcome, CliError> {
    let mass = t.mass;
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(CliError::validation(format!(
            "mass must be positive, got {mass}"
        )));
    }
    let length_int = t.length / mass;
    let anchor = t.anchor.unwrap_or(Anchor::Entrance);
    let setup = single_setup(
        t.scenario,
        t.entrance_radius.map(|r| r / mass),
        t.accel.map(|a| a * mass),
        length_int,
        anchor,
    )?;

    let fraction = t.tau_fraction.unwrap_or(1.0);
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CliError::validation(format!(
            "--tau-fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let tau_end = fraction * setup.transit_time;

    let experiment_config = cfg.numerics.experiment_config();
    let cavity = CavitySpec::with_truncation(
        length_int,
        experiment_config.n_max,
        experiment_config.tail_rel_tol,
    )?;
    let omega_int = match t.omega.rule()? {
        OmegaRule::ResonantMode(mode) => cavity.omega_n(mode),
        OmegaRule::Explicit(w) => w * mass,
    };
    let det = DetectorSpec::new(t.coupling, omega_int)?;
    let options = TransitionOptions {
        verify_modes: t.verify_modes.unwrap_or(6),
    };
    let result = detector::transition_probability(
        setup.worldline.as_ref(),
        &cavity,
        &det,
        &experiment_config.quad,
        tau_end,
        &options,
    )?;

    let scenario_name = match t.scenario {
        Scenario::Schwarzschild => "schwarzschild",
        Scenario::Rindler => "rindler",
        Scenario::Both => unreachable!("rejected in single_setup"),
    };
    let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    let row = format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        scenario_name,
        opt(t.entrance_radius),
        opt(setup.accel_internal.map(|a| a / mass)),
        fmt_float(t.length),
        fmt_float(mass),
        anchor,
        fmt_float(t.coupling),
        fmt_float(omega_int / mass),
        fmt_float(tau_end * mass),
        result.modes.len(),
        fmt_float(result.p1),
        fmt_float(result.p2),
        fmt_float(result.truncation_tail),
        opt(result.unitarity_residual),
        opt(setup.estimator),
    );
    let header = "scenario,R,a,L,m,anchor,lambda,omega,tau_end,n_modes,p1,p2,truncation_tail,\
                  unitarity_residual,estimator";
    Ok(RunOutcome {
        tables: vec![Table::new("transition.csv", header, vec![row])],
        rows: 1,
        skipped_rows: 0,
        unitarity_residual_max: result.unitarity_residual,
    })
}

fn run_trajectory(t: &TrajectoryConfig) -> Result<RunOutcome, CliError> {
    let mass = t.mass;
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(CliError::validation(format!(
            "mass must be positive, got {mass}"
        )));
    }
    if t.samples < 2 {
        return Err(CliError::validation(
            "trajectory needs at least 2 samples".into(),
        ));
    }
    let anchor = t.anchor.unwrap_or(Anchor::Entrance);
    let setup = single_setup(
        t.scenario,
        t.entrance_radius.map(|r| r / mass),
        t.accel.map(|a| a * mass),
        t.length / mass,
        anchor,
    )?;
    let scenario_name = match t.scenario {
        Scenario::Schwarzschild => "schwarzschild",
        Scenario::Rindler => "rindler",
        Scenario::Both => unreachable!("rejected in single_setup"),
    };
    let mut rows = Vec::with_capacity(t.samples + 1);
    for k in 0..=t.samples {
        let tau = setup.transit_time * k as f64 / t.samples as f64;
        let p = setup.worldline.position(tau)?;
        rows.push(format!(
            "{},{},{},{}",
            scenario_name,
            fmt_float(p.tau * mass),
            fmt_float(p.space * mass),
            fmt_float(p.time * mass)
        ));
    }
    Ok(RunOutcome {
        rows: rows.len(),
        skipped_rows: 0,
        unitarity_residual_max: None,
        tables: vec![Table::new(
            "trajectory.csv",
            "scenario,tau,space,time",
            rows,
        )],
    })
}

fn run_sweep(cfg: &RunConfig, s: &SweepConfig) -> Result<RunOutcome, CliError> {
    let radii: Vec<f64> = s
        .radius_grid
        .materialize()?
        .iter()
        .map(|r| r * s.mass)
        .collect();
    match s.kind {
        SweepKind::Estimator => {
            let length_grid = s.length_grid.ok_or_else(|| {
                CliError::validation("estimator sweeps require --L-grid".into())
            })?;
            let lengths: Vec<f64> = length_grid
                .materialize()?
                .iter()
                .map(|l| l * s.mass)
                .collect();
            let surface = experiments::run_estimator_surface(&radii, &lengths, s.mass)?;
            let skipped = surface
                .surface
                .iter()
                .filter(|p| !p.flags.is_empty())
                .count();
            Ok(RunOutcome {
                rows: surface.surface.len(),
                skipped_rows: skipped,
                unitarity_residual_max: None,
                tables: vec![estimator_sweep_table("sweep.csv", &surface.surface)],
            })
        }
        SweepKind::Radius | SweepKind::Ratio => {
            if s.lengths.is_empty() {
                return Err(CliError::validation(
                    "sweeps require at least one cavity length via --L-list".into(),
                ));
            }
            let spec = SweepSpec {
                scenario: s.scenario.unwrap_or(Scenario::Both),
                mass: s.mass,
                lengths: s.lengths.clone(),
                radii,
                coupling: s.coupling,
                omega_rule: s.omega.rule()?,
                anchor: s.anchor.unwrap_or(Anchor::Entrance),
                tau_fractions: None,
                config: cfg.numerics.experiment_config(),
            };
            let rows = match s.kind {
                SweepKind::Radius => experiments::run_radius_sweep(&spec)?,
                _ => experiments::run_ratio_curves(&spec)?,
            };
            Ok(sweep_outcome(sweep_table("sweep.csv", &rows), &rows))
        }
    }
}

pub fn write_outputs(
    cfg: &RunConfig,
    outcome: &RunOutcome,
    out_dir: &std::path::Path,
    threads: usize,
    wall_time_ms: u128,
) -> Result<Vec<String>, CliError> {
    let mut written = Vec::new();
    for table in &outcome.tables {
        output::write_atomic(out_dir, &table.name, &table.text)?;
        written.push(table.name.clone());
    }
    let manifest = output::Manifest {
        command: cfg.command.name(),
        config: cfg,
        conventions: output::Conventions::default(),
        outputs: written.clone(),
        rows: outcome.rows,
        skipped_rows: outcome.skipped_rows,
        unitarity_residual_max: outcome.unitarity_residual_max,
        threads,
        wall_time_ms,
    };
    let manifest_name = format!("{}.manifest.json", cfg.command.stem());
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::io(format!("manifest serialization failed: {e}")))?;
    text.push('\n');
    output::write_atomic(out_dir, &manifest_name, &text)?;
    written.push(manifest_name);
    Ok(written)
}
