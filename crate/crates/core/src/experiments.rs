//! Deterministic parameter sweeps over cavity placements: transit profiles,
//! radius sweeps, Schwarzschild/Rindler ratio curves, and the validity
//! estimator surface.
//!
//! All sweeps work internally in units of the black-hole mass (the physics
//! is exactly scale invariant; the coupling is read as the dimensionless
//! value in those units) and rescale echoed times and accelerations back to
//! the caller's units. Rows are independent work items computed in
//! parallel, but output ordering follows the input grids and every row is
//! accumulated in a fixed order, so identical specs produce identical
//! tables at any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{
    self, CavitySpec, DetectorError, DetectorSpec, TransitionOptions,
};
use crate::kinematics::{
    self, Anchor, FreeFallWorldline, KinematicsError, RindlerWorldline, SchwarzschildBackground,
};
use crate::numerics::QuadratureConfig;
use crate::validity;
use crate::ErrorCategory;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ExperimentsError {
    #[error("invalid sweep specification: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Detector(#[from] DetectorError),

    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

impl ExperimentsError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ExperimentsError::InvalidSpec(_) => ErrorCategory::Validation,
            ExperimentsError::Detector(e) => e.category(),
            ExperimentsError::Kinematics(e) => e.category(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Schwarzschild,
    Rindler,
    Both,
}

impl Scenario {
    pub fn includes_schwarzschild(&self) -> bool {
        matches!(self, Scenario::Schwarzschild | Scenario::Both)
    }
    pub fn includes_rindler(&self) -> bool {
        matches!(self, Scenario::Rindler | Scenario::Both)
    }
}

/// How the detector gap is fixed across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaRule {
    /// Gap resonant with the given cavity mode: `Omega = mode * pi / L`.
    ResonantMode(u32),
    /// Explicit gap in the caller's units.
    Explicit(f64),
}

/// Numerical policy shared by all rows of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub quad: QuadratureConfig,
    /// Initial mode-sum truncation per row.
    pub n_max: u32,
    /// Tail tolerance of the mode sum.
    pub tail_rel_tol: f64,
    /// Rows whose validity estimator exceeds this are flagged. The default
    /// 1.03 reflects the few-percent regime in which the quasi-local
    /// approximation is considered safe; it is a reproduction choice, not a
    /// sharp physical cutoff.
    pub validity_threshold: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            quad: QuadratureConfig::default(),
            n_max: 64,
            tail_rel_tol: 1e-3,
            validity_threshold: 1.03,
        }
    }
}

/// A family of cavity configurations to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub scenario: Scenario,
    /// Black-hole mass in the caller's units.
    pub mass: f64,
    /// Cavity proper lengths (one per curve).
    pub lengths: Vec<f64>,
    /// Cavity entrance radii (grid within each curve).
    pub radii: Vec<f64>,
    pub coupling: f64,
    pub omega_rule: OmegaRule,
    pub anchor: Anchor,
    /// Fractions of the per-scenario transit time for profile runs.
    pub tau_fractions: Option<Vec<f64>>,
    pub config: ExperimentConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ExperimentsError> {
        let bad = |msg: String| Err(ExperimentsError::InvalidSpec(msg));
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return bad(format!("mass must be positive, got {}", self.mass));
        }
        if self.lengths.is_empty() {
            return bad("at least one cavity length is required".into());
        }
        for &l in &self.lengths {
            if !(l > 0.0) || !l.is_finite() {
                return bad(format!("cavity lengths must be positive, got {l}"));
            }
        }
        if self.radii.is_empty() {
            return bad("at least one entrance radius is required".into());
        }
        for &r in &self.radii {
            if !(r > 0.0) || !r.is_finite() {
                return bad(format!("entrance radii must be positive, got {r}"));
            }
        }
        if !(self.coupling > 0.0) || !self.coupling.is_finite() {
            return bad(format!("coupling must be positive, got {}", self.coupling));
        }
        match self.omega_rule {
            OmegaRule::ResonantMode(mode) if mode < 1 => {
                return bad("resonant mode index must be at least 1".into());
            }
            OmegaRule::Explicit(w) if !(w > 0.0) || !w.is_finite() => {
                return bad(format!("explicit gap must be positive, got {w}"));
            }
            _ => {}
        }
        if let Some(fractions) = &self.tau_fractions {
            if fractions.is_empty() {
                return bad("the transit-fraction grid must not be empty".into());
            }
            let mut prev = 0.0;
            for &f in fractions {
                if !(f > prev) || f > 1.0 {
                    return bad(format!(
                        "transit fractions must be strictly increasing within (0, 1], got {f}"
                    ));
                }
                prev = f;
            }
        }
        if !(self.config.validity_threshold >= 1.0) {
            return bad(format!(
                "validity threshold must be at least 1, got {}",
                self.config.validity_threshold
            ));
        }
        self.config.quad.validate().map_err(DetectorError::from_quad)?;
        Ok(())
    }

    /// Detector gap in internal units (mass = 1) for a cavity of internal
    /// length `length`.
    fn omega_internal(&self, length: f64) -> f64 {
        match self.omega_rule {
            OmegaRule::ResonantMode(mode) => mode as f64 * std::f64::consts::PI / length,
            OmegaRule::Explicit(w) => w * self.mass,
        }
    }
}

impl DetectorError {
    fn from_quad(source: crate::numerics::NumericsError) -> DetectorError {
        DetectorError::Quadrature { mode: 0, source }
    }
}

/// Per-row annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFlag {
    /// The cavity does not fit outside the horizon; the row was skipped.
    CavityBeyondHorizon,
    /// The validity estimator exceeds the configured threshold; the
    /// quasi-local numbers are outside their trusted regime.
    QuasiLocalThresholdExceeded,
}

impl std::fmt::Display for RowFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowFlag::CavityBeyondHorizon => write!(f, "cavity_beyond_horizon"),
            RowFlag::QuasiLocalThresholdExceeded => write!(f, "quasi_local_threshold_exceeded"),
        }
    }
}

/// One evaluated cavity configuration. Quantities are in the caller's
/// units; fields are `None` when the scenario excludes them or the row was
/// skipped as invalid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub radius: f64,
    pub length: f64,
    pub mass: f64,
    pub anchor: Anchor,
    /// Matched Rindler acceleration (None when the geometry is invalid).
    pub accel: Option<f64>,
    /// Transit fraction for profile rows.
    pub tau_fraction: Option<f64>,
    pub tau_end_schwarzschild: Option<f64>,
    pub tau_end_rindler: Option<f64>,
    pub p1_schwarzschild: Option<f64>,
    pub p1_rindler: Option<f64>,
    /// `p1_schwarzschild / p1_rindler` when both are present.
    pub ratio: Option<f64>,
    pub estimator: Option<f64>,
    pub flags: Vec<RowFlag>,
}

impl SweepRow {
    fn skipped(radius: f64, length: f64, mass: f64, anchor: Anchor) -> Self {
        SweepRow {
            radius,
            length,
            mass,
            anchor,
            accel: None,
            tau_fraction: None,
            tau_end_schwarzschild: None,
            tau_end_rindler: None,
            p1_schwarzschild: None,
            p1_rindler: None,
            ratio: None,
            estimator: None,
            flags: vec![RowFlag::CavityBeyondHorizon],
        }
    }
}

/// Geometrically spaced grid from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && lo > 0.0 && hi > lo);
    let ratio = (hi / lo).ln();
    (0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                lo * (ratio * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

/// Linearly spaced grid from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && hi > lo);
    (0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (points - 1) as f64
            }
        })
        .collect()
}

/// Default transit-fraction grid: 50 evenly spaced fractions up to 1.
pub fn default_fractions() -> Vec<f64> {
    (1..=50).map(|k| k as f64 / 50.0).collect()
}

/// Full-transit probabilities for one `(radius, length)` cell, in internal
/// units (mass = 1).
fn compute_row(
    spec: &SweepSpec,
    radius: f64,
    length: f64,
) -> Result<SweepRow, ExperimentsError> {
    let anchor = spec.anchor;
    let bg = match SchwarzschildBackground::new(1.0, radius) {
        Ok(bg) => bg,
        Err(_) => return Ok(SweepRow::skipped(radius, length, 1.0, anchor)),
    };
    if bg.check_cavity_fits(length).is_err() {
        return Ok(SweepRow::skipped(radius, length, 1.0, anchor));
    }

    let mut flags = Vec::new();
    let estimator = validity::estimator(radius, length, 1.0)?.ratio;
    if estimator > spec.config.validity_threshold {
        flags.push(RowFlag::QuasiLocalThresholdExceeded);
    }

    let cavity = CavitySpec::with_truncation(length, spec.config.n_max, spec.config.tail_rel_tol)?;
    let det = DetectorSpec::new(spec.coupling, spec.omega_internal(length))?;
    let quad = &spec.config.quad;
    let opts = TransitionOptions::default();

    let accel = kinematics::matched_acceleration(&bg, length, anchor)?;

    let mut tau_s = None;
    let mut p1_s = None;
    if spec.scenario.includes_schwarzschild() {
        let t = kinematics::transit_time_schwarzschild(&bg, length)?;
        let wl = FreeFallWorldline::new(bg);
        let r = detector::transition_probability(&wl, &cavity, &det, quad, t, &opts)?;
        tau_s = Some(t);
        p1_s = Some(r.p1);
    }

    let mut tau_r = None;
    let mut p1_r = None;
    if spec.scenario.includes_rindler() {
        let t = kinematics::transit_time_rindler(accel, length)?;
        let wl = RindlerWorldline::new(accel)?;
        let r = detector::transition_probability(&wl, &cavity, &det, quad, t, &opts)?;
        tau_r = Some(t);
        p1_r = Some(r.p1);
    }

    let ratio = match (p1_s, p1_r) {
        (Some(s), Some(r)) if r > 0.0 => Some(s / r),
        _ => None,
    };

    Ok(SweepRow {
        radius,
        length,
        mass: 1.0,
        anchor,
        accel: Some(accel),
        tau_fraction: None,
        tau_end_schwarzschild: tau_s,
        tau_end_rindler: tau_r,
        p1_schwarzschild: p1_s,
        p1_rindler: p1_r,
        ratio,
        estimator: Some(estimator),
        flags,
    })
}

/// Rescale a row computed at mass 1 back to the caller's units.
fn rescale_row(mut row: SweepRow, mass: f64) -> SweepRow {
    row.radius *= mass;
    row.length *= mass;
    row.mass = mass;
    row.accel = row.accel.map(|a| a / mass);
    row.tau_end_schwarzschild = row.tau_end_schwarzschild.map(|t| t * mass);
    row.tau_end_rindler = row.tau_end_rindler.map(|t| t * mass);
    row
}

/// Full-transit response over a radius grid at a single cavity length
/// (the radius-sweep figure; acceleration matched at the configured anchor).
pub fn run_radius_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, ExperimentsError> {
    spec.validate()?;
    if spec.lengths.len() != 1 {
        return Err(ExperimentsError::InvalidSpec(
            "a radius sweep uses exactly one cavity length".into(),
        ));
    }
    let length = spec.lengths[0] / spec.mass;
    let rows: Vec<SweepRow> = spec
        .radii
        .par_iter()
        .map(|&r| compute_row(spec, r / spec.mass, length))
        .collect::<Result<_, _>>()?;
    Ok(rows.into_iter().map(|r| rescale_row(r, spec.mass)).collect())
}

/// Ratio curves over the `(length, radius)` product grid, rows ordered
/// length-major in the given order.
pub fn run_ratio_curves(spec: &SweepSpec) -> Result<Vec<SweepRow>, ExperimentsError> {
    spec.validate()?;
    let cells: Vec<(f64, f64)> = spec
        .lengths
        .iter()
        .flat_map(|&l| spec.radii.iter().map(move |&r| (l, r)))
        .collect();
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(l, r)| compute_row(spec, r / spec.mass, l / spec.mass))
        .collect::<Result<_, _>>()?;
    Ok(rows.into_iter().map(|r| rescale_row(r, spec.mass)).collect())
}

/// Excitation probability while the detector crosses the cavity, for a
/// single `(radius, length)` cell.
///
/// Both scenarios are parametrized by the fraction of their own transit
/// time, so the two curves share an axis despite different transit
/// durations. Mode integrals are accumulated incrementally across the
/// fraction grid.
pub fn run_transit_profile(spec: &SweepSpec) -> Result<Vec<SweepRow>, ExperimentsError> {
    spec.validate()?;
    if spec.lengths.len() != 1 || spec.radii.len() != 1 {
        return Err(ExperimentsError::InvalidSpec(
            "a transit profile uses exactly one radius and one cavity length".into(),
        ));
    }
    let fractions = spec.tau_fractions.clone().unwrap_or_else(default_fractions);
    let radius = spec.radii[0] / spec.mass;
    let length = spec.lengths[0] / spec.mass;

    let bg = SchwarzschildBackground::new(1.0, radius)?;
    bg.check_cavity_fits(length)?;
    let mut flags = Vec::new();
    let estimator = validity::estimator(radius, length, 1.0)?.ratio;
    if estimator > spec.config.validity_threshold {
        flags.push(RowFlag::QuasiLocalThresholdExceeded);
    }

    let cavity = CavitySpec::with_truncation(length, spec.config.n_max, spec.config.tail_rel_tol)?;
    let det = DetectorSpec::new(spec.coupling, spec.omega_internal(length))?;
    let quad = &spec.config.quad;
    let accel = kinematics::matched_acceleration(&bg, length, spec.anchor)?;

    let mut sch = None;
    if spec.scenario.includes_schwarzschild() {
        let t = kinematics::transit_time_schwarzschild(&bg, length)?;
        let wl = FreeFallWorldline::new(bg);
        let grid: Vec<f64> = fractions.iter().map(|f| f * t).collect();
        let rows = detector::transition_profile(&wl, &cavity, &det, quad, &grid)?;
        sch = Some((grid, rows));
    }

    let mut rin = None;
    if spec.scenario.includes_rindler() {
        let t = kinematics::transit_time_rindler(accel, length)?;
        let wl = RindlerWorldline::new(accel)?;
        let grid: Vec<f64> = fractions.iter().map(|f| f * t).collect();
        let rows = detector::transition_profile(&wl, &cavity, &det, quad, &grid)?;
        rin = Some((grid, rows));
    }

    let rows = fractions
        .iter()
        .enumerate()
        .map(|(k, &fraction)| {
            let (tau_s, p1_s) = sch
                .as_ref()
                .map(|(grid, rows)| (Some(grid[k]), Some(rows[k].p1)))
                .unwrap_or((None, None));
            let (tau_r, p1_r) = rin
                .as_ref()
                .map(|(grid, rows)| (Some(grid[k]), Some(rows[k].p1)))
                .unwrap_or((None, None));
            let ratio = match (p1_s, p1_r) {
                (Some(s), Some(r)) if r > 0.0 => Some(s / r),
                _ => None,
            };
            rescale_row(
                SweepRow {
                    radius,
                    length,
                    mass: 1.0,
                    anchor: spec.anchor,
                    accel: Some(accel),
                    tau_fraction: Some(fraction),
                    tau_end_schwarzschild: tau_s,
                    tau_end_rindler: tau_r,
                    p1_schwarzschild: p1_s,
                    p1_rindler: p1_r,
                    ratio,
                    estimator: Some(estimator),
                    flags: flags.clone(),
                },
                spec.mass,
            )
        })
        .collect();
    Ok(rows)
}

/// One cell of the validity-estimator surface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorPoint {
    pub radius: f64,
    pub length: f64,
    pub mass: f64,
    pub ratio: Option<f64>,
    pub flags: Vec<RowFlag>,
}

/// The estimator surface plus its two inset slices (fixed length varying
/// radius, and fixed radius varying length).
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSurface {
    /// Length-major grid of `(radius, length)` cells.
    pub surface: Vec<EstimatorPoint>,
    /// Slice at fixed `length = 2 m`.
    pub inset_radius: Vec<EstimatorPoint>,
    /// Slice at fixed `radius = 10 m`.
    pub inset_length: Vec<EstimatorPoint>,
}

fn estimator_point(radius: f64, length: f64, mass: f64) -> EstimatorPoint {
    match validity::estimator(radius, length, mass) {
        Ok(report) => EstimatorPoint {
            radius,
            length,
            mass,
            ratio: Some(report.ratio),
            flags: Vec::new(),
        },
        Err(_) => EstimatorPoint {
            radius,
            length,
            mass,
            ratio: None,
            flags: vec![RowFlag::CavityBeyondHorizon],
        },
    }
}

/// Evaluate the estimator over a `(radius, length)` grid, plus the standard
/// inset slices at `L = 2 m` and `R = 10 m`. Invalid cells are flagged.
pub fn run_estimator_surface(
    radius_grid: &[f64],
    length_grid: &[f64],
    mass: f64,
) -> Result<EstimatorSurface, ExperimentsError> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(ExperimentsError::InvalidSpec(format!(
            "mass must be positive, got {mass}"
        )));
    }
    if radius_grid.is_empty() || length_grid.is_empty() {
        return Err(ExperimentsError::InvalidSpec(
            "estimator grids must not be empty".into(),
        ));
    }
    let surface = length_grid
        .iter()
        .flat_map(|&l| radius_grid.iter().map(move |&r| (r, l)))
        .map(|(r, l)| estimator_point(r, l, mass))
        .collect();
    let inset_radius = radius_grid
        .iter()
        .map(|&r| estimator_point(r, 2.0 * mass, mass))
        .collect();
    let inset_length = length_grid
        .iter()
        .map(|&l| estimator_point(10.0 * mass, l, mass))
        .collect();
    Ok(EstimatorSurface {
        surface,
        inset_radius,
        inset_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SweepSpec {
        SweepSpec {
            scenario: Scenario::Both,
            mass: 1.0,
            lengths: vec![2.0],
            radii: vec![8.0, 12.0],
            coupling: 0.01,
            omega_rule: OmegaRule::ResonantMode(6),
            anchor: Anchor::Entrance,
            tau_fractions: None,
            config: ExperimentConfig {
                // Plumbing tests: a fixed short mode sum keeps them fast.
                n_max: 16,
                tail_rel_tol: 1.0,
                ..ExperimentConfig::default()
            },
        }
    }

    #[test]
    fn radius_sweep_is_deterministic() {
        let spec = small_spec();
        let a = run_radius_sweep(&spec).unwrap();
        let b = run_radius_sweep(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        for row in &a {
            assert!(row.p1_schwarzschild.unwrap() > 0.0);
            assert!(row.p1_rindler.unwrap() > 0.0);
            assert!(row.ratio.is_some());
        }
    }

    #[test]
    fn invalid_grid_points_are_flagged_not_fatal() {
        let mut spec = small_spec();
        spec.lengths = vec![4.0];
        spec.radii = vec![5.0, 10.0]; // R = 5, L = 4 reaches the horizon
        let rows = run_radius_sweep(&spec).unwrap();
        assert!(rows[0].flags.contains(&RowFlag::CavityBeyondHorizon));
        assert!(rows[0].p1_schwarzschild.is_none());
        assert!(rows[1].flags.is_empty() || rows[1].estimator.is_some());
        assert!(rows[1].p1_schwarzschild.is_some());
    }

    #[test]
    fn ratio_curves_cells_match_radius_sweep_bitwise() {
        let spec = small_spec();
        let radius_rows = run_radius_sweep(&spec).unwrap();
        let ratio_rows = run_ratio_curves(&spec).unwrap();
        assert_eq!(radius_rows, ratio_rows);
    }

    #[test]
    fn scale_invariance_of_dimensionless_outputs() {
        let spec = small_spec();
        let base = run_radius_sweep(&spec).unwrap();
        let mut scaled_spec = small_spec();
        scaled_spec.mass = 3.0;
        scaled_spec.lengths = vec![6.0];
        scaled_spec.radii = vec![24.0, 36.0];
        let scaled = run_radius_sweep(&scaled_spec).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            assert_eq!(a.p1_schwarzschild, b.p1_schwarzschild);
            assert_eq!(a.ratio, b.ratio);
            assert_eq!(a.estimator, b.estimator);
            // Dimensionful echoes rescale.
            assert!((b.tau_end_schwarzschild.unwrap() - 3.0 * a.tau_end_schwarzschild.unwrap())
                .abs()
                < 1e-12 * b.tau_end_schwarzschild.unwrap());
            assert!((b.accel.unwrap() - a.accel.unwrap() / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn profile_rows_share_estimator_and_end_near_full_transit() {
        let mut spec = small_spec();
        spec.radii = vec![10.0];
        spec.lengths = vec![5.0];
        spec.tau_fractions = Some(vec![0.5, 1.0]);
        let rows = run_transit_profile(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].estimator, rows[1].estimator);
        assert!((rows[1].tau_end_schwarzschild.unwrap() - 27.50).abs() < 0.01);
        assert!(rows[1].p1_schwarzschild.unwrap() > 0.0);
        assert!(rows[0].tau_fraction == Some(0.5));
    }

    #[test]
    fn estimator_surface_monotone_and_flagged() {
        let radius_grid = [8.0, 12.0, 20.0, 40.0];
        let length_grid = [0.5, 2.0, 4.0];
        let s = run_estimator_surface(&radius_grid, &length_grid, 1.0).unwrap();
        assert_eq!(s.surface.len(), 12);
        // Monotone: ratio decreases with radius at fixed length, increases
        // with length at fixed radius.
        for row in s.surface.chunks(radius_grid.len()) {
            for pair in row.windows(2) {
                assert!(pair[0].ratio.unwrap() > pair[1].ratio.unwrap());
            }
        }
        for i in 0..radius_grid.len() {
            for j in 0..length_grid.len() - 1 {
                let lo = s.surface[j * radius_grid.len() + i].ratio.unwrap();
                let hi = s.surface[(j + 1) * radius_grid.len() + i].ratio.unwrap();
                assert!(hi > lo);
            }
        }
        // An invalid cell is flagged, not fatal.
        let s = run_estimator_surface(&[5.0], &[6.0], 1.0).unwrap();
        assert!(s.surface[0].ratio.is_none());
        assert!(s.surface[0]
            .flags
            .contains(&RowFlag::CavityBeyondHorizon));
    }

    #[test]
    fn spec_validation_rejects_bad_fractions() {
        let mut spec = small_spec();
        spec.tau_fractions = Some(vec![0.5, 0.4]);
        assert!(matches!(
            run_transit_profile(&spec),
            Err(ExperimentsError::InvalidSpec(_))
        ));
    }
}
