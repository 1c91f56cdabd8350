//! Run configuration: TOML schema, documented defaults, validation and the
//! conversion to the physical types of `casimir-core`.
//!
//! Units at this boundary: lengths in nm, frequencies and damping rates in
//! Hz, times with an explicit suffix (`_ms`, `_us`, `_s`), masses in kg,
//! stiffness in N/m, temperature in K. Drude parameters are rad/s, or eV
//! when given through the `_ev` keys.

use std::path::Path;

use casimir_core::mechanics::{estimate_effective_params, BeamGeometry};
use casimir_core::protocol::{TransferSettings, WelchSpec};
use casimir_core::units::{ev_to_rad_per_s, hz_to_rad, NM};
use casimir_core::{
    build_field, Cantilever, CasimirField, ControlLoop, DielectricModel, Direction, ForceModel, GridSpec,
    MirrorStack, PsdSettings, QuadratureSpec, SystemConfig, ThermalSetting,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Everything a run needs besides the subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed of every random stream of the run.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub materials: Materials,
    #[serde(default)]
    pub system: System,
    #[serde(default)]
    pub quadrature: Quadrature,
    #[serde(default)]
    pub field: Field,
    #[serde(default)]
    pub experiment: Experiment,
    /// Provenance written into sidecars; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInfo {
    pub command: String,
    pub version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaterialKind {
    Drude,
    Ideal,
}

/// Mirror material, shared by sphere and plate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Materials {
    pub model: MaterialKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plasma_frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plasma_frequency_ev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxation_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxation_rate_ev: Option<f64>,
    /// Gold film thickness on a dielectric substrate, nm; absent = bulk.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub film_thickness: Option<f64>,
    /// Static permittivity of the substrate under a film.
    pub substrate_epsilon: f64,
}

impl Default for Materials {
    fn default() -> Self {
        Self {
            model: MaterialKind::Drude,
            plasma_frequency: None,
            plasma_frequency_ev: None,
            relaxation_rate: None,
            relaxation_rate_ev: None,
            film_thickness: None,
            substrate_epsilon: 11.7,
        }
    }
}

/// One cantilever. Give `mass`, or `stiffness`, or neither (the mass is
/// then estimated from the beam geometry).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantileverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stiffness: Option<f64>,
    /// Hz.
    pub frequency: f64,
    /// Hz.
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct System {
    /// Equilibrium separation, nm.
    pub d0: f64,
    /// nm.
    pub sphere_radius: f64,
    /// K.
    pub temperature: f64,
    /// Damping added to cantilever 2, Hz.
    pub extra_damping_2: f64,
    pub cantilever1: CantileverSection,
    pub cantilever2: CantileverSection,
}

impl Default for System {
    fn default() -> Self {
        Self {
            d0: 76.0,
            sphere_radius: 34_550.0,
            temperature: 300.0,
            extra_damping_2: 0.0,
            cantilever1: CantileverSection {
                mass: None,
                stiffness: None,
                frequency: 4826.0,
                damping: 2.65,
            },
            cantilever2: CantileverSection {
                mass: None,
                stiffness: None,
                frequency: 5582.0,
                damping: 2.68,
            },
        }
    }
}

/// Lifshitz quadrature used for directly evaluated forces and energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Quadrature {
    pub relative_tolerance: f64,
    pub max_subdivisions: usize,
    /// Fixed number of non-zero Matsubara terms; absent = automatic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matsubara_terms: Option<usize>,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-4,
            max_subdivisions: 200,
            matsubara_terms: None,
        }
    }
}

/// Tabulated force field driving the dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Field {
    /// nm.
    pub x_min: f64,
    /// nm.
    pub x_max: f64,
    pub points: usize,
    /// Quadrature tolerance of the table entries; tighter than the direct
    /// evaluations because the dynamics uses second derivatives.
    pub relative_tolerance: f64,
    pub max_subdivisions: usize,
}

impl Default for Field {
    fn default() -> Self {
        Self {
            x_min: 30.0,
            x_max: 1000.0,
            points: 300,
            relative_tolerance: 1e-9,
            max_subdivisions: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Experiment {
    pub force: ForceExperiment,
    pub spectrum: SpectrumExperiment,
    pub ep_locate: EpLocateExperiment,
    pub simulate: SimulateExperiment,
    #[serde(rename = "loop")]
    pub control_loop: LoopExperiment,
    pub psd_map: PsdMapExperiment,
    pub efficiency: EfficiencyExperiment,
    pub validate: ValidateExperiment,
}

/// Log-spaced separation scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForceExperiment {
    /// nm.
    pub x_min: f64,
    /// nm.
    pub x_max: f64,
    pub points: usize,
}

impl Default for ForceExperiment {
    fn default() -> Self {
        Self {
            x_min: 50.0,
            x_max: 1000.0,
            points: 20,
        }
    }
}

/// Eigenvalue surface over `f_mod × δ_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumExperiment {
    /// Hz.
    pub f_min: f64,
    pub f_max: f64,
    pub f_points: usize,
    /// nm.
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_points: usize,
}

impl Default for SpectrumExperiment {
    fn default() -> Self {
        Self {
            f_min: 680.0,
            f_max: 785.0,
            f_points: 106,
            delta_min: 0.0,
            delta_max: 13.3,
            delta_points: 67,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EpLocateExperiment {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoopDirection {
    Cw,
    Acw,
}

impl From<LoopDirection> for Direction {
    fn from(d: LoopDirection) -> Self {
        match d {
            LoopDirection::Cw => Direction::Clockwise,
            LoopDirection::Acw => Direction::Anticlockwise,
        }
    }
}

/// Single trajectory under a constant modulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateExperiment {
    pub duration_ms: f64,
    pub dt_us: f64,
    pub stride: usize,
    /// Modulation frequency, Hz; absent = effective difference frequency.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_mod: Option<f64>,
    /// Modulation depth, nm.
    pub delta: f64,
    /// Driven cantilever (1 or 2), 0 for none.
    pub excite: u8,
    /// Steady resonant amplitude of the drive, nm.
    pub drive_amplitude: f64,
    pub thermal_noise: bool,
}

impl Default for SimulateExperiment {
    fn default() -> Self {
        Self {
            duration_ms: 200.0,
            dt_us: 1.0,
            stride: 10,
            f_mod: None,
            delta: 6.7,
            excite: 2,
            drive_amplitude: 0.5,
            thermal_noise: false,
        }
    }
}

/// Rectangular control loop and the timing of a transfer experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoopExperiment {
    pub direction: LoopDirection,
    pub excite: u8,
    /// Hz.
    pub f_min: f64,
    pub f_max: f64,
    /// nm.
    pub delta_min: f64,
    pub delta_max: f64,
    pub duration_ms: f64,
    /// Drive window `[0, start_ms)`; the loop starts at `start_ms`.
    pub start_ms: f64,
    pub ramp_ms: f64,
    /// Modulation phase at the start of the ramp, rad.
    pub modulation_phase: f64,
    /// nm.
    pub drive_amplitude: f64,
    pub dt_us: f64,
    pub stride: usize,
    pub window_periods: f64,
    pub report_ms: f64,
    pub tail_ms: f64,
    pub thermal_noise: bool,
}

impl Default for LoopExperiment {
    fn default() -> Self {
        let s = TransferSettings::default();
        let c = ControlLoop::measured(Direction::Clockwise);
        Self {
            direction: LoopDirection::Cw,
            excite: 1,
            f_min: c.f_min,
            f_max: c.f_max,
            delta_min: c.amplitude_min / NM,
            delta_max: c.amplitude_max / NM,
            duration_ms: c.duration * 1e3,
            start_ms: s.loop_start * 1e3,
            ramp_ms: s.ramp * 1e3,
            modulation_phase: s.modulation_phase,
            drive_amplitude: s.drive_amplitude / NM,
            dt_us: s.dt * 1e6,
            stride: s.record_stride,
            window_periods: s.window_periods,
            report_ms: s.report_interval * 1e3,
            tail_ms: s.tail * 1e3,
            thermal_noise: s.thermal_noise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Frequency,
    Amplitude,
}

/// Thermally driven PSD map of cantilever 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsdMapExperiment {
    pub sweep: SweepKind,
    /// Fixed modulation frequency of an amplitude sweep, or centre of a
    /// frequency sweep, Hz; absent = effective difference frequency.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_mod: Option<f64>,
    /// Full width of a frequency sweep, Hz.
    pub span: f64,
    /// Fixed depth of a frequency sweep, nm.
    pub delta: f64,
    /// Depth range of an amplitude sweep, nm.
    pub delta_min: f64,
    pub delta_max: f64,
    pub points: usize,
    pub duration_s: f64,
    pub settle_s: f64,
    pub dt_us: f64,
    pub stride: usize,
    pub segment_len: usize,
    pub overlap: f64,
    /// Hz.
    pub band_half_width: f64,
}

impl Default for PsdMapExperiment {
    fn default() -> Self {
        let p = PsdSettings::default();
        Self {
            sweep: SweepKind::Frequency,
            f_mod: None,
            span: 18.0,
            delta: 13.3,
            delta_min: 0.0,
            delta_max: 13.3,
            points: 7,
            duration_s: 6.0,
            settle_s: p.settle,
            dt_us: p.dt * 1e6,
            stride: p.record_stride,
            segment_len: p.welch.segment_len,
            overlap: p.welch.overlap,
            band_half_width: p.band_half_width,
        }
    }
}

/// Clockwise-loop efficiency versus `f_max`; the rest of the loop comes
/// from `[experiment.loop]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EfficiencyExperiment {
    /// Hz; absent = effective difference frequency − 40 … + 60 Hz in 10 Hz steps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_max_list: Option<Vec<f64>>,
    /// Extra runs per point with random modulation phase.
    pub ensemble: usize,
    pub excite: u8,
}

impl Default for EfficiencyExperiment {
    fn default() -> Self {
        Self {
            f_max_list: None,
            ensemble: 5,
            excite: 1,
        }
    }
}

/// Oracle suite run by `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateExperiment {
    /// Random Hamiltonians for the trace/determinant identities.
    pub draws: usize,
    /// Modulation depth of the transduction cross-check, nm.
    pub transduction_delta: f64,
}

impl Default for ValidateExperiment {
    fn default() -> Self {
        Self {
            draws: 10_000,
            transduction_delta: 1.0,
        }
    }
}

fn positive(key: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(key, format!("must be a finite number > 0 (got {v})")))
    }
}

fn non_negative(key: &str, v: f64) -> CliResult<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(key, format!("must be a finite number >= 0 (got {v})")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> CliResult<()> {
    if v >= min {
        Ok(())
    } else {
        Err(CliError::config(key, format!("must be at least {min} (got {v})")))
    }
}

fn ordered(key: &str, lo: f64, hi: f64) -> CliResult<()> {
    if lo < hi {
        Ok(())
    } else {
        Err(CliError::config(key, format!("must exceed the lower bound {lo} (got {hi})")))
    }
}

fn excite_key(key: &str, v: u8, allow_none: bool) -> CliResult<()> {
    match v {
        1 | 2 => Ok(()),
        0 if allow_none => Ok(()),
        _ => Err(CliError::config(
            key,
            if allow_none { "must be 0, 1 or 2" } else { "must be 1 or 2" },
        )),
    }
}

/// Parse TOML text. Syntax errors and unknown keys are configuration
/// errors; constraints are checked by [`RunConfig::validate`].
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
    config.validate()?;
    Ok(config.normalized())
}

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

impl RunConfig {
    /// Check every constraint, naming the offending key.
    pub fn validate(&self) -> CliResult<()> {
        let m = &self.materials;
        if m.plasma_frequency.is_some() && m.plasma_frequency_ev.is_some() {
            return Err(CliError::config(
                "materials.plasma_frequency_ev",
                "give either plasma_frequency (rad/s) or plasma_frequency_ev, not both",
            ));
        }
        if m.relaxation_rate.is_some() && m.relaxation_rate_ev.is_some() {
            return Err(CliError::config(
                "materials.relaxation_rate_ev",
                "give either relaxation_rate (rad/s) or relaxation_rate_ev, not both",
            ));
        }
        for (key, v) in [
            ("materials.plasma_frequency", m.plasma_frequency),
            ("materials.plasma_frequency_ev", m.plasma_frequency_ev),
        ] {
            if let Some(v) = v {
                positive(key, v)?;
            }
        }
        for (key, v) in [
            ("materials.relaxation_rate", m.relaxation_rate),
            ("materials.relaxation_rate_ev", m.relaxation_rate_ev),
        ] {
            if let Some(v) = v {
                non_negative(key, v)?;
            }
        }
        if let Some(t) = m.film_thickness {
            positive("materials.film_thickness", t)?;
        }
        if !(m.substrate_epsilon >= 1.0 && m.substrate_epsilon.is_finite()) {
            return Err(CliError::config("materials.substrate_epsilon", "must be >= 1"));
        }

        let s = &self.system;
        positive("system.d0", s.d0)?;
        positive("system.sphere_radius", s.sphere_radius)?;
        non_negative("system.temperature", s.temperature)?;
        non_negative("system.extra_damping_2", s.extra_damping_2)?;
        for (name, c) in [("system.cantilever1", &s.cantilever1), ("system.cantilever2", &s.cantilever2)] {
            positive(&format!("{name}.frequency"), c.frequency)?;
            positive(&format!("{name}.damping"), c.damping)?;
            if let Some(mass) = c.mass {
                positive(&format!("{name}.mass"), mass)?;
            }
            if let Some(k) = c.stiffness {
                positive(&format!("{name}.stiffness"), k)?;
                if let Some(mass) = c.mass {
                    let implied = mass * hz_to_rad(c.frequency).powi(2);
                    if ((k - implied) / implied).abs() > 1e-6 {
                        return Err(CliError::config(
                            &format!("{name}.stiffness"),
                            format!("inconsistent with mass and frequency (mass·ω² = {implied:e} N/m)"),
                        ));
                    }
                }
            }
        }

        let q = &self.quadrature;
        if !(q.relative_tolerance > 0.0 && q.relative_tolerance < 1e-2) {
            return Err(CliError::config("quadrature.relative_tolerance", "must lie in (0, 1e-2)"));
        }
        at_least("quadrature.max_subdivisions", q.max_subdivisions, 16)?;
        if let Some(n) = q.matsubara_terms {
            at_least("quadrature.matsubara_terms", n, 1)?;
        }

        let f = &self.field;
        positive("field.x_min", f.x_min)?;
        ordered("field.x_max", f.x_min, f.x_max)?;
        at_least("field.points", f.points, GridSpec::MIN_POINTS)?;
        if !(f.relative_tolerance > 0.0 && f.relative_tolerance < 1e-2) {
            return Err(CliError::config("field.relative_tolerance", "must lie in (0, 1e-2)"));
        }
        at_least("field.max_subdivisions", f.max_subdivisions, 16)?;
        if !(f.x_min < s.d0 && s.d0 < f.x_max) {
            return Err(CliError::config(
                "system.d0",
                format!("must lie inside the force table [{}, {}] nm", f.x_min, f.x_max),
            ));
        }

        let e = &self.experiment;
        positive("experiment.force.x_min", e.force.x_min)?;
        ordered("experiment.force.x_max", e.force.x_min, e.force.x_max)?;
        at_least("experiment.force.points", e.force.points, 2)?;

        let sp = &e.spectrum;
        positive("experiment.spectrum.f_min", sp.f_min)?;
        ordered("experiment.spectrum.f_max", sp.f_min, sp.f_max)?;
        at_least("experiment.spectrum.f_points", sp.f_points, 2)?;
        non_negative("experiment.spectrum.delta_min", sp.delta_min)?;
        ordered("experiment.spectrum.delta_max", sp.delta_min, sp.delta_max)?;
        at_least("experiment.spectrum.delta_points", sp.delta_points, 2)?;

        let si = &e.simulate;
        positive("experiment.simulate.duration_ms", si.duration_ms)?;
        positive("experiment.simulate.dt_us", si.dt_us)?;
        at_least("experiment.simulate.stride", si.stride, 1)?;
        if let Some(f) = si.f_mod {
            positive("experiment.simulate.f_mod", f)?;
        }
        non_negative("experiment.simulate.delta", si.delta)?;
        excite_key("experiment.simulate.excite", si.excite, true)?;
        non_negative("experiment.simulate.drive_amplitude", si.drive_amplitude)?;

        let l = &e.control_loop;
        excite_key("experiment.loop.excite", l.excite, false)?;
        positive("experiment.loop.f_min", l.f_min)?;
        ordered("experiment.loop.f_max", l.f_min, l.f_max)?;
        non_negative("experiment.loop.delta_min", l.delta_min)?;
        if l.delta_max < l.delta_min || !l.delta_max.is_finite() {
            return Err(CliError::config("experiment.loop.delta_max", "must be >= experiment.loop.delta_min"));
        }
        positive("experiment.loop.duration_ms", l.duration_ms)?;
        positive("experiment.loop.start_ms", l.start_ms)?;
        non_negative("experiment.loop.ramp_ms", l.ramp_ms)?;
        if l.ramp_ms >= l.start_ms {
            return Err(CliError::config("experiment.loop.ramp_ms", "must be shorter than experiment.loop.start_ms"));
        }
        if !l.modulation_phase.is_finite() {
            return Err(CliError::config("experiment.loop.modulation_phase", "must be finite"));
        }
        positive("experiment.loop.drive_amplitude", l.drive_amplitude)?;
        positive("experiment.loop.dt_us", l.dt_us)?;
        at_least("experiment.loop.stride", l.stride, 1)?;
        positive("experiment.loop.window_periods", l.window_periods)?;
        positive("experiment.loop.report_ms", l.report_ms)?;
        non_negative("experiment.loop.tail_ms", l.tail_ms)?;

        let p = &e.psd_map;
        if let Some(f) = p.f_mod {
            positive("experiment.psd_map.f_mod", f)?;
        }
        non_negative("experiment.psd_map.span", p.span)?;
        non_negative("experiment.psd_map.delta", p.delta)?;
        non_negative("experiment.psd_map.delta_min", p.delta_min)?;
        if p.delta_max < p.delta_min {
            return Err(CliError::config("experiment.psd_map.delta_max", "must be >= experiment.psd_map.delta_min"));
        }
        at_least("experiment.psd_map.points", p.points, 1)?;
        positive("experiment.psd_map.duration_s", p.duration_s)?;
        non_negative("experiment.psd_map.settle_s", p.settle_s)?;
        if p.settle_s >= p.duration_s {
            return Err(CliError::config("experiment.psd_map.settle_s", "must be shorter than experiment.psd_map.duration_s"));
        }
        positive("experiment.psd_map.dt_us", p.dt_us)?;
        at_least("experiment.psd_map.stride", p.stride, 1)?;
        at_least("experiment.psd_map.segment_len", p.segment_len, 16)?;
        if !(0.0..0.95).contains(&p.overlap) {
            return Err(CliError::config("experiment.psd_map.overlap", "must lie in [0, 0.95)"));
        }
        positive("experiment.psd_map.band_half_width", p.band_half_width)?;

        let ef = &e.efficiency;
        if let Some(list) = &ef.f_max_list {
            if list.is_empty() {
                return Err(CliError::config("experiment.efficiency.f_max_list", "must not be empty"));
            }
            for &f in list {
                if !(f > l.f_min && f.is_finite()) {
                    return Err(CliError::config(
                        "experiment.efficiency.f_max_list",
                        format!("every entry must exceed experiment.loop.f_min = {} Hz (got {f})", l.f_min),
                    ));
                }
            }
        }
        excite_key("experiment.efficiency.excite", ef.excite, false)?;

        at_least("experiment.validate.draws", e.validate.draws, 1)?;
        positive("experiment.validate.transduction_delta", e.validate.transduction_delta)?;
        Ok(())
    }

    /// Fill implicit defaults so that a serialized copy states every value
    /// that influenced the run.
    pub fn normalized(mut self) -> Self {
        let m = &mut self.materials;
        if m.model == MaterialKind::Drude {
            if m.plasma_frequency.is_none() && m.plasma_frequency_ev.is_none() {
                m.plasma_frequency_ev = Some(9.0);
            }
            if m.relaxation_rate.is_none() && m.relaxation_rate_ev.is_none() {
                m.relaxation_rate_ev = Some(0.035);
            }
        }
        let estimates = [BeamGeometry::sphere_cantilever(), BeamGeometry::plate_cantilever()];
        for (c, geometry) in [&mut self.system.cantilever1, &mut self.system.cantilever2].into_iter().zip(estimates) {
            if c.mass.is_none() {
                c.mass = Some(match c.stiffness {
                    Some(k) => k / hz_to_rad(c.frequency).powi(2),
                    None => estimate_effective_params(&geometry).map(|b| b.effective_mass).unwrap_or(f64::NAN),
                });
            }
        }
        self
    }

    /// Canonical TOML of the physics and experiment settings (no `[run]`).
    pub fn canonical_toml(&self) -> String {
        let mut copy = self.clone();
        copy.run = None;
        toml::to_string(&copy).expect("configuration serializes")
    }

    /// SHA-256 of [`Self::canonical_toml`], hex.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_toml().as_bytes()))
    }

    pub fn dielectric(&self) -> DielectricModel {
        let m = &self.materials;
        match m.model {
            MaterialKind::Ideal => DielectricModel::PerfectConductor,
            MaterialKind::Drude => DielectricModel::Drude {
                plasma_frequency: m
                    .plasma_frequency
                    .or(m.plasma_frequency_ev.map(ev_to_rad_per_s))
                    .unwrap_or(ev_to_rad_per_s(9.0)),
                relaxation_rate: m
                    .relaxation_rate
                    .or(m.relaxation_rate_ev.map(ev_to_rad_per_s))
                    .unwrap_or(ev_to_rad_per_s(0.035)),
            },
        }
    }

    pub fn mirror(&self) -> CliResult<MirrorStack> {
        let material = self.dielectric();
        Ok(match self.materials.film_thickness {
            Some(t) => MirrorStack::film_on(
                material,
                t * NM,
                DielectricModel::Constant {
                    epsilon: self.materials.substrate_epsilon,
                },
            )?,
            None => MirrorStack::bulk(material),
        })
    }

    pub fn thermal(&self) -> ThermalSetting {
        let t = ThermalSetting::at(self.system.temperature);
        match self.quadrature.matsubara_terms {
            Some(n) => t.with_terms(n),
            None => t,
        }
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            relative_tolerance: self.quadrature.relative_tolerance,
            absolute_tolerance: 0.0,
            max_subdivisions: self.quadrature.max_subdivisions,
        }
    }

    /// Force model of the direct (non-tabulated) evaluations.
    pub fn force_model(&self) -> CliResult<ForceModel> {
        let mirror = self.mirror()?;
        Ok(ForceModel {
            mirror1: mirror,
            mirror2: mirror,
            sphere_radius: self.system.sphere_radius * NM,
            thermal: self.thermal(),
            quadrature: self.quadrature_spec(),
        })
    }

    /// Tabulate the force field used by the dynamics.
    pub fn build_field(&self) -> CliResult<CasimirField> {
        let mut model = self.force_model()?;
        model.quadrature = QuadratureSpec {
            relative_tolerance: self.field.relative_tolerance,
            absolute_tolerance: 0.0,
            max_subdivisions: self.field.max_subdivisions,
        };
        let grid = GridSpec {
            x_min: self.field.x_min * NM,
            x_max: self.field.x_max * NM,
            points: self.field.points,
        };
        Ok(build_field(&model, &grid)?)
    }

    pub fn system_config(&self) -> CliResult<SystemConfig> {
        let s = &self.system;
        let cantilever = |name: &str, c: &CantileverSection| -> CliResult<Cantilever> {
            let mass = c.mass.ok_or_else(|| CliError::config(&format!("{name}.mass"), "missing"))?;
            positive(&format!("{name}.mass"), mass)?;
            Ok(Cantilever {
                mass,
                natural_frequency: hz_to_rad(c.frequency),
                damping: hz_to_rad(c.damping),
            })
        };
        let config = SystemConfig {
            cantilever1: cantilever("system.cantilever1", &s.cantilever1)?,
            cantilever2: cantilever("system.cantilever2", &s.cantilever2)?,
            sphere_radius: s.sphere_radius * NM,
            equilibrium_gap: s.d0 * NM,
            temperature: s.temperature,
            extra_damping_2: hz_to_rad(s.extra_damping_2),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn control_loop(&self) -> ControlLoop {
        let l = &self.experiment.control_loop;
        ControlLoop {
            direction: l.direction.into(),
            f_min: l.f_min,
            f_max: l.f_max,
            amplitude_min: l.delta_min * NM,
            amplitude_max: l.delta_max * NM,
            duration: l.duration_ms * 1e-3,
        }
    }

    pub fn transfer_settings(&self) -> TransferSettings {
        let l = &self.experiment.control_loop;
        TransferSettings {
            drive_amplitude: l.drive_amplitude * NM,
            loop_start: l.start_ms * 1e-3,
            ramp: l.ramp_ms * 1e-3,
            modulation_phase: l.modulation_phase,
            dt: l.dt_us * 1e-6,
            record_stride: l.stride,
            window_periods: l.window_periods,
            report_interval: l.report_ms * 1e-3,
            tail: l.tail_ms * 1e-3,
            thermal_noise: l.thermal_noise,
        }
    }

    pub fn psd_settings(&self) -> PsdSettings {
        let p = &self.experiment.psd_map;
        PsdSettings {
            duration: p.duration_s,
            settle: p.settle_s,
            dt: p.dt_us * 1e-6,
            record_stride: p.stride,
            welch: WelchSpec {
                segment_len: p.segment_len,
                overlap: p.overlap,
            },
            band_half_width: p.band_half_width,
        }
    }
}
