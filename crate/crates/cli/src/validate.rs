//! Analytic-oracle suite behind the `validate` subcommand.

use casimir_core::lifshitz::{energy_per_area_t0, ideal_energy_per_area, ideal_force, pfa_force};
use casimir_core::protocol::{transduction_ode, transduction_ratio, TransductionSettings};
use casimir_core::spectral::{eigenvalues, ep_locate};
use casimir_core::units::NM;
use casimir_core::{EffectiveHamiltonian, Geometry, MirrorStack, SpectralMapping, ThermalSetting};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::Table;

/// Outcome of one oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    /// The compared error measure (relative unless stated by the name).
    pub error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.error.is_finite() && self.error <= self.tolerance
    }
}

fn relative(name: String, value: f64, reference: f64, tolerance: f64) -> Check {
    Check {
        name,
        value,
        reference,
        error: ((value - reference) / reference).abs(),
        tolerance,
    }
}

/// Ideal-conductor energy and PFA force against their closed forms.
pub fn ideal_limit_checks(config: &RunConfig) -> CliResult<Vec<Check>> {
    let quad = config.quadrature_spec();
    let ideal = MirrorStack::ideal();
    let radius = config.system.sphere_radius * NM;
    let mut out = Vec::new();
    for x_nm in [50.0, 100.0, 500.0] {
        let x = x_nm * NM;
        let e = energy_per_area_t0(&ideal, &ideal, x, &quad)?;
        out.push(relative(format!("ideal_energy_{x_nm}nm"), e, ideal_energy_per_area(x), 5e-3));
        let g = Geometry::new(radius, x)?;
        let f = pfa_force(&g, &ideal, &ideal, &ThermalSetting::zero(), &quad)?;
        out.push(relative(format!("ideal_pfa_force_{x_nm}nm"), f, ideal_force(&g), 5e-3));
    }
    Ok(out)
}

/// Sum and product of the closed-form eigenvalues against trace and
/// determinant over random Hamiltonians; returns the worst relative error
/// of each.
pub fn trace_identity_checks(draws: usize, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_trace, mut worst_det) = (0.0f64, 0.0f64);
    for _ in 0..draws {
        let h = EffectiveHamiltonian {
            gamma1: rng.random_range(0.0..200.0),
            gamma2: rng.random_range(0.0..200.0),
            coupling: rng.random_range(0.0..400.0),
            detuning: rng.random_range(-400.0..400.0),
        };
        let pair = eigenvalues(&h);
        let scale = h.gamma1.max(h.gamma2).max(h.coupling).max(h.detuning.abs()).max(1e-300);
        worst_trace = worst_trace.max((pair.plus + pair.minus - h.trace()).norm() / scale);
        worst_det = worst_det.max((pair.plus * pair.minus - h.determinant()).norm() / (scale * scale));
    }
    vec![
        Check {
            name: "trace_identity".into(),
            value: worst_trace,
            reference: 0.0,
            error: worst_trace,
            tolerance: 1e-12,
        },
        Check {
            name: "determinant_identity".into(),
            value: worst_det,
            reference: 0.0,
            error: worst_det,
            tolerance: 1e-12,
        },
    ]
}

/// Everything that needs the configured system and its force field: the
/// gap at the exceptional point and the transduction ODE cross-check.
pub fn system_checks(config: &RunConfig) -> CliResult<Vec<Check>> {
    let field = config.build_field()?;
    let system = config.system_config()?;
    let mapping = SpectralMapping::from_system(&system, &field)?;
    let ep = ep_locate(&mapping)?;
    let gap = mapping.eigenvalues(ep.frequency_hz, ep.amplitude).gap();
    let mut out = vec![Check {
        name: "ep_gap_over_gamma1".into(),
        value: gap / mapping.gamma1,
        reference: 0.0,
        error: gap / mapping.gamma1,
        tolerance: 1e-3,
    }];
    let delta = config.experiment.validate.transduction_delta * NM;
    let closed = transduction_ratio(&system, &field, delta)?;
    let ode = transduction_ode(&system, &field, delta, mapping.f21_hz, &TransductionSettings::default())?;
    out.push(relative("transduction_ode_vs_closed_form".into(), ode, closed, 0.05));
    Ok(out)
}

pub fn run_checks(config: &RunConfig) -> CliResult<Vec<Check>> {
    let mut checks = ideal_limit_checks(config)?;
    checks.extend(trace_identity_checks(config.experiment.validate.draws, config.seed));
    checks.extend(system_checks(config)?);
    Ok(checks)
}

pub fn to_table(checks: &[Check]) -> Table {
    let mut table = Table::new(&["check", "value", "reference", "error", "tolerance", "pass"]);
    for (i, c) in checks.iter().enumerate() {
        table.note(&format!("check{i}"), &c.name);
        table.push(vec![
            i as f64,
            c.value,
            c.reference,
            c.error,
            c.tolerance,
            if c.passed() { 1.0 } else { 0.0 },
        ]);
    }
    table
}
