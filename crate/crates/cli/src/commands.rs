//! One function per subcommand: configuration in, table out.

use casimir_core::lifshitz::{ideal_force_derivatives, thermal_fraction};
use casimir_core::mechanics::{normal_modes, DriveSignal};
use casimir_core::protocol::{
    efficiency_vs_fmax, harmonic_coupling, minimum_splitting, predicted_splitting, psd_map, run_transfer_experiment,
};
use casimir_core::spectral::{ep_locate, surface_grid};
use casimir_core::units::{rad_to_hz, NM};
use casimir_core::{
    simulate, CasimirError, ForceLaw, ModulationSchedule, PsdSweep, SimulationOptions, SpectralMapping,
};
use rayon::prelude::*;

use crate::config::{LoopDirection, RunConfig, SweepKind};
use crate::error::{CliError, CliResult};
use crate::output::Table;

/// `n` log-spaced values from `a` to `b` inclusive.
fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| match i {
            0 => a,
            i if i + 1 == n => b,
            i => (la + (lb - la) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// `n` evenly spaced values from `a` to `b` inclusive.
fn lin_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Force, its derivatives, the ideal reference and the thermal fraction
/// over a separation scan.
pub fn force(config: &RunConfig) -> CliResult<Table> {
    let e = &config.experiment.force;
    let model = config.force_model()?;
    let field = config.build_field()?;
    let (lo, hi) = field.range();
    if e.x_min * NM < lo || e.x_max * NM > hi {
        return Err(CliError::config(
            "experiment.force.x_max",
            format!("scan must lie inside the force table [{}, {}] nm", config.field.x_min, config.field.x_max),
        ));
    }
    let temperature = config.system.temperature;
    let quad = config.quadrature_spec();
    let xs = log_space(e.x_min, e.x_max, e.points);
    let rows: Vec<CliResult<Vec<f64>>> = xs
        .par_iter()
        .map(|&x_nm| {
            let x = x_nm * NM;
            let f = model.direct_force(x)?;
            let s = field.sample(x).ok_or(CasimirError::FieldRange { x, min: lo, max: hi })?;
            let (ideal, _, _) = ideal_force_derivatives(model.sphere_radius, x);
            let fraction = if temperature > 0.0 {
                thermal_fraction(&model.mirror1, &model.mirror2, x, temperature, &quad)?
            } else {
                0.0
            };
            Ok(vec![x_nm, f, s.gradient, s.curvature, ideal, fraction])
        })
        .collect();
    let mut table = Table::new(&["x_nm", "F_N", "dFdx_N_per_m", "d2Fdx2_N_per_m2", "F_ideal_N", "thermal_fraction"]);
    table.note("temperature_K", temperature);
    for row in rows {
        table.push(row?);
    }
    Ok(table)
}

/// Eigenvalues of the effective Hamiltonian over the `(f_mod, δ_d)` grid.
pub fn spectrum(config: &RunConfig) -> CliResult<Table> {
    let e = &config.experiment.spectrum;
    let field = config.build_field()?;
    let system = config.system_config()?;
    let mapping = SpectralMapping::from_system(&system, &field)?;
    let freqs = lin_space(e.f_min, e.f_max, e.f_points);
    let amps: Vec<f64> = lin_space(e.delta_min, e.delta_max, e.delta_points).iter().map(|d| d * NM).collect();
    let grid = surface_grid(&mapping, &freqs, &amps);
    let mut table = Table::new(&["f_mod_Hz", "delta_d_nm", "re_lp", "im_lp", "re_lm", "im_lm", "gap"]);
    table.note("f21_eff_Hz", mapping.f21_hz);
    table.note("units", "eigenvalues and gap in rad/s");
    for column in &grid {
        for p in column {
            table.push(vec![
                p.f_mod_hz,
                p.amplitude / NM,
                p.pair.plus.re,
                p.pair.plus.im,
                p.pair.minus.re,
                p.pair.minus.im,
                p.pair.gap(),
            ]);
        }
    }
    Ok(table)
}

/// Exceptional point of the configured system.
pub fn ep_locate_cmd(config: &RunConfig) -> CliResult<Table> {
    let field = config.build_field()?;
    let system = config.system_config()?;
    let mapping = SpectralMapping::from_system(&system, &field)?;
    let ep = ep_locate(&mapping)?;
    let gap = mapping.eigenvalues(ep.frequency_hz, ep.amplitude).gap();
    let bare = rad_to_hz(system.cantilever2.natural_frequency - system.cantilever1.natural_frequency);
    let mut table = Table::new(&[
        "delta_ep_nm",
        "f_mod_ep_Hz",
        "f21_bare_Hz",
        "gamma1_rad_per_s",
        "gamma2_rad_per_s",
        "coupling_rad_per_s_per_m",
        "gap_at_ep_rad_per_s",
    ]);
    table.push(vec![
        ep.amplitude / NM,
        ep.frequency_hz,
        bare,
        mapping.gamma1,
        mapping.gamma2,
        mapping.coupling_per_metre,
        gap,
    ]);
    Ok(table)
}

/// One trajectory under a constant modulation, optionally driven.
pub fn simulate_cmd(config: &RunConfig) -> CliResult<Table> {
    let e = &config.experiment.simulate;
    let field = config.build_field()?;
    let system = config.system_config()?;
    let modes = normal_modes(&system, &field)?;
    let f_mod = match e.f_mod {
        Some(f) => f,
        None => rad_to_hz(modes.difference()),
    };
    let schedule = ModulationSchedule::constant(f_mod, e.delta * NM, 0.0)?;
    let duration = e.duration_ms * 1e-3;
    let drives: Vec<DriveSignal> = match e.excite {
        0 => Vec::new(),
        i => {
            let idx = i as usize;
            vec![DriveSignal::for_amplitude(
                idx,
                &system.resonator(idx),
                modes.frequencies[idx - 1],
                e.drive_amplitude * NM,
                0.0,
                duration,
            )]
        }
    };
    let options = SimulationOptions::new(duration, e.dt_us * 1e-6)
        .stride(e.stride)
        .noise(e.thermal_noise.then_some(config.seed));
    let traj = simulate(&system, &field, &schedule, &drives, &options)?;
    let (r1, r2) = (system.resonator1(), system.resonator2());
    let (k1, k2) = (r1.stiffness(), r2.stiffness());
    let mut table = Table::new(&["t_s", "x1_m", "x2_m", "gap_m", "E1_J", "E2_J"]);
    table.note("f_mod_Hz", f_mod);
    table.note("delta_d_nm", e.delta);
    for i in 0..traj.len() {
        let (x1, x2) = (traj.x1[i], traj.x2[i]);
        let e1 = 0.5 * r1.mass * traj.v1[i].powi(2) + 0.5 * k1 * x1 * x1;
        let e2 = 0.5 * r2.mass * traj.v2[i].powi(2) + 0.5 * k2 * x2 * x2;
        table.push(vec![traj.time[i], x1, x2, traj.gap[i], e1, e2]);
    }
    Ok(table)
}

/// One transfer experiment around the configured loop.
pub fn loop_cmd(config: &RunConfig) -> CliResult<Table> {
    let l = &config.experiment.control_loop;
    let field = config.build_field()?;
    let system = config.system_config()?;
    let control = config.control_loop();
    let result = run_transfer_experiment(
        &system,
        &field,
        &control,
        l.excite as usize,
        config.seed,
        &config.transfer_settings(),
    )?;
    let mut table = Table::new(&["t_s", "E1_J", "E2_J", "E1_share", "E2_share"]);
    table.note(
        "direction",
        match l.direction {
            LoopDirection::Cw => "cw",
            LoopDirection::Acw => "acw",
        },
    );
    table.note("excite", l.excite);
    table.note("loop_end_s", result.end_time);
    table.note(
        "eta",
        result.efficiency.map_or("indeterminate".to_string(), |v| format!("{v:e}")),
    );
    table.note("noise_floor_J", format!("{:e}", result.noise_floor));
    for (i, s) in result.segments.iter().enumerate() {
        table.note(
            &format!("segment{}", i + 1),
            format!(
                "({} Hz, {} nm) -> ({} Hz, {} nm): min gap {:e} rad/s, gap*T {:.3}, {:?}",
                s.from.0,
                s.from.1 / NM,
                s.to.0,
                s.to.1 / NM,
                s.min_gap,
                s.product,
                s.class
            ),
        );
    }
    let en = &result.energies;
    for i in 0..en.time.len() {
        table.push_optional(vec![
            Some(en.time[i]),
            Some(en.e1[i]),
            Some(en.e2[i]),
            result.normalized1[i],
            result.normalized2[i],
        ]);
    }
    Ok(table)
}

/// Thermally driven PSD map of cantilever 2, long format.
pub fn psd_map_cmd(config: &RunConfig) -> CliResult<Table> {
    let p = &config.experiment.psd_map;
    let field = config.build_field()?;
    let system = config.system_config()?;
    let mapping = SpectralMapping::from_system(&system, &field)?;
    let centre = p.f_mod.unwrap_or(mapping.f21_hz);
    let sweep = match p.sweep {
        SweepKind::Frequency => PsdSweep::Frequency {
            amplitude: p.delta * NM,
            values: lin_space(centre - 0.5 * p.span, centre + 0.5 * p.span, p.points),
        },
        SweepKind::Amplitude => PsdSweep::Amplitude {
            frequency: centre,
            values: lin_space(p.delta_min, p.delta_max, p.points).iter().map(|d| d * NM).collect(),
        },
    };
    let map = psd_map(&system, &field, &sweep, config.seed, &config.psd_settings())?;
    let mut table = Table::new(&["f_mod_Hz", "delta_d_nm", "f_Hz", "psd_m2_per_Hz"]);
    table.note("f21_eff_Hz", mapping.f21_hz);
    if let Some(w) = &map.warning {
        table.note("warning", w);
    }
    if let PsdSweep::Frequency { amplitude, .. } = sweep {
        table.note(
            "min_splitting_Hz",
            minimum_splitting(&map).map_or("unresolved".to_string(), |v| format!("{v:e}")),
        );
        let g = harmonic_coupling(&system, &field, amplitude)?;
        table.note(
            "predicted_splitting_Hz",
            predicted_splitting(&mapping, g).map_or("below exceptional point".to_string(), |v| format!("{v:e}")),
        );
    }
    for (i, row) in map.density.iter().enumerate() {
        let (f_mod, delta) = match &map.sweep {
            PsdSweep::Frequency { amplitude, values } => (values[i], *amplitude),
            PsdSweep::Amplitude { frequency, values } => (*frequency, values[i]),
        };
        for (f, d) in map.frequencies.iter().zip(row) {
            table.push(vec![f_mod, delta / NM, *f, *d]);
        }
    }
    Ok(table)
}

/// Default `f_max` grid around the effective difference frequency.
pub fn default_fmax_list(f21: f64) -> Vec<f64> {
    (-4..=6).map(|k| f21 + 10.0 * k as f64).collect()
}

/// Clockwise-loop transfer efficiency versus `f_max`.
pub fn efficiency(config: &RunConfig) -> CliResult<Table> {
    let e = &config.experiment.efficiency;
    let field = config.build_field()?;
    let system = config.system_config()?;
    let mapping = SpectralMapping::from_system(&system, &field)?;
    let list = e.f_max_list.clone().unwrap_or_else(|| default_fmax_list(mapping.f21_hz));
    let f_min = config.experiment.control_loop.f_min;
    if let Some(bad) = list.iter().find(|&&f| f <= f_min) {
        return Err(CliError::config(
            "experiment.efficiency.f_max_list",
            format!("every entry must exceed experiment.loop.f_min = {f_min} Hz (got {bad})"),
        ));
    }
    let points = efficiency_vs_fmax(
        &system,
        &field,
        &config.control_loop(),
        &list,
        e.excite as usize,
        config.seed,
        e.ensemble,
        &config.transfer_settings(),
    )?;
    let mut table = Table::new(&["f_max_Hz", "eta", "eta_mean", "eta_std", "samples"]);
    table.note("f21_eff_Hz", mapping.f21_hz);
    table.note("excite", e.excite);
    for p in points {
        table.push_optional(vec![Some(p.f_max), p.efficiency, p.mean, p.std, Some(p.samples as f64)]);
    }
    Ok(table)
}
