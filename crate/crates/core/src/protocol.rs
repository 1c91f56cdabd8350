//! Experiment protocols built on the integrator: steady-state transduction,
//! thermally driven PSD maps, rectangular control loops in the
//! `(f_mod, δ_d)` plane and the transfer efficiency they achieve.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{num_complex::Complex64, FftPlanner};

use crate::error::{CasimirError, Result};
use crate::field::ForceLaw;
use crate::mechanics::{
    demodulate_amplitude, demodulated_energies, normal_modes, simulate, DriveSignal, EnergySeries,
    InitialState, ModulationKnot, ModulationSchedule, SimulationOptions, SystemConfig,
};
use crate::spectral::SpectralMapping;
use crate::units::K_B;

/// Traversal sense of a control loop.
///
/// Both senses start at the `(f_min, δ_max)` corner. In the plane with
/// `δ_d` on the horizontal axis and `f_mod` on the vertical one, clockwise
/// first lowers `δ_d` at `f_min`, then sweeps `f_mod` up at `δ_min`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Clockwise,
    Anticlockwise,
}

impl Direction {
    pub fn reversed(self) -> Self {
        match self {
            Direction::Clockwise => Direction::Anticlockwise,
            Direction::Anticlockwise => Direction::Clockwise,
        }
    }
}

/// Axis-aligned rectangle in `(f_mod, δ_d)` traversed in four equal-duration
/// linear segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlLoop {
    pub direction: Direction,
    /// Hz.
    pub f_min: f64,
    /// Hz.
    pub f_max: f64,
    /// m.
    pub amplitude_min: f64,
    /// m.
    pub amplitude_max: f64,
    /// Total loop time, s.
    pub duration: f64,
}

impl ControlLoop {
    /// 680–785 Hz, 6.7–13.3 nm, 80 ms.
    pub fn measured(direction: Direction) -> Self {
        Self {
            direction,
            f_min: 680.0,
            f_max: 785.0,
            amplitude_min: 6.7e-9,
            amplitude_max: 13.3e-9,
            duration: 0.08,
        }
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_f_max(mut self, f_max: f64) -> Self {
        self.f_max = f_max;
        self
    }

    /// A degenerate rectangle (`δ_min = δ_max`) is accepted so a
    /// zero-coupling loop can be run as a baseline.
    pub fn validate(&self) -> Result<()> {
        if !(self.f_min > 0.0) || !(self.f_max > self.f_min) {
            return Err(CasimirError::config("experiment.loop.f_max", "need 0 < f_min < f_max"));
        }
        if !(self.amplitude_min >= 0.0) || !(self.amplitude_max >= self.amplitude_min) {
            return Err(CasimirError::config("experiment.loop.delta_max", "need 0 <= delta_min <= delta_max"));
        }
        if !(self.duration > 0.0) {
            return Err(CasimirError::config("experiment.loop.duration_ms", "must be > 0"));
        }
        Ok(())
    }

    /// Closed vertex list (first = last) in traversal order.
    pub fn vertices(&self) -> [(f64, f64); 5] {
        let a = (self.f_min, self.amplitude_max);
        let b = (self.f_min, self.amplitude_min);
        let c = (self.f_max, self.amplitude_min);
        let d = (self.f_max, self.amplitude_max);
        match self.direction {
            Direction::Clockwise => [a, b, c, d, a],
            Direction::Anticlockwise => [a, d, c, b, a],
        }
    }

    pub fn segment_duration(&self) -> f64 {
        self.duration / 4.0
    }

    /// Whether `(f_mod, δ_d)` lies strictly inside the rectangle.
    pub fn encloses(&self, f_mod_hz: f64, amplitude: f64) -> bool {
        f_mod_hz > self.f_min && f_mod_hz < self.f_max && amplitude > self.amplitude_min && amplitude < self.amplitude_max
    }

    /// Modulation schedule: `δ_d` ramps up from zero at `f_min` over
    /// `ramp` seconds, the loop starts at `start` and the last corner is
    /// held afterwards.
    pub fn schedule(&self, start: f64, ramp: f64, initial_phase: f64) -> Result<ModulationSchedule> {
        self.validate()?;
        let v = self.vertices();
        let seg = self.segment_duration();
        let mut knots = Vec::with_capacity(6);
        if ramp > 0.0 {
            knots.push(ModulationKnot {
                time: start - ramp,
                frequency: v[0].0,
                amplitude: 0.0,
            });
        }
        for (i, &(f, delta)) in v.iter().enumerate() {
            knots.push(ModulationKnot {
                time: start + seg * i as f64,
                frequency: f,
                amplitude: delta,
            });
        }
        ModulationSchedule::new(knots, initial_phase)
    }
}

/// Sweep-rate classification of one loop segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adiabaticity {
    /// `min gap × segment time < 1`.
    NonAdiabatic,
    /// `min gap × segment time > 10`.
    Adiabatic,
    Intermediate,
}

impl Adiabaticity {
    pub fn classify(product: f64) -> Self {
        if product < 1.0 {
            Adiabaticity::NonAdiabatic
        } else if product > 10.0 {
            Adiabaticity::Adiabatic
        } else {
            Adiabaticity::Intermediate
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentReport {
    pub from: (f64, f64),
    pub to: (f64, f64),
    /// Minimum `|λ₊ − λ₋|` along the segment, rad/s.
    pub min_gap: f64,
    /// s.
    pub duration: f64,
    /// `min_gap × duration`.
    pub product: f64,
    pub class: Adiabaticity,
}

/// Gap-times-duration of every loop segment.
pub fn adiabaticity_report(mapping: &SpectralMapping, control: &ControlLoop) -> Vec<SegmentReport> {
    let v = control.vertices();
    let duration = control.segment_duration();
    crate::spectral::edge_gaps(mapping, &v[..4], 400)
        .into_iter()
        .enumerate()
        .map(|(i, min_gap)| {
            let product = min_gap * duration;
            SegmentReport {
                from: v[i],
                to: v[i + 1],
                min_gap,
                duration,
                product,
                class: Adiabaticity::classify(product),
            }
        })
        .collect()
}

/// Numerical controls of a loop experiment. Defaults follow the module
/// documentation: 0.5 nm drive during 0–80 ms, 1 µs RK4 steps, a 0.1 ms
/// ramp of `δ_d` before the loop and no thermal noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferSettings {
    /// Steady resonant amplitude the drive would produce, m.
    pub drive_amplitude: f64,
    /// Drive on in `[0, loop_start)`; the loop starts at `loop_start`, s.
    pub loop_start: f64,
    /// Ramp of `δ_d` from zero before the loop, s.
    pub ramp: f64,
    /// Modulation phase at the start of the ramp, rad.
    pub modulation_phase: f64,
    pub dt: f64,
    pub record_stride: usize,
    /// Demodulation window length in periods of the slower mode.
    pub window_periods: f64,
    /// Spacing of the reported energies, s.
    pub report_interval: f64,
    /// Extra simulated time after the loop so the last window fits, s.
    pub tail: f64,
    pub thermal_noise: bool,
}

impl Default for TransferSettings {
    fn default() -> Self {
        Self {
            drive_amplitude: 0.5e-9,
            loop_start: 0.08,
            ramp: 1e-4,
            modulation_phase: -0.5 * PI,
            dt: 1e-6,
            record_stride: 10,
            window_periods: 5.0,
            report_interval: 0.5e-3,
            tail: 1.2e-3,
            thermal_noise: false,
        }
    }
}

/// Outcome of one loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferResult {
    pub energies: EnergySeries,
    /// `E₁/(E₁+E₂)` per report, `None` below the noise floor.
    pub normalized1: Vec<Option<f64>>,
    pub normalized2: Vec<Option<f64>>,
    /// Time at which η is evaluated (loop end), s.
    pub end_time: f64,
    /// `E₂/(E₁+E₂)` at `end_time`, `None` if indeterminate.
    pub efficiency: Option<f64>,
    /// Energy scale below which ratios are not reported, J.
    pub noise_floor: f64,
    pub segments: Vec<SegmentReport>,
}

/// Energy scale of the noise: `k_B T` with thermal noise on, otherwise a
/// numerical floor `1e-12` below the largest total energy.
fn noise_floor(config: &SystemConfig, energies: &EnergySeries, thermal: bool) -> f64 {
    if thermal {
        K_B * config.temperature
    } else {
        let peak = energies.e1.iter().zip(&energies.e2).map(|(a, b)| a + b).fold(0.0, f64::max);
        1e-12 * peak
    }
}

/// Drive one cantilever, run the loop and report normalized energies.
///
/// `seed` feeds the thermal force noise when it is enabled.
pub fn run_transfer_experiment<L: ForceLaw + ?Sized>(
    config: &SystemConfig,
    law: &L,
    control: &ControlLoop,
    excited: usize,
    seed: u64,
    settings: &TransferSettings,
) -> Result<TransferResult> {
    if excited != 1 && excited != 2 {
        return Err(CasimirError::config("experiment.loop.excite", "must be 1 or 2"));
    }
    let schedule = control.schedule(settings.loop_start, settings.ramp, settings.modulation_phase)?;
    let [w1, w2] = normal_modes(config, law)?.frequencies;
    let resonator = config.resonator(excited);
    let w = if excited == 1 { w1 } else { w2 };
    let drive = DriveSignal::for_amplitude(excited, &resonator, w, settings.drive_amplitude, 0.0, settings.loop_start);
    let end_time = settings.loop_start + control.duration;
    let options = SimulationOptions::new(end_time + settings.tail, settings.dt)
        .stride(settings.record_stride)
        .noise(settings.thermal_noise.then_some(seed));
    let traj = simulate(config, law, &schedule, &[drive], &options)?;
    let energies = demodulated_energies(&traj, config, (w1, w2), settings.window_periods, settings.report_interval)?;
    let floor = noise_floor(config, &energies, settings.thermal_noise);
    let threshold = 10.0 * floor;
    let share = |a: f64, b: f64| {
        let total = a + b;
        (total > threshold).then(|| a / total)
    };
    let normalized1 = energies.e1.iter().zip(&energies.e2).map(|(&a, &b)| share(a, b)).collect();
    let normalized2 = energies.e1.iter().zip(&energies.e2).map(|(&a, &b)| share(b, a)).collect();
    let efficiency = energies.at(end_time).and_then(|(e1, e2)| share(e2, e1));
    let mapping = SpectralMapping::from_system(config, law)?;
    Ok(TransferResult {
        segments: adiabaticity_report(&mapping, control),
        energies,
        normalized1,
        normalized2,
        end_time,
        efficiency,
        noise_floor: floor,
    })
}

/// One point of the efficiency curve.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyPoint {
    /// Hz.
    pub f_max: f64,
    /// η of the nominal run (settings as given, seed `base_seed`).
    pub efficiency: Option<f64>,
    /// Mean and standard deviation over the seeded ensemble.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// Number of ensemble members with a determinate η.
    pub samples: usize,
}

/// Modulation phase of ensemble member `member`, drawn from `base_seed`.
pub fn ensemble_phase(base_seed: u64, member: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(member as u64));
    -0.5 * PI + rng.random_range(-PI..PI)
}

/// Clockwise-loop η versus `f_max`.
///
/// Each point runs the nominal experiment plus `ensemble` extra runs whose
/// modulation phase (and thermal noise seed, if enabled) is drawn from
/// `base_seed`; their spread gives the error bar. Runs execute in parallel
/// and are merged by grid index.
#[allow(clippy::too_many_arguments)]
pub fn efficiency_vs_fmax<L: ForceLaw + ?Sized>(
    config: &SystemConfig,
    law: &L,
    base: &ControlLoop,
    f_max_list: &[f64],
    excited: usize,
    base_seed: u64,
    ensemble: usize,
    settings: &TransferSettings,
) -> Result<Vec<EfficiencyPoint>> {
    let jobs: Vec<(usize, usize)> = (0..f_max_list.len()).flat_map(|i| (0..=ensemble).map(move |j| (i, j))).collect();
    let results: Vec<Result<Option<f64>>> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let control = base.with_f_max(f_max_list[i]).with_direction(Direction::Clockwise);
            let mut s = *settings;
            let seed = base_seed.wrapping_add(j as u64);
            if j > 0 {
                s.modulation_phase = ensemble_phase(base_seed, j);
            }
            run_transfer_experiment(config, law, &control, excited, seed, &s).map(|r| r.efficiency)
        })
        .collect();
    let mut out = Vec::with_capacity(f_max_list.len());
    let mut iter = results.into_iter();
    for &f_max in f_max_list {
        let efficiency = iter.next().expect("nominal run")?;
        let mut members = Vec::with_capacity(ensemble);
        for _ in 0..ensemble {
            if let Some(eta) = iter.next().expect("ensemble run")? {
                members.push(eta);
            }
        }
        let (mean, std) = mean_std(&members);
        out.push(EfficiencyPoint {
            f_max,
            efficiency,
            mean,
            std,
            samples: members.len(),
        });
    }
    Ok(out)
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(std))
}

/// Closed-form steady amplitude ratio `A₁/A₂ = |F''| δ_d / (2 m₁ ω₁ γ₁)`
/// when cantilever 2 is driven and the gap is modulated at the difference
/// frequency.
///
/// Evaluated in the normal-mode basis (frequencies, damping and shapes from
/// [`normal_modes`]) with the force-feedback gain of the modulation; as the
/// force gradient vanishes it is exactly the expression above with the
/// softened `ω₁`.
pub fn transduction_ratio<L: ForceLaw + ?Sized>(config: &SystemConfig, law: &L, amplitude: f64) -> Result<f64> {
    let sample = law.sample(config.equilibrium_gap).ok_or(CasimirError::FieldRange {
        x: config.equilibrium_gap,
        min: law.domain().0,
        max: law.domain().1,
    })?;
    let modes = normal_modes(config, law)?;
    let projection = (modes.gap_projection(0) * modes.gap_projection(1)).abs();
    let shape_ratio = modes.shapes[0][0] / modes.shapes[1][1];
    let gain = modes.modulation_gain(modes.difference()).abs();
    Ok(sample.curvature.abs() * amplitude * projection * gain * shape_ratio
        / (2.0 * modes.frequencies[0] * modes.damping[0]))
}

/// One point of a transduction curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransductionPoint {
    pub f_mod_hz: f64,
    pub ratio: f64,
}

/// Closed-form ratio versus modulation frequency: a Lorentzian of
/// half-width `γ₁/2` centred on the softened difference frequency.
pub fn transduction_vs_fmod<L: ForceLaw + ?Sized>(
    config: &SystemConfig,
    law: &L,
    amplitude: f64,
    frequencies: &[f64],
) -> Result<Vec<TransductionPoint>> {
    let peak = transduction_ratio(config, law, amplitude)?;
    let mapping = SpectralMapping::from_system(config, law)?;
    let half = 0.5 * mapping.gamma1;
    Ok(frequencies
        .iter()
        .map(|&f| {
            let detuning = 2.0 * PI * (f - mapping.f21_hz);
            TransductionPoint {
                f_mod_hz: f,
                ratio: peak * half / (detuning * detuning + half * half).sqrt(),
            }
        })
        .collect())
}

/// Numerical controls of the ODE transduction estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransductionSettings {
    /// Steady amplitude of the driven cantilever 2, m.
    pub drive_amplitude: f64,
    /// Simulated time, s.
    pub duration: f64,
    pub dt: f64,
    pub record_stride: usize,
    /// Amplitudes are averaged over this many periods at the end, periods
    /// of the slower mode.
    pub window_periods: f64,
}

impl Default for TransductionSettings {
    fn default() -> Self {
        Self {
            drive_amplitude: 0.5e-9,
            duration: 1.0,
            dt: 2e-6,
            record_stride: 5,
            window_periods: 200.0,
        }
    }
}

/// Steady `A₁/A₂` from the full nonlinear equations: cantilever 2 starts
/// on its driven steady state, cantilever 1 at rest, and the gap is
/// modulated at `f_mod_hz` from `t = 0`.
pub fn transduction_ode<L: ForceLaw + ?Sized>(
    config: &SystemConfig,
    law: &L,
    amplitude: f64,
    f_mod_hz: f64,
    settings: &TransductionSettings,
) -> Result<f64> {
    let [w1, w2] = normal_modes(config, law)?.frequencies;
    let c2 = config.resonator2();
    // Quadrature phase: F cos(ω t) drives x = A sin(ω t) at resonance.
    let drive = DriveSignal::for_amplitude(2, &c2, w2, settings.drive_amplitude, 0.0, f64::INFINITY);
    let initial = InitialState {
        v2: settings.drive_amplitude * w2,
        ..InitialState::default()
    };
    let schedule = ModulationSchedule::constant(f_mod_hz, amplitude, 0.0)?;
    let options = SimulationOptions::new(settings.duration, settings.dt)
        .stride(settings.record_stride)
        .initial(initial);
    let traj = simulate(config, law, &schedule, &[drive], &options)?;
    let dt = traj.sample_interval;
    let half = (0.5 * settings.window_periods * 2.0 * PI / w1.min(w2) / dt).ceil() as usize;
    if traj.len() < 2 * half + 1 {
        return Err(CasimirError::Range("transduction run shorter than its averaging window".into()));
    }
    let center = traj.len() - 1 - half;
    let a1 = demodulate_amplitude(&traj.x1, dt, w1, center, half);
    let a2 = demodulate_amplitude(&traj.x2, dt, w2, center, half);
    Ok(a1 / a2)
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Hz.
    pub frequencies: Vec<f64>,
    /// Signal units squared per Hz.
    pub density: Vec<f64>,
    pub segments: usize,
}

impl Spectrum {
    pub fn resolution(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }

    /// `∫ S df` over the whole band.
    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.resolution()
    }
}

/// Welch segment layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchSpec {
    pub segment_len: usize,
    /// Fraction of a segment shared with the next one.
    pub overlap: f64,
}

impl Default for WelchSpec {
    fn default() -> Self {
        Self {
            segment_len: 1 << 14,
            overlap: 0.5,
        }
    }
}

/// Welch estimate: Hann-windowed, mean-removed segments, averaged
/// periodograms scaled so that `∫ S df` equals the signal variance.
/// Signals shorter than one segment use a single segment of their length.
pub fn psd(signal: &[f64], dt: f64, spec: &WelchSpec) -> Result<Spectrum> {
    if signal.len() < 4 {
        return Err(CasimirError::Range("PSD needs at least four samples".into()));
    }
    if !(dt > 0.0) || !(0.0..1.0).contains(&spec.overlap) {
        return Err(CasimirError::config("psd", "need dt > 0 and overlap in [0, 1)"));
    }
    let n = spec.segment_len.min(signal.len()).max(4);
    let step = ((n as f64 * (1.0 - spec.overlap)).round() as usize).max(1);
    let segments = (signal.len() - n) / step + 1;
    let window: Vec<f64> = (0..n).map(|j| 0.5 - 0.5 * (2.0 * PI * j as f64 / n as f64).cos()).collect();
    let power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let bins = n / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for s in 0..segments {
        let seg = &signal[s * step..s * step + n];
        let mean = seg.iter().sum::<f64>() / n as f64;
        for ((b, &v), &w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex64::new((v - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    let fs = 1.0 / dt;
    let scale = 1.0 / (fs * power * segments as f64);
    let density = acc
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let one_sided = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
            a * scale * one_sided
        })
        .collect();
    let frequencies = (0..bins).map(|k| k as f64 * fs / n as f64).collect();
    Ok(Spectrum {
        frequencies,
        density,
        segments,
    })
}

/// What is swept along the first axis of a PSD map.
#[derive(Debug, Clone, PartialEq)]
pub enum PsdSweep {
    /// Modulation frequencies (Hz) at a fixed `δ_d` (m).
    Frequency { amplitude: f64, values: Vec<f64> },
    /// Modulation amplitudes (m) at a fixed `f_mod` (Hz).
    Amplitude { frequency: f64, values: Vec<f64> },
}

impl PsdSweep {
    pub fn values(&self) -> &[f64] {
        match self {
            PsdSweep::Frequency { values, .. } | PsdSweep::Amplitude { values, .. } => values,
        }
    }

    fn point(&self, i: usize) -> (f64, f64) {
        match self {
            PsdSweep::Frequency { amplitude, values } => (values[i], *amplitude),
            PsdSweep::Amplitude { frequency, values } => (*frequency, values[i]),
        }
    }
}

/// Numerical controls of a PSD map. The trajectory is recorded every
/// `record_stride` steps and the Welch segments are taken on that
/// decimated record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdSettings {
    /// Simulated time per sweep point, s.
    pub duration: f64,
    /// Initial transient discarded before the estimate, s.
    pub settle: f64,
    pub dt: f64,
    pub record_stride: usize,
    pub welch: WelchSpec,
    /// Spectral window kept around the softened resonance of cantilever 2, Hz.
    pub band_half_width: f64,
}

impl Default for PsdSettings {
    fn default() -> Self {
        Self {
            duration: 3.0,
            settle: 0.3,
            dt: 2e-6,
            record_stride: 20,
            welch: WelchSpec::default(),
            band_half_width: 80.0,
        }
    }
}

/// Cantilever-2 displacement PSD over a sweep of the modulation.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMap {
    pub sweep: PsdSweep,
    /// Hz, strictly increasing.
    pub frequencies: Vec<f64>,
    /// `density[i][k]`, m²/Hz, for sweep point `i` and frequency `k`.
    pub density: Vec<Vec<f64>>,
    /// Set when the sweep step exceeds the narrower linewidth.
    pub warning: Option<String>,
}

/// Thermally driven PSD map of cantilever 2. Sweep point `i` uses noise
/// seed `seed + i`; points run in parallel and merge by index.
pub fn psd_map<L: ForceLaw + ?Sized>(
    config: &SystemConfig,
    law: &L,
    sweep: &PsdSweep,
    seed: u64,
    settings: &PsdSettings,
) -> Result<PsdMap> {
    if !(config.temperature > 0.0) {
        return Err(CasimirError::config("system.temperature", "PSD maps need thermal noise (T > 0)"));
    }
    if !(settings.settle >= 0.0) || !(settings.duration > settings.settle) {
        return Err(CasimirError::config("experiment.psd_map.duration_s", "must exceed experiment.psd_map.settle_s"));
    }
    let f2 = normal_modes(config, law)?.frequencies[1] / (2.0 * PI);
    let (lo, hi) = (f2 - settings.band_half_width, f2 + settings.band_half_width);
    let rows: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..sweep.values().len())
        .into_par_iter()
        .map(|i| {
            let (f_mod, delta) = sweep.point(i);
            let schedule = ModulationSchedule::constant(f_mod, delta, 0.0)?;
            let options = SimulationOptions::new(settings.duration, settings.dt)
                .stride(settings.record_stride)
                .noise(Some(seed.wrapping_add(i as u64)));
            let traj = simulate(config, law, &schedule, &[], &options)?;
            let skip = (settings.settle / traj.sample_interval).round() as usize;
            let spectrum = psd(&traj.x2[skip.min(traj.len() - 1)..], traj.sample_interval, &settings.welch)?;
            let (f, d): (Vec<f64>, Vec<f64>) = spectrum
                .frequencies
                .iter()
                .zip(&spectrum.density)
                .filter(|(f, _)| **f >= lo && **f <= hi)
                .unzip();
            Ok((f, d))
        })
        .collect();
    let mut frequencies = Vec::new();
    let mut density = Vec::with_capacity(rows.len());
    for row in rows {
        let (f, d) = row?;
        frequencies = f;
        density.push(d);
    }
    let narrow = config.resonator1().damping.min(config.resonator2().damping) / (2.0 * PI);
    let step = sweep
        .values()
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    let warning = match sweep {
        PsdSweep::Frequency { .. } if step > narrow => Some(format!(
            "sweep step {step:.3} Hz is coarser than the narrower linewidth {narrow:.3} Hz"
        )),
        _ => None,
    };
    Ok(PsdMap {
        sweep: sweep.clone(),
        frequencies,
        density,
        warning,
    })
}

/// Positions (Hz) of the two strongest local maxima of a spectrum row,
/// refined by a parabola through the log density, in increasing order.
pub fn two_peaks(frequencies: &[f64], density: &[f64]) -> Option<(f64, f64)> {
    let n = density.len();
    if n < 5 {
        return None;
    }
    let mut maxima: Vec<usize> = (1..n - 1)
        .filter(|&k| density[k] > density[k - 1] && density[k] >= density[k + 1])
        .collect();
    maxima.sort_by(|&a, &b| density[b].total_cmp(&density[a]));
    // Keep the best maximum and the strongest one separated from it by a
    // visible dip, so noise ripples on a single peak are not paired.
    let first = *maxima.first()?;
    let second = maxima.iter().copied().find(|&k| {
        let (a, b) = if k < first { (k, first) } else { (first, k) };
        let dip = density[a..=b].iter().copied().fold(f64::INFINITY, f64::min);
        dip < 0.5 * density[k]
    })?;
    let refine = |k: usize| {
        let (l, c, r) = (density[k - 1].ln(), density[k].ln(), density[k + 1].ln());
        let denom = l - 2.0 * c + r;
        let shift = if denom != 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
        frequencies[k] + shift.clamp(-0.5, 0.5) * (frequencies[k + 1] - frequencies[k])
    };
    let (a, b) = (refine(first), refine(second));
    Some((a.min(b), a.max(b)))
}

/// Minimum peak splitting of a frequency-swept map, Hz.
///
/// The splitting of each row with two resolved peaks is computed; a
/// parabola fitted to `splitting²` around the smallest value gives the
/// minimum (falling back to the smallest sampled value).
pub fn minimum_splitting(map: &PsdMap) -> Option<f64> {
    let values = map.sweep.values();
    let rows: Vec<(f64, f64)> = values
        .iter()
        .zip(&map.density)
        .filter_map(|(&v, row)| two_peaks(&map.frequencies, row).map(|(a, b)| (v, b - a)))
        .collect();
    let (best, &(_, smin)) = rows.iter().enumerate().min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))?;
    if best == 0 || best + 1 == rows.len() {
        return Some(smin);
    }
    let lo = best.saturating_sub(2);
    let hi = (best + 3).min(rows.len());
    fit_parabola_min(&rows[lo..hi]).map(|m| m.sqrt()).or(Some(smin))
}

/// Least-squares `y² = a x² + b x + c` on the squared splittings; returns the
/// vertex value when the parabola opens upwards.
fn fit_parabola_min(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let x0 = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let mut s = [0.0; 5];
    let mut t = [0.0; 3];
    for &(x, y) in points {
        let u = x - x0;
        let y2 = y * y;
        let mut p = 1.0;
        for sk in s.iter_mut() {
            *sk += p;
            p *= u;
        }
        t[0] += y2;
        t[1] += u * y2;
        t[2] += u * u * y2;
    }
    // Normal equations for (c, b, a).
    let m = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(m);
    if d.abs() < 1e-300 {
        return None;
    }
    let solve = |col: usize| {
        let mut mm = m;
        for r in 0..3 {
            mm[r][col] = t[r];
        }
        det3(mm) / d
    };
    let (c, b, a) = (solve(0), solve(1), solve(2));
    if !(a > 0.0) {
        return None;
    }
    let vertex = c - b * b / (4.0 * a);
    (vertex > 0.0).then_some(vertex)
}

/// Coupling `g` (rad/s) produced by a modulation of finite depth
/// `amplitude`: the first Fourier harmonic of the force gradient over one
/// modulation cycle, `(1/π)∫ F'(d₀ + δ_d cos θ) cos θ dθ`, replaces
/// `F'' δ_d` in the mapping of [`SpectralMapping::from_system`]. The two
/// agree to first order in `δ_d / d₀`.
pub fn harmonic_coupling<L: ForceLaw + ?Sized>(config: &SystemConfig, law: &L, amplitude: f64) -> Result<f64> {
    let mapping = SpectralMapping::from_system(config, law)?;
    let d0 = config.equilibrium_gap;
    let sample = |x: f64| {
        law.sample(x).ok_or(CasimirError::FieldRange {
            x,
            min: law.domain().0,
            max: law.domain().1,
        })
    };
    let curvature = sample(d0)?.curvature;
    if amplitude == 0.0 || curvature == 0.0 {
        return Ok(mapping.coupling_per_metre * amplitude.abs());
    }
    // Midpoint rule: spectrally accurate for a smooth periodic integrand.
    const NODES: usize = 256;
    let mut harmonic = 0.0;
    for k in 0..NODES {
        let theta = 2.0 * PI * (k as f64 + 0.5) / NODES as f64;
        harmonic += sample(d0 + amplitude * theta.cos())?.gradient * theta.cos();
    }
    harmonic *= 2.0 / NODES as f64;
    Ok(mapping.coupling_per_metre * (harmonic / curvature).abs())
}

/// Expected minimum splitting `√(g² − (γ₁−γ₂)²/4) / 2π` (Hz) at `δ = 0`
/// for coupling `g`, or `None` at or below the exceptional point.
pub fn predicted_splitting(mapping: &SpectralMapping, coupling: f64) -> Option<f64> {
    let d = 0.5 * (mapping.gamma1 - mapping.gamma2);
    let r = coupling * coupling - d * d;
    (r > 0.0).then(|| r.sqrt() / (2.0 * PI))
}
