//! Nonlinear equations of motion of two cantilevers coupled by the Casimir force.
//!
//! ```text
//! m₁ẍ₁ + m₁γ₁ẋ₁ + k₁x₁ =  F_C(x(t)) + drive₁ + noise₁
//! m₂ẍ₂ + m₂γ₂ẋ₂ + k₂x₂ = −F_C(x(t)) + drive₂ + noise₂
//! x(t) = d_rest + δ_d(t) cos φ(t) + x₁ − x₂
//! ```
//!
//! `x₁, x₂` are measured from the unloaded rest positions; `d_rest` is
//! chosen so that the Casimir-loaded equilibrium gap equals the configured
//! `d₀`. Recorded trajectories report displacements from that loaded
//! equilibrium. Integration is fixed-step classical RK4.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CasimirError, Result};
use crate::field::ForceLaw;
use crate::units::{hz_to_rad, K_B};

/// Clearance kept between the modulated gap range and the edges of the
/// force-law domain to accommodate the cantilever motion itself, m.
pub const MOTION_HEADROOM: f64 = 10e-9;

/// One flexural mode reduced to a point oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cantilever {
    /// Effective mass, kg.
    pub mass: f64,
    /// Natural angular frequency far from the other surface, rad/s.
    pub natural_frequency: f64,
    /// Energy damping rate γ, rad/s.
    pub damping: f64,
}

impl Cantilever {
    pub fn new(mass: f64, natural_frequency: f64, damping: f64) -> Result<Self> {
        let c = Self {
            mass,
            natural_frequency,
            damping,
        };
        c.validate("cantilever")?;
        Ok(c)
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(CasimirError::config(format!("{key}.mass_kg"), "must be > 0"));
        }
        if !(self.natural_frequency > 0.0 && self.natural_frequency.is_finite()) {
            return Err(CasimirError::config(format!("{key}.frequency"), "must be > 0"));
        }
        if !(self.damping > 0.0 && self.damping.is_finite()) {
            return Err(CasimirError::config(format!("{key}.damping"), "must be > 0"));
        }
        Ok(())
    }

    pub fn stiffness(&self) -> f64 {
        self.mass * self.natural_frequency * self.natural_frequency
    }

    pub fn quality_factor(&self) -> f64 {
        self.natural_frequency / self.damping
    }

    /// The slowly-varying-amplitude reduction assumes γ ≪ ω.
    pub fn warning(&self) -> Option<String> {
        let r = self.damping / self.natural_frequency;
        (r > 1e-2).then(|| format!("γ/ω = {r:.3e} exceeds 1e-2; weak-damping assumptions degrade"))
    }

    pub fn with_extra_damping(mut self, extra: f64) -> Self {
        self.damping += extra;
        self
    }
}

/// The two resonators and their geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub cantilever1: Cantilever,
    pub cantilever2: Cantilever,
    pub sphere_radius: f64,
    /// Equilibrium gap with the Casimir force acting and no modulation, m.
    pub equilibrium_gap: f64,
    pub temperature: f64,
    /// Added to γ₂, rad/s.
    pub extra_damping_2: f64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        self.cantilever1.validate("system.cantilever1")?;
        self.cantilever2.validate("system.cantilever2")?;
        if !(self.sphere_radius > 0.0) {
            return Err(CasimirError::config("system.sphere_radius", "must be > 0"));
        }
        if !(self.equilibrium_gap > 0.0) {
            return Err(CasimirError::config("system.d0", "must be > 0"));
        }
        if !(self.temperature >= 0.0) {
            return Err(CasimirError::config("system.temperature", "must be >= 0"));
        }
        if !(self.extra_damping_2 >= 0.0) {
            return Err(CasimirError::config("system.extra_damping_2", "must be >= 0"));
        }
        Ok(())
    }

    /// Cantilever 1 as it enters the dynamics.
    pub fn resonator1(&self) -> Cantilever {
        self.cantilever1
    }

    /// Cantilever 2 including the extra damping.
    pub fn resonator2(&self) -> Cantilever {
        self.cantilever2.with_extra_damping(self.extra_damping_2)
    }

    pub fn resonator(&self, index: usize) -> Cantilever {
        if index == 1 {
            self.resonator1()
        } else {
            self.resonator2()
        }
    }

    /// Copy with a different extra damping on cantilever 2.
    pub fn with_extra_damping(mut self, extra: f64) -> Self {
        self.extra_damping_2 = extra;
        self
    }

    pub fn warnings(&self) -> Vec<String> {
        [self.resonator1().warning(), self.resonator2().warning()]
            .into_iter()
            .flatten()
            .collect()
    }
}

/// `ω' = ω sqrt(1 − (dF/dx)/k)`: softening by an attractive force gradient.
pub fn shifted_frequency<L: ForceLaw + ?Sized>(cantilever: &Cantilever, law: &L, gap: f64) -> Result<f64> {
    let (lo, hi) = law.domain();
    let sample = law.sample(gap).ok_or(CasimirError::FieldRange { x: gap, min: lo, max: hi })?;
    softened_frequency(cantilever, sample.gradient)
}

/// Softened frequency for a given force gradient.
pub fn softened_frequency(cantilever: &Cantilever, gradient: f64) -> Result<f64> {
    let ratio = gradient / cantilever.stiffness();
    if ratio >= 1.0 {
        return Err(CasimirError::SnapIn { ratio });
    }
    Ok(cantilever.natural_frequency * (1.0 - ratio).sqrt())
}

/// Small-oscillation modes of the pair about the loaded equilibrium.
///
/// The force gradient `F'` enters the stiffness matrix as
/// `[[k₁ − F', F'], [F', k₂ − F']]`: besides softening each cantilever it
/// statically couples them through the shared gap, which pushes the two
/// resonances apart. Mode `i` is the one dominated by cantilever `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalModes {
    /// Angular frequencies, rad/s.
    pub frequencies: [f64; 2],
    /// Mass-normalised shapes (`eᵀ M e = 1`): `shapes[i][j]` is the
    /// displacement of cantilever `j + 1` in mode `i + 1`.
    pub shapes: [[f64; 2]; 2],
    /// Modal damping `Σⱼ mⱼ γⱼ shapes[i][j]²`, rad/s.
    pub damping: [f64; 2],
    /// Force gradient `F'` at the equilibrium gap, N/m.
    pub gradient: f64,
}

impl NormalModes {
    /// Projection of mode `i` on the gap coordinate `x₁ − x₂`.
    pub fn gap_projection(&self, i: usize) -> f64 {
        self.shapes[i][0] - self.shapes[i][1]
    }

    /// Ratio of the actual gap modulation to an imposed modulation `δ_d`
    /// at angular frequency `omega`: the imposed modulation changes the
    /// force, whose off-resonant response adds to the gap motion,
    /// `1 + F' Σᵢ pᵢ² / (ωᵢ² − Ω²)` with `pᵢ` the gap projections.
    pub fn modulation_gain(&self, omega: f64) -> f64 {
        let sum: f64 = (0..2)
            .map(|i| self.gap_projection(i).powi(2) / (self.frequencies[i].powi(2) - omega * omega))
            .sum();
        1.0 + self.gradient * sum
    }

    /// `ω₂ − ω₁`, rad/s.
    pub fn difference(&self) -> f64 {
        self.frequencies[1] - self.frequencies[0]
    }
}

/// Normal modes at the equilibrium gap.
pub fn normal_modes<L: ForceLaw + ?Sized>(config: &SystemConfig, law: &L) -> Result<NormalModes> {
    let (c1, c2) = (config.resonator1(), config.resonator2());
    let d0 = config.equilibrium_gap;
    let (lo, hi) = law.domain();
    let grad = law.sample(d0).ok_or(CasimirError::FieldRange { x: d0, min: lo, max: hi })?.gradient;
    let (m1, m2) = (c1.mass, c2.mass);
    // Symmetric form M^{-1/2} K M^{-1/2}.
    let a = (c1.stiffness() - grad) / m1;
    let d = (c2.stiffness() - grad) / m2;
    let b = grad / (m1 * m2).sqrt();
    let mean = 0.5 * (a + d);
    let half = (0.25 * (a - d).powi(2) + b * b).sqrt();
    let eigen = [mean - half, mean + half];
    if eigen[0] <= 0.0 {
        return Err(CasimirError::SnapIn {
            ratio: grad / c1.stiffness().min(c2.stiffness()),
        });
    }
    let vector = |lambda: f64| -> [f64; 2] {
        let (u, v) = if (lambda - a).abs() >= (lambda - d).abs() {
            (b, lambda - a)
        } else {
            (lambda - d, b)
        };
        let n = u.hypot(v);
        if n == 0.0 {
            [1.0, 0.0]
        } else {
            [u / n, v / n]
        }
    };
    let mut modes: Vec<(f64, [f64; 2])> = eigen.iter().map(|&l| (l, vector(l))).collect();
    // Assign by dominant component so mode 1 follows cantilever 1.
    if modes[0].1[0].abs() < modes[0].1[1].abs() {
        modes.swap(0, 1);
    }
    let mut shapes = [[0.0; 2]; 2];
    let mut frequencies = [0.0; 2];
    for (i, (lambda, u)) in modes.iter().enumerate() {
        let sign = if u[i] < 0.0 { -1.0 } else { 1.0 };
        shapes[i] = [sign * u[0] / m1.sqrt(), sign * u[1] / m2.sqrt()];
        frequencies[i] = lambda.sqrt();
    }
    let damping = [0, 1].map(|i| m1 * c1.damping * shapes[i][0].powi(2) + m2 * c2.damping * shapes[i][1].powi(2));
    Ok(NormalModes {
        frequencies,
        shapes,
        damping,
        gradient: grad,
    })
}

/// Effective frequency difference `ω₂' − ω₁'` of the normal modes at the
/// equilibrium gap, rad/s.
pub fn effective_difference_frequency<L: ForceLaw + ?Sized>(config: &SystemConfig, law: &L) -> Result<f64> {
    Ok(normal_modes(config, law)?.difference())
}

/// One knot of a piecewise-linear modulation schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationKnot {
    pub time: f64,
    /// Modulation frequency, Hz.
    pub frequency: f64,
    /// Modulation amplitude δ_d, m.
    pub amplitude: f64,
}

/// Piecewise-linear `(f_mod, δ_d)` over time with a continuous phase.
///
/// Before the first knot and after the last one the end values are held.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationSchedule {
    knots: Vec<ModulationKnot>,
    /// Accumulated phase at each knot, rad.
    phases: Vec<f64>,
}

impl ModulationSchedule {
    /// `initial_phase` is the phase at the first knot; `−π/2` starts the
    /// gap modulation at its mean value.
    pub fn new(knots: Vec<ModulationKnot>, initial_phase: f64) -> Result<Self> {
        if knots.is_empty() {
            return Err(CasimirError::config("modulation", "schedule needs at least one knot"));
        }
        for w in knots.windows(2) {
            if !(w[1].time > w[0].time) {
                return Err(CasimirError::config("modulation", "knot times must increase strictly"));
            }
        }
        if let Some(k) = knots.iter().find(|k| !(k.amplitude >= 0.0) || !(k.frequency >= 0.0)) {
            return Err(CasimirError::config(
                "modulation",
                format!("δ_d and f_mod must be >= 0 (t = {:e})", k.time),
            ));
        }
        let mut phases = Vec::with_capacity(knots.len());
        phases.push(initial_phase);
        for w in knots.windows(2) {
            let dt = w[1].time - w[0].time;
            let last = *phases.last().unwrap();
            phases.push(last + PI * (w[0].frequency + w[1].frequency) * dt);
        }
        Ok(Self { knots, phases })
    }

    /// Fixed modulation starting at `start` with the gap at its mean.
    pub fn constant(frequency: f64, amplitude: f64, start: f64) -> Result<Self> {
        Self::new(
            vec![ModulationKnot {
                time: start,
                frequency,
                amplitude,
            }],
            -0.5 * PI,
        )
    }

    /// No modulation at all.
    pub fn off() -> Self {
        Self::constant(0.0, 0.0, 0.0).expect("valid")
    }

    pub fn knots(&self) -> &[ModulationKnot] {
        &self.knots
    }

    pub fn max_amplitude(&self) -> f64 {
        self.knots.iter().map(|k| k.amplitude).fold(0.0, f64::max)
    }

    /// `(f_mod, δ_d, φ)` at time `t`.
    pub fn state(&self, t: f64) -> (f64, f64, f64) {
        let first = self.knots[0];
        if t <= first.time {
            return (
                first.frequency,
                first.amplitude,
                self.phases[0] + 2.0 * PI * first.frequency * (t - first.time),
            );
        }
        let idx = self.knots.partition_point(|k| k.time <= t);
        if idx == self.knots.len() {
            let last = self.knots[idx - 1];
            return (
                last.frequency,
                last.amplitude,
                self.phases[idx - 1] + 2.0 * PI * last.frequency * (t - last.time),
            );
        }
        let (a, b) = (self.knots[idx - 1], self.knots[idx]);
        let tau = t - a.time;
        let span = b.time - a.time;
        let u = tau / span;
        let f = a.frequency + (b.frequency - a.frequency) * u;
        let delta = a.amplitude + (b.amplitude - a.amplitude) * u;
        let phase = self.phases[idx - 1] + 2.0 * PI * (a.frequency * tau + 0.5 * (b.frequency - a.frequency) * tau * u);
        (f, delta, phase)
    }

    /// Gap offset `δ_d(t) cos φ(t)`.
    pub fn offset(&self, t: f64) -> f64 {
        let (_, delta, phase) = self.state(t);
        if delta == 0.0 {
            0.0
        } else {
            delta * phase.cos()
        }
    }
}

/// Resonant force drive on one cantilever.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSignal {
    /// 1 or 2.
    pub target: usize,
    /// Force amplitude, N.
    pub amplitude: f64,
    /// Angular frequency, rad/s.
    pub frequency: f64,
    pub t_on: f64,
    pub t_off: f64,
}

impl DriveSignal {
    /// Drive on `target` whose steady amplitude at resonance would be
    /// `steady_amplitude`, i.e. `F = m ω γ A`.
    pub fn for_amplitude(target: usize, resonator: &Cantilever, frequency: f64, steady_amplitude: f64, t_on: f64, t_off: f64) -> Self {
        Self {
            target,
            amplitude: resonator.mass * frequency * resonator.damping * steady_amplitude,
            frequency,
            t_on,
            t_off,
        }
    }

    fn force(&self, t: f64) -> f64 {
        if t >= self.t_on && t < self.t_off {
            self.amplitude * (self.frequency * t).cos()
        } else {
            0.0
        }
    }

    /// Steady resonant amplitude `F / (m ω γ)` on `resonator`.
    pub fn steady_amplitude(&self, resonator: &Cantilever) -> f64 {
        self.amplitude / (resonator.mass * self.frequency * resonator.damping)
    }
}

/// Initial displacement/velocity relative to the loaded equilibrium.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InitialState {
    pub x1: f64,
    pub v1: f64,
    pub x2: f64,
    pub v2: f64,
}

/// Integration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    pub duration: f64,
    pub dt: f64,
    /// Keep every `record_stride`-th step.
    pub record_stride: usize,
    /// Seed for thermal force noise; `None` disables the noise.
    pub noise_seed: Option<u64>,
    pub initial: InitialState,
}

impl SimulationOptions {
    pub fn new(duration: f64, dt: f64) -> Self {
        Self {
            duration,
            dt,
            record_stride: 1,
            noise_seed: None,
            initial: InitialState::default(),
        }
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }

    pub fn noise(mut self, seed: Option<u64>) -> Self {
        self.noise_seed = seed;
        self
    }

    pub fn initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }
}

/// Sampled motion of both cantilevers.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub time: Vec<f64>,
    /// Displacements from the loaded equilibrium, m.
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    /// Instantaneous gap, m.
    pub gap: Vec<f64>,
    pub sample_interval: f64,
    /// Loaded-equilibrium displacements from the unloaded rest positions.
    pub rest_offsets: (f64, f64),
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn min_gap(&self) -> f64 {
        self.gap.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn displacement(&self, index: usize) -> &[f64] {
        if index == 1 {
            &self.x1
        } else {
            &self.x2
        }
    }
}

#[derive(Clone, Copy)]
struct State([f64; 4]);

struct Dynamics<'a, L: ForceLaw + ?Sized> {
    law: &'a L,
    schedule: &'a ModulationSchedule,
    drives: &'a [DriveSignal],
    m: [f64; 2],
    k: [f64; 2],
    gamma: [f64; 2],
    d_rest: f64,
    domain: (f64, f64),
}

impl<L: ForceLaw + ?Sized> Dynamics<'_, L> {
    fn gap(&self, t: f64, s: &State) -> f64 {
        self.d_rest + self.schedule.offset(t) + s.0[0] - s.0[2]
    }

    fn derivative(&self, t: f64, s: &State, noise: [f64; 2]) -> Result<State> {
        let gap = self.gap(t, s);
        if gap <= 0.0 {
            return Err(CasimirError::Contact { time: t, gap });
        }
        let fc = self.law.force(gap).ok_or(CasimirError::FieldRange {
            x: gap,
            min: self.domain.0,
            max: self.domain.1,
        })?;
        let mut drive = [0.0; 2];
        for d in self.drives {
            drive[d.target - 1] += d.force(t);
        }
        let [x1, v1, x2, v2] = s.0;
        let a1 = (fc + drive[0] + noise[0] - self.k[0] * x1) / self.m[0] - self.gamma[0] * v1;
        let a2 = (-fc + drive[1] + noise[1] - self.k[1] * x2) / self.m[1] - self.gamma[1] * v2;
        Ok(State([v1, a1, v2, a2]))
    }
}

fn axpy(s: &State, h: f64, d: &State) -> State {
    let mut out = s.0;
    for (o, v) in out.iter_mut().zip(d.0) {
        *o += h * v;
    }
    State(out)
}

/// Integrate the full nonlinear equations of motion.
pub fn simulate<L: ForceLaw + ?Sized>(
    config: &SystemConfig,
    law: &L,
    schedule: &ModulationSchedule,
    drives: &[DriveSignal],
    options: &SimulationOptions,
) -> Result<Trajectory> {
    config.validate()?;
    let (c1, c2) = (config.resonator1(), config.resonator2());
    let f_max = c1.natural_frequency.max(c2.natural_frequency) / (2.0 * PI);
    if !(options.dt > 0.0) || options.dt > 1.0 / (50.0 * f_max) {
        return Err(CasimirError::config(
            "simulation.dt",
            format!("must be in (0, {:.3e}] s (50 steps per fastest period)", 1.0 / (50.0 * f_max)),
        ));
    }
    if !(options.duration > 0.0) {
        return Err(CasimirError::config("simulation.duration", "must be > 0"));
    }
    for d in drives {
        if d.target != 1 && d.target != 2 {
            return Err(CasimirError::config("drive.target", "must be 1 or 2"));
        }
    }
    let domain = law.domain();
    let d0 = config.equilibrium_gap;
    let reach = schedule.max_amplitude() + MOTION_HEADROOM;
    let (headroom_lo, headroom_hi) = (d0 - reach, d0 + reach);
    if headroom_lo < domain.0 || headroom_hi > domain.1 {
        return Err(CasimirError::FieldRange {
            x: if headroom_lo < domain.0 { headroom_lo } else { headroom_hi },
            min: domain.0,
            max: domain.1,
        });
    }
    let f_eq = law.force(d0).ok_or(CasimirError::FieldRange {
        x: d0,
        min: domain.0,
        max: domain.1,
    })?;
    let (k1, k2) = (c1.stiffness(), c2.stiffness());
    let rest = (f_eq / k1, -f_eq / k2);
    let dynamics = Dynamics {
        law,
        schedule,
        drives,
        m: [c1.mass, c2.mass],
        k: [k1, k2],
        gamma: [c1.damping, c2.damping],
        d_rest: d0 - rest.0 + rest.1,
        domain,
    };

    let dt = options.dt;
    let steps = (options.duration / dt).round() as usize;
    let stride = options.record_stride.max(1);
    let capacity = steps / stride + 1;
    let mut traj = Trajectory {
        time: Vec::with_capacity(capacity),
        x1: Vec::with_capacity(capacity),
        x2: Vec::with_capacity(capacity),
        v1: Vec::with_capacity(capacity),
        v2: Vec::with_capacity(capacity),
        gap: Vec::with_capacity(capacity),
        sample_interval: dt * stride as f64,
        rest_offsets: rest,
    };

    let init = options.initial;
    let mut state = State([rest.0 + init.x1, init.v1, rest.1 + init.x2, init.v2]);
    let mut rng = options.noise_seed.map(ChaCha8Rng::seed_from_u64);
    let noise_sigma = if config.temperature > 0.0 {
        [
            (2.0 * c1.mass * c1.damping * K_B * config.temperature / dt).sqrt(),
            (2.0 * c2.mass * c2.damping * K_B * config.temperature / dt).sqrt(),
        ]
    } else {
        [0.0; 2]
    };

    let record = |t: f64, s: &State, traj: &mut Trajectory| -> Result<()> {
        let gap = dynamics.gap(t, s);
        if gap <= 0.0 {
            return Err(CasimirError::Contact { time: t, gap });
        }
        traj.time.push(t);
        traj.x1.push(s.0[0] - rest.0);
        traj.v1.push(s.0[1]);
        traj.x2.push(s.0[2] - rest.1);
        traj.v2.push(s.0[3]);
        traj.gap.push(gap);
        Ok(())
    };

    record(0.0, &state, &mut traj)?;
    for n in 0..steps {
        let t = n as f64 * dt;
        let noise = match rng.as_mut() {
            Some(r) => {
                let a: f64 = StandardNormal.sample(r);
                let b: f64 = StandardNormal.sample(r);
                [a * noise_sigma[0], b * noise_sigma[1]]
            }
            None => [0.0; 2],
        };
        let k1 = dynamics.derivative(t, &state, noise)?;
        let k2 = dynamics.derivative(t + 0.5 * dt, &axpy(&state, 0.5 * dt, &k1), noise)?;
        let k3 = dynamics.derivative(t + 0.5 * dt, &axpy(&state, 0.5 * dt, &k2), noise)?;
        let k4 = dynamics.derivative(t + dt, &axpy(&state, dt, &k3), noise)?;
        for i in 0..4 {
            state.0[i] += dt / 6.0 * (k1.0[i] + 2.0 * k2.0[i] + 2.0 * k3.0[i] + k4.0[i]);
        }
        if (n + 1) % stride == 0 {
            record((n + 1) as f64 * dt, &state, &mut traj)?;
        }
    }
    Ok(traj)
}

/// Demodulated vibrational energies `E_i = ½ k_i A_i²`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySeries {
    pub time: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
}

impl EnergySeries {
    /// Values at the report time closest to `t`.
    pub fn at(&self, t: f64) -> Option<(f64, f64)> {
        let i = self
            .time
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?
            .0;
        Some((self.e1[i], self.e2[i]))
    }
}

/// Lock-in style amplitude of `signal` at angular frequency `omega` over a
/// Hann window centred on sample `center` spanning `half` samples each side.
pub fn demodulate_amplitude(signal: &[f64], dt: f64, omega: f64, center: usize, half: usize) -> f64 {
    let lo = center - half;
    let hi = center + half;
    let n = (hi - lo) as f64;
    let (mut re, mut im, mut wsum) = (0.0, 0.0, 0.0);
    for (j, &v) in signal[lo..=hi].iter().enumerate() {
        let w = 0.5 - 0.5 * (2.0 * PI * j as f64 / n).cos();
        let phase = omega * (lo + j) as f64 * dt;
        re += w * v * phase.cos();
        im += w * v * phase.sin();
        wsum += w;
    }
    2.0 * (re * re + im * im).sqrt() / wsum
}

/// Sliding-window quadrature demodulation of both cantilevers.
///
/// `frequencies` are the angular demodulation frequencies (normally the
/// softened resonances); the window spans `window_periods` periods of the
/// slower one. Energies are reported every `report_interval` seconds
/// wherever a full window fits.
pub fn demodulated_energies(
    traj: &Trajectory,
    config: &SystemConfig,
    frequencies: (f64, f64),
    window_periods: f64,
    report_interval: f64,
) -> Result<EnergySeries> {
    let dt = traj.sample_interval;
    let slow = frequencies.0.min(frequencies.1);
    let window = window_periods * 2.0 * PI / slow;
    let half = ((0.5 * window / dt).ceil() as usize).max(2);
    let total = traj.time.last().copied().unwrap_or(0.0) - traj.time.first().copied().unwrap_or(0.0);
    if traj.len() < 2 * half + 1 || total < 10.0 * 2.0 * PI / slow {
        return Err(CasimirError::Range(format!(
            "demodulation window of {window:.3e} s does not fit in a trajectory of {total:.3e} s"
        )));
    }
    let every = ((report_interval / dt).round() as usize).max(1);
    let (k1, k2) = (config.resonator1().stiffness(), config.resonator2().stiffness());
    let mut out = EnergySeries {
        time: Vec::new(),
        e1: Vec::new(),
        e2: Vec::new(),
    };
    let mut c = half;
    while c + half < traj.len() {
        let a1 = demodulate_amplitude(&traj.x1, dt, frequencies.0, c, half);
        let a2 = demodulate_amplitude(&traj.x2, dt, frequencies.1, c, half);
        out.time.push(traj.time[c]);
        out.e1.push(0.5 * k1 * a1 * a1);
        out.e2.push(0.5 * k2 * a2 * a2);
        c += every;
    }
    Ok(out)
}

/// Rectangular beam with optional coatings and a coated tip sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    pub youngs_modulus: f64,
    pub density: f64,
    /// Coating thickness on each face, m.
    pub coating_thickness: f64,
    pub coating_density: f64,
    pub tip: Option<TipSphere>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipSphere {
    pub diameter: f64,
    pub density: f64,
    pub coating_thickness: f64,
    pub coating_density: f64,
}

/// Mass and stiffness estimate of a beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamEstimate {
    pub effective_mass: f64,
    pub stiffness: f64,
}

impl BeamEstimate {
    pub fn frequency(&self) -> f64 {
        (self.stiffness / self.effective_mass).sqrt()
    }

    /// Cantilever with this mass but a measured natural frequency.
    pub fn with_frequency(&self, natural_frequency: f64, damping: f64) -> Cantilever {
        Cantilever {
            mass: self.effective_mass,
            natural_frequency,
            damping,
        }
    }
}

const SILICON_DENSITY: f64 = 2330.0;
const SILICON_MODULUS: f64 = 169e9;
const GOLD_DENSITY: f64 = 19_300.0;
const POLYSTYRENE_DENSITY: f64 = 1050.0;
/// Fraction of a uniform cantilever's mass that moves with its tip in the fundamental mode.
const RAYLEIGH_FRACTION: f64 = 0.2427;

impl BeamGeometry {
    /// 450 × 50 × 2 µm silicon, 70 nm gold per face, 69.1 µm polystyrene sphere.
    pub fn sphere_cantilever() -> Self {
        Self {
            length: 450e-6,
            width: 50e-6,
            thickness: 2e-6,
            youngs_modulus: SILICON_MODULUS,
            density: SILICON_DENSITY,
            coating_thickness: 70e-9,
            coating_density: GOLD_DENSITY,
            tip: Some(TipSphere {
                diameter: 69.1e-6,
                density: POLYSTYRENE_DENSITY,
                coating_thickness: 70e-9,
                coating_density: GOLD_DENSITY,
            }),
        }
    }

    /// 500 × 100 × 1 µm silicon, 70 nm gold per face.
    pub fn plate_cantilever() -> Self {
        Self {
            length: 500e-6,
            width: 100e-6,
            thickness: 1e-6,
            youngs_modulus: SILICON_MODULUS,
            density: SILICON_DENSITY,
            coating_thickness: 70e-9,
            coating_density: GOLD_DENSITY,
            tip: None,
        }
    }
}

/// `k = E w t³ / (4 L³)`, `m = 0.2427 m_beam + m_tip`.
///
/// Coatings add mass only.
pub fn estimate_effective_params(geometry: &BeamGeometry) -> Result<BeamEstimate> {
    let g = geometry;
    if !(g.length > 0.0 && g.width > 0.0 && g.thickness > 0.0 && g.youngs_modulus > 0.0 && g.density > 0.0) {
        return Err(CasimirError::config("beam", "dimensions, modulus and density must be > 0"));
    }
    let stiffness = g.youngs_modulus * g.width * g.thickness.powi(3) / (4.0 * g.length.powi(3));
    let area = g.length * g.width;
    let beam_mass = area * g.thickness * g.density + 2.0 * area * g.coating_thickness * g.coating_density;
    let tip_mass = g.tip.map_or(0.0, |s| {
        let core = PI / 6.0 * s.diameter.powi(3) * s.density;
        let shell = PI * s.diameter * s.diameter * s.coating_thickness * s.coating_density;
        core + shell
    });
    Ok(BeamEstimate {
        effective_mass: RAYLEIGH_FRACTION * beam_mass + tip_mass,
        stiffness,
    })
}

/// Convenience: the two cantilevers of the measured system with frequencies in Hz.
pub fn cantilever_from_hz(mass: f64, frequency_hz: f64, damping_hz: f64) -> Result<Cantilever> {
    Cantilever::new(mass, hz_to_rad(frequency_hz), hz_to_rad(damping_hz))
}
