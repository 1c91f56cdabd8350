//! Effective non-Hermitian two-mode Hamiltonian of the modulated pair.
//!
//! In the frame rotating with both modes,
//!
//! ```text
//! H = [ −iγ₁/2      g/2        ]
//!     [   g/2    −iγ₂/2 − δ    ]
//! ```
//!
//! with `g` set by the modulation depth and `δ = 2π(f_mod − f₂₁)`. The two
//! eigenvalues coalesce at `δ = 0, g = |γ₁ − γ₂|/2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{CasimirError, Result};
use crate::field::ForceLaw;
use crate::mechanics::{normal_modes, SystemConfig};

/// The 2×2 effective Hamiltonian; all entries rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveHamiltonian {
    pub gamma1: f64,
    pub gamma2: f64,
    pub coupling: f64,
    pub detuning: f64,
}

impl EffectiveHamiltonian {
    pub fn new(gamma1: f64, gamma2: f64, coupling: f64, detuning: f64) -> Result<Self> {
        if !(gamma1 >= 0.0 && gamma2 >= 0.0) {
            return Err(CasimirError::Domain("damping rates must be >= 0".into()));
        }
        if !(coupling >= 0.0) {
            return Err(CasimirError::Domain("coupling must be >= 0".into()));
        }
        if !detuning.is_finite() {
            return Err(CasimirError::Domain("detuning must be finite".into()));
        }
        Ok(Self {
            gamma1,
            gamma2,
            coupling,
            detuning,
        })
    }

    /// Row-major matrix entries `[[a, b], [c, d]]`.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let half_g = Complex64::new(0.5 * self.coupling, 0.0);
        [
            [Complex64::new(0.0, -0.5 * self.gamma1), half_g],
            [half_g, Complex64::new(-self.detuning, -0.5 * self.gamma2)],
        ]
    }

    pub fn trace(&self) -> Complex64 {
        let m = self.matrix();
        m[0][0] + m[1][1]
    }

    pub fn determinant(&self) -> Complex64 {
        let m = self.matrix();
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }
}

/// Eigenvalues with normalised eigenvectors; `plus` is the `+√` branch of
/// the closed form unless relabelled by continuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub plus: Complex64,
    pub minus: Complex64,
    pub plus_vector: [Complex64; 2],
    pub minus_vector: [Complex64; 2],
}

impl EigenPair {
    pub fn gap(&self) -> f64 {
        (self.plus - self.minus).norm()
    }

    pub fn swapped(self) -> Self {
        Self {
            plus: self.minus,
            minus: self.plus,
            plus_vector: self.minus_vector,
            minus_vector: self.plus_vector,
        }
    }
}

/// `g = |d²F/dx²| δ_d / (2 sqrt(m₁ m₂ ω₁ ω₂))`, rad/s.
pub fn coupling_from_modulation(curvature: f64, amplitude: f64, m1: f64, m2: f64, w1: f64, w2: f64) -> Result<f64> {
    if !(amplitude >= 0.0) || !(m1 > 0.0 && m2 > 0.0 && w1 > 0.0 && w2 > 0.0) {
        return Err(CasimirError::Domain("masses and frequencies must be > 0, δ_d >= 0".into()));
    }
    Ok(curvature.abs() * amplitude / (2.0 * (m1 * m2 * w1 * w2).sqrt()))
}

/// `δ = 2π (f_mod − f₂₁)`, rad/s.
pub fn detuning(f_mod_hz: f64, f21_hz: f64) -> f64 {
    2.0 * PI * (f_mod_hz - f21_hz)
}

/// Closed-form eigenvalues.
pub fn eigenvalues(h: &EffectiveHamiltonian) -> EigenPair {
    let dg = h.gamma1 - h.gamma2;
    let center = Complex64::new(-0.5 * h.detuning, -0.25 * (h.gamma1 + h.gamma2));
    let radicand = Complex64::new(
        -0.25 * dg * dg + h.detuning * h.detuning + h.coupling * h.coupling,
        -dg * h.detuning,
    );
    let root = 0.5 * radicand.sqrt();
    let (plus, minus) = (center + root, center - root);
    EigenPair {
        plus,
        minus,
        plus_vector: eigenvector(h, plus),
        minus_vector: eigenvector(h, minus),
    }
}

/// Roots of `λ² − tr λ + det` evaluated directly from the matrix.
pub fn characteristic_roots(h: &EffectiveHamiltonian) -> (Complex64, Complex64) {
    let tr = h.trace();
    let det = h.determinant();
    let disc = (0.25 * tr * tr - det).sqrt();
    (0.5 * tr + disc, 0.5 * tr - disc)
}

fn eigenvector(h: &EffectiveHamiltonian, lambda: Complex64) -> [Complex64; 2] {
    let m = h.matrix();
    // Two candidate null vectors of (H − λ); pick the better conditioned.
    let a = [m[0][1], lambda - m[0][0]];
    let b = [lambda - m[1][1], m[1][0]];
    let norm = |v: &[Complex64; 2]| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let v = if norm(&a) >= norm(&b) { a } else { b };
    let n = norm(&v);
    if n == 0.0 {
        return [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    }
    [v[0] / n, v[1] / n]
}

/// Maps modulation parameters `(f_mod [Hz], δ_d [m])` to the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralMapping {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Softened difference frequency `f₂₁`, Hz.
    pub f21_hz: f64,
    /// `g / δ_d`, rad/s per metre.
    pub coupling_per_metre: f64,
}

impl SpectralMapping {
    /// Mapping at the configured equilibrium gap in the normal-mode basis:
    /// frequencies and damping of the two modes, and a coupling that
    /// projects the gap modulation on both mode shapes and includes the
    /// force-feedback gain of the modulation at the difference frequency.
    /// As the force gradient vanishes this reduces to
    /// [`coupling_from_modulation`] with the softened frequencies.
    pub fn from_system<L: ForceLaw + ?Sized>(config: &SystemConfig, law: &L) -> Result<Self> {
        let d0 = config.equilibrium_gap;
        let modes = normal_modes(config, law)?;
        let (lo, hi) = law.domain();
        let curvature = law.sample(d0).ok_or(CasimirError::FieldRange { x: d0, min: lo, max: hi })?.curvature;
        let [w1, w2] = modes.frequencies;
        let projection = (modes.gap_projection(0) * modes.gap_projection(1)).abs();
        let gain = modes.modulation_gain(w2 - w1).abs();
        Ok(Self {
            gamma1: modes.damping[0],
            gamma2: modes.damping[1],
            f21_hz: (w2 - w1) / (2.0 * PI),
            coupling_per_metre: curvature.abs() * projection * gain / (2.0 * (w1 * w2).sqrt()),
        })
    }

    pub fn hamiltonian(&self, f_mod_hz: f64, amplitude: f64) -> EffectiveHamiltonian {
        EffectiveHamiltonian {
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            coupling: self.coupling_per_metre * amplitude.abs(),
            detuning: detuning(f_mod_hz, self.f21_hz),
        }
    }

    pub fn eigenvalues(&self, f_mod_hz: f64, amplitude: f64) -> EigenPair {
        eigenvalues(&self.hamiltonian(f_mod_hz, amplitude))
    }

    /// Modulation depth at which `g = |γ₁ − γ₂|/2`.
    pub fn ep_amplitude(&self) -> Result<f64> {
        if self.coupling_per_metre == 0.0 {
            return Err(CasimirError::Singular("force curvature vanishes at d0".into()));
        }
        Ok(0.5 * (self.gamma1 - self.gamma2).abs() / self.coupling_per_metre)
    }
}

/// Location of the exceptional point in modulation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExceptionalPoint {
    /// δ_d*, m.
    pub amplitude: f64,
    /// f_mod*, Hz.
    pub frequency_hz: f64,
}

/// `δ_d* = |γ₁ − γ₂| sqrt(m₁m₂ω₁ω₂) / |d²F/dx²|`, `f_mod* = f₂₁`.
pub fn ep_locate(mapping: &SpectralMapping) -> Result<ExceptionalPoint> {
    Ok(ExceptionalPoint {
        amplitude: mapping.ep_amplitude()?,
        frequency_hz: mapping.f21_hz,
    })
}

/// One cell of an eigenvalue surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub f_mod_hz: f64,
    pub amplitude: f64,
    pub pair: EigenPair,
}

/// Eigenvalues over `amplitudes × frequencies`, one column per amplitude,
/// labelled by continuity along increasing `f_mod` within each column.
pub fn surface_grid(mapping: &SpectralMapping, frequencies: &[f64], amplitudes: &[f64]) -> Vec<Vec<SpectrumPoint>> {
    amplitudes
        .par_iter()
        .map(|&delta_d| {
            let path: Vec<(f64, f64)> = frequencies.iter().map(|&f| (f, delta_d)).collect();
            continue_branches(mapping, &path)
                .into_iter()
                .zip(frequencies)
                .map(|(pair, &f)| SpectrumPoint {
                    f_mod_hz: f,
                    amplitude: delta_d,
                    pair,
                })
                .collect()
        })
        .collect()
}

/// Cell of a surface grid with the smallest eigenvalue gap.
pub fn min_gap_cell(grid: &[Vec<SpectrumPoint>]) -> Option<SpectrumPoint> {
    grid.iter()
        .flatten()
        .copied()
        .min_by(|a, b| a.pair.gap().total_cmp(&b.pair.gap()))
}

/// Labels eigenpairs at successive parameter points so that each branch
/// moves continuously; the first point uses the closed-form labelling.
pub fn continue_branches(mapping: &SpectralMapping, points: &[(f64, f64)]) -> Vec<EigenPair> {
    let mut out: Vec<EigenPair> = Vec::with_capacity(points.len());
    for &(f, d) in points {
        let pair = mapping.eigenvalues(f, d);
        let labelled = match out.last() {
            None => pair,
            Some(prev) => match_pair(prev, pair),
        };
        out.push(labelled);
    }
    out
}

fn match_pair(prev: &EigenPair, next: EigenPair) -> EigenPair {
    let keep = (next.plus - prev.plus).norm() + (next.minus - prev.minus).norm();
    let swap = (next.minus - prev.plus).norm() + (next.plus - prev.minus).norm();
    if swap < keep {
        next.swapped()
    } else {
        next
    }
}

/// Minimum `|λ₊ − λ₋|` along the closed polyline through `vertices`,
/// sampling each edge at `samples_per_edge` points.
pub fn min_gap_along_path(mapping: &SpectralMapping, vertices: &[(f64, f64)], samples_per_edge: usize) -> f64 {
    edge_gaps(mapping, vertices, samples_per_edge)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Minimum gap on each edge `vertices[i] → vertices[i+1]` (closing back to
/// the first vertex).
pub fn edge_gaps(mapping: &SpectralMapping, vertices: &[(f64, f64)], samples_per_edge: usize) -> Vec<f64> {
    let n = samples_per_edge.max(2);
    (0..vertices.len())
        .map(|i| {
            let (a, b) = (vertices[i], vertices[(i + 1) % vertices.len()]);
            (0..=n)
                .map(|j| {
                    let u = j as f64 / n as f64;
                    mapping.eigenvalues(a.0 + (b.0 - a.0) * u, a.1 + (b.1 - a.1) * u).gap()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Outcome of transporting a branch around a closed path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transport {
    /// Eigenpair at the start, closed-form labelling.
    pub start: EigenPair,
    /// Continued labelling after one full circuit.
    pub end: EigenPair,
    /// The `+` branch returned as the `−` branch.
    pub swapped: bool,
    /// Smallest gap met on the way, rad/s.
    pub min_gap: f64,
}

/// Continues the eigenvalues around the closed polyline `vertices`,
/// refining steps so that no step moves a branch by more than a quarter of
/// the local gap. Fails if the path passes through the degeneracy.
pub fn transport_around(mapping: &SpectralMapping, vertices: &[(f64, f64)]) -> Result<Transport> {
    if vertices.len() < 3 {
        return Err(CasimirError::Domain("a closed path needs at least three vertices".into()));
    }
    let start = mapping.eigenvalues(vertices[0].0, vertices[0].1);
    let mut current = start;
    let mut min_gap = start.gap();
    for i in 0..vertices.len() {
        let (a, b) = (vertices[i], vertices[(i + 1) % vertices.len()]);
        let mut u = 0.0;
        let mut step: f64 = 1.0 / 64.0;
        while u < 1.0 {
            let h = step.min(1.0 - u);
            let v = u + h;
            let next = mapping.eigenvalues(a.0 + (b.0 - a.0) * v, a.1 + (b.1 - a.1) * v);
            let gap = next.gap().min(current.gap());
            if gap == 0.0 {
                return Err(CasimirError::Singular("path passes through the exceptional point".into()));
            }
            let labelled = match_pair(&current, next);
            let moved = (labelled.plus - current.plus).norm().max((labelled.minus - current.minus).norm());
            if moved > 0.25 * gap {
                step = h * 0.5;
                if step < 1e-12 {
                    return Err(CasimirError::Singular("branch continuation step underflow near the exceptional point".into()));
                }
                continue;
            }
            current = labelled;
            min_gap = min_gap.min(next.gap());
            u = v;
            step = (h * 2.0).min(1.0 / 16.0);
        }
    }
    let swapped = (current.plus - start.minus).norm() < (current.plus - start.plus).norm();
    Ok(Transport {
        start,
        end: current,
        swapped,
        min_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
    }

    #[test]
    fn diagonal_limit() {
        let h = EffectiveHamiltonian::new(2.0, 5.0, 0.0, 0.0).unwrap();
        let p = eigenvalues(&h);
        let expect = [Complex64::new(0.0, -1.0), Complex64::new(0.0, -2.5)];
        assert!(close(p.plus, expect[0], 1e-15) || close(p.plus, expect[1], 1e-15));
        assert!(close(p.plus + p.minus, expect[0] + expect[1], 1e-15));
    }

    #[test]
    fn equal_loss_splits_by_g() {
        let h = EffectiveHamiltonian::new(3.0, 3.0, 10.0, 0.0).unwrap();
        let p = eigenvalues(&h);
        assert!(close(p.plus, Complex64::new(5.0, -1.5), 1e-15));
        assert!(close(p.minus, Complex64::new(-5.0, -1.5), 1e-15));
    }

    #[test]
    fn exceptional_point_degenerates() {
        let (g1, g2) = (2.0 * PI * 2.65, 2.0 * PI * 13.82);
        let h = EffectiveHamiltonian::new(g1, g2, 0.5 * (g2 - g1), 0.0).unwrap();
        let p = eigenvalues(&h);
        assert!(p.gap() < 1e-6 * g1);
        assert!(close(p.plus, Complex64::new(0.0, -0.25 * (g1 + g2)), 1e-12));
    }

    #[test]
    fn identities_on_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let h = EffectiveHamiltonian::new(
                rng.random_range(0.0..200.0),
                rng.random_range(0.0..200.0),
                rng.random_range(0.0..500.0),
                rng.random_range(-1000.0..1000.0),
            )
            .unwrap();
            let p = eigenvalues(&h);
            assert!(close(p.plus + p.minus, h.trace(), 1e-12));
            assert!(close(p.plus * p.minus, h.determinant(), 1e-12));
            let (a, b) = characteristic_roots(&h);
            let direct = (close(p.plus, a, 1e-10) && close(p.minus, b, 1e-10)) || (close(p.plus, b, 1e-10) && close(p.minus, a, 1e-10));
            assert!(direct, "{h:?}");
        }
    }

    #[test]
    fn eigenvectors_satisfy_equation() {
        let h = EffectiveHamiltonian::new(16.6, 86.8, 120.0, -40.0).unwrap();
        let p = eigenvalues(&h);
        let m = h.matrix();
        for (l, v) in [(p.plus, p.plus_vector), (p.minus, p.minus_vector)] {
            let r0 = m[0][0] * v[0] + m[0][1] * v[1] - l * v[0];
            let r1 = m[1][0] * v[0] + m[1][1] * v[1] - l * v[1];
            assert!(r0.norm() < 1e-12 * l.norm().max(1.0) && r1.norm() < 1e-12 * l.norm().max(1.0));
            assert!((v[0].norm_sqr() + v[1].norm_sqr() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn coupling_and_detuning() {
        assert_eq!(coupling_from_modulation(-1e5, 0.0, 1e-10, 1e-10, 3e4, 3e4).unwrap(), 0.0);
        let a = coupling_from_modulation(-1e5, 1e-9, 1e-10, 2e-10, 3e4, 3.5e4).unwrap();
        let b = coupling_from_modulation(-1e5, 2e-9, 1e-10, 2e-10, 3e4, 3.5e4).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12 * b);
        assert_eq!(detuning(727.0, 727.0), 0.0);
        assert!((detuning(737.0, 727.0) - 2.0 * PI * 10.0).abs() < 1e-12);
        assert!(detuning(680.0, 727.0) < 0.0 && detuning(785.0, 727.0) > 0.0);
    }

    fn mapping() -> SpectralMapping {
        SpectralMapping {
            gamma1: 2.0 * PI * 2.65,
            gamma2: 2.0 * PI * 13.82,
            f21_hz: 727.0,
            coupling_per_metre: 2.0 * PI * 5.585 / 2e-9,
        }
    }

    #[test]
    fn ep_locate_hits_the_degeneracy() {
        let m = mapping();
        let ep = ep_locate(&m).unwrap();
        let h = m.hamiltonian(ep.frequency_hz, ep.amplitude);
        assert!((h.coupling / (0.5 * (m.gamma2 - m.gamma1)) - 1.0).abs() < 1e-6);
        let equal = SpectralMapping { gamma2: m.gamma1, ..m };
        assert_eq!(ep_locate(&equal).unwrap().amplitude, 0.0);
        let wide = SpectralMapping {
            gamma2: m.gamma1 + 2.0 * (m.gamma2 - m.gamma1),
            ..m
        };
        assert!((ep_locate(&wide).unwrap().amplitude / ep.amplitude - 2.0).abs() < 1e-12);
        let flat = SpectralMapping {
            coupling_per_metre: 0.0,
            ..m
        };
        assert!(matches!(ep_locate(&flat), Err(CasimirError::Singular(_))));
    }

    #[test]
    fn surface_minimum_at_ep() {
        let m = mapping();
        let ep = ep_locate(&m).unwrap();
        let freqs: Vec<f64> = (0..=80).map(|i| 707.0 + 0.5 * i as f64).collect();
        let amps: Vec<f64> = (0..=80).map(|i| 1e-9 + 0.025e-9 * i as f64).collect();
        let grid = surface_grid(&m, &freqs, &amps);
        let cell = min_gap_cell(&grid).unwrap();
        assert!((cell.f_mod_hz - ep.frequency_hz).abs() <= 0.5);
        assert!((cell.amplitude - ep.amplitude).abs() <= 0.025e-9);
        // Along δ = 0 below the EP the real parts coincide.
        let p = m.eigenvalues(m.f21_hz, 0.5 * ep.amplitude);
        assert!((p.plus.re - p.minus.re).abs() < 1e-9);
        // Far from the EP the splitting is Hermitian-like.
        let p = m.eigenvalues(m.f21_hz + 30.0, 40e-9);
        let h = m.hamiltonian(m.f21_hz + 30.0, 40e-9);
        let hermitian = (h.detuning.powi(2) + h.coupling.powi(2)).sqrt();
        assert!(((p.plus.re - p.minus.re).abs() / hermitian - 1.0).abs() < 0.01);
    }

    #[test]
    fn labelling_is_continuous_in_columns() {
        let m = mapping();
        let freqs: Vec<f64> = (0..=200).map(|i| 680.0 + 0.5 * i as f64).collect();
        let grid = surface_grid(&m, &freqs, &[1e-9, 6.7e-9]);
        for column in &grid {
            for w in column.windows(2) {
                let jump = (w[1].pair.plus - w[0].pair.plus).norm();
                let across = (w[1].pair.minus - w[0].pair.plus).norm();
                assert!(jump <= across);
            }
        }
    }

    fn rectangle(f: (f64, f64), d: (f64, f64)) -> Vec<(f64, f64)> {
        vec![(f.0, d.0), (f.0, d.1), (f.1, d.1), (f.1, d.0)]
    }

    #[test]
    fn encircling_swaps_branches() {
        let m = mapping();
        let ep = ep_locate(&m).unwrap();
        let around = rectangle((700.0, 760.0), (0.5 * ep.amplitude, 2.0 * ep.amplitude));
        assert!(transport_around(&m, &around).unwrap().swapped);
        let beside = rectangle((740.0, 780.0), (0.5 * ep.amplitude, 2.0 * ep.amplitude));
        assert!(!transport_around(&m, &beside).unwrap().swapped);
        let above = rectangle((700.0, 760.0), (1.5 * ep.amplitude, 3.0 * ep.amplitude));
        assert!(!transport_around(&m, &above).unwrap().swapped);
    }

    #[test]
    fn min_gap_properties() {
        let m = mapping();
        let ep = ep_locate(&m).unwrap();
        let through = rectangle((ep.frequency_hz, 780.0), (ep.amplitude, 3.0 * ep.amplitude));
        assert!(min_gap_along_path(&m, &through, 200) < 1e-9);
        let measured = rectangle((680.0, 785.0), (6.7e-9, 13.3e-9));
        let edges = edge_gaps(&m, &measured, 400);
        // Edge 3 sweeps f_mod at δ_min, edge 1 at δ_max.
        assert!(edges[3] < edges[1]);
        let scaled = rectangle((680.0, 785.0), (67e-9, 133e-9));
        assert!(min_gap_along_path(&m, &scaled, 400) > min_gap_along_path(&m, &measured, 400));
    }
}
