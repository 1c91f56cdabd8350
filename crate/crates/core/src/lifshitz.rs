//! Lifshitz energy between parallel mirrors and the sphere–plate force in
//! the proximity-force approximation.
//!
//! The double integral over `(ξ, k_perp)` is evaluated in the scaled
//! variables `ζ = 2xξ/c` and `κ = 2xq`, where `q = sqrt(k_perp² + ξ²/c²)`:
//!
//! ```text
//! E₀(x) = ħc / (32π² x³) ∫₀^∞ dζ ∫_ζ^∞ κ dκ Σ_p ln(1 − r₁ₚ r₂ₚ e^{−κ})
//! ```
//!
//! In these variables the integrand decays as `e^{−κ}` at every
//! separation, so node counts stay flat across `x`. At finite temperature
//! the `ζ` integral becomes a Matsubara sum over `ζ_n = 2x ξ_n / c` with
//! `ξ_n = 2πn k_B T/ħ` and the `n = 0` term weighted by one half.
//!
//! Sign convention: the force on the sphere is negative (attractive),
//! `dF/dx > 0` and `d²F/dx² < 0`.

use std::f64::consts::PI;

use crate::error::{CasimirError, Result};
use crate::materials::{MirrorStack, TransverseMode};
use crate::quadrature::{integrate_semi_infinite, QuadratureSpec};
use crate::units::{C_LIGHT, HBAR, K_B, ZETA_3};

/// Sphere of radius `sphere_radius` at closest distance `separation` from a plate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub sphere_radius: f64,
    pub separation: f64,
}

impl Geometry {
    pub fn new(sphere_radius: f64, separation: f64) -> Result<Self> {
        if !(sphere_radius > 0.0) {
            return Err(CasimirError::config("system.sphere_radius", "must be > 0"));
        }
        if !(separation > 0.0) {
            return Err(CasimirError::config("separation", "must be > 0"));
        }
        Ok(Self {
            sphere_radius,
            separation,
        })
    }

    /// PFA is trustworthy only for `x ≪ R`.
    pub fn pfa_warning(&self) -> Option<String> {
        let ratio = self.separation / self.sphere_radius;
        (ratio > 0.1).then(|| format!("x/R = {ratio:.3} > 0.1: proximity-force approximation is unreliable"))
    }
}

/// Temperature and Matsubara truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalSetting {
    pub temperature: f64,
    /// `None` picks enough terms for the `e^{−ζ_n}` tail to drop below 1e-17.
    pub matsubara_terms: Option<usize>,
}

impl ThermalSetting {
    pub fn zero() -> Self {
        Self {
            temperature: 0.0,
            matsubara_terms: None,
        }
    }

    pub fn room() -> Self {
        Self::at(300.0)
    }

    pub fn at(temperature: f64) -> Self {
        Self {
            temperature,
            matsubara_terms: None,
        }
    }

    pub fn with_terms(mut self, n: usize) -> Self {
        self.matsubara_terms = Some(n);
        self
    }

    /// First Matsubara frequency `2π k_B T / ħ`.
    pub fn matsubara_step(&self) -> f64 {
        2.0 * PI * K_B * self.temperature / HBAR
    }

    /// Number of non-zero Matsubara terms used at separation `x`.
    pub fn terms_at(&self, x: f64) -> usize {
        if let Some(n) = self.matsubara_terms {
            return n;
        }
        let zeta1 = 2.0 * x * self.matsubara_step() / C_LIGHT;
        ((MATSUBARA_CUTOFF / zeta1).ceil() as usize).max(8)
    }
}

const MATSUBARA_CUTOFF: f64 = 40.0;

fn check_separation(x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(CasimirError::Domain(format!("separation must be > 0, got {x:e}")));
    }
    Ok(())
}

/// `Σ_p ln(1 − r₁ₚ r₂ₚ e^{−κ})` at scaled `(ζ, κ)`.
fn log_integrand(m1: &MirrorStack, m2: &MirrorStack, x: f64, zeta: f64, kappa: f64) -> Result<f64> {
    let xi = zeta * C_LIGHT / (2.0 * x);
    let k_perp = ((kappa - zeta) * (kappa + zeta)).max(0.0).sqrt() / (2.0 * x);
    let decay = (-kappa).exp();
    let mut sum = 0.0;
    for mode in TransverseMode::BOTH {
        let rr = m1.reflection(xi, k_perp, mode)? * m2.reflection(xi, k_perp, mode)?;
        sum += (-rr * decay).ln_1p();
    }
    Ok(sum)
}

/// `∫_ζ^∞ κ dκ Σ_p ln(1 − r₁ₚ r₂ₚ e^{−κ})`.
fn kappa_integral(m1: &MirrorStack, m2: &MirrorStack, x: f64, zeta: f64, quad: &QuadratureSpec) -> Result<f64> {
    let mut failure = None;
    let est = integrate_semi_infinite(
        |kappa| match log_integrand(m1, m2, x, zeta, kappa) {
            Ok(v) => kappa * v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        zeta,
        1.0,
        quad,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(est.value),
    }
}

fn inner_spec(quad: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        relative_tolerance: quad.relative_tolerance * 0.1,
        ..*quad
    }
}

/// Zero-temperature Casimir energy per unit area between two mirrors, J/m².
pub fn energy_per_area_t0(m1: &MirrorStack, m2: &MirrorStack, x: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_separation(x)?;
    let inner = inner_spec(quad);
    let mut failure = None;
    let outer = integrate_semi_infinite(
        |zeta| match kappa_integral(m1, m2, x, zeta, &inner) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        1.0,
        quad,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(HBAR * C_LIGHT / (32.0 * PI * PI * x.powi(3)) * outer.value)
}

/// Energy per unit area at temperature `T`, J/m².
///
/// `T = 0` delegates to [`energy_per_area_t0`].
pub fn energy_per_area_finite_t(
    m1: &MirrorStack,
    m2: &MirrorStack,
    x: f64,
    thermal: &ThermalSetting,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_separation(x)?;
    if !(thermal.temperature >= 0.0) {
        return Err(CasimirError::config("system.temperature", "must be >= 0"));
    }
    if thermal.temperature == 0.0 {
        return energy_per_area_t0(m1, m2, x, quad);
    }
    let step = 2.0 * x * thermal.matsubara_step() / C_LIGHT;
    let terms = thermal.terms_at(x);
    let inner = inner_spec(quad);
    let mut sum = 0.5 * kappa_integral(m1, m2, x, 0.0, &inner)?;
    for n in 1..=terms {
        sum += kappa_integral(m1, m2, x, step * n as f64, &inner)?;
    }
    Ok(K_B * thermal.temperature / (8.0 * PI * x * x) * sum)
}

/// `−π²ħc / (720 x³)`: ideal mirrors at zero temperature.
pub fn ideal_energy_per_area(x: f64) -> f64 {
    -PI * PI * HBAR * C_LIGHT / (720.0 * x.powi(3))
}

/// `−π³ħcR / (360 x³)`: ideal sphere and plate at zero temperature.
pub fn ideal_force(geometry: &Geometry) -> f64 {
    -PI.powi(3) * HBAR * C_LIGHT * geometry.sphere_radius / (360.0 * geometry.separation.powi(3))
}

/// Analytic derivatives `(F, dF/dx, d²F/dx²)` of [`ideal_force`].
pub fn ideal_force_derivatives(sphere_radius: f64, x: f64) -> (f64, f64, f64) {
    let a = PI.powi(3) * HBAR * C_LIGHT * sphere_radius / 360.0;
    (-a / x.powi(3), 3.0 * a / x.powi(4), -12.0 * a / x.powi(5))
}

/// High-temperature contribution of the `n = 0` TM term for Drude metals,
/// `−k_B T ζ(3) / (16π x²)`; useful as a sanity scale.
pub fn static_tm_energy(temperature: f64, x: f64) -> f64 {
    -K_B * temperature * ZETA_3 / (16.0 * PI * x * x)
}

/// Sphere–plate force in the proximity-force approximation,
/// `F = 2πR E(x, T)` (negative, attractive).
pub fn pfa_force(
    geometry: &Geometry,
    m1: &MirrorStack,
    m2: &MirrorStack,
    thermal: &ThermalSetting,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let e = energy_per_area_finite_t(m1, m2, geometry.separation, thermal, quad)?;
    Ok(2.0 * PI * geometry.sphere_radius * e)
}

/// `|E(x,T) − E(x,0)| / |E(x,T)|`.
pub fn thermal_fraction(
    m1: &MirrorStack,
    m2: &MirrorStack,
    x: f64,
    temperature: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let et = energy_per_area_finite_t(m1, m2, x, &ThermalSetting::at(temperature), quad)?;
    let e0 = energy_per_area_t0(m1, m2, x, quad)?;
    Ok(((et - e0) / et).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::DielectricModel;

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn ideal_mirrors_match_closed_form() {
        let pc = MirrorStack::ideal();
        for x_nm in [50.0, 100.0, 500.0] {
            let x = x_nm * 1e-9;
            let e = energy_per_area_t0(&pc, &pc, x, &quad()).unwrap();
            let exact = ideal_energy_per_area(x);
            assert!(((e - exact) / exact).abs() < 1e-4, "x={x_nm}: {e} vs {exact}");
        }
    }

    #[test]
    fn ideal_energy_value_at_100nm() {
        let e = ideal_energy_per_area(100e-9);
        assert!((e + 4.33e-7).abs() < 0.01e-7, "{e}");
    }

    #[test]
    fn ideal_energy_cube_law() {
        let pc = MirrorStack::ideal();
        let a = energy_per_area_t0(&pc, &pc, 100e-9, &quad()).unwrap();
        let b = energy_per_area_t0(&pc, &pc, 200e-9, &quad()).unwrap();
        assert!((a / b - 8.0).abs() < 8.0 * 2e-4);
    }

    #[test]
    fn gold_weaker_than_ideal() {
        let au = MirrorStack::bulk(DielectricModel::gold());
        let x = 139e-9;
        let e = energy_per_area_t0(&au, &au, x, &quad()).unwrap();
        assert!(e < 0.0);
        assert!(e.abs() < ideal_energy_per_area(x).abs());
    }

    #[test]
    fn ideal_force_values() {
        let g = Geometry::new(34.55e-6, 100e-9).unwrap();
        let f = ideal_force(&g);
        assert!((f + 9.41e-11).abs() < 0.01e-11, "{f}");
        let g2 = Geometry::new(34.55e-6, 200e-9).unwrap();
        assert!((f / ideal_force(&g2) - 8.0).abs() < 1e-12);
        let g3 = Geometry::new(69.1e-6, 100e-9).unwrap();
        assert!((ideal_force(&g3) / f - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pfa_prefactor_identity() {
        // 2π · π²/720 = π³/360
        assert!((2.0 * PI * PI * PI / 720.0 - PI.powi(3) / 360.0).abs() < 1e-15);
        let g = Geometry::new(34.55e-6, 100e-9).unwrap();
        let pc = MirrorStack::ideal();
        let f = pfa_force(&g, &pc, &pc, &ThermalSetting::zero(), &quad()).unwrap();
        assert!(f < 0.0);
        assert!(((f - ideal_force(&g)) / ideal_force(&g)).abs() < 1e-4);
    }

    #[test]
    fn zero_temperature_delegates() {
        let au = MirrorStack::bulk(DielectricModel::gold());
        let a = energy_per_area_finite_t(&au, &au, 200e-9, &ThermalSetting::zero(), &quad()).unwrap();
        let b = energy_per_area_t0(&au, &au, 200e-9, &quad()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn low_temperature_approaches_zero_temperature() {
        let au = MirrorStack::bulk(DielectricModel::gold());
        let x = 200e-9;
        let e0 = energy_per_area_t0(&au, &au, x, &quad()).unwrap();
        let et = energy_per_area_finite_t(&au, &au, x, &ThermalSetting::at(1.0), &quad()).unwrap();
        assert!(((et - e0) / e0).abs() < 2.0 * 1e-4 + 1e-4, "{et} vs {e0}");
    }

    #[test]
    fn ideal_high_temperature_limit() {
        // At large kT x/ħc only the n = 0 term survives; for ideal mirrors
        // both polarizations contribute.
        let pc = MirrorStack::ideal();
        let x = 20e-6;
        let e = energy_per_area_finite_t(&pc, &pc, x, &ThermalSetting::room(), &quad()).unwrap();
        let n0 = 2.0 * static_tm_energy(300.0, x);
        assert!(((e - n0) / n0).abs() < 1e-3, "{e} vs {n0}");
    }

    #[test]
    fn matsubara_doubling_converged() {
        let au = MirrorStack::bulk(DielectricModel::gold());
        let x = 100e-9;
        let t = ThermalSetting::room();
        let n = t.terms_at(x);
        let a = energy_per_area_finite_t(&au, &au, x, &t.with_terms(n), &quad()).unwrap();
        let b = energy_per_area_finite_t(&au, &au, x, &t.with_terms(2 * n), &quad()).unwrap();
        assert!(((a - b) / a).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_separation() {
        let pc = MirrorStack::ideal();
        assert!(energy_per_area_t0(&pc, &pc, 0.0, &quad()).is_err());
        assert!(energy_per_area_t0(&pc, &pc, -1e-9, &quad()).is_err());
        assert!(Geometry::new(1e-6, -1.0).is_err());
    }

    #[test]
    fn pfa_warning_threshold() {
        assert!(Geometry::new(1e-6, 50e-9).unwrap().pfa_warning().is_none());
        assert!(Geometry::new(1e-6, 200e-9).unwrap().pfa_warning().is_some());
    }
}
