//! Mirror response at imaginary frequency and Fresnel reflection coefficients.
//!
//! All frequencies are angular (rad/s), wave vectors in rad/m. The in-plane
//! wave vector is `k_perp`; in vacuum the normal component is
//! `q = sqrt(k_perp² + ξ²/c²)`.

use crate::error::{CasimirError, Result};
use crate::units::{ev_to_rad_per_s, C_LIGHT};

/// Dielectric response of a mirror material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DielectricModel {
    /// `ε(iξ) = 1 + ωp² / (ξ (ξ + γ))`. `relaxation_rate = 0` is the plasma model.
    Drude {
        plasma_frequency: f64,
        relaxation_rate: f64,
    },
    /// Frequency-independent permittivity.
    Constant { epsilon: f64 },
    /// `ε → ∞`.
    PerfectConductor,
}

/// Value of `ε(iξ)`, with an explicit infinite case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Permittivity {
    Finite(f64),
    Infinite,
}

impl Permittivity {
    pub fn finite(self) -> Option<f64> {
        match self {
            Self::Finite(e) => Some(e),
            Self::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransverseMode {
    TE,
    TM,
}

impl TransverseMode {
    pub const BOTH: [TransverseMode; 2] = [TransverseMode::TM, TransverseMode::TE];
}

impl DielectricModel {
    /// Gold with the commonly used Drude parameters ωp = 9.0 eV, γ = 0.035 eV.
    pub fn gold() -> Self {
        Self::drude_ev(9.0, 0.035)
    }

    /// Silicon as a constant ε = 11.7.
    pub fn silicon() -> Self {
        Self::Constant { epsilon: 11.7 }
    }

    pub fn drude_ev(plasma_ev: f64, relaxation_ev: f64) -> Self {
        Self::Drude {
            plasma_frequency: ev_to_rad_per_s(plasma_ev),
            relaxation_rate: ev_to_rad_per_s(relaxation_ev),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Drude {
                plasma_frequency,
                relaxation_rate,
            } => {
                if !(plasma_frequency > 0.0 && plasma_frequency.is_finite()) {
                    return Err(CasimirError::config("materials.plasma_frequency", "must be > 0"));
                }
                if !(relaxation_rate >= 0.0 && relaxation_rate.is_finite()) {
                    return Err(CasimirError::config("materials.relaxation_rate", "must be >= 0"));
                }
            }
            Self::Constant { epsilon } => {
                if !(epsilon >= 1.0 && epsilon.is_finite()) {
                    return Err(CasimirError::config("materials.epsilon", "must be >= 1"));
                }
            }
            Self::PerfectConductor => {}
        }
        Ok(())
    }

    /// True when the static permittivity diverges (any conductor).
    pub fn is_conductor(&self) -> bool {
        !matches!(self, Self::Constant { .. })
    }

    /// `ε(iξ)` for `ξ > 0`.
    pub fn permittivity(&self, xi: f64) -> Result<Permittivity> {
        match *self {
            Self::Drude {
                plasma_frequency,
                relaxation_rate,
            } => {
                if xi <= 0.0 {
                    return Err(CasimirError::Domain(format!(
                        "Drude permittivity needs ξ > 0 (got {xi:e}); the ξ = 0 limit is handled by the static reflection"
                    )));
                }
                Ok(Permittivity::Finite(
                    1.0 + plasma_frequency * plasma_frequency / (xi * (xi + relaxation_rate)),
                ))
            }
            Self::Constant { epsilon } => Ok(Permittivity::Finite(epsilon)),
            Self::PerfectConductor => Ok(Permittivity::Infinite),
        }
    }

    /// Normal wave vector inside the medium, `sqrt(ε ξ²/c² + k²)`.
    fn response(&self, xi: f64, k_perp: f64) -> Result<Layer> {
        if xi == 0.0 {
            return Ok(self.static_response(k_perp));
        }
        Ok(match self.permittivity(xi)? {
            Permittivity::Finite(eps) => {
                let w = xi / C_LIGHT;
                Layer {
                    eps: Some(eps),
                    kappa: Some((eps * w * w + k_perp * k_perp).sqrt()),
                }
            }
            Permittivity::Infinite => Layer { eps: None, kappa: None },
        })
    }

    /// `ξ → 0` limit of the layer response.
    ///
    /// For a dissipative Drude metal `ε ξ² → 0`, so the TE wave vector
    /// reduces to the vacuum one and the TE reflection vanishes. The
    /// plasma model keeps a finite penetration depth `c/ωp`.
    fn static_response(&self, k_perp: f64) -> Layer {
        match *self {
            Self::Drude {
                plasma_frequency,
                relaxation_rate,
            } => {
                let kappa = if relaxation_rate > 0.0 {
                    k_perp
                } else {
                    let kp = plasma_frequency / C_LIGHT;
                    (k_perp * k_perp + kp * kp).sqrt()
                };
                Layer {
                    eps: None,
                    kappa: Some(kappa),
                }
            }
            Self::Constant { epsilon } => Layer {
                eps: Some(epsilon),
                kappa: Some(k_perp),
            },
            Self::PerfectConductor => Layer { eps: None, kappa: None },
        }
    }
}

/// One medium at a given `(ξ, k_perp)`; `None` stands for an infinite value.
#[derive(Debug, Clone, Copy)]
struct Layer {
    eps: Option<f64>,
    kappa: Option<f64>,
}

const VACUUM_EPS: f64 = 1.0;

/// Fresnel coefficient for a wave in medium `a` reflecting off medium `b`.
fn interface(mode: TransverseMode, a: Layer, b: Layer) -> f64 {
    match mode {
        TransverseMode::TE => match (a.kappa, b.kappa) {
            (Some(ka), Some(kb)) => {
                let s = ka + kb;
                if s == 0.0 {
                    0.0
                } else {
                    (ka - kb) / s
                }
            }
            (Some(_), None) => -1.0,
            (None, Some(_)) => 1.0,
            (None, None) => 0.0,
        },
        TransverseMode::TM => match (a.eps, b.eps) {
            (Some(ea), Some(eb)) => {
                let (ka, kb) = (a.kappa.unwrap_or(0.0), b.kappa.unwrap_or(0.0));
                let num = eb * ka - ea * kb;
                let den = eb * ka + ea * kb;
                if den == 0.0 {
                    // k_perp = 0 at ξ = 0 between two dielectrics.
                    (eb - ea) / (eb + ea)
                } else {
                    num / den
                }
            }
            (Some(_), None) => 1.0,
            (None, Some(_)) => -1.0,
            (None, None) => 0.0,
        },
    }
}

fn vacuum(xi: f64, k_perp: f64) -> Layer {
    let w = xi / C_LIGHT;
    Layer {
        eps: Some(VACUUM_EPS),
        kappa: Some((w * w + k_perp * k_perp).sqrt()),
    }
}

fn check_args(xi: f64, k_perp: f64) -> Result<()> {
    if !(xi >= 0.0 && k_perp >= 0.0) || (xi == 0.0 && k_perp == 0.0) {
        return Err(CasimirError::Domain(format!(
            "reflection needs ξ ≥ 0, k_perp ≥ 0, not both zero (got ξ = {xi:e}, k = {k_perp:e})"
        )));
    }
    Ok(())
}

/// Reflection coefficient of a semi-infinite mirror seen from vacuum.
pub fn bulk_reflection(model: &DielectricModel, xi: f64, k_perp: f64, mode: TransverseMode) -> Result<f64> {
    check_args(xi, k_perp)?;
    let medium = model.response(xi, k_perp)?;
    Ok(interface(mode, vacuum(xi, k_perp), medium))
}

/// A film of finite (or infinite) thickness on a substrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorStack {
    pub film: DielectricModel,
    /// Metres; `f64::INFINITY` for a bulk mirror.
    pub film_thickness: f64,
    pub substrate: DielectricModel,
}

impl MirrorStack {
    pub fn bulk(material: DielectricModel) -> Self {
        Self {
            film: material,
            film_thickness: f64::INFINITY,
            substrate: material,
        }
    }

    pub fn film_on(film: DielectricModel, thickness: f64, substrate: DielectricModel) -> Result<Self> {
        let s = Self {
            film,
            film_thickness: thickness,
            substrate,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn ideal() -> Self {
        Self::bulk(DielectricModel::PerfectConductor)
    }

    pub fn validate(&self) -> Result<()> {
        self.film.validate()?;
        self.substrate.validate()?;
        if self.film_thickness.is_nan() || self.film_thickness < 0.0 {
            return Err(CasimirError::config("materials.film_thickness", "must be > 0 or infinite"));
        }
        Ok(())
    }

    pub fn is_bulk(&self) -> bool {
        self.film_thickness.is_infinite() || self.film == self.substrate
    }

    /// Reflection coefficient of the stack (two-interface recursion).
    pub fn reflection(&self, xi: f64, k_perp: f64, mode: TransverseMode) -> Result<f64> {
        layered_reflection(self, xi, k_perp, mode)
    }
}

/// `r = (r₀₁ + r₁₂ e^{−2κ₁t}) / (1 + r₀₁ r₁₂ e^{−2κ₁t})`.
pub fn layered_reflection(stack: &MirrorStack, xi: f64, k_perp: f64, mode: TransverseMode) -> Result<f64> {
    check_args(xi, k_perp)?;
    if stack.is_bulk() {
        return bulk_reflection(&stack.film, xi, k_perp, mode);
    }
    if stack.film == DielectricModel::PerfectConductor && stack.film_thickness > 0.0 {
        return bulk_reflection(&stack.film, xi, k_perp, mode);
    }
    if stack.film_thickness == 0.0 {
        return bulk_reflection(&stack.substrate, xi, k_perp, mode);
    }
    // A static conductor film screens TM completely whatever lies behind it.
    if xi == 0.0 && mode == TransverseMode::TM && stack.film.is_conductor() {
        return Ok(1.0);
    }
    let outer = vacuum(xi, k_perp);
    let film = stack.film.response(xi, k_perp)?;
    let substrate = stack.substrate.response(xi, k_perp)?;
    let r01 = interface(mode, outer, film);
    let r12 = match (mode, film.eps, substrate.eps) {
        // Static metal-on-metal TM is already handled above; static
        // dielectric film on a metal reflects fully at the back.
        (TransverseMode::TM, Some(_), None) => 1.0,
        _ => interface(mode, film, substrate),
    };
    let kappa1 = film.kappa.expect("finite film response");
    let phase = (-2.0 * kappa1 * stack.film_thickness).exp();
    Ok((r01 + r12 * phase) / (1.0 + r01 * r12 * phase))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gold() -> DielectricModel {
        DielectricModel::gold()
    }

    #[test]
    fn drude_at_plasma_frequency_without_damping() {
        let wp = 1.0e16;
        let m = DielectricModel::Drude {
            plasma_frequency: wp,
            relaxation_rate: 0.0,
        };
        assert_eq!(m.permittivity(wp).unwrap(), Permittivity::Finite(2.0));
    }

    #[test]
    fn drude_high_frequency_limit() {
        let eps = gold().permittivity(1e22).unwrap().finite().unwrap();
        assert!((eps - 1.0).abs() < 1e-8);
    }

    #[test]
    fn drude_standard_gold_value() {
        let m = DielectricModel::Drude {
            plasma_frequency: 1.37e16,
            relaxation_rate: 5.32e13,
        };
        let eps = m.permittivity(1e15).unwrap().finite().unwrap();
        // 1 + 1.37e16² / (1e15 · 1.0532e15)
        assert!((eps - 179.2).abs() < 0.5, "{eps}");
    }

    #[test]
    fn drude_rejects_nonpositive_frequency() {
        let plasma = DielectricModel::Drude {
            plasma_frequency: 1e16,
            relaxation_rate: 0.0,
        };
        assert!(matches!(plasma.permittivity(0.0), Err(CasimirError::Domain(_))));
        assert!(gold().permittivity(-1.0).is_err());
    }

    #[test]
    fn perfect_conductor_reflects_fully() {
        let pc = DielectricModel::PerfectConductor;
        for &(xi, k) in &[(1e15, 1e7), (0.0, 1e6), (3e12, 0.0)] {
            assert_eq!(bulk_reflection(&pc, xi, k, TransverseMode::TM).unwrap(), 1.0);
            assert_eq!(bulk_reflection(&pc, xi, k, TransverseMode::TE).unwrap(), -1.0);
        }
    }

    #[test]
    fn vacuum_mirror_is_transparent() {
        let vac = DielectricModel::Constant { epsilon: 1.0 };
        for mode in TransverseMode::BOTH {
            assert_eq!(bulk_reflection(&vac, 1e15, 1e7, mode).unwrap(), 0.0);
        }
    }

    #[test]
    fn gold_reflection_regression() {
        let tm = bulk_reflection(&gold(), 1e15, 1e7, TransverseMode::TM).unwrap();
        let te = bulk_reflection(&gold(), 1e15, 1e7, TransverseMode::TE).unwrap();
        assert!(tm > 0.0 && tm < 1.0);
        assert!(te < 0.0 && te > -1.0);
        assert!(tm.abs() > te.abs());
        // Frozen from direct evaluation of the closed form above.
        assert!((tm - 0.952_608).abs() < 1e-5, "{tm}");
        assert!((te + 0.624_972).abs() < 1e-5, "{te}");
    }

    #[test]
    fn static_drude_te_vanishes() {
        assert_eq!(bulk_reflection(&gold(), 0.0, 1e7, TransverseMode::TE).unwrap(), 0.0);
        assert_eq!(bulk_reflection(&gold(), 0.0, 1e7, TransverseMode::TM).unwrap(), 1.0);
        let plasma = DielectricModel::drude_ev(9.0, 0.0);
        let te = bulk_reflection(&plasma, 0.0, 1e7, TransverseMode::TE).unwrap();
        let kp = crate::units::ev_to_rad_per_s(9.0) / C_LIGHT;
        let inside = (1e14 + kp * kp).sqrt();
        assert!((te - (1e7 - inside) / (1e7 + inside)).abs() < 1e-12);
        let si = DielectricModel::silicon();
        let tm = bulk_reflection(&si, 0.0, 1e7, TransverseMode::TM).unwrap();
        assert!((tm - 10.7 / 12.7).abs() < 1e-12);
    }

    #[test]
    fn layered_limits() {
        let xi = 1e15;
        let k = 1e7;
        for mode in TransverseMode::BOTH {
            let thick = MirrorStack {
                film: gold(),
                film_thickness: f64::INFINITY,
                substrate: DielectricModel::silicon(),
            };
            assert_eq!(
                layered_reflection(&thick, xi, k, mode).unwrap(),
                bulk_reflection(&gold(), xi, k, mode).unwrap()
            );
            let zero = MirrorStack {
                film_thickness: 0.0,
                ..thick
            };
            assert_eq!(
                layered_reflection(&zero, xi, k, mode).unwrap(),
                bulk_reflection(&DielectricModel::silicon(), xi, k, mode).unwrap()
            );
            // Very thin film must approach the substrate continuously.
            let thin = MirrorStack {
                film_thickness: 1e-15,
                ..thick
            };
            let r = layered_reflection(&thin, xi, k, mode).unwrap();
            let rs = bulk_reflection(&DielectricModel::silicon(), xi, k, mode).unwrap();
            assert!((r - rs).abs() < 1e-6);
        }
    }

    #[test]
    fn seventy_nm_gold_on_silicon_matches_bulk() {
        let stack = MirrorStack::film_on(gold(), 70e-9, DielectricModel::silicon()).unwrap();
        for mode in TransverseMode::BOTH {
            let r = layered_reflection(&stack, 1e15, 1e7, mode).unwrap();
            let b = bulk_reflection(&gold(), 1e15, 1e7, mode).unwrap();
            assert!((r - b).abs() < 1e-3, "{mode:?}: {r} vs {b}");
        }
    }

    #[test]
    fn thickness_convergence_is_monotone() {
        let xi = 1e15;
        let k = 1e7;
        for mode in TransverseMode::BOTH {
            let b = bulk_reflection(&gold(), xi, k, mode).unwrap();
            let mut last = f64::INFINITY;
            for t_nm in [10.0, 30.0, 70.0, 200.0, 1000.0] {
                let s = MirrorStack::film_on(gold(), t_nm * 1e-9, DielectricModel::silicon()).unwrap();
                let d = (layered_reflection(&s, xi, k, mode).unwrap() - b).abs();
                assert!(d <= last, "{mode:?} t={t_nm}: {d} > {last}");
                last = d;
            }
        }
    }

    #[test]
    fn static_layered_film() {
        let s = MirrorStack::film_on(gold(), 70e-9, DielectricModel::silicon()).unwrap();
        assert_eq!(s.reflection(0.0, 1e7, TransverseMode::TM).unwrap(), 1.0);
        assert_eq!(s.reflection(0.0, 1e7, TransverseMode::TE).unwrap(), 0.0);
        let on_pc = MirrorStack::film_on(gold(), 70e-9, DielectricModel::PerfectConductor).unwrap();
        let te = on_pc.reflection(0.0, 1e7, TransverseMode::TE).unwrap();
        assert!((te + (-2.0 * 1e7 * 70e-9f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_wavevector_and_frequency() {
        assert!(bulk_reflection(&gold(), 0.0, 0.0, TransverseMode::TM).is_err());
        assert!(bulk_reflection(&gold(), -1.0, 1.0, TransverseMode::TM).is_err());
    }

    proptest! {
        #[test]
        fn reflection_bounded(
            log_xi in 10.0f64..19.0,
            log_k in 3.0f64..10.0,
            log_wp in 15.0f64..17.0,
            log_g in 11.0f64..15.0,
            t_nm in 1.0f64..2000.0,
        ) {
            let xi = 10f64.powf(log_xi);
            let k = 10f64.powf(log_k);
            let m = DielectricModel::Drude { plasma_frequency: 10f64.powf(log_wp), relaxation_rate: 10f64.powf(log_g) };
            let stack = MirrorStack::film_on(m, t_nm * 1e-9, DielectricModel::silicon()).unwrap();
            for mode in TransverseMode::BOTH {
                let r = bulk_reflection(&m, xi, k, mode).unwrap();
                prop_assert!(r.abs() <= 1.0);
                let r = layered_reflection(&stack, xi, k, mode).unwrap();
                prop_assert!(r.abs() <= 1.0);
            }
        }

        #[test]
        fn drude_permittivity_decreasing(a in 12.0f64..18.0, b in 12.0f64..18.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let m = gold();
            let e_lo = m.permittivity(10f64.powf(lo)).unwrap().finite().unwrap();
            let e_hi = m.permittivity(10f64.powf(hi)).unwrap().finite().unwrap();
            prop_assert!(e_lo > e_hi);
            prop_assert!(e_hi >= 1.0);
        }
    }
}
