//! Physical constants (CODATA 2018, exact where SI defines them) and unit helpers.

use std::f64::consts::PI;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Elementary charge, C.
pub const E_CHARGE: f64 = 1.602_176_634e-19;

/// Riemann zeta(3).
pub const ZETA_3: f64 = 1.202_056_903_159_594_2;

/// Angular frequency (rad/s) of a photon energy given in eV.
pub fn ev_to_rad_per_s(ev: f64) -> f64 {
    ev * E_CHARGE / HBAR
}

pub fn hz_to_rad(f: f64) -> f64 {
    2.0 * PI * f
}

pub fn rad_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

pub const NM: f64 = 1e-9;
pub const UM: f64 = 1e-6;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_ev_plasma_frequency() {
        let wp = ev_to_rad_per_s(9.0);
        assert!((wp - 1.3673e16).abs() / 1.3673e16 < 1e-4, "{wp}");
    }

    #[test]
    fn hz_round_trip() {
        assert!((rad_to_hz(hz_to_rad(4826.0)) - 4826.0).abs() < 1e-9);
    }
}
