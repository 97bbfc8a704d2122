//! Internal unit system.
//!
//! Internally the speed of light is 1 and lengths are measured in micrometres,
//! so an angular frequency `omega` is expressed in rad/µm (i.e. `omega / c`) and
//! times are measured in µm/c. Conversion to SI happens only at I/O boundaries.

use std::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Metres per internal length unit.
pub const LENGTH_UNIT_M: f64 = 1e-6;

pub fn nm_to_um(nm: f64) -> f64 {
    nm * 1e-3
}

pub fn um_to_nm(um: f64) -> f64 {
    um * 1e3
}

pub fn mm_to_um(mm: f64) -> f64 {
    mm * 1e3
}

/// Vacuum wavelength (µm) to internal angular frequency.
pub fn omega_from_wavelength(wavelength_um: f64) -> f64 {
    2.0 * PI / wavelength_um
}

/// Internal angular frequency to vacuum wavelength (µm).
pub fn wavelength_from_omega(omega: f64) -> f64 {
    2.0 * PI / omega.abs()
}

/// Internal angular frequency to rad/s.
pub fn omega_to_si(omega: f64) -> f64 {
    omega * SPEED_OF_LIGHT / LENGTH_UNIT_M
}

/// Angular frequency in rad/s to internal units.
pub fn omega_from_si(omega_si: f64) -> f64 {
    omega_si * LENGTH_UNIT_M / SPEED_OF_LIGHT
}

/// Internal time (µm/c) to seconds.
pub fn time_to_si(t: f64) -> f64 {
    t * LENGTH_UNIT_M / SPEED_OF_LIGHT
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn wavelength_round_trip() {
        let w = omega_from_wavelength(0.8);
        assert_relative_eq!(wavelength_from_omega(w), 0.8, max_relative = 1e-15);
        assert_relative_eq!(omega_from_si(omega_to_si(w)), w, max_relative = 1e-15);
    }

    #[test]
    fn si_frequency_of_800nm() {
        // 2πc/λ for λ = 800 nm
        assert_relative_eq!(
            omega_to_si(omega_from_wavelength(0.8)),
            2.0 * PI * SPEED_OF_LIGHT / 800e-9,
            max_relative = 1e-14
        );
    }
}
