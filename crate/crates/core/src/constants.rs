//! Physical constants (CODATA 2018). Single source of truth for the crate.

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Vacuum permittivity (F/m).
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// 2π.
pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Angular frequency (rad/s) of light at vacuum wavelength `lambda_m`.
pub fn omega_of_wavelength(lambda_m: f64) -> f64 {
    TWO_PI * SPEED_OF_LIGHT / lambda_m
}

/// Vacuum wavelength (m) at angular frequency `omega` (rad/s).
pub fn wavelength_of_omega(omega: f64) -> f64 {
    TWO_PI * SPEED_OF_LIGHT / omega
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavelength_omega_round_trip() {
        let lam = 925e-9;
        assert!((wavelength_of_omega(omega_of_wavelength(lam)) - lam).abs() < 1e-22);
    }
}
