//! Physical constants and unit conversions.
//!
//! Internal units: energy and frequency in cm⁻¹, time in fs, temperature in K,
//! transition dipoles in Debye, electric fields in V/m.

/// Speed of light in cm/fs.
pub const SPEED_OF_LIGHT_CM_PER_FS: f64 = 2.997_924_58e-5;

/// Angular frequency (rad/fs) corresponding to 1 cm⁻¹, i.e. 2πc. Multiplying an
/// energy in cm⁻¹ by this constant gives E/ħ in fs⁻¹.
pub const CM_TO_RAD_PER_FS: f64 = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_CM_PER_FS;

/// Boltzmann constant in cm⁻¹/K.
pub const BOLTZMANN_CM_PER_K: f64 = 0.695_034_800;

/// Energy in cm⁻¹ of a 1 Debye dipole in a 1 V/m field.
pub const DEBYE_VOLT_PER_METER_TO_CM: f64 = DEBYE_SI / (PLANCK_SI * SPEED_OF_LIGHT_CM_PER_S);

const DEBYE_SI: f64 = 3.335_640_95e-30;
const PLANCK_SI: f64 = 6.626_070_15e-34;
const SPEED_OF_LIGHT_CM_PER_S: f64 = 2.997_924_58e10;

/// Convert a rate in fs⁻¹ to an energy width in cm⁻¹.
pub fn rate_to_cm(rate: f64) -> f64 {
    rate / CM_TO_RAD_PER_FS
}

/// Convert an energy in cm⁻¹ to an angular frequency in fs⁻¹.
pub fn cm_to_rate(energy: f64) -> f64 {
    energy * CM_TO_RAD_PER_FS
}

/// Thermal energy k_B T in cm⁻¹.
pub fn thermal_energy(temperature: f64) -> f64 {
    BOLTZMANN_CM_PER_K * temperature
}

/// Full width at half maximum of a Gaussian with standard deviation `sigma`.
pub fn fwhm_from_sigma(sigma: f64) -> f64 {
    sigma * 2.0 * (2.0 * std::f64::consts::LN_2).sqrt()
}

/// Standard deviation of a Gaussian with full width at half maximum `fwhm`.
pub fn sigma_from_fwhm(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_match_reference_values() {
        assert!((CM_TO_RAD_PER_FS - 1.883_651_567e-4).abs() < 1e-12);
        assert!((DEBYE_VOLT_PER_METER_TO_CM - 1.679_e-7).abs() < 1e-10);
        // 1/(50 fs) is about 106 cm^-1.
        assert!((rate_to_cm(0.02) - 106.18).abs() < 0.01);
        assert!((sigma_from_fwhm(100.0) - 42.466).abs() < 1e-3);
        assert!((fwhm_from_sigma(sigma_from_fwhm(7.0)) - 7.0).abs() < 1e-12);
    }
}
