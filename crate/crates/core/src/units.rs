//! Physical constants and conversions between laboratory and reduced units.
//!
//! Reduced units used throughout the crate:
//! energy in `E_J`, time in `hbar/E_J`, angular frequency in `E_J/hbar`,
//! charge in `2e`, capacitance in `(2e)^2/E_J`, temperature as `k_B T/E_J`.

/// Planck constant, J s (2019 SI exact).
pub const PLANCK_H: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = PLANCK_H / (2.0 * std::f64::consts::PI);
/// Boltzmann constant, J/K (2019 SI exact).
pub const K_B: f64 = 1.380_649e-23;
/// Elementary charge, C (2019 SI exact).
pub const E_CHARGE: f64 = 1.602_176_634e-19;

/// `k_B/h` in Hz per kelvin; handy when energies are quoted as frequencies.
pub const KB_OVER_H_HZ_PER_K: f64 = K_B / PLANCK_H;

/// Energy of a photon at frequency `f_ghz` gigahertz, in joules.
pub fn ghz_to_joule(f_ghz: f64) -> f64 {
    PLANCK_H * f_ghz * 1e9
}

/// Capacitance unit `(2e)^2 / E_J`, in farads, for a junction energy given
/// as a frequency `E_J/h` in GHz.
pub fn capacitance_unit_farads(e_j_over_h_ghz: f64) -> f64 {
    (2.0 * E_CHARGE).powi(2) / ghz_to_joule(e_j_over_h_ghz)
}

/// Convert a capacitance in farads to reduced units.
pub fn capacitance_reduced(c_farads: f64, e_j_over_h_ghz: f64) -> f64 {
    c_farads / capacitance_unit_farads(e_j_over_h_ghz)
}

/// Junction capacitance in farads from the charging energy `E_C = e^2/2C_J`,
/// with `E_C/h` in GHz.
pub fn junction_capacitance_from_ec_farads(e_c_over_h_ghz: f64) -> f64 {
    E_CHARGE * E_CHARGE / (2.0 * ghz_to_joule(e_c_over_h_ghz))
}

/// Angular frequency `2(pi) f_ghz` expressed in reduced units `E_J/hbar`.
pub fn ghz_to_reduced_angular(f_ghz: f64, e_j_over_h_ghz: f64) -> f64 {
    // omega * hbar / E_J = (2 pi f) * hbar / (h f_J) = f / f_J
    f_ghz / e_j_over_h_ghz
}

/// Temperature in kelvin to `k_B T / E_J` with `E_J/h` in GHz.
pub fn kelvin_to_reduced(t_kelvin: f64, e_j_over_h_ghz: f64) -> f64 {
    K_B * t_kelvin / ghz_to_joule(e_j_over_h_ghz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn capacitance_unit_scale() {
        // (2e)^2/E_J for E_J/h = 30.3 GHz is about 5.11 fF.
        let u = capacitance_unit_farads(30.3);
        assert_relative_eq!(u, 5.113e-15, max_relative = 1e-3);
    }

    #[test]
    fn junction_capacitance_from_charging_energy() {
        // E_C/h = 13.8 GHz -> C_J ~ 1.40 fF.
        let cj = junction_capacitance_from_ec_farads(13.8);
        assert_relative_eq!(cj, 1.403e-15, max_relative = 1e-3);
    }

    #[test]
    fn cavity_frequency_reduced() {
        // omega_c hbar / E_J = f_c / f_J for f in plain frequency units.
        let w = ghz_to_reduced_angular(10.056, 30.3);
        assert_relative_eq!(w, 10.056 / 30.3, max_relative = 1e-12);
    }
}
