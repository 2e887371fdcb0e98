//! Temperature dependence of the junction energy: the weak-coupling BCS
//! gap and the Ambegaokar-Baratoff relation
//! `E_J(T)/E_J(0) = [Delta(T)/Delta(0)] tanh(Delta(T)/2 k_B T)`.
//!
//! Used to translate lab temperatures into the reduced temperature
//! `k_B T / E_J(T)` the simulations sweep.

use crate::units;
use thiserror::Error;

/// `Delta(0) / (k_B T_c) = pi e^{-gamma_E}` in weak coupling.
pub const GAP_TO_TC: f64 = 1.763_876_988_862_045_5;

#[derive(Debug, Clone, Copy)]
pub struct SuperconductorParams {
    /// Superconducting transition temperature, kelvin.
    pub t_c_kelvin: f64,
    /// Zero-temperature junction energy as a frequency `E_J(0)/h`, GHz.
    pub e_j0_ghz: f64,
}

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("temperature must be non-negative, got {0} K")]
    NegativeTemperature(f64),
    #[error("invalid superconductor parameters: {0}")]
    InvalidParams(&'static str),
    #[error("no lab temperature below T_c reaches reduced temperature {0}")]
    ReducedTemperatureUnreachable(f64),
}

impl SuperconductorParams {
    pub fn validate(&self) -> Result<(), MaterialError> {
        if self.t_c_kelvin <= 0.0 {
            return Err(MaterialError::InvalidParams("t_c must be positive"));
        }
        if self.e_j0_ghz <= 0.0 {
            return Err(MaterialError::InvalidParams("e_j0 must be positive"));
        }
        Ok(())
    }
}

/// Fermi-occupation integral `2 Int_0^inf dx / (E (exp(E/t) + 1))` with
/// `E = sqrt(x^2 + d^2)`, energies in units of `k_B T_c`.
fn occupation_integral(d: f64, t: f64) -> f64 {
    // Integrand decays like exp(-E/t); Simpson on a finite window.
    let upper = 40.0 * t + 8.0 * d;
    let n = 4000; // even
    let h = upper / n as f64;
    let f = |x: f64| {
        let e = x.hypot(d);
        let a = e / t;
        if a > 700.0 {
            0.0
        } else {
            1.0 / (e * (a.exp() + 1.0))
        }
    };
    let mut s = f(0.0) + f(upper);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(k as f64 * h);
    }
    2.0 * s * h / 3.0
}

/// Gap ratio `Delta(T)/Delta(0)` from the weak-coupling gap equation
/// `ln(Delta0/Delta) = 2 Int_0^inf dxi f(E)/E`, solved by bisection to
/// better than 1e-8 relative. Zero at and above `T_c`.
pub fn gap_ratio(t_over_tc: f64) -> f64 {
    if t_over_tc <= 0.0 {
        return 1.0;
    }
    if t_over_tc >= 1.0 {
        return 0.0;
    }
    // Work in units of Delta(0): the gap variable is the ratio itself and
    // the temperature is k_B T / Delta0 = t_over_tc / GAP_TO_TC.
    let t = t_over_tc / GAP_TO_TC;
    let residual = |ratio: f64| ratio.ln() + occupation_integral(ratio, t);
    let (mut lo, mut hi) = (1e-12, 1.0 + 1e-9);
    // residual(hi) > 0 (integral positive at ratio 1), residual(lo) < 0
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// BCS gap `Delta(T)` in joules; zero in the normal state.
pub fn bcs_gap(t_kelvin: f64, t_c_kelvin: f64) -> Result<f64, MaterialError> {
    if t_kelvin < 0.0 {
        return Err(MaterialError::NegativeTemperature(t_kelvin));
    }
    let ratio = gap_ratio(t_kelvin / t_c_kelvin);
    Ok(ratio * GAP_TO_TC * units::K_B * t_c_kelvin)
}

/// Ambegaokar-Baratoff suppression factor `E_J(T)/E_J(0)`.
pub fn ej_suppression(t_kelvin: f64, t_c_kelvin: f64) -> Result<f64, MaterialError> {
    if t_kelvin < 0.0 {
        return Err(MaterialError::NegativeTemperature(t_kelvin));
    }
    if t_kelvin >= t_c_kelvin {
        return Ok(0.0);
    }
    let ratio = gap_ratio(t_kelvin / t_c_kelvin);
    if t_kelvin == 0.0 {
        return Ok(ratio);
    }
    let delta = ratio * GAP_TO_TC * units::K_B * t_c_kelvin;
    Ok(ratio * (delta / (2.0 * units::K_B * t_kelvin)).tanh())
}

/// `E_J(T)` in joules.
pub fn ej_of_t(t_kelvin: f64, params: &SuperconductorParams) -> Result<f64, MaterialError> {
    params.validate()?;
    Ok(units::ghz_to_joule(params.e_j0_ghz) * ej_suppression(t_kelvin, params.t_c_kelvin)?)
}

/// Reduced temperature `k_B T / E_J(T)` for a lab temperature; diverges
/// as `T -> T_c`.
pub fn reduced_temperature(
    t_kelvin: f64,
    params: &SuperconductorParams,
) -> Result<f64, MaterialError> {
    let ej = ej_of_t(t_kelvin, params)?;
    Ok(units::K_B * t_kelvin / ej)
}

/// Invert the (strictly increasing) map `T -> k_B T / E_J(T)`: the lab
/// temperature realizing a requested reduced temperature.
pub fn lab_temperature_for_reduced(
    reduced: f64,
    params: &SuperconductorParams,
) -> Result<f64, MaterialError> {
    params.validate()?;
    if reduced <= 0.0 {
        return Err(MaterialError::ReducedTemperatureUnreachable(reduced));
    }
    let tc = params.t_c_kelvin;
    let g = |t: f64| units::K_B * t - reduced * ej_of_t(t, params).unwrap();
    let (mut lo, mut hi) = (0.0, tc * (1.0 - 1e-9));
    if g(hi) < 0.0 {
        return Err(MaterialError::ReducedTemperatureUnreachable(reduced));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn zero_temperature_limit() {
        let d = bcs_gap(0.0, 1.375).unwrap();
        assert_relative_eq!(d, GAP_TO_TC * units::K_B * 1.375, max_relative = 1e-12);
        assert_relative_eq!(ej_suppression(1e-6, 1.375).unwrap(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn gap_closes_at_tc() {
        assert_eq!(bcs_gap(1.375, 1.375).unwrap(), 0.0);
        assert_eq!(ej_suppression(1.5, 1.375).unwrap(), 0.0);
    }

    #[test]
    fn gap_ratio_reference_points() {
        // Independent oracle: the same equation in Matsubara form,
        // ln(1/t) = 2 pi t sum_n [1/w_n - 1/sqrt(w_n^2 + D^2)], solved in
        // scratch with two methods; classic tabulated values included.
        assert_abs_diff_eq!(gap_ratio(0.5), 0.9569, epsilon = 5e-4);
        assert_abs_diff_eq!(gap_ratio(0.8), 0.7110, epsilon = 5e-4);
        assert_abs_diff_eq!(gap_ratio(0.9), 0.5263, epsilon = 5e-4);
        assert_abs_diff_eq!(gap_ratio(0.95), 0.3803, epsilon = 5e-4);
    }

    #[test]
    fn monotone_decreasing() {
        // exponentially flat near t = 0, strictly falling past the knee
        let mut prev = 1.0;
        for k in 1..60 {
            let t = k as f64 / 60.0;
            let g = gap_ratio(t);
            assert!(g <= prev, "gap ratio rose at t = {t}");
            if t > 0.3 {
                assert!(g < prev, "gap ratio flat at t = {t}");
            }
            prev = g;
        }
        let params = SuperconductorParams {
            t_c_kelvin: 1.375,
            e_j0_ghz: 30.3,
        };
        let mut prev = f64::INFINITY;
        for k in 0..=40 {
            let t = 1.374 * k as f64 / 40.0;
            let e = ej_of_t(t, &params).unwrap();
            assert!(e <= prev);
            prev = e;
        }
    }

    #[test]
    fn reduced_temperature_map_is_increasing_and_invertible() {
        let params = SuperconductorParams {
            t_c_kelvin: 1.375,
            e_j0_ghz: 30.3,
        };
        let mut prev = 0.0;
        for k in 1..=30 {
            let t = 1.3 * k as f64 / 30.0;
            let r = reduced_temperature(t, &params).unwrap();
            assert!(r > prev, "map not increasing at {t} K");
            prev = r;
        }
        let t = lab_temperature_for_reduced(0.91, &params).unwrap();
        let back = reduced_temperature(t, &params).unwrap();
        assert_relative_eq!(back, 0.91, max_relative = 1e-8);
    }

    #[test]
    fn device_ratio_at_zero_flux_peak() {
        // With E_J(0)/h = 30.3 GHz, E_C/h = 13.8 GHz, T_c = 1.375 K, the
        // lab temperature whose reduced temperature is 0.91 must satisfy
        // E_J(T)/E_C = 1.52.
        let params = SuperconductorParams {
            t_c_kelvin: 1.375,
            e_j0_ghz: 30.3,
        };
        let t = lab_temperature_for_reduced(0.91, &params).unwrap();
        let ej_ghz = 30.3 * ej_suppression(t, params.t_c_kelvin).unwrap();
        let ratio = ej_ghz / 13.8;
        assert_abs_diff_eq!(ratio, 1.52, epsilon = 0.02);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(bcs_gap(-0.1, 1.0).is_err());
        let bad = SuperconductorParams {
            t_c_kelvin: 0.0,
            e_j0_ghz: 30.0,
        };
        assert!(ej_of_t(0.5, &bad).is_err());
        let params = SuperconductorParams {
            t_c_kelvin: 1.375,
            e_j0_ghz: 30.3,
        };
        assert!(lab_temperature_for_reduced(-1.0, &params).is_err());
    }
}
