//! Input-output theory for the cavity readout: the forward map from the
//! array susceptibility to the complex reflection coefficient, and the
//! inverse fit that recovers the total linewidth (hence `Im chi`) from a
//! measured or simulated trace.
//!
//! With `chi_t = (g/2)(chi/2e)` the reflection reads
//!
//! ```text
//! S11(w) = 1 - k_ext / [ (k_ext + k_int)/2 - i (w - w_c + chi_t) ]
//! ```
//!
//! and the total linewidth is `k_tot = k_ext + k_int + 2 Im chi_t`. All
//! rates and frequencies just need one consistent angular unit.

use crate::linalg::{levenberg_marquardt, LinalgError};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Copy)]
pub struct CavityParams {
    pub omega_c: f64,
    pub kappa_ext: f64,
    pub kappa_int: f64,
    /// Array-cavity coupling strength (same angular unit).
    pub coupling_g: f64,
}

impl CavityParams {
    pub fn validate(&self) -> Result<(), CavityError> {
        if self.omega_c <= 0.0 || self.kappa_ext <= 0.0 || self.kappa_int < 0.0 {
            return Err(CavityError::BadParams);
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CavityError {
    #[error("cavity parameters must satisfy omega_c > 0, kappa_ext > 0, kappa_int >= 0")]
    BadParams,
    #[error("trace too short or too narrow for a linewidth fit: {0}")]
    BadTrace(&'static str),
    #[error("resonance dip below the noise floor")]
    DipBelowNoise,
    #[error("fit did not converge: {0}")]
    FitFailed(#[from] LinalgError),
}

#[derive(Debug, Clone)]
pub struct ReflectionTrace {
    pub omega: Vec<f64>,
    pub s11: Vec<Complex64>,
}

/// Forward model in the input-output form.
pub fn s11_point(omega: f64, chi_t: Complex64, cav: &CavityParams) -> Complex64 {
    let half = 0.5 * (cav.kappa_ext + cav.kappa_int);
    let det = Complex64::new(omega - cav.omega_c, 0.0) + chi_t;
    Complex64::new(1.0, 0.0) - cav.kappa_ext / (Complex64::new(half, 0.0) - Complex64::i() * det)
}

/// Same response in the explicit rational form quoted with the main
/// result; algebraically identical to [`s11_point`].
pub fn s11_point_rational(omega: f64, chi_t: Complex64, cav: &CavityParams) -> Complex64 {
    let detune = omega - cav.omega_c + chi_t.re;
    let num = Complex64::new(
        -0.5 * (cav.kappa_ext - cav.kappa_int - 2.0 * chi_t.im),
        -detune,
    );
    let den = Complex64::new(
        0.5 * (cav.kappa_ext + cav.kappa_int + 2.0 * chi_t.im),
        -detune,
    );
    num / den
}

/// Map a susceptibility spectrum (`chi/2e` per frequency) to a reflection
/// trace; `chi_over_2e` and `omega` share indices.
pub fn s11(
    omega: &[f64],
    chi_over_2e: &[Complex64],
    cav: &CavityParams,
) -> Result<ReflectionTrace, CavityError> {
    cav.validate()?;
    assert_eq!(omega.len(), chi_over_2e.len());
    let s11 = omega
        .iter()
        .zip(chi_over_2e)
        .map(|(&w, &chi)| s11_point(w, 0.5 * cav.coupling_g * chi, cav))
        .collect();
    Ok(ReflectionTrace {
        omega: omega.to_vec(),
        s11,
    })
}

#[derive(Debug, Clone)]
pub struct S11Fit {
    /// Total linewidth `k_ext + k_int + 2 Im chi_t`.
    pub kappa_tot: f64,
    /// Real part of `chi_t` (line-center pull), from the prior `omega_c`.
    pub chi_t_re: f64,
    /// `Im chi_t = (kappa_tot - kappa_ext - kappa_int)/2`.
    pub chi_t_im: f64,
    /// `Im chi / 2e = (kappa_tot - kappa_ext - kappa_int) / g`.
    pub im_chi_over_2e: f64,
    /// Root-mean-square residual per trace point (stacked Re and Im).
    pub rms_residual: f64,
}

/// Fit `kappa_tot` and the line-center pull from a reflection trace by
/// damped least squares on the stacked real and imaginary parts. The
/// external and internal rates come from the priors (they are flux- and
/// temperature-independent in this setup).
pub fn fit_s11(trace: &ReflectionTrace, cav: &CavityParams) -> Result<S11Fit, CavityError> {
    cav.validate()?;
    let n = trace.omega.len();
    if n < 8 {
        return Err(CavityError::BadTrace("need at least 8 points"));
    }

    // initial guesses: line center from the Re dip, width from the span
    // at half depth
    let (imin, remin) = trace
        .s11
        .iter()
        .enumerate()
        .map(|(i, s)| (i, s.re))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    let re_far = 0.5 * (trace.s11[0].re + trace.s11[n - 1].re);
    let depth = re_far - remin;
    if depth < 1e-3 {
        return Err(CavityError::DipBelowNoise);
    }
    let half_level = re_far - 0.5 * depth;
    let mut lo = imin;
    while lo > 0 && trace.s11[lo].re < half_level {
        lo -= 1;
    }
    let mut hi = imin;
    while hi + 1 < n && trace.s11[hi].re < half_level {
        hi += 1;
    }
    let fwhm = (trace.omega[hi] - trace.omega[lo]).abs();
    let span = trace.omega[n - 1] - trace.omega[0];
    if span.abs() < 3.0 * fwhm.abs() {
        return Err(CavityError::BadTrace("trace narrower than 3 linewidths"));
    }
    let center0 = trace.omega[imin];
    let kappa0 = fwhm.max(span.abs() * 1e-3);

    // model with constant chi_t across the trace:
    // S11 = 1 - k_ext / (k_tot/2 - i(w - center)), center = w_c - chi_t_re
    let model = |p: &[f64], r: &mut Vec<f64>| {
        let (center, kappa_tot) = (p[0], p[1]);
        r.clear();
        for (&w, s) in trace.omega.iter().zip(&trace.s11) {
            let den = Complex64::new(0.5 * kappa_tot, -(w - center));
            let m = Complex64::new(1.0, 0.0) - cav.kappa_ext / den;
            r.push(m.re - s.re);
            r.push(m.im - s.im);
        }
    };
    let (p, cost) = levenberg_marquardt(model, &[center0, kappa0], &[kappa0, kappa0], 200, 1e-14)?;
    let kappa_tot = p[1].abs();
    let chi_t_im = 0.5 * (kappa_tot - cav.kappa_ext - cav.kappa_int);
    Ok(S11Fit {
        kappa_tot,
        chi_t_re: cav.omega_c - p[0],
        chi_t_im,
        im_chi_over_2e: 2.0 * chi_t_im / cav.coupling_g,
        rms_residual: (cost / (2.0 * n as f64)).sqrt(),
    })
}

/// Table-of-the-device defaults (angular frequencies in rad/s).
pub fn device_cavity_params() -> CavityParams {
    let tau = std::f64::consts::TAU;
    CavityParams {
        omega_c: tau * 10.056e9,
        kappa_ext: tau * 31.8e6,
        kappa_int: tau * 0.7e6,
        coupling_g: tau * 350.0e6,
    }
}
