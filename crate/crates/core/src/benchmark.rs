//! Built-in validation workloads: a single damped-oscillator benchmark
//! for the susceptibility estimator (the linear problem has closed-form
//! answers) and the Langevin-vs-Metropolis Gibbs cross-check.

use crate::capacitance::{assemble, CapacitanceModel};
use crate::dynamics::{
    batch_mean_stderr, metropolis_sample, run_trajectory, PhaseState, SimParams,
};
use crate::lattice::{build_lattice, ground_state_ansatz, LatticeSpec};
use crate::observables::{
    combine_spectra, correlation, susceptibility, Axis, ObservablesError, Spectrum, WelchParams,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Single node with a harmonic potential and charge Langevin dynamics:
/// mass = capacitance (reduced), `U = m w0^2 phi^2 / 2`.
#[derive(Debug, Clone, Copy)]
pub struct OscillatorParams {
    pub mass: f64,
    pub omega0: f64,
    pub gamma: f64,
    pub temperature: f64,
    /// Sampling interval of the recorded charge series.
    pub dt_record: f64,
    pub n_sample: usize,
    pub seed: u64,
    pub stream: u64,
}

/// Sample the stationary charge series of the damped oscillator. The
/// linear SDE is integrated by its exact Gaussian transition kernel
/// (matrix exponential plus the Lyapunov-matched noise covariance), so
/// the recorded series carries the continuous-time statistics with no
/// time-step bias: any deviation seen downstream belongs to the
/// susceptibility estimator, not to the integrator.
pub fn oscillator_charge_series(p: &OscillatorParams) -> Vec<f64> {
    assert!(p.gamma < 2.0 * p.omega0, "underdamped branch only");
    let (m, w0, g, t, dt) = (p.mass, p.omega0, p.gamma, p.temperature, p.dt_record);
    let w1 = (w0 * w0 - 0.25 * g * g).sqrt();
    let decay = (-0.5 * g * dt).exp();
    let (c, s) = ((w1 * dt).cos(), (w1 * dt).sin());
    // e^{A dt} for x = (phi, q)
    let m00 = decay * (c + 0.5 * g / w1 * s);
    let m01 = decay * s / (m * w1);
    let m10 = -decay * m * w0 * w0 / w1 * s;
    let m11 = decay * (c - 0.5 * g / w1 * s);
    // stationary covariance P = diag(T/(m w0^2), m T)
    let p00 = t / (m * w0 * w0);
    let p11 = m * t;
    // transition noise covariance: P - M P M^T
    let s00 = p00 - (m00 * m00 * p00 + m01 * m01 * p11);
    let s01 = -(m00 * m10 * p00 + m01 * m11 * p11);
    let s11 = p11 - (m10 * m10 * p00 + m11 * m11 * p11);
    let l00 = s00.max(0.0).sqrt();
    let l10 = if l00 > 0.0 { s01 / l00 } else { 0.0 };
    let l11 = (s11 - l10 * l10).max(0.0).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    rng.set_stream(p.stream);
    let mut phi = p00.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let mut q = p11.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let mut out = Vec::with_capacity(p.n_sample);
    for _ in 0..p.n_sample {
        let (n1, n2): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        let (phi2, q2) = (
            m00 * phi + m01 * q + l00 * n1,
            m10 * phi + m11 * q + l10 * n1 + l11 * n2,
        );
        phi = phi2;
        q = q2;
        out.push(q);
    }
    out
}

/// Linear-response susceptibility of the damped oscillator,
/// `chi(w) = m w0^2 / (w0^2 - w^2 - i w Gamma)` (unit coupling).
pub fn oscillator_response(omega: f64, p: &OscillatorParams) -> Complex64 {
    let w0sq = p.omega0 * p.omega0;
    Complex64::new(p.mass * w0sq, 0.0)
        / Complex64::new(w0sq - omega * omega, -omega * p.gamma)
}

/// Expectation of the causal-transform estimator on the same system,
/// `m (w0^2 - i w Gamma) / (w0^2 - w^2 - i w Gamma)`; approaches the
/// response as `Gamma/w0 -> 0`.
pub fn oscillator_estimator_expectation(omega: f64, p: &OscillatorParams) -> Complex64 {
    let w0sq = p.omega0 * p.omega0;
    Complex64::new(p.mass * w0sq, -p.mass * omega * p.gamma)
        / Complex64::new(w0sq - omega * omega, -omega * p.gamma)
}

#[derive(Debug, Clone)]
pub struct OscillatorBenchmark {
    pub params: OscillatorParams,
    pub spectrum: Spectrum,
    pub response: Vec<Complex64>,
    pub expectation: Vec<Complex64>,
    /// Max over the near-resonance window of `|chi_est - chi_response|/|chi_response|`.
    pub max_rel_dev_near_resonance: f64,
    /// Window asserted by the acceptance gate, `|w - w0| <= 2 Gamma`.
    pub resonance_window: (f64, f64),
}

/// Run the oscillator benchmark: `n_traj` independent series through the
/// spectral estimator, combined, against the closed forms.
pub fn oscillator_benchmark(
    p: &OscillatorParams,
    n_traj: usize,
    omega_grid: &[f64],
    welch: &WelchParams,
) -> Result<OscillatorBenchmark, ObservablesError> {
    let mut spectra = Vec::with_capacity(n_traj);
    for k in 0..n_traj {
        let series = oscillator_charge_series(&OscillatorParams {
            stream: p.stream + k as u64,
            ..*p
        });
        spectra.push(susceptibility(
            &series,
            p.dt_record,
            p.temperature,
            1.0,
            omega_grid,
            welch,
        )?);
    }
    let spectrum = combine_spectra(&spectra)?;
    let response: Vec<Complex64> = omega_grid
        .iter()
        .map(|&w| oscillator_response(w, p))
        .collect();
    let expectation: Vec<Complex64> = omega_grid
        .iter()
        .map(|&w| oscillator_estimator_expectation(w, p))
        .collect();
    let window = (p.omega0 - 2.0 * p.gamma, p.omega0 + 2.0 * p.gamma);
    let mut max_rel: f64 = 0.0;
    for ((&w, chi), resp) in omega_grid.iter().zip(&spectrum.chi).zip(&response) {
        if w >= window.0 && w <= window.1 {
            max_rel = max_rel.max((chi - resp).norm() / resp.norm());
        }
    }
    Ok(OscillatorBenchmark {
        params: *p,
        spectrum,
        response,
        expectation,
        max_rel_dev_near_resonance: max_rel,
        resonance_window: window,
    })
}

/// One Langevin-vs-Metropolis comparison point.
#[derive(Debug, Clone)]
pub struct GibbsRow {
    pub size: usize,
    pub frustration: f64,
    pub temperature: f64,
    /// (mean, stderr) of the potential energy per bond.
    pub langevin_energy: (f64, f64),
    pub metropolis_energy: (f64, f64),
    /// `|Delta| / sigma_joint` for the energy per bond.
    pub energy_z: f64,
    /// worst `|Delta| / sigma_joint` over C(r), r = 1..=max_r
    pub corr_z_max: f64,
    pub max_r: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct GibbsCheckBudget {
    pub langevin_burn: usize,
    pub langevin_steps: usize,
    pub metropolis_burn: usize,
    pub metropolis_sweeps: usize,
}

impl Default for GibbsCheckBudget {
    fn default() -> Self {
        GibbsCheckBudget {
            langevin_burn: 60_000,
            langevin_steps: 500_000,
            metropolis_burn: 4_000,
            metropolis_sweeps: 60_000,
        }
    }
}

/// Compare energies and short-distance correlations between the two
/// samplers on a periodic toy-capacitance lattice.
pub fn gibbs_comparison(
    size: usize,
    frustration: f64,
    temperature: f64,
    budget: &GibbsCheckBudget,
    seed: u64,
) -> GibbsRow {
    let (table, _) = build_lattice(&LatticeSpec::periodic(size, frustration)).unwrap();
    let cap = assemble(
        &CapacitanceModel::diagonal_from_charging_ratio(2.0),
        &table,
    )
    .unwrap();
    let max_r = 3.min(size / 2);

    let params = SimParams {
        dt: 0.005,
        gamma: 1.0,
        temperature,
        n_burn: budget.langevin_burn,
        n_sample: budget.langevin_steps,
        record_stride: 20,
        snapshot_stride: 400,
        seed,
        stream: 0,
    };
    let mut rng = params.rng();
    let init_phase: Vec<f64> = if temperature < 0.6 {
        ground_state_ansatz(&table, 1).unwrap()
    } else {
        (0..table.n_nodes)
            .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect()
    };
    let init = PhaseState::with_thermal_charges(init_phase, &cap, temperature, &mut rng);
    let rec = run_trajectory(init, &params, &table, &cap).unwrap();
    let (le, ls) = batch_mean_stderr(&rec.potential_per_bond, 16);
    let lcorr = correlation(&rec.snapshots, &table, max_r, Axis::Y).unwrap();

    let metro_init = if temperature < 0.6 {
        Some(ground_state_ansatz(&table, 1).unwrap())
    } else {
        None
    };
    let mrun = metropolis_sample(
        &table,
        temperature,
        budget.metropolis_burn,
        budget.metropolis_sweeps,
        10,
        seed ^ 0x9e3779b97f4a7c15,
        metro_init.as_deref(),
    )
    .unwrap();
    let menergy: Vec<f64> = mrun
        .snapshots
        .iter()
        .map(|p| table.potential_energy(p) / table.bonds.len() as f64)
        .collect();
    let (me, ms) = batch_mean_stderr(&menergy, 16);
    let mcorr = correlation(&mrun.snapshots, &table, max_r, Axis::Y).unwrap();

    let energy_z = (le - me).abs() / ls.hypot(ms).max(1e-12);
    let mut corr_z_max: f64 = 0.0;
    for i in 1..lcorr.r.len() {
        let z = (lcorr.c[i] - mcorr.c[i]).abs() / lcorr.sigma[i].hypot(mcorr.sigma[i]).max(1e-12);
        corr_z_max = corr_z_max.max(z);
    }
    GibbsRow {
        size,
        frustration,
        temperature,
        langevin_energy: (le, ls),
        metropolis_energy: (me, ms),
        energy_z,
        corr_z_max,
        max_r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn oscillator_series_has_equilibrium_variance() {
        let p = OscillatorParams {
            mass: 1.0,
            omega0: 1.0,
            gamma: 0.3,
            temperature: 2.0,
            dt_record: 0.2,
            n_sample: 400_000,
            seed: 1,
            stream: 0,
        };
        let q = oscillator_charge_series(&p);
        let var = q.iter().map(|x| x * x).sum::<f64>() / q.len() as f64;
        // <q^2> = m T exactly, no dt bias
        assert_relative_eq!(var, p.mass * p.temperature, max_relative = 0.02);
    }

    #[test]
    fn closed_forms_agree_at_low_damping() {
        let p = OscillatorParams {
            mass: 2.0,
            omega0: 1.5,
            gamma: 0.003,
            temperature: 1.0,
            dt_record: 0.1,
            n_sample: 0,
            seed: 0,
            stream: 0,
        };
        for w in [1.2, 1.5, 1.8] {
            let a = oscillator_response(w, &p);
            let b = oscillator_estimator_expectation(w, &p);
            assert!((a - b).norm() / a.norm() < 0.005);
        }
        // static limit equals the mass exactly in both
        assert_relative_eq!(oscillator_response(0.0, &p).re, p.mass, epsilon = 1e-12);
        assert_relative_eq!(
            oscillator_estimator_expectation(0.0, &p).re,
            p.mass,
            epsilon = 1e-12
        );
    }
}
