//! Thermal Langevin dynamics of the array and the independent Metropolis
//! sampler used to cross-check it.
//!
//! Reduced equations of motion (energies in `E_J`, time in `hbar/E_J`,
//! charge in `2e`):
//!
//! ```text
//! d phi   = C^{-1} q dt
//! d q_i   = sum_bonds torque_i dt - Gamma q_i dt + sqrt(2 Gamma T) (L dW)_i
//! ```
//!
//! with `L L^T = C`, so the stationary distribution of the phases is the
//! Gibbs weight `exp(sum_bonds cos(phi_i - phi_j - A_ij) / T)` independent
//! of `C` and `Gamma`. Euler-Maruyama stepping; one trajectory is strictly
//! sequential, parallelism lives at the trajectory level.

use crate::capacitance::{CapacitanceError, CapacitanceMatrix, NoiseFactor};
use crate::lattice::BondTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct SimParams {
    /// Time step in `hbar/E_J`.
    pub dt: f64,
    /// Damping rate in `E_J/hbar`.
    pub gamma: f64,
    /// Reduced temperature `k_B T / E_J`.
    pub temperature: f64,
    /// Steps discarded before recording.
    pub n_burn: usize,
    /// Recorded steps.
    pub n_sample: usize,
    /// Record the probe charge and energies every this many steps.
    pub record_stride: usize,
    /// Keep a full phase snapshot every this many steps (0 = never).
    pub snapshot_stride: usize,
    /// RNG seed; `stream` selects an independent substream.
    pub seed: u64,
    pub stream: u64,
}

impl SimParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt > 0.0) {
            return Err(DynamicsError::BadParam("dt must be positive"));
        }
        if self.gamma < 0.0 {
            return Err(DynamicsError::BadParam("gamma must be non-negative"));
        }
        if !(self.temperature > 0.0) {
            return Err(DynamicsError::BadParam("temperature must be positive"));
        }
        if self.n_burn == 0 || self.n_sample == 0 {
            return Err(DynamicsError::BadParam(
                "n_burn and n_sample must be positive",
            ));
        }
        if self.record_stride == 0 {
            return Err(DynamicsError::BadParam("record_stride must be positive"));
        }
        Ok(())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid simulation parameter: {0}")]
    BadParam(&'static str),
    #[error("state dimension {got} does not match lattice ({expected} nodes)")]
    Dimension { expected: usize, got: usize },
    #[error("state diverged (NaN/overflow) at t = {time}; dt is likely too large")]
    Diverged { time: f64 },
    #[error(transparent)]
    Capacitance(#[from] CapacitanceError),
}

/// Phases and conjugate charges at one instant. Phases are kept unwrapped;
/// every force depends only on differences through sin/cos.
#[derive(Debug, Clone)]
pub struct PhaseState {
    pub phase: Vec<f64>,
    pub charge: Vec<f64>,
    pub time: f64,
}

impl PhaseState {
    pub fn new(phase: Vec<f64>, charge: Vec<f64>) -> Self {
        assert_eq!(phase.len(), charge.len());
        PhaseState {
            phase,
            charge,
            time: 0.0,
        }
    }

    pub fn at_rest(phase: Vec<f64>) -> Self {
        let n = phase.len();
        PhaseState::new(phase, vec![0.0; n])
    }

    /// Charges drawn from the equilibrium kinetic distribution
    /// `P(q) ~ exp(-q C^{-1} q / 2T)`, shortening burn-in.
    pub fn with_thermal_charges(
        phase: Vec<f64>,
        cap: &CapacitanceMatrix,
        temperature: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let n = phase.len();
        // covariance T*C = (2 Gamma T C) with 2 Gamma = 1
        let nf = cap.noise_factor(0.5, temperature);
        let xi: Vec<f64> = (0..nf.noise_dim())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let mut q = vec![0.0; n];
        nf.apply(&xi, &mut q);
        PhaseState::new(phase, q)
    }
}

/// Euler-Maruyama stepper in the kick-then-drift (semi-implicit)
/// ordering: the charge update uses the current phases, the phase update
/// uses the just-kicked charges. Plain simultaneous-update stepping
/// carries an invariant-measure bias of a couple percent at usable time
/// steps on stiff lattices; the semi-implicit ordering removes it at the
/// same cost (the post-kick solve doubles as the next step's velocity).
pub struct Stepper<'a> {
    table: &'a BondTable,
    noise: NoiseFactor<'a>,
    cap: &'a CapacitanceMatrix,
    dt: f64,
    gamma: f64,
    rng: ChaCha8Rng,
    /// `C^{-1} q` of the *current* state; maintained across steps.
    velocity: Vec<f64>,
    velocity_fresh: bool,
    force: Vec<f64>,
    xi: Vec<f64>,
    kick: Vec<f64>,
    sqrt_dt: f64,
    steps_since_check: usize,
}

impl<'a> Stepper<'a> {
    pub fn new(
        table: &'a BondTable,
        cap: &'a CapacitanceMatrix,
        params: &SimParams,
    ) -> Result<Self, DynamicsError> {
        params.validate()?;
        if cap.n() != table.n_nodes {
            return Err(DynamicsError::Dimension {
                expected: table.n_nodes,
                got: cap.n(),
            });
        }
        let n = table.n_nodes;
        Ok(Stepper {
            table,
            noise: cap.noise_factor(params.gamma, params.temperature),
            cap,
            dt: params.dt,
            gamma: params.gamma,
            rng: params.rng(),
            velocity: vec![0.0; n],
            velocity_fresh: false,
            force: vec![0.0; n],
            xi: vec![0.0; cap.noise_dim()],
            kick: vec![0.0; n],
            sqrt_dt: params.dt.sqrt(),
            steps_since_check: 0,
        })
    }

    #[inline]
    fn torque(&mut self, phases: &[f64]) {
        self.force.fill(0.0);
        for b in &self.table.bonds {
            let s = (phases[b.from] - phases[b.to] - b.gauge_phase).sin();
            self.force[b.from] -= s;
            self.force[b.to] += s;
        }
    }

    /// Advance one step; when `energy` is requested, also returns the
    /// potential energy per bond and charging energy at the *pre-step*
    /// state (they reuse the force/velocity pass).
    fn advance(
        &mut self,
        state: &mut PhaseState,
        want_energy: bool,
    ) -> Result<Option<(f64, f64)>, DynamicsError> {
        let n = self.table.n_nodes;
        debug_assert_eq!(state.phase.len(), n);
        if !self.velocity_fresh {
            self.cap.solve_into(&state.charge, &mut self.velocity)?;
            self.velocity_fresh = true;
        }

        let energies = if want_energy {
            let kinetic = 0.5
                * state
                    .charge
                    .iter()
                    .zip(&self.velocity)
                    .map(|(q, v)| q * v)
                    .sum::<f64>();
            let potential = self.table.potential_energy(&state.phase);
            Some((potential / self.table.bonds.len() as f64, kinetic))
        } else {
            None
        };

        self.torque(&state.phase);
        let has_noise = self.gamma > 0.0;
        if has_noise {
            for x in self.xi.iter_mut() {
                *x = self.rng.sample(StandardNormal);
            }
            self.noise.apply(&self.xi, &mut self.kick);
        }
        let (dt, g) = (self.dt, self.gamma);
        for i in 0..n {
            state.charge[i] += (self.force[i] - g * state.charge[i]) * dt;
            if has_noise {
                state.charge[i] += self.kick[i] * self.sqrt_dt;
            }
        }
        self.cap.solve_into(&state.charge, &mut self.velocity)?;
        for i in 0..n {
            state.phase[i] += self.velocity[i] * dt;
        }
        state.time += dt;

        self.steps_since_check += 1;
        if self.steps_since_check >= 128 {
            self.steps_since_check = 0;
            let probe: f64 = state.charge.iter().sum::<f64>() + state.phase.iter().sum::<f64>();
            if !probe.is_finite() {
                return Err(DynamicsError::Diverged { time: state.time });
            }
        }
        Ok(energies)
    }

    pub fn step(&mut self, state: &mut PhaseState) -> Result<(), DynamicsError> {
        self.advance(state, false).map(|_| ())
    }

    pub fn step_with_energy(&mut self, state: &mut PhaseState) -> Result<(f64, f64), DynamicsError> {
        Ok(self.advance(state, true)?.unwrap())
    }
}

/// Time series recorded from one trajectory after burn-in.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub params: SimParams,
    pub lattice_fingerprint: u64,
    /// Charge at the probe node (top pad when present), every
    /// `record_stride` steps.
    pub q0: Vec<f64>,
    /// Potential energy per bond at the same instants.
    pub potential_per_bond: Vec<f64>,
    /// Total charging energy at the same instants.
    pub kinetic: Vec<f64>,
    /// Sparse full-phase snapshots (every `snapshot_stride` steps).
    pub snapshots: Vec<Vec<f64>>,
    /// Time between recorded samples.
    pub dt_record: f64,
    /// Set when the burn-in energy had not plateaued.
    pub burn_in_warning: bool,
    pub final_state: PhaseState,
}

impl TrajectoryRecord {
    /// CSV with `# key=value` provenance header lines.
    pub fn to_csv(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        s.push_str(&format!(
            "# lattice_fingerprint={:016x}\n# dt={:e} gamma={:e} temperature={:e}\n\
             # n_burn={} n_sample={} record_stride={} snapshot_stride={}\n\
             # seed={} stream={} dt_record={:e}\n",
            self.lattice_fingerprint,
            p.dt,
            p.gamma,
            p.temperature,
            p.n_burn,
            p.n_sample,
            p.record_stride,
            p.snapshot_stride,
            p.seed,
            p.stream,
            self.dt_record,
        ));
        s.push_str("t,q0,potential_per_bond,kinetic\n");
        for (k, ((q, u), e)) in self
            .q0
            .iter()
            .zip(&self.potential_per_bond)
            .zip(&self.kinetic)
            .enumerate()
        {
            s.push_str(&format!(
                "{:.9e},{:.17e},{:.17e},{:.17e}\n",
                k as f64 * self.dt_record,
                q,
                u,
                e
            ));
        }
        s
    }
}

/// Integrate a trajectory: burn in, then record. Bit-reproducible for a
/// fixed `(seed, stream, params, lattice)`.
pub fn run_trajectory(
    init: PhaseState,
    params: &SimParams,
    table: &BondTable,
    cap: &CapacitanceMatrix,
) -> Result<TrajectoryRecord, DynamicsError> {
    params.validate()?;
    if init.phase.len() != table.n_nodes {
        return Err(DynamicsError::Dimension {
            expected: table.n_nodes,
            got: init.phase.len(),
        });
    }
    let mut stepper = Stepper::new(table, cap, params)?;
    let mut state = init;

    // Burn-in with a coarse energy trace for the plateau check.
    let burn_stride = (params.record_stride * 8).max(1);
    let mut burn_energy = Vec::with_capacity(params.n_burn / burn_stride + 1);
    for k in 0..params.n_burn {
        if k % burn_stride == 0 {
            let (u, _) = stepper.step_with_energy(&mut state)?;
            burn_energy.push(u);
        } else {
            stepper.step(&mut state)?;
        }
    }
    let burn_in_warning = !burn_energy_plateaued(&burn_energy);

    let n_rec = params.n_sample / params.record_stride;
    let mut q0 = Vec::with_capacity(n_rec);
    let mut potential = Vec::with_capacity(n_rec);
    let mut kinetic = Vec::with_capacity(n_rec);
    let mut snapshots = Vec::new();
    let probe = table.probe_node();

    for k in 0..params.n_sample {
        if k % params.record_stride == 0 {
            let (u, e) = stepper.step_with_energy(&mut state)?;
            q0.push(state.charge[probe]);
            potential.push(u);
            kinetic.push(e);
        } else {
            stepper.step(&mut state)?;
        }
        if params.snapshot_stride > 0 && (k + 1) % params.snapshot_stride == 0 {
            snapshots.push(state.phase.clone());
        }
    }
    let total: f64 = state.charge.iter().sum::<f64>() + state.phase.iter().sum::<f64>();
    if !total.is_finite() {
        return Err(DynamicsError::Diverged { time: state.time });
    }

    Ok(TrajectoryRecord {
        params: params.clone(),
        lattice_fingerprint: table.fingerprint(),
        q0,
        potential_per_bond: potential,
        kinetic,
        snapshots,
        dt_record: params.dt * params.record_stride as f64,
        burn_in_warning,
        final_state: state,
    })
}

/// Plateau heuristic on the burn-in energy trace: the last two quarters
/// must agree within their combined scatter.
fn burn_energy_plateaued(trace: &[f64]) -> bool {
    if trace.len() < 16 {
        return true; // too short to judge
    }
    let q = trace.len() / 4;
    let q3 = &trace[2 * q..3 * q];
    let q4 = &trace[3 * q..];
    let stats = |s: &[f64]| {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        let var = s.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (s.len() - 1).max(1) as f64;
        // correlated samples: damp the nominal 1/sqrt(n)
        (m, (var / (s.len() as f64 / 4.0).max(1.0)).sqrt())
    };
    let (m3, s3) = stats(q3);
    let (m4, s4) = stats(q4);
    (m4 - m3).abs() <= 5.0 * s3.hypot(s4).max(1e-12)
}

/// Acceptance statistics and samples from the Metropolis oracle.
pub struct MetropolisRun {
    /// Phase snapshots, one every `sample_every` sweeps after burn-in.
    pub snapshots: Vec<Vec<f64>>,
    pub acceptance_rate: f64,
}

/// Single-site Metropolis sampler of the Gibbs distribution of the
/// potential term, with uniform full-circle angle proposals. Independent
/// of the Langevin path by construction; the equilibrium cross-checks
/// compare the two.
pub fn metropolis_sample(
    table: &BondTable,
    temperature: f64,
    burn_sweeps: usize,
    n_sweeps: usize,
    sample_every: usize,
    seed: u64,
    init: Option<&[f64]>,
) -> Result<MetropolisRun, DynamicsError> {
    if !(temperature > 0.0) {
        return Err(DynamicsError::BadParam("temperature must be positive"));
    }
    if sample_every == 0 {
        return Err(DynamicsError::BadParam("sample_every must be positive"));
    }
    let n = table.n_nodes;
    if let Some(p) = init {
        if p.len() != n {
            return Err(DynamicsError::Dimension {
                expected: n,
                got: p.len(),
            });
        }
    }

    // adjacency: (neighbor, effective gauge phase) so the local energy is
    // -sum cos(phi_i - phi_nb - a_eff)
    let mut adjacency: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for b in &table.bonds {
        adjacency[b.from].push((b.to as u32, b.gauge_phase));
        adjacency[b.to].push((b.from as u32, -b.gauge_phase));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x4d43); // separate stream family from the Langevin side
    let mut phase: Vec<f64> = match init {
        Some(p) => p.to_vec(),
        None => (0..n)
            .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect(),
    };

    let local_energy = |phase: &[f64], i: usize, value: f64| -> f64 {
        -adjacency[i]
            .iter()
            .map(|&(j, a)| (value - phase[j as usize] - a).cos())
            .sum::<f64>()
    };

    let mut snapshots = Vec::new();
    let mut accepted = 0usize;
    let mut proposed = 0usize;
    let beta = 1.0 / temperature;
    for sweep in 0..(burn_sweeps + n_sweeps) {
        for i in 0..n {
            let old = phase[i];
            let new = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let de = local_energy(&phase, i, new) - local_energy(&phase, i, old);
            proposed += 1;
            if de <= 0.0 || rng.gen::<f64>() < (-beta * de).exp() {
                phase[i] = new;
                accepted += 1;
            }
        }
        if sweep >= burn_sweeps && (sweep - burn_sweeps + 1) % sample_every == 0 {
            snapshots.push(phase.clone());
        }
    }
    Ok(MetropolisRun {
        snapshots,
        acceptance_rate: accepted as f64 / proposed.max(1) as f64,
    })
}

/// Mean and standard error via batch means (guards against correlated
/// series).
pub fn batch_mean_stderr(series: &[f64], n_batches: usize) -> (f64, f64) {
    let n = series.len();
    let nb = n_batches.clamp(2, n.max(2));
    let bs = (n / nb).max(1);
    let mut means = Vec::with_capacity(nb);
    for b in 0..nb {
        let lo = b * bs;
        let hi = if b == nb - 1 { n } else { (b + 1) * bs };
        if lo >= hi {
            break;
        }
        means.push(series[lo..hi].iter().sum::<f64>() / (hi - lo) as f64);
    }
    let m = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
        / (means.len() - 1).max(1) as f64;
    (m, (var / means.len() as f64).sqrt())
}
