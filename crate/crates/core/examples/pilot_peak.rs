// Scratch pilot: timing + peak location sanity on small pad lattices.
use jja_core::capacitance::{assemble, CapacitanceModel};
use jja_core::dynamics::{run_trajectory, PhaseState, SimParams};
use jja_core::lattice::{build_lattice, ground_state_ansatz, LatticeSpec};
use jja_core::observables::{combine_spectra, peak_temperature, susceptibility, WelchParams};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let l: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(16);
    let f: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.0);
    let n_streams: u64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(4);

    let e_j_ghz = 30.3;
    let omega_c = 10.056 / e_j_ghz;
    let gamma = 4.0 * 13.8 / 30.3;
    let temps: Vec<f64> = if f == 0.0 {
        vec![0.70, 0.78, 0.86, 0.94, 1.02, 1.10]
    } else {
        vec![0.28, 0.34, 0.40, 0.46, 0.52, 0.60]
    };

    let (table, _) = build_lattice(&LatticeSpec::open_with_pads(l, f)).unwrap();
    let cap = assemble(
        &CapacitanceModel::Full {
            c_junction: 0.2745,
            c_ground: 2.7e-4,
            c_shunt: 9.487,
        },
        &table,
    )
    .unwrap();
    println!("L={l} f={f}: {} nodes, {} bonds", table.n_nodes, table.bonds.len());

    let welch = WelchParams { segment_len: 1 << 13, overlap: 0.5, max_lag: 1 << 11 };
    let t0 = Instant::now();

    // one annealed chain per stream, parallel over streams
    let results: Vec<Vec<(f64, f64, f64)>> = (0..n_streams)
        .into_par_iter()
        .map(|stream| {
            let mut points = Vec::new();
            let mut state: Option<PhaseState> = None;
            for (ti, &temp) in temps.iter().enumerate() {
                let params = SimParams {
                    dt: 0.02,
                    gamma,
                    temperature: temp,
                    n_burn: if ti == 0 { 120_000 } else { 40_000 },
                    n_sample: 350_000,
                    record_stride: 4,
                    snapshot_stride: 0,
                    seed: 777,
                    stream: stream * 1000 + ti as u64,
                };
                let mut rng = params.rng();
                let init = match state.take() {
                    Some(s) => s,
                    None => {
                        let phase = if temp < 0.5 {
                            ground_state_ansatz(&table, 1).unwrap()
                        } else {
                            (0..table.n_nodes)
                                .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                                .collect()
                        };
                        PhaseState::with_thermal_charges(phase, &cap, temp, &mut rng)
                    }
                };
                let rec = run_trajectory(init, &params, &table, &cap).unwrap();
                let spec = susceptibility(&rec.q0, rec.dt_record, temp, 1.0, &[omega_c], &welch)
                    .unwrap();
                points.push((temp, spec.chi[0].im, spec.sigma_im[0]));
                state = Some(rec.final_state);
            }
            points
        })
        .collect();

    let wall = t0.elapsed().as_secs_f64();
    let total_steps: f64 = n_streams as f64 * temps.len() as f64 * 4.3e5;
    println!(
        "wall {:.1}s, {:.1} us/step/section ({} chains x {} temps)",
        wall,
        wall * 2.0 / total_steps * 1e6, // 2 cores
        n_streams,
        temps.len()
    );

    for (ti, &temp) in temps.iter().enumerate() {
        let vals: Vec<f64> = results.iter().map(|r| r[ti].1).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let s = (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
            / ((vals.len() - 1).max(1) * vals.len()) as f64)
            .sqrt();
        println!("T={temp:.2}: Im chi(w_c) = {m:.4} +- {s:.4}");
    }
    let combined: Vec<(f64, f64, f64)> = temps
        .iter()
        .enumerate()
        .map(|(ti, &temp)| {
            let vals: Vec<f64> = results.iter().map(|r| r[ti].1).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let s = (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
                / ((vals.len() - 1).max(1) * vals.len()) as f64)
                .sqrt();
            (temp, m, s)
        })
        .collect();
    match peak_temperature(&combined) {
        Ok(p) => println!("peak at T = {:.3} +- {:.3}", p.t_peak, p.sigma),
        Err(e) => println!("no peak: {e}"),
    }
    let _ = combine_spectra(&[]);
}
