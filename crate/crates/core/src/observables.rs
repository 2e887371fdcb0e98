//! Equilibrium and dynamical observables: spatial spin correlations and
//! their power-law exponent, plaquette chirality, and the dynamical
//! susceptibility extracted from the probe-charge time series.
//!
//! The susceptibility is the causal linear-response transform of the
//! charge autocorrelation,
//!
//! ```text
//! chi(w)/2e = g_r / T * [ <q0^2> + i w Int_0^inf dt e^{iwt} <q0(t) q0(0)> ]
//! ```
//!
//! (`g_r` the reduced coupling, charge in `2e`), so `Im chi(w) =
//! g_r w S(w) / 2T >= 0` on the physical branch. The primary estimator is
//! spectral: Welch-averaged periodograms, inverse-transformed to the lag
//! domain with the window's lag bias divided out, then integrated against
//! `e^{iwt}` on the requested frequency grid. A direct time-domain
//! autocorrelation estimator provides the cross-check.

use crate::dynamics::batch_mean_stderr;
use crate::lattice::{BondTable, Boundary};
use num_complex::Complex64;
use rustfft::{num_complex::Complex, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObservablesError {
    #[error("not enough samples: {0}")]
    NotEnoughData(&'static str),
    #[error("max_r = {max_r} exceeds the usable range {limit} for this lattice")]
    BadRange { max_r: usize, limit: usize },
    #[error("correlation is non-positive over the whole fit range")]
    NonPositiveCorrelation,
    #[error(
        "q0 series fails the stationarity check (split-half means {m1:.3e} vs {m2:.3e}, \
         variances {v1:.3e} vs {v2:.3e}); extend burn-in"
    )]
    NonStationary { m1: f64, m2: f64, v1: f64, v2: f64 },
    #[error("series of {n} samples is too short for segments of {segment}")]
    SeriesTooShort { n: usize, segment: usize },
    #[error("no interior maximum in the temperature series")]
    NoPeak,
}

/// Direction of the site displacement used in the correlation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone)]
pub struct CorrelationData {
    pub r: Vec<usize>,
    pub c: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Set when fewer than 32 samples entered the averages.
    pub low_statistics: bool,
}

/// `C(r) = <cos(phi_0 - phi_r)>` along `axis`, averaged over samples and
/// over translationally equivalent origins. On a pad lattice the origins
/// and endpoints are restricted to the central half of the array.
pub fn correlation(
    samples: &[Vec<f64>],
    table: &BondTable,
    max_r: usize,
    axis: Axis,
) -> Result<CorrelationData, ObservablesError> {
    if samples.is_empty() {
        return Err(ObservablesError::NotEnoughData("no samples"));
    }
    let spec = &table.spec;
    // (origin, displaced) node index pairs per distance
    let mut pairs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); max_r + 1];
    match spec.boundary {
        Boundary::Periodic => {
            let limit = spec.lx.min(spec.ly) / 2;
            if max_r > limit {
                return Err(ObservablesError::BadRange { max_r, limit });
            }
            for y in 0..spec.ly {
                for x in 0..spec.lx {
                    let o = table.node_at(x, y);
                    for (r, pr) in pairs.iter_mut().enumerate() {
                        let d = match axis {
                            Axis::X => table.node_at(x + r, y),
                            Axis::Y => table.node_at(x, y + r),
                        };
                        pr.push((o, d));
                    }
                }
            }
        }
        Boundary::OpenWithPads => {
            // central half: x in [lx/4, 3lx/4], y in [max(1, ly/4), min(ly-1, 3ly/4)]
            let (x_lo, x_hi) = (spec.lx / 4, 3 * spec.lx / 4);
            let (y_lo, y_hi) = ((spec.ly / 4).max(1), (3 * spec.ly / 4).min(spec.ly - 1));
            let limit = match axis {
                Axis::X => x_hi.saturating_sub(x_lo),
                Axis::Y => y_hi.saturating_sub(y_lo),
            };
            if max_r > limit || limit == 0 {
                return Err(ObservablesError::BadRange { max_r, limit });
            }
            for y in y_lo..=y_hi {
                for x in x_lo..=x_hi {
                    let o = table.node_at(x, y);
                    for r in 0..=max_r {
                        let ok = match axis {
                            Axis::X => x + r <= x_hi,
                            Axis::Y => y + r <= y_hi,
                        };
                        if ok {
                            let d = match axis {
                                Axis::X => table.node_at(x + r, y),
                                Axis::Y => table.node_at(x, y + r),
                            };
                            pairs[r].push((o, d));
                        }
                    }
                }
            }
        }
    }

    let mut r_out = Vec::with_capacity(max_r + 1);
    let mut c_out = Vec::with_capacity(max_r + 1);
    let mut s_out = Vec::with_capacity(max_r + 1);
    for (r, pr) in pairs.iter().enumerate() {
        if r == 0 {
            r_out.push(0);
            c_out.push(1.0);
            s_out.push(0.0);
            continue;
        }
        if pr.is_empty() {
            continue;
        }
        let per_sample: Vec<f64> = samples
            .iter()
            .map(|phi| {
                pr.iter()
                    .map(|&(a, b)| (phi[a] - phi[b]).cos())
                    .sum::<f64>()
                    / pr.len() as f64
            })
            .collect();
        let (m, s) = batch_mean_stderr(&per_sample, 16);
        r_out.push(r);
        c_out.push(m);
        s_out.push(s);
    }
    Ok(CorrelationData {
        r: r_out,
        c: c_out,
        sigma: s_out,
        low_statistics: samples.len() < 32,
    })
}

#[derive(Debug, Clone)]
pub struct ExponentFit {
    pub eta: f64,
    pub stderr: f64,
    pub range: (usize, usize),
    /// Set when non-positive C(r) forced a shorter fit window.
    pub restricted: bool,
}

/// Least-squares slope of `log C` vs `log r` over `[r_lo, r_hi]`;
/// `eta = -slope`. Non-positive values truncate the window (flagged).
pub fn fit_eta(
    corr: &CorrelationData,
    range: (usize, usize),
) -> Result<ExponentFit, ObservablesError> {
    let (r_lo, r_hi) = range;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut restricted = false;
    let mut hi_used = r_lo;
    for (idx, &r) in corr.r.iter().enumerate() {
        if r < r_lo.max(1) || r > r_hi {
            continue;
        }
        if corr.c[idx] <= 0.0 {
            restricted = true;
            break;
        }
        xs.push((r as f64).ln());
        ys.push(corr.c[idx].ln());
        hi_used = r;
    }
    if xs.len() < 2 {
        return Err(ObservablesError::NonPositiveCorrelation);
    }
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let stderr = if xs.len() > 2 {
        let ss_res: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let pred = ym + slope * (x - xm);
                (y - pred) * (y - pred)
            })
            .sum();
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(ExponentFit {
        eta: -slope,
        stderr,
        range: (r_lo, hi_used),
        restricted,
    })
}

/// Spin-wave prediction `eta = T / (2 pi)` (reduced temperature), valid
/// deep below the transition.
pub fn eta_spin_wave(reduced_temperature: f64) -> f64 {
    reduced_temperature / std::f64::consts::TAU
}

#[derive(Debug, Clone)]
pub struct WelchParams {
    /// Samples per segment.
    pub segment_len: usize,
    /// Fractional segment overlap.
    pub overlap: f64,
    /// Number of lags kept in the one-sided transform.
    pub max_lag: usize,
}

impl Default for WelchParams {
    fn default() -> Self {
        WelchParams {
            segment_len: 1 << 14,
            overlap: 0.5,
            max_lag: 1 << 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Angular frequency grid, `E_J/hbar` units.
    pub omega: Vec<f64>,
    /// `chi(w)/2e`, dimensionless in reduced units.
    pub chi: Vec<Complex64>,
    pub sigma_re: Vec<f64>,
    pub sigma_im: Vec<f64>,
    pub temperature: f64,
    /// Reduced coupling `hbar g / E_J` folded into the prefactor.
    pub coupling: f64,
}

fn hann(m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| {
            let x = std::f64::consts::TAU * k as f64 / m as f64;
            0.5 * (1.0 - x.cos())
        })
        .collect()
}

/// Lag-domain bias of a windowed periodogram: `rho(l) = sum_k w_k w_{k+l} / sum_k w_k^2`.
fn window_lag_bias(window: &[f64], max_lag: usize) -> Vec<f64> {
    let norm: f64 = window.iter().map(|w| w * w).sum();
    (0..=max_lag)
        .map(|l| {
            window[..window.len() - l]
                .iter()
                .zip(&window[l..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / norm
        })
        .collect()
}

fn check_stationary(series: &[f64]) -> Result<(), ObservablesError> {
    let n = series.len();
    let (a, b) = series.split_at(n / 2);
    let (m1, s1) = batch_mean_stderr(a, 8);
    let (m2, s2) = batch_mean_stderr(b, 8);
    let var = |s: &[f64], m: f64| s.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / s.len() as f64;
    let (v1, v2) = (var(a, m1), var(b, m2));
    let mean_ok = (m1 - m2).abs() <= 6.0 * s1.hypot(s2).max(1e-300);
    let ratio = v1.max(v2) / v1.min(v2).max(1e-300);
    if !mean_ok || ratio > 3.0 {
        return Err(ObservablesError::NonStationary { m1, m2, v1, v2 });
    }
    Ok(())
}

/// Lag-domain autocorrelation estimates `g(l dt)` for `l = 0..=max_lag`,
/// one per Welch segment (Hann window, bias divided out).
fn welch_autocorrelations(
    series: &[f64],
    welch: &WelchParams,
) -> Result<Vec<Vec<f64>>, ObservablesError> {
    let m = welch.segment_len;
    let n = series.len();
    if n < m {
        return Err(ObservablesError::SeriesTooShort { n, segment: m });
    }
    assert!(welch.max_lag < m, "max_lag must be below segment_len");
    let step = ((m as f64) * (1.0 - welch.overlap)).max(1.0) as usize;
    let mean = series.iter().sum::<f64>() / n as f64;
    let window = hann(m);
    let bias = window_lag_bias(&window, welch.max_lag);

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    let ifft = planner.plan_fft_inverse(m);

    let mut out = Vec::new();
    let mut buf = vec![Complex::new(0.0, 0.0); m];
    let mut start = 0;
    while start + m <= n {
        for (k, b) in buf.iter_mut().enumerate() {
            *b = Complex::new((series[start + k] - mean) * window[k], 0.0);
        }
        fft.process(&mut buf);
        for b in buf.iter_mut() {
            *b = Complex::new(b.norm_sqr(), 0.0);
        }
        ifft.process(&mut buf);
        // ifft(|X|^2)[l] / m = circular autocorrelation of the windowed
        // segment; dividing by sum w^2 and the lag bias gives g(l)
        let norm: f64 = window.iter().map(|w| w * w).sum();
        let g: Vec<f64> = (0..=welch.max_lag)
            .map(|l| buf[l].re / (m as f64) / norm / bias[l] * bias[0])
            .collect();
        out.push(g);
        start += step;
    }
    if out.is_empty() {
        return Err(ObservablesError::SeriesTooShort { n, segment: m });
    }
    Ok(out)
}

/// One-sided transform `g(0) + i w Int_0^tmax g(t) e^{iwt} dt` by
/// trapezoidal quadrature on the lag grid.
fn causal_transform(g: &[f64], dt: f64, omega: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (l, &gl) in g.iter().enumerate() {
        let w = if l == 0 || l == g.len() - 1 { 0.5 } else { 1.0 };
        let ph = omega * dt * l as f64;
        acc += Complex64::new(ph.cos(), ph.sin()) * (gl * w);
    }
    Complex64::new(g[0], 0.0) + Complex64::new(0.0, omega) * acc * dt
}

fn spectrum_from_autocorrs(
    autocorrs: &[Vec<f64>],
    dt_record: f64,
    temperature: f64,
    coupling: f64,
    omega_grid: &[f64],
) -> Spectrum {
    let n_seg = autocorrs.len();
    let mut chi = Vec::with_capacity(omega_grid.len());
    let mut sig_re = Vec::with_capacity(omega_grid.len());
    let mut sig_im = Vec::with_capacity(omega_grid.len());
    let pref = coupling / temperature;
    for &w in omega_grid {
        let vals: Vec<Complex64> = autocorrs
            .iter()
            .map(|g| causal_transform(g, dt_record, w) * pref)
            .collect();
        let mean = vals.iter().sum::<Complex64>() / n_seg as f64;
        let (mut vre, mut vim) = (0.0, 0.0);
        for v in &vals {
            vre += (v.re - mean.re).powi(2);
            vim += (v.im - mean.im).powi(2);
        }
        let denom = (n_seg.max(2) - 1) as f64 * n_seg as f64;
        // overlapping segments are weakly correlated; sqrt(2) headroom
        let infl = 2.0f64.sqrt();
        chi.push(mean);
        sig_re.push(infl * (vre / denom).sqrt());
        sig_im.push(infl * (vim / denom).sqrt());
    }
    Spectrum {
        omega: omega_grid.to_vec(),
        chi,
        sigma_re: sig_re,
        sigma_im: sig_im,
        temperature,
        coupling,
    }
}

/// Spectral (Welch) susceptibility estimator; the primary route.
pub fn susceptibility(
    q0: &[f64],
    dt_record: f64,
    temperature: f64,
    coupling: f64,
    omega_grid: &[f64],
    welch: &WelchParams,
) -> Result<Spectrum, ObservablesError> {
    check_stationary(q0)?;
    let autocorrs = welch_autocorrelations(q0, welch)?;
    Ok(spectrum_from_autocorrs(
        &autocorrs, dt_record, temperature, coupling, omega_grid,
    ))
}

/// Direct time-domain autocorrelation estimator; the cross-check route.
/// O(n max_lag), so meant for benchmarks rather than production sweeps.
pub fn susceptibility_direct(
    q0: &[f64],
    dt_record: f64,
    temperature: f64,
    coupling: f64,
    omega_grid: &[f64],
    max_lag: usize,
) -> Result<Spectrum, ObservablesError> {
    check_stationary(q0)?;
    let n = q0.len();
    if n < 4 * max_lag {
        return Err(ObservablesError::SeriesTooShort {
            n,
            segment: 4 * max_lag,
        });
    }
    let mean = q0.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = q0.iter().map(|v| v - mean).collect();
    // four disjoint blocks give scatter-based errors
    let n_blocks = 4;
    let block = n / n_blocks;
    let mut autocorrs = Vec::with_capacity(n_blocks);
    for b in 0..n_blocks {
        let seg = &x[b * block..(b + 1) * block];
        let g: Vec<f64> = (0..=max_lag)
            .map(|l| {
                seg[..seg.len() - l]
                    .iter()
                    .zip(&seg[l..])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / (seg.len() - l) as f64
            })
            .collect();
        autocorrs.push(g);
    }
    Ok(spectrum_from_autocorrs(
        &autocorrs, dt_record, temperature, coupling, omega_grid,
    ))
}

/// Average spectra from independent trajectories; errors from the
/// trajectory-to-trajectory scatter.
pub fn combine_spectra(spectra: &[Spectrum]) -> Result<Spectrum, ObservablesError> {
    let Some(first) = spectra.first() else {
        return Err(ObservablesError::NotEnoughData("no spectra"));
    };
    let k = spectra.len();
    let ng = first.omega.len();
    let mut chi = vec![Complex64::new(0.0, 0.0); ng];
    for s in spectra {
        assert_eq!(s.omega, first.omega, "incompatible frequency grids");
        for (acc, v) in chi.iter_mut().zip(&s.chi) {
            *acc += v;
        }
    }
    for v in chi.iter_mut() {
        *v /= k as f64;
    }
    let mut sig_re = vec![0.0; ng];
    let mut sig_im = vec![0.0; ng];
    if k > 1 {
        for s in spectra {
            for i in 0..ng {
                sig_re[i] += (s.chi[i].re - chi[i].re).powi(2);
                sig_im[i] += (s.chi[i].im - chi[i].im).powi(2);
            }
        }
        for i in 0..ng {
            sig_re[i] = (sig_re[i] / ((k - 1) as f64 * k as f64)).sqrt();
            sig_im[i] = (sig_im[i] / ((k - 1) as f64 * k as f64)).sqrt();
        }
    } else {
        sig_re.copy_from_slice(&first.sigma_re);
        sig_im.copy_from_slice(&first.sigma_im);
    }
    Ok(Spectrum {
        omega: first.omega.clone(),
        chi,
        sigma_re: sig_re,
        sigma_im: sig_im,
        temperature: first.temperature,
        coupling: first.coupling,
    })
}

#[derive(Debug, Clone)]
pub struct PeakFit {
    pub t_peak: f64,
    pub sigma: f64,
    /// Points used by the quadratic fit.
    pub window: (f64, f64),
}

/// Locate the maximum of `Im chi(w_c)` vs temperature by a weighted
/// quadratic fit around the largest point.
pub fn peak_temperature(points: &[(f64, f64, f64)]) -> Result<PeakFit, ObservablesError> {
    if points.len() < 5 {
        return Err(ObservablesError::NotEnoughData(
            "need at least 5 temperature points",
        ));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let imax = pts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .unwrap()
        .0;
    if imax == 0 || imax == pts.len() - 1 {
        return Err(ObservablesError::NoPeak);
    }
    // fit window: everything above 70% of the maximum, at least 5 points
    let peak = pts[imax].1;
    let mut lo = imax;
    let mut hi = imax;
    while lo > 0 && pts[lo - 1].1 >= 0.7 * peak {
        lo -= 1;
    }
    while hi + 1 < pts.len() && pts[hi + 1].1 >= 0.7 * peak {
        hi += 1;
    }
    while hi - lo + 1 < 5 {
        if lo > 0 {
            lo -= 1;
        }
        if hi + 1 < pts.len() {
            hi += 1;
        }
        if lo == 0 && hi == pts.len() - 1 {
            break;
        }
    }
    let win = &pts[lo..=hi];

    // weighted least squares y = a + b t + c t^2, centered for conditioning
    let t0 = win.iter().map(|p| p.0).sum::<f64>() / win.len() as f64;
    let mut ata = [0.0; 9];
    let mut atb = [0.0; 3];
    for &(t, y, s) in win {
        let w = if s > 0.0 { 1.0 / (s * s) } else { 1.0 };
        let x = t - t0;
        let basis = [1.0, x, x * x];
        for i in 0..3 {
            for j in 0..3 {
                ata[i * 3 + j] += w * basis[i] * basis[j];
            }
            atb[i] += w * basis[i] * y;
        }
    }
    let coeff =
        crate::linalg::solve_small(&ata, &atb, 3).ok_or(ObservablesError::NoPeak)?;
    let (b, c) = (coeff[1], coeff[2]);
    if c >= 0.0 {
        return Err(ObservablesError::NoPeak);
    }
    let t_peak = t0 - b / (2.0 * c);

    // 1-sigma via the parameter covariance (A^T W A)^{-1}
    let cov_bb = invert_entry(&ata, 1, 1);
    let cov_cc = invert_entry(&ata, 2, 2);
    let cov_bc = invert_entry(&ata, 1, 2);
    let db = -1.0 / (2.0 * c);
    let dc = b / (2.0 * c * c);
    let var = db * db * cov_bb + dc * dc * cov_cc + 2.0 * db * dc * cov_bc;
    // if inputs carried no error bars, scale by the residual variance
    let sigma = var.max(0.0).sqrt();
    Ok(PeakFit {
        t_peak,
        sigma,
        window: (win[0].0, win[win.len() - 1].0),
    })
}

fn invert_entry(a: &[f64; 9], i: usize, j: usize) -> f64 {
    // inverse of a symmetric 3x3 via cofactors
    let det = a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
        + a[2] * (a[3] * a[7] - a[4] * a[6]);
    if det.abs() < 1e-300 {
        return 0.0;
    }
    let cof = |r: usize, c: usize| -> f64 {
        let m: Vec<f64> = (0..3)
            .flat_map(|ri| (0..3).map(move |ci| (ri, ci)))
            .filter(|&(ri, ci)| ri != r && ci != c)
            .map(|(ri, ci)| a[ri * 3 + ci])
            .collect();
        let minor = m[0] * m[3] - m[1] * m[2];
        if (r + c) % 2 == 0 {
            minor
        } else {
            -minor
        }
    };
    cof(j, i) / det
}

#[derive(Debug, Clone)]
pub struct ChiralityMap {
    /// Normalized circulation per plaquette, ground state = +-1.
    pub kappa: Vec<f64>,
    /// Coordinates matching `kappa`.
    pub plaquette_xy: Vec<(usize, usize)>,
    /// Staggered order parameter `< (-1)^{x+y} kappa >`.
    pub staggered: f64,
}

/// Plaquette chirality: directed sum of `sin(phi_i - phi_j - A_ij)`
/// counter-clockwise, normalized so the half-flux ground state gives
/// `|kappa| = 1` (four bonds at `pi/4` each: norm `2 sqrt 2`).
pub fn chirality(phases: &[f64], table: &BondTable) -> ChiralityMap {
    let norm = 2.0 * std::f64::consts::SQRT_2;
    let mut kappa = Vec::with_capacity(table.plaquettes.len());
    let mut xy = Vec::with_capacity(table.plaquettes.len());
    let mut staggered = 0.0;
    for p in &table.plaquettes {
        let circ: f64 = p
            .bonds
            .iter()
            .map(|&(b, rev)| {
                let bond = &table.bonds[b];
                let theta = phases[bond.from] - phases[bond.to] - bond.gauge_phase;
                if rev {
                    -theta.sin()
                } else {
                    theta.sin()
                }
            })
            .sum();
        let k = circ / norm;
        staggered += if (p.x + p.y) % 2 == 0 { k } else { -k };
        kappa.push(k);
        xy.push((p.x, p.y));
    }
    ChiralityMap {
        staggered: staggered / table.plaquettes.len() as f64,
        kappa,
        plaquette_xy: xy,
    }
}

/// Staggered chirality averaged over samples, with a batch-mean error.
pub fn staggered_chirality(samples: &[Vec<f64>], table: &BondTable) -> (f64, f64) {
    let series: Vec<f64> = samples
        .iter()
        .map(|p| chirality(p, table).staggered)
        .collect();
    batch_mean_stderr(&series, 16)
}

#[allow(clippy::excessive_precision)]
#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, ground_state_ansatz, LatticeSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn frozen_ferromagnet_correlation() {
        let (t, _) = build_lattice(&LatticeSpec::periodic(8, 0.0)).unwrap();
        let phi = ground_state_ansatz(&t, 1).unwrap();
        let samples = vec![phi; 40];
        let corr = correlation(&samples, &t, 4, Axis::Y).unwrap();
        for (i, &r) in corr.r.iter().enumerate() {
            assert_relative_eq!(corr.c[i], 1.0, epsilon = 1e-14);
            assert_eq!(r, i);
        }
        assert_eq!(corr.c[0], 1.0);
        assert!(!corr.low_statistics);
    }

    #[test]
    fn rejects_out_of_range() {
        let (t, _) = build_lattice(&LatticeSpec::periodic(8, 0.0)).unwrap();
        let phi = vec![0.0; t.n_nodes];
        assert!(matches!(
            correlation(&[phi], &t, 5, Axis::X),
            Err(ObservablesError::BadRange { .. })
        ));
    }

    #[test]
    fn synthetic_power_law_eta() {
        let r: Vec<usize> = (0..=12).collect();
        let c: Vec<f64> = r
            .iter()
            .map(|&r| if r == 0 { 1.0 } else { (r as f64).powf(-0.25) })
            .collect();
        let corr = CorrelationData {
            sigma: vec![0.0; r.len()],
            r,
            c,
            low_statistics: false,
        };
        let fit = fit_eta(&corr, (1, 10)).unwrap();
        assert_relative_eq!(fit.eta, 0.25, epsilon = 1e-12);
        assert!(fit.stderr < 1e-12);
        assert!(!fit.restricted);
    }

    #[test]
    fn eta_fit_restricts_on_nonpositive_values() {
        let r: Vec<usize> = (0..=8).collect();
        let mut c: Vec<f64> = r
            .iter()
            .map(|&r| if r == 0 { 1.0 } else { (r as f64).powf(-0.5) })
            .collect();
        c[6] = -0.01;
        let corr = CorrelationData {
            sigma: vec![0.0; r.len()],
            r,
            c,
            low_statistics: false,
        };
        let fit = fit_eta(&corr, (1, 8)).unwrap();
        assert!(fit.restricted);
        assert_eq!(fit.range.1, 5);
        assert_relative_eq!(fit.eta, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn global_phase_shift_leaves_observables_unchanged() {
        let (t, _) = build_lattice(&LatticeSpec::periodic(6, 0.5)).unwrap();
        let mut base = ground_state_ansatz(&t, 1).unwrap();
        // roughen it a bit so the test is not trivial
        for (i, p) in base.iter_mut().enumerate() {
            *p += 0.3 * ((i * 2654435761) % 97) as f64 / 97.0;
        }
        let shifted: Vec<f64> = base.iter().map(|p| p + 1.234).collect();
        let c0 = correlation(&[base.clone()], &t, 3, Axis::X).unwrap();
        let c1 = correlation(&[shifted.clone()], &t, 3, Axis::X).unwrap();
        for (a, b) in c0.c.iter().zip(&c1.c) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let k0 = chirality(&base, &t);
        let k1 = chirality(&shifted, &t);
        for (a, b) in k0.kappa.iter().zip(&k1.kappa) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(k0.staggered, k1.staggered, epsilon = 1e-12);
    }

    #[test]
    fn ground_state_chirality_is_checkerboard() {
        let (t, _) = build_lattice(&LatticeSpec::periodic(6, 0.5)).unwrap();
        for sign in [1i8, -1] {
            let phi = ground_state_ansatz(&t, sign).unwrap();
            let map = chirality(&phi, &t);
            assert_relative_eq!(map.staggered, sign as f64, epsilon = 1e-12);
            for (k, &(x, y)) in map.kappa.iter().zip(&map.plaquette_xy) {
                let expect = sign as f64 * if (x + y) % 2 == 0 { 1.0 } else { -1.0 };
                assert_relative_eq!(*k, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn peak_fit_recovers_synthetic_parabola() {
        let pts: Vec<(f64, f64, f64)> = (0..11)
            .map(|k| {
                let t = 0.7 + 0.04 * k as f64;
                (t, 3.0 - 20.0 * (t - 0.91) * (t - 0.91), 0.05)
            })
            .collect();
        let fit = peak_temperature(&pts).unwrap();
        assert_relative_eq!(fit.t_peak, 0.91, epsilon = 1e-9);
        assert!(fit.sigma < 0.02);
    }

    #[test]
    fn peak_fit_rejects_monotone_series() {
        let pts: Vec<(f64, f64, f64)> =
            (0..8).map(|k| (k as f64, k as f64, 0.1)).collect();
        assert!(matches!(
            peak_temperature(&pts),
            Err(ObservablesError::NoPeak)
        ));
        assert!(peak_temperature(&pts[..4]).is_err());
    }

    #[test]
    fn stationarity_check_catches_drift() {
        let n = 4096;
        let drifting: Vec<f64> = (0..n).map(|k| k as f64 / n as f64 * 10.0).collect();
        let err = check_stationary(&drifting).unwrap_err();
        assert!(matches!(err, ObservablesError::NonStationary { .. }));
    }

    #[test]
    fn causal_transform_of_exponential_decay() {
        // g(t) = e^{-a t}: g(0) + iw Int_0^inf g e^{iwt} = 1 + iw/(a - iw)
        //                 = a / (a - i w)
        let a = 0.25;
        let dt = 0.01;
        let g: Vec<f64> = (0..20_000).map(|l| (-a * dt * l as f64).exp()).collect();
        for w in [0.0, 0.3, 1.0, 2.5] {
            let got = causal_transform(&g, dt, w);
            let want = Complex64::new(a, 0.0) / Complex64::new(a, -w);
            assert_abs_diff_eq!(got.re, want.re, epsilon = 2e-3);
            assert_abs_diff_eq!(got.im, want.im, epsilon = 2e-3);
        }
    }

    #[test]
    fn window_bias_sane() {
        let w = hann(256);
        let rho = window_lag_bias(&w, 128);
        assert_relative_eq!(rho[0], 1.0, epsilon = 1e-12);
        assert!(rho[1] < 1.0 && rho[1] > 0.99);
        assert!(rho[128] > 0.0 && rho[128] < 0.6);
    }
}
