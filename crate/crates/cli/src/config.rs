//! Run configuration: strict TOML ingestion (unknown keys are errors),
//! validation with field-qualified messages, and resolution of lab-unit
//! inputs into the reduced units the engine uses.

use jja_core::capacitance::CapacitanceModel;
use jja_core::cavity::CavityParams;
use jja_core::lattice::{Boundary, Gauge, LatticeSpec};
use jja_core::material::{self, SuperconductorParams};
use jja_core::observables::Axis;
use jja_core::units;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Correlation,
    Susceptibility,
    Spectrum,
    Benchmark,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub mode: Mode,
    pub output_dir: String,
    #[serde(default)]
    pub keep_timeseries: bool,
    pub material: MaterialSection,
    pub lattice: LatticeSection,
    pub capacitance: CapacitanceSection,
    pub dynamics: DynamicsSection,
    pub sweep: SweepSection,
    #[serde(default)]
    pub observables: ObservablesSection,
    pub cavity: Option<CavitySection>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub e_j0_ghz: f64,
    pub e_c_ghz: Option<f64>,
    pub t_c_kelvin: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub boundary: BoundaryKind,
    #[serde(default = "default_gauge")]
    pub gauge: GaugeKind,
}

fn default_gauge() -> GaugeKind {
    GaugeKind::Landau
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Periodic,
    OpenWithPads,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeKind {
    Landau,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitanceSection {
    pub model: CapModelKind,
    /// Diagonal model: `(2e)^2/C` in units of `E_J` (2.0 is the toy
    /// normalization).
    pub charging_ratio: Option<f64>,
    /// Full model: junction capacitance in farads, or derive from E_C.
    pub c_junction_farads: Option<f64>,
    #[serde(default)]
    pub c_junction_from_ec: bool,
    pub c_ground_farads: Option<f64>,
    pub c_shunt_farads: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CapModelKind {
    Diagonal,
    Full,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub dt: f64,
    pub gamma_in_ej: Option<f64>,
    /// Damping as `gamma_in_ec * E_C / hbar`.
    pub gamma_in_ec: Option<f64>,
    pub n_burn: usize,
    /// Shorter burn-in for annealed continuation points (defaults to
    /// `n_burn`).
    pub n_burn_annealed: Option<usize>,
    pub n_sample: usize,
    pub record_stride: usize,
    #[serde(default)]
    pub snapshot_stride: usize,
    #[serde(default = "default_true")]
    pub anneal: bool,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
}

fn default_true() -> bool {
    true
}
fn default_seed() -> u64 {
    0x4a4a_5859
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub temperatures_reduced: Option<Vec<f64>>,
    pub temperatures_kelvin: Option<Vec<f64>>,
    pub frustrations: Vec<f64>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservablesSection {
    pub max_r: usize,
    pub eta_fit_ranges: Vec<(usize, usize)>,
    pub welch_segment: usize,
    pub welch_overlap: f64,
    pub welch_max_lag: usize,
    /// Frequencies (units `E_J/hbar`) where chi is evaluated; empty means
    /// a grid around the cavity frequency.
    pub omega_grid: Vec<f64>,
    pub correlation_axis: AxisKind,
}

impl Default for ObservablesSection {
    fn default() -> Self {
        ObservablesSection {
            max_r: 10,
            eta_fit_ranges: vec![(1, 10), (11, 20)],
            welch_segment: 1 << 13,
            welch_overlap: 0.5,
            welch_max_lag: 1 << 11,
            omega_grid: Vec::new(),
            correlation_axis: AxisKind::Y,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    X,
    Y,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub omega_c_ghz: f64,
    pub kappa_ext_mhz: f64,
    pub kappa_int_mhz: f64,
    pub g_mhz: f64,
}

/// One sweep point with everything in reduced units of `E_J` at that
/// point (equal to `E_J0` in reduced-temperature mode; suppressed by the
/// gap in kelvin mode).
#[derive(Debug, Clone)]
pub struct ResolvedPoint {
    pub temperature: f64,
    pub t_kelvin: Option<f64>,
    pub gamma: f64,
    pub cap_model: CapacitanceModel,
    /// `hbar g / E_J`, the prefactor of `chi/2e`.
    pub coupling: f64,
    /// Cavity parameters in `E_J/hbar` units (when a cavity is configured).
    pub cavity: Option<CavityParams>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub mode: Mode,
    pub output_dir: String,
    pub boundary: Boundary,
    pub sizes: Vec<usize>,
    pub frustrations: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Ascending temperatures with per-point reduced parameters.
    pub points: Vec<ResolvedPoint>,
    pub axis: Axis,
}

impl RunConfig {
    pub fn lattice_spec(&self, size: usize, frustration: f64) -> LatticeSpec {
        LatticeSpec {
            lx: size,
            ly: size,
            boundary: self.boundary,
            frustration,
            gauge: Gauge::Landau,
        }
    }

    pub fn welch(&self) -> jja_core::observables::WelchParams {
        jja_core::observables::WelchParams {
            segment_len: self.raw.observables.welch_segment,
            overlap: self.raw.observables.welch_overlap,
            max_lag: self.raw.observables.welch_max_lag,
        }
    }

    /// chi evaluation grid: explicit list, or a grid spanning the cavity
    /// line when a cavity section is present.
    pub fn omega_grid(&self, point: &ResolvedPoint) -> Vec<f64> {
        if !self.raw.observables.omega_grid.is_empty() {
            return self.raw.observables.omega_grid.clone();
        }
        match &point.cavity {
            Some(cav) => {
                let span = 6.0 * 4.0 * cav.kappa_ext.max(cav.kappa_int);
                (-40..=40)
                    .map(|k| cav.omega_c + k as f64 / 40.0 * span)
                    .collect()
            }
            None => vec![0.3319],
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let raw: RawConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    resolve(raw)
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

pub fn resolve(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    // ---- material ----
    let ej0 = raw.material.e_j0_ghz;
    if ej0 <= 0.0 {
        return Err(invalid("material.e_j0_ghz must be positive"));
    }
    if let Some(ec) = raw.material.e_c_ghz {
        if ec <= 0.0 {
            return Err(invalid("material.e_c_ghz must be positive"));
        }
    }

    // ---- dynamics ----
    let d = &raw.dynamics;
    if !(d.dt > 0.0) {
        return Err(invalid("dynamics.dt must be positive"));
    }
    if d.n_burn == 0 || d.n_sample == 0 {
        return Err(invalid(
            "dynamics.n_burn and dynamics.n_sample must be positive",
        ));
    }
    if d.record_stride == 0 {
        return Err(invalid("dynamics.record_stride must be positive"));
    }
    let gamma_spec = match (d.gamma_in_ej, d.gamma_in_ec) {
        (Some(g), None) => {
            if g < 0.0 {
                return Err(invalid("dynamics.gamma_in_ej must be non-negative"));
            }
            GammaSpec::InEj(g)
        }
        (None, Some(g)) => {
            if g < 0.0 {
                return Err(invalid("dynamics.gamma_in_ec must be non-negative"));
            }
            if raw.material.e_c_ghz.is_none() {
                return Err(invalid(
                    "dynamics.gamma_in_ec requires material.e_c_ghz",
                ));
            }
            GammaSpec::InEc(g)
        }
        _ => {
            return Err(invalid(
                "exactly one of dynamics.gamma_in_ej or dynamics.gamma_in_ec is required",
            ))
        }
    };

    // ---- sweep ----
    let s = &raw.sweep;
    if s.frustrations.is_empty() {
        return Err(invalid("sweep.frustrations must be non-empty"));
    }
    if s.sizes.is_empty() {
        return Err(invalid("sweep.sizes must be non-empty"));
    }
    if s.seeds.is_empty() {
        return Err(invalid("sweep.seeds must be non-empty"));
    }
    for &f in &s.frustrations {
        if !(0.0..1.0).contains(&f) {
            return Err(invalid("sweep.frustrations entries must lie in [0,1)"));
        }
    }
    let superconductor = match raw.material.t_c_kelvin {
        Some(tc) => {
            let p = SuperconductorParams {
                t_c_kelvin: tc,
                e_j0_ghz: ej0,
            };
            p.validate()
                .map_err(|e| invalid(format!("material: {e}")))?;
            Some(p)
        }
        None => None,
    };
    let temperatures: Vec<(f64, Option<f64>, f64)> = match (
        &s.temperatures_reduced,
        &s.temperatures_kelvin,
    ) {
        (Some(_), Some(_)) => {
            return Err(invalid(
                "sweep.temperatures_reduced and sweep.temperatures_kelvin are mutually exclusive",
            ))
        }
        (Some(list), None) => {
            if list.is_empty() {
                return Err(invalid("sweep.temperatures_reduced must be non-empty"));
            }
            if list.iter().any(|&t| t <= 0.0) {
                return Err(invalid("sweep.temperatures_reduced must be positive"));
            }
            // reduced mode: E_J = E_J0 at every point
            list.iter().map(|&t| (t, None, 1.0)).collect()
        }
        (None, Some(list)) => {
            let sc = superconductor.ok_or_else(|| {
                invalid("sweep.temperatures_kelvin requires material.t_c_kelvin")
            })?;
            if list.is_empty() {
                return Err(invalid("sweep.temperatures_kelvin must be non-empty"));
            }
            let mut out = Vec::with_capacity(list.len());
            for &tk in list {
                if tk <= 0.0 {
                    return Err(invalid("sweep.temperatures_kelvin must be positive"));
                }
                let suppression = material::ej_suppression(tk, sc.t_c_kelvin)
                    .map_err(|e| invalid(format!("sweep.temperatures_kelvin: {e}")))?;
                if suppression <= 0.0 {
                    return Err(invalid(format!(
                        "sweep.temperatures_kelvin: {tk} K is at or above T_c"
                    )));
                }
                let reduced = units::kelvin_to_reduced(tk, ej0 * suppression);
                out.push((reduced, Some(tk), suppression));
            }
            out
        }
        (None, None) => {
            return Err(invalid(
                "one of sweep.temperatures_reduced or sweep.temperatures_kelvin is required",
            ))
        }
    };

    // ---- capacitance ----
    let c = &raw.capacitance;
    let cap_for = |ej_ghz: f64| -> Result<CapacitanceModel, ConfigError> {
        match c.model {
            CapModelKind::Diagonal => {
                let ratio = c.charging_ratio.ok_or_else(|| {
                    invalid("capacitance.charging_ratio is required for the diagonal model")
                })?;
                if ratio <= 0.0 {
                    return Err(invalid("capacitance.charging_ratio must be positive"));
                }
                if c.c_junction_farads.is_some()
                    || c.c_ground_farads.is_some()
                    || c.c_shunt_farads.is_some()
                    || c.c_junction_from_ec
                {
                    return Err(invalid(
                        "capacitance: farad fields do not apply to the diagonal model",
                    ));
                }
                Ok(CapacitanceModel::Diagonal {
                    c_self: 1.0 / ratio,
                })
            }
            CapModelKind::Full => {
                let cj_farads = match (c.c_junction_farads, c.c_junction_from_ec) {
                    (Some(v), false) => v,
                    (None, true) => {
                        let ec = raw.material.e_c_ghz.ok_or_else(|| {
                            invalid("capacitance.c_junction_from_ec requires material.e_c_ghz")
                        })?;
                        units::junction_capacitance_from_ec_farads(ec)
                    }
                    _ => {
                        return Err(invalid(
                            "capacitance: exactly one of c_junction_farads or \
                             c_junction_from_ec is required for the full model",
                        ))
                    }
                };
                let cg = c
                    .c_ground_farads
                    .ok_or_else(|| invalid("capacitance.c_ground_farads is required"))?;
                let cs = c.c_shunt_farads.unwrap_or(0.0);
                if cj_farads <= 0.0 || cg <= 0.0 || cs < 0.0 {
                    return Err(invalid(
                        "capacitance: farad values must be positive (shunt non-negative)",
                    ));
                }
                Ok(CapacitanceModel::Full {
                    c_junction: units::capacitance_reduced(cj_farads, ej_ghz),
                    c_ground: units::capacitance_reduced(cg, ej_ghz),
                    c_shunt: units::capacitance_reduced(cs, ej_ghz),
                })
            }
        }
    };

    let boundary = match raw.lattice.boundary {
        BoundaryKind::Periodic => Boundary::Periodic,
        BoundaryKind::OpenWithPads => Boundary::OpenWithPads,
    };
    if matches!(boundary, Boundary::Periodic) && c.c_shunt_farads.map_or(false, |v| v > 0.0) {
        return Err(invalid(
            "capacitance.c_shunt_farads requires lattice.boundary = open_with_pads",
        ));
    }

    // ---- observables ----
    let o = &raw.observables;
    if !(0.0..1.0).contains(&o.welch_overlap) {
        return Err(invalid("observables.welch_overlap must lie in [0,1)"));
    }
    if o.welch_max_lag >= o.welch_segment {
        return Err(invalid(
            "observables.welch_max_lag must be below observables.welch_segment",
        ));
    }
    if matches!(raw.mode, Mode::Correlation) && d.snapshot_stride == 0 {
        return Err(invalid(
            "dynamics.snapshot_stride must be positive in correlation mode",
        ));
    }
    if matches!(raw.mode, Mode::Spectrum) && raw.cavity.is_none() {
        return Err(invalid("spectrum mode requires a [cavity] section"));
    }

    // ---- cavity ----
    let cavity_for = |ej_ghz: f64| -> Option<CavityParams> {
        raw.cavity.as_ref().map(|cv| CavityParams {
            omega_c: cv.omega_c_ghz / ej_ghz,
            kappa_ext: cv.kappa_ext_mhz * 1e-3 / ej_ghz,
            kappa_int: cv.kappa_int_mhz * 1e-3 / ej_ghz,
            coupling_g: cv.g_mhz * 1e-3 / ej_ghz,
        })
    };
    if let Some(cv) = &raw.cavity {
        if cv.omega_c_ghz <= 0.0 || cv.kappa_ext_mhz <= 0.0 || cv.kappa_int_mhz < 0.0 {
            return Err(invalid(
                "cavity rates must satisfy omega_c > 0, kappa_ext > 0, kappa_int >= 0",
            ));
        }
    }

    let mut points = Vec::with_capacity(temperatures.len());
    for &(reduced, t_kelvin, suppression) in &temperatures {
        let ej_ghz = ej0 * suppression;
        let gamma = match gamma_spec {
            GammaSpec::InEj(g) => g * ej0 / ej_ghz,
            GammaSpec::InEc(g) => g * raw.material.e_c_ghz.unwrap() / ej_ghz,
        };
        points.push(ResolvedPoint {
            temperature: reduced,
            t_kelvin,
            gamma,
            cap_model: cap_for(ej_ghz)?,
            coupling: raw
                .cavity
                .as_ref()
                .map(|cv| cv.g_mhz * 1e-3 / ej_ghz)
                .unwrap_or(1.0),
            cavity: cavity_for(ej_ghz),
        });
    }
    points.sort_by(|a, b| a.temperature.partial_cmp(&b.temperature).unwrap());

    let axis = match o.correlation_axis {
        AxisKind::X => Axis::X,
        AxisKind::Y => Axis::Y,
    };
    Ok(RunConfig {
        mode: raw.mode,
        output_dir: raw.output_dir.clone(),
        boundary,
        sizes: s.sizes.clone(),
        frustrations: s.frustrations.clone(),
        seeds: s.seeds.clone(),
        points,
        axis,
        raw,
    })
}

#[derive(Debug, Clone, Copy)]
enum GammaSpec {
    InEj(f64),
    InEc(f64),
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn minimal_toml() -> String {
        r#"
mode = "susceptibility"
output_dir = "out"

[material]
e_j0_ghz = 30.3
e_c_ghz = 13.8

[lattice]
boundary = "periodic"

[capacitance]
model = "diagonal"
charging_ratio = 2.0

[dynamics]
dt = 0.02
gamma_in_ej = 1.0
n_burn = 100
n_sample = 1000
record_stride = 4

[sweep]
temperatures_reduced = [0.8, 0.9, 1.0]
frustrations = [0.0]
sizes = [8]
seeds = [1, 2]

[observables]
omega_grid = [0.33]
"#
        .to_string()
    }

    #[test]
    fn minimal_config_validates() {
        let raw: RawConfig = toml::from_str(&minimal_toml()).unwrap();
        let cfg = resolve(raw).unwrap();
        assert_eq!(cfg.points.len(), 3);
        assert_eq!(cfg.points[0].gamma, 1.0);
    }

    #[test]
    fn negative_dt_names_the_field() {
        let text = minimal_toml().replace("dt = 0.02", "dt = -0.1");
        let raw: RawConfig = toml::from_str(&text).unwrap();
        let err = resolve(raw).unwrap_err();
        assert!(err.to_string().contains("dynamics.dt"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let text = minimal_toml().replace("dt = 0.02", "dt = 0.02\ntypo_key = 1");
        let err = toml::from_str::<RawConfig>(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("typo_key"), "{msg}");
        assert!(msg.contains("line"), "no line info: {msg}");
    }

    #[test]
    fn kelvin_mode_requires_tc() {
        let text = minimal_toml().replace(
            "temperatures_reduced = [0.8, 0.9, 1.0]",
            "temperatures_kelvin = [0.5, 0.7]",
        );
        let raw: RawConfig = toml::from_str(&text).unwrap();
        let err = resolve(raw).unwrap_err();
        assert!(err.to_string().contains("t_c_kelvin"), "{err}");
    }

    #[test]
    fn kelvin_mode_resolves_with_suppressed_ej() {
        let text = minimal_toml()
            .replace(
                "temperatures_reduced = [0.8, 0.9, 1.0]",
                "temperatures_kelvin = [0.4, 0.9]",
            )
            .replace("e_c_ghz = 13.8", "e_c_ghz = 13.8\nt_c_kelvin = 1.375");
        let raw: RawConfig = toml::from_str(&text).unwrap();
        let cfg = resolve(raw).unwrap();
        assert_eq!(cfg.points.len(), 2);
        // reduced temperature grows faster than linearly with T_kelvin
        assert!(cfg.points[1].temperature > 2.0 * cfg.points[0].temperature);
        // gamma in E_J(T) units grows as E_J is suppressed
        assert!(cfg.points[1].gamma > cfg.points[0].gamma);
    }

    #[test]
    fn both_temperature_modes_is_an_error() {
        let text = minimal_toml().replace(
            "temperatures_reduced = [0.8, 0.9, 1.0]",
            "temperatures_reduced = [0.8]\ntemperatures_kelvin = [0.5]",
        );
        let raw: RawConfig = toml::from_str(&text).unwrap();
        assert!(resolve(raw).is_err());
    }

    #[test]
    fn shunt_on_periodic_is_rejected() {
        let text = minimal_toml().replace(
            "model = \"diagonal\"\ncharging_ratio = 2.0",
            "model = \"full\"\nc_junction_from_ec = true\nc_ground_farads = 1.38e-18\nc_shunt_farads = 48.5e-15",
        );
        let raw: RawConfig = toml::from_str(&text).unwrap();
        let err = resolve(raw).unwrap_err();
        assert!(err.to_string().contains("open_with_pads"), "{err}");
    }
}
