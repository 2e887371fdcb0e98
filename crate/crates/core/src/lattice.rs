//! Square-lattice geometry for the junction array: bonds, boundary
//! conditions, and the gauge field encoding the frustration (flux per
//! plaquette in units of the flux quantum).
//!
//! The gauge is fixed to the Landau gauge: horizontal bonds carry zero
//! phase, the vertical bond in column `x` carries `2 pi f x` (columns
//! indexed from 0, sites row-major from the bottom-left). With open
//! boundaries the bottom and top island rows are galvanically merged into
//! two pad macro-nodes; pad rows have no internal junctions.

use std::f64::consts::PI;
use thiserror::Error;

const TAU: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    OpenWithPads,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    Landau,
}

#[derive(Debug, Clone)]
pub struct LatticeSpec {
    /// Plaquette count along x.
    pub lx: usize,
    /// Plaquette count along y.
    pub ly: usize,
    pub boundary: Boundary,
    /// Flux per plaquette in units of the flux quantum, in `[0, 1)`.
    pub frustration: f64,
    pub gauge: Gauge,
}

impl LatticeSpec {
    pub fn periodic(l: usize, frustration: f64) -> Self {
        LatticeSpec {
            lx: l,
            ly: l,
            boundary: Boundary::Periodic,
            frustration,
            gauge: Gauge::Landau,
        }
    }

    pub fn open_with_pads(l: usize, frustration: f64) -> Self {
        LatticeSpec {
            lx: l,
            ly: l,
            boundary: Boundary::OpenWithPads,
            frustration,
            gauge: Gauge::Landau,
        }
    }
}

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("lattice must have at least 2x2 plaquettes, got {lx}x{ly}")]
    TooSmall { lx: usize, ly: usize },
    #[error("frustration must lie in [0,1), got {0}")]
    FrustrationOutOfRange(f64),
    #[error("periodic boundary requires integer total flux per row: f*Lx = {0} is not an integer")]
    IncommensurateFlux(f64),
    #[error("ground-state ansatz is defined for f in {{0, 1/2}}, got {0}")]
    UnsupportedFrustration(f64),
    #[error("the half-flux ansatz on a periodic lattice requires even Lx and Ly, got {lx}x{ly}")]
    OddPeriodicSize { lx: usize, ly: usize },
}

/// A directed junction bond `from -> to` carrying the gauge phase
/// `A = (2 pi / Phi_0) Int_from^to A.dl`. The bond energy is
/// `-E_J cos(phi_from - phi_to - A)`.
#[derive(Debug, Clone, Copy)]
pub struct Bond {
    pub from: usize,
    pub to: usize,
    pub gauge_phase: f64,
}

impl Bond {
    /// Effective coupling sign for half flux: -1 when the bond is
    /// antiferromagnetic (`A = pi` mod 2pi), +1 otherwise.
    pub fn coupling_sign(&self) -> i8 {
        let a = self.gauge_phase.rem_euclid(TAU);
        if (a - PI).abs() < 1e-9 {
            -1
        } else {
            1
        }
    }
}

/// One elementary flux cell, listed as the counter-clockwise sequence of
/// bond indices; `reversed` marks bonds traversed against their direction.
/// Pad-adjacent cells have three bonds (the pad edge is internal to the
/// macro-node), interior cells four.
#[derive(Debug, Clone)]
pub struct Plaquette {
    pub x: usize,
    pub y: usize,
    pub bonds: Vec<(usize, bool)>,
}

/// Per-bond gauge phases plus plaquette bookkeeping.
#[derive(Debug, Clone)]
pub struct GaugeField {
    phases: Vec<f64>,
}

impl GaugeField {
    /// Gauge phase of bond `b` traversed forward (`reversed = false`) or
    /// backward; the field is antisymmetric under reversal.
    pub fn phase(&self, bond: usize, reversed: bool) -> f64 {
        if reversed {
            -self.phases[bond]
        } else {
            self.phases[bond]
        }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Directed sum of gauge phases around a plaquette, counter-clockwise.
    pub fn plaquette_sum(&self, p: &Plaquette) -> f64 {
        p.bonds
            .iter()
            .map(|&(b, rev)| self.phase(b, rev))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Island { x: usize, y: usize },
    BottomPad,
    TopPad,
}

#[derive(Debug, Clone)]
pub struct BondTable {
    pub spec: LatticeSpec,
    pub n_nodes: usize,
    pub bonds: Vec<Bond>,
    pub plaquettes: Vec<Plaquette>,
    pub nodes: Vec<NodeKind>,
    pub bottom_pad: Option<usize>,
    pub top_pad: Option<usize>,
}

impl BondTable {
    /// Node whose charge the cavity probes: the top pad when present,
    /// node 0 otherwise.
    pub fn probe_node(&self) -> usize {
        self.top_pad.unwrap_or(0)
    }

    /// Island node index for grid coordinates; panics on pad rows of an
    /// open lattice (those islands are merged into the pads).
    pub fn node_at(&self, x: usize, y: usize) -> usize {
        match self.spec.boundary {
            Boundary::Periodic => (y % self.spec.ly) * self.spec.lx + (x % self.spec.lx),
            Boundary::OpenWithPads => {
                assert!(
                    y >= 1 && y <= self.spec.ly - 1,
                    "rows 0 and ly are pad-merged"
                );
                assert!(x <= self.spec.lx);
                1 + (y - 1) * (self.spec.lx + 1) + x
            }
        }
    }

    /// Potential energy of a phase configuration, in units of `E_J`.
    pub fn potential_energy(&self, phases: &[f64]) -> f64 {
        debug_assert_eq!(phases.len(), self.n_nodes);
        -self
            .bonds
            .iter()
            .map(|b| (phases[b.from] - phases[b.to] - b.gauge_phase).cos())
            .sum::<f64>()
    }

    /// CSV dump `i,j,A_ij` of the bond list.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,A_ij\n");
        for b in &self.bonds {
            s.push_str(&format!("{},{},{:.17e}\n", b.from, b.to, b.gauge_phase));
        }
        s
    }

    /// A cheap structural fingerprint for provenance headers.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x1000_0000_01b3);
        };
        mix(self.n_nodes as u64);
        mix(self.bonds.len() as u64);
        for b in &self.bonds {
            mix(b.from as u64);
            mix(b.to as u64);
            mix(b.gauge_phase.to_bits());
        }
        h
    }
}

/// Build the bond table and gauge field for a lattice specification.
pub fn build_lattice(spec: &LatticeSpec) -> Result<(BondTable, GaugeField), LatticeError> {
    let (lx, ly, f) = (spec.lx, spec.ly, spec.frustration);
    if lx < 2 || ly < 2 {
        return Err(LatticeError::TooSmall { lx, ly });
    }
    if !(0.0..1.0).contains(&f) {
        return Err(LatticeError::FrustrationOutOfRange(f));
    }
    let Gauge::Landau = spec.gauge;

    let vertical_phase = |x: usize| TAU * f * x as f64;

    let mut bonds = Vec::new();
    let mut plaquettes = Vec::new();
    let mut nodes = Vec::new();
    let (n_nodes, bottom_pad, top_pad);

    match spec.boundary {
        Boundary::Periodic => {
            // Total flux through a row of plaquettes must be an integer
            // number of flux quanta or the Landau gauge cannot close
            // around the torus.
            let flux_row = f * lx as f64;
            if (flux_row - flux_row.round()).abs() > 1e-9 {
                return Err(LatticeError::IncommensurateFlux(flux_row));
            }
            n_nodes = lx * ly;
            bottom_pad = None;
            top_pad = None;
            let node = |x: usize, y: usize| (y % ly) * lx + (x % lx);
            for y in 0..ly {
                for x in 0..lx {
                    nodes.push(NodeKind::Island { x, y });
                }
            }
            // bond ids: horizontal = 2*(y*lx+x), vertical = 2*(y*lx+x)+1
            for y in 0..ly {
                for x in 0..lx {
                    bonds.push(Bond {
                        from: node(x, y),
                        to: node(x + 1, y),
                        gauge_phase: 0.0,
                    });
                    bonds.push(Bond {
                        from: node(x, y),
                        to: node(x, y + 1),
                        gauge_phase: vertical_phase(x),
                    });
                }
            }
            let h = |x: usize, y: usize| 2 * ((y % ly) * lx + (x % lx));
            let v = |x: usize, y: usize| 2 * ((y % ly) * lx + (x % lx)) + 1;
            for y in 0..ly {
                for x in 0..lx {
                    plaquettes.push(Plaquette {
                        x,
                        y,
                        bonds: vec![
                            (h(x, y), false),
                            (v(x + 1, y), false),
                            (h(x, y + 1), true),
                            (v(x, y), true),
                        ],
                    });
                }
            }
        }
        Boundary::OpenWithPads => {
            // Interior island rows y = 1..ly-1, plus two pad macro-nodes.
            let row_len = lx + 1;
            n_nodes = (ly - 1) * row_len + 2;
            let bpad = 0usize;
            let tpad = n_nodes - 1;
            bottom_pad = Some(bpad);
            top_pad = Some(tpad);
            nodes.push(NodeKind::BottomPad);
            for y in 1..ly {
                for x in 0..=lx {
                    nodes.push(NodeKind::Island { x, y });
                }
            }
            nodes.push(NodeKind::TopPad);
            let node = |x: usize, y: usize| 1 + (y - 1) * row_len + x;

            // Horizontal bonds within interior rows.
            let mut h_ids = vec![usize::MAX; ly * row_len];
            for y in 1..ly {
                for x in 0..lx {
                    h_ids[y * row_len + x] = bonds.len();
                    bonds.push(Bond {
                        from: node(x, y),
                        to: node(x + 1, y),
                        gauge_phase: 0.0,
                    });
                }
            }
            // Vertical bonds, pad rows included.
            let mut v_ids = vec![usize::MAX; ly * row_len];
            for y in 0..ly {
                for x in 0..=lx {
                    let from = if y == 0 { bpad } else { node(x, y) };
                    let to = if y == ly - 1 { tpad } else { node(x, y + 1) };
                    v_ids[y * row_len + x] = bonds.len();
                    bonds.push(Bond {
                        from,
                        to,
                        gauge_phase: vertical_phase(x),
                    });
                }
            }
            let h = |x: usize, y: usize| h_ids[y * row_len + x];
            let v = |x: usize, y: usize| v_ids[y * row_len + x];
            for y in 0..ly {
                for x in 0..lx {
                    let mut cell = Vec::with_capacity(4);
                    if y > 0 {
                        cell.push((h(x, y), false));
                    }
                    cell.push((v(x + 1, y), false));
                    if y < ly - 1 {
                        cell.push((h(x, y + 1), true));
                    }
                    cell.push((v(x, y), true));
                    plaquettes.push(Plaquette { x, y, bonds: cell });
                }
            }
        }
    }

    let gauge = GaugeField {
        phases: bonds.iter().map(|b| b.gauge_phase).collect(),
    };
    let table = BondTable {
        spec: spec.clone(),
        n_nodes,
        bonds,
        plaquettes,
        nodes,
        bottom_pad,
        top_pad,
    };
    Ok((table, gauge))
}

/// Minimum-energy phase pattern used to seed low-temperature runs.
///
/// For `f = 0` this is the uniform configuration. For `f = 1/2` it is the
/// staggered checkerboard pattern in the Landau gauge, with the chirality
/// of plaquette (0,0) set by `chirality_sign`; on a pad lattice the pads
/// take the pattern value of their column-0 corner, so the two signs stay
/// exactly degenerate.
pub fn ground_state_ansatz(
    table: &BondTable,
    chirality_sign: i8,
) -> Result<Vec<f64>, LatticeError> {
    let spec = &table.spec;
    let f = spec.frustration;
    if f == 0.0 {
        return Ok(vec![0.0; table.n_nodes]);
    }
    if (f - 0.5).abs() > 1e-12 {
        return Err(LatticeError::UnsupportedFrustration(f));
    }
    if spec.boundary == Boundary::Periodic && (spec.lx % 2 != 0 || spec.ly % 2 != 0) {
        return Err(LatticeError::OddPeriodicSize {
            lx: spec.lx,
            ly: spec.ly,
        });
    }
    // Base table realizes chirality -1 on plaquette (0,0); all
    // gauge-invariant bond phases are +-pi/4.
    let base = |x: usize, y: usize| -> f64 {
        match (x % 2, y % 2) {
            (0, 0) => 0.0,
            (1, 0) => PI / 4.0,
            (0, 1) => -PI / 4.0,
            _ => -PI / 2.0,
        }
    };
    let sign = if chirality_sign >= 0 { -1.0 } else { 1.0 };
    let mut phases = vec![0.0; table.n_nodes];
    for (i, kind) in table.nodes.iter().enumerate() {
        phases[i] = sign
            * match *kind {
                NodeKind::Island { x, y } => base(x, y),
                NodeKind::BottomPad => base(0, 0),
                NodeKind::TopPad => base(0, spec.ly),
            };
    }
    Ok(phases)
}

/// Apply a site-local gauge transformation to a copy of the table:
/// `phi_i -> phi_i + lambda_i`, `A_ij -> A_ij + lambda_i - lambda_j`.
/// Physics is invariant under this map; used by the property tests.
pub fn gauge_transformed(table: &BondTable, lambda: &[f64]) -> BondTable {
    let mut out = table.clone();
    for b in &mut out.bonds {
        b.gauge_phase += lambda[b.from] - lambda[b.to];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn wrap(a: f64) -> f64 {
        // into (-pi, pi]
        let mut x = a.rem_euclid(TAU);
        if x > PI {
            x -= TAU;
        }
        x
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(build_lattice(&LatticeSpec::periodic(1, 0.0)).is_err());
        assert!(build_lattice(&LatticeSpec {
            lx: 1,
            ly: 4,
            boundary: Boundary::OpenWithPads,
            frustration: 0.0,
            gauge: Gauge::Landau,
        })
        .is_err());
        assert!(build_lattice(&LatticeSpec::periodic(4, 1.0)).is_err());
        assert!(build_lattice(&LatticeSpec::periodic(4, -0.1)).is_err());
        // f*Lx not an integer cannot close around the torus
        assert!(matches!(
            build_lattice(&LatticeSpec::periodic(3, 0.5)),
            Err(LatticeError::IncommensurateFlux(_))
        ));
        // but is fine on an open lattice
        assert!(build_lattice(&LatticeSpec::open_with_pads(3, 0.5)).is_ok());
    }

    #[test]
    fn node_and_bond_counts() {
        let (t, _) = build_lattice(&LatticeSpec::periodic(4, 0.0)).unwrap();
        assert_eq!(t.n_nodes, 16);
        assert_eq!(t.bonds.len(), 32);
        assert_eq!(t.plaquettes.len(), 16);

        let (t, _) = build_lattice(&LatticeSpec::open_with_pads(4, 0.0)).unwrap();
        // (ly-1)(lx+1) + 2 pads
        assert_eq!(t.n_nodes, 3 * 5 + 2);
        // horizontal: 3 rows * 4, vertical: 4 rows * 5
        assert_eq!(t.bonds.len(), 12 + 20);
        assert_eq!(t.plaquettes.len(), 16);
        assert_eq!(t.probe_node(), t.n_nodes - 1);
    }

    #[test]
    fn zero_flux_has_zero_gauge() {
        for spec in [
            LatticeSpec::periodic(5, 0.0),
            LatticeSpec::open_with_pads(4, 0.0),
        ] {
            let (t, g) = build_lattice(&spec).unwrap();
            assert!(t.bonds.iter().all(|b| b.gauge_phase == 0.0));
            for p in &t.plaquettes {
                assert_eq!(g.plaquette_sum(p), 0.0);
            }
        }
    }

    #[test]
    fn half_flux_has_one_pi_bond_per_plaquette() {
        let (t, g) = build_lattice(&LatticeSpec::periodic(6, 0.5)).unwrap();
        for p in &t.plaquettes {
            let n_af = p
                .bonds
                .iter()
                .filter(|&&(b, _)| t.bonds[b].coupling_sign() < 0)
                .count();
            assert_eq!(n_af, 1, "plaquette ({},{})", p.x, p.y);
            let sign_product: i32 = p
                .bonds
                .iter()
                .map(|&(b, _)| t.bonds[b].coupling_sign() as i32)
                .product();
            assert_eq!(sign_product, -1);
            assert_abs_diff_eq!(wrap(g.plaquette_sum(p)), PI, epsilon = 1e-12);
        }
        // vertical bonds alternate 0, pi by column
        for b in &t.bonds {
            let a = wrap(b.gauge_phase);
            assert!(a == 0.0 || (a - PI).abs() < 1e-12 || a.abs() < 1e-12);
        }
    }

    #[test]
    fn third_flux_plaquette_sums() {
        let (t, g) = build_lattice(&LatticeSpec::periodic(3, 1.0 / 3.0)).unwrap();
        for p in &t.plaquettes {
            assert_abs_diff_eq!(wrap(g.plaquette_sum(p)), TAU / 3.0, epsilon = 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn plaquette_sums_equal_flux(
            l in 2usize..=16,
            f_idx in 0usize..4,
            open in proptest::bool::ANY,
        ) {
            let f = [0.0, 0.25, 1.0/3.0, 0.5][f_idx];
            let spec = if open {
                LatticeSpec::open_with_pads(l, f)
            } else {
                LatticeSpec::periodic(l, f)
            };
            match build_lattice(&spec) {
                Ok((t, g)) => {
                    for p in &t.plaquettes {
                        let s = wrap(g.plaquette_sum(p) - TAU * f);
                        prop_assert!(s.abs() < 1e-9, "plaquette ({},{}): {}", p.x, p.y, s);
                    }
                }
                Err(LatticeError::IncommensurateFlux(_)) => {
                    prop_assert!(!open && (f * l as f64).fract().abs() > 1e-9);
                }
                Err(e) => return Err(TestCaseError::fail(format!("unexpected: {e}"))),
            }
        }

        #[test]
        fn gauge_transformation_preserves_energy(
            l in 2usize..=8,
            f_idx in 0usize..3,
            seed in 0u64..1_000,
        ) {
            let f = [0.0, 0.25, 0.5][f_idx];
            let spec = LatticeSpec::open_with_pads(l, f);
            let (t, _) = build_lattice(&spec).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let phases: Vec<f64> = (0..t.n_nodes).map(|_| rng.gen_range(-PI..PI)).collect();
            let lambda: Vec<f64> = (0..t.n_nodes).map(|_| rng.gen_range(-PI..PI)).collect();
            let e0 = t.potential_energy(&phases);
            let t2 = gauge_transformed(&t, &lambda);
            let shifted: Vec<f64> = phases.iter().zip(&lambda).map(|(p, l)| p + l).collect();
            let e1 = t2.potential_energy(&shifted);
            prop_assert!((e0 - e1).abs() <= 1e-9 * t.bonds.len() as f64);
        }
    }

    #[test]
    fn ferromagnetic_ground_state() {
        let (t, _) = build_lattice(&LatticeSpec::periodic(6, 0.0)).unwrap();
        let phi = ground_state_ansatz(&t, 1).unwrap();
        assert!(phi.iter().all(|&p| p == 0.0));
        let e_per_bond = t.potential_energy(&phi) / t.bonds.len() as f64;
        assert_relative_eq!(e_per_bond, -1.0, max_relative = 1e-14);
    }

    #[test]
    fn half_flux_ansatz_energy_and_degeneracy() {
        for spec in [
            LatticeSpec::periodic(6, 0.5),
            LatticeSpec::open_with_pads(5, 0.5),
        ] {
            let (t, _) = build_lattice(&spec).unwrap();
            let plus = ground_state_ansatz(&t, 1).unwrap();
            let minus = ground_state_ansatz(&t, -1).unwrap();
            let e_plus = t.potential_energy(&plus);
            let e_minus = t.potential_energy(&minus);
            // Exact double degeneracy of the two chirality sectors.
            assert_relative_eq!(e_plus, e_minus, max_relative = 1e-13);
            if spec.boundary == Boundary::Periodic {
                // Every bond at its optimum: -cos(pi/4) per bond.
                let per_bond = e_plus / t.bonds.len() as f64;
                assert_relative_eq!(per_bond, -(0.5f64.sqrt()), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn ansatz_rejects_unsupported_cases() {
        let (t, _) = build_lattice(&LatticeSpec::periodic(3, 1.0 / 3.0)).unwrap();
        assert!(ground_state_ansatz(&t, 1).is_err());
        let (t, _) = build_lattice(&LatticeSpec {
            lx: 6,
            ly: 5,
            boundary: Boundary::Periodic,
            frustration: 0.5,
            gauge: Gauge::Landau,
        })
        .unwrap();
        assert!(matches!(
            ground_state_ansatz(&t, 1),
            Err(LatticeError::OddPeriodicSize { .. })
        ));
    }

    #[test]
    fn csv_dump_roundtrips_fields() {
        let (t, _) = build_lattice(&LatticeSpec::periodic(2, 0.5)).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("i,j,A_ij\n"));
        assert_eq!(csv.lines().count(), 1 + t.bonds.len());
    }
}
