//! Capacitance matrix assembly and the linear algebra the equations of
//! motion need every step: `C^{-1} q` solves and a matched thermal-noise
//! factor with `L L^T = C`.
//!
//! Reduced units: capacitance in `(2e)^2/E_J`. The grid graph keeps the
//! matrix banded (bandwidth ~ one island row); the pad-to-pad shunt is the
//! single entry outside the band and is handled as a rank-1 correction,
//! both in the solve (Woodbury) and in the noise factor (an extra
//! independent Gaussian along the pad-difference direction).

use crate::lattice::BondTable;
use crate::linalg::{BandCholesky, BandMatrix, LinalgError};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapacitanceModel {
    /// Toy model `C_ij = C delta_ij`; `c_self` in reduced units. The
    /// benchmark normalization `(2e)^2/C = 2 E_J` corresponds to
    /// `c_self = 0.5`.
    Diagonal { c_self: f64 },
    /// Junction + ground capacitance on the grid, with an optional shunt
    /// between the two pads.
    Full {
        c_junction: f64,
        c_ground: f64,
        c_shunt: f64,
    },
}

impl CapacitanceModel {
    /// Diagonal model with `(2e)^2/C = x E_J`.
    pub fn diagonal_from_charging_ratio(x: f64) -> Self {
        CapacitanceModel::Diagonal { c_self: 1.0 / x }
    }
}

#[derive(Debug, Error)]
pub enum CapacitanceError {
    #[error("capacitance {name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("pad shunt capacitance requires a lattice with pads")]
    ShuntWithoutPads,
    #[error("dimension mismatch: matrix is {expected} nodes, vector is {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Factorization(#[from] LinalgError),
}

#[derive(Debug, Clone)]
struct ShuntCorrection {
    c_shunt: f64,
    bottom: usize,
    top: usize,
    /// `B^{-1} u` with `u = e_bottom - e_top`.
    w: Vec<f64>,
    /// `c_shunt / (1 + c_shunt u^T B^{-1} u)`.
    gain: f64,
}

#[derive(Debug, Clone)]
enum Kind {
    Diagonal(Vec<f64>),
    Banded {
        base: BandMatrix,
        factor: BandCholesky,
        shunt: Option<ShuntCorrection>,
    },
}

/// Assembled Maxwell capacitance matrix with a ready factorization.
/// Immutable after assembly; concurrent solves write only caller buffers.
#[derive(Debug, Clone)]
pub struct CapacitanceMatrix {
    n: usize,
    kind: Kind,
}

/// Assemble the Maxwell capacitance matrix for a lattice:
/// `M_ii = C_g + sum_junctions C_J (+ C_S on pads)`, `M_ij = -C_J` per
/// junction, `M_{pad,pad'} = -C_S`, then factorize.
pub fn assemble(
    model: &CapacitanceModel,
    table: &BondTable,
) -> Result<CapacitanceMatrix, CapacitanceError> {
    let n = table.n_nodes;
    match *model {
        CapacitanceModel::Diagonal { c_self } => {
            if c_self <= 0.0 {
                return Err(CapacitanceError::NonPositive {
                    name: "c_self",
                    value: c_self,
                });
            }
            Ok(CapacitanceMatrix {
                n,
                kind: Kind::Diagonal(vec![c_self; n]),
            })
        }
        CapacitanceModel::Full {
            c_junction,
            c_ground,
            c_shunt,
        } => {
            if c_junction <= 0.0 {
                return Err(CapacitanceError::NonPositive {
                    name: "c_junction",
                    value: c_junction,
                });
            }
            if c_ground <= 0.0 {
                return Err(CapacitanceError::NonPositive {
                    name: "c_ground",
                    value: c_ground,
                });
            }
            if c_shunt < 0.0 {
                return Err(CapacitanceError::NonPositive {
                    name: "c_shunt",
                    value: c_shunt,
                });
            }
            let pads = table.bottom_pad.zip(table.top_pad);
            if c_shunt > 0.0 && pads.is_none() {
                return Err(CapacitanceError::ShuntWithoutPads);
            }
            let bw = table
                .bonds
                .iter()
                .map(|b| b.from.abs_diff(b.to))
                .max()
                .unwrap_or(0);
            let mut base = BandMatrix::zeros(n, bw);
            for i in 0..n {
                base.add(i, i, c_ground);
            }
            for b in &table.bonds {
                base.add(b.from, b.from, c_junction);
                base.add(b.to, b.to, c_junction);
                base.add(b.from, b.to, -c_junction);
            }
            let factor = base.clone().cholesky()?;
            let shunt = match pads {
                Some((bottom, top)) if c_shunt > 0.0 => {
                    let mut w = vec![0.0; n];
                    w[bottom] = 1.0;
                    w[top] = -1.0;
                    factor.solve_in_place(&mut w);
                    let ut_w = w[bottom] - w[top];
                    Some(ShuntCorrection {
                        c_shunt,
                        bottom,
                        top,
                        gain: c_shunt / (1.0 + c_shunt * ut_w),
                        w,
                    })
                }
                _ => None,
            };
            Ok(CapacitanceMatrix {
                n,
                kind: Kind::Banded {
                    base,
                    factor,
                    shunt,
                },
            })
        }
    }
}

impl CapacitanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of independent standard normals the noise factor consumes.
    pub fn noise_dim(&self) -> usize {
        match &self.kind {
            Kind::Diagonal(_) => self.n,
            Kind::Banded { shunt, .. } => self.n + usize::from(shunt.is_some()),
        }
    }

    fn check_dim(&self, len: usize) -> Result<(), CapacitanceError> {
        if len != self.n {
            return Err(CapacitanceError::Dimension {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    /// `out = C^{-1} q`.
    pub fn solve_into(&self, q: &[f64], out: &mut [f64]) -> Result<(), CapacitanceError> {
        self.check_dim(q.len())?;
        self.check_dim(out.len())?;
        out.copy_from_slice(q);
        match &self.kind {
            Kind::Diagonal(d) => {
                for (x, c) in out.iter_mut().zip(d) {
                    *x /= c;
                }
            }
            Kind::Banded { factor, shunt, .. } => {
                factor.solve_in_place(out);
                if let Some(s) = shunt {
                    // Woodbury: (B + c_s u u^T)^{-1} q = y - gain (u^T y) w
                    let ut_y = out[s.bottom] - out[s.top];
                    let a = s.gain * ut_y;
                    for (x, w) in out.iter_mut().zip(&s.w) {
                        *x -= a * w;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, q: &[f64]) -> Result<Vec<f64>, CapacitanceError> {
        let mut out = vec![0.0; self.n];
        self.solve_into(q, &mut out)?;
        Ok(out)
    }

    /// `out = C x` (full matrix, shunt included).
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) -> Result<(), CapacitanceError> {
        self.check_dim(x.len())?;
        self.check_dim(out.len())?;
        match &self.kind {
            Kind::Diagonal(d) => {
                for ((o, x), c) in out.iter_mut().zip(x).zip(d) {
                    *o = c * x;
                }
            }
            Kind::Banded { base, shunt, .. } => {
                base.matvec(x, out);
                if let Some(s) = shunt {
                    let ut_x = x[s.bottom] - x[s.top];
                    out[s.bottom] += s.c_shunt * ut_x;
                    out[s.top] -= s.c_shunt * ut_x;
                }
            }
        }
        Ok(())
    }

    /// Charging energy `q^T C^{-1} q / 2` in units of `E_J`.
    pub fn charging_energy(&self, q: &[f64]) -> Result<f64, CapacitanceError> {
        let x = self.solve(q)?;
        Ok(0.5 * q.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>())
    }

    /// Thermal-noise operator `sqrt(2 Gamma T) L` with `L L^T = C`.
    pub fn noise_factor(&self, gamma: f64, temperature: f64) -> NoiseFactor<'_> {
        NoiseFactor {
            matrix: self,
            scale: (2.0 * gamma * temperature).max(0.0).sqrt(),
        }
    }

    /// Lower-triangle coordinate entries of the full matrix, for dumps.
    pub fn coordinate_entries(&self) -> Vec<(usize, usize, f64)> {
        match &self.kind {
            Kind::Diagonal(d) => d.iter().enumerate().map(|(i, &c)| (i, i, c)).collect(),
            Kind::Banded { base, shunt, .. } => {
                let mut out = base.coordinate_entries();
                if let Some(s) = shunt {
                    for e in &mut out {
                        if e.0 == e.1 && (e.0 == s.bottom || e.0 == s.top) {
                            e.2 += s.c_shunt;
                        }
                    }
                    let (lo, hi) = (s.bottom.min(s.top), s.bottom.max(s.top));
                    out.push((hi, lo, -s.c_shunt));
                }
                out
            }
        }
    }
}

/// Applies `sqrt(2 Gamma k_B T) L` to a vector of independent standard
/// normals; the result has covariance `2 Gamma k_B T C`.
pub struct NoiseFactor<'a> {
    matrix: &'a CapacitanceMatrix,
    scale: f64,
}

impl NoiseFactor<'_> {
    pub fn noise_dim(&self) -> usize {
        self.matrix.noise_dim()
    }

    /// `out = sqrt(2 Gamma T) L xi`; `xi.len() == noise_dim()`.
    pub fn apply(&self, xi: &[f64], out: &mut [f64]) {
        assert_eq!(xi.len(), self.matrix.noise_dim());
        assert_eq!(out.len(), self.matrix.n);
        if self.scale == 0.0 {
            out.fill(0.0);
            return;
        }
        match &self.matrix.kind {
            Kind::Diagonal(d) => {
                for ((o, x), c) in out.iter_mut().zip(xi).zip(d) {
                    *o = self.scale * c.sqrt() * x;
                }
            }
            Kind::Banded { factor, shunt, .. } => {
                factor.apply_factor(&xi[..self.matrix.n], out);
                if let Some(s) = shunt {
                    // C = B + c_s u u^T, so appending sqrt(c_s) xi_extra u
                    // to L_B xi keeps the covariance exactly C.
                    let extra = s.c_shunt.sqrt() * xi[self.matrix.n];
                    out[s.bottom] += extra;
                    out[s.top] -= extra;
                }
                for o in out.iter_mut() {
                    *o *= self.scale;
                }
            }
        }
    }
}
