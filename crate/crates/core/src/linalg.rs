//! Small numerical kernels: banded Cholesky factorization for the
//! capacitance matrix and a damped least-squares fitter for resonance
//! lineshapes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("least-squares fit did not converge after {0} iterations")]
    NoConvergence(usize),
}

/// Symmetric matrix stored by its lower band: `bw` sub-diagonals plus the
/// diagonal, row-major. Entry `(i, j)` with `i - bw <= j <= i` lives at
/// `data[i*(bw+1) + bw - (i - j)]`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        assert!(bw < n.max(1));
        BandMatrix {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + self.bw - (i - j)
    }

    /// Add `v` to entry `(i, j)` of the symmetric matrix (lower triangle).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        assert!(
            r - c <= self.bw,
            "entry ({i},{j}) outside bandwidth {}",
            self.bw
        );
        let k = self.idx(r, c);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            0.0
        } else {
            self.data[self.idx(r, c)]
        }
    }

    /// `out = M x` for the full symmetric matrix.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.n);
        out.fill(0.0);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut acc = 0.0;
            for j in lo..i {
                let v = self.data[self.idx(i, j)];
                acc += v * x[j];
                out[j] += v * x[i];
            }
            acc += self.data[self.idx(i, i)] * x[i];
            out[i] += acc;
        }
    }

    /// Entries of the lower triangle in `(i, j, value)` coordinate form.
    pub fn coordinate_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                let v = self.data[self.idx(i, j)];
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// In-place banded Cholesky: `M = L L^T` with `L` lower-banded.
    pub fn cholesky(mut self) -> Result<BandCholesky, LinalgError> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(bw));
                let mut s = self.data[i * w + bw - (i - j)];
                for k in klo..j {
                    s -= self.data[i * w + bw - (i - k)] * self.data[j * w + bw - (j - k)];
                }
                if j < i {
                    self.data[i * w + bw - (i - j)] = s / self.data[j * w + bw];
                } else {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(LinalgError::NotPositiveDefinite { row: i, pivot: s });
                    }
                    self.data[i * w + bw] = s.sqrt();
                }
            }
        }
        Ok(BandCholesky {
            n,
            bw,
            data: self.data,
        })
    }
}

/// Lower-banded Cholesky factor `L` with `L L^T = M`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandCholesky {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve `M x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let (bw, w) = (self.bw, self.bw + 1);
        // forward: L y = b
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            let mut s = x[i];
            for j in lo..i {
                s -= self.data[i * w + bw - (i - j)] * x[j];
            }
            x[i] = s / self.data[i * w + bw];
        }
        // backward: L^T x = y
        for i in (0..self.n).rev() {
            let hi = (i + bw).min(self.n - 1);
            let mut s = x[i];
            for j in (i + 1)..=hi {
                s -= self.data[j * w + bw - (j - i)] * x[j];
            }
            x[i] = s / self.data[i * w + bw];
        }
    }

    /// `out = L xi`; with standard-normal `xi` the result has covariance `M`.
    pub fn apply_factor(&self, xi: &[f64], out: &mut [f64]) {
        assert_eq!(xi.len(), self.n);
        assert_eq!(out.len(), self.n);
        let (bw, w) = (self.bw, self.bw + 1);
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            let mut s = 0.0;
            for j in lo..=i {
                s += self.data[i * w + bw - (i - j)] * xi[j];
            }
            out[i] = s;
        }
    }
}

/// Levenberg-Marquardt minimization of `|r(p)|^2` with a numerically
/// differenced Jacobian; sized for the handful-of-parameters fits used on
/// reflection traces.
pub fn levenberg_marquardt<F>(
    residuals: F,
    p0: &[f64],
    scale: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<(Vec<f64>, f64), LinalgError>
where
    F: Fn(&[f64], &mut Vec<f64>),
{
    let np = p0.len();
    let mut p = p0.to_vec();
    let mut r = Vec::new();
    residuals(&p, &mut r);
    let mut cost = r.iter().map(|v| v * v).sum::<f64>();
    let mut lambda = 1e-3;
    let mut jac = vec![Vec::new(); np];
    let mut r_pert = Vec::new();

    for iter in 0..max_iter {
        // numeric Jacobian, forward differences
        for (k, col) in jac.iter_mut().enumerate() {
            let h = 1e-7 * scale[k].abs().max(1e-30);
            let mut pk = p.clone();
            pk[k] += h;
            residuals(&pk, &mut r_pert);
            col.clear();
            col.extend(r_pert.iter().zip(&r).map(|(a, b)| (a - b) / h));
        }
        // normal equations J^T J + lambda diag
        let mut a = vec![0.0; np * np];
        let mut g = vec![0.0; np];
        for i in 0..np {
            for j in 0..=i {
                let v = jac[i].iter().zip(&jac[j]).map(|(x, y)| x * y).sum::<f64>();
                a[i * np + j] = v;
                a[j * np + i] = v;
            }
            g[i] = -jac[i].iter().zip(&r).map(|(x, y)| x * y).sum::<f64>();
        }

        let mut improved = false;
        for _ in 0..16 {
            let mut m = a.clone();
            for i in 0..np {
                m[i * np + i] += lambda * a[i * np + i].max(1e-30);
            }
            let Some(step) = solve_small(&m, &g, np) else {
                lambda *= 10.0;
                continue;
            };
            let pt: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + b).collect();
            residuals(&pt, &mut r_pert);
            let new_cost = r_pert.iter().map(|v| v * v).sum::<f64>();
            if new_cost < cost {
                let rel = (cost - new_cost) / cost.max(1e-300);
                p = pt;
                std::mem::swap(&mut r, &mut r_pert);
                cost = new_cost;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel < tol {
                    return Ok((p, cost));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // stuck at a (possibly flat) minimum
            if cost.is_finite() {
                return Ok((p, cost));
            }
            return Err(LinalgError::NoConvergence(iter));
        }
    }
    Ok((p, cost))
}

/// Gaussian elimination with partial pivoting for tiny systems.
pub fn solve_small(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            m[i * n + col]
                .abs()
                .partial_cmp(&m[j * n + col].abs())
                .unwrap()
        })?;
        if m[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        for row in (col + 1)..n {
            let f = m[row * n + col] / m[col * n + col];
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in (col + 1)..n {
            s -= m[col * n + k] * x[k];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn random_band_spd(n: usize, bw: usize, seed: u64) -> BandMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = BandMatrix::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                m.add(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        // make strictly diagonally dominant
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                if j != i {
                    row_sum += m.get(i, j).abs();
                }
            }
            m.add(i, i, row_sum + rng.gen_range(0.5..2.0));
        }
        m
    }

    #[test]
    fn cholesky_solve_matches_dense_lu() {
        for (n, bw, seed) in [(7, 2, 1u64), (40, 5, 2), (100, 13, 3)] {
            let m = random_band_spd(n, bw, seed);
            let mut dense = nalgebra::DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    dense[(i, j)] = m.get(i, j);
                }
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + 99);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let chol = m.clone().cholesky().unwrap();
            let mut x = b.clone();
            chol.solve_in_place(&mut x);
            let x_ref = dense
                .clone()
                .lu()
                .solve(&nalgebra::DVector::from_vec(b.clone()))
                .unwrap();
            for i in 0..n {
                assert_relative_eq!(x[i], x_ref[i], max_relative = 1e-10, epsilon = 1e-12);
            }
            // round trip M x = b
            let mut mx = vec![0.0; n];
            m.matvec(&x, &mut mx);
            let num: f64 = mx.iter().zip(&b).map(|(a, c)| (a - c) * (a - c)).sum();
            let den: f64 = b.iter().map(|c| c * c).sum();
            assert!((num / den).sqrt() < 1e-10);
        }
    }

    #[test]
    fn factor_reproduces_matrix() {
        let m = random_band_spd(30, 4, 7);
        let chol = m.clone().cholesky().unwrap();
        // (L e_k) assembled column by column gives L; check L L^T = M
        let n = 30;
        let mut l = nalgebra::DMatrix::zeros(n, n);
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let mut col = vec![0.0; n];
            chol.apply_factor(&e, &mut col);
            for i in 0..n {
                l[(i, k)] = col[i];
            }
        }
        let llt = &l * l.transpose();
        for i in 0..n {
            for j in 0..n {
                assert_relative_eq!(llt[(i, j)], m.get(i, j), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut m = BandMatrix::zeros(3, 1);
        m.add(0, 0, 1.0);
        m.add(1, 1, -2.0);
        m.add(2, 2, 1.0);
        assert!(matches!(
            m.cholesky(),
            Err(LinalgError::NotPositiveDefinite { row: 1, .. })
        ));
    }

    #[test]
    fn lm_fits_exponential() {
        // y = a exp(-b t), recover (a, b) from exact samples
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|&t| 2.5 * (-1.3 * t).exp()).collect();
        let (p, cost) = levenberg_marquardt(
            |p, r| {
                r.clear();
                r.extend(t.iter().zip(&y).map(|(&t, &y)| p[0] * (-p[1] * t).exp() - y));
            },
            &[1.0, 0.5],
            &[1.0, 1.0],
            200,
            1e-14,
        )
        .unwrap();
        assert_relative_eq!(p[0], 2.5, max_relative = 1e-6);
        assert_relative_eq!(p[1], 1.3, max_relative = 1e-6);
        assert!(cost < 1e-10);
    }
}
