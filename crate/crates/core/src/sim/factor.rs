use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{CorrelationModel, Grid};
use crate::error::{Error, Result};

/// Relative diagonal jitter added when the first factorization attempt fails.
pub const JITTER: f64 = 1e-12;

/// Largest matrix for which a failed factorization is diagnosed with a full
/// eigendecomposition; beyond it the failing pivot is reported instead.
const EIGEN_DIAGNOSIS_MAX: usize = 1024;

/// A square root `L` of the grid covariance (`L·Lᵀ = K`), stored in the form
/// that makes sampling cheapest for the model.
#[derive(Debug, Clone)]
pub(crate) enum Factor {
    /// Packed lower triangle, row-major: row `i` starts at `i(i+1)/2`.
    Dense { lower: Vec<f64>, dim: usize },
    /// `x_k = coef_k·x_{k-1} + scale_k·z_k`.
    Markov { coef: Vec<f64>, scale: Vec<f64> },
    /// `x_k = slope_k·z` for a single standard normal `z`.
    RankOne { slope: Vec<f64> },
}

impl Factor {
    pub(crate) fn build(model: &CorrelationModel, grid: &Grid) -> Result<Self> {
        model.validate()?;
        model.check_domain(grid.points())?;
        let t = grid.points();
        match model {
            CorrelationModel::Fbm { alpha } if *alpha == 2.0 => {
                Ok(Self::RankOne { slope: t.to_vec() })
            }
            m if m.is_markov() => markov(m, t),
            m => dense(m, t),
        }
    }

    pub(crate) fn dim(&self) -> usize {
        match self {
            Self::Dense { dim, .. } => *dim,
            Self::Markov { coef, .. } => coef.len(),
            Self::RankOne { slope } => slope.len(),
        }
    }

    /// Writes one centered sample into `out` (length `dim`).
    pub(crate) fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Self::Dense { lower, dim } => {
                for z in out.iter_mut() {
                    *z = rng.sample(StandardNormal);
                }
                // in place from the bottom: row i only reads z_0..=z_i
                for i in (0..*dim).rev() {
                    let row = &lower[i * (i + 1) / 2..][..=i];
                    out[i] = row.iter().zip(&out[..=i]).map(|(l, z)| l * z).sum();
                }
            }
            Self::Markov { coef, scale } => {
                let mut prev = 0.0;
                for ((x, a), s) in out.iter_mut().zip(coef).zip(scale) {
                    let z: f64 = rng.sample(StandardNormal);
                    prev = a * prev + s * z;
                    *x = prev;
                }
            }
            Self::RankOne { slope } => {
                let z: f64 = rng.sample(StandardNormal);
                for (x, s) in out.iter_mut().zip(slope) {
                    *x = s * z;
                }
            }
        }
    }

    /// Lower-triangular factor as a dense matrix (tests and diagnostics).
    #[cfg(test)]
    pub(crate) fn to_matrix(&self) -> DMatrix<f64> {
        let m = self.dim();
        let mut l = DMatrix::zeros(m, m);
        match self {
            Self::Dense { lower, .. } => {
                for i in 0..m {
                    for j in 0..=i {
                        l[(i, j)] = lower[i * (i + 1) / 2 + j];
                    }
                }
            }
            Self::Markov { coef, scale } => {
                for j in 0..m {
                    let mut v = scale[j];
                    l[(j, j)] = v;
                    for i in j + 1..m {
                        v *= coef[i];
                        l[(i, j)] = v;
                    }
                }
            }
            Self::RankOne { slope } => {
                for i in 0..m {
                    l[(i, 0)] = slope[i];
                }
            }
        }
        l
    }
}

fn markov(model: &CorrelationModel, t: &[f64]) -> Result<Factor> {
    let m = t.len();
    let mut coef = vec![0.0; m];
    let mut scale = vec![0.0; m];
    let mut prev_var = 0.0;
    for k in 0..m {
        let var = model.kernel(t[k], t[k]);
        let (a, cross) = if k > 0 && prev_var > 0.0 {
            let c = model.kernel(t[k - 1], t[k]);
            (c / prev_var, c)
        } else {
            (0.0, 0.0)
        };
        let resid = var - a * cross;
        if resid < -JITTER * var.abs().max(1.0) {
            return Err(Error::NonPositiveDefinite {
                min_eigenvalue: resid,
            });
        }
        coef[k] = a;
        scale[k] = resid.max(0.0).sqrt();
        prev_var = var;
    }
    Ok(Factor::Markov { coef, scale })
}

fn dense(model: &CorrelationModel, t: &[f64]) -> Result<Factor> {
    let m = t.len();
    let mut packed = vec![0.0; m * (m + 1) / 2];
    for i in 0..m {
        for j in 0..=i {
            packed[i * (i + 1) / 2 + j] = model.kernel(t[i], t[j]);
        }
    }
    let max_diag = (0..m)
        .map(|i| packed[i * (i + 1) / 2 + i])
        .fold(0.0, f64::max);
    match cholesky(&packed, m, 0.0) {
        Ok(lower) => return Ok(Factor::Dense { lower, dim: m }),
        Err(_) => {}
    }
    let jitter = JITTER * max_diag.max(f64::MIN_POSITIVE);
    match cholesky(&packed, m, jitter) {
        Ok(lower) => Ok(Factor::Dense { lower, dim: m }),
        Err(pivot) => {
            let min_eigenvalue = if m <= EIGEN_DIAGNOSIS_MAX {
                let full = DMatrix::from_fn(m, m, |i, j| {
                    let (r, c) = if i >= j { (i, j) } else { (j, i) };
                    packed[r * (r + 1) / 2 + c]
                });
                SymmetricEigen::new(full).eigenvalues.min()
            } else {
                pivot
            };
            Err(Error::NonPositiveDefinite { min_eigenvalue })
        }
    }
}

/// Packed row-major Cholesky of `K + jitter·I`; on failure returns the
/// offending pivot.
fn cholesky(k: &[f64], m: usize, jitter: f64) -> std::result::Result<Vec<f64>, f64> {
    let mut l = vec![0.0; k.len()];
    for i in 0..m {
        let ri = i * (i + 1) / 2;
        for j in 0..=i {
            let rj = j * (j + 1) / 2;
            let dot: f64 = l[ri..ri + j]
                .iter()
                .zip(&l[rj..rj + j])
                .map(|(a, b)| a * b)
                .sum();
            let s = k[ri + j] - dot;
            if i == j {
                let pivot = s + jitter;
                if !(pivot > 0.0) {
                    return Err(pivot);
                }
                l[ri + i] = pivot.sqrt();
            } else {
                l[ri + j] = s / l[rj + j];
            }
        }
    }
    Ok(l)
}
