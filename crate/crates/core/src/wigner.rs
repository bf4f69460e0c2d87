//! Wigner quasi-probability on a phase-space grid.
//!
//! Convention: `∫∫ W dx dp = 1`, vacuum `W = e^{−x²−p²}/π`, with
//! `α = (x + i p)/√2`. Each grid point is evaluated with the Laguerre-type
//! recurrence over Fock matrix elements, `O(N²)` per point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MaserError, Result};
use crate::fock::DensityMatrix;
use crate::scalar::{cplx, czero, Cplx, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid<T> {
    pub x_values: Vec<T>,
    pub p_values: Vec<T>,
    /// `values[i][j] = W(x_values[i], p_values[j])`.
    pub values: Vec<Vec<T>>,
}

impl<T: Real> WignerGrid<T> {
    /// Riemann sum over a uniformly spaced grid.
    pub fn riemann_sum(&self) -> T {
        let step = |v: &[T]| {
            if v.len() < 2 {
                T::one()
            } else {
                (v[v.len() - 1] - v[0]) / T::from_usize_lossy(v.len() - 1)
            }
        };
        let cell = step(&self.x_values) * step(&self.p_values);
        let total: T = self.values.iter().flat_map(|r| r.iter().copied()).sum();
        total * cell
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .flat_map(|r| r.iter())
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Grid point of largest `|W|`, as `(x, p, W)`.
    pub fn extremum(&self) -> (T, T, T) {
        let mut best = (T::zero(), T::zero(), T::zero());
        for (i, row) in self.values.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if w.abs() > best.2.abs() {
                    best = (self.x_values[i], self.p_values[j], w);
                }
            }
        }
        best
    }
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / T::from_usize_lossy(n - 1);
            (0..n).map(|i| lo + step * T::from_usize_lossy(i)).collect()
        }
    }
}

/// Wigner function at one phase-space point, reusing `work` (length ≥ dim).
fn wigner_point<T: Real>(rho: &DensityMatrix<T>, x: T, p: T, work: &mut [Cplx<T>]) -> T {
    let dim = rho.dim();
    let r = rho.entries();
    let alpha = cplx(x, p) / T::SQRT_2();
    let two_alpha = alpha * T::lit(2.0);
    let two_alpha_conj = two_alpha.conj();
    let two = T::lit(2.0);

    // work[n] holds the Wigner function of |m⟩⟨n| for the current row m.
    work[0] = cplx((-two * alpha.norm_sqr()).exp() / T::PI(), T::zero());
    let mut w = r[(0, 0)].re * work[0].re;
    for n in 1..dim {
        work[n] = two_alpha * work[n - 1] / T::from_usize_lossy(n).sqrt();
        w += two * (r[(0, n)] * work[n]).re;
    }
    for m in 1..dim {
        let sqrt_m = T::from_usize_lossy(m).sqrt();
        let mut temp = work[m];
        work[m] = (two_alpha_conj * temp - work[m - 1] * sqrt_m) / sqrt_m;
        w += r[(m, m)].re * work[m].re;
        for n in (m + 1)..dim {
            let next = (two_alpha * work[n - 1] - temp * sqrt_m) / T::from_usize_lossy(n).sqrt();
            temp = work[n];
            work[n] = next;
            w += two * (r[(m, n)] * work[n]).re;
        }
    }
    w
}

/// Evaluate `W(x, p)` on the tensor grid `x_values × p_values`.
pub fn wigner<T: Real>(rho: &DensityMatrix<T>, x_values: &[T], p_values: &[T]) -> Result<WignerGrid<T>> {
    if x_values.is_empty() || p_values.is_empty() {
        return Err(MaserError::Invalid("Wigner grid must be non-empty".into()));
    }
    let dim = rho.dim();
    let values = x_values
        .par_iter()
        .map_init(
            || vec![czero::<T>(); dim],
            |work, &x| {
                p_values
                    .iter()
                    .map(|&p| wigner_point(rho, x, p, work))
                    .collect::<Vec<T>>()
            },
        )
        .collect();
    Ok(WignerGrid {
        x_values: x_values.to_vec(),
        p_values: p_values.to_vec(),
        values,
    })
}
