//! Dense Hermitian eigensolver.
//!
//! The matrix is reduced to real symmetric tridiagonal form with Householder
//! reflections plus a diagonal phase rotation, then diagonalized with the
//! implicit QL iteration (Wilkinson shifts). Eigenvectors are recovered by
//! accumulating both transformations.

use crate::error::{MaserError, Result};
use crate::fock::matrix::CMatrix;
use crate::scalar::{czero, Cplx, Real};

const MAX_QL_ITERATIONS: usize = 64;

/// Eigenvalues in descending order with the matching unitary of eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub eigenvalues: Vec<T>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: CMatrix<T>,
}

impl<T: Real> Spectrum<T> {
    /// `V Λ V†`.
    pub fn reconstruct(&self) -> CMatrix<T> {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        CMatrix::from_fn(n, |i, j| {
            let mut acc = czero();
            for k in 0..n {
                acc += v[(i, k)] * v[(j, k)].conj() * self.eigenvalues[k];
            }
            acc
        })
    }
}

/// Tridiagonal form `A = W T W†` with `T` real.
struct Tridiagonal<T> {
    diag: Vec<T>,
    /// `off[i] = T[i+1][i]`; the last entry is zero.
    off: Vec<T>,
    /// Accumulated unitary `W`, only when requested.
    basis: Option<CMatrix<T>>,
}

fn check_hermitian<T: Real>(a: &CMatrix<T>) -> Result<()> {
    let scale = a.max_abs().max(T::one());
    let dev = a.hermitian_deviation();
    if !(dev <= T::tol(1e-10) * scale) {
        return Err(MaserError::NotHermitian {
            deviation: dev.to_f64_lossy(),
        });
    }
    Ok(())
}

fn tridiagonalize<T: Real>(input: &CMatrix<T>, want_basis: bool) -> Tridiagonal<T> {
    let n = input.dim();
    let mut a = input.clone();
    a.symmetrize();
    let mut q = want_basis.then(|| CMatrix::identity(n));

    let mut v = vec![czero::<T>(); n];
    let mut w = vec![czero::<T>(); n];

    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        if (lo + 1..n).all(|i| a[(i, k)] == czero()) {
            continue;
        }
        // Work with the column scaled to unit max-abs so far-tail entries do
        // not underflow when squared.
        let scale = (lo..n).fold(T::zero(), |m, i| m.max(a[(i, k)].re.abs()).max(a[(i, k)].im.abs()));
        for i in lo..n {
            v[i] = a[(i, k)] / scale;
        }
        let tail_norm_sq: T = (lo + 1..n).map(|i| v[i].norm_sqr()).sum();
        let x0 = v[lo];
        let x0_abs = x0.norm();
        let norm = (tail_norm_sq + x0_abs * x0_abs).sqrt();
        let phase = if x0_abs > T::zero() {
            x0 / x0_abs
        } else {
            Cplx::new(T::one(), T::zero())
        };
        let alpha_scaled = -phase * norm;
        let alpha = alpha_scaled * scale;
        v[lo] -= alpha_scaled;
        let v_norm_sq = T::lit(2.0) * norm * (norm + x0_abs);
        let beta = T::lit(2.0) / v_norm_sq;

        // p = beta A v over the trailing block, K = beta/2 v† p, w = p - K v
        for i in lo..n {
            let row = a.row(i);
            let mut acc = czero();
            for j in lo..n {
                acc += row[j] * v[j];
            }
            w[i] = acc * beta;
        }
        let mut vp = czero::<T>();
        for i in lo..n {
            vp += v[i].conj() * w[i];
        }
        let kk = vp.re * beta * T::lit(0.5);
        for i in lo..n {
            w[i] -= v[i] * kk;
        }
        // A <- A - v w† - w v† on the trailing block
        for i in lo..n {
            let vi = v[i];
            let wi = w[i];
            for j in lo..n {
                let upd = vi * w[j].conj() + wi * v[j].conj();
                a[(i, j)] -= upd;
            }
        }
        // column k below the subdiagonal is now annihilated
        a[(lo, k)] = alpha;
        a[(k, lo)] = alpha.conj();
        for i in (lo + 1)..n {
            a[(i, k)] = czero();
            a[(k, i)] = czero();
        }

        if let Some(q) = q.as_mut() {
            // Q <- Q H, H = I - beta v v†
            for r in 0..n {
                let mut acc = czero::<T>();
                for j in lo..n {
                    acc += q[(r, j)] * v[j];
                }
                let acc = acc * beta;
                for j in lo..n {
                    let upd = acc * v[j].conj();
                    q[(r, j)] -= upd;
                }
            }
        }
    }

    let diag: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut off = vec![T::zero(); n];
    // D† T D is real with D_0 = 1, D_{i+1} = D_i e_i / |e_i|.
    let mut phases = vec![Cplx::new(T::one(), T::zero()); n];
    for i in 0..n.saturating_sub(1) {
        let e = a[(i + 1, i)];
        let mag = e.norm();
        off[i] = mag;
        phases[i + 1] = if mag > T::zero() {
            phases[i] * (e / mag)
        } else {
            phases[i]
        };
    }
    if let Some(q) = q.as_mut() {
        for r in 0..n {
            for (c, ph) in phases.iter().enumerate() {
                q[(r, c)] *= *ph;
            }
        }
    }
    Tridiagonal {
        diag,
        off,
        basis: q,
    }
}

/// Implicit QL with Wilkinson shifts on a real symmetric tridiagonal matrix.
/// `z`, if given, is the row-major `n×n` real basis that gets rotated.
fn tridiagonal_ql<T: Real>(d: &mut [T], e: &mut [T], mut z: Option<&mut [T]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = T::zero();
    let two = T::lit(2.0);
    // Deflate against the matrix norm as well, so clusters of near-zero
    // eigenvalues do not stall the relative test.
    let norm = (0..n).fold(T::zero(), |acc, i| acc.max(d[i].abs() + e[i].abs()));
    let floor = T::epsilon() * norm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(MaserError::EigenNoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let signed_r = if g >= T::zero() { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + signed_r);
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let zk1 = z[k * n + i + 1];
                        let zk = z[k * n + i];
                        z[k * n + i + 1] = s * zk + c * zk1;
                        z[k * n + i] = c * zk - s * zk1;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

/// Indices of `values` sorted descending; equal values keep their original order.
fn descending_order<T: Real>(values: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    idx
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues descending.
pub fn hermitian_eigendecomposition<T: Real>(a: &CMatrix<T>) -> Result<Spectrum<T>> {
    check_hermitian(a)?;
    let n = a.dim();
    let Tridiagonal {
        mut diag,
        mut off,
        basis,
    } = tridiagonalize(a, true);
    let mut z = vec![T::zero(); n * n];
    for i in 0..n {
        z[i * n + i] = T::one();
    }
    tridiagonal_ql(&mut diag, &mut off, Some(&mut z))?;

    let basis = basis.expect("basis requested");
    let order = descending_order(&diag);
    let eigenvalues = order.iter().map(|&k| diag[k]).collect();
    // V = W Z, columns permuted by `order`
    let mut vectors = CMatrix::zeros(n);
    for r in 0..n {
        let wrow = basis.row(r);
        for (col, &k) in order.iter().enumerate() {
            let mut acc = czero::<T>();
            for j in 0..n {
                acc += wrow[j] * z[j * n + k];
            }
            vectors[(r, col)] = acc;
        }
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// Eigenvalues only, descending. Skips the eigenvector accumulation.
pub fn hermitian_eigenvalues<T: Real>(a: &CMatrix<T>) -> Result<Vec<T>> {
    check_hermitian(a)?;
    let Tridiagonal {
        mut diag, mut off, ..
    } = tridiagonalize(a, false);
    tridiagonal_ql(&mut diag, &mut off, None)?;
    let order = descending_order(&diag);
    Ok(order.into_iter().map(|k| diag[k]).collect())
}
