//! Jaynes–Cummings collisions between the cavity and one qubit.
//!
//! The interaction-picture unitary `exp(-i g (a σ₊ + a† σ₋))` leaves `|0,g⟩`
//! invariant and acts on each plane `span{|n+1,g⟩, |n,e⟩}` as a rotation
//! `cos θ_n I − i sin θ_n X` with `θ_n = g √(n+1)`. The collision channel is
//! evaluated directly from that block structure, fused with the partial trace
//! over the qubit, so no joint-space matrix is materialized on the hot path.

use serde::{Deserialize, Serialize};

use crate::error::{MaserError, Result};
use crate::fock::{CMatrix, DensityMatrix, JointState, QubitMatrix};
use crate::scalar::{cplx, czero, Real};

/// Number of top Fock levels watched for leakage into the truncation edge.
pub const TRUNCATION_WATCH_LEVELS: usize = 5;
/// Population allowed in the watched levels before a collision is rejected.
pub const TRUNCATION_THRESHOLD: f64 = 1e-8;

/// Qubit preparation: coherence `c` and ground-state weight `q`, both in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams<T> {
    pub c: T,
    pub q: T,
}

impl<T: Real> QubitParams<T> {
    pub fn new(c: T, q: T) -> Result<Self> {
        let p = Self { c, q };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c", self.c), ("q", self.q)] {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(MaserError::OutOfRange {
                    name,
                    value: v.to_f64_lossy(),
                    range: "[0, 1]",
                });
            }
        }
        Ok(())
    }

    /// Qubits prepared in `|g⟩`; they leave the cavity untouched.
    pub fn ground() -> Self {
        Self {
            c: T::zero(),
            q: T::one(),
        }
    }
}

/// `q|g⟩⟨g| + (1−q)|e⟩⟨e| + c√(q(1−q)) (|g⟩⟨e| + |e⟩⟨g|)`.
pub fn build_qubit_state<T: Real>(params: QubitParams<T>) -> Result<QubitMatrix<T>> {
    params.validate()?;
    let QubitParams { c, q } = params;
    let coh = c * (q * (T::one() - q)).sqrt();
    Ok(QubitMatrix {
        entries: [
            [cplx(q, T::zero()), cplx(coh, T::zero())],
            [cplx(coh, T::zero()), cplx(T::one() - q, T::zero())],
        ],
    })
}

/// Coupling `g = Q π / √(m + ε)`; `ε = 0` is the fine-tuned case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling<T> {
    #[serde(rename = "Q")]
    pub big_q: u32,
    pub m: u32,
    pub epsilon: T,
}

impl<T: Real> Coupling<T> {
    pub fn g(&self) -> T {
        Self::formula(self.big_q, self.m, self.epsilon)
    }

    pub fn is_fine_tuned(&self) -> bool {
        self.epsilon == T::zero()
    }

    fn formula(big_q: u32, m: u32, epsilon: T) -> T {
        T::from_u32(big_q).unwrap() * T::PI() / (T::from_u32(m).unwrap() + epsilon).sqrt()
    }

    /// Range check, for couplings built by deserialization.
    pub fn validated(self) -> Result<Self> {
        coupling_value(self.big_q, self.m, self.epsilon)
    }
}

/// Build a [`Coupling`], rejecting `Q = 0`, `m = 0` or `ε ∉ (−0.5, 0.5]`.
pub fn coupling_value<T: Real>(big_q: u32, m: u32, epsilon: T) -> Result<Coupling<T>> {
    if big_q == 0 {
        return Err(MaserError::OutOfRange {
            name: "Q",
            value: 0.0,
            range: "Q >= 1",
        });
    }
    if m == 0 {
        return Err(MaserError::OutOfRange {
            name: "m",
            value: 0.0,
            range: "m >= 1",
        });
    }
    if !(epsilon > T::lit(-0.5) && epsilon <= T::lit(0.5)) {
        return Err(MaserError::OutOfRange {
            name: "epsilon",
            value: epsilon.to_f64_lossy(),
            range: "(-0.5, 0.5]",
        });
    }
    Ok(Coupling { big_q, m, epsilon })
}

/// Block form of the collision unitary on a cavity truncated to `dim` levels.
///
/// The rotation that would couple `|dim−1, e⟩` to the missing `|dim, g⟩` is
/// replaced by the identity, which keeps the truncated operator unitary and
/// coincides with exponentiating the truncated Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionUnitary<T> {
    dim: usize,
    theta: Vec<T>,
    /// `cos(g √n)`: action on `|n, g⟩`'s diagonal.
    cos_ground: Vec<T>,
    /// `cos θ_n`, with 1 at the truncation edge.
    cos_excited: Vec<T>,
    /// `sin θ_n`, with 0 at the truncation edge.
    sin_excited: Vec<T>,
}

impl<T: Real> CollisionUnitary<T> {
    pub fn new(g: T, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(MaserError::Invalid("cavity truncation must be positive".into()));
        }
        if !g.is_finite() {
            return Err(MaserError::Invalid("coupling is not finite".into()));
        }
        let theta: Vec<T> = (0..dim.saturating_sub(1))
            .map(|n| g * T::from_usize_lossy(n + 1).sqrt())
            .collect();
        let cos_ground = (0..dim)
            .map(|n| (g * T::from_usize_lossy(n).sqrt()).cos())
            .collect();
        let mut cos_excited: Vec<T> = theta.iter().map(|t| t.cos()).collect();
        let mut sin_excited: Vec<T> = theta.iter().map(|t| t.sin()).collect();
        cos_excited.push(T::one());
        sin_excited.push(T::zero());
        Ok(Self {
            dim,
            theta,
            cos_ground,
            cos_excited,
            sin_excited,
        })
    }

    pub fn from_coupling(coupling: &Coupling<T>, dim: usize) -> Result<Self> {
        Self::new(coupling.g(), dim)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Rabi angles `θ_n = g √(n+1)`, `n = 0..dim−2`.
    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    /// Apply `U ρ U†` in place on a joint state, block by block.
    pub fn apply_to_joint(&self, joint: &mut JointState<T>) -> Result<()> {
        if joint.cavity_dim() != self.dim {
            return Err(MaserError::DimensionMismatch {
                expected: self.dim,
                found: joint.cavity_dim(),
            });
        }
        let m = joint.entries_mut();
        let size = 2 * self.dim;
        // Pairs (|n+1,g⟩ = 2n+2, |n,e⟩ = 2n+1). Left multiply rows, then right multiply columns.
        for n in 0..self.dim - 1 {
            let (c, s) = (self.cos_excited[n], self.sin_excited[n]);
            let (ig, ie) = (2 * n + 2, 2 * n + 1);
            for col in 0..size {
                let xg = m[(ig, col)];
                let xe = m[(ie, col)];
                m[(ig, col)] = xg * c - cplx(T::zero(), s) * xe;
                m[(ie, col)] = xe * c - cplx(T::zero(), s) * xg;
            }
        }
        for n in 0..self.dim - 1 {
            let (c, s) = (self.cos_excited[n], self.sin_excited[n]);
            let (ig, ie) = (2 * n + 2, 2 * n + 1);
            for row in 0..size {
                let xg = m[(row, ig)];
                let xe = m[(row, ie)];
                m[(row, ig)] = xg * c + cplx(T::zero(), s) * xe;
                m[(row, ie)] = xe * c + cplx(T::zero(), s) * xg;
            }
        }
        m.symmetrize();
        Ok(())
    }

    /// The unitary as a dense joint-space matrix.
    pub fn to_dense(&self) -> CMatrix<T> {
        let size = 2 * self.dim;
        let mut u = CMatrix::identity(size);
        for n in 0..self.dim - 1 {
            let (c, s) = (self.cos_excited[n], self.sin_excited[n]);
            let (ig, ie) = (2 * n + 2, 2 * n + 1);
            u[(ig, ig)] = cplx(c, T::zero());
            u[(ie, ie)] = cplx(c, T::zero());
            u[(ig, ie)] = cplx(T::zero(), -s);
            u[(ie, ig)] = cplx(T::zero(), -s);
        }
        u
    }

    /// Collision channel `Tr_q(U (ρ ⊗ ρ_q) U†)` written into `out`, without the
    /// truncation monitor. `rho` and `out` must both be `dim × dim`.
    pub fn channel_into(&self, rho: &CMatrix<T>, qubit: &QubitMatrix<T>, out: &mut CMatrix<T>) {
        let n_dim = self.dim;
        debug_assert_eq!(rho.dim(), n_dim);
        debug_assert_eq!(out.dim(), n_dim);
        let qg = qubit.entries[0][0].re;
        let qe = qubit.entries[1][1].re;
        let i_xge = cplx(T::zero(), T::one()) * qubit.entries[0][1];
        let i_xeg = cplx(T::zero(), T::one()) * qubit.entries[1][0];
        let has_coherence = qubit.entries[0][1] != czero();

        let a = &self.cos_ground;
        let b = &self.cos_excited;
        let s = &self.sin_excited;
        let src = rho.as_slice();
        let last = n_dim - 1;

        for n in 0..n_dim {
            for np in n..n_dim {
                let idx = n * n_dim + np;
                let mut acc = src[idx] * (qg * a[n] * a[np] + qe * b[n] * b[np]);
                if n > 0 {
                    acc += src[idx - n_dim - 1] * (qe * s[n - 1] * s[np - 1]);
                }
                if np < last {
                    acc += src[idx + n_dim + 1] * (qg * s[n] * s[np]);
                }
                if has_coherence {
                    // i x_ge [a_n S_{n'−1} ρ_{n,n'−1} − S_n b_{n'} ρ_{n+1,n'}]
                    let mut t_ge = czero::<T>();
                    if np > 0 {
                        t_ge += src[idx - 1] * (a[n] * s[np - 1]);
                    }
                    if n < last {
                        t_ge -= src[idx + n_dim] * (s[n] * b[np]);
                    }
                    // i x_eg [b_n S_{n'} ρ_{n,n'+1} − S_{n−1} a_{n'} ρ_{n−1,n'}]
                    let mut t_eg = czero::<T>();
                    if np < last {
                        t_eg += src[idx + 1] * (b[n] * s[np]);
                    }
                    if n > 0 {
                        t_eg -= src[idx - n_dim] * (s[n - 1] * a[np]);
                    }
                    acc += i_xge * t_ge + i_xeg * t_eg;
                }
                let slot = out.as_mut_slice();
                if n == np {
                    slot[idx] = cplx(acc.re, T::zero());
                } else {
                    slot[idx] = acc;
                    slot[np * n_dim + n] = acc.conj();
                }
            }
        }
    }

    /// Unmonitored collision channel.
    pub fn channel(&self, rho: &DensityMatrix<T>, qubit: &QubitMatrix<T>) -> Result<DensityMatrix<T>> {
        if rho.dim() != self.dim {
            return Err(MaserError::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        let mut out = CMatrix::zeros(self.dim);
        self.channel_into(rho.entries(), qubit, &mut out);
        Ok(DensityMatrix::from_trusted(out))
    }
}

/// Population in the watched top levels of the truncation.
pub fn edge_population<T: Real>(rho: &CMatrix<T>) -> T {
    let dim = rho.dim();
    let watch = TRUNCATION_WATCH_LEVELS.min(dim.saturating_sub(1));
    (dim - watch..dim).map(|n| rho[(n, n)].re.max(T::zero())).sum()
}

pub(crate) fn check_edge<T: Real>(rho: &CMatrix<T>) -> Result<T> {
    let pop = edge_population(rho);
    if pop > T::lit(TRUNCATION_THRESHOLD) || !pop.is_finite() {
        return Err(MaserError::TruncationOverflow {
            collision: None,
            population: pop.to_f64_lossy(),
        });
    }
    Ok(pop)
}

/// One collision `ρ_B → Tr_q(U (ρ_B ⊗ ρ_q) U†)` with the truncation monitor.
pub fn apply_collision<T: Real>(
    rho: &DensityMatrix<T>,
    qubit: &QubitMatrix<T>,
    unitary: &CollisionUnitary<T>,
) -> Result<DensityMatrix<T>> {
    let out = unitary.channel(rho, qubit)?;
    check_edge(out.entries())?;
    Ok(out)
}

/// Inclusive Fock ranges sealed off by a fine-tuned coupling `g = π/√m`.
///
/// The Rabi angle `π √(n/m)` is a multiple of π exactly at `n = k² m`, so the
/// chambers are `[(k−1)² m, k² m − 1]`. The last range is clipped to `n_c`.
pub fn chamber_boundaries(m: u32, n_c: usize) -> Vec<(usize, usize)> {
    let m = m.max(1) as usize;
    let mut out = Vec::new();
    let mut k = 1usize;
    loop {
        let lo = (k - 1) * (k - 1) * m;
        if lo >= n_c {
            break;
        }
        let hi = (k * k * m - 1).min(n_c - 1);
        out.push((lo, hi));
        k += 1;
    }
    out
}
