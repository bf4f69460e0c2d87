use serde::{Deserialize, Serialize};

use crate::error::{MaserError, Result};
use crate::fock::eigen::{hermitian_eigendecomposition, hermitian_eigenvalues, Spectrum};
use crate::fock::matrix::CMatrix;
use crate::scalar::{czero, Cplx, Real};

/// Battery (cavity) state over the Fock levels `0..dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix<T> {
    entries: CMatrix<T>,
}

/// Qubit state in the ordered basis `(|g⟩, |e⟩)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitMatrix<T> {
    pub entries: [[Cplx<T>; 2]; 2],
}

/// Cavity ⊗ qubit state. Joint index is `2 n + s` with `s = 0` for `|g⟩`
/// and `s = 1` for `|e⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState<T> {
    entries: CMatrix<T>,
}

fn check_unit_trace<T: Real>(m: &CMatrix<T>) -> Result<()> {
    let tr = m.trace();
    if !((tr.re - T::one()).abs() <= T::tol(1e-10) && tr.im.abs() <= T::tol(1e-10)) {
        return Err(MaserError::TraceNotUnit {
            trace: tr.re.to_f64_lossy(),
        });
    }
    Ok(())
}

fn check_hermitian<T: Real>(m: &CMatrix<T>) -> Result<()> {
    let dev = m.hermitian_deviation();
    if !(dev <= T::tol(1e-12)) {
        return Err(MaserError::NotHermitian {
            deviation: dev.to_f64_lossy(),
        });
    }
    Ok(())
}

impl<T: Real> DensityMatrix<T> {
    /// Validated constructor: Hermitian, unit trace, positive semidefinite.
    pub fn new(entries: CMatrix<T>) -> Result<Self> {
        if entries.dim() == 0 {
            return Err(MaserError::Invalid("density matrix of dimension 0".into()));
        }
        check_hermitian(&entries)?;
        check_unit_trace(&entries)?;
        let smallest = hermitian_eigenvalues(&entries)?
            .last()
            .copied()
            .unwrap_or_else(T::zero);
        if smallest < -T::tol(1e-10) {
            return Err(MaserError::NotPositive {
                min_eigenvalue: smallest.to_f64_lossy(),
            });
        }
        Ok(Self { entries })
    }

    /// Kernel-internal constructor for channel outputs that are valid by construction.
    pub(crate) fn from_trusted(entries: CMatrix<T>) -> Self {
        Self { entries }
    }

    /// `|0⟩⟨0|`.
    pub fn vacuum(dim: usize) -> Self {
        Self::fock(dim, 0)
    }

    /// `|n⟩⟨n|`. Panics if `n >= dim`.
    pub fn fock(dim: usize, n: usize) -> Self {
        assert!(n < dim, "Fock level {n} outside truncation {dim}");
        let mut m = CMatrix::zeros(dim);
        m[(n, n)] = Cplx::new(T::one(), T::zero());
        Self { entries: m }
    }

    /// Diagonal state with the given populations.
    pub fn diagonal(probs: &[T]) -> Result<Self> {
        if probs.iter().any(|&p| p < -T::tol(1e-12)) {
            return Err(MaserError::NotPositive {
                min_eigenvalue: probs
                    .iter()
                    .copied()
                    .fold(T::zero(), T::min)
                    .to_f64_lossy(),
            });
        }
        let m = CMatrix::from_real_diagonal(probs);
        check_unit_trace(&m)?;
        Ok(Self { entries: m })
    }

    /// Pure state `|ψ⟩⟨ψ|`, normalizing `psi`.
    pub fn pure(psi: &[Cplx<T>]) -> Result<Self> {
        let norm_sq: T = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm_sq > T::zero()) {
            return Err(MaserError::Invalid("zero state vector".into()));
        }
        let n = psi.len();
        let m = CMatrix::from_fn(n, |i, j| psi[i] * psi[j].conj() / norm_sq);
        Ok(Self { entries: m })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    #[inline]
    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix<T> {
        self.entries
    }

    #[inline]
    pub fn population(&self, n: usize) -> T {
        self.entries[(n, n)].re
    }

    pub fn trace(&self) -> T {
        self.entries.trace().re
    }

    pub fn spectrum(&self) -> Result<Spectrum<T>> {
        hermitian_eigendecomposition(&self.entries)
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        hermitian_eigenvalues(&self.entries)
    }

    /// `U ρ U†` for a unitary `U` of matching dimension.
    pub fn conjugate_by(&self, u: &CMatrix<T>) -> Result<Self> {
        if u.dim() != self.dim() {
            return Err(MaserError::DimensionMismatch {
                expected: self.dim(),
                found: u.dim(),
            });
        }
        let mut out = u.matmul(&self.entries).matmul(&u.adjoint());
        out.symmetrize();
        Ok(Self { entries: out })
    }

    /// Largest deviation from the Hermitian/unit-trace invariants.
    pub fn invariant_residual(&self) -> (T, T) {
        (
            self.entries.hermitian_deviation(),
            (self.trace() - T::one()).abs(),
        )
    }

    pub fn to_precision<U: Real>(&self) -> DensityMatrix<U> {
        DensityMatrix {
            entries: self.entries.cast(),
        }
    }
}

impl<T: Real> QubitMatrix<T> {
    pub fn new(entries: [[Cplx<T>; 2]; 2]) -> Result<Self> {
        let m = CMatrix::from_vec(
            2,
            vec![entries[0][0], entries[0][1], entries[1][0], entries[1][1]],
        );
        check_hermitian(&m)?;
        check_unit_trace(&m)?;
        Ok(Self { entries })
    }

    pub fn ground() -> Self {
        let (o, z) = (Cplx::new(T::one(), T::zero()), czero());
        Self {
            entries: [[o, z], [z, z]],
        }
    }

    pub fn excited() -> Self {
        let (o, z) = (Cplx::new(T::one(), T::zero()), czero());
        Self {
            entries: [[z, z], [z, o]],
        }
    }
}

impl<T: Real> JointState<T> {
    pub fn new(entries: CMatrix<T>) -> Result<Self> {
        if !entries.dim().is_multiple_of(2) {
            return Err(MaserError::OddJointDimension(entries.dim()));
        }
        check_hermitian(&entries)?;
        check_unit_trace(&entries)?;
        Ok(Self { entries })
    }

    pub(crate) fn from_trusted(entries: CMatrix<T>) -> Self {
        Self { entries }
    }

    #[inline]
    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    #[inline]
    pub(crate) fn entries_mut(&mut self) -> &mut CMatrix<T> {
        &mut self.entries
    }

    /// Number of cavity levels.
    pub fn cavity_dim(&self) -> usize {
        self.entries.dim() / 2
    }
}

/// `ρ_B ⊗ ρ_q` in qubit-fastest ordering.
pub fn tensor_with_qubit<T: Real>(rho: &DensityMatrix<T>, qubit: &QubitMatrix<T>) -> JointState<T> {
    let n = rho.dim();
    let b = rho.entries();
    let q = &qubit.entries;
    let joint = CMatrix::from_fn(2 * n, |i, j| b[(i / 2, j / 2)] * q[i % 2][j % 2]);
    JointState::from_trusted(joint)
}

/// Trace out the qubit: `result[n][n'] = ρ[2n][2n'] + ρ[2n+1][2n'+1]`.
pub fn partial_trace_qubit<T: Real>(joint: &JointState<T>) -> Result<DensityMatrix<T>> {
    let j = joint.entries();
    if !j.dim().is_multiple_of(2) {
        return Err(MaserError::OddJointDimension(j.dim()));
    }
    let n = j.dim() / 2;
    let mut out = CMatrix::from_fn(n, |a, b| j[(2 * a, 2 * b)] + j[(2 * a + 1, 2 * b + 1)]);
    out.symmetrize();
    Ok(DensityMatrix::from_trusted(out))
}

/// `Tr(ρ²)`.
pub fn purity<T: Real>(rho: &DensityMatrix<T>) -> T {
    rho.entries().as_slice().iter().map(|z| z.norm_sqr()).sum()
}
