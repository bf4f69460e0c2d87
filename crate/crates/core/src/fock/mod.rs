//! Dense complex linear algebra over the truncated cavity space and the
//! cavity ⊗ qubit joint space.

mod eigen;
mod matrix;
mod state;

pub use eigen::{hermitian_eigendecomposition, hermitian_eigenvalues, Spectrum};
pub use matrix::CMatrix;
pub use state::{partial_trace_qubit, purity, tensor_with_qubit, DensityMatrix, JointState, QubitMatrix};
