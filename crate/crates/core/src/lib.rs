//! Micromaser quantum battery: a truncated cavity mode charged by a stream of
//! qubits through resonant Jaynes–Cummings collisions.
//!
//! The crate is generic over the real scalar (`f32` or `f64`); the `*64`
//! aliases at the root fix the double-precision instantiation used by the CLI.

pub mod error;
pub mod fock;
pub mod jc;
pub mod loss;
pub mod metrics;
pub mod optimizer;
pub mod protocol;
pub mod scalar;
pub mod wigner;

pub use error::{MaserError, Result};
pub use fock::{CMatrix, DensityMatrix, JointState, QubitMatrix, Spectrum};
pub use jc::{apply_collision, build_qubit_state, chamber_boundaries, coupling_value, CollisionUnitary, Coupling, QubitParams};
pub use loss::{evaluate_loss, ChargingObjective, LossConfig, LossContext, ParamVector};
pub use metrics::{cotangent_populations, energy, ergotropy, figures, passive_energy, populations, Figures, PopulationVector};
pub use optimizer::{minimize, multi_restart, numerical_gradient, Objective, OptOptions, OptResult};
pub use protocol::{extend_protocol, run_protocol, BatchSpec, ProtocolSpec, Trajectory};
pub use scalar::{Cplx, Real};
pub use wigner::{linspace, wigner, WignerGrid};

pub type DensityMatrix64 = DensityMatrix<f64>;
pub type QubitParams64 = QubitParams<f64>;
pub type Coupling64 = Coupling<f64>;
pub type ProtocolSpec64 = ProtocolSpec<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type LossContext64 = LossContext<f64>;
pub type ParamVector64 = ParamVector<f64>;
pub type WignerGrid64 = WignerGrid<f64>;

pub type DensityMatrix32 = DensityMatrix<f32>;
pub type Trajectory32 = Trajectory<f32>;
