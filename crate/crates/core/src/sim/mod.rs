//! Dense statevector simulation and lab-state emulation.

pub mod clifford;
mod lab;
mod state;

pub use clifford::{random_clifford, CliffordOp};
pub use lab::{sample_lab, LabSample, LabState, Noise};
pub use state::{apply, embed, simulate, StateVector, MAX_QUBITS};
#[allow(unused_imports)]
pub(crate) use state::check_cap;
