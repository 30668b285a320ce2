//! Attacks used as security evidence: proper light-cone learning, a
//! signal-propagation probe, brute-force spoofing and variational spoofing.

mod access;
mod brute;
mod invert;
mod learn;
mod probe;
mod variational;

pub use access::{OverlapOracle, QueryAccess, ShadowAccess, UnitaryOracle};
pub use brute::{brute_spoof, product_candidates, BruteReport};
pub use invert::{
    clifford_group, single_invert, su4, InvertConfig, Pivot, PivotChannel, Residual, Tomography, TrialSet, Trials,
    DEFAULT_EPS_F,
};
pub use learn::{fidelity_vs_target, forward_learn, Direction, LearnOutcome, Learned};
pub use probe::signal_probe;
pub use variational::{
    depth_bound, parameter_count, success_curve, train, Ansatz, CurvePoint, Gradient, TrainConfig, TrainTrace,
};
