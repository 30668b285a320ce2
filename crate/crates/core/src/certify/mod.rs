//! Certification mathematics: per-shot overlaps, the L operator and its
//! relaxation time, shot planners, noise-aware thresholds and the verdict.

mod bounds;
mod markov;
mod overlap;
mod report;

pub use bounds::{
    adversary_fidelity_bound, bernstein_lower_bound, bernstein_radius, bernstein_tail, default_eps_prime,
    fidelity_from_overlap, hoeffding_tail, noise_bound, sample_complexity, soundness_shots, NoiseModel, Planner,
    CLIFFORD_VARIANCE,
};
pub use markov::{
    analyze, binomial, build_l, build_l_baseline, expected_overlap, hermitian_spectrum, relaxation_time, subsets,
    MarkovAnalysis, Variant, SPECTRAL_CAP,
};
pub use overlap::{
    conditional_state, estimate, omega, omega_clifford, omega_pauli, OverlapEstimate, ZERO_BRANCH_TOLERANCE,
};
pub use report::{certify, certify_state, CertificationReport, DecisionRule, SecurityParams, Verdict};
