//! Finite-dimensional quantum states and measurements, and the LHV
//! constructions they admit.

mod eigen;
mod matrix;
mod separable;
mod source;
mod state;

pub use eigen::{hermitian_eigenvalues, min_eigenvalue, operator_norm, EIGEN_TOLERANCE, MAX_SWEEPS};
pub use matrix::{tensor, ComplexMatrix, C64};
pub use separable::{
    basis_correlated_state, classical_lhv_model, dilated_joint_measure, separable_joint_measure,
    separable_state, SeparableDecomposition,
};
pub use source::{
    directional_measures_from_source, source_operator, source_positivity_bound,
    verify_source_operator, SourceCheck, SourceOperator, SourceReport, DEFAULT_DIMENSION_CAP,
    TRACE_TOLERANCE,
};
pub use state::{
    born_behavior, born_distribution, isotropic_state, maximally_entangled, noisy_state,
    ppt_check, reduced_norms, visibility_threshold, DensityOperator, MeasurementSetup, Povm,
    PptReport, PSD_TOLERANCE,
};
