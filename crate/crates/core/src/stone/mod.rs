//! One-parameter groups and the periodic-extension identities linking a
//! family on `[0, 1]` with the composed family on the line.

mod centralizer;
mod extension;
mod representation;

pub use centralizer::{
    centralizer_membership, reduced_integrand, scalar_integrand, CentralizerReport, CommutationCheck,
};
pub use extension::{
    hypothesis_status, verify_extension_identity, ExtensionReport, HypothesisStatus, HYPOTHESIS_TOL,
};
pub use representation::{
    cell_index, generator, periodic_extend, periodic_generator, reconstruct_representation,
    reconstruction_options, trig_well_bounded_value, GeneratorResult, MultiplierRepresentation,
    PeriodicExtension, TrigDecomposition,
};
