//! Spectral families: step data, projection sequences, constructions and
//! axiom checks.

mod axioms;
mod construct;
mod format;
mod sequence;
mod step;
mod view;

pub use axioms::{sample_grid, verify_axioms, Axiom, AxiomCheck, AxiomReport};
pub use construct::{
    periodic_family, rescale_to_unit, stone_compose, stone_compose_with_tolerance, substitute_family,
};
pub use format::{
    operator_from_data, operator_to_data, FamilyFile, JumpData, MatrixData, SequenceFile, SCHEMA_VERSION,
};
pub use sequence::ProjectionSequence;
pub use step::{Jump, StepSpectralFamily, Support, FAMILY_TOL};
pub use view::{FamilyKind, SpectralFamilyView, SpectralUnit};
