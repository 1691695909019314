//! Concrete models, seeded random generators and the verification suite.

pub mod checks;
pub mod line;
pub mod random;
pub mod representability;
pub mod suite;
pub mod torus;

pub use line::{build_line_model, build_line_model_from_frequencies, CellSymbols, LineModel, MODEL_TOL};
pub use random::{random_periodic_model, random_stone_model, PeriodicModel, Similarity, StoneModel, StoneModelSpec};
pub use representability::{
    minimal_enclosing_circle, scalar_representability_test, BlockResidual, CenterMethod, RepresentabilityReport,
};
pub use torus::{build_torus_model, TorusModel};
pub use suite::{run_suite, CheckResult, ModelKind, SuiteConfig, SuiteReport};
