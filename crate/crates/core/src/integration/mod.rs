//! Riemann–Stieltjes integration of operator-valued functions against
//! spectral families.

mod engine;
mod function;
mod oracle;
mod partition;
mod variation;

pub use engine::{
    integrate, integrate_line, IntegralResult, IntegrateOptions, DEFAULT_ADAPTIVE_TOL, DEFAULT_A_MAX,
    DEFAULT_EXACT_TOL, DEFAULT_MAX_DEPTH, DEFAULT_SPLIT,
};
pub use function::{Continuity, FunctionKind, OperatorFunction};
pub use oracle::{
    jump_sum_oracle, left_limit_residual, IntegrationMode, JumpFlag, OracleResult, DEFAULT_LIMIT_TOL,
    LIMIT_OFFSETS,
};
pub use partition::{rs_sum, MarkedPartition, MarkerStrategy};
pub use variation::{variation_norm, Variation, VariationSubject};
