use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::StepSpectralFamily;
use crate::integration::function::OperatorFunction;
use crate::operator::{NormSpec, Operator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationMode {
    /// Limit over all marked partitions, directed by refinement.
    Standard,
    /// Limit over right-marked partitions (`u_k* = u_k`).
    Right,
}

/// Probe offsets for one-sided limits, relative to the room left of a jump.
pub const LIMIT_OFFSETS: [f64; 3] = [1e-4, 1e-6, 1e-8];

/// Default threshold for a one-sided limit mismatch.
pub const DEFAULT_LIMIT_TOL: f64 = 1e-8;

/// Existence data for one jump of the integrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpFlag {
    pub lambda: f64,
    /// `‖(Φ(λ_j⁻) − Φ(λ_j))ΔE_j‖`; zero when not needed or declared.
    pub left_residual: f64,
    pub exists: bool,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub value: Operator,
    pub flags: Vec<JumpFlag>,
}

impl OracleResult {
    pub fn exists(&self) -> bool {
        self.flags.iter().all(|f| f.exists)
    }

    pub fn worst_left_residual(&self) -> f64 {
        self.flags.iter().map(|f| f.left_residual).fold(0.0, f64::max)
    }
}

/// Estimates `‖(Φ(λ⁻) − Φ(λ))Δ‖` by probing `Φ` at `λ − h` for the offsets
/// in [`LIMIT_OFFSETS`] (scaled to stay inside `(a, λ)`) and extrapolating
/// the two smallest probes linearly to `h = 0`.
pub fn left_limit_residual(phi: &OperatorFunction, lambda: f64, a: f64, delta: &Operator) -> Result<f64> {
    if phi.continuity().left_continuous() {
        return Ok(0.0);
    }
    let room = (0.5 * (lambda - a)).min(1.0);
    let at = phi.try_evaluate(lambda)?;
    let probe = |offset: f64| -> Result<(f64, Operator)> {
        let x = lambda - offset * room;
        let h = lambda - x;
        Ok((h, &(&phi.try_evaluate(x)? - &at) * delta))
    };
    let n = LIMIT_OFFSETS.len();
    let (h2, d2) = probe(LIMIT_OFFSETS[n - 2])?;
    let (h3, d3) = probe(LIMIT_OFFSETS[n - 1])?;
    if !(h3 > 0.0 && h2 > h3) {
        return Err(Error::Evaluation {
            at: lambda,
            reason: "no room to probe the left limit".into(),
        });
    }
    let limit = (&d3.scale_real(h2) - &d2.scale_real(h3)).scale_real(1.0 / (h2 - h3));
    Ok(limit.norm(NormSpec::EUCLIDEAN))
}

/// Exact value of the integral of `Φ` against a step family over `[a, b]`:
/// `Σ_{λ_j ∈ (a, b]} Φ(λ_j)ΔE_j`.
///
/// The nets are directed by refinement, so partitions through every jump are
/// cofinal. Hence the right integral always exists, and the standard one
/// exists iff `Φ(λ_j⁻)ΔE_j = Φ(λ_j)ΔE_j` at every jump (checked to
/// `limit_tol`). A jump at `a` is never seen by increments and is excluded.
pub fn jump_sum_oracle(
    phi: &OperatorFunction,
    psi: &StepSpectralFamily,
    a: f64,
    b: f64,
    mode: IntegrationMode,
    limit_tol: f64,
) -> Result<OracleResult> {
    if phi.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: phi.dim(),
        });
    }
    if !(a <= b) {
        return Err(Error::InvalidInterval { lo: a, hi: b });
    }
    let mut value = Operator::zeros(psi.dim());
    let mut flags = Vec::new();
    for jump in psi.jumps_in(a, b) {
        value += &(&phi.try_evaluate(jump.lambda)? * &jump.delta);
        let left_residual = match mode {
            IntegrationMode::Right => 0.0,
            IntegrationMode::Standard => left_limit_residual(phi, jump.lambda, a, &jump.delta)?,
        };
        flags.push(JumpFlag {
            lambda: jump.lambda,
            left_residual,
            exists: left_residual <= limit_tol,
        });
    }
    Ok(OracleResult { value, flags })
}
