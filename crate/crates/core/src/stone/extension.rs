use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::family::{stone_compose, substitute_family, ProjectionSequence, SpectralFamilyView};
use crate::integration::{
    integrate, integrate_line, left_limit_residual, IntegrateOptions, IntegrationMode, OperatorFunction,
};
use crate::operator::{NormSpec, Operator};
use crate::stone::representation::periodic_extend;

/// Tolerance for the endpoint equality `Φ₁(0) = Φ₁(1)` and for `Ẽ₁(0) = 0`.
pub const HYPOTHESIS_TOL: f64 = 1e-12;

/// Which of the optional hypotheses on `(Φ₁, Ẽ₁)` hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisStatus {
    /// `‖Φ₁(1⁻) − Φ₁(1)‖` (probed unless declared left-continuous).
    pub left_limit_at_one: f64,
    pub left_continuous_at_one: bool,
    /// `‖Ẽ₁(0)‖`.
    pub e1_at_zero: f64,
    pub e1_vanishes_at_zero: bool,
    /// `‖Φ₁(0) − Φ₁(1)‖`.
    pub endpoint_gap: f64,
    pub endpoints_agree: bool,
}

impl HypothesisStatus {
    /// Left continuity at 1 or `Ẽ₁(0) = 0`.
    pub fn alternative_holds(&self) -> bool {
        self.left_continuous_at_one || self.e1_vanishes_at_zero
    }

    /// Everything needed for the standard-mode identity.
    pub fn standard_mode_holds(&self) -> bool {
        self.alternative_holds() && self.endpoints_agree
    }
}

/// Outcome of comparing `∫_{[0,1]} Φ₁ dẼ₁ + Φ₁(1)Ẽ₁(0)` with
/// `pv-∫ Φ dE` for the periodic extension `Φ` and the composed family `E`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub mode: IntegrationMode,
    pub lhs: Operator,
    pub rhs: Operator,
    /// `‖LHS − RHS‖₂`.
    pub residual: f64,
    pub lhs_converged: bool,
    pub rhs_converged: bool,
    pub hypotheses: HypothesisStatus,
    /// Worst per-cell residual of
    /// `(∫_{[n,n+1]} Φ₁(λ−n) dẼ₁(λ−n)) P_n + Φ₁(1) P_{n+1} Ẽ₁(0) = ∫_{[n,n+1]} Φ₁(λ−n) dE(λ)`.
    pub block_residual: f64,
    /// Largest `‖∫_{[n,n+1]} Φ dE‖` over cells outside the truncation.
    pub tail_residual: f64,
}

impl ExtensionReport {
    /// Both sides converge or neither does.
    pub fn iff_consistent(&self) -> bool {
        self.lhs_converged == self.rhs_converged
    }

    /// The hypotheses required by the mode hold.
    pub fn preconditions_hold(&self) -> bool {
        match self.mode {
            IntegrationMode::Right => true,
            IntegrationMode::Standard => self.hypotheses.standard_mode_holds(),
        }
    }
}

pub fn hypothesis_status(phi1: &OperatorFunction, e1: &SpectralFamilyView, limit_tol: f64) -> Result<HypothesisStatus> {
    let id = Operator::identity(phi1.dim());
    let left_limit_at_one = left_limit_residual(phi1, 1.0, 0.0, &id)?;
    let e1_at_zero = e1.evaluate(0.0).norm(NormSpec::EUCLIDEAN);
    let endpoint_gap = phi1.try_evaluate(0.0)?.distance(&phi1.try_evaluate(1.0)?, NormSpec::EUCLIDEAN);
    Ok(HypothesisStatus {
        left_limit_at_one,
        left_continuous_at_one: left_limit_at_one <= limit_tol,
        e1_at_zero,
        e1_vanishes_at_zero: e1_at_zero <= HYPOTHESIS_TOL,
        endpoint_gap,
        endpoints_agree: endpoint_gap <= HYPOTHESIS_TOL,
    })
}

/// Checks the periodic-extension identity for `(Φ₁, Ẽ₁, {P_n})` in `mode`.
///
/// Unmet hypotheses are recorded in the report, not raised; the only errors
/// are invalid inputs (dimension, support or commutation between `Ẽ₁` and
/// the `P_n`).
pub fn verify_extension_identity(
    phi1: &OperatorFunction,
    e1: &SpectralFamilyView,
    p: &ProjectionSequence,
    mode: IntegrationMode,
    opts: &IntegrateOptions,
) -> Result<ExtensionReport> {
    let opts = opts.clone().with_mode(mode);
    let ns = NormSpec::EUCLIDEAN;
    let e = stone_compose(p, e1)?;
    let phi = periodic_extend(phi1);
    let hypotheses = hypothesis_status(phi1, e1, opts.limit_tol)?;

    let phi1_at_one = phi1.try_evaluate(1.0)?;
    let e1_zero = e1.evaluate(0.0);
    let lhs_int = integrate(phi1, e1, 0.0, 1.0, &opts)?;
    let lhs = &lhs_int.value + &(&phi1_at_one * &e1_zero);
    let rhs_int = integrate_line(phi.function(), &e, &opts)?;
    let rhs = rhs_int.value.clone();

    let radius = p.radius();
    let mut block_residual: f64 = 0.0;
    for n in -radius - 1..=radius {
        let shifted = phi1.compose(move |x| x - n as f64);
        let nf = n as f64;
        let moved = substitute_family(e1, 0.0, 1.0, move |x| x + nf)?;
        let inner = integrate(&shifted, &moved, nf, nf + 1.0, &opts)?.value;
        let left = &(&inner * &p.get_or_zero(n)) + &(&(&phi1_at_one * &p.get_or_zero(n + 1)) * &e1_zero);
        let right = integrate(&shifted, &e, nf, nf + 1.0, &opts)?.value;
        block_residual = block_residual.max(left.distance(&right, ns));
    }

    let mut tail_residual: f64 = 0.0;
    for n in (radius + 1..=radius + 3).chain(-radius - 4..=-radius - 2) {
        let nf = n as f64;
        let cell = integrate(phi.function(), &e, nf, nf + 1.0, &opts)?.value;
        tail_residual = tail_residual.max(cell.norm(ns));
    }

    Ok(ExtensionReport {
        mode,
        residual: lhs.distance(&rhs, ns),
        lhs,
        rhs,
        lhs_converged: lhs_int.converged,
        rhs_converged: rhs_int.converged,
        hypotheses,
        block_residual,
        tail_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{Jump, StepSpectralFamily, Support};
    use crate::integration::{Continuity, FunctionKind};
    use crate::operator::C64;
    use std::f64::consts::TAU;

    fn diag(d: &[f64]) -> Operator {
        Operator::from_real_diagonal(d)
    }

    fn unit_support() -> Support {
        Support::new(0.0, 1.0).unwrap()
    }

    /// Jumps at 1/2 and 1 in a 4-dimensional space, with `P_0`, `P_1`
    /// splitting the space into two blocks that each see both jumps.
    fn model() -> (SpectralFamilyView, ProjectionSequence) {
        let e1: SpectralFamilyView = StepSpectralFamily::new(
            unit_support(),
            vec![
                Jump::new(0.5, diag(&[1.0, 0.0, 1.0, 0.0])),
                Jump::new(1.0, diag(&[0.0, 1.0, 0.0, 1.0])),
            ],
        )
        .unwrap()
        .into();
        let p = ProjectionSequence::new(
            1,
            vec![Operator::zeros(4), diag(&[1.0, 1.0, 0.0, 0.0]), diag(&[0.0, 0.0, 1.0, 1.0])],
        )
        .unwrap();
        (e1, p)
    }

    #[test]
    fn exponential_integrand_satisfies_the_identity() {
        let (e1, p) = model();
        let phi1 = OperatorFunction::exponential(4, TAU);
        for mode in [IntegrationMode::Standard, IntegrationMode::Right] {
            let r = verify_extension_identity(&phi1, &e1, &p, mode, &IntegrateOptions::default()).unwrap();
            assert!(r.residual <= 1e-12, "{mode:?}: {}", r.residual);
            assert!(r.lhs_converged && r.rhs_converged && r.iff_consistent());
            assert!(r.preconditions_hold());
            assert!(r.block_residual <= 1e-12);
            assert_eq!(r.tail_residual, 0.0);
            assert!(r.lhs.distance(&diag(&[-1.0, 1.0, -1.0, 1.0]), NormSpec::EUCLIDEAN) < 1e-12);
        }
    }

    #[test]
    fn identity_integrand_telescopes() {
        let (_, p) = model();
        let e1: SpectralFamilyView = StepSpectralFamily::new(
            unit_support(),
            vec![
                Jump::new(0.0, diag(&[1.0, 0.0, 0.0, 0.0])),
                Jump::new(0.25, diag(&[0.0, 1.0, 1.0, 0.0])),
                Jump::new(1.0, diag(&[0.0, 0.0, 0.0, 1.0])),
            ],
        )
        .unwrap()
        .into();
        let phi1 = OperatorFunction::constant(Operator::identity(4));
        let r = verify_extension_identity(&phi1, &e1, &p, IntegrationMode::Standard, &IntegrateOptions::default())
            .unwrap();
        assert!(r.lhs.distance(&Operator::identity(4), NormSpec::EUCLIDEAN) < 1e-14);
        assert!(r.residual < 1e-14);
        assert!(!r.hypotheses.e1_vanishes_at_zero && r.hypotheses.left_continuous_at_one);
    }

    #[test]
    fn discontinuity_at_one_with_mass_at_zero() {
        // Ẽ₁(0) ≠ 0, no jump of Ẽ₁ at 1, Φ₁ jumps at 1.
        let e1: SpectralFamilyView = StepSpectralFamily::new(
            unit_support(),
            vec![
                Jump::new(0.0, diag(&[1.0, 0.0, 1.0, 0.0])),
                Jump::new(0.5, diag(&[0.0, 1.0, 0.0, 1.0])),
            ],
        )
        .unwrap()
        .into();
        let (_, p) = model();
        let phi1 = OperatorFunction::scalar(4, |x| if x < 1.0 { C64::new(0.0, 0.0) } else { C64::new(1.0, 0.0) });
        let phi1 = phi1.with_kind(FunctionKind::Piecewise).with_continuity(Continuity::Unknown);

        let std = verify_extension_identity(&phi1, &e1, &p, IntegrationMode::Standard, &IntegrateOptions::default())
            .unwrap();
        assert!(!std.preconditions_hold());
        assert!(std.lhs_converged && !std.rhs_converged);

        let right = verify_extension_identity(&phi1, &e1, &p, IntegrationMode::Right, &IntegrateOptions::default())
            .unwrap();
        assert!(right.lhs_converged && right.rhs_converged);
        assert!(right.residual < 1e-14);
        // LHS = 0 + Φ₁(1)Ẽ₁(0).
        assert!(right.lhs.distance(&diag(&[1.0, 0.0, 1.0, 0.0]), NormSpec::EUCLIDEAN) < 1e-14);
    }

    #[test]
    fn adaptive_route_agrees() {
        let (e1, p) = model();
        let phi1 = OperatorFunction::exponential(4, TAU);
        let opts = IntegrateOptions::default().adaptive();
        let r = verify_extension_identity(&phi1, &e1, &p, IntegrationMode::Right, &opts).unwrap();
        assert!(r.residual < 1e-8, "{}", r.residual);
        assert!(r.rhs_converged);
    }
}
