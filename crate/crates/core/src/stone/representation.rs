use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{ProjectionSequence, SpectralFamilyView};
use crate::integration::{
    integrate, integrate_line, Continuity, FunctionKind, IntegralResult, IntegrateOptions, IntegrationMode,
    OperatorFunction,
};
use crate::operator::{NormSpec, Operator, Vector, C64};

/// A one-parameter group acting diagonally: `R_t e_j = e^{itτ_j} e_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierRepresentation {
    frequencies: Vec<f64>,
}

impl MultiplierRepresentation {
    pub fn new(frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::EmptyOperator);
        }
        if frequencies.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidModel("frequencies must be finite".into()));
        }
        Ok(Self { frequencies })
    }

    pub fn dim(&self) -> usize {
        self.frequencies.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// `R_t`.
    pub fn at(&self, t: f64) -> Operator {
        let d: Vec<C64> = self.frequencies.iter().map(|&tau| C64::from_polar(1.0, t * tau)).collect();
        Operator::from_diagonal(&d)
    }

    /// `‖R_{s+t} − R_s R_t‖₂`.
    pub fn group_law_residual(&self, s: f64, t: f64) -> f64 {
        self.at(s + t).distance(&(&self.at(s) * &self.at(t)), NormSpec::EUCLIDEAN)
    }

    /// `‖R_t − I‖₂`.
    pub fn distance_from_identity(&self, t: f64) -> f64 {
        self.at(t).distance(&Operator::identity(self.dim()), NormSpec::EUCLIDEAN)
    }

    /// Generator `A = diag(iτ_j)`.
    pub fn generator(&self) -> Operator {
        let d: Vec<C64> = self.frequencies.iter().map(|&tau| C64::new(0.0, tau)).collect();
        Operator::from_diagonal(&d)
    }
}

fn require_converged(r: IntegralResult, lo: f64, hi: f64) -> Result<IntegralResult> {
    if r.converged {
        Ok(r)
    } else {
        Err(Error::NonConvergence {
            lo,
            hi,
            increment: r.increment.max(r.strategy_spread).max(r.tail_estimate),
        })
    }
}

/// `U = Ẽ₁(0) + ∫^r_{[0,1]} e^{2πis} dẼ₁(s)`.
pub fn trig_well_bounded_value(e1: &SpectralFamilyView) -> Result<Operator> {
    let kernel = OperatorFunction::exponential(e1.dim(), TAU);
    let r = require_converged(integrate(&kernel, e1, 0.0, 1.0, &IntegrateOptions::right())?, 0.0, 1.0)?;
    Ok(&e1.evaluate(0.0) + &r.value)
}

/// A family on `[0, 1]` together with the operator it represents.
#[derive(Debug, Clone)]
pub struct TrigDecomposition {
    pub e1: SpectralFamilyView,
    pub u: Operator,
}

impl TrigDecomposition {
    pub fn new(e1: SpectralFamilyView) -> Result<Self> {
        let u = trig_well_bounded_value(&e1)?;
        Ok(Self { e1, u })
    }

    /// `‖U − Ẽ₁(0) − ∫^r e^{2πis} dẼ₁‖₂`, recomputed.
    pub fn residual(&self) -> Result<f64> {
        Ok(trig_well_bounded_value(&self.e1)?.distance(&self.u, NormSpec::EUCLIDEAN))
    }
}

/// Index `n` with `λ ∈ (n, n+1]`.
pub fn cell_index(lambda: f64) -> i64 {
    lambda.ceil() as i64 - 1
}

/// The periodic extension `Φ(λ) = Φ₁(λ − n)` for `λ ∈ (n, n+1]`.
#[derive(Debug, Clone)]
pub struct PeriodicExtension {
    base: OperatorFunction,
    function: OperatorFunction,
}

impl PeriodicExtension {
    pub fn base(&self) -> &OperatorFunction {
        &self.base
    }

    pub fn function(&self) -> &OperatorFunction {
        &self.function
    }

    pub fn evaluate(&self, lambda: f64) -> Operator {
        self.function.evaluate(lambda)
    }
}

/// Extends `Φ₁` on `[0, 1]` periodically over the half-open cells
/// `(n, n+1]`, so `Φ(n) = Φ₁(1)`. A continuous `Φ₁` gives a left-continuous
/// extension.
pub fn periodic_extend(phi1: &OperatorFunction) -> PeriodicExtension {
    let base = phi1.clone();
    let inner = phi1.clone();
    let continuity = match phi1.continuity() {
        Continuity::Continuous | Continuity::LeftContinuous => Continuity::LeftContinuous,
        Continuity::Unknown => Continuity::Unknown,
    };
    let function = OperatorFunction::new(phi1.dim(), FunctionKind::PeriodicExtension, move |lambda| {
        let n = cell_index(lambda);
        inner.evaluate(lambda - n as f64)
    })
    .with_continuity(continuity);
    PeriodicExtension { base, function }
}

/// `R_t = pv-∫ e^{ict s} dE(s)` where `c` is the view's angular factor
/// (`1` for angular families, `2π` for families measured in cycles).
pub fn reconstruct_representation(e: &SpectralFamilyView, t: f64, opts: &IntegrateOptions) -> Result<Operator> {
    let c = e.unit().angular_factor();
    let kernel = OperatorFunction::exponential(e.dim(), c * t);
    let r = require_converged(integrate_line(&kernel, e, opts)?, f64::NEG_INFINITY, f64::INFINITY)?;
    Ok(r.value)
}

/// Generator applied to a vector, with the domain flag.
#[derive(Debug, Clone)]
pub struct GeneratorResult {
    pub value: Vector,
    /// The principal-value integral converged, i.e. `x ∈ 𝒟(A)` as far as
    /// the engine can tell.
    pub in_domain: bool,
    pub tail_estimate: f64,
}

/// `Ax = ic · pv-∫ s dE(s) x` with `c` the view's angular factor.
pub fn generator(e: &SpectralFamilyView, x: &Vector, opts: &IntegrateOptions) -> Result<GeneratorResult> {
    if x.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            found: x.dim(),
        });
    }
    let c = e.unit().angular_factor();
    let r = integrate_line(&OperatorFunction::identity_scalar(e.dim()), e, opts)?;
    let value = r.value.scale(C64::new(0.0, c)).apply(x);
    Ok(GeneratorResult {
        value,
        in_domain: r.converged,
        tail_estimate: r.tail_estimate,
    })
}

/// `A = 2πi Σ_n n P_n`.
pub fn periodic_generator(p: &ProjectionSequence) -> Operator {
    let mut acc = Operator::zeros(p.dim());
    for (n, pn) in p.iter() {
        if n != 0 {
            acc += &pn.scale(C64::new(0.0, TAU * n as f64));
        }
    }
    acc
}

/// Default options for reconstruction: right mode, exact path when possible.
pub fn reconstruction_options() -> IntegrateOptions {
    IntegrateOptions::default().with_mode(IntegrationMode::Right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{periodic_family, Jump, StepSpectralFamily, Support};

    fn diag(d: &[f64]) -> Operator {
        Operator::from_real_diagonal(d)
    }

    fn s2() -> SpectralFamilyView {
        StepSpectralFamily::new(
            Support::new(0.0, 1.0).unwrap(),
            vec![Jump::new(0.5, diag(&[1.0, 0.0])), Jump::new(1.0, diag(&[0.0, 1.0]))],
        )
        .unwrap()
        .into()
    }

    fn close(a: &Operator, b: &Operator, tol: f64) -> bool {
        a.distance(b, NormSpec::EUCLIDEAN) <= tol
    }

    #[test]
    fn multiplier_group_law() {
        let r = MultiplierRepresentation::new(vec![-3.0, 0.5, 7.25]).unwrap();
        assert_eq!(r.at(0.0), Operator::identity(3));
        assert!(r.group_law_residual(0.3, -1.7) < 1e-14);
        assert!(r.distance_from_identity(1e-9) < 1e-8);
    }

    #[test]
    fn trig_values() {
        let u = trig_well_bounded_value(&s2()).unwrap();
        assert!(close(&u, &diag(&[-1.0, 1.0]), 1e-14));

        let unit: SpectralFamilyView = StepSpectralFamily::unit_step(2, 0.0, Support::new(0.0, 1.0).unwrap())
            .unwrap()
            .into();
        assert!(close(&trig_well_bounded_value(&unit).unwrap(), &Operator::identity(2), 0.0));

        let s0 = 0.3;
        let p = diag(&[1.0, 0.0]);
        let e1: SpectralFamilyView = StepSpectralFamily::new(
            Support::new(0.0, 1.0).unwrap(),
            vec![Jump::new(s0, p.clone()), Jump::new(1.0, &Operator::identity(2) - &p)],
        )
        .unwrap()
        .into();
        let expected = &p.scale(C64::from_polar(1.0, TAU * s0)) + &(&Operator::identity(2) - &p);
        let dec = TrigDecomposition::new(e1).unwrap();
        assert!(close(&dec.u, &expected, 1e-14));
        assert!(dec.residual().unwrap() < 1e-14);
    }

    #[test]
    fn periodic_extension_conventions() {
        let phi1 = OperatorFunction::exponential(1, TAU);
        let ext = periodic_extend(&phi1);
        assert!((ext.evaluate(2.25).entry(0, 0) - C64::new(0.0, 1.0)).norm() < 1e-14);
        assert_eq!(ext.evaluate(3.0), phi1.evaluate(1.0));
        assert_eq!(ext.evaluate(-2.0), phi1.evaluate(1.0));
        assert_eq!(ext.evaluate(-1.75), phi1.evaluate(0.25));
        assert_eq!(ext.function().continuity(), Continuity::LeftContinuous);
        let c = OperatorFunction::constant(diag(&[2.0]));
        let ext = periodic_extend(&c);
        for k in -20..20 {
            assert_eq!(ext.evaluate(k as f64 * 0.37), diag(&[2.0]));
        }
    }

    fn two_point_sequence() -> ProjectionSequence {
        ProjectionSequence::new(1, vec![Operator::zeros(2), diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).unwrap()
    }

    #[test]
    fn periodic_reconstruction_and_generator() {
        let p = two_point_sequence();
        let e = periodic_family(&p);
        for t in [0.0, 0.3, -1.2, 2.5] {
            let r = reconstruct_representation(&e, t, &reconstruction_options()).unwrap();
            let expected = Operator::from_diagonal(&[C64::new(1.0, 0.0), C64::from_polar(1.0, TAU * t)]);
            assert!(close(&r, &expected, 1e-13), "t = {t}");
        }
        let a = periodic_generator(&p);
        assert!(close(&a, &Operator::from_diagonal(&[C64::new(0.0, 0.0), C64::new(0.0, TAU)]), 1e-15));
        for j in 0..2 {
            let x = Vector::basis(2, j);
            let g = generator(&e, &x, &reconstruction_options()).unwrap();
            assert!(g.in_domain);
            assert!(g.value.sub(&a.apply(&x)).norm(NormSpec::EUCLIDEAN) < 1e-12);
        }
        let zero = generator(&e, &Vector::zeros(2), &reconstruction_options()).unwrap();
        assert_eq!(zero.value.norm(NormSpec::EUCLIDEAN), 0.0);
        assert_eq!(periodic_generator(&ProjectionSequence::trivial(3)), Operator::zeros(3));
    }

    #[test]
    fn angular_family_generator() {
        // Single frequency τ = 3 on a 1-dimensional space.
        let e: SpectralFamilyView = StepSpectralFamily::unit_step(1, 3.0, Support::new(3.0, 3.0).unwrap())
            .unwrap()
            .into();
        let x = Vector::basis(1, 0);
        let g = generator(&e, &x, &reconstruction_options()).unwrap();
        assert!((g.value.entries()[0] - C64::new(0.0, 3.0)).norm() < 1e-14);
        let r = reconstruct_representation(&e, 0.7, &reconstruction_options()).unwrap();
        assert!((r.entry(0, 0) - C64::from_polar(1.0, 2.1)).norm() < 1e-14);
    }
}
