use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Support;
use crate::operator::{Operator, C64};

/// What is known about the one-sided continuity of an integrand.
///
/// Declared continuity lets the integrator skip numerical probing of
/// one-sided limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Continuity {
    Unknown,
    LeftContinuous,
    Continuous,
}

impl Continuity {
    pub fn left_continuous(&self) -> bool {
        matches!(self, Continuity::LeftContinuous | Continuity::Continuous)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    Constant,
    ScalarTimesIdentity,
    Piecewise,
    PeriodicExtension,
    DiagonalMultiplier,
}

type Evaluator = dyn Fn(f64) -> Operator + Send + Sync;

/// An operator-valued function `Φ: ℝ ⊇ domain → L(X)`.
#[derive(Clone)]
pub struct OperatorFunction {
    dim: usize,
    kind: FunctionKind,
    continuity: Continuity,
    domain: Support,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for OperatorFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorFunction")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("continuity", &self.continuity)
            .field("domain", &self.domain)
            .finish()
    }
}

impl OperatorFunction {
    /// A function defined on all of `ℝ` with unknown continuity.
    pub fn new(
        dim: usize,
        kind: FunctionKind,
        eval: impl Fn(f64) -> Operator + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            kind,
            continuity: Continuity::Unknown,
            domain: Support::unbounded(),
            eval: Arc::new(eval),
        }
    }

    pub fn constant(value: Operator) -> Self {
        let dim = value.dim();
        Self::new(dim, FunctionKind::Constant, move |_| value.clone())
            .with_continuity(Continuity::Continuous)
    }

    /// `λ ↦ φ(λ)·I`.
    pub fn scalar(dim: usize, phi: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        Self::new(dim, FunctionKind::ScalarTimesIdentity, move |x| {
            Operator::identity(dim).scale(phi(x))
        })
    }

    /// `λ ↦ diag(φ₁(λ), …, φ_d(λ))`; `symbols` returns the diagonal.
    pub fn diagonal(dim: usize, symbols: impl Fn(f64) -> Vec<C64> + Send + Sync + 'static) -> Self {
        Self::new(dim, FunctionKind::DiagonalMultiplier, move |x| {
            Operator::from_diagonal(&symbols(x))
        })
    }

    /// `λ ↦ e^{icλ}·I`, the kernel of the group reconstruction.
    pub fn exponential(dim: usize, c: f64) -> Self {
        Self::scalar(dim, move |x| C64::from_polar(1.0, c * x)).with_continuity(Continuity::Continuous)
    }

    /// `λ ↦ λ·I`.
    pub fn identity_scalar(dim: usize) -> Self {
        Self::scalar(dim, |x| C64::new(x, 0.0)).with_continuity(Continuity::Continuous)
    }

    pub fn with_continuity(mut self, continuity: Continuity) -> Self {
        self.continuity = continuity;
        self
    }

    pub fn with_domain(mut self, domain: Support) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_kind(mut self, kind: FunctionKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    pub fn continuity(&self) -> Continuity {
        self.continuity
    }

    pub fn domain(&self) -> Support {
        self.domain
    }

    /// Raw evaluation without checks.
    pub fn evaluate(&self, lambda: f64) -> Operator {
        (self.eval)(lambda)
    }

    /// Evaluation with domain, dimension and finiteness checks.
    pub fn try_evaluate(&self, lambda: f64) -> Result<Operator> {
        if !self.domain.contains(lambda) {
            return Err(Error::Evaluation {
                at: lambda,
                reason: format!("outside the domain [{}, {}]", self.domain.lo, self.domain.hi),
            });
        }
        let value = self.evaluate(lambda);
        if value.dim() != self.dim {
            return Err(Error::Evaluation {
                at: lambda,
                reason: format!("returned dimension {} instead of {}", value.dim(), self.dim),
            });
        }
        if !value.is_finite() {
            return Err(Error::Evaluation {
                at: lambda,
                reason: "non-finite value".into(),
            });
        }
        Ok(value)
    }

    /// `λ ↦ Φ(f(λ))`. Continuity is kept, which is right for continuous
    /// increasing `f`.
    pub fn compose(&self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let inner = self.clone();
        Self {
            dim: self.dim,
            kind: self.kind,
            continuity: self.continuity,
            domain: Support::unbounded(),
            eval: Arc::new(move |x| inner.evaluate(f(x))),
        }
    }

    /// Pointwise sum; continuity is the weaker of the two.
    pub fn add(&self, other: &OperatorFunction) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let (f, g) = (self.clone(), other.clone());
        let continuity = match (self.continuity, other.continuity) {
            (Continuity::Continuous, c) | (c, Continuity::Continuous) => c,
            (Continuity::LeftContinuous, Continuity::LeftContinuous) => Continuity::LeftContinuous,
            _ => Continuity::Unknown,
        };
        let kind = if self.kind == other.kind {
            self.kind
        } else {
            FunctionKind::Piecewise
        };
        Ok(Self {
            dim: self.dim,
            kind,
            continuity,
            domain: Support {
                lo: self.domain.lo.max(other.domain.lo),
                hi: self.domain.hi.min(other.domain.hi),
            },
            eval: Arc::new(move |x| &f.evaluate(x) + &g.evaluate(x)),
        })
    }

    /// `λ ↦ A·Φ(λ)`.
    pub fn left_mul(&self, a: &Operator) -> Result<Self> {
        if a.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: a.dim(),
            });
        }
        let (f, a) = (self.clone(), a.clone());
        Ok(Self {
            eval: Arc::new(move |x| &a * &f.evaluate(x)),
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builders_evaluate() {
        let c = OperatorFunction::constant(Operator::from_real_diagonal(&[1.0, 2.0]));
        assert_eq!(c.evaluate(5.0), Operator::from_real_diagonal(&[1.0, 2.0]));
        assert_eq!(c.continuity(), Continuity::Continuous);
        let e = OperatorFunction::exponential(2, std::f64::consts::PI);
        assert!((e.evaluate(1.0).entry(0, 0) + 1.0).norm() < 1e-15);
        let d = OperatorFunction::diagonal(2, |x| vec![C64::new(x, 0.0), C64::new(0.0, x)]);
        assert_eq!(d.evaluate(2.0).entry(1, 1), C64::new(0.0, 2.0));
        let s = c.add(&d).unwrap();
        assert_eq!(s.kind(), FunctionKind::Piecewise);
        assert_eq!(s.continuity(), Continuity::Unknown);
    }

    #[test]
    fn try_evaluate_reports_failures() {
        let f = OperatorFunction::scalar(1, |x| C64::new(1.0 / x, 0.0));
        assert!(matches!(f.try_evaluate(0.0), Err(Error::Evaluation { .. })));
        let g = OperatorFunction::identity_scalar(1).with_domain(Support::new(0.0, 1.0).unwrap());
        assert!(g.try_evaluate(2.0).is_err());
        assert!(g.try_evaluate(0.5).is_ok());
        let wrong = OperatorFunction::new(2, FunctionKind::Piecewise, |_| Operator::identity(3));
        assert!(wrong.try_evaluate(0.0).is_err());
    }

    #[test]
    fn compose_and_left_mul() {
        let f = OperatorFunction::identity_scalar(2).compose(|x| x * x);
        assert_eq!(f.evaluate(3.0).entry(0, 0).re, 9.0);
        let p = Operator::from_real_diagonal(&[1.0, 0.0]);
        let g = f.left_mul(&p).unwrap();
        assert_eq!(g.evaluate(2.0), Operator::from_real_diagonal(&[4.0, 0.0]));
    }
}
