use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{sample_grid, stone_compose, ProjectionSequence, SpectralFamilyView};
use crate::integration::{FunctionKind, OperatorFunction};
use crate::operator::{commutator_norm, NormSpec, Operator, Vector, C64};
use crate::stone::representation::cell_index;

/// Samples of `[0, 1]` used when checking properties of `Φ₁`.
const INTEGRAND_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutationCheck {
    pub holds: bool,
    pub worst_residual: f64,
}

impl CommutationCheck {
    fn from_residual(worst_residual: f64, tol: f64) -> Self {
        Self {
            holds: worst_residual <= tol,
            worst_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralizerReport {
    pub with_e1: CommutationCheck,
    pub with_projections: CommutationCheck,
    pub with_composed: CommutationCheck,
}

impl CentralizerReport {
    /// Membership in `C(Ẽ₁) ∩ C({P_n})`.
    pub fn member(&self) -> bool {
        self.with_e1.holds && self.with_projections.holds
    }

    /// Commuting with the composed family agrees with commuting with both
    /// ingredients. Guaranteed when `Ẽ₁` has no mass at `1`; a jump at `1`
    /// lets neighbouring blocks merge at the integers.
    pub fn consistent(&self) -> bool {
        self.with_composed.holds == self.member()
    }
}

/// Points where a family takes every value it has on `[lo, hi]`: the
/// breakpoints and the midpoints between them, or a uniform sample when the
/// breakpoints are unknown.
fn value_points(f: &SpectralFamilyView, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = vec![lo];
    pts.extend(f.breakpoints_inside(lo, hi));
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if f.breakpoints().is_empty() {
        return sample_grid(lo, hi, 257, &[]);
    }
    let mids: Vec<f64> = pts.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    pts.extend(mids);
    pts.push(lo - 0.5);
    pts.sort_by(f64::total_cmp);
    pts
}

fn worst_commutator(v: &Operator, ops: impl Iterator<Item = Operator>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for op in ops {
        worst = worst.max(commutator_norm(v, &op, NormSpec::EUCLIDEAN)?);
    }
    Ok(worst)
}

/// Tests `V` against `Ẽ₁`, against every `P_n`, and against the composed
/// family `E`.
pub fn centralizer_membership(
    v: &Operator,
    e1: &SpectralFamilyView,
    p: &ProjectionSequence,
    tol: f64,
) -> Result<CentralizerReport> {
    v.check_dim(&e1.evaluate(0.0))?;
    v.check_dim(&p.get_or_zero(0))?;
    let e = stone_compose(p, e1)?;
    let with_e1 = worst_commutator(v, value_points(e1, 0.0, 1.0).into_iter().map(|s| e1.evaluate(s)))?;
    let with_projections = worst_commutator(v, p.iter().map(|(_, pn)| pn.clone()))?;
    let sup = e.support();
    let with_composed = worst_commutator(v, value_points(&e, sup.lo, sup.hi).into_iter().map(|s| e.evaluate(s)))?;
    Ok(CentralizerReport {
        with_e1: CommutationCheck::from_residual(with_e1, tol),
        with_projections: CommutationCheck::from_residual(with_projections, tol),
        with_composed: CommutationCheck::from_residual(with_composed, tol),
    })
}

fn integrand_samples() -> Vec<f64> {
    sample_grid(0.0, 1.0, INTEGRAND_SAMPLES, &[])
}

/// `Φ(λ) = P_n Φ₁(λ − n)` for `λ ∈ (n, n+1]`: an integrand that reduces every
/// `P_n X`.
///
/// Every sampled `Φ₁(s)` must commute with every `P_n` within `tol`.
pub fn reduced_integrand(phi1: &OperatorFunction, p: &ProjectionSequence, tol: f64) -> Result<OperatorFunction> {
    if phi1.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: phi1.dim(),
        });
    }
    for s in integrand_samples() {
        let value = phi1.try_evaluate(s)?;
        for (n, pn) in p.iter() {
            let residual = (&(&value * pn) - &(pn * &value)).frobenius_norm();
            if residual > tol {
                return Err(Error::Commutation {
                    n,
                    lambda: s,
                    residual,
                });
            }
        }
    }
    let base = phi1.clone();
    let seq = p.clone();
    Ok(OperatorFunction::new(p.dim(), FunctionKind::PeriodicExtension, move |lambda| {
        let n = cell_index(lambda);
        match seq.get(n) {
            Some(pn) => pn * &base.evaluate(lambda - n as f64),
            None => Operator::zeros(seq.dim()),
        }
    }))
}

/// `φ(λ) = φ_n(λ − n)` for `λ ∈ (n, n+1]`, as a scalar multiple of `I`.
///
/// First checks `Φ₁(s)x = Σ_n φ_n(s) P_n x` for each `x` in `basis` (a basis
/// of the subspace `Y`) on sampled `s`, block by block:
/// `‖P_n Φ₁(s) x − φ_n(s) P_n x‖ ≤ tol`. The first failing basis vector is
/// reported with the block carrying the largest residual.
pub fn scalar_integrand(
    phi1: &OperatorFunction,
    symbols: impl Fn(i64, f64) -> C64 + Send + Sync + 'static,
    p: &ProjectionSequence,
    basis: &[Vector],
    tol: f64,
) -> Result<OperatorFunction> {
    let dim = p.dim();
    if phi1.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: phi1.dim(),
        });
    }
    if let Some(x) = basis.iter().find(|x| x.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: x.dim(),
        });
    }
    let ns = NormSpec::EUCLIDEAN;
    let samples = integrand_samples();
    for (idx, x) in basis.iter().enumerate() {
        for &s in &samples {
            let image = phi1.try_evaluate(s)?.apply(x);
            let mut worst = (0, 0.0);
            for (n, pn) in p.iter() {
                let residual = pn.apply(&image).sub(&pn.apply(x).scale(symbols(n, s))).norm(ns);
                if residual > worst.1 {
                    worst = (n, residual);
                }
            }
            if worst.1 > tol {
                return Err(Error::Decomposition {
                    basis: idx,
                    n: worst.0,
                    residual: worst.1,
                });
            }
        }
    }
    Ok(OperatorFunction::scalar(dim, move |lambda| {
        let n = cell_index(lambda);
        symbols(n, lambda - n as f64)
    })
    .with_kind(FunctionKind::PeriodicExtension))
}
