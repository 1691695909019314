use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::SpectralFamilyView;
use crate::integration::function::OperatorFunction;
use crate::operator::{NormSpec, Operator};

/// Either kind of operator-valued function whose variation can be measured.
#[derive(Debug, Clone, Copy)]
pub enum VariationSubject<'a> {
    Function(&'a OperatorFunction),
    Family(&'a SpectralFamilyView),
}

impl<'a> From<&'a OperatorFunction> for VariationSubject<'a> {
    fn from(f: &'a OperatorFunction) -> Self {
        VariationSubject::Function(f)
    }
}

impl<'a> From<&'a SpectralFamilyView> for VariationSubject<'a> {
    fn from(f: &'a SpectralFamilyView) -> Self {
        VariationSubject::Family(f)
    }
}

impl VariationSubject<'_> {
    fn evaluate(&self, x: f64) -> Operator {
        match self {
            VariationSubject::Function(f) => f.evaluate(x),
            VariationSubject::Family(f) => f.evaluate(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    /// `var(F, [a, b])`.
    pub variation: f64,
    /// `|||F||| = ‖F(b)‖ + var(F, [a, b])`.
    pub total: f64,
    /// Whether `variation` is exact (step data) rather than a lower bound.
    pub exact: bool,
}

/// Variation of `F` over `[a, b]` in the 2-norm.
///
/// For step families the exact value `Σ_{λ_j ∈ (a, b]} ‖ΔE_j‖` is used;
/// otherwise the supremum over dyadic partitions with up to `2^depth` cells,
/// which is nondecreasing in `depth`.
pub fn variation_norm<'a>(
    f: impl Into<VariationSubject<'a>>,
    a: f64,
    b: f64,
    depth: u32,
) -> Result<Variation> {
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::InvalidInterval { lo: a, hi: b });
    }
    let ns = NormSpec::EUCLIDEAN;
    let f = f.into();
    let end = f.evaluate(b).norm(ns);
    if let VariationSubject::Family(view) = f {
        if let Some(step) = view.step() {
            let variation = step.jumps_in(a, b).map(|j| j.delta.norm(ns)).sum();
            return Ok(Variation {
                variation,
                total: end + variation,
                exact: true,
            });
        }
    }
    let mut best: f64 = 0.0;
    for k in 0..=depth.min(24) {
        let m = 1u64 << k;
        let mut prev = f.evaluate(a);
        let mut sum = 0.0;
        for i in 1..=m {
            let x = if i == m { b } else { a + (b - a) * i as f64 / m as f64 };
            let next = f.evaluate(x);
            sum += next.distance(&prev, ns);
            prev = next;
        }
        best = best.max(sum);
    }
    Ok(Variation {
        variation: best,
        total: end + best,
        exact: false,
    })
}
