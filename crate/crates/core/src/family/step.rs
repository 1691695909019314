use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{NormSpec, Operator};

/// Default tolerance for projection, order-law and completeness checks.
pub const FAMILY_TOL: f64 = 1e-10;

/// Closed interval `[lo, hi]` on which a family is concentrated; either end
/// may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn unbounded() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// One jump `(λ_j, ΔE_j)` of a step family.
#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub lambda: f64,
    pub delta: Operator,
}

impl Jump {
    pub fn new(lambda: f64, delta: Operator) -> Self {
        Self { lambda, delta }
    }
}

/// A spectral family that is piecewise constant:
/// `E(λ) = Σ_{λ_j ≤ λ} ΔE_j`.
///
/// The `≤` makes the family right continuous; left limits exist trivially.
#[derive(Debug, Clone)]
pub struct StepSpectralFamily {
    dim: usize,
    support: Support,
    jumps: Vec<Jump>,
    cumulative: Vec<Operator>,
    sup_norm: OnceLock<f64>,
}

impl StepSpectralFamily {
    pub fn new(support: Support, jumps: Vec<Jump>) -> Result<Self> {
        Self::with_tolerance(support, jumps, FAMILY_TOL)
    }

    /// Validates the jumps: cumulative values are projections, consecutive
    /// values obey `E(λ)E(μ) = E(μ)E(λ) = E(λ)` for `λ ≤ μ`, and the jumps
    /// add up to the identity. The order law on non-adjacent pairs follows
    /// algebraically from the adjacent one. Residuals are measured in the
    /// Frobenius norm, which dominates the 2-norm.
    pub fn with_tolerance(support: Support, jumps: Vec<Jump>, tol: f64) -> Result<Self> {
        let first = jumps
            .first()
            .ok_or_else(|| Error::InvalidFamily("a step family needs at least one jump".into()))?;
        let dim = first.delta.dim();
        for w in jumps.windows(2) {
            if !(w[0].lambda < w[1].lambda) {
                return Err(Error::InvalidFamily(format!(
                    "jump locations must increase strictly: {} then {}",
                    w[0].lambda, w[1].lambda
                )));
            }
        }
        for j in &jumps {
            if !j.lambda.is_finite() {
                return Err(Error::InvalidFamily("jump location must be finite".into()));
            }
            if j.delta.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: j.delta.dim(),
                });
            }
            if !support.contains(j.lambda) {
                return Err(Error::InvalidFamily(format!(
                    "jump at {} lies outside the support [{}, {}]",
                    j.lambda, support.lo, support.hi
                )));
            }
        }

        let mut cumulative = Vec::with_capacity(jumps.len());
        let mut acc = Operator::zeros(dim);
        for j in &jumps {
            acc += &j.delta;
            cumulative.push(acc.clone());
        }
        for (j, e) in jumps.iter().zip(&cumulative) {
            let r = (&(e * e) - e).frobenius_norm();
            if r > tol {
                return Err(Error::InvalidFamily(format!(
                    "E({}) is not a projection (residual {r:e})",
                    j.lambda
                )));
            }
        }
        for (k, w) in cumulative.windows(2).enumerate() {
            let (lo, hi) = (&w[0], &w[1]);
            let r = (&(lo * hi) - lo)
                .frobenius_norm()
                .max((&(hi * lo) - lo).frobenius_norm());
            if r > tol {
                return Err(Error::InvalidFamily(format!(
                    "order law fails between {} and {} (residual {r:e})",
                    jumps[k].lambda,
                    jumps[k + 1].lambda
                )));
            }
        }
        let total = cumulative.last().expect("nonempty");
        let r = (total - &Operator::identity(dim)).frobenius_norm();
        if r > tol {
            return Err(Error::InvalidFamily(format!(
                "jumps do not sum to the identity (residual {r:e})"
            )));
        }
        Ok(Self {
            dim,
            support,
            jumps,
            cumulative,
            sup_norm: OnceLock::new(),
        })
    }

    /// Support spanning exactly the first and last jump.
    pub fn from_jumps(jumps: Vec<Jump>) -> Result<Self> {
        let lo = jumps.first().map(|j| j.lambda).unwrap_or(0.0);
        let hi = jumps.last().map(|j| j.lambda).unwrap_or(0.0);
        Self::new(Support::new(lo, hi)?, jumps)
    }

    /// Unit step at `at`: `E(λ) = 0` for `λ < at`, `I` afterwards.
    pub fn unit_step(dim: usize, at: f64, support: Support) -> Result<Self> {
        Self::new(support, vec![Jump::new(at, Operator::identity(dim))])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.jumps.iter().map(|j| j.lambda).collect()
    }

    /// `sup_λ ‖E(λ)‖₂`, attained at a breakpoint.
    pub fn sup_norm(&self) -> f64 {
        *self.sup_norm.get_or_init(|| {
            self.cumulative
                .iter()
                .map(|e| e.norm(NormSpec::EUCLIDEAN))
                .fold(0.0, f64::max)
        })
    }

    /// `E(λ_k)` for the `k`-th jump.
    pub fn cumulative_at(&self, k: usize) -> &Operator {
        &self.cumulative[k]
    }

    /// Index of the last jump at or before `lambda`.
    fn last_index_at_or_before(&self, lambda: f64) -> Option<usize> {
        let k = self.jumps.partition_point(|j| j.lambda <= lambda);
        k.checked_sub(1)
    }

    pub fn evaluate(&self, lambda: f64) -> Operator {
        match self.last_index_at_or_before(lambda) {
            Some(k) => self.cumulative[k].clone(),
            None => Operator::zeros(self.dim),
        }
    }

    /// Left limit `E(λ⁻)`.
    pub fn left_limit(&self, lambda: f64) -> Operator {
        let k = self.jumps.partition_point(|j| j.lambda < lambda);
        match k.checked_sub(1) {
            Some(k) => self.cumulative[k].clone(),
            None => Operator::zeros(self.dim),
        }
    }

    /// Jumps with `lo < λ_j ≤ hi`.
    pub fn jumps_in(&self, lo: f64, hi: f64) -> impl Iterator<Item = &Jump> {
        let start = self.jumps.partition_point(|j| j.lambda <= lo);
        let end = self.jumps.partition_point(|j| j.lambda <= hi);
        self.jumps[start..end.max(start)].iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s2() -> StepSpectralFamily {
        StepSpectralFamily::new(
            Support::new(0.0, 1.0).unwrap(),
            vec![
                Jump::new(0.5, Operator::from_real_diagonal(&[1.0, 0.0])),
                Jump::new(1.0, Operator::from_real_diagonal(&[0.0, 1.0])),
            ],
        )
        .unwrap()
    }

    #[test]
    fn evaluates_cumulative_sums() {
        let f = s2();
        assert_eq!(f.evaluate(0.7), Operator::from_real_diagonal(&[1.0, 0.0]));
        assert_eq!(f.evaluate(-1.0), Operator::zeros(2));
        assert_eq!(f.evaluate(1.0), Operator::identity(2));
        assert_eq!(f.evaluate(0.5), Operator::from_real_diagonal(&[1.0, 0.0]));
        assert_eq!(f.left_limit(0.5), Operator::zeros(2));
        assert_eq!(f.sup_norm(), 1.0);
    }

    #[test]
    fn jumps_in_is_half_open() {
        let f = s2();
        let locs: Vec<f64> = f.jumps_in(0.5, 1.0).map(|j| j.lambda).collect();
        assert_eq!(locs, vec![1.0]);
        let locs: Vec<f64> = f.jumps_in(0.0, 0.5).map(|j| j.lambda).collect();
        assert_eq!(locs, vec![0.5]);
        assert_eq!(f.jumps_in(1.0, 2.0).count(), 0);
    }

    #[test]
    fn rejects_incomplete_and_unordered() {
        let sup = Support::new(0.0, 1.0).unwrap();
        let half = Operator::from_real_diagonal(&[1.0, 0.0]);
        assert!(StepSpectralFamily::new(sup, vec![Jump::new(0.5, half.clone())]).is_err());
        assert!(StepSpectralFamily::new(
            sup,
            vec![
                Jump::new(0.7, half.clone()),
                Jump::new(0.2, Operator::from_real_diagonal(&[0.0, 1.0])),
            ]
        )
        .is_err());
        assert!(StepSpectralFamily::new(sup, vec![Jump::new(2.0, Operator::identity(2))]).is_err());
    }

    #[test]
    fn rejects_non_commuting_cumulative_values() {
        // E(0) = diag(1,0), E(1) = diag(1,0) + Q − diag(1,0) = Q, not ordered.
        let p = Operator::from_real_diagonal(&[1.0, 0.0]);
        let q = Operator::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        let jumps = vec![
            Jump::new(0.0, p.clone()),
            Jump::new(1.0, &q - &p),
            Jump::new(2.0, &Operator::identity(2) - &q),
        ];
        let err = StepSpectralFamily::new(Support::new(0.0, 2.0).unwrap(), jumps).unwrap_err();
        assert!(err.to_string().contains("order law"), "{err}");
    }
}
