use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::family::step::FAMILY_TOL;
use crate::operator::Operator;

/// Truncated sequence `{P_n}_{n=-N}^{N}` of pairwise annihilating
/// projections with `Σ P_n = I` (residuals checked in the Frobenius norm).
#[derive(Debug, Clone)]
pub struct ProjectionSequence {
    radius: i64,
    projections: Vec<Operator>,
    /// `prefix[k] = Σ_{m ≤ k − N} P_m`, i.e. `prefix[n + N]` holds the sum up
    /// to and including `P_n`.
    prefix: Vec<Operator>,
}

impl ProjectionSequence {
    pub fn new(radius: i64, projections: Vec<Operator>) -> Result<Self> {
        Self::with_tolerance(radius, projections, FAMILY_TOL)
    }

    pub fn with_tolerance(radius: i64, projections: Vec<Operator>, tol: f64) -> Result<Self> {
        if radius < 0 {
            return Err(Error::InvalidSequence(format!("negative radius {radius}")));
        }
        let expected = (2 * radius + 1) as usize;
        if projections.len() != expected {
            return Err(Error::InvalidSequence(format!(
                "radius {radius} needs {expected} projections, got {}",
                projections.len()
            )));
        }
        let dim = projections[0].dim();
        for p in &projections {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
        }
        for (k, p) in projections.iter().enumerate() {
            let r = (&(p * p) - p).frobenius_norm();
            if r > tol {
                return Err(Error::InvalidSequence(format!(
                    "P_{} is not a projection (residual {r:e})",
                    k as i64 - radius
                )));
            }
        }
        for (i, p) in projections.iter().enumerate() {
            for (j, q) in projections.iter().enumerate().skip(i + 1) {
                let r = (p * q).frobenius_norm().max((q * p).frobenius_norm());
                if r > tol {
                    return Err(Error::InvalidSequence(format!(
                        "P_{} P_{} ≠ 0 (residual {r:e})",
                        i as i64 - radius,
                        j as i64 - radius
                    )));
                }
            }
        }
        let mut prefix = Vec::with_capacity(projections.len());
        let mut acc = Operator::zeros(dim);
        for p in &projections {
            acc += p;
            prefix.push(acc.clone());
        }
        let r = (&acc - &Operator::identity(dim)).frobenius_norm();
        if r > tol {
            return Err(Error::InvalidSequence(format!(
                "projections do not sum to the identity (residual {r:e})"
            )));
        }
        Ok(Self {
            radius,
            projections,
            prefix,
        })
    }

    /// The single-term sequence `P_0 = I`.
    pub fn trivial(dim: usize) -> Self {
        Self::new(0, vec![Operator::identity(dim)]).expect("identity is a valid sequence")
    }

    /// Truncation radius `N`.
    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.projections[0].dim()
    }

    pub fn indices(&self) -> RangeInclusive<i64> {
        -self.radius..=self.radius
    }

    pub fn get(&self, n: i64) -> Option<&Operator> {
        if n.abs() > self.radius {
            return None;
        }
        self.projections.get((n + self.radius) as usize)
    }

    /// `P_n`, or zero outside the truncation.
    pub fn get_or_zero(&self, n: i64) -> Operator {
        self.get(n)
            .cloned()
            .unwrap_or_else(|| Operator::zeros(self.dim()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &Operator)> {
        self.indices().zip(self.projections.iter())
    }

    /// `Σ_{m ≤ n} P_m`.
    pub fn cumulative(&self, n: i64) -> Operator {
        if n < -self.radius {
            Operator::zeros(self.dim())
        } else if n >= self.radius {
            self.prefix.last().expect("nonempty").clone()
        } else {
            self.prefix[(n + self.radius) as usize].clone()
        }
    }

    /// Indices whose projection is nonzero (max entry above `tol`).
    pub fn support_indices(&self, tol: f64) -> Vec<i64> {
        self.iter()
            .filter(|(_, p)| p.max_abs() > tol)
            .map(|(n, _)| n)
            .collect()
    }

    /// Numerical rank of `P_n` (its trace, which is exact for projections).
    pub fn rank(&self, n: i64) -> usize {
        self.get(n).map(|p| p.trace().re.round().max(0.0) as usize).unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_and_indexes() {
        let seq = ProjectionSequence::new(
            1,
            vec![
                Operator::from_real_diagonal(&[1.0, 0.0, 0.0]),
                Operator::from_real_diagonal(&[0.0, 1.0, 0.0]),
                Operator::from_real_diagonal(&[0.0, 0.0, 1.0]),
            ],
        )
        .unwrap();
        assert_eq!(seq.get(-1).unwrap().entry(0, 0).re, 1.0);
        assert!(seq.get(2).is_none());
        assert_eq!(seq.get_or_zero(5), Operator::zeros(3));
        assert_eq!(seq.cumulative(0), Operator::from_real_diagonal(&[1.0, 1.0, 0.0]));
        assert_eq!(seq.cumulative(-2), Operator::zeros(3));
        assert_eq!(seq.cumulative(9), Operator::identity(3));
        assert_eq!(seq.rank(1), 1);
        assert_eq!(seq.support_indices(1e-12), vec![-1, 0, 1]);
    }

    #[test]
    fn rejects_overlap_and_incomplete() {
        let overlap = ProjectionSequence::new(
            0,
            vec![Operator::from_real_diagonal(&[1.0, 0.0])],
        );
        assert!(overlap.is_err());
        let non_annihilating = ProjectionSequence::new(
            1,
            vec![
                Operator::from_real_diagonal(&[1.0, 0.0]),
                Operator::from_real_rows(&[&[1.0, 1.0], &[0.0, 0.0]]).unwrap(),
                Operator::zeros(2),
            ],
        );
        assert!(non_annihilating.is_err());
        assert!(ProjectionSequence::new(1, vec![Operator::identity(2)]).is_err());
    }
}
