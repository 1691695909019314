use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::view::SpectralFamilyView;
use crate::operator::{projection_residual, NormSpec, Operator};

/// The defining conditions of a spectral family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    /// `sup_λ ‖E(λ)‖ < ∞`.
    UniformBound,
    /// Each `E(λ)` is a projection.
    ProjectionValued,
    /// `E(λ)E(μ) = E(μ)E(λ) = E(min{λ, μ})`.
    MonotoneCommuting,
    /// `E(λ + ε) → E(λ)` as `ε ↓ 0`.
    RightContinuous,
    /// `E(λ − ε)` is Cauchy as `ε ↓ 0`.
    LeftLimits,
    /// `E → 0` at `−∞` and `E → I` at `+∞`.
    EndLimits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub passed: bool,
    /// Worst residual seen; for [`Axiom::UniformBound`] the sup norm itself.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
    pub sup_norm: f64,
    pub grid_size: usize,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, axiom: Axiom) -> &AxiomCheck {
        self.checks
            .iter()
            .find(|c| c.axiom == axiom)
            .expect("every axiom is checked")
    }

    pub fn worst_residual(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.axiom != Axiom::UniformBound)
            .map(|c| c.residual)
            .fold(0.0, f64::max)
    }
}

const OFFSETS: [f64; 4] = [1e-3, 1e-6, 1e-9, 1e-12];

/// Checks the spectral-family conditions on a sorted grid of sample points.
///
/// One-sided behaviour is probed at offsets `{1e-3, 1e-6, 1e-9, 1e-12}`
/// (scaled by the grid's magnitude); the end limits are probed well outside
/// the grid and the family's support.
pub fn verify_axioms(f: &SpectralFamilyView, grid: &[f64], tol: f64) -> Result<AxiomReport> {
    if grid.is_empty() {
        return Err(Error::InvalidPartition("axiom grid is empty".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidPartition("axiom grid must be finite and sorted".into()));
    }
    let ns = NormSpec::EUCLIDEAN;
    let dim = f.dim();
    let values: Vec<Operator> = grid.iter().map(|&x| f.evaluate(x)).collect();
    let scale = grid
        .iter()
        .map(|x| x.abs())
        .fold(1.0, f64::max);

    let sup_norm = values.iter().map(|e| e.norm(ns)).fold(0.0, f64::max);
    let projection = values.iter().map(projection_residual).fold(0.0, f64::max);

    let mut ordering: f64 = 0.0;
    for (i, lo) in values.iter().enumerate() {
        for hi in &values[i..] {
            ordering = ordering
                .max((lo * hi).distance(lo, ns))
                .max((hi * lo).distance(lo, ns));
        }
    }

    let mut right: f64 = 0.0;
    let mut left: f64 = 0.0;
    for (&x, value) in grid.iter().zip(&values) {
        let h = *OFFSETS.last().expect("nonempty") * scale;
        right = right.max(f.evaluate(x + h).distance(value, ns));
        let k = OFFSETS.len();
        let near = f.evaluate(x - OFFSETS[k - 1] * scale);
        let nearer = f.evaluate(x - OFFSETS[k - 2] * scale);
        left = left.max(near.distance(&nearer, ns));
    }

    let sup = f.support();
    let span = grid[grid.len() - 1] - grid[0] + 1.0;
    let far_lo = [grid[0] - span, sup.lo - 1.0, -1e12]
        .into_iter()
        .filter(|x| x.is_finite())
        .fold(f64::INFINITY, f64::min);
    let far_hi = [grid[grid.len() - 1] + span, sup.hi + 1.0, 1e12]
        .into_iter()
        .filter(|x| x.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let end = f
        .evaluate(far_lo)
        .norm(ns)
        .max(f.evaluate(far_hi).distance(&Operator::identity(dim), ns));

    let check = |axiom, residual: f64| AxiomCheck {
        axiom,
        passed: residual <= tol,
        residual,
    };
    let checks = vec![
        AxiomCheck {
            axiom: Axiom::UniformBound,
            passed: sup_norm.is_finite(),
            residual: sup_norm,
        },
        check(Axiom::ProjectionValued, projection),
        check(Axiom::MonotoneCommuting, ordering),
        check(Axiom::RightContinuous, right),
        check(Axiom::LeftLimits, left),
        check(Axiom::EndLimits, end),
    ];
    Ok(AxiomReport {
        checks,
        sup_norm,
        grid_size: grid.len(),
    })
}

/// Sample grid covering `[lo, hi]` uniformly plus the given breakpoints and
/// points just left of them.
pub fn sample_grid(lo: f64, hi: f64, samples: usize, breakpoints: &[f64]) -> Vec<f64> {
    let samples = samples.max(2);
    let mut grid: Vec<f64> = (0..samples)
        .map(|k| lo + (hi - lo) * k as f64 / (samples - 1) as f64)
        .collect();
    for &b in breakpoints {
        grid.push(b);
        grid.push(b - 1e-7 * b.abs().max(1.0));
    }
    grid.retain(|x| x.is_finite());
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}
