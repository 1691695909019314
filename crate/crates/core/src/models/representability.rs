//! Distance of an operator from the scalar multiples `Σ c_n P_n`, block by
//! block.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::ProjectionSequence;
use crate::operator::{NormSpec, Operator, C64};

/// Commutation tolerance (Frobenius) for the precondition `V P_n = P_n V`.
pub const COMMUTATION_TOL: f64 = 1e-10;

/// Points per axis of the search grid for non-diagonal blocks.
const GRID: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterMethod {
    /// Diagonal block: smallest disc containing its entries.
    EnclosingCircle,
    /// General block: grid search with shrinking windows on the convex map
    /// `c ↦ ‖(V − cI)|ran P_n‖₂`.
    ConvexSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockResidual {
    pub n: i64,
    pub rank: usize,
    /// `r_n = min_c ‖(V − cI)|ran P_n‖`.
    pub residual: f64,
    /// Minimizing `c` as `[re, im]`.
    pub center: [f64; 2],
    pub method: CenterMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentabilityReport {
    pub blocks: Vec<BlockResidual>,
    /// `max_n r_n` (0 when every block is empty).
    pub max_residual: f64,
}

impl RepresentabilityReport {
    /// `V = Σ c_n P_n` up to `tol` on every block.
    pub fn representable(&self, tol: f64) -> bool {
        self.max_residual <= tol
    }
}

/// Smallest closed disc containing `points`, as `(center, radius)`.
///
/// Exhaustive over the discs spanned by two or three of the points, one of
/// which is always the minimal one.
pub fn minimal_enclosing_circle(points: &[C64]) -> (C64, f64) {
    let mut pts: Vec<C64> = Vec::new();
    for &z in points {
        if !pts.iter().any(|&w| (w - z).norm() <= 1e-15) {
            pts.push(z);
        }
    }
    match pts.len() {
        0 => return (C64::new(0.0, 0.0), 0.0),
        1 => return (pts[0], 0.0),
        _ => {}
    }
    let covers = |c: C64, r: f64| pts.iter().all(|&z| (z - c).norm() <= r * (1.0 + 1e-12) + 1e-15);
    let mut best: Option<(C64, f64)> = None;
    let mut consider = |c: C64, r: f64| {
        if best.is_none_or(|(_, b)| r < b) && covers(c, r) {
            best = Some((c, r));
        }
    };
    let k = pts.len();
    for i in 0..k {
        for j in i + 1..k {
            let c = (pts[i] + pts[j]) * 0.5;
            consider(c, (pts[i] - c).norm());
            for l in j + 1..k {
                if let Some(c) = circumcenter(pts[i], pts[j], pts[l]) {
                    let r = (pts[i] - c).norm().max((pts[j] - c).norm()).max((pts[l] - c).norm());
                    consider(c, r);
                }
            }
        }
    }
    best.expect("the diametral disc of the farthest pair covers all points")
}

fn circumcenter(a: C64, b: C64, c: C64) -> Option<C64> {
    let (b, c) = (b - a, c - a);
    let d = 2.0 * (b.re * c.im - b.im * c.re);
    if d.abs() <= 1e-14 * b.norm() * c.norm() {
        return None;
    }
    let (nb, nc) = (b.norm_sqr(), c.norm_sqr());
    let x = (c.im * nb - b.im * nc) / d;
    let y = (b.re * nc - c.re * nb) / d;
    Some(a + C64::new(x, y))
}

/// Coordinates of a diagonal 0/1 projection, if it is one.
fn coordinate_support(pn: &Operator) -> Option<Vec<usize>> {
    if !pn.is_diagonal(0.0) {
        return None;
    }
    let d = pn.diagonal();
    if d.iter().all(|z| *z == C64::new(0.0, 0.0) || *z == C64::new(1.0, 0.0)) {
        Some((0..d.len()).filter(|&j| d[j].re == 1.0).collect())
    } else {
        None
    }
}

/// Orthonormal basis of `ran P_n` as the columns of a matrix.
fn range_basis(pn: &Operator) -> DMatrix<C64> {
    let svd = pn.matrix().clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-8)
        .collect();
    DMatrix::from_fn(u.nrows(), cols.len(), |i, j| u[(i, cols[j])])
}

fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

fn convex_search(v: &Operator, basis: &DMatrix<C64>) -> (C64, f64) {
    let vb = v.matrix() * basis;
    let k = basis.ncols();
    let f = |c: C64| spectral_norm(&(&vb - basis * c));
    let compressed = basis.adjoint() * &vb;
    let mut center = compressed.trace() / C64::new(k as f64, 0.0);
    let mut value = f(center);
    // The minimizer lies within `value` of any point of the numerical range.
    let mut half = value;
    let floor = 1e-11 * value.max(1.0);
    while half > floor {
        let step = 2.0 * half / (GRID - 1) as f64;
        let origin = center - C64::new(half, half);
        let (mut best_c, mut best_v) = (center, value);
        for i in 0..GRID {
            for j in 0..GRID {
                let c = origin + C64::new(i as f64 * step, j as f64 * step);
                let fc = f(c);
                if fc < best_v {
                    best_c = c;
                    best_v = fc;
                }
            }
        }
        center = best_c;
        value = best_v;
        half *= 0.4;
    }
    (center, value)
}

/// For every `n` with `P_n ≠ 0`, the distance `r_n` of `V|ran P_n` from the
/// scalars, measured in `ns`.
///
/// Diagonal blocks (coordinate `P_n`, diagonal restriction of `V`) are exact
/// in every induced `p`-norm. Other blocks are supported for `p = 2` only.
pub fn scalar_representability_test(v: &Operator, p: &ProjectionSequence, ns: NormSpec) -> Result<RepresentabilityReport> {
    v.check_dim(&p.get_or_zero(0))?;
    let mut blocks = Vec::new();
    for (n, pn) in p.iter() {
        let residual = (&(v * pn) - &(pn * v)).frobenius_norm();
        if residual > COMMUTATION_TOL {
            return Err(Error::Commutation {
                n,
                lambda: n as f64,
                residual,
            });
        }
        if pn.max_abs() == 0.0 {
            continue;
        }
        let diagonal_block = coordinate_support(pn).filter(|coords| {
            let scale = v.max_abs().max(1.0);
            coords
                .iter()
                .all(|&i| coords.iter().all(|&j| i == j || v.entry(i, j).norm() <= 1e-14 * scale))
        });
        let (center, residual, rank, method) = match diagonal_block {
            Some(coords) => {
                let pts: Vec<C64> = coords.iter().map(|&j| v.entry(j, j)).collect();
                let (c, r) = minimal_enclosing_circle(&pts);
                (c, r, coords.len(), CenterMethod::EnclosingCircle)
            }
            None if ns.is_two() => {
                let basis = range_basis(pn);
                let (c, r) = convex_search(v, &basis);
                (c, r, basis.ncols(), CenterMethod::ConvexSearch)
            }
            None => {
                return Err(Error::Unsupported(format!(
                    "non-diagonal block {n} in the {}-norm",
                    ns.p()
                )))
            }
        };
        blocks.push(BlockResidual {
            n,
            rank,
            residual,
            center: [center.re, center.im],
            method,
        });
    }
    let max_residual = blocks.iter().map(|b| b.residual).fold(0.0, f64::max);
    Ok(RepresentabilityReport { blocks, max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::random::{rng_from_seed, Similarity};
    use crate::models::torus::build_torus_model;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn enclosing_circles() {
        let i = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        let (c, r) = minimal_enclosing_circle(&[-i, one, i]);
        assert!((r - 1.0).abs() < 1e-15 && c.norm() < 1e-15);
        let (c, r) = minimal_enclosing_circle(&[one, one]);
        assert_eq!((c, r), (one, 0.0));
        // Equilateral triangle inscribed in the unit circle.
        let tri: Vec<C64> = (0..3).map(|k| C64::from_polar(1.0, k as f64 * 2.0944)).collect();
        let (_, r) = minimal_enclosing_circle(&tri);
        assert!((r - 1.0).abs() < 1e-4);
        let (c, r) = minimal_enclosing_circle(&[C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(1.0, 0.1)]);
        assert!((r - 1.0).abs() < 1e-15 && (c - one).norm() < 1e-15);
    }

    #[test]
    fn torus_blocks_are_not_scalar() {
        let m = build_torus_model(1, 1, FRAC_PI_2).unwrap();
        for ns in [NormSpec::EUCLIDEAN, NormSpec::ONE] {
            let r = scalar_representability_test(&m.v, &m.p, ns).unwrap();
            assert_eq!(r.blocks.len(), 3);
            assert!((r.max_residual - 1.0).abs() < 1e-12);
            assert!(!r.representable(1e-8));
            assert!(r.blocks.iter().all(|b| b.method == CenterMethod::EnclosingCircle && b.rank == 3));
        }
    }

    #[test]
    fn scalar_combinations_are_representable() {
        let mut rng = rng_from_seed(1);
        let sim = Similarity::random(&mut rng, 5);
        let cells = [0usize, 0, 1, 2, 2];
        let p = ProjectionSequence::new(
            1,
            (0..3).map(|c| sim.projection((0..5).filter(|&j| cells[j] == c))).collect(),
        )
        .unwrap();
        let coeffs = [C64::new(1.0, 2.0), C64::new(-0.5, 0.0), C64::new(0.0, 3.0)];
        let v = Operator::sum(
            5,
            &p.iter().map(|(n, pn)| pn.scale(coeffs[(n + 1) as usize])).collect::<Vec<_>>(),
        );
        let r = scalar_representability_test(&v, &p, NormSpec::EUCLIDEAN).unwrap();
        assert!(r.representable(1e-9), "{}", r.max_residual);
        assert!(r.blocks.iter().all(|b| b.method == CenterMethod::ConvexSearch));
        assert!(matches!(
            scalar_representability_test(&v, &p, NormSpec::ONE),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn oblique_blocks_match_the_eigenvalue_bound() {
        // V = S diag(d) S⁻¹ on a single block: the residual is at least the
        // enclosing radius of the eigenvalues.
        let mut rng = rng_from_seed(2);
        let sim = Similarity::random(&mut rng, 3);
        let d = [C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 0.5)];
        let v = sim.conjugate(&d);
        let p = ProjectionSequence::new(0, vec![Operator::identity(3)]).unwrap();
        let r = scalar_representability_test(&v, &p, NormSpec::EUCLIDEAN).unwrap();
        let (_, radius) = minimal_enclosing_circle(&d);
        assert!(r.max_residual >= radius - 1e-9);
    }

    #[test]
    fn one_dimensional_blocks() {
        let v = Operator::from_diagonal(&[C64::new(3.0, 1.0), C64::new(-2.0, 0.0)]);
        let p = ProjectionSequence::new(
            1,
            vec![
                Operator::coordinate_projection(2, [0]),
                Operator::zeros(2),
                Operator::coordinate_projection(2, [1]),
            ],
        )
        .unwrap();
        let r = scalar_representability_test(&v, &p, NormSpec::new(3.0).unwrap()).unwrap();
        assert_eq!(r.max_residual, 0.0);
        assert_eq!(r.blocks.len(), 2);
    }

    #[test]
    fn commutation_is_required() {
        let v = Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let p = ProjectionSequence::new(
            0,
            vec![Operator::identity(2)],
        )
        .unwrap();
        assert!(scalar_representability_test(&v, &p, NormSpec::EUCLIDEAN).is_ok());
        let p = ProjectionSequence::new(
            1,
            vec![Operator::coordinate_projection(2, [0]), Operator::coordinate_projection(2, [1]), Operator::zeros(2)],
        )
        .unwrap();
        assert!(matches!(
            scalar_representability_test(&v, &p, NormSpec::EUCLIDEAN),
            Err(Error::Commutation { .. })
        ));
    }
}
