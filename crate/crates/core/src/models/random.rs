//! Seeded generators for oblique step families, projection sequences and
//! integrands.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::family::{Jump, ProjectionSequence, SpectralFamilyView, StepSpectralFamily, Support};
use crate::integration::{Continuity, FunctionKind, OperatorFunction};
use crate::operator::{Operator, C64};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut impl Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
}

/// Entries uniform in the square `[−scale, scale]²`.
pub fn random_matrix(rng: &mut impl Rng, dim: usize, scale: f64) -> Operator {
    let rows: Vec<Vec<C64>> = (0..dim)
        .map(|_| (0..dim).map(|_| random_complex(rng) * scale).collect())
        .collect();
    Operator::from_rows(&rows).expect("finite square matrix")
}

/// A well-conditioned change of basis `S` with its inverse; conjugating
/// diagonal 0/1 matrices by it gives oblique projections.
#[derive(Debug, Clone)]
pub struct Similarity {
    pub s: Operator,
    pub s_inv: Operator,
}

impl Similarity {
    pub fn identity(dim: usize) -> Self {
        Self {
            s: Operator::identity(dim),
            s_inv: Operator::identity(dim),
        }
    }

    /// `S = I + (0.3/√d)·G` with `G` uniform in the unit square entrywise.
    pub fn random(rng: &mut impl Rng, dim: usize) -> Self {
        loop {
            let g = random_matrix(rng, dim, 0.3 / (dim as f64).sqrt());
            let s = &Operator::identity(dim) + &g;
            if let Some(s_inv) = s.inverse() {
                return Self { s, s_inv };
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    /// `S diag(d) S⁻¹`.
    pub fn conjugate(&self, d: &[C64]) -> Operator {
        &(&self.s * &Operator::from_diagonal(d)) * &self.s_inv
    }

    /// `S D S⁻¹` with `D` the indicator of `coords`.
    pub fn projection(&self, coords: impl IntoIterator<Item = usize>) -> Operator {
        let mut d = vec![C64::new(0.0, 0.0); self.dim()];
        for j in coords {
            d[j] = C64::new(1.0, 0.0);
        }
        self.conjugate(&d)
    }
}

/// Step family on `[lo, hi]` with `jumps` distinct locations, each carrying
/// at least one coordinate (so `jumps ≤ dim`). Locations are uniform in
/// `(lo, hi]`; when `at_hi` is set the largest is moved to `hi`.
pub fn random_step_family(
    rng: &mut impl Rng,
    sim: &Similarity,
    lo: f64,
    hi: f64,
    jumps: usize,
    at_hi: bool,
) -> Result<StepSpectralFamily> {
    let dim = sim.dim();
    if jumps == 0 || jumps > dim {
        return Err(Error::InvalidModel(format!("need 1..={dim} jumps, got {jumps}")));
    }
    let mut locations: Vec<f64> = (0..jumps).map(|_| rng.gen_range(lo..hi)).map(|x| if x <= lo { hi } else { x }).collect();
    locations.sort_by(f64::total_cmp);
    locations.dedup();
    if at_hi {
        *locations.last_mut().expect("nonempty") = hi;
    }
    let mut coords: Vec<usize> = (0..dim).collect();
    coords.shuffle(rng);
    let k = locations.len();
    let jumps = locations
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let mine = coords.iter().enumerate().filter(|(pos, _)| pos % k == i).map(|(_, &c)| c);
            Jump::new(lambda, sim.projection(mine))
        })
        .collect();
    StepSpectralFamily::new(Support::new(lo, hi)?, jumps)
}

/// `Σ_k B_k e^{iωkλ}` for `k ∈ [−degree, degree]`, declared continuous.
pub fn trig_polynomial(coeffs: Vec<(i64, Operator)>, omega: f64) -> Result<OperatorFunction> {
    let dim = coeffs
        .first()
        .map(|(_, b)| b.dim())
        .ok_or_else(|| Error::InvalidModel("a trigonometric polynomial needs a coefficient".into()))?;
    for (_, b) in &coeffs {
        b.check_dim(&coeffs[0].1)?;
    }
    Ok(OperatorFunction::new(dim, FunctionKind::Piecewise, move |lambda| {
        let mut acc = Operator::zeros(dim);
        for (k, b) in &coeffs {
            acc += &b.scale(C64::from_polar(1.0, omega * *k as f64 * lambda));
        }
        acc
    })
    .with_continuity(Continuity::Continuous))
}

/// Random coefficients of norm `O(1)`; when `sim` is given they are of the
/// form `S diag S⁻¹` and so commute with every `S D S⁻¹`.
pub fn random_trig_coefficients(
    rng: &mut impl Rng,
    dim: usize,
    degree: i64,
    sim: Option<&Similarity>,
) -> Vec<(i64, Operator)> {
    (-degree..=degree)
        .map(|k| {
            let b = match sim {
                Some(sim) => {
                    let d: Vec<C64> = (0..dim).map(|_| random_complex(rng)).collect();
                    sim.conjugate(&d)
                }
                None => random_matrix(rng, dim, 1.0 / (dim as f64).sqrt()),
            };
            (k, b)
        })
        .collect()
}

/// `Φ₁` on `[0, 1]` equal to `base` except at the marked endpoints, where
/// `jump` is added: always at `1`, and at `0` too when `at_zero` is set.
/// The result is left-discontinuous at `1`.
pub fn with_endpoint_jump(base: &OperatorFunction, jump: Operator, at_zero: bool) -> Result<OperatorFunction> {
    base.evaluate(0.0).check_dim(&jump)?;
    let inner = base.clone();
    Ok(OperatorFunction::new(base.dim(), FunctionKind::Piecewise, move |lambda| {
        let v = inner.evaluate(lambda);
        if lambda >= 1.0 || (at_zero && lambda <= 0.0) {
            &v + &jump
        } else {
            v
        }
    }))
}

/// A composed model: `Ẽ₁` on `[0, 1]` and `{P_n}` built from one change of
/// basis, coordinate `j` sitting in cell `n_j` at position `s_j`.
#[derive(Debug, Clone)]
pub struct StoneModel {
    pub e1: SpectralFamilyView,
    pub p: ProjectionSequence,
    pub similarity: Similarity,
    pub cells: Vec<i64>,
    pub positions: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoneModelSpec {
    pub dim: usize,
    pub radius: i64,
    /// Put at least one coordinate at position `0` (`Ẽ₁(0) ≠ 0`).
    pub mass_at_zero: bool,
    /// Put at least one coordinate at position `1`.
    pub mass_at_one: bool,
    /// Use the identity instead of a random change of basis.
    pub orthogonal: bool,
}

impl StoneModelSpec {
    pub fn new(dim: usize, radius: i64) -> Self {
        Self {
            dim,
            radius,
            mass_at_zero: false,
            mass_at_one: false,
            orthogonal: false,
        }
    }
}

fn random_position(rng: &mut impl Rng) -> f64 {
    if rng.gen_bool(0.5) {
        rng.gen_range(1..16) as f64 / 16.0
    } else {
        rng.gen_range(0.02..0.98)
    }
}

pub fn random_stone_model(rng: &mut impl Rng, spec: StoneModelSpec) -> Result<StoneModel> {
    let StoneModelSpec { dim, radius, .. } = spec;
    let forced = spec.mass_at_zero as usize + spec.mass_at_one as usize;
    if dim == 0 || radius < 0 || dim < forced.max(1) {
        return Err(Error::InvalidModel(format!("cannot build a model with dim {dim} and radius {radius}")));
    }
    let similarity = if spec.orthogonal {
        Similarity::identity(dim)
    } else {
        Similarity::random(rng, dim)
    };
    let cells: Vec<i64> = (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect();
    let mut positions: Vec<f64> = (0..dim).map(|_| random_position(rng)).collect();
    let mut slots: Vec<usize> = (0..dim).collect();
    slots.shuffle(rng);
    let mut slots = slots.into_iter();
    if spec.mass_at_zero {
        positions[slots.next().expect("dim ≥ forced")] = 0.0;
    }
    if spec.mass_at_one {
        positions[slots.next().expect("dim ≥ forced")] = 1.0;
    }
    for j in slots {
        if spec.mass_at_zero && rng.gen_bool(0.2) {
            positions[j] = 0.0;
        } else if spec.mass_at_one && rng.gen_bool(0.2) {
            positions[j] = 1.0;
        }
    }

    let mut distinct = positions.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let jumps: Vec<Jump> = distinct
        .iter()
        .map(|&s| Jump::new(s, similarity.projection((0..dim).filter(|&j| positions[j] == s))))
        .collect();
    let e1 = StepSpectralFamily::new(Support::new(0.0, 1.0)?, jumps)?;
    let projections = (-radius..=radius)
        .map(|n| similarity.projection((0..dim).filter(|&j| cells[j] == n)))
        .collect();
    let p = ProjectionSequence::new(radius, projections)?;
    Ok(StoneModel {
        e1: e1.into(),
        p,
        similarity,
        cells,
        positions,
    })
}

/// Periodic data: oblique `P_n`, some of them zero, with the cell of every
/// coordinate.
#[derive(Debug, Clone)]
pub struct PeriodicModel {
    pub p: ProjectionSequence,
    pub similarity: Similarity,
    pub cells: Vec<i64>,
}

impl PeriodicModel {
    /// `R_t = S diag(e^{2πi n_j t}) S⁻¹`, built directly.
    pub fn representation(&self, t: f64) -> Operator {
        let d: Vec<C64> = self.cells.iter().map(|&n| C64::from_polar(1.0, TAU * n as f64 * t)).collect();
        self.similarity.conjugate(&d)
    }

    /// `E(λ) = S diag(1[n_j ≤ ⌊λ⌋]) S⁻¹`, built directly.
    pub fn family_value(&self, lambda: f64) -> Operator {
        let k = lambda.floor();
        self.similarity
            .projection((0..self.cells.len()).filter(|&j| self.cells[j] as f64 <= k))
    }
}

pub fn random_periodic_model(rng: &mut impl Rng, dim: usize, radius: i64) -> Result<PeriodicModel> {
    if dim == 0 || radius < 0 {
        return Err(Error::InvalidModel(format!("cannot build a periodic model with dim {dim}")));
    }
    let similarity = Similarity::random(rng, dim);
    // Restrict to a random subset of cells so some P_n vanish.
    let all: Vec<i64> = (-radius..=radius).collect();
    let used: Vec<i64> = all
        .choose_multiple(rng, (radius as usize + 1).min(all.len()))
        .copied()
        .collect();
    let cells: Vec<i64> = (0..dim).map(|_| *used.choose(rng).expect("nonempty")).collect();
    let projections = (-radius..=radius)
        .map(|n| similarity.projection((0..dim).filter(|&j| cells[j] == n)))
        .collect();
    let p = ProjectionSequence::new(radius, projections)?;
    Ok(PeriodicModel { p, similarity, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{stone_compose, FAMILY_TOL};
    use crate::operator::{is_projection, NormSpec};

    #[test]
    fn generators_are_deterministic() {
        let a = random_stone_model(&mut rng_from_seed(7), StoneModelSpec::new(6, 2)).unwrap();
        let b = random_stone_model(&mut rng_from_seed(7), StoneModelSpec::new(6, 2)).unwrap();
        assert_eq!(a.cells, b.cells);
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.similarity.s, b.similarity.s);
    }

    #[test]
    fn stone_models_compose() {
        let mut rng = rng_from_seed(3);
        for k in 0..20 {
            let spec = StoneModelSpec {
                mass_at_zero: k % 2 == 0,
                mass_at_one: k % 3 == 0,
                ..StoneModelSpec::new(2 + k % 9, 1 + (k as i64) % 4)
            };
            let m = random_stone_model(&mut rng, spec).unwrap();
            assert_eq!(m.e1.evaluate(0.0).norm(NormSpec::EUCLIDEAN) > 0.0, spec.mass_at_zero);
            assert!(stone_compose(&m.p, &m.e1).is_ok());
        }
    }

    #[test]
    fn step_families_are_valid() {
        let mut rng = rng_from_seed(11);
        for dim in 1..10 {
            let sim = Similarity::random(&mut rng, dim);
            let f = random_step_family(&mut rng, &sim, -1.5, 2.0, dim.min(4), true).unwrap();
            assert_eq!(f.support().hi, 2.0);
            assert!(f.jumps().iter().all(|j| is_projection(&j.delta, FAMILY_TOL)));
            assert!(f.evaluate(2.0).distance(&Operator::identity(dim), NormSpec::EUCLIDEAN) < 1e-12);
        }
    }

    #[test]
    fn periodic_models_match_direct_values() {
        let m = random_periodic_model(&mut rng_from_seed(5), 7, 3).unwrap();
        assert!(m.representation(0.0).distance(&Operator::identity(7), NormSpec::EUCLIDEAN) < 1e-12);
        assert!(m.representation(1.0).distance(&Operator::identity(7), NormSpec::EUCLIDEAN) < 1e-12);
        assert!(m.p.iter().any(|(_, pn)| pn.max_abs() == 0.0));
    }

    #[test]
    fn endpoint_jump() {
        let base = OperatorFunction::constant(Operator::identity(2));
        let f = with_endpoint_jump(&base, Operator::identity(2), true).unwrap();
        assert_eq!(f.evaluate(1.0), Operator::identity(2).scale_real(2.0));
        assert_eq!(f.evaluate(0.0), Operator::identity(2).scale_real(2.0));
        assert_eq!(f.evaluate(0.5), Operator::identity(2));
    }
}
