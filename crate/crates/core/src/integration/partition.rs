use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::SpectralFamilyView;
use crate::integration::function::OperatorFunction;
use crate::operator::Operator;

/// How markers are placed inside each cell `[u_{k−1}, u_k]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerStrategy {
    Left,
    Right,
    Midpoint,
    SeededRandom(u64),
}

impl MarkerStrategy {
    /// One marker per cell of `points`.
    pub fn markers(&self, points: &[f64]) -> Vec<f64> {
        let cells = points.windows(2);
        match *self {
            MarkerStrategy::Left => cells.map(|w| w[0]).collect(),
            MarkerStrategy::Right => cells.map(|w| w[1]).collect(),
            MarkerStrategy::Midpoint => cells.map(|w| midpoint(w[0], w[1])).collect(),
            MarkerStrategy::SeededRandom(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                cells.map(|w| random_in(&mut rng, w[0], w[1])).collect()
            }
        }
    }
}

pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    (lo + 0.5 * (hi - lo)).clamp(lo, hi)
}

pub(crate) fn random_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo + rng.gen::<f64>() * (hi - lo)).clamp(lo, hi)
}

/// A partition `u_0 < … < u_m` of `[u_0, u_m]` with markers
/// `u_{k−1} ≤ u_k* ≤ u_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedPartition {
    points: Vec<f64>,
    markers: Vec<f64>,
}

impl MarkedPartition {
    pub fn new(points: Vec<f64>, markers: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidPartition("a partition needs at least two points".into()));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPartition("partition points must be finite".into()));
        }
        if let Some(w) = points.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidPartition(format!(
                "points must increase strictly: {} then {}",
                w[0], w[1]
            )));
        }
        if markers.len() != points.len() - 1 {
            return Err(Error::InvalidPartition(format!(
                "{} cells need {} markers, got {}",
                points.len() - 1,
                points.len() - 1,
                markers.len()
            )));
        }
        for (k, (w, &m)) in points.windows(2).zip(&markers).enumerate() {
            if !(w[0] <= m && m <= w[1]) {
                return Err(Error::InvalidPartition(format!(
                    "marker {m} of cell {k} lies outside [{}, {}]",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { points, markers })
    }

    pub fn with_strategy(points: Vec<f64>, strategy: MarkerStrategy) -> Result<Self> {
        let markers = strategy.markers(&points);
        Self::new(points, markers)
    }

    /// `m` equal cells of `[a, b]`.
    pub fn uniform(a: f64, b: f64, m: usize, strategy: MarkerStrategy) -> Result<Self> {
        if m == 0 || !(a < b) {
            return Err(Error::InvalidInterval { lo: a, hi: b });
        }
        let mut points: Vec<f64> = (0..=m).map(|k| a + (b - a) * k as f64 / m as f64).collect();
        points[m] = b;
        Self::with_strategy(points, strategy)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn markers(&self) -> &[f64] {
        &self.markers
    }

    /// Whether every marker is its cell's right endpoint.
    pub fn is_right_marked(&self) -> bool {
        self.points[1..].iter().zip(&self.markers).all(|(p, m)| p == m)
    }

    /// `max_k (u_k − u_{k−1})`.
    pub fn mesh(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// `Σ_k Φ(u_k*)(Ψ(u_k) − Ψ(u_{k−1}))`.
///
/// Only increments of `Ψ` enter, so a jump located exactly at `u_0` never
/// contributes.
pub fn rs_sum(phi: &OperatorFunction, psi: &SpectralFamilyView, p: &MarkedPartition) -> Result<Operator> {
    if phi.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: phi.dim(),
        });
    }
    let mut acc = Operator::zeros(psi.dim());
    let mut prev = psi.evaluate(p.points[0]);
    for (&u, &m) in p.points[1..].iter().zip(&p.markers) {
        let next = psi.evaluate(u);
        let delta = &next - &prev;
        if delta.max_abs() > 0.0 {
            acc += &(&phi.try_evaluate(m)? * &delta);
        }
        prev = next;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{Jump, StepSpectralFamily, Support};
    use crate::operator::{NormSpec, C64};

    fn s2() -> SpectralFamilyView {
        StepSpectralFamily::new(
            Support::new(0.0, 1.0).unwrap(),
            vec![
                Jump::new(0.5, Operator::from_real_diagonal(&[1.0, 0.0])),
                Jump::new(1.0, Operator::from_real_diagonal(&[0.0, 1.0])),
            ],
        )
        .unwrap()
        .into()
    }

    #[test]
    fn right_marked_sum_matches_hand_value() {
        let phi = OperatorFunction::exponential(2, std::f64::consts::TAU);
        let p = MarkedPartition::with_strategy(vec![0.0, 0.5, 1.0], MarkerStrategy::Right).unwrap();
        assert!(p.is_right_marked());
        let s = rs_sum(&phi, &s2(), &p).unwrap();
        let expected = Operator::from_real_diagonal(&[-1.0, 1.0]);
        assert!(s.distance(&expected, NormSpec::EUCLIDEAN) < 1e-15);
    }

    #[test]
    fn constant_integrand_telescopes() {
        let c = Operator::from_rows(&[
            vec![C64::new(1.0, 2.0), C64::new(0.5, 0.0)],
            vec![C64::new(0.0, -1.0), C64::new(3.0, 0.0)],
        ])
        .unwrap();
        let phi = OperatorFunction::constant(c.clone());
        let psi = s2();
        let p = MarkedPartition::uniform(0.25, 1.0, 7, MarkerStrategy::SeededRandom(3)).unwrap();
        let s = rs_sum(&phi, &psi, &p).unwrap();
        let expected = &c * &(&psi.evaluate(1.0) - &psi.evaluate(0.25));
        assert!(s.distance(&expected, NormSpec::EUCLIDEAN) < 1e-14);
    }

    #[test]
    fn flat_region_sums_to_zero_and_left_endpoint_jump_is_ignored() {
        let phi = OperatorFunction::identity_scalar(2);
        let p = MarkedPartition::uniform(0.6, 0.9, 5, MarkerStrategy::Midpoint).unwrap();
        assert_eq!(rs_sum(&phi, &s2(), &p).unwrap(), Operator::zeros(2));
        let q = MarkedPartition::uniform(0.5, 0.9, 3, MarkerStrategy::Left).unwrap();
        assert_eq!(rs_sum(&phi, &s2(), &q).unwrap(), Operator::zeros(2));
    }

    #[test]
    fn rejects_malformed_partitions() {
        assert!(MarkedPartition::new(vec![0.0], vec![]).is_err());
        assert!(MarkedPartition::new(vec![0.0, 0.0, 1.0], vec![0.0, 0.5]).is_err());
        assert!(MarkedPartition::new(vec![0.0, 1.0], vec![1.5]).is_err());
        assert!(MarkedPartition::new(vec![0.0, 1.0], vec![]).is_err());
    }

    #[test]
    fn seeded_markers_are_reproducible_and_contained() {
        let pts: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        let a = MarkerStrategy::SeededRandom(9).markers(&pts);
        assert_eq!(a, MarkerStrategy::SeededRandom(9).markers(&pts));
        assert_ne!(a, MarkerStrategy::SeededRandom(10).markers(&pts));
        assert!(MarkedPartition::new(pts, a).is_ok());
    }
}
