//! Truncated model of translations on the 2-torus: basis `f_{n,m}`,
//! `|n| ≤ N`, `|m| ≤ M`, with `R_t` translating the first variable and `V`
//! the second.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::family::{periodic_family, ProjectionSequence, SpectralFamilyView};
use crate::operator::{commutator_norm, NormSpec, Operator, C64};
use crate::stone::MultiplierRepresentation;

/// Residual allowed for the commutation invariants.
pub const TORUS_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TorusModel {
    pub n_radius: i64,
    pub m_radius: i64,
    pub theta: f64,
    /// `R_t f_{n,m} = e^{int} f_{n,m}`.
    pub representation: MultiplierRepresentation,
    /// `V f_{n,m} = e^{imθ} f_{n,m}`.
    pub v: Operator,
    /// `P_n` projects onto `span{f_{n,m} : |m| ≤ M}`.
    pub p: ProjectionSequence,
    /// `E(λ) = Σ_{n ≤ ⌊λ⌋} P_n`.
    pub family: SpectralFamilyView,
}

impl TorusModel {
    pub fn dim(&self) -> usize {
        self.representation.dim()
    }

    /// Position of `f_{n,m}` in the basis.
    pub fn index(&self, n: i64, m: i64) -> usize {
        ((n + self.n_radius) * (2 * self.m_radius + 1) + (m + self.m_radius)) as usize
    }

    /// Largest commutator of `V` with the sampled `R_t` and with the `P_n`.
    pub fn commutation_residual(&self, ts: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &t in ts {
            worst = worst.max(commutator_norm(&self.v, &self.representation.at(t), NormSpec::EUCLIDEAN)?);
        }
        for (_, pn) in self.p.iter() {
            worst = worst.max(commutator_norm(&self.v, pn, NormSpec::EUCLIDEAN)?);
        }
        Ok(worst)
    }
}

pub fn build_torus_model(n_radius: i64, m_radius: i64, theta: f64) -> Result<TorusModel> {
    if n_radius < 1 || m_radius < 1 {
        return Err(Error::InvalidModel(format!("torus model needs N, M ≥ 1, got N = {n_radius}, M = {m_radius}")));
    }
    if !theta.is_finite() {
        return Err(Error::InvalidModel("θ must be finite".into()));
    }
    let reduced = theta.rem_euclid(TAU);
    if reduced.min(TAU - reduced) < 1e-12 {
        return Err(Error::InvalidModel(format!("θ = {theta} is a multiple of 2π, so V is the identity")));
    }
    let width = 2 * m_radius + 1;
    let dim = ((2 * n_radius + 1) * width) as usize;
    let mut freqs = Vec::with_capacity(dim);
    let mut v_diag = Vec::with_capacity(dim);
    for n in -n_radius..=n_radius {
        for m in -m_radius..=m_radius {
            freqs.push(n as f64);
            v_diag.push(C64::from_polar(1.0, m as f64 * theta));
        }
    }
    let representation = MultiplierRepresentation::new(freqs)?;
    let projections = (-n_radius..=n_radius)
        .map(|n| {
            let start = ((n + n_radius) * width) as usize;
            Operator::coordinate_projection(dim, start..start + width as usize)
        })
        .collect();
    let p = ProjectionSequence::new(n_radius, projections)?;
    let family = periodic_family(&p);
    let model = TorusModel {
        n_radius,
        m_radius,
        theta,
        representation,
        v: Operator::from_diagonal(&v_diag),
        p,
        family,
    };
    let residual = model.commutation_residual(&[0.1, 0.5, 1.0, -2.3, 7.9])?;
    if residual > TORUS_TOL {
        return Err(Error::InvalidModel(format!("torus model: V fails to commute, residual {residual:e}")));
    }
    Ok(model)
}
