//! Truncated Fourier model of the translation group on the line: a finite
//! set of frequencies `τ_j`, `R_t = diag(e^{itτ_j})`.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{
    rescale_to_unit, stone_compose, Jump, ProjectionSequence, SpectralFamilyView, StepSpectralFamily, Support,
};
use crate::integration::{integrate, integrate_line, IntegrateOptions, OperatorFunction};
use crate::models::random::{random_complex, rng_from_seed};
use crate::operator::{NormSpec, Operator, Vector, C64};
use crate::stone::{scalar_integrand, MultiplierRepresentation};

/// Residual allowed for the invariants checked while building a model.
pub const MODEL_TOL: f64 = 1e-10;

/// Offsets `u` of sampled frequencies `τ = 2π(n + u)` stay in this range.
const OFFSET_RANGE: (f64, f64) = (0.02, 0.98);

#[derive(Debug, Clone)]
pub struct LineModel {
    pub radius: i64,
    /// `τ_1 < … < τ_d`, all in `[−2πN, 2π(N+1))`.
    pub frequencies: Vec<f64>,
    /// `n_j = ⌊τ_j / 2π⌋`.
    pub cells: Vec<i64>,
    pub representation: MultiplierRepresentation,
    /// Angular family: coordinate `j` enters at `τ_j`.
    pub family: SpectralFamilyView,
    /// `P_n` = coordinates with `τ_j ∈ [2πn, 2π(n+1))`.
    pub p: ProjectionSequence,
    /// `A₁ = diag(τ_j − 2πn_j)`, so `e^{iA₁} = R_1`.
    pub a1: Operator,
    /// Family of `R_1` on `[0, 2π]`: coordinate `j` enters at `τ_j − 2πn_j`.
    pub e1: SpectralFamilyView,
    /// `Ẽ₁(s) = E₁(2πs)` on `[0, 1]`.
    pub e1_tilde: SpectralFamilyView,
    /// `stone_compose(P, Ẽ₁)`, in cycles.
    pub composed: SpectralFamilyView,
}

impl LineModel {
    pub fn dim(&self) -> usize {
        self.frequencies.len()
    }

    /// `τ_j − 2πn_j ∈ [0, 2π)`.
    pub fn reduced_frequencies(&self) -> Vec<f64> {
        self.frequencies
            .iter()
            .zip(&self.cells)
            .map(|(&tau, &n)| tau - TAU * n as f64)
            .collect()
    }

    /// `V = diag(φ_{n_j}(θ_j / 2π))`, the multiplier the symbols describe.
    pub fn multiplier(&self, symbols: &CellSymbols) -> Operator {
        let d: Vec<C64> = self
            .reduced_frequencies()
            .iter()
            .zip(&self.cells)
            .map(|(&theta, &n)| symbols.evaluate(n, theta / TAU))
            .collect();
        Operator::from_diagonal(&d)
    }

    /// `Φ₁(s) = diag(φ_{n_j}(s))`.
    pub fn integrand(&self, symbols: &CellSymbols) -> OperatorFunction {
        let cells = self.cells.clone();
        let symbols = symbols.clone();
        OperatorFunction::diagonal(self.dim(), move |s| cells.iter().map(|&n| symbols.evaluate(n, s)).collect())
    }
}

/// Builds the model from explicit frequencies; they must be distinct and lie
/// in `[−2πN, 2π(N+1))`.
pub fn build_line_model_from_frequencies(radius: i64, frequencies: &[f64]) -> Result<LineModel> {
    if radius < 1 {
        return Err(Error::InvalidModel(format!("line model needs N ≥ 1, got {radius}")));
    }
    if frequencies.is_empty() {
        return Err(Error::InvalidModel("line model needs at least one frequency".into()));
    }
    let mut taus = frequencies.to_vec();
    taus.sort_by(f64::total_cmp);
    if taus.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidModel("frequencies must be distinct".into()));
    }
    let (lo, hi) = (-TAU * radius as f64, TAU * (radius + 1) as f64);
    if let Some(&bad) = taus.iter().find(|&&t| !(t >= lo && t < hi)) {
        return Err(Error::InvalidModel(format!("frequency {bad} outside [{lo}, {hi})")));
    }
    let dim = taus.len();
    let cells: Vec<i64> = taus.iter().map(|&t| (t / TAU).floor() as i64).collect();
    let thetas: Vec<f64> = taus.iter().zip(&cells).map(|(&t, &n)| t - TAU * n as f64).collect();
    if let Some(j) = thetas.iter().position(|&th| !(0.0..TAU).contains(&th)) {
        return Err(Error::InvalidModel(format!(
            "reduced frequency of τ = {} is {}, outside [0, 2π)",
            taus[j], thetas[j]
        )));
    }

    let representation = MultiplierRepresentation::new(taus.clone())?;
    let family: SpectralFamilyView = StepSpectralFamily::new(
        Support::new(lo, hi)?,
        taus.iter()
            .enumerate()
            .map(|(j, &t)| Jump::new(t, Operator::coordinate_projection(dim, [j])))
            .collect(),
    )?
    .into();
    let projections = (-radius..=radius)
        .map(|n| Operator::coordinate_projection(dim, (0..dim).filter(|&j| cells[j] == n)))
        .collect();
    let p = ProjectionSequence::new(radius, projections)?;
    let a1 = Operator::from_real_diagonal(&thetas);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| thetas[i].total_cmp(&thetas[j]));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for j in order {
        match groups.last_mut() {
            Some((th, coords)) if *th == thetas[j] => coords.push(j),
            _ => groups.push((thetas[j], vec![j])),
        }
    }
    let e1: SpectralFamilyView = StepSpectralFamily::new(
        Support::new(0.0, TAU)?,
        groups
            .into_iter()
            .map(|(th, coords)| Jump::new(th, Operator::coordinate_projection(dim, coords)))
            .collect(),
    )?
    .into();
    let e1_tilde = rescale_to_unit(&e1)?;
    let composed = stone_compose(&p, &e1_tilde)?;

    let model = LineModel {
        radius,
        frequencies: taus,
        cells,
        representation,
        family,
        p,
        a1,
        e1,
        e1_tilde,
        composed,
    };
    check_line_model(&model)?;
    Ok(model)
}

/// `per_cell` frequencies drawn in each cell `[2πn, 2π(n+1))`, `|n| ≤ N`.
pub fn build_line_model(radius: i64, per_cell: usize, seed: u64) -> Result<LineModel> {
    if per_cell == 0 {
        return Err(Error::InvalidModel("line model needs per_cell ≥ 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut taus = Vec::new();
    for n in -radius..=radius {
        for _ in 0..per_cell {
            let u = rng.gen_range(OFFSET_RANGE.0..OFFSET_RANGE.1);
            taus.push(TAU * (n as f64 + u));
        }
    }
    build_line_model_from_frequencies(radius, &taus)
}

fn invariant(what: &str, residual: f64) -> Result<()> {
    if residual <= MODEL_TOL {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("line model: {what} residual {residual:e}")))
    }
}

fn check_line_model(m: &LineModel) -> Result<()> {
    let ns = NormSpec::EUCLIDEAN;
    let exp_a1 = Operator::from_diagonal(
        &m.reduced_frequencies()
            .iter()
            .map(|&th| C64::from_polar(1.0, th))
            .collect::<Vec<_>>(),
    );
    invariant("e^{iA₁} = R_1", exp_a1.distance(&m.representation.at(1.0), ns))?;

    // E(λ) multiplies coordinate j by 1[τ_j ≤ λ].
    let mut probes: Vec<f64> = m.frequencies.clone();
    probes.extend(m.frequencies.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    probes.push(m.frequencies[0] - 1.0);
    for &x in &probes {
        let d: Vec<f64> = m.frequencies.iter().map(|&t| if t <= x { 1.0 } else { 0.0 }).collect();
        invariant("multiplier family", m.family.evaluate(x).distance(&Operator::from_real_diagonal(&d), ns))?;
    }

    // The composed family in cycles is the angular family rescaled. Compare
    // away from the jumps, whose locations may move by an ulp in rescaling.
    let mut cycles: Vec<f64> = m.frequencies.iter().map(|&t| t / TAU).collect();
    let mids: Vec<f64> = cycles.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    cycles = cycles.iter().map(|&c| c + 1e-9).chain(mids).collect();
    for &lambda in &cycles {
        invariant(
            "composed family",
            m.composed.evaluate(lambda).distance(&m.family.evaluate(TAU * lambda), ns),
        )?;
    }
    Ok(())
}

/// Per-cell scalar symbols `φ_n(s) = Σ_k c_{n,k} e^{2πiks}`, `|k| ≤ degree`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSymbols {
    pub radius: i64,
    pub degree: i64,
    /// `coeffs[n + N][k + degree]`.
    pub coeffs: Vec<Vec<C64>>,
}

impl CellSymbols {
    pub fn random(radius: i64, degree: i64, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let coeffs = (-radius..=radius)
            .map(|_| (-degree..=degree).map(|_| random_complex(&mut rng)).collect())
            .collect();
        Self { radius, degree, coeffs }
    }

    /// `φ_n(s)`; zero outside the stored cells.
    pub fn evaluate(&self, n: i64, s: f64) -> C64 {
        if n.abs() > self.radius {
            return C64::new(0.0, 0.0);
        }
        self.coeffs[(n + self.radius) as usize]
            .iter()
            .enumerate()
            .map(|(i, c)| c * C64::from_polar(1.0, TAU * (i as i64 - self.degree) as f64 * s))
            .sum()
    }
}

/// Residuals of the scalar-integrand pipeline on the line model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarRepresentation {
    /// `‖V − ∫^r_{[0,1]} Φ₁ dẼ₁‖`.
    pub integrand_residual: f64,
    /// `‖V − pv-∫^r φ dE‖` with `φ(λ) = φ_n(λ − n)`.
    pub scalar_residual: f64,
    pub converged: bool,
}

/// Runs `Φ₁ = diag(φ_{n_j})` through the decomposition check and integrates
/// the resulting scalar `φ` against the composed family.
pub fn scalar_representation(model: &LineModel, symbols: &CellSymbols, opts: &IntegrateOptions) -> Result<ScalarRepresentation> {
    let ns = NormSpec::EUCLIDEAN;
    let opts = opts.clone().with_mode(crate::integration::IntegrationMode::Right);
    let v = model.multiplier(symbols);
    let phi1 = model.integrand(symbols);
    let direct = integrate(&phi1, &model.e1_tilde, 0.0, 1.0, &opts)?;
    let basis: Vec<Vector> = (0..model.dim()).map(|j| Vector::basis(model.dim(), j)).collect();
    let sym = symbols.clone();
    let phi = scalar_integrand(&phi1, move |n, s| sym.evaluate(n, s), &model.p, &basis, MODEL_TOL)?;
    let line = integrate_line(&phi, &model.composed, &opts)?;
    Ok(ScalarRepresentation {
        integrand_residual: v.distance(&direct.value, ns),
        scalar_residual: v.distance(&line.value, ns),
        converged: direct.converged && line.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stone::{generator, reconstruct_representation, reconstruction_options, trig_well_bounded_value};
    use std::f64::consts::PI;

    #[test]
    fn three_frequency_example() {
        let m = build_line_model_from_frequencies(1, &[-PI, PI / 2.0, TAU + 1.0]).unwrap();
        assert_eq!(m.cells, vec![-1, 0, 1]);
        for (k, n) in (-1..=1).enumerate() {
            assert_eq!(m.p.get_or_zero(n), Operator::coordinate_projection(3, [k]));
        }
        assert!((m.a1.entry(1, 1).re - PI / 2.0).abs() < 1e-15);
        assert!((m.a1.entry(2, 2).re - 1.0).abs() < 1e-14);
        assert!((m.a1.entry(0, 0).re - PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_frequencies() {
        assert!(build_line_model_from_frequencies(1, &[1.0, 1.0]).is_err());
        assert!(build_line_model_from_frequencies(1, &[4.0 * PI]).is_err());
        assert!(build_line_model_from_frequencies(0, &[1.0]).is_err());
        assert!(build_line_model(1, 0, 1).is_err());
    }

    #[test]
    fn seeded_model_reconstructs_the_group() {
        let m = build_line_model(2, 2, 42).unwrap();
        assert_eq!(m.dim(), 10);
        let opts = reconstruction_options();
        for t in [0.0, 0.3, -0.3, 1.0, 2f64.sqrt()] {
            let angular = reconstruct_representation(&m.family, t, &opts).unwrap();
            let cycles = reconstruct_representation(&m.composed, t, &opts).unwrap();
            let direct = m.representation.at(t);
            assert!(angular.distance(&direct, NormSpec::EUCLIDEAN) < 1e-12);
            assert!(cycles.distance(&direct, NormSpec::EUCLIDEAN) < 1e-10);
        }
        for (j, &tau) in m.frequencies.iter().enumerate() {
            let x = Vector::basis(m.dim(), j);
            let g = generator(&m.composed, &x, &opts).unwrap();
            assert!(g.in_domain);
            assert!((g.value.entries()[j] - C64::new(0.0, tau)).norm() < 1e-10);
        }
        let u = trig_well_bounded_value(&m.e1_tilde).unwrap();
        assert!(u.distance(&m.representation.at(1.0), NormSpec::EUCLIDEAN) < 1e-12);
    }

    #[test]
    fn scalar_pipeline_reproduces_the_multiplier() {
        let m = build_line_model(2, 2, 7).unwrap();
        let symbols = CellSymbols::random(2, 2, 99);
        let r = scalar_representation(&m, &symbols, &IntegrateOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.integrand_residual < 1e-12, "{}", r.integrand_residual);
        assert!(r.scalar_residual < 1e-12, "{}", r.scalar_residual);
    }
}
