//! Verification checks over seeded random instances and the concrete
//! models. Every check returns a [`CheckOutcome`] with its worst residual.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::family::{
    periodic_family, sample_grid, stone_compose, substitute_family, verify_axioms, Jump, ProjectionSequence,
    SpectralFamilyView, StepSpectralFamily, Support,
};
use crate::integration::{
    integrate, integrate_line, jump_sum_oracle, IntegrateOptions, IntegrationMode, OperatorFunction,
};
use crate::models::line::{scalar_representation, CellSymbols, LineModel};
use crate::models::random::{
    random_complex, random_matrix, random_step_family, random_stone_model, random_trig_coefficients,
    rng_from_seed, trig_polynomial, with_endpoint_jump, PeriodicModel, Similarity, StoneModel, StoneModelSpec,
};
use crate::models::representability::scalar_representability_test;
use crate::models::torus::TorusModel;
use crate::operator::{commutator_norm, NormSpec, Operator, Vector, C64};
use crate::stone::{
    cell_index, centralizer_membership, reduced_integrand, generator, periodic_generator,
    reconstruct_representation, reconstruction_options, trig_well_bounded_value, verify_extension_identity,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub residual: f64,
    pub passed: bool,
    pub instances: usize,
    pub detail: String,
}

/// Shared parameters of the randomized checks.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomParams {
    pub seed: u64,
    pub instances: usize,
    pub max_dim: usize,
    pub max_radius: i64,
    pub modes: Vec<IntegrationMode>,
}

impl RandomParams {
    pub fn new(seed: u64, instances: usize) -> Self {
        Self {
            seed,
            instances,
            max_dim: 8,
            max_radius: 4,
            modes: vec![IntegrationMode::Standard, IntegrationMode::Right],
        }
    }

    /// Generator for the check identified by `salt`.
    pub fn rng(&self, salt: u64) -> ChaCha8Rng {
        rng_from_seed(self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
    }
}

/// Worst residual and first failure over a run of instances.
struct Tally {
    threshold: f64,
    worst: f64,
    instances: usize,
    failures: usize,
    first_failure: Option<String>,
}

impl Tally {
    fn new(threshold: f64) -> Self {
        Self {
            threshold,
            worst: 0.0,
            instances: 0,
            failures: 0,
            first_failure: None,
        }
    }

    /// Records a residual (compared with the threshold) and any extra
    /// condition that must hold.
    fn record(&mut self, residual: f64, condition: bool, what: impl FnOnce() -> String) {
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        self.worst = self.worst.max(residual);
        if residual > self.threshold || !condition {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(format!("{} (residual {residual:.3e})", what()));
            }
        }
    }

    fn next_instance(&mut self) {
        self.instances += 1;
    }

    fn finish(self) -> CheckOutcome {
        let detail = match &self.first_failure {
            None => format!("{} instances", self.instances),
            Some(f) => format!("{} of {} failed; first: {f}", self.failures, self.instances),
        };
        CheckOutcome {
            residual: self.worst,
            passed: self.failures == 0,
            instances: self.instances,
            detail,
        }
    }
}

fn dist(a: &Operator, b: &Operator) -> f64 {
    a.distance(b, NormSpec::EUCLIDEAN)
}

// ---------------------------------------------------------------------------
// Random instances

/// A step family on `[a, b]` with two general integrands and one whose
/// values commute with the family.
#[derive(Debug, Clone)]
pub struct IntegralInstance {
    pub family: SpectralFamilyView,
    pub similarity: Similarity,
    pub a: f64,
    pub b: f64,
    pub phi: OperatorFunction,
    pub psi: OperatorFunction,
    pub commuting: OperatorFunction,
}

impl IntegralInstance {
    pub fn step(&self) -> &StepSpectralFamily {
        self.family.step().expect("instances carry step data")
    }
}

pub fn integral_instance(rng: &mut impl Rng, max_dim: usize) -> Result<IntegralInstance> {
    let dim = rng.gen_range(1..=max_dim.max(1));
    let a = rng.gen_range(-2.0..1.0);
    let b = a + rng.gen_range(0.5..3.0);
    let similarity = Similarity::random(rng, dim);
    let jumps = rng.gen_range(1..=dim.min(6));
    let at_hi = rng.gen_bool(0.3);
    let family: SpectralFamilyView = random_step_family(rng, &similarity, a, b, jumps, at_hi)?.into();
    let mut trig = |sim: Option<&Similarity>| {
        let omega = TAU / (b - a) * rng.gen_range(0.5..2.0);
        trig_polynomial(random_trig_coefficients(rng, dim, 2, sim), omega)
    };
    let phi = trig(None)?;
    let psi = trig(None)?;
    let commuting = trig(Some(&similarity))?;
    Ok(IntegralInstance {
        family,
        similarity,
        a,
        b,
        phi,
        psi,
        commuting,
    })
}

/// Which hypotheses an extension instance is built to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionVariant {
    /// Right-mode requirements only; even-numbered instances have
    /// `Ẽ₁(0) ≠ 0` and `Φ₁` discontinuous at `1`.
    Minimal,
    /// All hypotheses of the standard-mode identity.
    Full,
}

/// `Φ₁` together with a composed model.
pub fn extension_instance(
    rng: &mut impl Rng,
    k: usize,
    variant: ExtensionVariant,
    max_dim: usize,
    max_radius: i64,
) -> Result<(OperatorFunction, StoneModel)> {
    let dim = rng.gen_range(2..=max_dim.max(2));
    let radius = rng.gen_range(1..=max_radius.max(1));
    let base_spec = StoneModelSpec::new(dim, radius);
    let (spec, phi1) = match variant {
        ExtensionVariant::Full => {
            let coeffs = random_trig_coefficients(rng, dim, 2, None);
            let smooth = trig_polynomial(coeffs, TAU)?;
            match k % 3 {
                0 => (
                    StoneModelSpec {
                        mass_at_zero: rng.gen_bool(0.5),
                        mass_at_one: rng.gen_bool(0.5),
                        ..base_spec
                    },
                    smooth,
                ),
                1 => (
                    StoneModelSpec {
                        mass_at_zero: true,
                        ..base_spec
                    },
                    smooth,
                ),
                _ => {
                    // Left-discontinuous at 1 with Φ₁(0) = Φ₁(1), paired with Ẽ₁(0) = 0.
                    let jump = random_matrix(rng, dim, 1.0);
                    (
                        StoneModelSpec {
                            mass_at_one: rng.gen_bool(0.5),
                            ..base_spec
                        },
                        with_endpoint_jump(&smooth, jump, true)?,
                    )
                }
            }
        }
        ExtensionVariant::Minimal => {
            let omega = TAU * rng.gen_range(0.3..2.7);
            let base = trig_polynomial(random_trig_coefficients(rng, dim, 2, None), omega)?;
            if k.is_multiple_of(2) {
                let jump = random_matrix(rng, dim, 1.0);
                (
                    StoneModelSpec {
                        mass_at_zero: true,
                        mass_at_one: rng.gen_bool(0.5),
                        ..base_spec
                    },
                    with_endpoint_jump(&base, jump, false)?,
                )
            } else {
                (
                    StoneModelSpec {
                        mass_at_zero: rng.gen_bool(0.5),
                        mass_at_one: rng.gen_bool(0.5),
                        ..base_spec
                    },
                    base,
                )
            }
        }
    };
    let model = random_stone_model(rng, spec)?;
    Ok((phi1, model))
}

/// The seeded instances used by [`check_extension_identity`].
pub fn extension_instances(
    params: &RandomParams,
    variant: ExtensionVariant,
) -> Result<Vec<(OperatorFunction, StoneModel)>> {
    let mut rng = params.rng(9 + variant as u64);
    (0..params.instances)
        .map(|k| extension_instance(&mut rng, k, variant, params.max_dim, params.max_radius))
        .collect()
}

/// `Ẽ₁(0) ≠ 0`, no mass of `Ẽ₁` at `1`, `Φ₁` jumping at `1`: the standard
/// integral against the composed family fails at the integers while the
/// right integral exists on both sides.
pub fn standard_failure_instance() -> (OperatorFunction, SpectralFamilyView, ProjectionSequence) {
    let diag = |d: &[f64]| Operator::from_real_diagonal(d);
    let e1: SpectralFamilyView = StepSpectralFamily::new(
        Support::new(0.0, 1.0).expect("valid support"),
        vec![
            Jump::new(0.0, diag(&[1.0, 0.0, 1.0, 0.0])),
            Jump::new(0.5, diag(&[0.0, 1.0, 0.0, 1.0])),
        ],
    )
    .expect("valid family")
    .into();
    let p = ProjectionSequence::new(
        1,
        vec![Operator::zeros(4), diag(&[1.0, 1.0, 0.0, 0.0]), diag(&[0.0, 0.0, 1.0, 1.0])],
    )
    .expect("valid sequence");
    let phi1 = OperatorFunction::scalar(4, |x| C64::new(if x < 1.0 { x } else { 3.0 }, 0.0));
    (phi1, e1, p)
}

// ---------------------------------------------------------------------------
// Spectral families

pub fn check_family_axioms(params: &RandomParams) -> Result<CheckOutcome> {
    let mut rng = params.rng(1);
    let mut tally = Tally::new(1e-9);
    for k in 0..params.instances {
        tally.next_instance();
        let spec = StoneModelSpec {
            mass_at_zero: k % 2 == 0,
            mass_at_one: k % 3 == 0,
            ..StoneModelSpec::new(rng.gen_range(2..=params.max_dim.max(2)), rng.gen_range(0..=params.max_radius))
        };
        let m = random_stone_model(&mut rng, spec)?;
        let composed = stone_compose(&m.p, &m.e1)?;
        let periodic = periodic_family(&m.p);
        for (label, f) in [("Ẽ₁", &m.e1), ("composed", &composed), ("periodic", &periodic)] {
            let sup = f.support();
            let grid = sample_grid(sup.lo - 1.0, sup.hi + 1.0, 41, f.breakpoints());
            let report = verify_axioms(f, &grid, 1e-9)?;
            tally.record(report.worst_residual(), report.all_passed(), || format!("instance {k}: {label}"));
        }
    }
    Ok(tally.finish())
}

// ---------------------------------------------------------------------------
// Integral properties

fn for_each_integral_instance(
    params: &RandomParams,
    salt: u64,
    threshold: f64,
    mut body: impl FnMut(&mut ChaCha8Rng, &IntegralInstance, IntegrationMode, &mut Tally, usize) -> Result<()>,
) -> Result<CheckOutcome> {
    let mut rng = params.rng(salt);
    let mut tally = Tally::new(threshold);
    for k in 0..params.instances {
        tally.next_instance();
        let inst = integral_instance(&mut rng, params.max_dim)?;
        for &mode in &params.modes {
            body(&mut rng, &inst, mode, &mut tally, k)?;
        }
    }
    Ok(tally.finish())
}

/// Constant integrand: `∫_{[a,b]} C dE = C(E(b) − E(a))`, and `= C` when
/// `E(a) = 0`, `E(b) = I`.
pub fn check_constant_integrand(params: &RandomParams, threshold: f64) -> Result<CheckOutcome> {
    for_each_integral_instance(params, 2, threshold, |rng, inst, mode, tally, k| {
        let dim = inst.family.dim();
        let c = random_matrix(rng, dim, 1.0);
        let opts = IntegrateOptions::default().with_mode(mode);
        let constant = OperatorFunction::constant(c.clone());
        let r = integrate(&constant, &inst.family, inst.a, inst.b, &opts)?;
        tally.record(dist(&r.value, &c), r.converged, || format!("instance {k}, {mode:?}: full interval"));
        let lo = rng.gen_range(inst.a..inst.b);
        let hi = rng.gen_range(lo..=inst.b);
        let r = integrate(&constant, &inst.family, lo, hi, &opts)?;
        let expected = &c * &(&inst.family.evaluate(hi) - &inst.family.evaluate(lo));
        tally.record(dist(&r.value, &expected), r.converged, || format!("instance {k}, {mode:?}: [{lo}, {hi}]"));
        Ok(())
    })
}

pub fn check_linearity(params: &RandomParams, threshold: f64) -> Result<CheckOutcome> {
    for_each_integral_instance(params, 3, threshold, |_, inst, mode, tally, k| {
        let opts = IntegrateOptions::default().with_mode(mode);
        let sum = inst.phi.add(&inst.psi)?;
        let r = integrate(&sum, &inst.family, inst.a, inst.b, &opts)?;
        let r1 = integrate(&inst.phi, &inst.family, inst.a, inst.b, &opts)?;
        let r2 = integrate(&inst.psi, &inst.family, inst.a, inst.b, &opts)?;
        let ok = r.converged && r1.converged && r2.converged;
        tally.record(dist(&r.value, &(&r1.value + &r2.value)), ok, || format!("instance {k}, {mode:?}"));
        Ok(())
    })
}

/// Split point: a jump of the family one time in three, else uniform.
fn split_point(rng: &mut impl Rng, inst: &IntegralInstance) -> f64 {
    let jumps = inst.step().jumps();
    if rng.gen_bool(1.0 / 3.0) {
        let j = &jumps[rng.gen_range(0..jumps.len())];
        if j.lambda < inst.b {
            return j.lambda;
        }
    }
    rng.gen_range(inst.a..inst.b)
}

pub fn check_additivity(params: &RandomParams, threshold: f64) -> Result<CheckOutcome> {
    for_each_integral_instance(params, 4, threshold, |rng, inst, mode, tally, k| {
        let opts = IntegrateOptions::default().with_mode(mode);
        let c = split_point(rng, inst);
        let left = integrate(&inst.phi, &inst.family, inst.a, c, &opts)?;
        let right = integrate(&inst.phi, &inst.family, c, inst.b, &opts)?;
        let whole = integrate(&inst.phi, &inst.family, inst.a, inst.b, &opts)?;
        let ok = left.converged && right.converged && whole.converged;
        tally.record(dist(&(&left.value + &right.value), &whole.value), ok, || {
            format!("instance {k}, {mode:?}, split at {c}")
        });
        Ok(())
    })
}

pub fn check_subtraction(params: &RandomParams, threshold: f64) -> Result<CheckOutcome> {
    for_each_integral_instance(params, 5, threshold, |rng, inst, mode, tally, k| {
        let opts = IntegrateOptions::default().with_mode(mode);
        let b = split_point(rng, inst);
        let c = rng.gen_range(b..=inst.b);
        let ab = integrate(&inst.phi, &inst.family, inst.a, b, &opts)?;
        let ac = integrate(&inst.phi, &inst.family, inst.a, c, &opts)?;
        let bc = integrate(&inst.phi, &inst.family, b, c, &opts)?;
        let ok = ab.converged && ac.converged && bc.converged;
        tally.record(dist(&bc.value, &(&ac.value - &ab.value)), ok, || {
            format!("instance {k}, {mode:?}, [{b}, {c}]")
        });
        Ok(())
    })
}

/// Restriction: existence on `[a, b]` gives existence on `[c, d]`, and
/// `E(c)∫_{[a,b]} Φ dE = ∫_{[a,c]} Φ dE` for `Φ` commuting with `E`.
pub fn check_restriction(params: &RandomParams, threshold: f64) -> Result<CheckOutcome> {
    for_each_integral_instance(params, 6, threshold, |rng, inst, mode, tally, k| {
        let opts = IntegrateOptions::default().with_mode(mode);
        let c = split_point(rng, inst);
        let d = rng.gen_range(c..=inst.b);
        let whole = integrate(&inst.commuting, &inst.family, inst.a, inst.b, &opts)?;
        let part = integrate(&inst.commuting, &inst.family, inst.a, c, &opts)?;
        let inner = integrate(&inst.commuting, &inst.family, c, d, &opts)?;
        let projected = &inst.family.evaluate(c) * &whole.value;
        let ok = !whole.converged || (part.converged && inner.converged);
        tally.record(dist(&projected, &part.value), ok, || format!("instance {k}, {mode:?}, c = {c}"));
        Ok(())
    })
}

/// Increasing substitutions used by the change-of-variables check.
fn substitution(choice: usize) -> (&'static str, fn(f64) -> f64) {
    match choice % 3 {
        0 => ("2x + 1", |x| 2.0 * x + 1.0),
        1 => ("x + 0.3 sin x", |x| x + 0.3 * x.sin()),
        _ => ("exp", f64::exp),
    }
}

pub fn check_change_of_variables(params: &RandomParams, threshold: f64) -> Result<CheckOutcome> {
    for_each_integral_instance(params, 7, threshold, |_, inst, mode, tally, k| {
        let opts = IntegrateOptions::default().with_mode(mode);
        let (label, f) = substitution(k);
        let moved = substitute_family(&inst.family, inst.a, inst.b, f)?;
        let lhs = integrate(&inst.phi.compose(f), &inst.family, inst.a, inst.b, &opts)?;
        let rhs = integrate(&inst.phi, &moved, f(inst.a), f(inst.b), &opts)?;
        let ok = lhs.converged && rhs.converged;
        tally.record(dist(&lhs.value, &rhs.value), ok, || format!("instance {k}, {mode:?}, f = {label}"));
        Ok(())
    })
}

/// Adaptive refinement (exact path off) against the jump sum. Odd instances
/// hide the breakpoints from the engine.
pub fn check_adaptive_matches_exact(params: &RandomParams, threshold: f64) -> Result<CheckOutcome> {
    for_each_integral_instance(params, 8, threshold, |_, inst, mode, tally, k| {
        let view = if k % 2 == 0 {
            inst.family.clone()
        } else {
            inst.family.clone().without_breakpoints()
        };
        let opts = IntegrateOptions::default().with_mode(mode).adaptive();
        let exact = jump_sum_oracle(&inst.phi, inst.step(), inst.a, inst.b, mode, opts.limit_tol)?;
        let r = integrate(&inst.phi, &view, inst.a, inst.b, &opts)?;
        tally.record(dist(&r.value, &exact.value), r.converged && exact.exists(), || {
            format!("instance {k}, {mode:?}, depth {}", r.depth)
        });
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Periodic extension identities

/// Residual, block and tail identities for seeded `(Φ₁, Ẽ₁, {P_n})`, with
/// agreement of the convergence flags.
pub fn check_extension_identity(
    params: &RandomParams,
    variant: ExtensionVariant,
    mode: IntegrationMode,
    threshold: f64,
) -> Result<CheckOutcome> {
    let mut tally = Tally::new(threshold);
    for (k, (phi1, m)) in extension_instances(params, variant)?.into_iter().enumerate() {
        tally.next_instance();
        let r = verify_extension_identity(&phi1, &m.e1, &m.p, mode, &IntegrateOptions::default())?;
        let residual = r.residual.max(r.block_residual).max(r.tail_residual);
        let flags_ok = match mode {
            IntegrationMode::Right => r.lhs_converged && r.rhs_converged,
            IntegrationMode::Standard => r.iff_consistent() && r.preconditions_hold(),
        };
        tally.record(residual, flags_ok, || {
            format!(
                "instance {k}: converged lhs {} rhs {}, hypotheses {:?}",
                r.lhs_converged, r.rhs_converged, r.hypotheses
            )
        });
    }
    Ok(tally.finish())
}

pub fn check_standard_failure_detected(threshold: f64) -> Result<CheckOutcome> {
    let (phi1, e1, p) = standard_failure_instance();
    let mut tally = Tally::new(threshold);
    tally.next_instance();
    let opts = IntegrateOptions::default();
    let std = verify_extension_identity(&phi1, &e1, &p, IntegrationMode::Standard, &opts)?;
    let right = verify_extension_identity(&phi1, &e1, &p, IntegrationMode::Right, &opts)?;
    tally.record(right.residual, std.lhs_converged && !std.rhs_converged && !std.preconditions_hold(), || {
        "standard mode was not flagged".into()
    });
    tally.record(right.residual, right.lhs_converged && right.rhs_converged, || {
        "right mode did not converge".into()
    });
    // The same instance through adaptive refinement.
    let adaptive = verify_extension_identity(&phi1, &e1, &p, IntegrationMode::Standard, &opts.clone().adaptive())?;
    tally.record(0.0, !adaptive.rhs_converged, || "adaptive standard mode converged".into());
    Ok(tally.finish())
}

// ---------------------------------------------------------------------------
// Centralizers and reduced integrands

fn block_diagonal(rng: &mut impl Rng, p: &ProjectionSequence) -> Operator {
    let w = random_matrix(rng, p.dim(), 1.0);
    let blocks: Vec<Operator> = p.iter().map(|(_, pn)| &(pn * &w) * pn).collect();
    Operator::sum(p.dim(), &blocks)
}

/// Commuting with the composed family agrees with commuting with `Ẽ₁` and
/// every `P_n`, for `Ẽ₁` without mass at `1`.
pub fn check_centralizer(params: &RandomParams, threshold: f64) -> Result<CheckOutcome> {
    let mut rng = params.rng(11);
    let mut tally = Tally::new(threshold);
    for k in 0..params.instances {
        tally.next_instance();
        let spec = StoneModelSpec {
            mass_at_zero: rng.gen_bool(0.5),
            ..StoneModelSpec::new(rng.gen_range(2..=params.max_dim.max(2)), rng.gen_range(1..=params.max_radius))
        };
        let m = random_stone_model(&mut rng, spec)?;
        let d: Vec<C64> = (0..spec.dim).map(|_| random_complex(&mut rng)).collect();
        let inside = m.similarity.conjugate(&d);
        let r = centralizer_membership(&inside, &m.e1, &m.p, threshold)?;
        tally.record(r.with_composed.worst_residual.max(r.with_e1.worst_residual), r.member() && r.consistent(), || {
            format!("instance {k}: commuting operator")
        });
        for (label, v) in [("block diagonal", block_diagonal(&mut rng, &m.p)), ("generic", random_matrix(&mut rng, spec.dim, 1.0))] {
            let r = centralizer_membership(&v, &m.e1, &m.p, threshold)?;
            tally.record(0.0, r.consistent(), || format!("instance {k}: {label} operator, {r:?}"));
        }
    }
    Ok(tally.finish())
}

/// `V = ∫^r_{[0,1]} Φ₁ dẼ₁` is recovered by `pv-∫^r Φ dE` with
/// `Φ(λ) = P_n Φ₁(λ − n)`, and `Φ(λ) = Φ(λ)P_n`.
pub fn check_reduced_integrand(params: &RandomParams, threshold: f64) -> Result<CheckOutcome> {
    let mut rng = params.rng(12);
    let mut tally = Tally::new(threshold);
    let opts = IntegrateOptions::right();
    for k in 0..params.instances {
        tally.next_instance();
        let spec = StoneModelSpec {
            mass_at_zero: rng.gen_bool(0.5),
            mass_at_one: rng.gen_bool(0.5),
            ..StoneModelSpec::new(rng.gen_range(2..=params.max_dim.max(2)), rng.gen_range(1..=params.max_radius))
        };
        let m = random_stone_model(&mut rng, spec)?;
        // Even instances take values in the centralizer of the whole model,
        // odd ones only commute with the P_n.
        let coeffs = if k % 2 == 0 {
            random_trig_coefficients(&mut rng, spec.dim, 2, Some(&m.similarity))
        } else {
            (-2..=2).map(|j| (j, block_diagonal(&mut rng, &m.p))).collect()
        };
        let phi1 = trig_polynomial(coeffs, TAU * rng.gen_range(0.5..2.0))?;
        let v = integrate(&phi1, &m.e1, 0.0, 1.0, &opts)?.value;
        let phi = reduced_integrand(&phi1, &m.p, 1e-10)?;
        let e = stone_compose(&m.p, &m.e1)?;
        let rhs = integrate_line(&phi, &e, &opts)?;
        tally.record(dist(&v, &rhs.value), rhs.converged, || format!("instance {k}: reconstruction"));
        let mut worst: f64 = 0.0;
        for n in -m.p.radius() - 1..=m.p.radius() + 1 {
            for s in [0.13, 0.5, 0.77, 1.0] {
                let lambda = n as f64 + s;
                let value = phi.evaluate(lambda);
                let pn = m.p.get_or_zero(cell_index(lambda));
                worst = worst.max(dist(&value, &(&value * &pn)));
            }
        }
        tally.record(worst, true, || format!("instance {k}: range reduction"));
    }
    Ok(tally.finish())
}

// ---------------------------------------------------------------------------
// Periodic groups

fn periodic_models(params: &RandomParams) -> Result<Vec<PeriodicModel>> {
    let mut rng = params.rng(13);
    (0..params.instances)
        .map(|_| {
            let dim = rng.gen_range(1..=params.max_dim);
            let radius = rng.gen_range(1..=params.max_radius);
            crate::models::random::random_periodic_model(&mut rng, dim, radius)
        })
        .collect()
}

const PERIODIC_TIMES: [f64; 6] = [-1.3, -0.5, 0.1, 0.37, 0.7, 2.2];

/// `pv-∫ e^{2πitλ} dE(λ) = Σ e^{2πint} P_n`.
pub fn check_periodic_representation(params: &RandomParams, threshold: f64) -> Result<CheckOutcome> {
    let mut tally = Tally::new(threshold);
    for (k, m) in periodic_models(params)?.iter().enumerate() {
        tally.next_instance();
        let e = periodic_family(&m.p);
        for t in PERIODIC_TIMES {
            let r = reconstruct_representation(&e, t, &reconstruction_options())?;
            let series = Operator::sum(
                m.p.dim(),
                &m.p.iter().map(|(n, pn)| pn.scale(C64::from_polar(1.0, TAU * n as f64 * t))).collect::<Vec<_>>(),
            );
            let residual = dist(&r, &m.representation(t)).max(dist(&series, &m.representation(t)));
            tally.record(residual, true, || format!("instance {k}, t = {t}"));
        }
    }
    Ok(tally.finish())
}

/// `E(λ) = Σ_{n ≤ ⌊λ⌋} P_n`, also as the composition with the unit step.
pub fn check_periodic_family(params: &RandomParams, threshold: f64) -> Result<CheckOutcome> {
    let mut tally = Tally::new(threshold);
    for (k, m) in periodic_models(params)?.iter().enumerate() {
        tally.next_instance();
        let e = periodic_family(&m.p);
        let unit = StepSpectralFamily::unit_step(m.p.dim(), 0.0, Support::new(0.0, 1.0)?)?;
        let composed = stone_compose(&m.p, &unit.into())?;
        let r = m.p.radius() as f64;
        for lambda in sample_grid(-r - 1.5, r + 1.5, 4 * (2 * m.p.radius() as usize + 3) + 1, &[]) {
            let direct = m.family_value(lambda);
            let residual = dist(&e.evaluate(lambda), &direct).max(dist(&composed.evaluate(lambda), &direct));
            tally.record(residual, true, || format!("instance {k}, λ = {lambda}"));
        }
    }
    Ok(tally.finish())
}

/// `A = 2πi Σ n P_n`, `(A − 2πin)P_n = 0`, and the generator of the
/// periodic family agrees with `A` on every basis vector.
pub fn check_periodic_generator(params: &RandomParams, threshold: f64) -> Result<CheckOutcome> {
    let mut tally = Tally::new(threshold);
    for (k, m) in periodic_models(params)?.iter().enumerate() {
        tally.next_instance();
        let a = periodic_generator(&m.p);
        let d: Vec<C64> = m.cells.iter().map(|&n| C64::new(0.0, TAU * n as f64)).collect();
        tally.record(dist(&a, &m.similarity.conjugate(&d)), true, || format!("instance {k}: direct"));
        for (n, pn) in m.p.iter() {
            let shifted = &a - &Operator::identity(m.p.dim()).scale(C64::new(0.0, TAU * n as f64));
            tally.record((&shifted * pn).norm(NormSpec::EUCLIDEAN), true, || format!("instance {k}: eigenspace {n}"));
        }
        let e = periodic_family(&m.p);
        for j in 0..m.p.dim() {
            let x = Vector::basis(m.p.dim(), j);
            let g = generator(&e, &x, &reconstruction_options())?;
            let residual = g.value.sub(&a.apply(&x)).norm(NormSpec::EUCLIDEAN);
            tally.record(residual, g.in_domain, || format!("instance {k}: basis vector {j}"));
        }
    }
    Ok(tally.finish())
}

/// Greedy matching of two multisets of complex numbers; the worst distance
/// between matched elements (infinite on a size mismatch).
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut remaining: Vec<C64> = b.to_vec();
    let mut worst: f64 = 0.0;
    for &z in a {
        let (i, d) = remaining
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (w - z).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("equal lengths");
        worst = worst.max(d);
        remaining.swap_remove(i);
    }
    worst
}

/// Eigenvalues of `A` are `2πin` with multiplicity `rank P_n`.
pub fn check_periodic_spectrum(params: &RandomParams, threshold: f64) -> Result<CheckOutcome> {
    let mut tally = Tally::new(threshold);
    for (k, m) in periodic_models(params)?.iter().enumerate() {
        tally.next_instance();
        let eig = periodic_generator(&m.p).eigenvalues();
        let expected: Vec<C64> = m
            .p
            .iter()
            .flat_map(|(n, _)| std::iter::repeat_n(C64::new(0.0, TAU * n as f64), m.p.rank(n)))
            .collect();
        tally.record(multiset_distance(&eig, &expected), true, || format!("instance {k}"));
    }
    Ok(tally.finish())
}

/// For block-diagonal and generic `V`: commuting with the sampled `R_t`
/// agrees with commuting with every `P_n`.
pub fn check_periodic_centralizer(params: &RandomParams, threshold: f64) -> Result<CheckOutcome> {
    let mut rng = params.rng(14);
    let mut tally = Tally::new(threshold);
    for (k, m) in periodic_models(params)?.iter().enumerate() {
        tally.next_instance();
        let dim = m.p.dim();
        for (label, v, member) in [
            ("block diagonal", block_diagonal(&mut rng, &m.p), true),
            ("generic", random_matrix(&mut rng, dim, 1.0), false),
        ] {
            let mut with_group: f64 = 0.0;
            for t in PERIODIC_TIMES {
                with_group = with_group.max(commutator_norm(&v, &m.representation(t), NormSpec::EUCLIDEAN)?);
            }
            let mut with_p: f64 = 0.0;
            for (_, pn) in m.p.iter() {
                with_p = with_p.max(commutator_norm(&v, pn, NormSpec::EUCLIDEAN)?);
            }
            let agree = (with_group <= threshold) == (with_p <= threshold);
            // A generic V may still commute when only one block is used.
            let trivially_member = m.p.iter().filter(|(_, pn)| pn.max_abs() > 0.0).count() == 1;
            let expected = member || trivially_member;
            let residual = if member { with_group.max(with_p) } else { 0.0 };
            tally.record(residual, agree && (with_p <= threshold) == expected, || {
                format!("instance {k}: {label}, group {with_group:.2e}, blocks {with_p:.2e}")
            });
        }
    }
    Ok(tally.finish())
}

// ---------------------------------------------------------------------------
// Line and torus models

pub const LINE_TIMES: [f64; 10] = [0.0, 0.3, -0.3, 1.0, std::f64::consts::SQRT_2, -1.7, 2.5, 0.05, -3.1, 4.2];

/// `e^{iA₁} = R_1`, `spec A₁ ⊂ [0, 2π)` and the trigonometric decomposition
/// of `Ẽ₁` returns `R_1`.
pub fn check_line_invariants(m: &LineModel, threshold: f64) -> Result<CheckOutcome> {
    let mut tally = Tally::new(threshold);
    tally.next_instance();
    let r1 = m.representation.at(1.0);
    let exp_a1 = Operator::from_diagonal(&m.a1.diagonal().iter().map(|z| C64::from_polar(1.0, z.re)).collect::<Vec<_>>());
    let in_range = m.a1.diagonal().iter().all(|z| z.im == 0.0 && (0.0..TAU).contains(&z.re));
    tally.record(dist(&exp_a1, &r1), in_range, || "exp(iA₁) or spectrum of A₁".into());
    tally.record(dist(&trig_well_bounded_value(&m.e1_tilde)?, &r1), true, || "trigonometric decomposition".into());
    Ok(tally.finish())
}

/// `pv-∫ e^{itλ} dE(λ) = R_t` for the angular family and for the composed
/// family in cycles.
pub fn check_line_reconstruction(m: &LineModel, times: &[f64], threshold: f64) -> Result<CheckOutcome> {
    let mut tally = Tally::new(threshold);
    for &t in times {
        tally.next_instance();
        let direct = m.representation.at(t);
        for (label, e) in [("angular", &m.family), ("composed", &m.composed)] {
            let r = reconstruct_representation(e, t, &reconstruction_options())?;
            tally.record(dist(&r, &direct), true, || format!("{label}, t = {t}"));
        }
    }
    Ok(tally.finish())
}

/// `A e_j = iτ_j e_j` through both families.
pub fn check_line_generator(m: &LineModel, threshold: f64) -> Result<CheckOutcome> {
    let mut tally = Tally::new(threshold);
    for (j, &tau) in m.frequencies.iter().enumerate() {
        tally.next_instance();
        let x = Vector::basis(m.dim(), j);
        let expected = x.scale(C64::new(0.0, tau));
        for (label, e) in [("angular", &m.family), ("composed", &m.composed)] {
            let g = generator(e, &x, &reconstruction_options())?;
            tally.record(g.value.sub(&expected).norm(NormSpec::EUCLIDEAN), g.in_domain, || {
                format!("{label}, coordinate {j}")
            });
        }
    }
    Ok(tally.finish())
}

/// Seeded per-cell symbols reproduce their multiplier through the scalar
/// integrand.
pub fn check_line_scalar_representation(m: &LineModel, seed: u64, threshold: f64) -> Result<CheckOutcome> {
    let mut tally = Tally::new(threshold);
    for k in 0..3u64 {
        tally.next_instance();
        let symbols = CellSymbols::random(m.radius, 2, seed.wrapping_add(k));
        let r = scalar_representation(m, &symbols, &IntegrateOptions::default())?;
        tally.record(r.integrand_residual.max(r.scalar_residual), r.converged, || format!("symbols {k}"));
    }
    Ok(tally.finish())
}

pub fn check_torus_invariants(m: &TorusModel, threshold: f64) -> Result<CheckOutcome> {
    let mut tally = Tally::new(threshold);
    tally.next_instance();
    let residual = m.commutation_residual(&LINE_TIMES)?;
    let ranks_ok = m.p.iter().all(|(n, _)| m.p.rank(n) == (2 * m.m_radius + 1) as usize);
    tally.record(residual, ranks_ok, || "commutation or block dimension".into());
    Ok(tally.finish())
}

/// Expected failure: `V` is not `Σ c_n P_n`. Passes when `max_n r_n`
/// exceeds `margin`; the residual reported is `max_n r_n`.
pub fn check_torus_non_representability(m: &TorusModel, ns: NormSpec, margin: f64) -> Result<CheckOutcome> {
    let report = scalar_representability_test(&m.v, &m.p, ns)?;
    let passed = report.max_residual > margin;
    Ok(CheckOutcome {
        residual: report.max_residual,
        passed,
        instances: report.blocks.len(),
        detail: format!(
            "max_n r_n = {:.6} over {} blocks (M = {}); {}",
            report.max_residual,
            report.blocks.len(),
            m.m_radius,
            if passed { "not representable, as expected" } else { "unexpectedly close to scalar" }
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::line::build_line_model;
    use crate::models::torus::build_torus_model;

    fn small() -> RandomParams {
        RandomParams {
            max_dim: 6,
            max_radius: 3,
            ..RandomParams::new(42, 6)
        }
    }

    #[test]
    fn integral_checks_pass() {
        let p = small();
        for (name, out) in [
            ("constant", check_constant_integrand(&p, 1e-10).unwrap()),
            ("linearity", check_linearity(&p, 1e-10).unwrap()),
            ("additivity", check_additivity(&p, 1e-10).unwrap()),
            ("subtraction", check_subtraction(&p, 1e-10).unwrap()),
            ("restriction", check_restriction(&p, 1e-10).unwrap()),
            ("change of variables", check_change_of_variables(&p, 1e-10).unwrap()),
            ("adaptive", check_adaptive_matches_exact(&p, 1e-8).unwrap()),
        ] {
            assert!(out.passed, "{name}: {}", out.detail);
        }
    }

    #[test]
    fn stone_checks_pass() {
        let p = small();
        for (name, out) in [
            ("axioms", check_family_axioms(&p).unwrap()),
            (
                "full",
                check_extension_identity(&p, ExtensionVariant::Full, IntegrationMode::Standard, 1e-10).unwrap(),
            ),
            (
                "minimal",
                check_extension_identity(&p, ExtensionVariant::Minimal, IntegrationMode::Right, 1e-10).unwrap(),
            ),
            ("failure", check_standard_failure_detected(1e-10).unwrap()),
            ("centralizer", check_centralizer(&p, 1e-10).unwrap()),
            ("reduced", check_reduced_integrand(&p, 1e-10).unwrap()),
            ("periodic representation", check_periodic_representation(&p, 1e-8).unwrap()),
            ("periodic family", check_periodic_family(&p, 1e-8).unwrap()),
            ("periodic generator", check_periodic_generator(&p, 1e-8).unwrap()),
            ("periodic spectrum", check_periodic_spectrum(&p, 1e-8).unwrap()),
            ("periodic centralizer", check_periodic_centralizer(&p, 1e-10).unwrap()),
        ] {
            assert!(out.passed, "{name}: {}", out.detail);
        }
    }

    #[test]
    fn model_checks_pass() {
        let m = build_line_model(2, 2, 42).unwrap();
        assert!(check_line_invariants(&m, 1e-10).unwrap().passed);
        assert!(check_line_reconstruction(&m, &LINE_TIMES, 1e-10).unwrap().passed);
        assert!(check_line_generator(&m, 1e-10).unwrap().passed);
        assert!(check_line_scalar_representation(&m, 5, 1e-10).unwrap().passed);
        let t = build_torus_model(1, 2, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(check_torus_invariants(&t, 1e-12).unwrap().passed);
        let out = check_torus_non_representability(&t, NormSpec::EUCLIDEAN, 0.5).unwrap();
        assert!(out.passed && (out.residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multisets() {
        let a = [C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 2.0)];
        let b = [C64::new(0.0, 2.0), C64::new(1.0, 1e-9), C64::new(1.0, 0.0)];
        assert!(multiset_distance(&a, &b) <= 1e-9);
        assert_eq!(multiset_distance(&a, &b[..2]), f64::INFINITY);
    }
}
