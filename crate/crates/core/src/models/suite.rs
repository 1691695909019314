//! The end-to-end verification suite: a JSON-configurable list of checks
//! run over seeded instances and the concrete models.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::SCHEMA_VERSION;
use crate::integration::IntegrationMode;
use crate::models::checks::*;
use crate::models::line::build_line_model;
use crate::models::torus::build_torus_model;
use crate::operator::NormSpec;

/// Default threshold for exact identities.
pub const IDENTITY_THRESHOLD: f64 = 1e-10;
/// Default threshold for adaptive refinement and the periodic checks.
pub const REFINEMENT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Seeded step families, integrands and composed models.
    Random,
    /// Seeded periodic groups `Σ e^{2πint} P_n`.
    Periodic,
    /// Truncated Fourier multiplier model on the line.
    Line,
    /// Translations on the 2-torus.
    Torus,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Random => "random",
            ModelKind::Periodic => "periodic",
            ModelKind::Line => "line",
            ModelKind::Torus => "torus",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub schema_version: u32,
    pub seed: u64,
    /// Cell radius `N` of the line model.
    pub radius: i64,
    /// Frequencies per cell of the line model.
    pub per_cell: usize,
    /// Cell radius of the torus model.
    pub torus_n: i64,
    /// Values of `M` for the torus model.
    pub torus_m: Vec<i64>,
    pub theta: f64,
    /// Smallest `max_n r_n` accepted as non-representable.
    pub torus_margin: f64,
    /// Overrides every check threshold when set.
    pub tol: Option<f64>,
    pub norm_p: NormSpec,
    pub modes: Vec<IntegrationMode>,
    /// Seeded instances per randomized check.
    pub instances: usize,
    pub max_dim: usize,
    /// Largest cell radius of the random composed models.
    pub max_radius: i64,
    pub models: Vec<ModelKind>,
    /// Adds wall-clock times to the report, which then differs run to run.
    pub record_timings: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 42,
            radius: 4,
            per_cell: 2,
            torus_n: 1,
            torus_m: vec![1, 2, 3],
            theta: FRAC_PI_2,
            torus_margin: 0.5,
            tol: None,
            norm_p: NormSpec::EUCLIDEAN,
            modes: vec![IntegrationMode::Standard, IntegrationMode::Right],
            instances: 20,
            max_dim: 8,
            max_radius: 4,
            models: vec![ModelKind::Random, ModelKind::Periodic, ModelKind::Line, ModelKind::Torus],
            record_timings: false,
        }
    }
}

impl SuiteConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SuiteConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.radius < 1 || self.per_cell < 1 {
            return fail(format!("line model needs radius ≥ 1 and per_cell ≥ 1, got {} and {}", self.radius, self.per_cell));
        }
        if self.torus_n < 1 || self.torus_m.iter().any(|&m| m < 1) {
            return fail("torus_n and every torus_m must be ≥ 1".into());
        }
        if !self.theta.is_finite() || !self.torus_margin.is_finite() {
            return fail("theta and torus_margin must be finite".into());
        }
        if let Some(t) = self.tol {
            if !(t.is_finite() && t > 0.0) {
                return fail(format!("tol must be positive, got {t}"));
            }
        }
        if self.instances == 0 || self.max_dim == 0 || self.max_radius < 1 {
            return fail("instances, max_dim and max_radius must be ≥ 1".into());
        }
        if self.modes.is_empty() || self.models.is_empty() {
            return fail("modes and models must be non-empty".into());
        }
        Ok(())
    }

    fn threshold(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn params(&self) -> RandomParams {
        RandomParams {
            seed: self.seed,
            instances: self.instances,
            max_dim: self.max_dim,
            max_radius: self.max_radius,
            modes: self.modes.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub model: ModelKind,
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
    /// The check demonstrates an obstruction; `passed` means the
    /// obstruction was observed.
    pub expected_failure: bool,
    pub instances: usize,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub seed: u64,
    pub config: SuiteConfig,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

type CheckFn<'a> = Box<dyn Fn() -> Result<CheckOutcome> + Send + Sync + 'a>;

struct Planned<'a> {
    name: String,
    model: ModelKind,
    threshold: f64,
    expected_failure: bool,
    run: CheckFn<'a>,
}

fn planned<'a>(
    name: impl Into<String>,
    model: ModelKind,
    threshold: f64,
    run: impl Fn() -> Result<CheckOutcome> + Send + Sync + 'a,
) -> Planned<'a> {
    Planned {
        name: name.into(),
        model,
        threshold,
        expected_failure: false,
        run: Box::new(run),
    }
}

fn plan(config: &SuiteConfig) -> Vec<Planned<'_>> {
    let params = config.params();
    let exact = config.threshold(IDENTITY_THRESHOLD);
    let refined = config.threshold(REFINEMENT_THRESHOLD);
    let mut checks = Vec::new();
    for &model in &config.models {
        match model {
            ModelKind::Random => {
                let p = params.clone();
                checks.push(planned("family-axioms", model, 1e-9, move || check_family_axioms(&p)));
                type IntegralCheck = fn(&RandomParams, f64) -> Result<CheckOutcome>;
                let integral: [(&str, IntegralCheck, f64); 7] = [
                    ("integral-constant", check_constant_integrand, exact),
                    ("integral-linearity", check_linearity, exact),
                    ("integral-additivity", check_additivity, exact),
                    ("integral-subtraction", check_subtraction, exact),
                    ("integral-restriction", check_restriction, exact),
                    ("integral-change-of-variables", check_change_of_variables, exact),
                    ("adaptive-matches-exact", check_adaptive_matches_exact, refined),
                ];
                for (name, f, threshold) in integral {
                    let p = params.clone();
                    checks.push(planned(name, model, threshold, move || f(&p, threshold)));
                }
                for &mode in &config.modes {
                    let (name, variant) = match mode {
                        IntegrationMode::Standard => ("extension-identity-standard", ExtensionVariant::Full),
                        IntegrationMode::Right => ("extension-identity-right", ExtensionVariant::Minimal),
                    };
                    let p = params.clone();
                    checks.push(planned(name, model, exact, move || {
                        check_extension_identity(&p, variant, mode, exact)
                    }));
                }
                checks.push(planned("standard-failure-detected", model, exact, move || {
                    check_standard_failure_detected(exact)
                }));
                let p = params.clone();
                checks.push(planned("centralizer-characterization", model, exact, move || check_centralizer(&p, exact)));
                let p = params.clone();
                checks.push(planned("reduced-integrand", model, exact, move || check_reduced_integrand(&p, exact)));
            }
            ModelKind::Periodic => {
                type PeriodicCheck = fn(&RandomParams, f64) -> Result<CheckOutcome>;
                let periodic: [(&str, PeriodicCheck, f64); 5] = [
                    ("periodic-representation", check_periodic_representation, refined),
                    ("periodic-family", check_periodic_family, refined),
                    ("periodic-generator", check_periodic_generator, refined),
                    ("periodic-spectrum", check_periodic_spectrum, refined),
                    ("periodic-centralizer", check_periodic_centralizer, exact),
                ];
                for (name, f, threshold) in periodic {
                    let p = params.clone();
                    checks.push(planned(name, model, threshold, move || f(&p, threshold)));
                }
            }
            ModelKind::Line => {
                let (radius, per_cell, seed) = (config.radius, config.per_cell, config.seed);
                let line = move || build_line_model(radius, per_cell, seed);
                checks.push(planned("line-invariants", model, exact, move || check_line_invariants(&line()?, exact)));
                checks.push(planned("line-reconstruction", model, exact, move || {
                    check_line_reconstruction(&line()?, &LINE_TIMES, exact)
                }));
                checks.push(planned("line-generator", model, exact, move || check_line_generator(&line()?, exact)));
                checks.push(planned("line-scalar-representation", model, exact, move || {
                    check_line_scalar_representation(&line()?, seed.wrapping_add(1), exact)
                }));
            }
            ModelKind::Torus => {
                for &m in &config.torus_m {
                    let (n, theta, ns, margin) = (config.torus_n, config.theta, config.norm_p, config.torus_margin);
                    checks.push(planned(format!("torus-invariants-m{m}"), model, 1e-12, move || {
                        check_torus_invariants(&build_torus_model(n, m, theta)?, 1e-12)
                    }));
                    let mut c = planned(format!("torus-non-representability-m{m}"), model, margin, move || {
                        check_torus_non_representability(&build_torus_model(n, m, theta)?, ns, margin)
                    });
                    c.expected_failure = true;
                    checks.push(c);
                }
            }
        }
    }
    checks
}

fn execute(check: &Planned<'_>, record_timings: bool) -> CheckResult {
    let start = Instant::now();
    let outcome = (check.run)();
    let runtime_ms = record_timings.then(|| start.elapsed().as_secs_f64() * 1e3);
    let (residual, passed, instances, detail) = match outcome {
        Ok(o) => (o.residual, o.passed, o.instances, o.detail),
        Err(e) => (f64::INFINITY, false, 0, format!("error: {e}")),
    };
    CheckResult {
        name: check.name.clone(),
        model: check.model,
        residual,
        threshold: check.threshold,
        passed,
        expected_failure: check.expected_failure,
        instances,
        detail,
        runtime_ms,
    }
}

/// Runs every planned check concurrently; results keep the planned order.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let planned = plan(config);
    let checks: Vec<CheckResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = planned
            .iter()
            .map(|c| scope.spawn(move || execute(c, config.record_timings)))
            .collect();
        handles
            .into_iter()
            .zip(&planned)
            .map(|(h, c)| {
                h.join().unwrap_or_else(|_| CheckResult {
                    name: c.name.clone(),
                    model: c.model,
                    residual: f64::INFINITY,
                    threshold: c.threshold,
                    passed: false,
                    expected_failure: c.expected_failure,
                    instances: 0,
                    detail: "check panicked".into(),
                    runtime_ms: None,
                })
            })
            .collect()
    });
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        config: config.clone(),
        checks,
        all_passed,
    })
}
