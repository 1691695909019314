use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::family::step::{StepSpectralFamily, Support};
use crate::operator::Operator;

/// How a view was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Step,
    Composed,
    Substituted,
    Custom,
}

/// Unit of the spectral parameter.
///
/// `Angular` families pair with the kernel `e^{its}` and the generator
/// `i∫s dE`; `Cycles` families (the integer-periodic parametrization used by
/// the composition `Σ_{n<[λ]} P_n + P_{[λ]}Ẽ₁(λ−[λ])`) pair with `e^{2πits}`
/// and `2πi∫s dE`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralUnit {
    Angular,
    Cycles,
}

impl SpectralUnit {
    /// Factor `c` such that the group is `R_t = ∫ e^{ict s} dE(s)`.
    pub fn angular_factor(&self) -> f64 {
        match self {
            SpectralUnit::Angular => 1.0,
            SpectralUnit::Cycles => std::f64::consts::TAU,
        }
    }
}

type Evaluator = dyn Fn(f64) -> Operator + Send + Sync;

/// A spectral family `E(·)` given by its evaluator, with its breakpoints and,
/// when available, an exact step representation.
///
/// The breakpoint list is either complete (every jump of `E` appears in it;
/// extra points are harmless) or empty, meaning the jumps are unknown.
#[derive(Clone)]
pub struct SpectralFamilyView {
    dim: usize,
    support: Support,
    kind: FamilyKind,
    unit: SpectralUnit,
    breakpoints: Arc<Vec<f64>>,
    step: Option<Arc<StepSpectralFamily>>,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for SpectralFamilyView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralFamilyView")
            .field("dim", &self.dim)
            .field("support", &self.support)
            .field("kind", &self.kind)
            .field("unit", &self.unit)
            .field("breakpoints", &self.breakpoints.len())
            .field("step", &self.step.is_some())
            .finish()
    }
}

impl From<StepSpectralFamily> for SpectralFamilyView {
    fn from(step: StepSpectralFamily) -> Self {
        SpectralFamilyView::from_step(step)
    }
}

impl SpectralFamilyView {
    pub fn from_step(step: StepSpectralFamily) -> Self {
        let step = Arc::new(step);
        let s = Arc::clone(&step);
        Self {
            dim: step.dim(),
            support: step.support(),
            kind: FamilyKind::Step,
            unit: SpectralUnit::Angular,
            breakpoints: Arc::new(step.breakpoints()),
            step: Some(step),
            eval: Arc::new(move |lambda| s.evaluate(lambda)),
        }
    }

    /// A family known only through its evaluator. `breakpoints` must list
    /// every jump, or be empty when the jumps are unknown.
    pub fn from_evaluator(
        dim: usize,
        support: Support,
        mut breakpoints: Vec<f64>,
        eval: impl Fn(f64) -> Operator + Send + Sync + 'static,
    ) -> Self {
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Self {
            dim,
            support,
            kind: FamilyKind::Custom,
            unit: SpectralUnit::Angular,
            breakpoints: Arc::new(breakpoints),
            step: None,
            eval: Arc::new(eval),
        }
    }

    pub(crate) fn assemble(
        dim: usize,
        support: Support,
        kind: FamilyKind,
        unit: SpectralUnit,
        mut breakpoints: Vec<f64>,
        step: Option<StepSpectralFamily>,
        eval: Arc<Evaluator>,
    ) -> Self {
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Self {
            dim,
            support,
            kind,
            unit,
            breakpoints: Arc::new(breakpoints),
            step: step.map(Arc::new),
            eval,
        }
    }

    pub fn evaluate(&self, lambda: f64) -> Operator {
        (self.eval)(lambda)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn unit(&self) -> SpectralUnit {
        self.unit
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Breakpoints with `lo < λ < hi`.
    pub fn breakpoints_inside(&self, lo: f64, hi: f64) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints
            .iter()
            .copied()
            .filter(move |&b| lo < b && b < hi)
    }

    pub fn step(&self) -> Option<&StepSpectralFamily> {
        self.step.as_deref()
    }

    pub fn with_unit(mut self, unit: SpectralUnit) -> Self {
        self.unit = unit;
        self
    }

    /// Drops the exact step representation so integration falls back to
    /// adaptive refinement.
    pub fn evaluator_only(mut self) -> Self {
        self.step = None;
        self
    }

    /// Forgets the known breakpoints (and the step data, which would reveal
    /// them).
    pub fn without_breakpoints(mut self) -> Self {
        self.step = None;
        self.breakpoints = Arc::new(Vec::new());
        self
    }
}
