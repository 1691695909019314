use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::SpectralFamilyView;
use crate::integration::function::OperatorFunction;
use crate::integration::oracle::{jump_sum_oracle, IntegrationMode, DEFAULT_LIMIT_TOL};
use crate::integration::partition::{midpoint, random_in, MarkerStrategy};
use crate::operator::{NormSpec, Operator};

pub const DEFAULT_ADAPTIVE_TOL: f64 = 1e-8;
pub const DEFAULT_EXACT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_DEPTH: u32 = 20;
pub const DEFAULT_A_MAX: u32 = 64;
pub const DEFAULT_SPLIT: usize = 8;

/// Offset of the first interior node of the cross-check grid, as a fraction
/// of the interval; irrational so it avoids the breakpoints of typical data.
/// A cell narrower than this many units of `ε·(b − a)` locates its jump.
const RESOLUTION_ULPS: f64 = 4.0;
const PERTURBED_NODE: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub mode: IntegrationMode,
    /// Convergence tolerance; `None` picks 1e-12 on the exact path and 1e-8
    /// for adaptive refinement.
    pub tol: Option<f64>,
    pub max_depth: u32,
    /// Use the exact jump sum when the integrator carries step data.
    pub exact_path: bool,
    /// Number of equal parts each active cell is split into per depth.
    pub split: usize,
    pub seed: u64,
    /// Threshold for one-sided limit mismatches at jumps.
    pub limit_tol: f64,
    /// Largest half-width tried by line integrals.
    pub a_max: u32,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            mode: IntegrationMode::Standard,
            tol: None,
            max_depth: DEFAULT_MAX_DEPTH,
            exact_path: true,
            split: DEFAULT_SPLIT,
            seed: 0x5eed,
            limit_tol: DEFAULT_LIMIT_TOL,
            a_max: DEFAULT_A_MAX,
        }
    }
}

impl IntegrateOptions {
    pub fn standard() -> Self {
        Self::default()
    }

    pub fn right() -> Self {
        Self {
            mode: IntegrationMode::Right,
            ..Self::default()
        }
    }

    pub fn with_mode(mut self, mode: IntegrationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn with_max_depth(mut self, depth: u32) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Disables the exact jump-sum path.
    pub fn adaptive(mut self) -> Self {
        self.exact_path = false;
        self
    }

    fn tol_for(&self, exact: bool) -> f64 {
        self.tol.unwrap_or(if exact {
            DEFAULT_EXACT_TOL
        } else {
            DEFAULT_ADAPTIVE_TOL
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: Operator,
    pub converged: bool,
    /// Refinement levels used (0 on the exact path).
    pub depth: u32,
    /// Largest distance between values from different marker strategies
    /// (standard mode) or between the main and the perturbed grid (right
    /// mode). On the exact path: the worst one-sided limit mismatch when the
    /// integral fails to exist, else 0.
    pub strategy_spread: f64,
    /// Distance between the last two refinement levels.
    pub increment: f64,
    /// Line integrals: norm of the last `[−a, a]` increment.
    pub tail_estimate: f64,
    /// Line integrals: the half-width `a` reached.
    pub extent: u32,
    pub mode: IntegrationMode,
    pub exact: bool,
}

struct Cell {
    lo: f64,
    hi: f64,
    delta: Operator,
    /// The right end sits on the (only) jump inside the cell.
    resolved: bool,
}

struct Grid {
    cells: Vec<Cell>,
    /// Cells this narrow count as located.
    min_width: f64,
}

impl Grid {
    /// Cells between consecutive `nodes` with nonzero increment. A cell is
    /// resolved when its right end is a declared breakpoint.
    fn new(psi: &SpectralFamilyView, nodes: &[f64], declared: &[f64], min_width: f64) -> Self {
        let values: Vec<Operator> = nodes.iter().map(|&x| psi.evaluate(x)).collect();
        let mut cells = Vec::new();
        for (w, e) in nodes.windows(2).zip(values.windows(2)) {
            let delta = &e[1] - &e[0];
            if delta.max_abs() > 0.0 {
                cells.push(Cell {
                    lo: w[0],
                    hi: w[1],
                    delta,
                    resolved: declared.binary_search_by(|b| b.total_cmp(&w[1])).is_ok(),
                });
            }
        }
        Self { cells, min_width }
    }

    fn all_resolved(&self) -> bool {
        self.cells.iter().all(|c| c.resolved)
    }

    /// Splits cells into `split` equal parts; `all` also splits resolved
    /// cells. Cells too narrow to split, or narrower than `min_width`, become
    /// resolved. Returns whether any cell was split.
    fn refine(&mut self, psi: &SpectralFamilyView, split: usize, all: bool) -> bool {
        let mut progressed = false;
        let mut next = Vec::with_capacity(self.cells.len());
        for cell in self.cells.drain(..) {
            if cell.resolved && !all {
                next.push(cell);
                continue;
            }
            let width = cell.hi - cell.lo;
            let mut interior: Vec<f64> = (1..split)
                .map(|k| cell.lo + width * k as f64 / split as f64)
                .filter(|&x| cell.lo < x && x < cell.hi)
                .collect();
            interior.dedup();
            if interior.is_empty() || (!cell.resolved && width <= self.min_width) {
                next.push(Cell {
                    resolved: true,
                    ..cell
                });
                continue;
            }
            progressed = true;
            let mut lo = cell.lo;
            let mut e_lo = psi.evaluate(lo);
            let last = interior.len();
            for (k, hi) in interior.into_iter().chain(std::iter::once(cell.hi)).enumerate() {
                let e_hi = psi.evaluate(hi);
                let delta = &e_hi - &e_lo;
                if delta.max_abs() > 0.0 {
                    next.push(Cell {
                        lo,
                        hi,
                        delta,
                        resolved: k == last && cell.resolved,
                    });
                }
                lo = hi;
                e_lo = e_hi;
            }
        }
        self.cells = next;
        progressed
    }

    fn sum(&self, phi: &OperatorFunction, dim: usize, markers: impl Iterator<Item = f64>) -> Result<Operator> {
        let mut acc = Operator::zeros(dim);
        for (cell, m) in self.cells.iter().zip(markers) {
            acc += &(&phi.try_evaluate(m)? * &cell.delta);
        }
        Ok(acc)
    }

    fn strategy_sum(
        &self,
        phi: &OperatorFunction,
        dim: usize,
        strategy: MarkerStrategy,
    ) -> Result<Operator> {
        match strategy {
            MarkerStrategy::Left => self.sum(phi, dim, self.cells.iter().map(|c| c.lo)),
            MarkerStrategy::Right => self.sum(phi, dim, self.cells.iter().map(|c| c.hi)),
            MarkerStrategy::Midpoint => self.sum(phi, dim, self.cells.iter().map(|c| midpoint(c.lo, c.hi))),
            MarkerStrategy::SeededRandom(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let markers: Vec<f64> = self.cells.iter().map(|c| random_in(&mut rng, c.lo, c.hi)).collect();
                self.sum(phi, dim, markers.into_iter())
            }
        }
    }
}

fn check_inputs(phi: &OperatorFunction, psi: &SpectralFamilyView, a: f64, b: f64) -> Result<()> {
    if phi.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: phi.dim(),
        });
    }
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::InvalidInterval { lo: a, hi: b });
    }
    Ok(())
}

/// Integral of `Φ` against `Ψ` over `[a, b]` (increments only, so a jump of
/// `Ψ` at `a` does not contribute).
///
/// With step data and `exact_path`, the value is the exact jump sum and
/// convergence reflects the existence of the net limit. Otherwise the
/// integral is refined adaptively: the depth-0 partition is `{a, b}` plus
/// the known breakpoints, and each depth splits every cell with nonzero
/// increment into `split` parts (cells where `Ψ` is flat are exact and are
/// dropped). Standard mode compares the left, right, midpoint and seeded
/// random marker sums; right mode uses right markers, keeps splitting cells
/// whose jump is not located, and cross-checks against a second grid whose
/// nodes avoid the breakpoints. The returned value is the right-marker sum.
pub fn integrate(
    phi: &OperatorFunction,
    psi: &SpectralFamilyView,
    a: f64,
    b: f64,
    opts: &IntegrateOptions,
) -> Result<IntegralResult> {
    check_inputs(phi, psi, a, b)?;
    let dim = psi.dim();
    if let (Some(step), true) = (psi.step(), opts.exact_path) {
        let oracle = jump_sum_oracle(phi, step, a, b, opts.mode, opts.limit_tol)?;
        let converged = oracle.exists();
        return Ok(IntegralResult {
            strategy_spread: if converged { 0.0 } else { oracle.worst_left_residual() },
            value: oracle.value,
            converged,
            depth: 0,
            increment: 0.0,
            tail_estimate: 0.0,
            extent: 0,
            mode: opts.mode,
            exact: true,
        });
    }
    if opts.split < 2 {
        return Err(Error::Config(format!("split factor must be at least 2, got {}", opts.split)));
    }
    let tol = opts.tol_for(false);
    let ns = NormSpec::EUCLIDEAN;

    let declared = psi.breakpoints();
    let mut nodes = vec![a];
    nodes.extend(psi.breakpoints_inside(a, b));
    nodes.push(b);
    nodes.dedup();
    let min_width = RESOLUTION_ULPS * f64::EPSILON * (b - a);
    let mut main = Grid::new(psi, &nodes, declared, min_width);

    let mut cross = match opts.mode {
        IntegrationMode::Right if !main.all_resolved() => {
            let mid = a + PERTURBED_NODE * (b - a);
            let mut nodes = vec![a, mid, b];
            nodes.dedup();
            Some(Grid::new(psi, &nodes, &[], min_width))
        }
        _ => None,
    };

    let strategies = [
        MarkerStrategy::Right,
        MarkerStrategy::Left,
        MarkerStrategy::Midpoint,
        MarkerStrategy::SeededRandom(opts.seed),
    ];
    let mut depth = 0u32;
    let mut prev: Option<Operator> = None;
    loop {
        let (value, spread) = match opts.mode {
            IntegrationMode::Standard => {
                let seed_for_depth = opts.seed.wrapping_add(u64::from(depth).wrapping_mul(0x9e37_79b9));
                let sums = strategies
                    .iter()
                    .map(|&s| {
                        let s = match s {
                            MarkerStrategy::SeededRandom(_) => MarkerStrategy::SeededRandom(seed_for_depth),
                            other => other,
                        };
                        main.strategy_sum(phi, dim, s)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut spread: f64 = 0.0;
                for i in 0..sums.len() {
                    for j in i + 1..sums.len() {
                        spread = spread.max(sums[i].distance(&sums[j], ns));
                    }
                }
                (sums.into_iter().next().expect("four strategies"), spread)
            }
            IntegrationMode::Right => {
                let value = main.strategy_sum(phi, dim, MarkerStrategy::Right)?;
                let spread = match &cross {
                    Some(g) => g.strategy_sum(phi, dim, MarkerStrategy::Right)?.distance(&value, ns),
                    None => 0.0,
                };
                (value, spread)
            }
        };
        let resolved = match opts.mode {
            IntegrationMode::Standard => true,
            IntegrationMode::Right => main.all_resolved() && cross.as_ref().is_none_or(Grid::all_resolved),
        };
        let increment = prev.as_ref().map(|p| p.distance(&value, ns));
        let done = |converged: bool, depth: u32, increment: f64, value: Operator| IntegralResult {
            value,
            converged,
            depth,
            strategy_spread: spread,
            increment,
            tail_estimate: 0.0,
            extent: 0,
            mode: opts.mode,
            exact: false,
        };
        if let Some(inc) = increment {
            if inc <= tol && spread <= tol && resolved {
                return Ok(done(true, depth, inc, value));
            }
        }
        if depth >= opts.max_depth {
            return Ok(done(false, depth, increment.unwrap_or(f64::INFINITY), value));
        }
        let all = opts.mode == IntegrationMode::Standard;
        let mut progressed = main.refine(psi, opts.split, all);
        if let Some(g) = cross.as_mut() {
            progressed |= g.refine(psi, opts.split, all);
        }
        if !progressed {
            // Another level would reproduce the same sums exactly.
            let resolved = main.all_resolved() && cross.as_ref().is_none_or(Grid::all_resolved);
            let converged = spread <= tol && (resolved || opts.mode == IntegrationMode::Standard);
            return Ok(done(converged, depth + 1, 0.0, value));
        }
        depth += 1;
        prev = Some(value);
    }
}

/// Principal-value integral `lim_{a→∞} ∫_{[−a, a]} Φ dΨ` over integer `a`.
///
/// The partial integrals are accumulated by interval additivity:
/// `I_a = I_{a−1} + ∫_{[−a, −a+1]} + ∫_{[a−1, a]}`. The loop stops at the
/// first `a` whose increment is within tolerance. When `Ψ` has finite
/// support `[lo, hi]` the loop instead stops at the first `a` with `−a < lo`
/// and `a ≥ hi`: `Ψ` is constant beyond that, so the tail is exactly zero.
/// Without convergence by `a_max` the best estimate is returned with
/// `converged = false`.
pub fn integrate_line(
    phi: &OperatorFunction,
    psi: &SpectralFamilyView,
    opts: &IntegrateOptions,
) -> Result<IntegralResult> {
    if phi.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: phi.dim(),
        });
    }
    let ns = NormSpec::EUCLIDEAN;
    let tol = opts.tol_for(psi.step().is_some() && opts.exact_path);
    let support = psi.support();
    let mut value = Operator::zeros(psi.dim());
    let mut pieces_converged = true;
    let mut depth = 0;
    let mut spread: f64 = 0.0;
    let mut tail = f64::INFINITY;
    for a in 1..=opts.a_max {
        let x = f64::from(a);
        let left = integrate(phi, psi, -x, -x + 1.0, opts)?;
        let right = integrate(phi, psi, x - 1.0, x, opts)?;
        pieces_converged &= left.converged && right.converged;
        depth = depth.max(left.depth).max(right.depth);
        spread = spread.max(left.strategy_spread).max(right.strategy_spread);
        let increment = &left.value + &right.value;
        value += &increment;
        let covered = support.is_finite() && -x < support.lo && x >= support.hi;
        tail = if covered { 0.0 } else { increment.norm(ns) };
        if tail <= tol && (covered || !support.is_finite()) {
            return Ok(IntegralResult {
                value,
                converged: pieces_converged,
                depth,
                strategy_spread: spread,
                increment: tail,
                tail_estimate: tail,
                extent: a,
                mode: opts.mode,
                exact: psi.step().is_some() && opts.exact_path,
            });
        }
    }
    Ok(IntegralResult {
        value,
        converged: false,
        depth,
        strategy_spread: spread,
        increment: tail,
        tail_estimate: tail,
        extent: opts.a_max,
        mode: opts.mode,
        exact: psi.step().is_some() && opts.exact_path,
    })
}
