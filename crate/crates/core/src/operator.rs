//! Finite-dimensional operator arithmetic.
//!
//! An [`Operator`] is a dense complex square matrix standing in for a bounded
//! operator on a Banach space. The Banach norm is modelled by the vector
//! `p`-norm on `C^d` ([`NormSpec`]); the induced operator norm is exact for
//! `p ∈ {1, 2, ∞}` and a power-iteration estimate otherwise.
//!
//! Strong-operator-topology statements reduce to norm statements here: in
//! finite dimensions the two topologies coincide.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex double-precision scalar.
pub type C64 = Complex64;

/// Relative tolerance of the `p`-norm power iteration.
pub const POWER_ITERATION_RTOL: f64 = 1e-10;

const POWER_ITERATION_MAX_STEPS: usize = 200;

/// The vector `p`-norm inducing the operator norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NormSpec {
    p: f64,
}

impl NormSpec {
    pub const ONE: NormSpec = NormSpec { p: 1.0 };
    pub const EUCLIDEAN: NormSpec = NormSpec { p: 2.0 };
    pub const INFINITY: NormSpec = NormSpec { p: f64::INFINITY };

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidNorm(p));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn is_one(&self) -> bool {
        self.p == 1.0
    }

    pub fn is_two(&self) -> bool {
        self.p == 2.0
    }

    pub fn is_infinity(&self) -> bool {
        self.p.is_infinite()
    }
}

impl Default for NormSpec {
    fn default() -> Self {
        Self::EUCLIDEAN
    }
}

impl TryFrom<f64> for NormSpec {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        NormSpec::new(p)
    }
}

impl From<NormSpec> for f64 {
    fn from(ns: NormSpec) -> f64 {
        ns.p
    }
}

/// A vector in `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(DVector<C64>);

impl Vector {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyOperator);
        }
        if let Some(i) = entries.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        Ok(Self(DVector::from_vec(entries)))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    /// The `j`-th standard basis vector.
    pub fn basis(dim: usize, j: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[j] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn norm(&self, ns: NormSpec) -> f64 {
        vector_pnorm(self.0.as_slice(), ns.p)
    }

    pub fn scale(&self, c: C64) -> Vector {
        Vector(&self.0 * c)
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector(&self.0 - &other.0)
    }
}

/// A bounded operator on `C^d`, stored as a dense matrix.
#[derive(Clone, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator{}", self.0)
    }
}

/// Serialized as row-major `[re, im]` pairs.
impl Serialize for Operator {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .rows()
            .into_iter()
            .map(|row| row.into_iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let rows: Vec<Vec<C64>> = rows
            .into_iter()
            .map(|row| row.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect();
        Operator::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

impl Operator {
    /// Validates shape and finiteness.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::EmptyOperator);
        }
        for (idx, z) in m.iter().enumerate() {
            if !z.is_finite() {
                let n = m.nrows();
                return Err(Error::NonFinite {
                    row: idx % n,
                    col: idx / n,
                });
            }
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// Builds an operator from row-major entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Real row-major entries, convenient for literals in tests and examples.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// Rank-one coordinate projection `e_j e_j^T`.
    pub fn coordinate_projection(dim: usize, coords: impl IntoIterator<Item = usize>) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for j in coords {
            m[(j, j)] = C64::new(1.0, 0.0);
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator(&self.0 * c)
    }

    pub fn scale_real(&self, c: f64) -> Operator {
        Operator(&self.0 * C64::new(c, 0.0))
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        Vector(&self.0 * &x.0)
    }

    pub fn adjoint(&self) -> Operator {
        Operator(self.0.adjoint())
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.0[(i, i)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.is_finite())
    }

    /// Largest off-diagonal modulus is at most `tol`.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.0[(i, j)].norm() <= tol))
    }

    /// Eigenvalues from the complex Schur form, in no particular order.
    pub fn eigenvalues(&self) -> Vec<C64> {
        let schur = self.0.clone().schur();
        let (_, t) = schur.unpack();
        t.diagonal().iter().copied().collect()
    }

    pub fn inverse(&self) -> Option<Operator> {
        self.0.clone().try_inverse().map(Operator)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn norm(&self, ns: NormSpec) -> f64 {
        operator_norm(self, ns)
    }

    /// `‖self − other‖` in the given norm.
    pub fn distance(&self, other: &Operator, ns: NormSpec) -> f64 {
        (self - other).norm(ns)
    }

    /// Frobenius norm; bounds the 2-norm from above and needs no SVD, so
    /// validation checks use it as a conservative residual.
    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Largest entry modulus; a cheap exact-zero test.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Σ aᵢ Oᵢ` over an iterator of operators of equal dimension.
    pub fn sum<'a>(dim: usize, ops: impl IntoIterator<Item = &'a Operator>) -> Operator {
        let mut acc = DMatrix::zeros(dim, dim);
        for op in ops {
            acc += &op.0;
        }
        Operator(acc)
    }

    pub fn check_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        Operator(self.0 + rhs.0)
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        self.0 += &rhs.0;
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        Operator(self.0 - rhs.0)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        Operator(self.0 * rhs.0)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-&self.0)
    }
}

fn vector_pnorm(x: &[C64], p: f64) -> f64 {
    if p.is_infinite() {
        return x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    if p == 1.0 {
        return x.iter().map(|z| z.norm()).sum();
    }
    let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = x.iter().map(|z| (z.norm() / scale).powf(p)).sum();
    scale * s.powf(1.0 / p)
}

/// Dual vector: `‖y‖_q = 1` and `yᴴx = ‖x‖_p`, with `1/p + 1/q = 1`.
fn dual_vector(x: &DVector<C64>, p: f64) -> DVector<C64> {
    let nrm = vector_pnorm(x.as_slice(), p);
    if nrm == 0.0 {
        return DVector::zeros(x.len());
    }
    x.map(|z| {
        let r = z.norm();
        if r == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            (z / r) * (r / nrm).powf(p - 1.0)
        }
    })
}

fn power_iteration(a: &DMatrix<C64>, p: f64, start: DVector<C64>) -> f64 {
    let q = p / (p - 1.0);
    let n0 = vector_pnorm(start.as_slice(), p);
    if n0 == 0.0 {
        return 0.0;
    }
    let mut x = start / C64::new(n0, 0.0);
    let mut est = 0.0;
    for _ in 0..POWER_ITERATION_MAX_STEPS {
        let y = a * &x;
        let gamma = vector_pnorm(y.as_slice(), p);
        if gamma == 0.0 {
            return est;
        }
        let z = a.adjoint() * dual_vector(&y, p);
        let zq = vector_pnorm(z.as_slice(), q);
        let zx = z.dotc(&x).re;
        let stalled = (gamma - est).abs() <= POWER_ITERATION_RTOL * gamma;
        est = est.max(gamma);
        if zq <= zx * (1.0 + 1e-14) || stalled {
            break;
        }
        x = dual_vector(&z, q);
    }
    est
}

/// Induced operator norm `sup_{‖x‖_p = 1} ‖Ax‖_p`.
///
/// Exact for `p = 1` (max column sum), `p = ∞` (max row sum) and `p = 2`
/// (largest singular value). For other `p` the value is the best of several
/// power-iteration runs (Boyd/Higham), each stopped at relative change
/// [`POWER_ITERATION_RTOL`]; it is a lower bound that is attained for the
/// matrices used in this crate but is not certified in general.
///
/// Zero-dimensional operators cannot be constructed, see [`Operator::new`].
pub fn operator_norm(a: &Operator, ns: NormSpec) -> f64 {
    let m = &a.0;
    let n = m.nrows();
    if ns.is_one() {
        return (0..n)
            .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
    }
    if ns.is_infinity() {
        return (0..n)
            .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
    }
    if ns.is_two() {
        if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            return 0.0;
        }
        return m
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .fold(0.0, f64::max);
    }

    let p = ns.p;
    // Exact lower bound from the best column.
    let mut best = 0.0f64;
    let mut best_col = 0;
    for j in 0..n {
        let c = vector_pnorm(m.column(j).clone_owned().as_slice(), p);
        if c > best {
            best = c;
            best_col = j;
        }
    }
    let mut starts = vec![
        DVector::from_element(n, C64::new(1.0, 0.0)),
        DVector::from_fn(n, |i, _| {
            if i == best_col {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
    ];
    // Deterministic quasi-random starts.
    for s in 1..=4u64 {
        starts.push(DVector::from_fn(n, |i, _| {
            let t = (i as f64 + 1.0) * (s as f64) * 0.754_877_666;
            C64::new((t * 5.9).sin(), (t * 2.3).cos())
        }));
    }
    for start in starts {
        best = best.max(power_iteration(m, p, start));
    }
    best
}

/// `‖AB − BA‖` in the given norm.
pub fn commutator_norm(a: &Operator, b: &Operator, ns: NormSpec) -> Result<f64> {
    a.check_dim(b)?;
    Ok(((a * b) - (b * a)).norm(ns))
}

/// Idempotence residual `‖A² − A‖₂`.
pub fn projection_residual(a: &Operator) -> f64 {
    ((a * a) - a.clone()).norm(NormSpec::default())
}

/// `true` iff `‖A² − A‖₂ ≤ tol`. Oblique projections are accepted.
pub fn is_projection(a: &Operator, tol: f64) -> bool {
    projection_residual(a) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_has_unit_norm() {
        let id = Operator::identity(3);
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let n = id.norm(NormSpec::new(p).unwrap());
            assert!((n - 1.0).abs() < 1e-12, "p={p}: {n}");
        }
    }

    #[test]
    fn diagonal_norm_is_largest_modulus() {
        let d = Operator::from_real_diagonal(&[2.0, -1.0]);
        assert!((d.norm(NormSpec::EUCLIDEAN) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn nilpotent_one_norm() {
        let a = Operator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert_eq!(a.norm(NormSpec::ONE), 1.0);
        assert_eq!(a.norm(NormSpec::INFINITY), 1.0);
    }

    #[test]
    fn general_p_matches_closed_form_on_rank_one() {
        // For A = u vᴴ, ‖A‖_p = ‖u‖_p ‖v‖_q.
        let u = [c(1.0), c(-2.0), C64::new(0.5, 0.5)];
        let v = [c(0.3), C64::new(0.0, 1.0), c(2.0)];
        let m = DMatrix::from_fn(3, 3, |i, j| u[i] * v[j].conj());
        let a = Operator::new(m).unwrap();
        for p in [1.3, 3.0, 4.5] {
            let q = p / (p - 1.0);
            let expected = vector_pnorm(&u, p) * vector_pnorm(&v, q);
            let got = a.norm(NormSpec::new(p).unwrap());
            assert!((got - expected).abs() <= 1e-9 * expected, "p={p}: {got} vs {expected}");
        }
    }

    #[test]
    fn commutator_examples() {
        let id = Operator::identity(2);
        let b = Operator::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        assert_eq!(commutator_norm(&id, &b, NormSpec::EUCLIDEAN).unwrap(), 0.0);

        let d1 = Operator::from_real_diagonal(&[1.0, 2.0]);
        let d2 = Operator::from_real_diagonal(&[3.0, 4.0]);
        assert_eq!(commutator_norm(&d1, &d2, NormSpec::EUCLIDEAN).unwrap(), 0.0);

        let up = Operator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let down = Operator::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]).unwrap();
        let n = commutator_norm(&up, &down, NormSpec::EUCLIDEAN).unwrap();
        assert!((n - 1.0).abs() < 1e-14);
    }

    #[test]
    fn commutator_dimension_mismatch() {
        let a = Operator::identity(2);
        let b = Operator::identity(3);
        assert!(matches!(
            commutator_norm(&a, &b, NormSpec::EUCLIDEAN),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        assert!(is_projection(&Operator::from_real_diagonal(&[1.0, 0.0]), 1e-12));
        assert!(!is_projection(&Operator::from_real_diagonal(&[1.0, 0.5]), 1e-12));
        let oblique = Operator::from_real_rows(&[&[1.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(is_projection(&oblique, 1e-12));
        // A non-orthogonal projection has norm larger than one.
        assert!(oblique.norm(NormSpec::EUCLIDEAN) > 1.0 + 1e-6);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            Operator::new(DMatrix::zeros(0, 0)),
            Err(Error::EmptyOperator)
        ));
        assert!(matches!(
            Operator::new(DMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
        let mut m = DMatrix::zeros(2, 2);
        m[(1, 0)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(
            Operator::new(m),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
        assert!(NormSpec::new(0.5).is_err());
        assert!(NormSpec::new(f64::NAN).is_err());
    }
}
