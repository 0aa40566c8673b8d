//! Piecewise systems with the switching planes `x1 = 0` and `x2 = 0`.
//!
//! The four regions are the closed/half-open quadrants of the `(x1, x2)`
//! plane. Region 1 owns both of its boundary rays (and the origin); the
//! negative `x2` axis belongs to region 2 and the negative `x1` axis to
//! region 3, so [`classify_region`] is total.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Deref, DerefMut};

use nalgebra::DMatrix;

use crate::error::{Error, Result, Warning};
use crate::linalg;

/// Singular values / determinants above this pass the assumption checks.
pub const RANK_TOL: f64 = 1e-9;
/// Lower edge of the near-degenerate warning band.
pub const DEGENERATE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegionId {
    R1,
    R2,
    R3,
    R4,
}

impl RegionId {
    pub const ALL: [RegionId; 4] = [RegionId::R1, RegionId::R2, RegionId::R3, RegionId::R4];

    /// 1-based index.
    pub fn index(self) -> usize {
        self as usize + 1
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            1 => Some(RegionId::R1),
            2 => Some(RegionId::R2),
            3 => Some(RegionId::R3),
            4 => Some(RegionId::R4),
            _ => None,
        }
    }

    pub(crate) fn slot(self) -> usize {
        self as usize
    }

    /// Next region in clockwise order.
    pub fn next(self) -> Self {
        match self {
            RegionId::R1 => RegionId::R2,
            RegionId::R2 => RegionId::R3,
            RegionId::R3 => RegionId::R4,
            RegionId::R4 => RegionId::R1,
        }
    }

    /// The plane through which an orbit leaves this region clockwise.
    pub fn exit_plane(self) -> Plane {
        match self {
            RegionId::R1 | RegionId::R3 => Plane::X2Zero,
            RegionId::R2 | RegionId::R4 => Plane::X1Zero,
        }
    }

    /// Sign the region imposes on the coordinate normal to `plane`.
    pub fn side(self, plane: Plane) -> f64 {
        match (self, plane) {
            (RegionId::R1, _) => 1.0,
            (RegionId::R2, Plane::X1Zero) => 1.0,
            (RegionId::R2, Plane::X2Zero) => -1.0,
            (RegionId::R3, _) => -1.0,
            (RegionId::R4, Plane::X1Zero) => -1.0,
            (RegionId::R4, Plane::X2Zero) => 1.0,
        }
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// One of the two switching planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Plane {
    X1Zero,
    X2Zero,
}

impl Plane {
    /// Zero-based index of the normal coordinate.
    pub fn coordinate(self) -> usize {
        match self {
            Plane::X1Zero => 0,
            Plane::X2Zero => 1,
        }
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Plane::X1Zero => f.write_str("x1=0"),
            Plane::X2Zero => f.write_str("x2=0"),
        }
    }
}

/// A point `x = (x1, ..., xn)` of phase space.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn distance_inf(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Deref for StateVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for StateVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// The level `h = (h1, h3, ..., hn)` labelling a periodic orbit `L_h`.
///
/// Stored as the `n - 1` values of the stacked first integral on region 1;
/// for the built-in family the second slot onward are the frozen
/// coordinates `x3, ..., xn`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelParameter(pub Vec<f64>);

impl LevelParameter {
    pub fn new(h1: f64, hhat: &[f64]) -> Self {
        let mut v = Vec::with_capacity(hhat.len() + 1);
        v.push(h1);
        v.extend_from_slice(hhat);
        Self(v)
    }

    /// Builds the level from `h2 = sqrt(h1)`.
    pub fn from_h2(h2: f64, hhat: &[f64]) -> Self {
        Self::new(h2 * h2, hhat)
    }

    pub fn h1(&self) -> f64 {
        self.0[0]
    }

    pub fn h2(&self) -> f64 {
        libm::sqrt(self.0[0])
    }

    pub fn hhat(&self) -> &[f64] {
        &self.0[1..]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Deref for LevelParameter {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A smooth map `R^n -> R^n`. Implementations must be pure.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], out: &mut [f64]);
}

/// Adapter turning a closure into a [`VectorField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
}

/// The identically zero field.
#[derive(Debug, Clone, Copy)]
pub struct ZeroField(pub usize);

impl VectorField for ZeroField {
    fn dim(&self) -> usize {
        self.0
    }

    fn eval(&self, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
}

/// `ẋ1 = x2, ẋ2 = -x1`, remaining coordinates frozen.
#[derive(Debug, Clone, Copy)]
pub struct LinearCenter(pub usize);

impl VectorField for LinearCenter {
    fn dim(&self) -> usize {
        self.0
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        out[0] = x[1];
        out[1] = -x[0];
    }
}

/// Unperturbed field `f^k` and perturbation `g^k` of one region.
#[derive(Clone)]
pub struct RegionFields {
    pub f: Arc<dyn VectorField>,
    pub g: Arc<dyn VectorField>,
}

impl RegionFields {
    pub fn new(f: Arc<dyn VectorField>, g: Arc<dyn VectorField>) -> Self {
        Self { f, g }
    }

    /// Writes `f(x) + eps g(x)` into `out`; `scratch` must have length `n`.
    pub fn eval(&self, x: &[f64], eps: f64, out: &mut [f64], scratch: &mut [f64]) {
        self.f.eval(x, out);
        if eps != 0.0 {
            self.g.eval(x, scratch);
            for (o, s) in out.iter_mut().zip(scratch.iter()) {
                *o += eps * s;
            }
        }
    }
}

/// `ẋ = f^k(x) + ε g^k(x)` on the four quadrant regions.
#[derive(Clone)]
pub struct PiecewiseSystem {
    dim: usize,
    regions: [RegionFields; 4],
    linear_center: bool,
}

impl fmt::Debug for PiecewiseSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PiecewiseSystem")
            .field("dim", &self.dim)
            .field("linear_center", &self.linear_center)
            .finish_non_exhaustive()
    }
}

impl PiecewiseSystem {
    pub fn new(dim: usize, regions: [RegionFields; 4]) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(alloc::format!(
                "dimension must be at least 2, got {dim}"
            )));
        }
        for r in &regions {
            for found in [r.f.dim(), r.g.dim()] {
                if found != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found });
                }
            }
        }
        Ok(Self { dim, regions, linear_center: false })
    }

    /// Marks every `f^k` as the linear center `(x2, -x1, 0, ...)`, which
    /// lets the unperturbed orbit be parametrized exactly by angle.
    pub fn with_linear_center(mut self) -> Self {
        self.linear_center = true;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_linear_center(&self) -> bool {
        self.linear_center
    }

    pub fn region(&self, k: RegionId) -> &RegionFields {
        &self.regions[k.slot()]
    }

    pub fn eval_region(&self, k: RegionId, x: &[f64], eps: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let mut scratch = vec![0.0; self.dim];
        self.region(k).eval(x, eps, &mut out, &mut scratch);
        out
    }

    /// `f^k(x) + eps g^k(x)` with `k = classify_region(x)`.
    pub fn eval_field(&self, x: &StateVector, eps: f64) -> Vec<f64> {
        self.eval_region(classify_region(x), x, eps)
    }

    /// Same system with every perturbation `g^k` replaced.
    pub fn with_perturbation(&self, g: [Arc<dyn VectorField>; 4]) -> Result<Self> {
        let [g1, g2, g3, g4] = g;
        let r = &self.regions;
        let sys = Self::new(
            self.dim,
            [
                RegionFields::new(r[0].f.clone(), g1),
                RegionFields::new(r[1].f.clone(), g2),
                RegionFields::new(r[2].f.clone(), g3),
                RegionFields::new(r[3].f.clone(), g4),
            ],
        )?;
        Ok(Self { linear_center: self.linear_center, ..sys })
    }
}

/// Region containing `x` under the boundary convention of this module.
pub fn classify_region(x: &[f64]) -> RegionId {
    let (x1, x2) = (x[0], x[1]);
    if x1 >= 0.0 && x2 >= 0.0 {
        RegionId::R1
    } else if x1 >= 0.0 {
        RegionId::R2
    } else if x2 <= 0.0 {
        RegionId::R3
    } else {
        RegionId::R4
    }
}

/// Region a clockwise orbit enters from `x`. Interior points use
/// [`classify_region`]; points on a switching plane are assigned to the
/// region lying clockwise ahead of them.
pub fn entry_region(x: &[f64]) -> RegionId {
    let (x1, x2) = (x[0], x[1]);
    if x1 == 0.0 && x2 != 0.0 {
        if x2 > 0.0 {
            RegionId::R1
        } else {
            RegionId::R3
        }
    } else if x2 == 0.0 && x1 != 0.0 {
        if x1 > 0.0 {
            RegionId::R2
        } else {
            RegionId::R4
        }
    } else {
        classify_region(x)
    }
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// One scalar first integral with an optional analytic gradient.
#[derive(Clone)]
pub struct ScalarIntegral {
    value: ScalarFn,
    gradient: Option<GradientFn>,
}

impl ScalarIntegral {
    pub fn new<V, G>(value: V, gradient: G) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self { value: Arc::new(value), gradient: Some(Arc::new(gradient)) }
    }

    /// Integral whose gradient is approximated by central differences.
    pub fn without_gradient<V>(value: V) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { value: Arc::new(value), gradient: None }
    }

    pub fn from_polynomial(p: crate::poly::Polynomial) -> Self {
        let p = Arc::new(p);
        let q = p.clone();
        Self::new(move |x| p.eval(x), move |x, out| q.gradient(x, out))
    }

    /// The coordinate function `x_i` (zero based).
    pub fn coordinate(i: usize) -> Self {
        Self::new(
            move |x| x[i],
            move |_x, out| {
                out.iter_mut().for_each(|o| *o = 0.0);
                out[i] = 1.0;
            },
        )
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match &self.gradient {
            Some(g) => g(x, out),
            None => {
                let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let step = 1e-6 * (1.0 + scale);
                let mut xp = x.to_vec();
                for i in 0..x.len() {
                    let xi = xp[i];
                    xp[i] = xi + step;
                    let fp = (self.value)(&xp);
                    xp[i] = xi - step;
                    let fm = (self.value)(&xp);
                    xp[i] = xi;
                    out[i] = (fp - fm) / (2.0 * step);
                }
            }
        }
    }
}

/// How the corner points `A, B, C, E` of `L_h` are obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum CornerRule {
    /// `H1 = (x1^2 + x2^2)/2, H_j = x_{j+1}`: corners on the circle of
    /// radius `sqrt(2 h1)`.
    Circle,
    /// Damped Newton on the chaining conditions, seeded from the guess
    /// (or from unit points on the axes when absent).
    Newton(Option<CornerPoints>),
}

/// The `n - 1` first integrals `H^k_i` of each region.
#[derive(Clone)]
pub struct FirstIntegralSet {
    dim: usize,
    regions: [Vec<ScalarIntegral>; 4],
    corner_rule: CornerRule,
}

impl fmt::Debug for FirstIntegralSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FirstIntegralSet")
            .field("dim", &self.dim)
            .field("corner_rule", &self.corner_rule)
            .finish_non_exhaustive()
    }
}

impl FirstIntegralSet {
    pub fn new(dim: usize, regions: [Vec<ScalarIntegral>; 4], corner_rule: CornerRule) -> Result<Self> {
        for r in &regions {
            if r.len() + 1 != dim {
                return Err(Error::DimensionMismatch { expected: dim - 1, found: r.len() });
            }
        }
        Ok(Self { dim, regions, corner_rule })
    }

    /// The same integrals in every region.
    pub fn uniform(dim: usize, integrals: Vec<ScalarIntegral>, corner_rule: CornerRule) -> Result<Self> {
        Self::new(
            dim,
            [integrals.clone(), integrals.clone(), integrals.clone(), integrals],
            corner_rule,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn corner_rule(&self) -> &CornerRule {
        &self.corner_rule
    }

    pub fn with_corner_rule(mut self, rule: CornerRule) -> Self {
        self.corner_rule = rule;
        self
    }

    pub fn integrals(&self, k: RegionId) -> &[ScalarIntegral] {
        &self.regions[k.slot()]
    }

    pub fn uses_fallback_gradients(&self) -> bool {
        self.regions.iter().flatten().any(|s| !s.has_analytic_gradient())
    }

    /// Stacked map `𝐇^k(x)`.
    pub fn values(&self, k: RegionId, x: &[f64]) -> Vec<f64> {
        self.integrals(k).iter().map(|s| s.value(x)).collect()
    }

    /// Jacobian `D𝐇^k(x)`, an `(n-1) x n` matrix.
    pub fn jacobian(&self, k: RegionId, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n - 1, n);
        let mut row = vec![0.0; n];
        for (i, s) in self.integrals(k).iter().enumerate() {
            s.gradient(x, &mut row);
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }
}

/// `A, B, C, E`: the crossings of `L_h` with the switching planes.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerPoints {
    pub a: StateVector,
    pub b: StateVector,
    pub c: StateVector,
    pub e: StateVector,
}

impl CornerPoints {
    /// Corners on the circle of radius `r` at frozen coordinates `rest`.
    pub fn circle(r: f64, rest: &[f64]) -> Self {
        let pt = |x1: f64, x2: f64| {
            let mut v = vec![x1, x2];
            v.extend_from_slice(rest);
            StateVector(v)
        };
        Self { a: pt(0.0, r), b: pt(r, 0.0), c: pt(0.0, -r), e: pt(-r, 0.0) }
    }

    /// Unit points on the axes, used as a default Newton seed.
    pub fn unit_seed(n: usize) -> Self {
        Self::circle(1.0, &vec![0.0; n - 2])
    }
}

/// Result of an assumption check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckStatus {
    Holds,
    NearDegenerate,
    Fails,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionCheck {
    /// Smallest singular value or |determinant|.
    pub value: f64,
    pub status: CheckStatus,
}

impl AssumptionCheck {
    pub fn from_value(value: f64) -> Self {
        let status = if value > RANK_TOL {
            CheckStatus::Holds
        } else if value >= DEGENERATE_FLOOR {
            CheckStatus::NearDegenerate
        } else {
            CheckStatus::Fails
        };
        Self { value, status }
    }

    pub fn holds(&self) -> bool {
        self.status == CheckStatus::Holds
    }

    pub fn warning(&self, what: &'static str) -> Option<Warning> {
        (self.status == CheckStatus::NearDegenerate)
            .then_some(Warning::NearDegenerate { what, value: self.value })
    }
}

/// Rank test of `D𝐇^k(x)` in the region containing `x`.
pub fn check_gradient_independence(h: &FirstIntegralSet, x: &StateVector) -> AssumptionCheck {
    check_gradient_independence_in(h, classify_region(x), x)
}

pub fn check_gradient_independence_in(
    h: &FirstIntegralSet,
    k: RegionId,
    x: &[f64],
) -> AssumptionCheck {
    let jac = h.jacobian(k, x);
    AssumptionCheck::from_value(linalg::smallest_singular_value(&jac))
}

/// Regions whose arcs begin or end at a point `p` of `plane`.
pub fn adjacent_regions(p: &[f64], plane: Plane) -> [RegionId; 2] {
    match plane {
        Plane::X1Zero if p[1] >= 0.0 => [RegionId::R1, RegionId::R4],
        Plane::X1Zero => [RegionId::R2, RegionId::R3],
        Plane::X2Zero if p[0] >= 0.0 => [RegionId::R1, RegionId::R2],
        Plane::X2Zero => [RegionId::R3, RegionId::R4],
    }
}

/// Non-tangency test at a crossing point: the reduced Jacobian with the
/// plane's normal coordinate removed must be invertible for both regions
/// meeting at `p`. The reported value is the smaller `|det|`.
pub fn check_transversality(h: &FirstIntegralSet, p: &StateVector, plane: Plane) -> AssumptionCheck {
    adjacent_regions(p, plane)
        .into_iter()
        .map(|k| check_transversality_in(h, k, p, plane))
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("two regions")
}

pub fn check_transversality_in(
    h: &FirstIntegralSet,
    k: RegionId,
    p: &[f64],
    plane: Plane,
) -> AssumptionCheck {
    let jac = h.jacobian(k, p);
    let reduced = linalg::remove_column(&jac, plane.coordinate());
    AssumptionCheck::from_value(reduced.determinant().abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::builtin_integrals;

    #[test]
    fn classify_examples() {
        assert_eq!(classify_region(&[1.0, 1.0, 0.0]), RegionId::R1);
        assert_eq!(classify_region(&[1.0, -1.0, 5.0]), RegionId::R2);
        assert_eq!(classify_region(&[0.0, 1.0, 0.0]), RegionId::R1);
        assert_eq!(classify_region(&[1.0, 0.0]), RegionId::R1);
        assert_eq!(classify_region(&[0.0, 0.0]), RegionId::R1);
        assert_eq!(classify_region(&[0.0, -1.0]), RegionId::R2);
        assert_eq!(classify_region(&[-1.0, 0.0]), RegionId::R3);
        assert_eq!(classify_region(&[-1.0, 2.0]), RegionId::R4);
        assert_eq!(classify_region(&[-1.0, -2.0]), RegionId::R3);
    }

    #[test]
    fn entry_region_follows_clockwise_orientation() {
        assert_eq!(entry_region(&[0.0, 1.0]), RegionId::R1);
        assert_eq!(entry_region(&[1.0, 0.0]), RegionId::R2);
        assert_eq!(entry_region(&[0.0, -1.0]), RegionId::R3);
        assert_eq!(entry_region(&[-1.0, 0.0]), RegionId::R4);
        assert_eq!(entry_region(&[-1.0, 3.0]), RegionId::R4);
    }

    #[test]
    fn sides_match_region_definitions() {
        for k in RegionId::ALL {
            assert_eq!(k.side(k.exit_plane()), -k.next().side(k.exit_plane()));
        }
    }

    #[test]
    fn gradient_independence_examples() {
        let h = builtin_integrals(4);
        let c = check_gradient_independence(&h, &StateVector(vec![1.0, 1.0, 0.0, 0.0]));
        assert!(c.holds());
        let c = check_gradient_independence(&h, &StateVector(vec![0.0, 0.0, 0.0, 0.0]));
        assert!(!c.holds());
        assert_eq!(c.status, CheckStatus::Fails);
    }

    #[test]
    fn transversality_examples() {
        let h = builtin_integrals(3);
        let h1: f64 = 0.5;
        let r = libm::sqrt(2.0 * h1);
        let a = StateVector(vec![0.0, r, 0.3]);
        let c = check_transversality(&h, &a, Plane::X1Zero);
        assert!(c.holds());
        assert!((c.value - 1.0).abs() < 1e-15);
        let b = StateVector(vec![r, 0.0, 0.3]);
        assert!(check_transversality(&h, &b, Plane::X2Zero).holds());
        let o = StateVector(vec![0.0, 0.0, 0.3]);
        assert!(!check_transversality(&h, &o, Plane::X1Zero).holds());
    }

    #[test]
    fn near_degenerate_band() {
        assert_eq!(AssumptionCheck::from_value(1e-10).status, CheckStatus::NearDegenerate);
        assert_eq!(AssumptionCheck::from_value(1e-13).status, CheckStatus::Fails);
        assert!(AssumptionCheck::from_value(1e-10).warning("x").is_some());
    }

    #[test]
    fn fallback_gradient_matches_analytic() {
        let s = ScalarIntegral::without_gradient(|x: &[f64]| 0.5 * (x[0] * x[0] + x[1] * x[1]) + x[0] * x[2]);
        let mut g = [0.0; 3];
        s.gradient(&[0.3, -0.7, 1.1], &mut g);
        assert!((g[0] - (0.3 + 1.1)).abs() < 1e-8);
        assert!((g[1] + 0.7).abs() < 1e-8);
        assert!((g[2] - 0.3).abs() < 1e-8);
    }
}
