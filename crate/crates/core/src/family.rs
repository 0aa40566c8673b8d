//! The polynomial family: a linear center in `(x1, x2)` with frozen
//! `x3, ..., xn`, perturbed by degree-`m` polynomials whose coefficients
//! differ per region (tables `a, b, c, d` for regions 1 to 4).

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::{
    CornerRule, FirstIntegralSet, LinearCenter, PiecewiseSystem, RegionFields, RegionId,
    ScalarIntegral, VectorField,
};
use crate::poly::{PolyField, Polynomial};

/// Address of one coefficient: region `k`, component `i` (1-based) and the
/// exponent vector `(k1, ..., kn)` of the monomial it multiplies.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub region: RegionId,
    pub component: usize,
    pub exponents: Vec<u32>,
}

impl Slot {
    pub fn new(region: RegionId, component: usize, exponents: Vec<u32>) -> Self {
        Self { region, component, exponents }
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// Letter naming the coefficient tensor of a region.
pub fn table_letter(k: RegionId) -> char {
    match k {
        RegionId::R1 => 'a',
        RegionId::R2 => 'b',
        RegionId::R3 => 'c',
        RegionId::R4 => 'd',
    }
}

pub fn region_of_letter(c: char) -> Option<RegionId> {
    match c {
        'a' => Some(RegionId::R1),
        'b' => Some(RegionId::R2),
        'c' => Some(RegionId::R3),
        'd' => Some(RegionId::R4),
        _ => None,
    }
}

/// Sparse rational coefficient tensors `a, b, c, d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientTable {
    n: usize,
    m: u32,
    entries: BTreeMap<Slot, BigRational>,
}

impl CoefficientTable {
    pub fn new(n: usize, m: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(alloc::format!("n must be at least 2, got {n}")));
        }
        Ok(Self { n, m, entries: BTreeMap::new() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    fn validate(&self, slot: &Slot) -> Result<()> {
        if slot.component == 0 || slot.component > self.n {
            return Err(Error::InvalidArgument(alloc::format!(
                "component {} outside 1..={}",
                slot.component,
                self.n
            )));
        }
        if slot.exponents.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: slot.exponents.len() });
        }
        if slot.degree() > self.m {
            return Err(Error::InvalidArgument(alloc::format!(
                "monomial degree {} exceeds m = {}",
                slot.degree(),
                self.m
            )));
        }
        Ok(())
    }

    /// Sets a coefficient; zero removes the entry.
    pub fn set(&mut self, slot: Slot, value: BigRational) -> Result<()> {
        self.validate(&slot)?;
        if value.is_zero() {
            self.entries.remove(&slot);
        } else {
            self.entries.insert(slot, value);
        }
        Ok(())
    }

    /// Convenience wrapper around [`set`](Self::set) for integer ratios.
    pub fn set_ratio(&mut self, region: RegionId, component: usize, exponents: &[u32], num: i64, den: i64) -> Result<()> {
        let v = BigRational::new(num.into(), den.into());
        self.set(Slot::new(region, component, exponents.to_vec()), v)
    }

    pub fn get(&self, slot: &Slot) -> BigRational {
        self.entries.get(slot).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Slot, &BigRational)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scaled(&self, factor: &BigRational) -> Self {
        let mut out = Self { n: self.n, m: self.m, entries: BTreeMap::new() };
        if !factor.is_zero() {
            for (s, v) in &self.entries {
                out.entries.insert(s.clone(), v * factor);
            }
        }
        out
    }

    /// Every admissible slot, in a fixed order.
    pub fn all_slots(n: usize, m: u32) -> Vec<Slot> {
        let monos = monomials(n, m);
        let mut out = Vec::with_capacity(4 * n * monos.len());
        for k in RegionId::ALL {
            for i in 1..=n {
                for e in &monos {
                    out.push(Slot::new(k, i, e.clone()));
                }
            }
        }
        out
    }

    /// `g^k_i` as a floating-point polynomial.
    pub fn polynomial(&self, region: RegionId, component: usize) -> Polynomial {
        Polynomial::from_terms(
            self.n,
            self.entries
                .iter()
                .filter(|(s, _)| s.region == region && s.component == component)
                .map(|(s, v)| (v.to_f64().unwrap_or(f64::NAN), s.exponents.clone())),
        )
    }

    /// The perturbation `g^k` of one region.
    pub fn perturbation(&self, region: RegionId) -> PolyField {
        PolyField::new((1..=self.n).map(|i| self.polynomial(region, i)).collect())
    }
}

/// Exponent vectors of total degree at most `m` in `n` variables, graded
/// then lexicographically descending in the leading variable.
pub fn monomials(n: usize, m: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for d in 0..=m {
        let mut cur = vec![0u32; n];
        push_degree(&mut out, &mut cur, 0, d);
    }
    out
}

fn push_degree(out: &mut Vec<Vec<u32>>, cur: &mut [u32], pos: usize, left: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.to_vec());
        return;
    }
    for e in (0..=left).rev() {
        cur[pos] = e;
        push_degree(out, cur, pos + 1, left - e);
    }
    cur[pos] = 0;
}

/// The perturbed linear center defined by `table`.
pub fn builtin_system(table: &CoefficientTable) -> PiecewiseSystem {
    let n = table.n();
    let center: Arc<dyn VectorField> = Arc::new(LinearCenter(n));
    let fields = RegionId::ALL.map(|k| {
        let g: Arc<dyn VectorField> = Arc::new(table.perturbation(k));
        RegionFields::new(center.clone(), g)
    });
    PiecewiseSystem::new(n, fields)
        .expect("table dimension is consistent")
        .with_linear_center()
}

/// `H = (x1^2 + x2^2)/2, x3, ..., xn` in every region.
pub fn builtin_integrals(n: usize) -> FirstIntegralSet {
    let mut list = Vec::with_capacity(n - 1);
    list.push(ScalarIntegral::new(
        |x: &[f64]| 0.5 * (x[0] * x[0] + x[1] * x[1]),
        |x: &[f64], out: &mut [f64]| {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[0] = x[0];
            out[1] = x[1];
        },
    ));
    for i in 2..n {
        list.push(ScalarIntegral::coordinate(i));
    }
    FirstIntegralSet::uniform(n, list, CornerRule::Circle).expect("n - 1 integrals")
}

/// Unperturbed systems with region-dependent integrals whose level sets
/// still close up:
///
/// * `H^k_1 = Q_k = (p_k x1^2 + q_k x2^2)/2`,
/// * `H^k_j = x_{j+1} + c_kj Q_k + d_kj Q_k^2` for `j >= 2`,
/// * `f^k = (q_k x2, -p_k x1, 0, ..., 0)`,
///
/// with `q_4` fixed by `q_4 p_1 q_2 p_3 = q_1 p_4 q_3 p_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibleQuadratic {
    pub n: usize,
    pub p: [f64; 4],
    /// `q_1, q_2, q_3`; `q_4` is derived.
    pub q: [f64; 3],
    /// `c[k][j - 2]`.
    pub c: [Vec<f64>; 4],
    /// `d[k][j - 2]`.
    pub d: [Vec<f64>; 4],
}

impl CompatibleQuadratic {
    pub fn q4(&self) -> f64 {
        let [p1, p2, p3, p4] = self.p;
        let [q1, q2, q3] = self.q;
        q1 * p4 * q3 * p2 / (p1 * q2 * p3)
    }

    fn q_all(&self) -> [f64; 4] {
        [self.q[0], self.q[1], self.q[2], self.q4()]
    }

    fn quadratic(&self, k: usize) -> Polynomial {
        let n = self.n;
        let e = |i: usize, j: usize| {
            let mut v = vec![0u32; n];
            v[0] = i as u32;
            v[1] = j as u32;
            v
        };
        let (p, q) = (self.p[k], self.q_all()[k]);
        Polynomial::from_terms(n, [(0.5 * p, e(2, 0)), (0.5 * q, e(0, 2))])
    }

    fn integral_polys(&self, k: usize) -> Vec<Polynomial> {
        let n = self.n;
        let h = self.quadratic(k);
        let (p, q) = (self.p[k], self.q_all()[k]);
        let e = |i: u32, j: u32| {
            let mut v = vec![0u32; n];
            v[0] = i;
            v[1] = j;
            v
        };
        let mut out = vec![h.clone()];
        for j in 2..n {
            let mut poly = Polynomial::variable(n, j);
            let (c, d) = (self.c[k][j - 2], self.d[k][j - 2]);
            for (v, ex) in h.terms() {
                poly.add_term(c * v, ex.clone());
            }
            poly.add_term(0.25 * d * p * p, e(4, 0));
            poly.add_term(0.5 * d * p * q, e(2, 2));
            poly.add_term(0.25 * d * q * q, e(0, 4));
            out.push(poly);
        }
        out
    }

    pub fn integrals(&self) -> FirstIntegralSet {
        let regions = core::array::from_fn(|k| {
            self.integral_polys(k).into_iter().map(ScalarIntegral::from_polynomial).collect()
        });
        FirstIntegralSet::new(self.n, regions, CornerRule::Newton(None)).expect("n - 1 integrals")
    }

    /// The unperturbed system (`g = 0`).
    pub fn system(&self) -> PiecewiseSystem {
        let n = self.n;
        let qs = self.q_all();
        let fields = core::array::from_fn(|k| {
            let mut comps = vec![Polynomial::zero(n); n];
            let mut e2 = vec![0u32; n];
            e2[1] = 1;
            let mut e1 = vec![0u32; n];
            e1[0] = 1;
            comps[0] = Polynomial::from_terms(n, [(qs[k], e2)]);
            comps[1] = Polynomial::from_terms(n, [(-self.p[k], e1)]);
            let f: Arc<dyn VectorField> = Arc::new(PolyField::new(comps));
            let g: Arc<dyn VectorField> = Arc::new(PolyField::zero(n));
            RegionFields::new(f, g)
        });
        PiecewiseSystem::new(n, fields).expect("consistent dimension")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{classify_region, StateVector};

    #[test]
    fn compatible_quadratic_closes() {
        let cq = CompatibleQuadratic {
            n: 3,
            p: [1.0, 2.0, 0.5, 1.5],
            q: [1.2, 0.7, 1.1],
            c: [vec![0.3], vec![-0.2], vec![0.1], vec![0.5]],
            d: [vec![0.1], vec![0.0], vec![-0.05], vec![0.2]],
        };
        let h = cq.integrals();
        let lvl = crate::model::LevelParameter::new(0.4, &[0.25]);
        let c = crate::flow::corner_points(&h, &lvl).unwrap();
        assert!((c.a[2] - c.e[2]).abs() < 1e-12);
        let sys = cq.system();
        let arcs = crate::flow::unperturbed_orbit(&sys, &h, &lvl, &Default::default()).unwrap();
        assert!(arcs[3].end.distance_inf(&c.a) < 1e-9);
    }

    #[test]
    fn monomial_count() {
        // C(n + m, m)
        assert_eq!(monomials(3, 2).len(), 10);
        assert_eq!(monomials(4, 3).len(), 35);
        assert_eq!(monomials(2, 0), vec![vec![0, 0]]);
    }

    #[test]
    fn rejects_out_of_range_slots() {
        let mut t = CoefficientTable::new(3, 1).unwrap();
        assert!(t.set_ratio(RegionId::R1, 4, &[0, 0, 0], 1, 1).is_err());
        assert!(t.set_ratio(RegionId::R1, 1, &[1, 1, 0], 1, 1).is_err());
        assert!(t.set_ratio(RegionId::R1, 1, &[1, 0], 1, 1).is_err());
        assert!(t.set_ratio(RegionId::R1, 1, &[1, 0, 0], 1, 1).is_ok());
        t.set_ratio(RegionId::R1, 1, &[1, 0, 0], 0, 1).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn eval_field_on_builtin_family() {
        let t = CoefficientTable::new(3, 0).unwrap();
        let sys = builtin_system(&t);
        let v = sys.eval_field(&StateVector(vec![0.0, 1.0, 0.4]), 0.0);
        assert_eq!(v, vec![1.0, 0.0, 0.0]);
        let v = sys.eval_field(&StateVector(vec![1.0, 0.0, 0.4]), 0.0);
        assert_eq!(v, vec![0.0, -1.0, 0.0]);

        let mut t = CoefficientTable::new(3, 1).unwrap();
        t.set_ratio(RegionId::R1, 3, &[0, 0, 0], 1, 1).unwrap();
        let sys = builtin_system(&t);
        let x = StateVector(vec![0.5, 0.5, 0.0]);
        assert_eq!(classify_region(&x), RegionId::R1);
        let v = sys.eval_field(&x, 0.01);
        assert_eq!(v, vec![0.5, -0.5, 0.01]);
    }

    #[test]
    fn first_integral_property_on_builtin_family() {
        let h = builtin_integrals(4);
        let sys = builtin_system(&CoefficientTable::new(4, 0).unwrap());
        for x in [[0.3, 0.2, -1.0, 2.0], [-0.7, 0.1, 0.0, 0.5], [0.4, -0.9, 3.0, 0.0]] {
            let k = classify_region(&x);
            let f = sys.eval_region(k, &x, 0.0);
            let d = h.jacobian(k, &x) * nalgebra::DVector::from_vec(f);
            assert!(d.amax() < 1e-15);
        }
    }
}
