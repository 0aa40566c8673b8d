//! Exact Melnikov polynomials for the perturbed linear center.
//!
//! Everything reduces to the quarter-circle integrals
//! `I^i_{k1 k2}(h1) = ∫_{L^i} x1^k1 x2^k2 dx2`, which two recurrences bring
//! down to one of four base integrals with known closed forms. Results are
//! polynomials in `(h2, h3, ..., hn)` with `h2 = sqrt(h1)`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::family::{CoefficientTable, Slot};
use crate::model::RegionId;
use crate::ring::{ratio, Coeff, RingPoly};

/// The four base integrals `I_{00}, I_{10}, I_{01}, I_{11}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Base {
    I00,
    I10,
    I01,
    I11,
}

impl Base {
    pub const ALL: [Base; 4] = [Base::I00, Base::I10, Base::I01, Base::I11];

    pub fn indices(self) -> (u32, u32) {
        match self {
            Base::I00 => (0, 0),
            Base::I10 => (1, 0),
            Base::I01 => (0, 1),
            Base::I11 => (1, 1),
        }
    }

    fn from_parity(k1: u32, k2: u32) -> Self {
        match (k1 % 2, k2 % 2) {
            (0, 0) => Base::I00,
            (1, 0) => Base::I10,
            (0, 1) => Base::I01,
            _ => Base::I11,
        }
    }
}

/// Closed form of a base integral as `coeff * h2^exp`.
pub fn base_integral_exact(quarter: RegionId, b: Base) -> (Coeff, u32) {
    // Sign patterns of (I00, I01, I11); I10 = -(pi/2) h1 in every quarter.
    let (s00, s01, s11) = match quarter {
        RegionId::R1 => (-1, -1, -1),
        RegionId::R2 => (-1, 1, 1),
        RegionId::R3 => (1, -1, 1),
        RegionId::R4 => (1, 1, -1),
    };
    match b {
        Base::I00 => (Coeff::sqrt2(ratio(s00, 1)), 1),
        Base::I10 => (Coeff::pi(ratio(-1, 2)), 2),
        Base::I01 => (Coeff::from_ratio(s01, 1), 2),
        Base::I11 => (Coeff::sqrt2(ratio(2 * s11, 3)), 3),
    }
}

/// Numeric base integrals `(I00, I10, I01, I11)` at `h1`.
pub fn base_integrals(quarter: RegionId, h1: f64) -> [f64; 4] {
    let h2 = libm::sqrt(h1);
    Base::ALL.map(|b| {
        let (c, e) = base_integral_exact(quarter, b);
        c.to_f64() * crate::poly::powi(h2, e)
    })
}

/// `coeff * h1^h1_power * I^quarter_base`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IExpression {
    pub quarter: RegionId,
    pub k1: u32,
    pub k2: u32,
    pub coeff: BigRational,
    pub h1_power: u32,
    pub base: Base,
}

impl IExpression {
    pub fn eval(&self, h1: f64) -> f64 {
        let b = base_integrals(self.quarter, h1)[self.base as usize];
        self.coeff.to_f64().unwrap_or(f64::NAN) * crate::poly::powi(h1, self.h1_power) * b
    }

    /// The expression as `coeff * h2^exp`.
    pub fn exact(&self) -> (Coeff, u32) {
        let (c, e) = base_integral_exact(self.quarter, self.base);
        (c.scale(&self.coeff), e + 2 * self.h1_power)
    }
}

/// Memoized reduction of `I^i_{k1 k2}` to base integrals. Not shared
/// between threads; each worker owns one.
#[derive(Debug, Default)]
pub struct Reducer {
    memo: BTreeMap<(RegionId, u32, u32), IExpression>,
}

impl Reducer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Applies `I_{k1 k2} = 2 k1 / (k1 + k2 + 1) h1 I_{k1-2, k2}` until
    /// `k1 < 2`, then `I_{k1 k2} = 2 (k2 - 1) / (k1 + k2 + 1) h1 I_{k1, k2-2}`.
    pub fn reduce(&mut self, quarter: RegionId, k1: u32, k2: u32) -> IExpression {
        if let Some(e) = self.memo.get(&(quarter, k1, k2)) {
            return e.clone();
        }
        let out = if k1 <= 1 && k2 <= 1 {
            IExpression {
                quarter,
                k1,
                k2,
                coeff: BigRational::one(),
                h1_power: 0,
                base: Base::from_parity(k1, k2),
            }
        } else {
            let (inner, factor) = if k1 >= 2 {
                (self.reduce(quarter, k1 - 2, k2), ratio(2 * k1 as i64, (k1 + k2 + 1) as i64))
            } else {
                (self.reduce(quarter, k1, k2 - 2), ratio(2 * (k2 as i64 - 1), (k1 + k2 + 1) as i64))
            };
            IExpression {
                quarter,
                k1,
                k2,
                coeff: inner.coeff * factor,
                h1_power: inner.h1_power + 1,
                base: inner.base,
            }
        };
        self.memo.insert((quarter, k1, k2), out.clone());
        out
    }

    /// Rewrites `∫_{L^i} x1^k1 x2^k2 dx1`.
    pub fn dx1_reduce(&mut self, quarter: RegionId, k1: u32, k2: u32) -> Dx1Expression {
        if k2 >= 1 {
            Dx1Expression::Scaled {
                factor: ratio(-(k2 as i64), (k1 + 1) as i64),
                integral: self.reduce(quarter, k1 + 1, k2 - 1),
            }
        } else {
            let odd = k1 % 2 == 1;
            let sign = match quarter {
                RegionId::R1 => 1,
                RegionId::R2 => -1,
                RegionId::R3 => if odd { 1 } else { -1 },
                RegionId::R4 => if odd { -1 } else { 1 },
            };
            Dx1Expression::Closed { factor: ratio(sign, (k1 + 1) as i64), power: k1 + 1 }
        }
    }
}

/// Result of [`Reducer::dx1_reduce`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dx1Expression {
    /// `factor * I`.
    Scaled { factor: BigRational, integral: IExpression },
    /// `factor * (2 h1)^(power / 2)`.
    Closed { factor: BigRational, power: u32 },
}

impl Dx1Expression {
    pub fn eval(&self, h1: f64) -> f64 {
        match self {
            Dx1Expression::Scaled { factor, integral } => {
                factor.to_f64().unwrap_or(f64::NAN) * integral.eval(h1)
            }
            Dx1Expression::Closed { factor, power } => {
                factor.to_f64().unwrap_or(f64::NAN) * libm::pow(2.0 * h1, *power as f64 / 2.0)
            }
        }
    }

    pub fn exact(&self) -> (Coeff, u32) {
        match self {
            Dx1Expression::Scaled { factor, integral } => {
                let (c, e) = integral.exact();
                (c.scale(factor), e)
            }
            Dx1Expression::Closed { factor, power } => {
                // (2 h1)^(p/2) = 2^(p/2) h2^p
                let half = power / 2;
                let two_pow = BigRational::from_integer(BigInt::from(1u32) << half);
                let c = if power % 2 == 0 {
                    Coeff::rational(factor * two_pow)
                } else {
                    Coeff::sqrt2(factor * two_pow)
                };
                (c, *power)
            }
        }
    }
}

fn split(slot: &Slot) -> (u32, u32, &[u32]) {
    (slot.exponents[0], slot.exponents[1], &slot.exponents[2..])
}

fn mono(h2_exp: u32, rest: &[u32]) -> Vec<u32> {
    let mut e = Vec::with_capacity(rest.len() + 1);
    e.push(h2_exp);
    e.extend_from_slice(rest);
    e
}

/// `M1 = Σ_k ∫_{L^k} g2 dx1 - g1 dx2` as a polynomial in `(h2, h3, ..., hn)`.
pub fn assemble_m1(table: &CoefficientTable, reducer: &mut Reducer) -> RingPoly {
    let mut out = RingPoly::zero(table.n() - 1);
    for (slot, v) in table.iter() {
        let (k1, k2, rest) = split(slot);
        let (c, e) = match slot.component {
            1 => {
                let (c, e) = reducer.reduce(slot.region, k1, k2).exact();
                (-c, e)
            }
            2 => reducer.dx1_reduce(slot.region, k1, k2).exact(),
            _ => continue,
        };
        out.add_term(mono(e, rest), &c.scale(v));
    }
    out
}

/// `M_j = Σ_k ∫_{L^k} g_{j+1} dt` for `j` in `2..n`, obtained as the `h1`
/// derivative of `∫_{L^k} R dx1` with `R = ∫_0^x2 g_{j+1} dx2`.
pub fn assemble_mj(table: &CoefficientTable, j: usize, reducer: &mut Reducer) -> RingPoly {
    assert!(j >= 2 && j < table.n(), "component index {j} outside 2..{}", table.n());
    let mut out = RingPoly::zero(table.n() - 1);
    for (slot, v) in table.iter().filter(|(s, _)| s.component == j + 1) {
        let (k1, k2, rest) = split(slot);
        // ∫ R dx1 = -1/(k1+1) I_{k1+1, k2} ~ h2^e with e = k1 + k2 + 2.
        let (c, e) = reducer.reduce(slot.region, k1 + 1, k2).exact();
        let c = c.scale(&(v * ratio(-1, (k1 + 1) as i64)));
        // d/dh1 h2^e = (e/2) h2^(e-2)
        let c = c.scale(&ratio(e as i64, 2));
        out.add_term(mono(e - 2, rest), &c);
    }
    out
}

/// The Melnikov vector `(M1, ..., M_{n-1})` of the polynomial family, with
/// the first component stored divided by `h2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MelnikovPolynomialVector {
    n: usize,
    m: u32,
    /// `[M1 / h2, M2, ..., M_{n-1}]`.
    reduced: Vec<RingPoly>,
}

impl MelnikovPolynomialVector {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Number of unknowns `(h2, h3, ..., hn)`.
    pub fn nvars(&self) -> usize {
        self.n - 1
    }

    /// `M1 / h2` followed by `M2, ..., M_{n-1}`.
    pub fn reduced(&self) -> &[RingPoly] {
        &self.reduced
    }

    /// Component `j` (1-based) including the factor `h2` for `j = 1`.
    pub fn component(&self, j: usize) -> RingPoly {
        if j == 1 {
            self.reduced[0].shift(0, 1)
        } else {
            self.reduced[j - 1].clone()
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        self.reduced.iter().all(RingPoly::is_zero)
    }

    /// 1-based indices of components that vanish identically.
    pub fn zero_components(&self) -> Vec<usize> {
        (0..self.reduced.len()).filter(|&i| self.reduced[i].is_zero()).map(|i| i + 1).collect()
    }

    /// Degrees of `M1 / h2, M2, ...`.
    pub fn degrees(&self) -> Vec<u32> {
        self.reduced.iter().map(RingPoly::degree).collect()
    }

    /// `M(h)` at `y = (h2, h3, ..., hn)`.
    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        let mut v = self.eval_reduced(y);
        v[0] *= y[0];
        v
    }

    /// `M(h)` at `h = (h1, h3, ..., hn)`.
    pub fn eval_h(&self, h: &[f64]) -> Vec<f64> {
        let mut y = h.to_vec();
        y[0] = libm::sqrt(h[0]);
        self.eval(&y)
    }

    pub fn eval_reduced(&self, y: &[f64]) -> Vec<f64> {
        self.reduced.iter().map(|p| p.eval(y)).collect()
    }

    /// Canonical text dump: one `component j` header per component, then
    /// one line `q0 q_pi q_sqrt2 e_h2 ... e_hn` per monomial of the full
    /// component in lexicographic exponent order.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n {}", self.n);
        let _ = writeln!(s, "m {}", self.m);
        let _ = writeln!(s, "variables h2{}", (3..=self.n).fold(String::new(), |mut a, i| {
            let _ = write!(a, " h{i}");
            a
        }));
        for j in 1..self.n {
            let p = self.component(j);
            if p.is_zero() {
                let _ = writeln!(s, "component {j} identically zero");
                continue;
            }
            let _ = writeln!(s, "component {j} terms {}", p.len());
            for (e, c) in p.terms() {
                let _ = write!(s, "{} {} {}", c.rational, c.pi, c.sqrt2);
                for x in e {
                    let _ = write!(s, " {x}");
                }
                s.push('\n');
            }
        }
        s
    }
}

/// Builds `(M1, ..., M_{n-1})` for `table`.
pub fn assemble_vector(table: &CoefficientTable) -> MelnikovPolynomialVector {
    let mut reducer = Reducer::new();
    let n = table.n();
    let m1 = assemble_m1(table, &mut reducer);
    let mut reduced = Vec::with_capacity(n - 1);
    reduced.push(m1.shift(0, -1));
    for j in 2..n {
        reduced.push(assemble_mj(table, j, &mut reducer));
    }
    MelnikovPolynomialVector { n, m: table.m(), reduced }
}

/// Coordinates of a vector in the basis (component, monomial, ring part).
fn coordinates(v: &MelnikovPolynomialVector) -> BTreeMap<(usize, Vec<u32>, u8), BigRational> {
    let mut out = BTreeMap::new();
    for (j, p) in v.reduced.iter().enumerate() {
        for (e, c) in p.terms() {
            for (part, q) in [(0u8, &c.rational), (1, &c.pi), (2, &c.sqrt2)] {
                if !q.is_zero() {
                    out.insert((j, e.clone(), part), q.clone());
                }
            }
        }
    }
    out
}

/// Target for [`fit_table`]: reduced components `[M1 / h2, M2, ...]`.
pub fn target_vector(n: usize, m: u32, reduced: Vec<RingPoly>) -> Result<MelnikovPolynomialVector> {
    if reduced.len() + 1 != n || reduced.iter().any(|p| p.nvars() + 1 != n) {
        return Err(Error::DimensionMismatch { expected: n - 1, found: reduced.len() });
    }
    Ok(MelnikovPolynomialVector { n, m, reduced })
}

/// Finds values for `slots` whose Melnikov vector equals `target`, by exact
/// Gaussian elimination on the linear map from coefficients to Melnikov
/// coefficients. Free unknowns are set to zero.
pub fn fit_table(
    n: usize,
    m: u32,
    slots: &[Slot],
    target: &MelnikovPolynomialVector,
) -> Result<CoefficientTable> {
    let mut columns = Vec::with_capacity(slots.len());
    for s in slots {
        let mut t = CoefficientTable::new(n, m)?;
        t.set(s.clone(), BigRational::one())?;
        columns.push(coordinates(&assemble_vector(&t)));
    }
    let rhs = coordinates(target);
    let mut keys: Vec<_> = rhs.keys().cloned().collect();
    for c in &columns {
        keys.extend(c.keys().cloned());
    }
    keys.sort();
    keys.dedup();
    let rows = keys.len();
    let cols = slots.len();
    let mut a: Vec<Vec<BigRational>> = keys
        .iter()
        .map(|k| {
            let mut row: Vec<BigRational> = columns.iter().map(|c| c.get(k).cloned().unwrap_or_else(BigRational::zero)).collect();
            row.push(rhs.get(k).cloned().unwrap_or_else(BigRational::zero));
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for cc in 0..=cols {
                    let d = &a[r][cc] * &f;
                    a[i][cc] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    if a[r..].iter().any(|row| !row[cols].is_zero()) {
        return Err(Error::Unrealizable);
    }
    let mut table = CoefficientTable::new(n, m)?;
    for (i, &c) in pivots.iter().enumerate() {
        table.set(slots[c].clone(), a[i][cols].clone())?;
    }
    Ok(table)
}

/// For `m = 1`, the coefficients `rho^i_j` of
/// `M1 = h2 (rho^1_1 + rho^1_2 h2 + rho^1_3 h3 + ...)` and
/// `M_i = rho^i_1 + rho^i_2 h2 + rho^i_3 h3 + ...`. Row `i - 1` holds
/// `rho^i_1 .. rho^i_n`.
pub fn rho_coefficients(v: &MelnikovPolynomialVector) -> Result<Vec<Vec<Coeff>>> {
    if v.reduced.iter().any(|p| p.degree() > 1) {
        return Err(Error::InvalidArgument("rho form needs affine components".into()));
    }
    let nv = v.nvars();
    Ok(v.reduced
        .iter()
        .map(|p| {
            let mut row = Vec::with_capacity(nv + 1);
            row.push(p.coeff(&vec![0; nv]));
            for var in 0..nv {
                let mut e = vec![0; nv];
                e[var] = 1;
                row.push(p.coeff(&e));
            }
            row
        })
        .collect())
}
