//! Exact numbers `q0 + q_pi * pi + q_sqrt2 * sqrt(2)` with rational parts,
//! and sparse polynomials over them.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An element of `Q + Q pi + Q sqrt(2)`.
///
/// The set is closed under addition and under the products that occur in
/// the polynomial pipeline. Multiplying two elements with a `pi` and a
/// `pi` or `sqrt(2)` part would leave the set and panics.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Coeff {
    pub rational: BigRational,
    pub pi: BigRational,
    pub sqrt2: BigRational,
}

impl Coeff {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(rational: BigRational, pi: BigRational, sqrt2: BigRational) -> Self {
        Self { rational, pi, sqrt2 }
    }

    pub fn rational(q: BigRational) -> Self {
        Self { rational: q, ..Self::default() }
    }

    pub fn pi(q: BigRational) -> Self {
        Self { pi: q, ..Self::default() }
    }

    pub fn sqrt2(q: BigRational) -> Self {
        Self { sqrt2: q, ..Self::default() }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::rational(ratio(num, den))
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.pi.is_zero() && self.sqrt2.is_zero()
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        Self { rational: &self.rational * q, pi: &self.pi * q, sqrt2: &self.sqrt2 * q }
    }

    pub fn to_f64(&self) -> f64 {
        let f = |q: &BigRational| q.to_f64().unwrap_or(f64::NAN);
        f(&self.rational) + f(&self.pi) * core::f64::consts::PI + f(&self.sqrt2) * core::f64::consts::SQRT_2
    }

    /// Sum of the absolute values of the three parts, as floats.
    pub fn magnitude(&self) -> f64 {
        let f = |q: &BigRational| q.abs().to_f64().unwrap_or(f64::NAN);
        f(&self.rational) + f(&self.pi) * core::f64::consts::PI + f(&self.sqrt2) * core::f64::consts::SQRT_2
    }
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

impl Add for &Coeff {
    type Output = Coeff;
    fn add(self, o: &Coeff) -> Coeff {
        Coeff {
            rational: &self.rational + &o.rational,
            pi: &self.pi + &o.pi,
            sqrt2: &self.sqrt2 + &o.sqrt2,
        }
    }
}

impl Sub for &Coeff {
    type Output = Coeff;
    fn sub(self, o: &Coeff) -> Coeff {
        Coeff {
            rational: &self.rational - &o.rational,
            pi: &self.pi - &o.pi,
            sqrt2: &self.sqrt2 - &o.sqrt2,
        }
    }
}

impl AddAssign<&Coeff> for Coeff {
    fn add_assign(&mut self, o: &Coeff) {
        self.rational += &o.rational;
        self.pi += &o.pi;
        self.sqrt2 += &o.sqrt2;
    }
}

impl Neg for Coeff {
    type Output = Coeff;
    fn neg(self) -> Coeff {
        Coeff { rational: -self.rational, pi: -self.pi, sqrt2: -self.sqrt2 }
    }
}

impl Mul for &Coeff {
    type Output = Coeff;
    fn mul(self, o: &Coeff) -> Coeff {
        assert!(
            (self.pi.is_zero() || (o.pi.is_zero() && o.sqrt2.is_zero()))
                && (o.pi.is_zero() || self.sqrt2.is_zero()),
            "product leaves Q + Q pi + Q sqrt(2)"
        );
        let two = BigRational::from_integer(2.into());
        Coeff {
            rational: &self.rational * &o.rational + &self.sqrt2 * &o.sqrt2 * two,
            pi: &self.rational * &o.pi + &self.pi * &o.rational,
            sqrt2: &self.rational * &o.sqrt2 + &self.sqrt2 * &o.rational,
        }
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.rational, self.pi, self.sqrt2)
    }
}

/// Sparse polynomial with [`Coeff`] coefficients, keyed by exponent tuple.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RingPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Coeff>,
}

impl RingPoly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn add_term(&mut self, exponents: Vec<u32>, c: &Coeff) {
        assert_eq!(exponents.len(), self.nvars, "exponent vector length");
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exponents).or_default();
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    /// Terms sorted lexicographically by exponent tuple.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Coeff)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exponents: &[u32]) -> Coeff {
        self.terms.get(exponents).cloned().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(Coeff::is_zero)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c.to_f64() * monomial(x, e))
            .sum()
    }

    /// Sum of absolute term magnitudes, a scale for rounding error.
    pub fn eval_abs(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c.magnitude() * monomial(x, e).abs())
            .sum()
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (e, c) in &self.terms {
            let cf = c.to_f64();
            for var in 0..self.nvars {
                if e[var] == 0 {
                    continue;
                }
                let mut prod = cf * e[var] as f64;
                for (j, &ej) in e.iter().enumerate() {
                    let p = if j == var { ej - 1 } else { ej };
                    prod *= crate::poly::powi(x[j], p);
                }
                out[var] += prod;
            }
        }
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), &c.scale(q));
        }
        out
    }

    /// Multiplies by `x_var`.
    pub fn shift(&self, var: usize, by: i32) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let v = e2[var] as i32 + by;
            assert!(v >= 0, "negative exponent");
            e2[var] = v as u32;
            out.add_term(e2, c);
        }
        out
    }

    pub fn is_constant_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&alloc::vec![0; self.nvars])
                .is_some_and(|c| c.rational.is_one() && c.pi.is_zero() && c.sqrt2.is_zero())
    }
}

fn monomial(x: &[f64], e: &[u32]) -> f64 {
    e.iter().zip(x).map(|(&p, &xi)| crate::poly::powi(xi, p)).product()
}
