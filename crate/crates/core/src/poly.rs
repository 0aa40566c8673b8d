//! Sparse real polynomials in a fixed number of variables.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::VectorField;

/// `sum c * x^e` with exponent vectors of length `nvars`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    nvars: usize,
    terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(c, vec![0; nvars]);
        p
    }

    /// The coordinate function `x_i` (zero based).
    pub fn variable(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(1.0, e);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (f64, Vec<u32>)>) -> Self {
        let mut p = Self::zero(nvars);
        for (c, e) in terms {
            p.add_term(c, e);
        }
        p
    }

    pub fn add_term(&mut self, coeff: f64, exponents: Vec<u32>) {
        assert_eq!(exponents.len(), self.nvars, "exponent vector length");
        if coeff == 0.0 {
            return;
        }
        if let Some(t) = self.terms.iter_mut().find(|t| t.1 == exponents) {
            t.0 += coeff;
        } else {
            self.terms.push((coeff, exponents));
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(f64, Vec<u32>)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.0 == 0.0)
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|t| t.0 != 0.0)
            .map(|t| t.1.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert!(x.len() >= self.nvars);
        self.terms
            .iter()
            .map(|(c, e)| c * monomial(x, e))
            .sum()
    }

    /// Sum of absolute term values at `x`, a scale for rounding error.
    pub fn eval_abs(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| libm::fabs(c * monomial(x, e)))
            .sum()
    }

    pub fn partial(&self, var: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (c, e) in &self.terms {
            if e[var] > 0 {
                let mut d = e.clone();
                d[var] -= 1;
                out.add_term(c * e[var] as f64, d);
            }
        }
        out
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (c, e) in &self.terms {
            for var in 0..self.nvars {
                if e[var] == 0 {
                    continue;
                }
                let mut prod = c * e[var] as f64;
                for (j, &ej) in e.iter().enumerate() {
                    let p = if j == var { ej - 1 } else { ej };
                    prod *= powi(x[j], p);
                }
                out[var] += prod;
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_terms(self.nvars, self.terms.iter().map(|(c, e)| (c * s, e.clone())))
    }
}

pub(crate) fn powi(x: f64, p: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..p {
        acc *= x;
    }
    acc
}

fn monomial(x: &[f64], e: &[u32]) -> f64 {
    e.iter().zip(x).map(|(&p, &xi)| powi(xi, p)).product()
}

/// A vector field whose components are polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyField {
    components: Vec<Polynomial>,
}

impl PolyField {
    pub fn new(components: Vec<Polynomial>) -> Self {
        let n = components.len();
        assert!(components.iter().all(|p| p.nvars() == n), "square polynomial field");
        Self { components }
    }

    pub fn zero(n: usize) -> Self {
        Self::new((0..n).map(|_| Polynomial::zero(n)).collect())
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }
}

impl VectorField for PolyField {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.components) {
            *o = p.eval(x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_gradient() {
        // 3 x0^2 x1 - x1 + 2
        let p = Polynomial::from_terms(
            2,
            [(3.0, vec![2, 1]), (-1.0, vec![0, 1]), (2.0, vec![0, 0])],
        );
        assert_eq!(p.eval(&[2.0, 0.5]), 3.0 * 4.0 * 0.5 - 0.5 + 2.0);
        let mut g = [0.0; 2];
        p.gradient(&[2.0, 0.5], &mut g);
        assert_eq!(g, [12.0 * 0.5, 3.0 * 4.0 - 1.0]);
        assert_eq!(p.partial(0).eval(&[2.0, 0.5]), g[0]);
        assert_eq!(p.degree(), 3);
    }

    #[test]
    fn like_terms_merge() {
        let mut p = Polynomial::zero(1);
        p.add_term(1.0, vec![1]);
        p.add_term(2.0, vec![1]);
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.eval(&[2.0]), 6.0);
    }
}
