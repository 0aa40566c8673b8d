//! Gauss–Legendre quadrature with adaptive bisection.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Nodes and weights of an `order`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev-like initial guess, then Newton on P_n.
            let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Applies the rule on `[a, b]` to a vector-valued integrand,
    /// accumulating into `acc`.
    pub fn integrate_into<F>(&self, f: &mut F, a: f64, b: f64, acc: &mut [f64], buf: &mut [f64])
    where
        F: FnMut(f64, &mut [f64]),
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        acc.iter_mut().for_each(|v| *v = 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            f(mid + half * x, buf);
            for (a, v) in acc.iter_mut().zip(buf.iter()) {
                *a += w * half * v;
            }
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub order: usize,
    pub rtol: f64,
    pub atol: f64,
    pub max_depth: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { order: 20, rtol: 1e-10, atol: 1e-14, max_depth: 24 }
    }
}

/// Adaptive integrator: a panel is accepted once its single-rule value
/// agrees with the sum over its two halves.
pub struct Integrator {
    rule: GaussLegendre,
    opts: QuadOptions,
}

impl Integrator {
    pub fn new(opts: QuadOptions) -> Self {
        Self { rule: GaussLegendre::new(opts.order), opts }
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }

    /// Integrates a vector-valued `f` of dimension `dim` over `[a, b]`.
    pub fn integrate_vec<F>(&self, dim: usize, mut f: F, a: f64, b: f64) -> Result<Vec<f64>>
    where
        F: FnMut(f64, &mut [f64]),
    {
        let mut buf = vec![0.0; dim];
        let mut whole = vec![0.0; dim];
        self.rule.integrate_into(&mut f, a, b, &mut whole, &mut buf);
        let scale = whole.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut out = vec![0.0; dim];
        let mut worst = 0.0f64;
        let mut ok = true;
        self.recurse(&mut f, a, b, whole, scale, 0, &mut out, &mut buf, &mut worst, &mut ok);
        if ok {
            Ok(out)
        } else {
            Err(Error::QuadratureNotConverged { estimate: worst })
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<f64> {
        Ok(self.integrate_vec(1, |t, o| o[0] = f(t), a, b)?[0])
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F>(
        &self,
        f: &mut F,
        a: f64,
        b: f64,
        whole: Vec<f64>,
        scale: f64,
        depth: u32,
        out: &mut [f64],
        buf: &mut [f64],
        worst: &mut f64,
        ok: &mut bool,
    ) where
        F: FnMut(f64, &mut [f64]),
    {
        let dim = out.len();
        let mid = 0.5 * (a + b);
        let mut left = vec![0.0; dim];
        let mut right = vec![0.0; dim];
        self.rule.integrate_into(f, a, mid, &mut left, buf);
        self.rule.integrate_into(f, mid, b, &mut right, buf);
        let mut err = 0.0f64;
        let mut mag = scale;
        for i in 0..dim {
            let s = left[i] + right[i];
            err = err.max((s - whole[i]).abs());
            mag = mag.max(s.abs());
        }
        let tol = self.opts.atol.max(self.opts.rtol * mag);
        if err <= tol || depth >= self.opts.max_depth {
            if err > tol {
                *ok = false;
                *worst = worst.max(err);
            }
            for i in 0..dim {
                out[i] += left[i] + right[i];
            }
            return;
        }
        self.recurse(f, a, mid, left, scale, depth + 1, out, buf, worst, ok);
        self.recurse(f, mid, b, right, scale, depth + 1, out, buf, worst, ok);
    }
}

impl Default for Integrator {
    fn default() -> Self {
        Self::new(QuadOptions::default())
    }
}
