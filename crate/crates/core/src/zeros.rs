//! Zeros of the Melnikov vector in `(h2, h3, ..., hn)`.
//!
//! The search works on the reduced vector `(M1 / h2, M2, ...)`, which has
//! the same zeros as `M` for `h2 > 0`. Residuals and Jacobian determinants
//! are reported for `M` itself, the latter with respect to
//! `(h1, h3, ..., hn)`.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::{Signed, Zero};

use crate::error::{Error, Result, Warning};
use crate::family::{CoefficientTable, Slot};
use crate::linalg;
use crate::model::RegionId;
use crate::symbolic::{rho_coefficients, MelnikovPolynomialVector};

/// A map whose zeros are searched for.
pub trait ZeroTarget: Sync {
    /// Number of unknowns `(h2, h3, ...)`.
    fn nvars(&self) -> usize;

    /// `(M1 / h2, M2, ...)` at `y`.
    fn eval_reduced(&self, y: &[f64]) -> Result<Vec<f64>>;

    /// Typical magnitude of the terms summed in each component at `y`,
    /// used to make residual tests relative. Unit by default.
    fn scale(&self, _y: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![1.0; self.nvars()])
    }

    /// Jacobian of the reduced map, by central differences unless
    /// overridden.
    fn jacobian_reduced(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.nvars();
        let mut j = DMatrix::zeros(n, n);
        let mut p = y.to_vec();
        for c in 0..n {
            let d = 1e-6 * (1.0 + y[c].abs());
            p[c] = y[c] + d;
            let fp = self.eval_reduced(&p)?;
            p[c] = y[c] - d;
            let fm = self.eval_reduced(&p)?;
            p[c] = y[c];
            for r in 0..n {
                j[(r, c)] = (fp[r] - fm[r]) / (2.0 * d);
            }
        }
        Ok(j)
    }
}

impl ZeroTarget for MelnikovPolynomialVector {
    fn nvars(&self) -> usize {
        MelnikovPolynomialVector::nvars(self)
    }

    fn eval_reduced(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(MelnikovPolynomialVector::eval_reduced(self, y))
    }

    fn scale(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.reduced().iter().map(|p| p.eval_abs(y)).collect())
    }

    fn jacobian_reduced(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.nvars();
        let mut j = DMatrix::zeros(n, n);
        let mut g = vec![0.0; n];
        for (r, p) in self.reduced().iter().enumerate() {
            p.gradient(y, &mut g);
            for c in 0..n {
                j[(r, c)] = g[c];
            }
        }
        Ok(j)
    }
}

/// `M` from the reduced vector: the first component times `h2`.
pub fn full_from_reduced(y: &[f64], mut v: Vec<f64>) -> Vec<f64> {
    v[0] *= y[0];
    v
}

/// Jacobian of `M` with respect to `(h1, h3, ..., hn)` at `y`.
pub fn jacobian_h1(target: &dyn ZeroTarget, y: &[f64]) -> Result<DMatrix<f64>> {
    let jr = target.jacobian_reduced(y)?;
    let fr = target.eval_reduced(y)?;
    let mut j = jr;
    // row 0 of M: d(h2 * M1/h2) = h2 * grad + (M1/h2) e_h2
    for c in 0..j.ncols() {
        j[(0, c)] *= y[0];
    }
    j[(0, 0)] += fr[0];
    // dh2/dh1 = 1 / (2 h2)
    for r in 0..j.nrows() {
        j[(r, 0)] /= 2.0 * y[0];
    }
    Ok(j)
}

/// Search box in `(h2, h3, ..., hn)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub h2: (f64, f64),
    pub hhat: Vec<(f64, f64)>,
}

impl Window {
    /// `h2 ∈ [0.05, 3]`, each frozen coordinate in `[-3, 3]`.
    pub fn default_for(nvars: usize) -> Self {
        Self { h2: (0.05, 3.0), hhat: vec![(-3.0, 3.0); nvars.saturating_sub(1)] }
    }

    pub fn nvars(&self) -> usize {
        1 + self.hhat.len()
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![self.h2];
        b.extend_from_slice(&self.hhat);
        b
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h2.0 > 0.0) {
            return Err(Error::InvalidArgument("window must have h2 > 0".to_string()));
        }
        if self.bounds().iter().any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::InvalidArgument("window bounds must be finite with lo < hi".to_string()));
        }
        Ok(())
    }

    pub fn contains(&self, y: &[f64], slack: f64) -> bool {
        self.bounds().iter().zip(y).all(|((lo, hi), v)| {
            let s = slack * (hi - lo);
            *v >= lo - s && *v <= hi + s
        }) && y[0] > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroOptions {
    pub starts_per_dim: usize,
    /// Roots closer than this (max-norm) are merged.
    pub dedup: f64,
    pub max_iter: usize,
    /// Accept a root once `|M_i| <= residual_rel * scale_i` for each `i`.
    pub residual_rel: f64,
    /// `|det|` below this flags a root as degenerate.
    pub degenerate: f64,
}

impl Default for ZeroOptions {
    fn default() -> Self {
        Self { starts_per_dim: 16, dedup: 1e-7, max_iter: 50, residual_rel: 1e-12, degenerate: 1e-8 }
    }
}

/// An accepted zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Root {
    /// `(h2, h3, ..., hn)`.
    pub y: Vec<f64>,
    /// `max_i |M_i|` at the root.
    pub residual: f64,
    /// Determinant of `∂M/∂(h1, h3, ..., hn)`.
    pub jac_det: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroReport {
    pub roots: Vec<Root>,
    /// `m^(n-1)`.
    pub bound: u64,
    pub identically_zero: bool,
    /// 1-based components that vanish identically.
    pub zero_components: Vec<usize>,
    pub warnings: Vec<Warning>,
}

impl ZeroReport {
    /// Roots with `|det| >= degenerate`.
    pub fn simple_roots(&self) -> impl Iterator<Item = &Root> {
        self.roots.iter().filter(|r| !r.degenerate)
    }
}

/// `m^(n-1)`: the nominal product of the component degrees.
pub fn theorem_bound(n: usize, m: u32) -> u64 {
    (m as u64).pow((n - 1) as u32)
}

/// Product of nominal degrees, `m` for every component.
pub fn bezout_bound(v: &MelnikovPolynomialVector) -> u64 {
    theorem_bound(v.n(), v.m())
}

/// Product of the actual degrees of `(M1 / h2, M2, ...)`, or `None` when
/// a component vanishes identically.
pub fn degree_product(v: &MelnikovPolynomialVector) -> Option<u64> {
    if !v.zero_components().is_empty() {
        return None;
    }
    Some(v.degrees().iter().map(|&d| d as u64).product())
}

/// Grid of Newton starts at cell centres.
pub fn starts(window: &Window, per_dim: usize) -> Vec<Vec<f64>> {
    let b = window.bounds();
    let d = b.len();
    let total = per_dim.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            let mut p = Vec::with_capacity(d);
            for (lo, hi) in &b {
                let i = idx % per_dim;
                idx /= per_dim;
                p.push(lo + (hi - lo) * (i as f64 + 0.5) / per_dim as f64);
            }
            p
        })
        .collect()
}

fn within(v: &[f64], scale: &[f64], rel: f64) -> bool {
    v.iter().zip(scale).all(|(x, s)| x.abs() <= rel * s.max(1e-300) || *x == 0.0)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Damped Newton on the reduced map from `start`. Returns the converged
/// point if it lies in the window.
pub fn newton_from(target: &dyn ZeroTarget, window: &Window, start: &[f64], opts: &ZeroOptions) -> Option<Vec<f64>> {
    let mut y = start.to_vec();
    let mut f = target.eval_reduced(&y).ok()?;
    for _ in 0..opts.max_iter {
        let scale = target.scale(&y).ok()?;
        if within(&f, &scale, opts.residual_rel) {
            break;
        }
        let j = target.jacobian_reduced(&y).ok()?;
        let step = linalg::solve(&j, &(-DVector::from_column_slice(&f)))?;
        let mut lambda = 1.0;
        let norm0 = inf_norm(&f);
        let mut moved = false;
        for _ in 0..20 {
            let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, s)| a + lambda * s).collect();
            if trial[0] > 0.0 {
                if let Ok(ft) = target.eval_reduced(&trial) {
                    if inf_norm(&ft) < norm0 || lambda < 1e-3 && inf_norm(&ft) <= norm0 {
                        y = trial;
                        f = ft;
                        moved = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !moved || !window.contains(&y, 0.5) {
            break;
        }
    }
    let scale = target.scale(&y).ok()?;
    (within(&f, &scale, opts.residual_rel) && window.contains(&y, 0.0)).then_some(y)
}

/// Deduplicates converged points and attaches residuals and determinants.
pub fn collect_roots(
    target: &dyn ZeroTarget,
    mut candidates: Vec<Vec<f64>>,
    opts: &ZeroOptions,
) -> Result<(Vec<Root>, Vec<Warning>)> {
    candidates.sort_by(|a, b| {
        a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| dist(k, &c) > opts.dedup) {
            kept.push(c);
        }
    }
    let mut warnings = Vec::new();
    for i in 0..kept.len() {
        for j in i + 1..kept.len() {
            let d = dist(&kept[i], &kept[j]);
            if d < 10.0 * opts.dedup {
                warnings.push(Warning::WindowTooCoarse { distance: d });
            }
        }
    }
    let mut roots = Vec::with_capacity(kept.len());
    for y in kept {
        let full = full_from_reduced(&y, target.eval_reduced(&y)?);
        let jac_det = jacobian_h1(target, &y)?.determinant();
        roots.push(Root {
            residual: inf_norm(&full),
            degenerate: !(jac_det.abs() >= opts.degenerate),
            jac_det,
            y,
        });
    }
    Ok((roots, warnings))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Multi-start Newton over the window.
pub fn find_zeros(v: &MelnikovPolynomialVector, window: &Window, opts: &ZeroOptions) -> Result<ZeroReport> {
    window.validate()?;
    if window.nvars() != v.nvars() {
        return Err(Error::DimensionMismatch { expected: v.nvars(), found: window.nvars() });
    }
    let zero_components = v.zero_components();
    let bound = bezout_bound(v);
    if !zero_components.is_empty() {
        return Ok(ZeroReport {
            roots: Vec::new(),
            bound,
            identically_zero: v.is_identically_zero(),
            zero_components,
            warnings: Vec::new(),
        });
    }
    let found: Vec<Vec<f64>> = starts(window, opts.starts_per_dim)
        .iter()
        .filter_map(|s| newton_from(v, window, s, opts))
        .collect();
    let (roots, warnings) = collect_roots(v, found, opts)?;
    Ok(ZeroReport { roots, bound, identically_zero: false, zero_components, warnings })
}

/// Root and Jacobian determinant of the `m = 1` system.
#[derive(Debug, Clone, PartialEq)]
pub struct M1ClosedForm {
    /// `(h2, h3, ..., hn)` solving the affine system by Cramer's rule.
    pub root: Vec<f64>,
    /// `det ∂M/∂(h1, h3, ..., hn)` at the root, from the affine
    /// coefficients.
    pub jacobian_det: f64,
    /// `(pi/2)^(n-1) (a^2_2 / 2) prod_{k>=3} a^k_k`, the determinant when
    /// only the pattern coefficients are nonzero.
    pub pattern_det: f64,
    /// `-(pi/2)^(n-1) a^2_2 / (2 a^1_0) prod_{k>=3} a^k_k`, the pattern
    /// determinant normalized by `-a^1_0`; differs from [`M1ClosedForm::pattern_det`] unless
    /// `a^1_0 = -1`.
    pub normalized_det: f64,
}

/// Closed-form analysis of the `m = 1` family with the first region's
/// coefficients `a^1_0 > 0` (constant in `g1`), `a^2_2 < 0` (the `x2`
/// coefficient of `g2`) and `a^k_k != 0` (the `x_k` coefficient of `g_k`).
pub fn m1_closed_form(table: &CoefficientTable) -> Result<M1ClosedForm> {
    let n = table.n();
    if table.m() != 1 {
        return Err(Error::PatternMismatch("closed form needs m = 1".into()));
    }
    let a = |comp: usize, var: Option<usize>| {
        let mut e = vec![0u32; n];
        if let Some(v) = var {
            e[v - 1] = 1;
        }
        table.get(&Slot::new(RegionId::R1, comp, e))
    };
    let a10 = a(1, None);
    let a22 = a(2, Some(2));
    if a22.is_zero() {
        return Err(Error::PatternMismatch("a^2_2 is zero".into()));
    }
    if !a10.is_positive() || !a22.is_negative() {
        return Err(Error::PatternMismatch("need a^1_0 > 0 and a^2_2 < 0".into()));
    }
    for k in 3..=n {
        if a(k, Some(k)).is_zero() {
            return Err(Error::PatternMismatch(alloc::format!("a^{k}_{k} is zero")));
        }
    }
    let v = crate::symbolic::assemble_vector(table);
    let rho = rho_coefficients(&v)?;
    let nv = n - 1;
    let mat = DMatrix::from_fn(nv, nv, |r, c| rho[r][c + 1].to_f64());
    let rhs = DVector::from_fn(nv, |r, _| -rho[r][0].to_f64());
    let det = mat.determinant();
    if det.abs() < 1e-300 {
        return Err(Error::PatternMismatch("affine system is singular".into()));
    }
    let root: Vec<f64> = (0..nv)
        .map(|c| {
            let mut mc = mat.clone();
            mc.set_column(c, &rhs);
            mc.determinant() / det
        })
        .collect();
    let jacobian_det = jacobian_h1(&v, &root)?.determinant();
    let f = |q: num_rational::BigRational| num_traits::ToPrimitive::to_f64(&q).unwrap_or(f64::NAN);
    let half_pi = core::f64::consts::FRAC_PI_2;
    let prod: f64 = (3..=n).map(|k| f(a(k, Some(k)))).product();
    let lead = libm::pow(half_pi, nv as f64);
    let pattern_det = lead * f(a22.clone()) / 2.0 * prod;
    let normalized_det = -lead * f(a22) / (2.0 * f(a10)) * prod;
    Ok(M1ClosedForm { root, jacobian_det, pattern_det, normalized_det })
}
