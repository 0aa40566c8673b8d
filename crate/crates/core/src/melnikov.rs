//! First-order Melnikov vector by quadrature along the unperturbed orbit.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, Warning};
use crate::flow::{corner_points, unperturbed_orbit, FlowOptions, OrbitArc};
use crate::linalg;
use crate::model::{CornerPoints, FirstIntegralSet, LevelParameter, PiecewiseSystem, RegionId, VectorField};
use crate::quadrature::{Integrator, QuadOptions};

/// Which column (or entry) a bar reduction deletes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    /// Overbar: delete the first column.
    First,
    /// Underbar: delete the second column.
    Second,
}

impl Which {
    fn index(self) -> usize {
        match self {
            Which::First => 0,
            Which::Second => 1,
        }
    }
}

/// A corner Jacobian together with its square reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct BarMatrix {
    pub source: DMatrix<f64>,
    pub reduced: DMatrix<f64>,
    pub which: Which,
}

pub fn bar(mat: &DMatrix<f64>, which: Which) -> BarMatrix {
    assert!(mat.ncols() >= 2, "bar needs at least two columns");
    BarMatrix { source: mat.clone(), reduced: linalg::remove_column(mat, which.index()), which }
}

pub fn bar_vector(v: &DVector<f64>, which: Which) -> DVector<f64> {
    assert!(v.len() >= 2, "bar needs at least two entries");
    linalg::remove_element(v, which.index())
}

/// Above this condition number a corner inverse is reported.
pub const CONDITION_WARN: f64 = 1e8;
/// Below this `|det|` a corner matrix counts as singular.
pub const SINGULAR_DET: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MelnikovOptions {
    pub flow: FlowOptions,
    pub quad: QuadOptions,
}

/// Output of [`melnikov_general`].
#[derive(Debug, Clone)]
pub struct MelnikovQuadResult {
    pub value: Vec<f64>,
    /// `∫ DH^k g^k dt` over arcs `AB, BC, CE, EA`.
    pub arc_integrals: [Vec<f64>; 4],
    /// Weights of arcs `BC, CE, EA`.
    pub coefficients: [DMatrix<f64>; 3],
    pub corners: CornerPoints,
    pub warnings: Vec<Warning>,
}

/// `∫ DH^k(x(t)) g(x(t)) dt` over `arc`, with `k` the region driving each
/// piece of the arc.
pub fn arc_integral(
    h_set: &FirstIntegralSet,
    g: &dyn VectorField,
    arc: &OrbitArc,
    quad: &Integrator,
) -> Result<Vec<f64>> {
    let n = h_set.dim();
    let mut total = vec![0.0; n - 1];
    let mut gx = vec![0.0; n];
    let bp = arc.breakpoints();
    for w in bp.windows(2) {
        let k = arc.region_at(0.5 * (w[0] + w[1]));
        let part = quad.integrate_vec(
            n - 1,
            |t, out| {
                let x = arc.state_at(t);
                g.eval(&x, &mut gx);
                let jac = h_set.jacobian(k, &x);
                let v = jac * DVector::from_column_slice(&gx);
                out.copy_from_slice(v.as_slice());
            },
            w[0],
            w[1],
        )?;
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    Ok(total)
}

fn checked_inverse(m: &BarMatrix, name: &'static str, warnings: &mut Vec<Warning>) -> Result<DMatrix<f64>> {
    let det = m.reduced.determinant();
    if !(det.abs() >= SINGULAR_DET) {
        return Err(Error::SingularCornerMatrix { which: name, det });
    }
    let inv = linalg::invert(&m.reduced).ok_or(Error::SingularCornerMatrix { which: name, det })?;
    if inv.condition > CONDITION_WARN {
        warnings.push(Warning::IllConditioned { which: name, condition: inv.condition });
    }
    Ok(inv.inverse)
}

/// Weights multiplying the integrals over `BC`, `CE` and `EA`:
///
/// * `P1 = bar(DH1(A)) bar(DH4(A))^-1`,
/// * `P2 = P1 under(DH4(E)) under(DH3(E))^-1`,
/// * `P3 = P2 bar(DH3(C)) bar(DH2(C))^-1`,
///
/// returned as `[P3, P2, P1]`.
pub fn coefficient_matrices(
    h_set: &FirstIntegralSet,
    c: &CornerPoints,
    warnings: &mut Vec<Warning>,
) -> Result<[DMatrix<f64>; 3]> {
    use RegionId::*;
    use Which::*;
    let j = |k, p: &[f64], w| bar(&h_set.jacobian(k, p), w);
    let p1 = j(R1, &c.a, First).reduced * checked_inverse(&j(R4, &c.a, First), "DH4(A)", warnings)?;
    let p2 = &p1 * j(R4, &c.e, Second).reduced * checked_inverse(&j(R3, &c.e, Second), "DH3(E)", warnings)?;
    let p3 = &p2 * j(R3, &c.c, First).reduced * checked_inverse(&j(R2, &c.c, First), "DH2(C)", warnings)?;
    Ok([p3, p2, p1])
}

/// The full product around the orbit,
/// `P3 under(DH2(B)) under(DH1(B))^-1`, which equals the identity whenever
/// the orbit is a level set of compatible integrals.
pub fn chained_product(h_set: &FirstIntegralSet, c: &CornerPoints) -> Result<DMatrix<f64>> {
    let mut w = Vec::new();
    let [p3, _, _] = coefficient_matrices(h_set, c, &mut w)?;
    let b2 = bar(&h_set.jacobian(RegionId::R2, &c.b), Which::Second);
    let b1 = bar(&h_set.jacobian(RegionId::R1, &c.b), Which::Second);
    Ok(p3 * b2.reduced * checked_inverse(&b1, "DH1(B)", &mut w)?)
}

/// General Melnikov vector at level `h`.
pub fn melnikov_general(
    sys: &PiecewiseSystem,
    h_set: &FirstIntegralSet,
    h: &LevelParameter,
    opts: &MelnikovOptions,
) -> Result<MelnikovQuadResult> {
    let corners = corner_points(h_set, h)?;
    let mut warnings = Vec::new();
    if h_set.uses_fallback_gradients() {
        warnings.push(Warning::FiniteDifferenceGradient);
    }
    let coefficients = coefficient_matrices(h_set, &corners, &mut warnings)?;
    let arcs = unperturbed_orbit(sys, h_set, h, &opts.flow)?;
    let quad = Integrator::new(opts.quad);
    let mut ints: [Vec<f64>; 4] = Default::default();
    for (i, k) in RegionId::ALL.into_iter().enumerate() {
        ints[i] = arc_integral(h_set, sys.region(k).g.as_ref(), &arcs[i], &quad)?;
    }
    let dv = |v: &Vec<f64>| DVector::from_column_slice(v);
    let value = dv(&ints[0])
        + &coefficients[0] * dv(&ints[1])
        + &coefficients[1] * dv(&ints[2])
        + &coefficients[2] * dv(&ints[3]);
    Ok(MelnikovQuadResult {
        value: value.as_slice().to_vec(),
        arc_integrals: ints,
        coefficients,
        corners,
        warnings,
    })
}

/// Shape of a system whose integrals are `(H, x3, ..., xn)` with one `H`
/// for all regions and `f = (H_x2, -H_x1, 0, ...)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HamiltonianForm {
    /// Whether `H` depends on `x3, ..., xn`.
    pub depends_on_hhat: bool,
}

/// Fixed probe points used to test the Hamiltonian form.
fn probe_points(n: usize, h: &LevelParameter) -> Vec<Vec<f64>> {
    let r = libm::sqrt(2.0 * h.h1().abs()).max(0.1);
    let mut pts = Vec::new();
    for (i, (s, c)) in [(0.31, 0.95), (0.87, -0.49), (-0.62, -0.78), (-0.97, 0.24), (0.55, 0.12)]
        .into_iter()
        .enumerate()
    {
        let mut x = vec![r * s, r * c];
        for j in 2..n {
            let base = h.0.get(j - 1).copied().unwrap_or(0.0);
            x.push(base + 0.1 * (i as f64 - 2.0) + 0.05 * j as f64);
        }
        pts.push(x);
    }
    pts
}

/// Checks the Hamiltonian form by sampling.
pub fn detect_hamiltonian_form(
    sys: &PiecewiseSystem,
    h_set: &FirstIntegralSet,
    h: &LevelParameter,
) -> Result<HamiltonianForm> {
    let n = sys.dim();
    let mut depends = false;
    let mut g0 = vec![0.0; n];
    let mut g = vec![0.0; n];
    for x in probe_points(n, h) {
        let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-9 * scale * scale;
        let first = &h_set.integrals(RegionId::R1)[0];
        let v0 = first.value(&x);
        first.gradient(&x, &mut g0);
        depends |= g0[2..].iter().any(|d| d.abs() > tol);
        for k in RegionId::ALL {
            let list = h_set.integrals(k);
            if (list[0].value(&x) - v0).abs() > tol {
                return Err(Error::FormMismatch("first integrals differ between regions"));
            }
            list[0].gradient(&x, &mut g);
            if g.iter().zip(&g0).any(|(a, b)| (a - b).abs() > tol) {
                return Err(Error::FormMismatch("first integrals differ between regions"));
            }
            for (j, s) in list.iter().enumerate().skip(1) {
                if (s.value(&x) - x[j + 1]).abs() > tol {
                    return Err(Error::FormMismatch("integrals beyond the first must be x3, ..., xn"));
                }
            }
            let f = sys.eval_region(k, &x, 0.0);
            let expect_1 = g0[1];
            let expect_2 = -g0[0];
            if (f[0] - expect_1).abs() > tol || (f[1] - expect_2).abs() > tol {
                return Err(Error::FormMismatch("planar field is not (H_x2, -H_x1)"));
            }
            if f[2..].iter().any(|v| v.abs() > tol) {
                return Err(Error::FormMismatch("unperturbed field moves x3, ..., xn"));
            }
        }
    }
    Ok(HamiltonianForm { depends_on_hhat: depends })
}

/// Hamiltonian specialization: component 1 is
/// `Σ_k ∫ g2 dx1 - g1 dx2 (+ Σ_i ∫ H_{x_{i+2}} g_{i+2} dt)`, component
/// `j >= 2` is `Σ_k ∫ g_{j+1} dt`.
pub fn melnikov_hamiltonian(
    sys: &PiecewiseSystem,
    h_set: &FirstIntegralSet,
    h: &LevelParameter,
    opts: &MelnikovOptions,
) -> Result<Vec<f64>> {
    let form = detect_hamiltonian_form(sys, h_set, h)?;
    let n = sys.dim();
    let arcs = unperturbed_orbit(sys, h_set, h, &opts.flow)?;
    let quad = Integrator::new(opts.quad);
    let mut total = vec![0.0; n - 1];
    let mut gx = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let hfun = &h_set.integrals(RegionId::R1)[0];
    for (k, arc) in RegionId::ALL.into_iter().zip(&arcs) {
        let rf = sys.region(k);
        let part = quad.integrate_vec(
            n - 1,
            |t, out| {
                let x = arc.state_at(t);
                rf.g.eval(&x, &mut gx);
                let f = sys.eval_region(k, &x, 0.0);
                // g2 dx1 - g1 dx2 with dx = f dt
                out[0] = gx[1] * f[0] - gx[0] * f[1];
                if form.depends_on_hhat {
                    hfun.gradient(&x, &mut grad);
                    out[0] += (2..n).map(|i| grad[i] * gx[i]).sum::<f64>();
                }
                for j in 1..n - 1 {
                    out[j] = gx[j + 1];
                }
            },
            0.0,
            arc.duration,
        )?;
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    Ok(total)
}

/// Central difference in `h1` refined by one Richardson step.
pub fn richardson_derivative<F>(mut f: F, h1: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let d = 1e-5 * h1.abs().max(1.0);
    let c1 = (f(h1 + d)? - f(h1 - d)?) / (2.0 * d);
    let c2 = (f(h1 + 0.5 * d)? - f(h1 - 0.5 * d)?) / d;
    Ok((4.0 * c2 - c1) / 3.0)
}

/// Component `j` (in `2..n`) of the arc-`k` Melnikov integral
/// `∫_{L^k} g_{j+1} dt`, computed as `d/dh1 ∫_{L^k} R dx1` with
/// `R(x) = ∫_0^{x2} g_{j+1}(x1, s, x3, ...) ds`.
pub fn melnikov_component_via_antiderivative(
    sys: &PiecewiseSystem,
    h_set: &FirstIntegralSet,
    g: &dyn VectorField,
    j: usize,
    k: RegionId,
    h: &LevelParameter,
    opts: &MelnikovOptions,
) -> Result<f64> {
    let n = sys.dim();
    if j < 2 || j >= n {
        return Err(Error::InvalidArgument(alloc::format!("component {j} outside 2..{n}")));
    }
    let quad = Integrator::new(opts.quad);
    let inner = Integrator::new(QuadOptions { rtol: 1e-13, ..opts.quad });
    let mut gx = vec![0.0; n];
    let mut m_bar = |h1: f64| -> Result<f64> {
        let lvl = LevelParameter::new(h1, h.hhat());
        let arcs = unperturbed_orbit(sys, h_set, &lvl, &opts.flow)?;
        let arc = &arcs[k.index() - 1];
        let mut err = None;
        let v = quad.integrate(
            |t| {
                let x = arc.state_at(t);
                let f = sys.eval_region(k, &x, 0.0);
                let mut y = x.0.clone();
                let r = inner.integrate(
                    |s| {
                        y[1] = s;
                        g.eval(&y, &mut gx);
                        gx[j]
                    },
                    0.0,
                    x[1],
                );
                match r {
                    Ok(r) => r * f[0],
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                }
            },
            0.0,
            arc.duration,
        )?;
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    };
    richardson_derivative(&mut m_bar, h.h1())
}

/// `∫_{L^k} g_{j+1} dt` directly, for comparison with the antiderivative
/// route.
pub fn melnikov_component_direct(
    sys: &PiecewiseSystem,
    h_set: &FirstIntegralSet,
    g: &dyn VectorField,
    j: usize,
    k: RegionId,
    h: &LevelParameter,
    opts: &MelnikovOptions,
) -> Result<f64> {
    let n = sys.dim();
    let arcs = unperturbed_orbit(sys, h_set, h, &opts.flow)?;
    let arc = &arcs[k.index() - 1];
    let mut gx = vec![0.0; n];
    Integrator::new(opts.quad).integrate(
        |t| {
            g.eval(&arc.state_at(t), &mut gx);
            gx[j]
        },
        0.0,
        arc.duration,
    )
}
