//! Line integrals `∫ q dx - p dy` over the four quarters of a closed orbit
//! of a planar piecewise Hamiltonian system, and their `h`-derivatives.
//!
//! The orbit `L_h` runs clockwise through `A1 = (0, a1)`, `A2 = (a2, 0)`,
//! `A3 = (0, a3)`, `A4 = (a4, 0)`; piece `k` follows `x' = H^k_y,
//! y' = -H^k_x`.

use alloc::sync::Arc;
use alloc::vec;

use crate::error::Result;
use crate::flow::{corner_points, unperturbed_orbit, FlowOptions, OrbitArc};
use crate::model::{
    CornerPoints, CornerRule, FirstIntegralSet, FnField, LevelParameter, PiecewiseSystem, RegionFields,
    RegionId, ScalarIntegral, VectorField, ZeroField,
};
use crate::poly::Polynomial;
use crate::quadrature::{Integrator, QuadOptions};

/// Planar piecewise Hamiltonian `(H^1, ..., H^4)` in `(x, y)`.
#[derive(Debug, Clone)]
pub struct PlanarHamiltonian {
    h: [Polynomial; 4],
    system: PiecewiseSystem,
    integrals: FirstIntegralSet,
}

/// Integrand pair `(p^k, q^k)` per region.
#[derive(Debug, Clone)]
pub struct PlanarIntegrand {
    pub p: [Polynomial; 4],
    pub q: [Polynomial; 4],
}

impl PlanarIntegrand {
    pub fn uniform(p: Polynomial, q: Polynomial) -> Self {
        Self { p: core::array::from_fn(|_| p.clone()), q: core::array::from_fn(|_| q.clone()) }
    }
}

/// Quarter of `L_h` together with the data at its ends.
#[derive(Debug, Clone)]
struct Piece {
    arc: OrbitArc,
    corners: CornerPoints,
}

impl PlanarHamiltonian {
    pub fn new(h: [Polynomial; 4]) -> Result<Self> {
        let fields: [RegionFields; 4] = core::array::from_fn(|k| {
            let hx = h[k].partial(0);
            let hy = h[k].partial(1);
            let f: Arc<dyn VectorField> = Arc::new(FnField::new(2, move |x: &[f64], o: &mut [f64]| {
                o[0] = hy.eval(x);
                o[1] = -hx.eval(x);
            }));
            RegionFields::new(f, Arc::new(ZeroField(2)))
        });
        let system = PiecewiseSystem::new(2, fields)?;
        let integrals = FirstIntegralSet::new(
            2,
            core::array::from_fn(|k| vec![ScalarIntegral::from_polynomial(h[k].clone())]),
            CornerRule::Newton(None),
        )?;
        Ok(Self { h, system, integrals })
    }

    pub fn system(&self) -> &PiecewiseSystem {
        &self.system
    }

    pub fn integrals(&self) -> &FirstIntegralSet {
        &self.integrals
    }

    /// `(a1, a2, a3, a4)` at level `h`.
    pub fn axis_points(&self, h: f64) -> Result<[f64; 4]> {
        let c = corner_points(&self.integrals, &LevelParameter::new(h, &[]))?;
        Ok([c.a[1], c.b[0], c.c[1], c.e[0]])
    }

    fn grad(&self, k: usize, x: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        self.h[k].gradient(x, &mut g);
        g
    }

    /// `(a1', a2', a3', a4')` and the level derivatives `(c1', ..., c4')`
    /// of the four pieces, `c_k = H^k` on piece `k`.
    pub fn level_derivatives(&self, h: f64) -> Result<([f64; 4], [f64; 4])> {
        let [a1, a2, a3, a4] = self.axis_points(h)?;
        let p1 = [0.0, a1];
        let p2 = [a2, 0.0];
        let p3 = [0.0, a3];
        let p4 = [a4, 0.0];
        let d1 = 1.0 / self.grad(0, &p1)[1];
        let d2 = 1.0 / self.grad(0, &p2)[0];
        let c2 = self.grad(1, &p2)[0] * d2;
        let d3 = c2 / self.grad(1, &p3)[1];
        let c3 = self.grad(2, &p3)[1] * d3;
        let d4 = c3 / self.grad(2, &p4)[0];
        let c4 = self.grad(3, &p4)[0] * d4;
        Ok(([d1, d2, d3, d4], [1.0, c2, c3, c4]))
    }

    fn piece(&self, k: RegionId, h: f64, opts: &FlowOptions) -> Result<Piece> {
        let lvl = LevelParameter::new(h, &[]);
        let corners = corner_points(&self.integrals, &lvl)?;
        let mut arcs = unperturbed_orbit(&self.system, &self.integrals, &lvl, opts)?;
        Ok(Piece { arc: arcs.swap_remove(k.index() - 1), corners })
    }

    /// `M_k(h) = ∫ q^k dx - p^k dy` over piece `k`.
    pub fn line_integral(&self, w: &PlanarIntegrand, k: RegionId, h: f64, opts: &PlanarOptions) -> Result<f64> {
        let piece = self.piece(k, h, &opts.flow)?;
        let i = k.index() - 1;
        Integrator::new(opts.quad).integrate(
            |t| {
                let x = piece.arc.state_at(t);
                let [hx, hy] = self.grad(i, &x);
                w.q[i].eval(&x) * hy + w.p[i].eval(&x) * hx
            },
            0.0,
            piece.arc.duration,
        )
    }

    /// `dM_k/dh = c_k' ∫ (p_x + q_y) dt + ω(end) - ω(start)` with
    /// `ω = q a'` at a corner `(a, 0)` and `ω = -p a'` at `(0, a)`.
    pub fn line_integral_h_derivative(
        &self,
        w: &PlanarIntegrand,
        k: RegionId,
        h: f64,
        opts: &PlanarOptions,
    ) -> Result<f64> {
        let piece = self.piece(k, h, &opts.flow)?;
        let (da, dc) = self.level_derivatives(h)?;
        let i = k.index() - 1;
        let (p, q) = (&w.p[i], &w.q[i]);
        let div = [p.partial(0), q.partial(1)];
        let area = Integrator::new(opts.quad).integrate(
            |t| {
                let x = piece.arc.state_at(t);
                div[0].eval(&x) + div[1].eval(&x)
            },
            0.0,
            piece.arc.duration,
        )?;
        let c = &piece.corners;
        let on_y = |x: &[f64], d: f64| -p.eval(x) * d;
        let on_x = |x: &[f64], d: f64| q.eval(x) * d;
        let boundary = match k {
            RegionId::R1 => on_x(&c.b, da[1]) - on_y(&c.a, da[0]),
            RegionId::R2 => on_y(&c.c, da[2]) - on_x(&c.b, da[1]),
            RegionId::R3 => on_x(&c.e, da[3]) - on_y(&c.c, da[2]),
            RegionId::R4 => on_y(&c.a, da[0]) - on_x(&c.e, da[3]),
        };
        Ok(dc[i] * area + boundary)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarOptions {
    pub flow: FlowOptions,
    pub quad: QuadOptions,
}

impl Default for PlanarOptions {
    fn default() -> Self {
        Self { flow: FlowOptions { samples: 9, ..FlowOptions::default() }, quad: QuadOptions::default() }
    }
}

/// `H^k = Q_k + γ_k Q_k^2` with `Q_k = (α_k x^2 + β_k y^2)/2`, which has
/// closed orbits whenever `β4 α1 β2 α3 = β1 α4 β3 α2`.
pub fn quadratic_hamiltonian(alpha: [f64; 4], beta: [f64; 4], gamma: [f64; 4]) -> [Polynomial; 4] {
    core::array::from_fn(|k| {
        let (a, b, g) = (alpha[k], beta[k], gamma[k]);
        Polynomial::from_terms(
            2,
            [
                (0.5 * a, vec![2, 0]),
                (0.5 * b, vec![0, 2]),
                (0.25 * g * a * a, vec![4, 0]),
                (0.5 * g * a * b, vec![2, 2]),
                (0.25 * g * b * b, vec![0, 4]),
            ],
        )
    })
}

/// Completes `beta[3]` so that [`quadratic_hamiltonian`] has closed orbits.
pub fn closing_beta4(alpha: [f64; 4], beta: [f64; 4]) -> f64 {
    beta[0] * alpha[3] * beta[2] * alpha[1] / (alpha[0] * beta[1] * alpha[2])
}
