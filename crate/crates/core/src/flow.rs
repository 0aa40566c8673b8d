//! Integration of the piecewise flow with event location on the switching
//! planes: unperturbed arcs, corner points, the perturbed Poincaré map and
//! shooting for closed perturbed orbits.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{
    entry_region, CornerPoints, CornerRule, FirstIntegralSet, LevelParameter, PiecewiseSystem,
    Plane, RegionId, StateVector,
};
use crate::ode::{fixed_step, DenseStep, Dopri5, OdeOptions};

/// Normal velocities below this at an event count as tangential.
pub const TANGENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub ode: OdeOptions,
    /// Integration time allowed per region before giving up. `None` picks
    /// ten times the unperturbed quarter period.
    pub max_time: Option<f64>,
    /// Escape threshold on `max |x_i|`. `None` picks `10 max(1, |x0|)`.
    pub bound: Option<f64>,
    /// Number of stored samples per arc, endpoints included.
    pub samples: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { ode: OdeOptions::default(), max_time: None, bound: None, samples: 33 }
    }
}

/// Per-region time budget used when no unperturbed period is known.
const FALLBACK_MAX_TIME: f64 = 1000.0;

#[derive(Debug, Clone)]
struct Piece {
    region: RegionId,
    /// Global time of the local clock's origin.
    offset: f64,
    /// Global end of the part of the step that belongs to the arc.
    end: f64,
    step: DenseStep,
}

#[derive(Debug, Clone)]
enum Path {
    /// `x = (r sin(theta0 + t), r cos(theta0 + t), rest)`.
    Circle { r: f64, theta0: f64, rest: Vec<f64> },
    Numeric { sys: PiecewiseSystem, eps: f64, pieces: Vec<Piece> },
}

/// A piece of trajectory from a start point to its first crossing of a
/// switching plane.
#[derive(Debug, Clone)]
pub struct OrbitArc {
    /// Region the arc starts in.
    pub region: RegionId,
    pub samples: Vec<(f64, StateVector)>,
    pub start: StateVector,
    pub end: StateVector,
    pub duration: f64,
    path: Path,
}

impl OrbitArc {
    /// Exact quarter arc of the linear center on the circle of radius `r`.
    pub fn circle_quarter(region: RegionId, r: f64, rest: &[f64], samples: usize) -> Self {
        let theta0 = (region.index() - 1) as f64 * FRAC_PI_2;
        let mut arc = Self {
            region,
            samples: Vec::new(),
            start: StateVector::default(),
            end: StateVector::default(),
            duration: FRAC_PI_2,
            path: Path::Circle { r, theta0, rest: rest.to_vec() },
        };
        arc.start = arc.state_at(0.0);
        arc.end = arc.state_at(FRAC_PI_2);
        // Snap the endpoints onto the axes.
        match region {
            RegionId::R1 | RegionId::R3 => {
                arc.start[0] = 0.0;
                arc.end[1] = 0.0;
            }
            RegionId::R2 | RegionId::R4 => {
                arc.start[1] = 0.0;
                arc.end[0] = 0.0;
            }
        }
        arc.fill_samples(samples);
        arc
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.path, Path::Circle { .. })
    }

    /// State at time `t` in `[0, duration]`. Numeric arcs re-step from the
    /// start of the containing integrator step, which keeps fifth-order
    /// accuracy rather than that of the interpolant.
    pub fn state_at(&self, t: f64) -> StateVector {
        match &self.path {
            Path::Circle { r, theta0, rest } => {
                let th = theta0 + t;
                let mut v = Vec::with_capacity(2 + rest.len());
                v.push(r * libm::sin(th));
                v.push(r * libm::cos(th));
                v.extend_from_slice(rest);
                StateVector(v)
            }
            Path::Numeric { sys, eps, pieces } => {
                let idx = pieces.partition_point(|p| p.end < t).min(pieces.len() - 1);
                let p = &pieces[idx];
                let local = t - p.offset;
                let dt = local - p.step.t0;
                if dt == 0.0 {
                    return StateVector(p.step.y0.clone());
                }
                let mut rhs = region_rhs(sys, p.region, *eps);
                StateVector(fixed_step(&mut rhs, &p.step.y0, dt))
            }
        }
    }

    /// Region whose field drives the arc at time `t`.
    pub fn region_at(&self, t: f64) -> RegionId {
        match &self.path {
            Path::Circle { .. } => self.region,
            Path::Numeric { pieces, .. } => {
                let idx = pieces.partition_point(|p| p.end < t).min(pieces.len() - 1);
                pieces[idx].region
            }
        }
    }

    /// Times splitting the arc into smooth pieces, `0` and `duration`
    /// included.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.path {
            Path::Circle { .. } => vec![0.0, self.duration],
            Path::Numeric { pieces, .. } => {
                let mut v = Vec::with_capacity(pieces.len() + 1);
                v.push(0.0);
                v.extend(pieces.iter().map(|p| p.end));
                if let Some(last) = v.last_mut() {
                    *last = self.duration;
                }
                v
            }
        }
    }

    fn fill_samples(&mut self, samples: usize) {
        let count = samples.max(2);
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let t = self.duration * i as f64 / (count - 1) as f64;
            let x = if i == 0 {
                self.start.clone()
            } else if i + 1 == count {
                self.end.clone()
            } else {
                self.state_at(t)
            };
            out.push((t, x));
        }
        self.samples = out;
    }
}

fn region_rhs(sys: &PiecewiseSystem, k: RegionId, eps: f64) -> impl FnMut(&[f64], &mut [f64]) + '_ {
    let rf = sys.region(k);
    let mut scratch = vec![0.0; sys.dim()];
    move |y: &[f64], out: &mut [f64]| rf.eval(y, eps, out, &mut scratch)
}

fn default_max_time(sys: &PiecewiseSystem) -> f64 {
    if sys.is_linear_center() {
        10.0 * FRAC_PI_2
    } else {
        FALLBACK_MAX_TIME
    }
}

/// Integrates from `x0` until the first clockwise crossing of `plane`,
/// switching fields when the orbit passes through the other plane on the
/// way. The end point is projected exactly onto `plane`.
pub fn flow_to_plane(
    sys: &PiecewiseSystem,
    x0: &StateVector,
    eps: f64,
    plane: Plane,
    opts: &FlowOptions,
) -> Result<OrbitArc> {
    let n = sys.dim();
    if x0.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x0.dim() });
    }
    if !x0.is_finite() {
        return Err(Error::InvalidArgument("non-finite start point".into()));
    }
    let bound = opts.bound.unwrap_or(10.0 * x0.max_abs().max(1.0));
    let max_time = opts.max_time.unwrap_or_else(|| default_max_time(sys));
    let start_region = entry_region(x0);
    let mut k = start_region;
    let mut y = x0.0.clone();
    let mut t_global = 0.0;
    let mut pieces = Vec::new();

    // At most four region changes before the target plane comes up.
    for _ in 0..4 {
        let exit = k.exit_plane();
        let c = exit.coordinate();
        let side = k.side(exit);
        let mut rhs = region_rhs(sys, k, eps);
        let mut ode = Dopri5::new(&mut rhs, 0.0, y.clone(), opts.ode);
        let (event_t, y_event, step) = loop {
            let step = ode.step()?;
            if step.y1.iter().any(|v| !v.is_finite() || v.abs() > bound) {
                return Err(Error::OrbitEscaped { bound });
            }
            let (v0, v1) = (side * step.y0[c], side * step.y1[c]);
            if v0 > 0.0 && v1 <= 0.0 {
                drop(ode);
                let (te, ye) = locate_event(&mut rhs, &step, c, exit)?;
                break (te, ye, step);
            }
            if step.t1() > max_time {
                return Err(Error::NoCrossing { plane, max_time });
            }
            pieces.push(Piece { region: k, offset: t_global, end: t_global + step.t1(), step });
        };
        pieces.push(Piece { region: k, offset: t_global, end: t_global + event_t, step });
        t_global += event_t;
        y = y_event;
        if exit == plane {
            let mut arc = OrbitArc {
                region: start_region,
                samples: Vec::new(),
                start: x0.clone(),
                end: StateVector(y),
                duration: t_global,
                path: Path::Numeric { sys: sys.clone(), eps, pieces },
            };
            arc.fill_samples(opts.samples);
            return Ok(arc);
        }
        k = k.next();
    }
    Err(Error::NoCrossing { plane, max_time })
}

/// Finds the crossing time of coordinate `c` inside `step`, refines it with
/// exact re-steps and returns the local time and the projected state.
fn locate_event<F: FnMut(&[f64], &mut [f64])>(
    rhs: &mut F,
    step: &DenseStep,
    c: usize,
    plane: Plane,
) -> Result<(f64, Vec<f64>)> {
    let n = step.y0.len();
    // Illinois regula falsi on the interpolant.
    let (mut a, mut b) = (step.t0, step.t1());
    let (mut fa, mut fb) = (step.y0[c], step.y1[c]);
    let mut t = if fb == 0.0 { b } else { a };
    if fb != 0.0 {
        let mut last_side = 0i8;
        for _ in 0..200 {
            t = (a * fb - b * fa) / (fb - fa);
            if !(t > a && t < b) {
                t = 0.5 * (a + b);
            }
            let ft = step.eval_component(t, c);
            if ft == 0.0 || (b - a) < 1e-14 {
                break;
            }
            if (ft > 0.0) == (fa > 0.0) {
                a = t;
                fa = ft;
                if last_side == 1 {
                    fb *= 0.5;
                }
                last_side = 1;
            } else {
                b = t;
                fb = ft;
                if last_side == -1 {
                    fa *= 0.5;
                }
                last_side = -1;
            }
        }
    }
    // Newton with exact re-steps from the step start.
    let mut dy = vec![0.0; n];
    let mut y = fixed_step(rhs, &step.y0, t - step.t0);
    for _ in 0..4 {
        rhs(&y, &mut dy);
        let v = dy[c];
        if v.abs() < TANGENCY_TOL {
            return Err(Error::TangencyDetected { plane, velocity: v.abs() });
        }
        let dt = -y[c] / v;
        t += dt;
        y = fixed_step(rhs, &step.y0, t - step.t0);
        if dt.abs() < 1e-15 * t.abs().max(1.0) {
            break;
        }
    }
    rhs(&y, &mut dy);
    if dy[c].abs() < TANGENCY_TOL {
        return Err(Error::TangencyDetected { plane, velocity: dy[c].abs() });
    }
    y[c] = 0.0;
    Ok((t, y))
}

/// Corner points `A, B, C, E` of the unperturbed orbit `L_h`.
pub fn corner_points(h_set: &FirstIntegralSet, h: &LevelParameter) -> Result<CornerPoints> {
    let n = h_set.dim();
    if h.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n - 1, found: h.len() });
    }
    match h_set.corner_rule() {
        CornerRule::Circle => {
            if !(h.h1() > 0.0) {
                return Err(Error::InvalidArgument(alloc::format!("h1 must be positive, got {}", h.h1())));
            }
            Ok(CornerPoints::circle(libm::sqrt(2.0 * h.h1()), h.hhat()))
        }
        CornerRule::Newton(seed) => {
            let seed = seed.clone().unwrap_or_else(|| CornerPoints::unit_seed(n));
            let a = solve_corner(h_set, RegionId::R1, &h.0, &seed.a, Plane::X1Zero, 1.0, 'A')?;
            let target = h_set.values(RegionId::R1, &a);
            let b0 = rotated_seed(&seed.b, &a, Plane::X2Zero, 1.0);
            let b = solve_corner(h_set, RegionId::R1, &target, &b0, Plane::X2Zero, 1.0, 'B')?;
            let target = h_set.values(RegionId::R2, &b);
            let c0 = rotated_seed(&seed.c, &b, Plane::X1Zero, -1.0);
            let c = solve_corner(h_set, RegionId::R2, &target, &c0, Plane::X1Zero, -1.0, 'C')?;
            let target = h_set.values(RegionId::R3, &c);
            let e0 = rotated_seed(&seed.e, &c, Plane::X2Zero, -1.0);
            let e = solve_corner(h_set, RegionId::R3, &target, &e0, Plane::X2Zero, -1.0, 'E')?;
            let ha = h_set.values(RegionId::R4, &a);
            let he = h_set.values(RegionId::R4, &e);
            let defect = ha.iter().zip(&he).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            if defect > 1e-9 * ha.iter().fold(1.0f64, |m, v| m.max(v.abs())) {
                return Err(Error::OrbitNotClosed { defect });
            }
            Ok(CornerPoints { a, b, c, e })
        }
    }
}

/// Seed for the next corner: the user seed if it has the right sign,
/// otherwise the previous corner rotated a quarter turn.
fn rotated_seed(user: &StateVector, prev: &StateVector, plane: Plane, sign: f64) -> StateVector {
    let free = 1 - plane.coordinate();
    let mut s = prev.clone();
    let mag = prev[0].abs().max(prev[1].abs());
    s[plane.coordinate()] = 0.0;
    s[free] = sign * mag;
    if user.dim() == prev.dim() && user[free] * sign > 0.0 {
        let mut u = user.clone();
        u[plane.coordinate()] = 0.0;
        // Keep the continuation of the frozen coordinates from `prev`.
        for i in 2..u.dim() {
            u[i] = prev[i];
        }
        return u;
    }
    s
}

const CORNER_TOL: f64 = 1e-10;

/// Damped Newton for `H^k(p) = target` with `p` on `plane` and the free
/// planar coordinate of sign `sign`.
fn solve_corner(
    h_set: &FirstIntegralSet,
    k: RegionId,
    target: &[f64],
    seed: &StateVector,
    plane: Plane,
    sign: f64,
    name: char,
) -> Result<StateVector> {
    let c = plane.coordinate();
    let free = 1 - c;
    let mut p = seed.clone();
    p[c] = 0.0;
    let resid = |p: &StateVector| -> DVector<f64> {
        let v = h_set.values(k, p);
        DVector::from_iterator(v.len(), v.iter().zip(target).map(|(a, b)| a - b))
    };
    let scale = target.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut r = resid(&p);
    for _ in 0..50 {
        if r.amax() <= 1e-14 * scale {
            break;
        }
        let jac: DMatrix<f64> = linalg::remove_column(&h_set.jacobian(k, &p), c);
        let Some(step) = linalg::solve(&jac, &(-&r)) else {
            return Err(Error::CornerSolveFailed { corner: name, residual: r.amax() });
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut q = p.clone();
            let mut j = 0;
            for i in 0..q.dim() {
                if i == c {
                    continue;
                }
                q[i] += lambda * step[j];
                j += 1;
            }
            if q[free] * sign > 0.0 {
                let rq = resid(&q);
                if rq.amax() < r.amax() || rq.amax() <= 1e-14 * scale {
                    p = q;
                    r = rq;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r.amax() > CORNER_TOL * scale {
        return Err(Error::CornerSolveFailed { corner: name, residual: r.amax() });
    }
    Ok(p)
}

/// The four arcs `A -> B -> C -> E -> A` of `L_h`.
pub fn unperturbed_orbit(
    sys: &PiecewiseSystem,
    h_set: &FirstIntegralSet,
    h: &LevelParameter,
    opts: &FlowOptions,
) -> Result<Vec<OrbitArc>> {
    let corners = corner_points(h_set, h)?;
    if sys.is_linear_center() && matches!(h_set.corner_rule(), CornerRule::Circle) {
        let r = corners.a[1];
        let rest = &corners.a[2..];
        return Ok(RegionId::ALL
            .iter()
            .map(|&k| OrbitArc::circle_quarter(k, r, rest, opts.samples))
            .collect());
    }
    let mut arcs = Vec::with_capacity(4);
    let mut x = corners.a.clone();
    for k in RegionId::ALL {
        let arc = flow_to_plane(sys, &x, 0.0, k.exit_plane(), opts)?;
        if arc.region_at(arc.duration) != k {
            return Err(Error::OrbitNotClosed { defect: f64::NAN });
        }
        x = arc.end.clone();
        arcs.push(arc);
    }
    let defect = x.distance_inf(&corners.a);
    if defect > 1e-9 * corners.a.max_abs().max(1.0) {
        return Err(Error::OrbitNotClosed { defect });
    }
    Ok(arcs)
}

/// Perturbed return to the section `x1 = 0`.
#[derive(Debug, Clone)]
pub struct PoincareResult {
    pub a: StateVector,
    pub a_eps: StateVector,
    pub b_eps: StateVector,
    pub c_eps: StateVector,
    pub e_eps: StateVector,
    /// `H^1(A_eps) - H^1(A)`.
    pub displacement: Vec<f64>,
    pub arcs: Vec<OrbitArc>,
}

impl PoincareResult {
    /// `|A_eps - A|_inf`.
    pub fn defect(&self) -> f64 {
        self.a_eps.distance_inf(&self.a)
    }
}

fn perturbed_options(
    sys: &PiecewiseSystem,
    h_set: &FirstIntegralSet,
    h: &LevelParameter,
    opts: &FlowOptions,
    a: &StateVector,
) -> Result<FlowOptions> {
    let mut o = *opts;
    if o.max_time.is_none() && !sys.is_linear_center() {
        let arcs = unperturbed_orbit(sys, h_set, h, opts)?;
        let longest = arcs.iter().map(|a| a.duration).fold(0.0, f64::max);
        o.max_time = Some(10.0 * longest);
    }
    if o.bound.is_none() {
        o.bound = Some(10.0 * a.max_abs().max(1.0));
    }
    Ok(o)
}

/// Flows `A(h)` once around through regions 1 to 4 with the perturbed field.
pub fn poincare_displacement(
    sys: &PiecewiseSystem,
    h_set: &FirstIntegralSet,
    h: &LevelParameter,
    eps: f64,
    opts: &FlowOptions,
) -> Result<PoincareResult> {
    let corners = corner_points(h_set, h)?;
    let o = perturbed_options(sys, h_set, h, opts, &corners.a)?;
    displacement_from(sys, h_set, &corners.a, eps, &o)
}

fn displacement_from(
    sys: &PiecewiseSystem,
    h_set: &FirstIntegralSet,
    a: &StateVector,
    eps: f64,
    opts: &FlowOptions,
) -> Result<PoincareResult> {
    let mut x = a.clone();
    let mut arcs = Vec::with_capacity(4);
    for k in RegionId::ALL {
        let arc = flow_to_plane(sys, &x, eps, k.exit_plane(), opts)?;
        x = arc.end.clone();
        arcs.push(arc);
    }
    let h0 = h_set.values(RegionId::R1, a);
    let h1 = h_set.values(RegionId::R1, &x);
    Ok(PoincareResult {
        a: a.clone(),
        a_eps: x,
        b_eps: arcs[0].end.clone(),
        c_eps: arcs[1].end.clone(),
        e_eps: arcs[2].end.clone(),
        displacement: h1.iter().zip(&h0).map(|(p, q)| p - q).collect(),
        arcs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    pub flow: FlowOptions,
    pub max_iter: usize,
    /// Admissible `h1` interval.
    pub h1_window: (f64, f64),
    /// Convergence threshold on the Newton step, relative to `max(1, |h|)`.
    pub step_tol: f64,
    /// Convergence threshold on `|displacement|_inf`.
    pub residual_tol: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            flow: FlowOptions { samples: 9, ..FlowOptions::default() },
            max_iter: 50,
            h1_window: (0.05 * 0.05, 9.0),
            step_tol: 1e-11,
            residual_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShootResult {
    pub h: LevelParameter,
    pub orbit: Vec<OrbitArc>,
    /// `|A_eps - A|_inf` at the returned level.
    pub defect: f64,
    pub iterations: usize,
    /// `|displacement / eps|_inf` at the returned level.
    pub residual: f64,
}

/// Newton iteration on `h -> displacement(h, eps) / eps`.
pub fn shoot_periodic_orbit(
    sys: &PiecewiseSystem,
    h_set: &FirstIntegralSet,
    h_guess: &LevelParameter,
    eps: f64,
    opts: &ShootOptions,
) -> Result<ShootResult> {
    let (lo, hi) = opts.h1_window;
    let inside = |h: &[f64]| h[0] >= lo && h[0] <= hi;
    if !inside(h_guess) {
        return Err(Error::ShootingLeftWindow { h1: h_guess.h1() });
    }
    if eps == 0.0 {
        let orbit = unperturbed_orbit(sys, h_set, h_guess, &opts.flow)?;
        return Ok(ShootResult { h: h_guess.clone(), orbit, defect: 0.0, iterations: 0, residual: 0.0 });
    }
    let corners = corner_points(h_set, h_guess)?;
    let flow = perturbed_options(sys, h_set, h_guess, &opts.flow, &corners.a)?;
    let eval = |h: &[f64]| -> Result<(PoincareResult, DVector<f64>)> {
        let lvl = LevelParameter(h.to_vec());
        let a = corner_points(h_set, &lvl)?.a;
        let res = displacement_from(sys, h_set, &a, eps, &flow)?;
        let f = DVector::from_iterator(res.displacement.len(), res.displacement.iter().map(|d| d / eps));
        Ok((res, f))
    };
    let dim = h_guess.len();
    let mut h = h_guess.0.clone();
    let (mut res, mut f) = eval(&h)?;
    let mut iterations = 0;
    loop {
        let disp = f.amax() * eps;
        if disp <= opts.residual_tol {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::ShootingDiverged { iterations, residual: f.amax() });
        }
        iterations += 1;
        let mut jac = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let d = 1e-5 * h[j].abs().max(1.0);
            let mut hp = h.clone();
            let mut hm = h.clone();
            hp[j] += d;
            hm[j] -= d;
            if !inside(&hm) {
                hm[j] = h[j];
                let (_, fp) = eval(&hp)?;
                jac.set_column(j, &((fp - &f) / d));
                continue;
            }
            let (_, fp) = eval(&hp)?;
            let (_, fm) = eval(&hm)?;
            jac.set_column(j, &((fp - fm) / (2.0 * d)));
        }
        let Some(step) = linalg::solve(&jac, &(-&f)) else {
            return Err(Error::ShootingDiverged { iterations, residual: f.amax() });
        };
        let mut lambda = 1.0;
        let mut moved = false;
        let mut left_window = false;
        for _ in 0..12 {
            let trial: Vec<f64> = h.iter().zip(step.iter()).map(|(a, s)| a + lambda * s).collect();
            if !inside(&trial) {
                left_window = true;
                lambda *= 0.5;
                continue;
            }
            match eval(&trial) {
                Ok((r, ft)) if ft.amax() < f.amax() || lambda < 1e-3 => {
                    h = trial;
                    res = r;
                    f = ft;
                    moved = true;
                    break;
                }
                _ => lambda *= 0.5,
            }
        }
        if !moved {
            if left_window {
                return Err(Error::ShootingLeftWindow { h1: h[0] + step[0] });
            }
            return Err(Error::ShootingDiverged { iterations, residual: f.amax() });
        }
        let hnorm = h.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if lambda * step.amax() <= opts.step_tol * hnorm {
            break;
        }
    }
    Ok(ShootResult {
        h: LevelParameter(h),
        defect: res.defect(),
        orbit: res.arcs,
        iterations,
        residual: f.amax(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{builtin_integrals, builtin_system, CoefficientTable};
    use core::f64::consts::PI;

    fn center(n: usize) -> PiecewiseSystem {
        builtin_system(&CoefficientTable::new(n, 0).unwrap())
    }

    #[test]
    fn quarter_turns_of_the_center() {
        let sys = center(3);
        let o = FlowOptions::default();
        let arc = flow_to_plane(&sys, &StateVector(vec![0.0, 1.0, 0.3]), 0.0, Plane::X2Zero, &o).unwrap();
        assert!((arc.duration - FRAC_PI_2).abs() < 1e-10);
        assert!((arc.end[0] - 1.0).abs() < 1e-10);
        assert_eq!(arc.end[1], 0.0);
        assert_eq!(arc.end[2], 0.3);
        let arc = flow_to_plane(&sys, &StateVector(vec![1.0, 0.0, 0.3]), 0.0, Plane::X1Zero, &o).unwrap();
        assert!((arc.duration - FRAC_PI_2).abs() < 1e-10);
        assert!((arc.end[1] + 1.0).abs() < 1e-10);
        for (_, x) in &arc.samples {
            assert!((x[0] * x[0] + x[1] * x[1] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn flow_passes_through_intermediate_planes() {
        let sys = center(2);
        let o = FlowOptions::default();
        let arc = flow_to_plane(&sys, &StateVector(vec![0.0, 2.0]), 0.0, Plane::X1Zero, &o).unwrap();
        assert!((arc.duration - PI).abs() < 1e-10);
        assert!((arc.end[1] + 2.0).abs() < 1e-9);
        assert_eq!(arc.region_at(arc.duration), RegionId::R2);
    }

    #[test]
    fn numeric_state_at_tracks_circle() {
        let sys = center(2);
        let arc = flow_to_plane(&sys, &StateVector(vec![0.0, 1.0]), 0.0, Plane::X2Zero, &FlowOptions::default()).unwrap();
        for t in [0.0, 0.1, 0.77, 1.2, arc.duration] {
            let x = arc.state_at(t);
            assert!((x[0] - libm::sin(t)).abs() < 1e-10);
            assert!((x[1] - libm::cos(t)).abs() < 1e-10);
        }
    }

    #[test]
    fn circle_corners() {
        let h = builtin_integrals(3);
        let c = corner_points(&h, &LevelParameter::new(0.5, &[0.2])).unwrap();
        assert_eq!(c.a.0, vec![0.0, 1.0, 0.2]);
        assert_eq!(c.b.0, vec![1.0, 0.0, 0.2]);
        assert_eq!(c.c.0, vec![0.0, -1.0, 0.2]);
        assert_eq!(c.e.0, vec![-1.0, 0.0, 0.2]);
        let c = corner_points(&h, &LevelParameter::new(2.0, &[0.2])).unwrap();
        assert_eq!(c.a.0, vec![0.0, 2.0, 0.2]);
        assert!(corner_points(&h, &LevelParameter::new(-1.0, &[0.0])).is_err());
    }

    #[test]
    fn newton_corners_match_circle() {
        let h = builtin_integrals(3);
        let hn = h.clone().with_corner_rule(CornerRule::Newton(None));
        let lvl = LevelParameter::new(0.7, &[-0.4]);
        let exact = corner_points(&h, &lvl).unwrap();
        let newton = corner_points(&hn, &lvl).unwrap();
        for (p, q) in [(&exact.a, &newton.a), (&exact.b, &newton.b), (&exact.c, &newton.c), (&exact.e, &newton.e)] {
            assert!(p.distance_inf(q) < 1e-12, "{p:?} vs {q:?}");
        }
    }

    #[test]
    fn unperturbed_period_is_two_pi() {
        let h = builtin_integrals(3);
        let sys = center(3);
        for h1 in [0.25, 0.5, 1.0, 2.0] {
            let arcs = unperturbed_orbit(&sys, &h, &LevelParameter::new(h1, &[0.1]), &FlowOptions::default()).unwrap();
            let total: f64 = arcs.iter().map(|a| a.duration).sum();
            assert!((total - 2.0 * PI).abs() < 1e-12);
            let defect = arcs[3].end.distance_inf(&arcs[0].start);
            assert!(defect < 1e-12);
        }
        // Numeric route through the Newton corner rule.
        let hn = h.with_corner_rule(CornerRule::Newton(None));
        for h1 in [0.25, 0.5, 1.0, 2.0] {
            let arcs = unperturbed_orbit(&sys, &hn, &LevelParameter::new(h1, &[0.1]), &FlowOptions::default()).unwrap();
            assert!(!arcs[0].is_analytic());
            let total: f64 = arcs.iter().map(|a| a.duration).sum();
            assert!((total - 2.0 * PI).abs() < 1e-9);
            assert!(arcs[3].end.distance_inf(&arcs[0].start) < 1e-9);
        }
    }

    #[test]
    fn zero_eps_displacement_vanishes() {
        let h = builtin_integrals(3);
        let mut t = CoefficientTable::new(3, 1).unwrap();
        t.set_ratio(RegionId::R1, 1, &[0, 0, 0], 1, 1).unwrap();
        let sys = builtin_system(&t);
        let r = poincare_displacement(&sys, &h, &LevelParameter::new(0.5, &[0.0]), 0.0, &FlowOptions::default()).unwrap();
        assert!(r.displacement.iter().all(|d| d.abs() < 1e-9));
    }

    #[test]
    fn displacement_for_constant_g1_is_linear_in_eps() {
        // Only a^1_0 = 1: region 1 becomes a circle about (0, -eps), so the
        // displacement is exactly eps * sqrt(2 h1).
        let h = builtin_integrals(3);
        let mut t = CoefficientTable::new(3, 1).unwrap();
        t.set_ratio(RegionId::R1, 1, &[0, 0, 0], 1, 1).unwrap();
        let sys = builtin_system(&t);
        let lvl = LevelParameter::new(0.5, &[0.0]);
        for eps in [1e-3, 5e-4] {
            let r = poincare_displacement(&sys, &h, &lvl, eps, &FlowOptions::default()).unwrap();
            assert!((r.displacement[0] / eps - 1.0).abs() < 1e-7);
            assert!(r.displacement[1].abs() < 1e-12);
            assert!(r.a_eps[0] == 0.0 && r.b_eps[1] == 0.0);
        }
    }

    #[test]
    fn displacement_converges_at_first_order() {
        let h = builtin_integrals(3);
        let mut t = CoefficientTable::new(3, 2).unwrap();
        t.set_ratio(RegionId::R1, 2, &[0, 2, 0], 1, 1).unwrap();
        t.set_ratio(RegionId::R2, 1, &[1, 0, 0], -1, 2).unwrap();
        t.set_ratio(RegionId::R3, 3, &[0, 1, 0], 1, 1).unwrap();
        let sys = builtin_system(&t);
        let lvl = LevelParameter::new(0.5, &[0.2]);
        let q: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
            .iter()
            .map(|&eps| {
                poincare_displacement(&sys, &h, &lvl, eps, &FlowOptions::default()).unwrap().displacement[0] / eps
            })
            .collect();
        // Successive differences of an O(eps) error halve with eps.
        let ratio = (q[0] - q[1]) / (q[1] - q[2]);
        assert!((1.9..=2.1).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn shooting_without_melnikov_zero_fails() {
        let h = builtin_integrals(3);
        let mut t = CoefficientTable::new(3, 1).unwrap();
        t.set_ratio(RegionId::R1, 1, &[0, 0, 0], 1, 1).unwrap();
        t.set_ratio(RegionId::R1, 3, &[0, 0, 1], -1, 1).unwrap();
        let sys = builtin_system(&t);
        let opts = ShootOptions::default();
        let r = shoot_periodic_orbit(&sys, &h, &LevelParameter::new(0.5, &[0.0]), 1e-3, &opts);
        assert!(matches!(
            r,
            Err(Error::ShootingDiverged { .. }) | Err(Error::ShootingLeftWindow { .. })
        ), "{r:?}");
    }

    #[test]
    fn zero_eps_shooting_returns_guess() {
        let h = builtin_integrals(3);
        let sys = center(3);
        let g = LevelParameter::new(0.8, &[0.5]);
        let r = shoot_periodic_orbit(&sys, &h, &g, 0.0, &ShootOptions::default()).unwrap();
        assert_eq!(r.h, g);
        assert_eq!(r.orbit.len(), 4);
    }

    #[test]
    fn escape_is_reported() {
        // x1' = x2 + 5 x1^2 blows up before reaching x2 = 0 from this start.
        let mut t = CoefficientTable::new(2, 2).unwrap();
        t.set_ratio(RegionId::R1, 1, &[2, 0], 5, 1).unwrap();
        t.set_ratio(RegionId::R1, 2, &[0, 2], 5, 1).unwrap();
        let sys = builtin_system(&t);
        let r = flow_to_plane(&sys, &StateVector(vec![0.0, 1.0]), 1.0, Plane::X2Zero, &FlowOptions::default());
        assert!(matches!(r, Err(Error::OrbitEscaped { .. })), "{r:?}");
    }
}
