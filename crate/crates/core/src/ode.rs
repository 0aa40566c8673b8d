//! Dormand–Prince 5(4) integrator with continuous output for autonomous
//! systems `y' = f(y)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    /// Upper bound on attempted steps per call to [`Dopri5::step`].
    pub max_rejections: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-13, h_max: 0.1, max_rejections: 100 }
    }
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    rcont: Vec<f64>,
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Interpolated state at `t` (meant for `t0 <= t <= t1`).
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let n = self.y0.len();
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        for i in 0..n {
            out[i] = r[i]
                + th * (r[n + i] + th1 * (r[2 * n + i] + th * (r[3 * n + i] + th1 * r[4 * n + i])));
        }
    }

    /// Single interpolated component.
    pub fn eval_component(&self, t: f64, i: usize) -> f64 {
        let n = self.y0.len();
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        r[i] + th * (r[n + i] + th1 * (r[2 * n + i] + th * (r[3 * n + i] + th1 * r[4 * n + i])))
    }
}

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self { k: core::array::from_fn(|_| vec![0.0; n]), tmp: vec![0.0; n] }
    }
}

/// Runs the seven stages from `y` with `k[0] = f(y)` already filled.
/// Writes the fifth-order solution into `y1` and the error estimate into `err`.
fn attempt<F: FnMut(&[f64], &mut [f64])>(
    f: &mut F,
    y: &[f64],
    h: f64,
    s: &mut Stages,
    y1: &mut [f64],
    err: &mut [f64],
) {
    let n = y.len();
    let Stages { k, tmp } = s;
    for i in 0..n {
        tmp[i] = y[i] + h * A21 * k[0][i];
    }
    f(tmp, &mut k[1]);
    for i in 0..n {
        tmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
    }
    f(tmp, &mut k[2]);
    for i in 0..n {
        tmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
    }
    f(tmp, &mut k[3]);
    for i in 0..n {
        tmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
    }
    f(tmp, &mut k[4]);
    for i in 0..n {
        tmp[i] = y[i]
            + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
    }
    f(tmp, &mut k[5]);
    for i in 0..n {
        y1[i] = y[i]
            + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
    }
    f(y1, &mut k[6]);
    for i in 0..n {
        err[i] = h
            * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                + E7 * k[6][i]);
    }
}

/// One explicit step of size `h` from `y` without error control.
pub fn fixed_step<F: FnMut(&[f64], &mut [f64])>(f: &mut F, y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut s = Stages::new(n);
    f(y, &mut s.k[0]);
    let mut y1 = vec![0.0; n];
    let mut err = vec![0.0; n];
    attempt(f, y, h, &mut s, &mut y1, &mut err);
    y1
}

/// Adaptive integrator state.
pub struct Dopri5<F> {
    f: F,
    opts: OdeOptions,
    t: f64,
    y: Vec<f64>,
    h: f64,
    stages: Stages,
    y1: Vec<f64>,
    err: Vec<f64>,
}

impl<F: FnMut(&[f64], &mut [f64])> Dopri5<F> {
    pub fn new(mut f: F, t0: f64, y0: Vec<f64>, opts: OdeOptions) -> Self {
        let n = y0.len();
        let mut stages = Stages::new(n);
        f(&y0, &mut stages.k[0]);
        let h = initial_step(&y0, &stages.k[0], &opts);
        Self { f, opts, t: t0, y: y0, h, stages, y1: vec![0.0; n], err: vec![0.0; n] }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Current derivative `f(y)`.
    pub fn dy(&self) -> &[f64] {
        &self.stages.k[0]
    }

    /// Takes one accepted step and returns its dense output.
    pub fn step(&mut self) -> Result<DenseStep> {
        let n = self.y.len();
        for _ in 0..self.opts.max_rejections {
            let h = self.h.min(self.opts.h_max);
            if h <= 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t: self.t });
            }
            attempt(&mut self.f, &self.y, h, &mut self.stages, &mut self.y1, &mut self.err);
            let mut acc = 0.0;
            for i in 0..n {
                let sc = self.opts.atol + self.opts.rtol * self.y[i].abs().max(self.y1[i].abs());
                let r = self.err[i] / sc;
                acc += r * r;
            }
            let e = libm::sqrt(acc / n as f64);
            if !e.is_finite() {
                self.h = h * 0.2;
                continue;
            }
            let fac = if e == 0.0 { 10.0 } else { (0.9 * libm::pow(e, -0.2)).clamp(0.2, 10.0) };
            if e <= 1.0 {
                let k = &self.stages.k;
                let mut rcont = vec![0.0; 5 * n];
                for i in 0..n {
                    let ydiff = self.y1[i] - self.y[i];
                    let bspl = h * k[0][i] - ydiff;
                    rcont[i] = self.y[i];
                    rcont[n + i] = ydiff;
                    rcont[2 * n + i] = bspl;
                    rcont[3 * n + i] = ydiff - h * k[6][i] - bspl;
                    rcont[4 * n + i] = h
                        * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i]
                            + D6 * k[5][i] + D7 * k[6][i]);
                }
                let out = DenseStep {
                    t0: self.t,
                    h,
                    y0: self.y.clone(),
                    y1: self.y1.clone(),
                    rcont,
                };
                self.t += h;
                self.y.copy_from_slice(&self.y1);
                let (head, tail) = self.stages.k.split_at_mut(6);
                head[0].copy_from_slice(&tail[0]);
                self.h = h * fac;
                return Ok(out);
            }
            self.h = h * fac.min(1.0);
        }
        Err(Error::StepSizeUnderflow { t: self.t })
    }
}

fn initial_step(y: &[f64], dy: &[f64], opts: &OdeOptions) -> f64 {
    let n = y.len() as f64;
    let (mut d0, mut d1) = (0.0, 0.0);
    for (yi, fi) in y.iter().zip(dy) {
        let sc = opts.atol + opts.rtol * yi.abs();
        d0 += (yi / sc) * (yi / sc);
        d1 += (fi / sc) * (fi / sc);
    }
    let (d0, d1) = (libm::sqrt(d0 / n), libm::sqrt(d1 / n));
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(opts.h_max).max(1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(y: &[f64], out: &mut [f64]) {
        out[0] = y[1];
        out[1] = -y[0];
    }

    #[test]
    fn quarter_turn_of_rotation() {
        let mut ode = Dopri5::new(rotation, 0.0, vec![0.0, 1.0], OdeOptions::default());
        let target = core::f64::consts::FRAC_PI_2;
        let mut last = None;
        while ode.t() < target {
            last = Some(ode.step().unwrap());
        }
        let step = last.unwrap();
        let mut y = [0.0; 2];
        step.eval(target, &mut y);
        assert!((y[0] - 1.0).abs() < 1e-10, "{y:?}");
        assert!(y[1].abs() < 1e-10);
    }

    #[test]
    fn dense_output_matches_fixed_step() {
        let mut ode = Dopri5::new(rotation, 0.0, vec![0.3, 0.8], OdeOptions::default());
        let s = ode.step().unwrap();
        let s = if s.h < 1e-3 { ode.step().unwrap() } else { s };
        let t = s.t0 + 0.37 * s.h;
        let mut dense = [0.0; 2];
        s.eval(t, &mut dense);
        let exact = fixed_step(&mut rotation, &s.y0, t - s.t0);
        assert!((dense[0] - exact[0]).abs() < 1e-11);
        assert!((dense[1] - exact[1]).abs() < 1e-11);
        let mut end = [0.0; 2];
        s.eval(s.t1(), &mut end);
        assert!((end[0] - s.y1[0]).abs() < 1e-15);
    }

    #[test]
    fn exponential_decay() {
        let mut ode = Dopri5::new(|y: &[f64], o: &mut [f64]| o[0] = -y[0], 0.0, vec![1.0], OdeOptions::default());
        while ode.t() < 2.0 {
            ode.step().unwrap();
        }
        let exact = libm::exp(-ode.t());
        assert!((ode.y()[0] - exact).abs() < 1e-11);
    }
}
