//! Acceptance suite: one line per criterion, then a non-zero exit if any
//! criterion fails. Run with `cargo test -p melnikov --test acceptance`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use melnikov_core::family::{builtin_integrals, builtin_system, CoefficientTable, CompatibleQuadratic};
use melnikov_core::flow::{corner_points, poincare_displacement, shoot_periodic_orbit, FlowOptions, ShootOptions};
use melnikov_core::melnikov::{
    chained_product, coefficient_matrices, melnikov_component_direct, melnikov_component_via_antiderivative,
    melnikov_general, melnikov_hamiltonian, MelnikovOptions,
};
use melnikov_core::planar::{closing_beta4, quadratic_hamiltonian, PlanarHamiltonian, PlanarIntegrand, PlanarOptions};
use melnikov_core::poly::Polynomial;
use melnikov_core::quadrature::{Integrator, QuadOptions};
use melnikov_core::ring::{ratio, Coeff, RingPoly};
use melnikov_core::symbolic::{assemble_vector, base_integrals, fit_table, target_vector, Reducer};
use melnikov_core::zeros::{find_zeros, m1_closed_form, theorem_bound, Window, ZeroOptions};
use melnikov_core::{LevelParameter, RegionId};
use nalgebra::DMatrix;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BASE_ABS_TOL: f64 = 1e-12;
const BASE_RUNTIME: Duration = Duration::from_secs(1);
const REDUCE_REL_TOL: f64 = 1e-10;
const REDUCE_MAX_ORDER: u32 = 10;
const REDUCE_RUNTIME: Duration = Duration::from_secs(5);
const TRIANGLE_REL_TOL: f64 = 1e-8;
const TRIANGLE_TABLES: usize = 20;
const TRIANGLE_POINTS: usize = 5;
const TRIANGLE_RUNTIME: Duration = Duration::from_secs(60);
const IDENTITY_TOL: f64 = 1e-12;
const IDENTITY_COMPATIBLE_SETS: usize = 10;
const IDENTITY_RUNTIME: Duration = Duration::from_secs(5);
const LIMIT_EPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];
const LIMIT_RATIO: (f64, f64) = (1.5, 2.5);
const LIMIT_TABLES: usize = 5;
const LIMIT_RUNTIME: Duration = Duration::from_secs(120);
const M1_ROOT_TOL: f64 = 1e-10;
const M1_MIN_DET: f64 = 1e-3;
const M1_SHOOT_EPS: f64 = 1e-3;
const M1_MAX_DEFECT: f64 = 1e-6;
const M1_RUNTIME: Duration = Duration::from_secs(30);
const BOUND_ROOT_TOL: f64 = 1e-9;
const BOUND_RANDOM_TABLES: usize = 50;
const BOUND_RUNTIME: Duration = Duration::from_secs(120);
const LINE_TOL: f64 = 1e-6;
const LINE_CASES: usize = 10;
const LINE_RUNTIME: Duration = Duration::from_secs(30);

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn random_table(rng: &mut ChaCha8Rng, n: usize, m: u32, density: f64) -> CoefficientTable {
    let mut t = CoefficientTable::new(n, m).unwrap();
    for s in CoefficientTable::all_slots(n, m) {
        if rng.gen_bool(density) {
            let num: i64 = rng.gen_range(-5..=5);
            let den: i64 = rng.gen_range(1..=4);
            t.set(s, BigRational::new(num.into(), den.into())).unwrap();
        }
    }
    t
}

/// `∫ x1^k1 x2^k2 dx2` over quarter `k` of the circle `x1² + x2² = 2 h1`,
/// parametrized by the clockwise angle from the positive `x2` axis.
fn circle_line_integral(k: RegionId, k1: i32, k2: i32, h1: f64) -> f64 {
    let r = (2.0 * h1).sqrt();
    let th0 = (k.index() - 1) as f64 * FRAC_PI_2;
    let q = Integrator::new(QuadOptions { rtol: 1e-14, atol: 1e-15, ..QuadOptions::default() });
    q.integrate(
        |t| {
            let (s, c) = (th0 + t).sin_cos();
            let (x1, x2) = (r * s, r * c);
            x1.powi(k1) * x2.powi(k2) * -x1
        },
        0.0,
        FRAC_PI_2,
    )
    .unwrap()
}

fn base_integral_table() -> Outcome {
    let mut worst = 0.0f64;
    for k in RegionId::ALL {
        for h1 in [0.25, 0.5, 1.0, 2.0] {
            let closed = base_integrals(k, h1);
            for (i, (k1, k2)) in [(0, 0), (1, 0), (0, 1), (1, 1)].into_iter().enumerate() {
                worst = worst.max((closed[i] - circle_line_integral(k, k1, k2, h1)).abs());
            }
        }
    }
    Outcome { pass: worst < BASE_ABS_TOL, detail: format!("max abs error {worst:.2e} (tol {BASE_ABS_TOL:.0e})") }
}

fn recurrence() -> Outcome {
    let mut reducer = Reducer::new();
    let mut worst = 0.0f64;
    let mut count = 0;
    for k in RegionId::ALL {
        for k1 in 0..=REDUCE_MAX_ORDER {
            for k2 in 0..=REDUCE_MAX_ORDER - k1 {
                let e = reducer.reduce(k, k1, k2);
                for h1 in [0.25, 1.0] {
                    let q = circle_line_integral(k, k1 as i32, k2 as i32, h1);
                    let err = (e.eval(h1) - q).abs() / q.abs().max(f64::MIN_POSITIVE);
                    worst = worst.max(if q == 0.0 { e.eval(h1).abs() } else { err });
                    count += 1;
                }
            }
        }
    }
    Outcome { pass: worst < REDUCE_REL_TOL, detail: format!("{count} cases, max rel error {worst:.2e} (tol {REDUCE_REL_TOL:.0e})") }
}

fn oracle_triangle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let opts = MelnikovOptions::default();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut evals = 0;
    for n in [3usize, 4] {
        for m in 1u32..=4 {
            let h = builtin_integrals(n);
            for _ in 0..TRIANGLE_TABLES {
                let t = random_table(&mut rng, n, m, 0.3);
                let v = assemble_vector(&t);
                let sys = builtin_system(&t);
                for _ in 0..TRIANGLE_POINTS {
                    let h1 = rng.gen_range(0.2..2.0);
                    let hhat: Vec<f64> = (2..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let lvl = LevelParameter::new(h1, &hhat);
                    let s = v.eval_h(&lvl);
                    let routes = melnikov_general(&sys, &h, &lvl, &opts)
                        .map(|r| r.value)
                        .and_then(|g| melnikov_hamiltonian(&sys, &h, &lvl, &opts).map(|x| (g, x)));
                    match routes {
                        Ok((g, x)) => {
                            for i in 0..n - 1 {
                                worst = worst.max(rel_err(g[i], s[i])).max(rel_err(x[i], s[i])).max(rel_err(g[i], x[i]));
                            }
                        }
                        Err(e) => failures.push(format!("n={n} m={m} h={lvl:?}: {e}")),
                    }
                    evals += 1;
                }
            }
        }
    }
    Outcome {
        pass: failures.is_empty() && worst < TRIANGLE_REL_TOL,
        detail: format!(
            "{evals} evaluations over n in {{3,4}}, m in 1..=4, max rel error {worst:.2e} (tol {TRIANGLE_REL_TOL:.0e}){}",
            if failures.is_empty() { String::new() } else { format!(", failures: {failures:?}") }
        ),
    }
}

fn random_compatible(rng: &mut ChaCha8Rng, n: usize) -> CompatibleQuadratic {
    let mut pos = || rng.gen_range(0.5..2.0);
    let p = [pos(), pos(), pos(), pos()];
    let q = [pos(), pos(), pos()];
    let c = std::array::from_fn(|_| (2..n).map(|_| rng.gen_range(-0.5..0.5)).collect());
    let d = std::array::from_fn(|_| (2..n).map(|_| rng.gen_range(-0.2..0.2)).collect());
    CompatibleQuadratic { n, p, q, c, d }
}

fn identity_weights() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_builtin = 0.0f64;
    let mut worst_compatible = 0.0f64;
    for n in [3usize, 4] {
        let h = builtin_integrals(n);
        for h1 in [0.25, 1.0, 2.0] {
            let hhat: Vec<f64> = (2..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c = corner_points(&h, &LevelParameter::new(h1, &hhat)).unwrap();
            let mut warnings = Vec::new();
            let id = DMatrix::identity(n - 1, n - 1);
            for p in coefficient_matrices(&h, &c, &mut warnings).unwrap() {
                worst_builtin = worst_builtin.max((p - &id).amax());
            }
            worst_builtin = worst_builtin.max((chained_product(&h, &c).unwrap() - id).amax());
        }
    }
    for i in 0..IDENTITY_COMPATIBLE_SETS {
        let n = 3 + i % 2;
        let cq = random_compatible(&mut rng, n);
        let h = cq.integrals();
        for h1 in [0.25, 1.0] {
            let hhat: Vec<f64> = (2..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c = corner_points(&h, &LevelParameter::new(h1, &hhat)).unwrap();
            let p = chained_product(&h, &c).unwrap();
            worst_compatible = worst_compatible.max((p - DMatrix::identity(n - 1, n - 1)).amax());
        }
    }
    Outcome {
        pass: worst_builtin < IDENTITY_TOL && worst_compatible < IDENTITY_TOL,
        detail: format!(
            "built-in max |P - I| {worst_builtin:.2e}, {IDENTITY_COMPATIBLE_SETS} compatible sets max |P - I| {worst_compatible:.2e} (tol {IDENTITY_TOL:.0e})"
        ),
    }
}

fn first_order_limit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = builtin_integrals(3);
    let mut ratios = Vec::new();
    let mut failures = Vec::new();
    for _ in 0..LIMIT_TABLES {
        let t = random_table(&mut rng, 3, 2, 0.5);
        let v = assemble_vector(&t);
        let sys = builtin_system(&t);
        for h1 in [0.5, 1.0] {
            let lvl = LevelParameter::new(h1, &[rng.gen_range(-1.0..1.0)]);
            let m = v.eval_h(&lvl);
            let mut errs = Vec::new();
            for eps in LIMIT_EPS {
                match poincare_displacement(&sys, &h, &lvl, eps, &FlowOptions::default()) {
                    Ok(d) => errs.push(d.displacement.iter().zip(&m).map(|(x, y)| (x / eps - y).abs()).fold(0.0, f64::max)),
                    Err(e) => failures.push(format!("h={lvl:?} eps={eps}: {e}")),
                }
            }
            ratios.extend(errs.windows(2).map(|w| w[0] / w[1]));
        }
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    Outcome {
        pass: failures.is_empty() && lo >= LIMIT_RATIO.0 && hi <= LIMIT_RATIO.1,
        detail: format!(
            "{} halvings, error ratios in [{lo:.3}, {hi:.3}] (required [{}, {}]){}",
            ratios.len(),
            LIMIT_RATIO.0,
            LIMIT_RATIO.1,
            if failures.is_empty() { String::new() } else { format!(", failures: {failures:?}") }
        ),
    }
}

/// Instances with only `a^1_0`, `a^2_2`, `a^k_0` and `a^k_k` (k >= 3) set
/// in the first region.
fn m1_instances(rng: &mut ChaCha8Rng) -> Vec<CoefficientTable> {
    let mut out = Vec::new();
    let mut t = CoefficientTable::new(3, 1).unwrap();
    t.set_ratio(RegionId::R1, 1, &[0, 0, 0], 1, 1).unwrap();
    t.set_ratio(RegionId::R1, 2, &[0, 1, 0], -2, 1).unwrap();
    t.set_ratio(RegionId::R1, 3, &[0, 0, 0], 3, 1).unwrap();
    t.set_ratio(RegionId::R1, 3, &[0, 0, 1], -1, 1).unwrap();
    out.push(t);
    for n in [3usize, 3, 4, 4] {
        let mut t = CoefficientTable::new(n, 1).unwrap();
        let unit = |i: Option<usize>| {
            let mut e = vec![0u32; n];
            if let Some(i) = i {
                e[i - 1] = 1;
            }
            e
        };
        t.set_ratio(RegionId::R1, 1, &unit(None), rng.gen_range(1..=4), rng.gen_range(1..=3)).unwrap();
        t.set_ratio(RegionId::R1, 2, &unit(Some(2)), -rng.gen_range(1..=4), rng.gen_range(1..=3)).unwrap();
        for k in 3..=n {
            let akk = rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 };
            t.set_ratio(RegionId::R1, k, &unit(Some(k)), akk, 1).unwrap();
            t.set_ratio(RegionId::R1, k, &unit(None), rng.gen_range(-4..=4), 2).unwrap();
        }
        out.push(t);
    }
    out
}

fn m1_theorem() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut lines = Vec::new();
    let mut pass = true;
    for t in m1_instances(&mut rng) {
        let n = t.n();
        let c = m1_closed_form(&t).unwrap();
        let window = Window { h2: (0.05, 3.0), hhat: vec![(-5.0, 5.0); n - 2] };
        let report = find_zeros(&assemble_vector(&t), &window, &ZeroOptions::default()).unwrap();
        let root_err = match report.roots.as_slice() {
            [r] => r.y.iter().zip(&c.root).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            _ => f64::INFINITY,
        };
        let guess = LevelParameter::from_h2(c.root[0], &c.root[1..]);
        let defect = shoot_periodic_orbit(&builtin_system(&t), &builtin_integrals(n), &guess, M1_SHOOT_EPS, &ShootOptions::default())
            .map(|s| s.defect)
            .unwrap_or(f64::INFINITY);
        let ok = report.roots.len() == 1 && root_err < M1_ROOT_TOL && c.jacobian_det.abs() > M1_MIN_DET && defect < M1_MAX_DEFECT;
        pass &= ok;
        lines.push(format!(
            "n={n}: {} zero(s), root err {root_err:.1e}, |det| {:.3}, defect {defect:.1e}",
            report.roots.len(),
            c.jacobian_det.abs()
        ));
    }
    let canonical = m1_closed_form(&m1_instances(&mut ChaCha8Rng::seed_from_u64(0))[0]).unwrap();
    let expected = [SQRT_2 / PI, 3.0];
    let canonical_ok = canonical.root.iter().zip(expected).all(|(a, b)| (a - b).abs() < M1_ROOT_TOL);
    Outcome {
        pass: pass && canonical_ok,
        detail: format!(
            "canonical root ({:.12}, {:.12}); {} (tols: root {M1_ROOT_TOL:.0e}, |det| > {M1_MIN_DET:.0e}, defect {M1_MAX_DEFECT:.0e})",
            canonical.root[0],
            canonical.root[1],
            lines.join("; ")
        ),
    }
}

/// `M1/h2 = √2 h2² - 3 h2 + √2` and `M2 = (π/2)(h3² + h3/5 - 2/25)`, with
/// roots `h2 ∈ {√2, 1/√2}` and `h3 ∈ {1/5, -2/5}`.
fn four_root_target() -> (melnikov_core::MelnikovPolynomialVector, Vec<[f64; 2]>) {
    let mut m1 = RingPoly::zero(2);
    m1.add_term(vec![2, 0], &Coeff::sqrt2(ratio(1, 1)));
    m1.add_term(vec![1, 0], &Coeff::from_ratio(-3, 1));
    m1.add_term(vec![0, 0], &Coeff::sqrt2(ratio(1, 1)));
    let mut m2 = RingPoly::zero(2);
    m2.add_term(vec![0, 2], &Coeff::pi(ratio(1, 2)));
    m2.add_term(vec![0, 1], &Coeff::pi(ratio(1, 10)));
    m2.add_term(vec![0, 0], &Coeff::pi(ratio(-1, 25)));
    let v = target_vector(3, 2, vec![m1, m2]).unwrap();
    let mut roots = Vec::new();
    for h2 in [1.0 / SQRT_2, SQRT_2] {
        for h3 in [-0.4, 0.2] {
            roots.push([h2, h3]);
        }
    }
    (v, roots)
}

fn bound_theorem() -> Outcome {
    let (target, expected) = four_root_target();
    let table = fit_table(3, 2, &CoefficientTable::all_slots(3, 2), &target).unwrap();
    let v = assemble_vector(&table);
    let window = Window::default_for(2);
    let report = find_zeros(&v, &window, &ZeroOptions::default()).unwrap();
    let simple = report.simple_roots().count();
    let matched = expected
        .iter()
        .all(|e| report.simple_roots().any(|r| (r.y[0] - e[0]).abs() < BOUND_ROOT_TOL && (r.y[1] - e[1]).abs() < BOUND_ROOT_TOL));
    let constructed_ok = v == target && simple == 4 && report.roots.len() == 4 && matched && report.bound == 4;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = (0usize, 0u64);
    let mut exceeded = 0;
    for _ in 0..BOUND_RANDOM_TABLES {
        let m = rng.gen_range(1..=3);
        let v = assemble_vector(&random_table(&mut rng, 3, m, 0.4));
        let r = find_zeros(&v, &window, &ZeroOptions { starts_per_dim: 12, ..ZeroOptions::default() }).unwrap();
        let count = r.simple_roots().count();
        if count as u64 > theorem_bound(3, m) {
            exceeded += 1;
        }
        if count > worst.0 {
            worst = (count, theorem_bound(3, m));
        }
    }
    Outcome {
        pass: constructed_ok && exceeded == 0,
        detail: format!(
            "constructed n=3 m=2 instance: {simple} simple zeros of bound {}, all known roots matched: {matched}; {BOUND_RANDOM_TABLES} random tables: {exceeded} exceed the bound (largest count {} against bound {})",
            report.bound, worst.0, worst.1
        ),
    }
}

fn random_planar_poly(rng: &mut ChaCha8Rng) -> Polynomial {
    let mut terms = Vec::new();
    for i in 0..=3u32 {
        for j in 0..=3 - i {
            if rng.gen_bool(0.5) {
                terms.push((rng.gen_range(-2.0..2.0), vec![i, j]));
            }
        }
    }
    Polynomial::from_terms(2, terms)
}

fn central_difference(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    let d = 1e-3;
    let c1 = (f(h + d) - f(h - d)) / (2.0 * d);
    let c2 = (f(h + d / 2.0) - f(h - d / 2.0)) / d;
    (4.0 * c2 - c1) / 3.0
}

fn line_integral_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = MelnikovOptions::default();
    let mut worst_route = 0.0f64;
    let mut worst_derivative = 0.0f64;
    let mut failures = Vec::new();
    for _ in 0..LINE_CASES {
        let t = random_table(&mut rng, 3, 2, 0.5);
        let sys = builtin_system(&t);
        let h = builtin_integrals(3);
        let lvl = LevelParameter::new(rng.gen_range(0.3..1.5), &[rng.gen_range(-1.0..1.0)]);
        for k in RegionId::ALL {
            let g = t.perturbation(k);
            match (
                melnikov_component_via_antiderivative(&sys, &h, &g, 2, k, &lvl, &opts),
                melnikov_component_direct(&sys, &h, &g, 2, k, &lvl, &opts),
            ) {
                (Ok(a), Ok(d)) => worst_route = worst_route.max((a - d).abs()),
                (a, d) => failures.push(format!("route at {lvl:?}: {a:?} {d:?}")),
            }
        }

        let alpha: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.5..2.0));
        let mut beta: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.5..2.0));
        beta[3] = closing_beta4(alpha, beta);
        let gamma: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..0.2));
        let planar = PlanarHamiltonian::new(quadratic_hamiltonian(alpha, beta, gamma)).unwrap();
        let w = PlanarIntegrand {
            p: std::array::from_fn(|_| random_planar_poly(&mut rng)),
            q: std::array::from_fn(|_| random_planar_poly(&mut rng)),
        };
        let po = PlanarOptions::default();
        let level = rng.gen_range(0.2..1.0);
        for k in RegionId::ALL {
            let d = planar.line_integral_h_derivative(&w, k, level, &po);
            let fd = central_difference(|x| planar.line_integral(&w, k, x, &po).unwrap_or(f64::NAN), level);
            match d {
                Ok(d) if fd.is_finite() => worst_derivative = worst_derivative.max((d - fd).abs()),
                other => failures.push(format!("derivative at level {level}: {other:?} vs {fd}")),
            }
        }
    }
    Outcome {
        pass: failures.is_empty() && worst_route < LINE_TOL && worst_derivative < LINE_TOL,
        detail: format!(
            "{LINE_CASES} cases: antiderivative vs direct max {worst_route:.2e}, derivative formula vs central difference max {worst_derivative:.2e} (tol {LINE_TOL:.0e}){}",
            if failures.is_empty() { String::new() } else { format!(", failures: {failures:?}") }
        ),
    }
}

const DETERMINISM_CONFIG: &str = r#"{
  "mode": "builtin",
  "n": 3,
  "m": 2,
  "coefficients": {
    "a": [[1, 0, 0, 0, "1/2"], [2, 0, 1, 0, -1], [3, 0, 0, 1, 2]],
    "b": [[1, 1, 0, 0, "-3/2"], [3, 0, 0, 2, "1/3"]],
    "c": [[2, 2, 0, 0, "1/4"], [3, 0, 0, 0, -1]],
    "d": [[1, 0, 0, 2, 1]]
  },
  "window": { "starts_per_dim": 10 },
  "verify": { "samples": 2, "levels": [[0.5, 0.25]] }
}"#;

fn run_all(binary: &str, config: &Path, out: &Path) -> Result<(), String> {
    let status = Command::new(binary)
        .args(["all", "--quiet", "--seed", "17", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("MELNIKOV_THREADS", "4")
        .status()
        .map_err(|e| e.to_string())?;
    // Numerical failures (exit 3) still write every file.
    match status.code() {
        Some(0 | 3) => Ok(()),
        other => Err(format!("exit status {other:?}")),
    }
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let binary = env!("CARGO_BIN_EXE_melnikov");
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, DETERMINISM_CONFIG).unwrap();
    let (a, b) = (dir.path().join("run_a"), dir.path().join("run_b"));
    if let Err(e) = run_all(binary, &config, &a).and_then(|_| run_all(binary, &config, &b)) {
        return Outcome { pass: false, detail: format!("binary failed: {e}") };
    }
    let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    Outcome {
        pass: !fa.is_empty() && fa == fb,
        detail: format!("two runs of `all` with seed 17 wrote identical bytes: {} ({})", fa == fb, names.join(", ")),
    }
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("base integrals vs quadrature", Some(BASE_RUNTIME), base_integral_table),
        ("recurrence vs quadrature", Some(REDUCE_RUNTIME), recurrence),
        ("symbolic, hamiltonian and general routes agree", Some(TRIANGLE_RUNTIME), oracle_triangle),
        ("coefficient matrices reduce to identity", Some(IDENTITY_RUNTIME), identity_weights),
        ("first-order limit of the displacement", Some(LIMIT_RUNTIME), first_order_limit),
        ("m = 1 has exactly one zero and it persists", Some(M1_RUNTIME), m1_theorem),
        ("zero count bound m^(n-1)", Some(BOUND_RUNTIME), bound_theorem),
        ("antiderivative route and line-integral derivative", Some(LINE_RUNTIME), line_integral_identities),
        ("deterministic output", None, determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = outcome.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = limit.map(|l| format!(" of {:.0} s", l.as_secs_f64())).unwrap_or_default();
        println!(
            "criterion {}: {} {name}: {}; {:.2} s{budget}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
