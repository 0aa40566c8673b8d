//! The `build`, `zeros`, `verify` and `all` commands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use melnikov_core::family::{builtin_integrals, builtin_system};
use melnikov_core::flow::{corner_points, poincare_displacement, shoot_periodic_orbit, FlowOptions, ShootOptions};
use melnikov_core::melnikov::{melnikov_general, MelnikovOptions};
use melnikov_core::model::{check_gradient_independence_in, check_transversality, CheckStatus, Plane};
use melnikov_core::quadrature::QuadOptions;
use melnikov_core::symbolic::assemble_vector;
use melnikov_core::zeros::{
    collect_roots, m1_closed_form, newton_from, starts, theorem_bound, Root, ZeroOptions, ZeroTarget,
};
use melnikov_core::{FirstIntegralSet, LevelParameter, MelnikovPolynomialVector, PiecewiseSystem, RegionId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{AnalysisConfig, ConfigError, Model};
use crate::output::{fmt_f64, write_atomic, Csv};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("assumption check failed: {0}")]
    Assumption(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Assumption(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<melnikov_core::Error> for CliError {
    fn from(e: melnikov_core::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Build,
    Zeros,
    Verify,
    All,
}

/// `M(h)` evaluator and the system behind it.
struct Analysis {
    sys: PiecewiseSystem,
    h_set: FirstIntegralSet,
    symbolic: Option<MelnikovPolynomialVector>,
}

impl Analysis {
    fn new(cfg: &AnalysisConfig) -> Self {
        match &cfg.model {
            Model::Builtin(t) => Self {
                sys: builtin_system(t),
                h_set: builtin_integrals(cfg.n),
                symbolic: Some(assemble_vector(t)),
            },
            Model::General(g) => Self { sys: g.system(), h_set: g.integral_set(), symbolic: None },
        }
    }

    fn melnikov(&self, h: &LevelParameter) -> melnikov_core::Result<Vec<f64>> {
        match &self.symbolic {
            Some(v) => Ok(v.eval_h(h)),
            None => Ok(melnikov_general(&self.sys, &self.h_set, h, &MelnikovOptions::default())?.value),
        }
    }
}

/// Reduced Melnikov vector of a general system by quadrature.
struct QuadratureTarget<'a> {
    analysis: &'a Analysis,
    opts: MelnikovOptions,
}

impl ZeroTarget for QuadratureTarget<'_> {
    fn nvars(&self) -> usize {
        self.analysis.sys.dim() - 1
    }

    fn eval_reduced(&self, y: &[f64]) -> melnikov_core::Result<Vec<f64>> {
        let lvl = LevelParameter::from_h2(y[0], &y[1..]);
        let mut v = melnikov_general(&self.analysis.sys, &self.analysis.h_set, &lvl, &self.opts)?.value;
        v[0] /= y[0];
        Ok(v)
    }
}

/// State shared by the commands of one run.
pub struct Session {
    cfg: AnalysisConfig,
    out: PathBuf,
    seed: u64,
    quiet: bool,
    analysis: Analysis,
    report: Vec<String>,
    files: Vec<String>,
    numerical_failures: Vec<String>,
    assumption_failures: Vec<String>,
    roots: Option<Vec<Root>>,
}

impl Session {
    pub fn new(cfg: AnalysisConfig, out: PathBuf, seed: u64, quiet: bool) -> Self {
        let analysis = Analysis::new(&cfg);
        Self {
            cfg,
            out,
            seed,
            quiet,
            analysis,
            report: Vec::new(),
            files: Vec::new(),
            numerical_failures: Vec::new(),
            assumption_failures: Vec::new(),
            roots: None,
        }
    }

    fn say(&mut self, line: String) {
        if !self.quiet {
            println!("{line}");
        }
        self.report.push(line);
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        write_atomic(&self.out.join(name), contents)?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    /// Runs `cmd`, writes `report.txt` and maps recorded failures to an
    /// error.
    pub fn run(&mut self, cmd: Command) -> Result<(), CliError> {
        let mode = if self.analysis.symbolic.is_some() { "builtin" } else { "general" };
        self.report.push(format!("mode {mode}"));
        self.report.push(format!("n {}", self.cfg.n));
        if self.analysis.symbolic.is_some() {
            self.report.push(format!("m {}", self.cfg.m));
        }
        self.report.push(format!("seed {}", self.seed));
        match cmd {
            Command::Build => self.build()?,
            Command::Zeros => self.zeros()?,
            Command::Verify => self.verify()?,
            Command::All => {
                self.build()?;
                self.zeros()?;
                self.verify()?;
            }
        }
        let mut text = self.report.join("\n");
        text.push('\n');
        self.files.push("report.txt".into());
        let _ = writeln!(text, "files {}", self.files.join(" "));
        write_atomic(&self.out.join("report.txt"), &text)?;
        if let Some(first) = self.assumption_failures.first() {
            return Err(CliError::Assumption(format!("{first} ({} in total)", self.assumption_failures.len())));
        }
        if let Some(first) = self.numerical_failures.first() {
            return Err(CliError::Numerical(format!("{first} ({} in total)", self.numerical_failures.len())));
        }
        Ok(())
    }

    pub fn build(&mut self) -> Result<(), CliError> {
        if let Some(v) = self.analysis.symbolic.clone() {
            self.write("melnikov.txt", &v.canonical_text())?;
            if v.is_identically_zero() {
                self.say("build: all components identically zero".into());
            } else {
                let zc = v.zero_components();
                self.say(format!(
                    "build: polynomial dump with degrees {:?} (first component divided by h2){}",
                    v.degrees(),
                    if zc.is_empty() { String::new() } else { format!(", components {zc:?} identically zero") }
                ));
            }
            return Ok(());
        }
        let Model::General(g) = &self.cfg.model else { unreachable!() };
        let points = g.grid.points();
        let n = self.cfg.n;
        let results: Vec<_> = points
            .par_iter()
            .map(|p| self.analysis.melnikov(&LevelParameter(p.clone())))
            .collect();
        let mut header = vec!["h1".to_string()];
        header.extend((3..=n).map(|i| format!("h{i}")));
        header.extend((1..n).map(|j| format!("M{j}")));
        header.push("status".into());
        let mut csv = Csv::new(&header);
        let mut failures = Vec::new();
        for (p, r) in points.iter().zip(results) {
            let mut row: Vec<String> = p.iter().map(|x| fmt_f64(*x)).collect();
            match r {
                Ok(v) => {
                    row.extend(v.iter().map(|x| fmt_f64(*x)));
                    row.push("ok".into());
                }
                Err(e) => {
                    row.extend((1..n).map(|_| String::new()));
                    row.push(status_of(&e).into());
                    failures.push(format!("grid point {p:?}: {e}"));
                }
            }
            csv.push_raw(row);
        }
        self.write("melnikov_grid.csv", csv.as_str())?;
        self.say(format!("build: sampled {} grid points, {} failed", csv.rows(), failures.len()));
        self.numerical_failures.extend(failures);
        Ok(())
    }

    fn search_roots(&mut self) -> Result<Vec<Root>, CliError> {
        if let Some(r) = &self.roots {
            return Ok(r.clone());
        }
        let window = self.cfg.window.clone();
        let grid = starts(&window, self.cfg.starts_per_dim);
        let (roots, warnings) = match &self.analysis.symbolic {
            Some(v) => {
                let opts = ZeroOptions { starts_per_dim: self.cfg.starts_per_dim, ..ZeroOptions::default() };
                let found: Vec<Vec<f64>> = grid.par_iter().filter_map(|s| newton_from(v, &window, s, &opts)).collect();
                collect_roots(v, found, &opts)?
            }
            None => {
                let opts = ZeroOptions { starts_per_dim: self.cfg.starts_per_dim, residual_rel: 1e-10, ..ZeroOptions::default() };
                let target = QuadratureTarget {
                    analysis: &self.analysis,
                    opts: MelnikovOptions { quad: QuadOptions { rtol: 1e-12, ..QuadOptions::default() }, ..MelnikovOptions::default() },
                };
                let found: Vec<Vec<f64>> =
                    grid.par_iter().filter_map(|s| newton_from(&target, &window, s, &opts)).collect();
                collect_roots(&target, found, &opts)?
            }
        };
        for w in warnings {
            self.report.push(format!("warning: {w:?}"));
        }
        self.roots = Some(roots.clone());
        Ok(roots)
    }

    pub fn zeros(&mut self) -> Result<(), CliError> {
        let n = self.cfg.n;
        if let Some(v) = &self.analysis.symbolic {
            if !v.zero_components().is_empty() {
                let zc = v.zero_components();
                self.roots = Some(Vec::new());
                self.write("zeros.csv", zeros_csv(n, &[]).as_str())?;
                self.say(format!("zeros: component identically zero; isolated-zero analysis skipped (components {zc:?})"));
                return Ok(());
            }
        }
        let roots = self.search_roots()?;
        self.write("zeros.csv", zeros_csv(n, &roots).as_str())?;
        let degenerate = roots.iter().filter(|r| r.degenerate).count();
        let tail = if degenerate > 0 { format!(" ({degenerate} degenerate)") } else { String::new() };
        if self.analysis.symbolic.is_some() {
            let bound = theorem_bound(n, self.cfg.m);
            self.say(format!("zeros: found {} of at most {bound}{tail}", roots.len()));
        } else {
            self.say(format!("zeros: found {}{tail}; no a priori bound for general systems", roots.len()));
        }
        if let (Model::Builtin(t), 1) = (&self.cfg.model, self.cfg.m) {
            match m1_closed_form(t) {
                Ok(c) => {
                    let root: Vec<String> = c.root.iter().map(|x| fmt_f64(*x)).collect();
                    self.say(format!("closed form: root {}", root.join(" ")));
                    self.say(format!(
                        "closed form: jacobian det {} pattern det {} normalized det {}",
                        fmt_f64(c.jacobian_det),
                        fmt_f64(c.pattern_det),
                        fmt_f64(c.normalized_det)
                    ));
                }
                Err(e) => self.say(format!("closed form: not applicable ({e})")),
            }
        }
        Ok(())
    }

    fn sample_levels(&self) -> Vec<Vec<f64>> {
        let mut levels = self.cfg.verify.levels.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let w = &self.cfg.window;
        for _ in 0..self.cfg.verify.samples {
            let h2: f64 = rng.gen_range(w.h2.0..w.h2.1);
            let mut l = vec![h2 * h2];
            l.extend(w.hhat.iter().map(|(lo, hi)| rng.gen_range(*lo..*hi)));
            levels.push(l);
        }
        levels
    }

    pub fn verify(&mut self) -> Result<(), CliError> {
        let n = self.cfg.n;
        let levels = self.sample_levels();
        let eps = self.cfg.eps.clone();
        let an = &self.analysis;
        let rows: Vec<LevelRows> = levels.par_iter().map(|l| verify_level(an, &LevelParameter(l.clone()), &eps)).collect();

        let mut header = vec!["h1".to_string()];
        header.extend((3..=n).map(|i| format!("h{i}")));
        header.extend(["eps", "err", "order", "status"].map(String::from));
        let mut csv = Csv::new(&header);
        let mut log = String::new();
        let mut worst = 0.0f64;
        for (l, r) in levels.iter().zip(&rows) {
            log.push_str(&r.log);
            if r.assumption_failed {
                self.assumption_failures.push(format!("level {l:?}"));
            }
            for (e, err, order, status) in &r.rows {
                let mut row: Vec<String> = l.iter().map(|x| fmt_f64(*x)).collect();
                row.push(fmt_f64(*e));
                row.push(err.map(fmt_f64).unwrap_or_default());
                row.push(order.map(fmt_f64).unwrap_or_default());
                row.push(status.clone());
                if let Some(x) = err {
                    worst = worst.max(*x);
                }
                if status != "ok" && status != "assumption_failed" {
                    self.numerical_failures.push(format!("verification at {l:?}, eps {e}: {status}"));
                }
                csv.push_raw(row);
            }
        }
        self.write("verification.csv", csv.as_str())?;
        self.say(format!("verify: {} rows over {} levels, max |displacement/eps - M| {}", csv.rows(), levels.len(), fmt_f64(worst)));

        let roots = if self.analysis.symbolic.as_ref().is_some_and(|v| !v.zero_components().is_empty()) {
            Vec::new()
        } else {
            self.search_roots()?
        };
        let shoot_eps = self.cfg.verify.shoot_eps;
        let an = &self.analysis;
        let shots: Vec<_> = roots
            .par_iter()
            .map(|r| {
                let guess = LevelParameter::from_h2(r.y[0], &r.y[1..]);
                (check_level(an, &guess), shoot_periodic_orbit(&an.sys, &an.h_set, &guess, shoot_eps, &ShootOptions::default()))
            })
            .collect();
        let mut header: Vec<String> = std::iter::once("root_h2".to_string()).chain((3..=n).map(|i| format!("root_h{i}"))).collect();
        header.push("h1".into());
        header.extend((3..=n).map(|i| format!("h{i}")));
        header.extend(["eps", "defect", "iterations", "status"].map(String::from));
        let mut csv = Csv::new(&header);
        let mut max_defect = 0.0f64;
        for (r, (check, s)) in roots.iter().zip(shots) {
            log.push_str(&check.log);
            if check.failed {
                self.assumption_failures.push(format!("root {:?}", r.y));
            }
            let mut row: Vec<String> = r.y.iter().map(|x| fmt_f64(*x)).collect();
            match s {
                Ok(s) => {
                    row.extend(s.h.iter().map(|x| fmt_f64(*x)));
                    row.push(fmt_f64(shoot_eps));
                    row.push(fmt_f64(s.defect));
                    row.push(s.iterations.to_string());
                    row.push("ok".into());
                    max_defect = max_defect.max(s.defect);
                }
                Err(e) => {
                    row.extend((1..n).map(|_| String::new()));
                    row.push(fmt_f64(shoot_eps));
                    row.push(String::new());
                    row.push(String::new());
                    row.push(status_of(&e).into());
                    self.numerical_failures.push(format!("shooting from {:?}: {e}", r.y));
                }
            }
            csv.push_raw(row);
        }
        self.write("shooting.csv", csv.as_str())?;
        self.write("assumptions.log", &log)?;
        self.say(format!("verify: shot {} orbits at eps {}, max closure defect {}", roots.len(), fmt_f64(shoot_eps), fmt_f64(max_defect)));
        Ok(())
    }
}

fn zeros_csv(n: usize, roots: &[Root]) -> Csv {
    let mut header: Vec<String> = (2..=n).map(|i| format!("h{i}")).collect();
    header.extend(["residual", "jac_det", "degenerate_flag"].map(String::from));
    let mut csv = Csv::new(&header);
    for r in roots {
        let mut row: Vec<String> = r.y.iter().map(|x| fmt_f64(*x)).collect();
        row.push(fmt_f64(r.residual));
        row.push(fmt_f64(r.jac_det));
        row.push(u8::from(r.degenerate).to_string());
        csv.push_raw(row);
    }
    csv
}

fn status_of(e: &melnikov_core::Error) -> &'static str {
    use melnikov_core::Error::*;
    match e {
        TangencyDetected { .. } => "transversality_failed",
        NoCrossing { .. } => "no_crossing",
        OrbitEscaped { .. } => "orbit_escaped",
        StepSizeUnderflow { .. } => "step_size_underflow",
        OrbitNotClosed { .. } => "orbit_not_closed",
        CornerSolveFailed { .. } => "corner_solve_failed",
        QuadratureNotConverged { .. } => "quadrature_not_converged",
        SingularCornerMatrix { .. } => "singular_corner_matrix",
        ShootingDiverged { .. } => "shooting_diverged",
        ShootingLeftWindow { .. } => "shooting_left_window",
        _ => "error",
    }
}

struct LevelCheck {
    log: String,
    failed: bool,
}

/// Gradient-rank and transversality checks at the corners of `L_h`.
fn check_level(an: &Analysis, h: &LevelParameter) -> LevelCheck {
    let mut log = String::new();
    let label: Vec<String> = h.iter().map(|x| fmt_f64(*x)).collect();
    let label = label.join(" ");
    let corners = match corner_points(&an.h_set, h) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(log, "level {label}: corners unavailable ({e})");
            return LevelCheck { log, failed: true };
        }
    };
    let mut failed = false;
    let mut status = |s: CheckStatus| {
        failed |= s == CheckStatus::Fails;
        match s {
            CheckStatus::Holds => "holds",
            CheckStatus::NearDegenerate => "near_degenerate",
            CheckStatus::Fails => "fails",
        }
    };
    use RegionId::*;
    for (name, p, plane, regions) in [
        ('A', &corners.a, Plane::X1Zero, [R1, R4]),
        ('B', &corners.b, Plane::X2Zero, [R1, R2]),
        ('C', &corners.c, Plane::X1Zero, [R2, R3]),
        ('E', &corners.e, Plane::X2Zero, [R3, R4]),
    ] {
        for k in regions {
            let c = check_gradient_independence_in(&an.h_set, k, p);
            let _ = writeln!(log, "level {label}: corner {name} region {k} gradient rank {} {}", fmt_f64(c.value), status(c.status));
        }
        let c = check_transversality(&an.h_set, p, plane);
        let _ = writeln!(log, "level {label}: corner {name} plane {plane} transversality {} {}", fmt_f64(c.value), status(c.status));
    }
    LevelCheck { log, failed }
}

struct LevelRows {
    log: String,
    assumption_failed: bool,
    /// `(eps, err, order, status)`.
    rows: Vec<(f64, Option<f64>, Option<f64>, String)>,
}

fn verify_level(an: &Analysis, h: &LevelParameter, eps: &[f64]) -> LevelRows {
    let check = check_level(an, h);
    if check.failed {
        let rows = eps.iter().map(|&e| (e, None, None, "assumption_failed".to_string())).collect();
        return LevelRows { log: check.log, assumption_failed: true, rows };
    }
    let m = match an.melnikov(h) {
        Ok(m) => m,
        Err(e) => {
            let rows = eps.iter().map(|&x| (x, None, None, status_of(&e).to_string())).collect();
            return LevelRows { log: check.log, assumption_failed: false, rows };
        }
    };
    let mut rows = Vec::with_capacity(eps.len());
    let mut prev: Option<(f64, f64)> = None;
    for &e in eps {
        match poincare_displacement(&an.sys, &an.h_set, h, e, &FlowOptions::default()) {
            Ok(d) => {
                let err = d.displacement.iter().zip(&m).map(|(x, y)| (x / e - y).abs()).fold(0.0, f64::max);
                let order = prev.and_then(|(pe, perr)| {
                    (perr > 0.0 && err > 0.0 && pe != e).then(|| (perr / err).ln() / (pe / e).ln())
                });
                prev = Some((e, err));
                rows.push((e, Some(err), order, "ok".to_string()));
            }
            Err(x) => {
                prev = None;
                rows.push((e, None, None, status_of(&x).to_string()));
            }
        }
    }
    LevelRows { log: check.log, assumption_failed: false, rows }
}

/// Rayon pool capped by `MELNIKOV_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("MELNIKOV_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| ConfigError { field: "MELNIKOV_THREADS".into(), message: format!("{v:?} is not a positive integer") })?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Numerical(e.to_string()))
}
