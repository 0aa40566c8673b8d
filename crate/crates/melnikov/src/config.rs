//! JSON configuration.
//!
//! ```json
//! {
//!   "mode": "builtin",
//!   "n": 3, "m": 1,
//!   "coefficients": { "a": [[1, 0, 0, 0, 1], [2, 0, 1, 0, "-2"]] },
//!   "eps": [1e-3, 5e-4, 2.5e-4],
//!   "window": { "h2": [0.05, 3], "hhat": [[-3, 3]], "starts_per_dim": 16 },
//!   "verify": { "samples": 3, "levels": [[0.5, 0.0]], "shoot_eps": 1e-3 }
//! }
//! ```
//!
//! Coefficient entries are `[i, k1, ..., kn, value]` with `value` a number
//! or a `"p/q"` string. Numbers are converted to rationals exactly from
//! their shortest decimal form, so `0.2` becomes `1/5`.
//!
//! General mode replaces `m` and `coefficients` with four `regions`, each
//! giving polynomial `f`, `g` and `integrals` as lists of terms
//! `[coefficient, e1, ..., en]`, plus an optional sampling `grid`.

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use melnikov_core::family::{CoefficientTable, Slot};
use melnikov_core::model::{CornerPoints, CornerRule, RegionFields, ScalarIntegral};
use melnikov_core::poly::{PolyField, Polynomial};
use melnikov_core::zeros::Window;
use melnikov_core::{FirstIntegralSet, PiecewiseSystem, RegionId, VectorField};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Deserialize;
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

fn err(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.into(), message: message.into() }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawMode {
    Builtin,
    General,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: RawMode,
    n: usize,
    m: Option<u32>,
    coefficients: Option<RawTables>,
    regions: Option<Vec<RawRegion>>,
    corner_seed: Option<[Vec<f64>; 4]>,
    grid: Option<RawGrid>,
    eps: Option<Vec<f64>>,
    window: Option<RawWindow>,
    verify: Option<RawVerify>,
    output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTables {
    #[serde(default)]
    a: Vec<Vec<Value>>,
    #[serde(default)]
    b: Vec<Vec<Value>>,
    #[serde(default)]
    c: Vec<Vec<Value>>,
    #[serde(default)]
    d: Vec<Vec<Value>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    f: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    g: Vec<Vec<Vec<f64>>>,
    integrals: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    h1: (f64, f64, usize),
    #[serde(default)]
    hhat: Vec<(f64, f64, usize)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindow {
    h2: Option<(f64, f64)>,
    hhat: Option<Vec<(f64, f64)>>,
    starts_per_dim: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    samples: Option<usize>,
    levels: Option<Vec<Vec<f64>>>,
    shoot_eps: Option<f64>,
}

/// Sampling grid in `(h1, h3, ..., hn)`: `(lo, hi, count)` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub axes: Vec<(f64, f64, usize)>,
}

impl Grid {
    /// Grid points, last axis varying fastest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for &(lo, hi, count) in &self.axes {
            let vals: Vec<f64> = (0..count)
                .map(|i| if count == 1 { lo } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 })
                .collect();
            out = out
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// A user-defined system with polynomial fields and integrals.
#[derive(Debug, Clone)]
pub struct GeneralModel {
    pub f: [Vec<Polynomial>; 4],
    pub g: [Vec<Polynomial>; 4],
    pub integrals: [Vec<Polynomial>; 4],
    pub corner_seed: Option<CornerPoints>,
    pub grid: Grid,
}

impl GeneralModel {
    pub fn system(&self) -> PiecewiseSystem {
        let n = self.f[0].len();
        let fields = std::array::from_fn(|k| {
            let f: Arc<dyn VectorField> = Arc::new(PolyField::new(self.f[k].clone()));
            let g: Arc<dyn VectorField> = Arc::new(PolyField::new(self.g[k].clone()));
            RegionFields::new(f, g)
        });
        PiecewiseSystem::new(n, fields).expect("validated dimensions")
    }

    pub fn integral_set(&self) -> FirstIntegralSet {
        let n = self.f[0].len();
        let regions = std::array::from_fn(|k| {
            self.integrals[k].iter().cloned().map(ScalarIntegral::from_polynomial).collect()
        });
        FirstIntegralSet::new(n, regions, CornerRule::Newton(self.corner_seed.clone())).expect("validated dimensions")
    }
}

#[derive(Debug, Clone)]
pub enum Model {
    Builtin(CoefficientTable),
    General(GeneralModel),
}

#[derive(Debug, Clone)]
pub struct VerifySettings {
    /// Random levels drawn in addition to `levels`.
    pub samples: usize,
    /// Explicit levels `(h1, h3, ..., hn)`.
    pub levels: Vec<Vec<f64>>,
    pub shoot_eps: f64,
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub n: usize,
    pub m: u32,
    pub model: Model,
    pub eps: Vec<f64>,
    pub window: Window,
    pub starts_per_dim: usize,
    pub verify: VerifySettings,
    pub output: Option<PathBuf>,
}

impl AnalysisConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| err("config", e.to_string()))?;
        raw.validate()
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| err("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

impl RawConfig {
    fn validate(self) -> Result<AnalysisConfig, ConfigError> {
        let n = self.n;
        if n < 2 {
            return Err(err("n", "must be at least 2"));
        }
        let (model, m) = match self.mode {
            RawMode::Builtin => {
                let m = self.m.ok_or_else(|| err("m", "required in builtin mode"))?;
                if self.regions.is_some() || self.grid.is_some() || self.corner_seed.is_some() {
                    return Err(err("mode", "regions, grid and corner_seed belong to general mode"));
                }
                (Model::Builtin(parse_tables(n, m, self.coefficients.unwrap_or_default())?), m)
            }
            RawMode::General => {
                if self.coefficients.is_some() {
                    return Err(err("coefficients", "belongs to builtin mode"));
                }
                let regions = self.regions.ok_or_else(|| err("regions", "required in general mode"))?;
                let grid = match self.grid {
                    Some(g) => Grid { axes: std::iter::once(g.h1).chain(g.hhat).collect() },
                    None => Grid {
                        axes: std::iter::once((0.25, 2.0, 10)).chain((2..n).map(|_| (-1.0, 1.0, 10))).collect(),
                    },
                };
                if grid.axes.len() + 1 != n {
                    return Err(err("grid.hhat", format!("needs {} axes", n - 2)));
                }
                for (i, &(lo, hi, count)) in grid.axes.iter().enumerate() {
                    if count == 0 || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                        return Err(err(format!("grid axis {i}"), "needs finite lo <= hi and count >= 1"));
                    }
                }
                if !(grid.axes[0].0 > 0.0) {
                    return Err(err("grid.h1", "h1 must be positive"));
                }
                let corner_seed = match self.corner_seed {
                    None => None,
                    Some(pts) => {
                        if pts.iter().any(|p| p.len() != n) {
                            return Err(err("corner_seed", format!("each point needs {n} coordinates")));
                        }
                        let [a, b, c, e] = pts.map(melnikov_core::StateVector);
                        Some(CornerPoints { a, b, c, e })
                    }
                };
                (Model::General(parse_general(n, regions, grid, corner_seed)?), self.m.unwrap_or(0))
            }
        };
        let eps = self.eps.unwrap_or_else(|| vec![1e-3, 5e-4, 2.5e-4]);
        if eps.is_empty() {
            return Err(err("eps", "must not be empty"));
        }
        for (i, e) in eps.iter().enumerate() {
            if !(*e > 0.0 && *e <= 0.1) {
                return Err(err(format!("eps[{i}]"), format!("{e} outside (0, 0.1]")));
            }
        }
        let mut window = Window::default_for(n - 1);
        let mut starts_per_dim = 16;
        if let Some(w) = self.window {
            if let Some(h2) = w.h2 {
                window.h2 = h2;
            }
            if let Some(hh) = w.hhat {
                if hh.len() + 2 != n {
                    return Err(err("window.hhat", format!("needs {} intervals", n - 2)));
                }
                window.hhat = hh;
            }
            if let Some(s) = w.starts_per_dim {
                if s == 0 {
                    return Err(err("window.starts_per_dim", "must be positive"));
                }
                starts_per_dim = s;
            }
        }
        window.validate().map_err(|e| err("window", e.to_string()))?;
        let rv = self.verify.unwrap_or(RawVerify { samples: None, levels: None, shoot_eps: None });
        let levels = rv.levels.unwrap_or_default();
        for (i, l) in levels.iter().enumerate() {
            if l.len() + 1 != n {
                return Err(err(format!("verify.levels[{i}]"), format!("needs {} values (h1, h3, ...)", n - 1)));
            }
            if !(l[0] > 0.0) {
                return Err(err(format!("verify.levels[{i}]"), "h1 must be positive"));
            }
        }
        let shoot_eps = rv.shoot_eps.unwrap_or(1e-3);
        if !(shoot_eps > 0.0 && shoot_eps <= 0.1) {
            return Err(err("verify.shoot_eps", format!("{shoot_eps} outside (0, 0.1]")));
        }
        Ok(AnalysisConfig {
            n,
            m,
            model,
            eps,
            window,
            starts_per_dim,
            verify: VerifySettings { samples: rv.samples.unwrap_or(3), levels, shoot_eps },
            output: self.output,
        })
    }
}

/// Exact rational from a `"p/q"` string or a decimal literal.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).ok()?;
        let q = BigInt::from_str(q.trim()).ok()?;
        return (!q.is_zero()).then(|| BigRational::new(p, q));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = BigInt::from_str(&format!("{int}{frac}0")).ok()? / BigInt::from(10);
    let ten = BigRational::from_integer(BigInt::from(10));
    let shift = exp - frac.len() as i32;
    let scale = if shift >= 0 { num_traits::pow(ten, shift as usize) } else { BigRational::one() / num_traits::pow(ten, (-shift) as usize) };
    let v = BigRational::from_integer(digits) * scale;
    Some(if neg { -v } else { v })
}

fn value_rational(v: &Value, field: &str) -> Result<BigRational, ConfigError> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(err(field, "value must be a number or a \"p/q\" string")),
    };
    parse_rational(&text).ok_or_else(|| err(field, format!("cannot read {text:?} as a rational")))
}

fn value_u32(v: &Value, field: &str) -> Result<u32, ConfigError> {
    v.as_u64()
        .and_then(|x| u32::try_from(x).ok())
        .ok_or_else(|| err(field, format!("expected a non-negative integer, got {v}")))
}

fn parse_tables(n: usize, m: u32, raw: RawTables) -> Result<CoefficientTable, ConfigError> {
    let mut table = CoefficientTable::new(n, m).map_err(|e| err("n", e.to_string()))?;
    for (letter, k, entries) in [('a', RegionId::R1, raw.a), ('b', RegionId::R2, raw.b), ('c', RegionId::R3, raw.c), ('d', RegionId::R4, raw.d)] {
        for (idx, e) in entries.iter().enumerate() {
            let field = format!("coefficients.{letter}[{idx}]");
            if e.len() != n + 2 {
                return Err(err(&field, format!("expected [i, k1..k{n}, value] with {} entries, got {}", n + 2, e.len())));
            }
            let comp = value_u32(&e[0], &field)? as usize;
            let exps = e[1..=n].iter().map(|v| value_u32(v, &field)).collect::<Result<Vec<_>, _>>()?;
            let value = value_rational(&e[n + 1], &field)?;
            let slot = Slot::new(k, comp, exps);
            if !table.get(&slot).is_zero() {
                return Err(err(&field, "coefficient given twice"));
            }
            table.set(slot, value).map_err(|x| err(&field, x.to_string()))?;
        }
    }
    Ok(table)
}

fn parse_poly(n: usize, terms: &[Vec<f64>], field: &str) -> Result<Polynomial, ConfigError> {
    let mut p = Polynomial::zero(n);
    for (i, t) in terms.iter().enumerate() {
        if t.len() != n + 1 {
            return Err(err(format!("{field}[{i}]"), format!("expected [coefficient, e1..e{n}]")));
        }
        let mut exps = Vec::with_capacity(n);
        for &e in &t[1..] {
            if e < 0.0 || e.fract() != 0.0 || e > 64.0 {
                return Err(err(format!("{field}[{i}]"), format!("bad exponent {e}")));
            }
            exps.push(e as u32);
        }
        if !t[0].is_finite() {
            return Err(err(format!("{field}[{i}]"), "coefficient must be finite"));
        }
        p.add_term(t[0], exps);
    }
    Ok(p)
}

fn parse_general(n: usize, regions: Vec<RawRegion>, grid: Grid, corner_seed: Option<CornerPoints>) -> Result<GeneralModel, ConfigError> {
    if regions.len() != 4 {
        return Err(err("regions", format!("expected 4 regions, got {}", regions.len())));
    }
    let mut f: [Vec<Polynomial>; 4] = Default::default();
    let mut g: [Vec<Polynomial>; 4] = Default::default();
    let mut h: [Vec<Polynomial>; 4] = Default::default();
    for (k, r) in regions.into_iter().enumerate() {
        let base = format!("regions[{k}]");
        if r.f.len() != n {
            return Err(err(format!("{base}.f"), format!("expected {n} components")));
        }
        f[k] = r.f.iter().enumerate().map(|(i, t)| parse_poly(n, t, &format!("{base}.f[{i}]"))).collect::<Result<_, _>>()?;
        g[k] = if r.g.is_empty() {
            vec![Polynomial::zero(n); n]
        } else if r.g.len() != n {
            return Err(err(format!("{base}.g"), format!("expected {n} components")));
        } else {
            r.g.iter().enumerate().map(|(i, t)| parse_poly(n, t, &format!("{base}.g[{i}]"))).collect::<Result<_, _>>()?
        };
        if r.integrals.len() + 1 != n {
            return Err(err(format!("{base}.integrals"), format!("expected {} integrals", n - 1)));
        }
        h[k] = r.integrals.iter().enumerate().map(|(i, t)| parse_poly(n, t, &format!("{base}.integrals[{i}]"))).collect::<Result<_, _>>()?;
    }
    Ok(GeneralModel { f, g, integrals: h, corner_seed, grid })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(num: i64, den: i64) -> BigRational {
        BigRational::new(num.into(), den.into())
    }

    #[test]
    fn rationals_from_text() {
        assert_eq!(parse_rational("0.2"), Some(q(1, 5)));
        assert_eq!(parse_rational("-3/6"), Some(q(-1, 2)));
        assert_eq!(parse_rational("2.5e-4"), Some(q(1, 4000)));
        assert_eq!(parse_rational("12"), Some(q(12, 1)));
        assert_eq!(parse_rational("1e3"), Some(q(1000, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
    }

    #[test]
    fn builtin_config_parses() {
        let c = AnalysisConfig::from_json(
            r#"{"mode":"builtin","n":3,"m":1,"coefficients":{"a":[[1,0,0,0,1],[2,0,1,0,"-2"],[3,0,0,0,3],[3,0,0,1,-1]]}}"#,
        )
        .unwrap();
        let Model::Builtin(t) = &c.model else { panic!() };
        assert_eq!(t.len(), 4);
        assert_eq!(t.get(&Slot::new(RegionId::R1, 2, vec![0, 1, 0])), q(-2, 1));
        assert_eq!(c.eps, vec![1e-3, 5e-4, 2.5e-4]);
    }

    #[test]
    fn field_level_diagnostics() {
        let e = AnalysisConfig::from_json(r#"{"mode":"builtin","n":3,"m":1,"coefficients":{"b":[[1,0,0,1]]}}"#).unwrap_err();
        assert_eq!(e.field, "coefficients.b[0]");
        let e = AnalysisConfig::from_json(r#"{"mode":"builtin","n":3,"m":1,"eps":[0.001, 0]}"#).unwrap_err();
        assert_eq!(e.field, "eps[1]");
        let e = AnalysisConfig::from_json(r#"{"mode":"builtin","n":3,"m":1,"window":{"h2":[0,1]}}"#).unwrap_err();
        assert_eq!(e.field, "window");
        let e = AnalysisConfig::from_json(r#"{"mode":"builtin","n":3,"m":1,"coefficients":{"a":[[1,2,0,0,1]]}}"#).unwrap_err();
        assert!(e.message.contains("exceeds"), "{e}");
    }

    #[test]
    fn grid_points_in_order() {
        let g = Grid { axes: vec![(1.0, 2.0, 2), (0.0, 1.0, 3)] };
        let p = g.points();
        assert_eq!(p.len(), 6);
        assert_eq!(p[1], vec![1.0, 0.5]);
        assert_eq!(p[5], vec![2.0, 1.0]);
    }
}
