#![allow(dead_code)]

use melnikov_core::family::CompatibleQuadratic;
use melnikov_core::{CoefficientTable, RegionId};
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Sparse table with small rational entries: each slot is filled with
/// probability `density`.
pub fn random_table(rng: &mut ChaCha8Rng, n: usize, m: u32, density: f64) -> CoefficientTable {
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

pub fn random_compatible(rng: &mut ChaCha8Rng, n: usize) -> CompatibleQuadratic {
    let mut pos = || rng.gen_range(0.5..2.0);
    let p = [pos(), pos(), pos(), pos()];
    let q = [pos(), pos(), pos()];
    let c = core::array::from_fn(|_| (2..n).map(|_| rng.gen_range(-0.5..0.5)).collect());
    let d = core::array::from_fn(|_| (2..n).map(|_| rng.gen_range(-0.2..0.2)).collect());
    CompatibleQuadratic { n, p, q, c, d }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

pub fn region_holds(k: RegionId, x: &[f64]) -> bool {
    let (a, b) = (x[0], x[1]);
    match k {
        RegionId::R1 => a >= 0.0 && b >= 0.0,
        RegionId::R2 => a >= 0.0 && b < 0.0,
        RegionId::R3 => a < 0.0 && b <= 0.0,
        RegionId::R4 => a < 0.0 && b > 0.0,
    }
}
