//! Fixtures shared by the kernel benchmarks.

use worklab::entropy::DiscreteRandomVariable;
use worklab::{Bath, Distribution, EnergyLevels};

/// Four-level system with a skewed state, the running example.
pub fn four_level() -> (Distribution, EnergyLevels, Bath) {
    let q = Distribution::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
    let h = EnergyLevels::new(vec![0.0, 0.4, 1.1, 2.0]).unwrap();
    (q, h, Bath::with_kt(1.0).unwrap())
}

/// Random state and spectrum on `n` levels, reproducible from `seed`.
pub fn random_system(n: usize, seed: u64) -> (Distribution, EnergyLevels) {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    let w: Vec<f64> = (0..n).map(|_| 0.05 + next()).collect();
    let total: f64 = w.iter().sum();
    let q = Distribution::new(w.iter().map(|x| x / total).collect()).unwrap();
    let h = EnergyLevels::new((0..n).map(|_| 3.0 * next()).collect()).unwrap();
    (q, h)
}

/// Lattice variable with `n` atoms spaced `step` apart.
pub fn lattice(n: usize, step: f64) -> DiscreteRandomVariable {
    let p = 1.0 / n as f64;
    DiscreteRandomVariable::new((0..n).map(|k| (k as f64 * step, p)).collect()).unwrap()
}
