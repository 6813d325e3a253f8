//! Strategies shared by the property suites.
#![allow(dead_code)]

use proptest::prelude::*;
use worklab::process::ProcessStep;
use worklab::{Bath, DiscreteRandomVariable, Distribution, EnergyLevels, Process};

pub fn probs(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    })
}

pub fn dist(n: usize) -> impl Strategy<Value = Distribution> {
    probs(n..=n).prop_map(|p| Distribution::new(p).unwrap())
}

pub fn levels(n: usize, span: f64) -> impl Strategy<Value = EnergyLevels> {
    prop::collection::vec(-span..span, n).prop_map(|v| EnergyLevels::new(v).unwrap())
}

/// Atoms on a coarse grid so that ties and near-ties show up.
pub fn variable(max_atoms: usize) -> impl Strategy<Value = DiscreteRandomVariable> {
    (prop::collection::vec(-20i32..20, 1..=max_atoms), probs(max_atoms..=max_atoms)).prop_map(|(v, p)| {
        let atoms = v.iter().zip(&p).map(|(&x, &w)| (x as f64 * 0.25, w)).collect::<Vec<_>>();
        let s: f64 = atoms.iter().map(|a| a.1).sum();
        DiscreteRandomVariable::new(atoms.into_iter().map(|(x, w)| (x, w / s)).collect()).unwrap()
    })
}

/// Up to `max_lt` level transformations over `n` states, thermalizations in between at random.
pub fn process(n: usize, max_lt: usize) -> impl Strategy<Value = Process> {
    (
        levels(n, 2.0),
        prop::collection::vec((levels(n, 2.0), any::<bool>()), 1..=max_lt),
    )
        .prop_map(|(h0, moves)| {
            let mut steps = Vec::new();
            for (h, therm) in moves {
                if therm {
                    steps.push(ProcessStep::Therm);
                }
                steps.push(ProcessStep::Lt(h));
            }
            Process::new(h0, steps).unwrap()
        })
}

pub fn bath() -> impl Strategy<Value = Bath> {
    (0.3f64..3.0).prop_map(|kt| Bath::with_kt(kt).unwrap())
}

pub fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..(1 << n)).map(move |mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
}

/// `min p(Λ)` over `q(Λ) > 1-ε` by enumeration, in bits as `-log2`.
pub fn brute_d0(q: &[f64], p: &[f64], eps: f64) -> f64 {
    let mut best = f64::INFINITY;
    for s in subsets(q.len()) {
        let qm: f64 = s.iter().map(|&i| q[i]).sum();
        if qm > 1.0 - eps {
            best = best.min(s.iter().map(|&i| p[i]).sum());
        }
    }
    -best.log2()
}
