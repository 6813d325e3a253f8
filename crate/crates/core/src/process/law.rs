//! Exact law of the total work.
//!
//! After normalization every LT is preceded either by the start of the process or
//! by a thermalization, so its increment is independent of all others: the
//! first one is distributed by `q0`, every later one by the Gibbs state of the
//! configuration at the preceding thermalization. The total is their convolution.

use serde::Serialize;

use super::{Process, ProcessStep};
use crate::entropy::DiscreteRandomVariable;
use crate::error::Result;
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::thermo::{check_dim, gibbs, Bath, Distribution};

pub const DEFAULT_ATOM_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "route", rename_all = "kebab-case")]
pub enum Provenance {
    Exact,
    MonteCarlo { samples: usize, seed: u64, generator: String },
}

/// Law of `W(P, N)` with its computation route.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkDistribution {
    pub law: DiscreteRandomVariable,
    pub provenance: Provenance,
}

impl WorkDistribution {
    /// Law of the yield `-W`.
    pub fn yield_law(&self) -> DiscreteRandomVariable {
        self.law.negate()
    }

    /// `value,probability` rows with 17 significant digits.
    pub fn to_csv(&self) -> String {
        crate::csv::law_to_csv(&self.law)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorkMoments {
    pub mean: f64,
    pub variance: f64,
}

impl WorkMoments {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Per-LT `(increment per state, state weights)`.
fn increments(process: &Process, q0: &Distribution, bath: &Bath) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    check_dim(process.dim(), q0.len())?;
    let p = process.normalize();
    let mut weights = q0.probs().to_vec();
    let mut cur = p.initial_levels().clone();
    let mut out = Vec::new();
    for s in p.steps() {
        match s {
            ProcessStep::Therm => weights = gibbs(&cur, bath).probs().to_vec(),
            ProcessStep::Lt(h) => {
                let inc: Vec<f64> = h.levels().iter().zip(cur.levels()).map(|(a, b)| a - b).collect();
                out.push((inc, weights.clone()));
                cur = h.clone();
            }
        }
    }
    Ok(out)
}

/// Law of each LT's increment, in process order.
pub fn lt_increment_laws(process: &Process, q0: &Distribution, bath: &Bath) -> Result<Vec<DiscreteRandomVariable>> {
    increments(process, q0, bath)?
        .into_iter()
        .map(|(inc, w)| DiscreteRandomVariable::new(inc.into_iter().zip(w).collect()))
        .collect()
}

pub fn exact_work_distribution(process: &Process, q0: &Distribution, bath: &Bath) -> Result<WorkDistribution> {
    exact_work_distribution_with(process, q0, bath, DEFAULT_ATOM_CAP)
}

/// Exact convolution; fails with `AtomCapExceeded` once more than `atom_cap` atoms survive merging.
pub fn exact_work_distribution_with(
    process: &Process,
    q0: &Distribution,
    bath: &Bath,
    atom_cap: usize,
) -> Result<WorkDistribution> {
    let mut law = DiscreteRandomVariable::point_mass(0.0);
    for inc in lt_increment_laws(process, q0, bath)? {
        law = law.convolve(&inc, atom_cap)?;
    }
    Ok(WorkDistribution { law, provenance: Provenance::Exact })
}

/// Mean and variance of the total work without forming the law.
pub fn exact_work_moments(process: &Process, q0: &Distribution, bath: &Bath) -> Result<WorkMoments> {
    let mut mean = CompensatedSum::new();
    let mut var = CompensatedSum::new();
    for (inc, w) in increments(process, q0, bath)? {
        let m = compensated_sum(inc.iter().zip(&w).map(|(x, p)| x * p));
        let v = compensated_sum(inc.iter().zip(&w).map(|(x, p)| p * (x - m) * (x - m)));
        mean.add(m);
        var.add(v);
    }
    Ok(WorkMoments { mean: mean.value(), variance: var.value().max(0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::EnergyLevels;

    fn lv(v: &[f64]) -> EnergyLevels {
        EnergyLevels::new(v.to_vec()).unwrap()
    }

    #[test]
    fn single_lt_examples() {
        let b = Bath::default();
        let p = Process::new(lv(&[0.0, 0.0]), vec![ProcessStep::Lt(lv(&[0.0, 1.0]))]).unwrap();
        let w = exact_work_distribution(&p, &Distribution::new(vec![1.0, 0.0]).unwrap(), &b).unwrap();
        assert_eq!(w.law, DiscreteRandomVariable::point_mass(0.0));
        let w = exact_work_distribution(&p, &Distribution::uniform(2).unwrap(), &b).unwrap();
        assert_eq!(w.law.values(), &[0.0, 1.0]);
        assert_eq!(w.law.probs(), &[0.5, 0.5]);
        assert_eq!(w.provenance, Provenance::Exact);
    }

    #[test]
    fn moments_match_law() {
        let b = Bath::with_kt(0.8).unwrap();
        let p = Process::new(
            lv(&[0.0, 0.3, 1.0]),
            vec![
                ProcessStep::Lt(lv(&[0.5, 0.0, 1.0])),
                ProcessStep::Therm,
                ProcessStep::Lt(lv(&[1.0, -1.0, 0.2])),
                ProcessStep::Therm,
                ProcessStep::Lt(lv(&[0.0, 0.0, 0.0])),
            ],
        )
        .unwrap();
        let q0 = Distribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let law = exact_work_distribution(&p, &q0, &b).unwrap().law;
        let m = exact_work_moments(&p, &q0, &b).unwrap();
        assert!((law.mean() - m.mean).abs() < 1e-14);
        assert!((law.variance() - m.variance).abs() < 1e-13);
    }
}
