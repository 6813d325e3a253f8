//! Monte Carlo sampling of the work cost.
//!
//! Samples are produced in fixed chunks of `CHUNK_SIZE`; chunk `c` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `c`. The chunk plan depends only on
//! the sample count, so the output is identical for every thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::law::{Provenance, WorkDistribution};
use super::{Process, ProcessStep};
use crate::entropy::DiscreteRandomVariable;
use crate::error::{param, Result};
use crate::thermo::{check_dim, gibbs, Bath, Distribution};

pub const CHUNK_SIZE: usize = 8192;
pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.3), seed_from_u64(seed), stream = chunk index, 8192 samples per chunk";

enum Op {
    Draw(usize),
    Add(usize),
}

struct Plan {
    initial: Vec<f64>,
    tables: Vec<Vec<f64>>,
    increments: Vec<Vec<f64>>,
    ops: Vec<Op>,
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

/// Inverse-CDF draw; never returns a zero-probability state.
fn draw(table: &[f64], u: f64) -> usize {
    let i = table.partition_point(|&c| c <= u);
    if i < table.len() {
        return i;
    }
    // u landed above the rounded total: take the last state with mass
    let mut j = table.len() - 1;
    while j > 0 && table[j] == table[j - 1] {
        j -= 1;
    }
    j
}

fn plan(process: &Process, q0: &Distribution, bath: &Bath) -> Plan {
    let p = process.normalize();
    let mut cur = p.initial_levels().clone();
    let mut tables = Vec::new();
    let mut increments = Vec::new();
    let mut ops = Vec::new();
    for s in p.steps() {
        match s {
            ProcessStep::Therm => {
                tables.push(cumulative(gibbs(&cur, bath).probs()));
                ops.push(Op::Draw(tables.len() - 1));
            }
            ProcessStep::Lt(h) => {
                increments.push(h.levels().iter().zip(cur.levels()).map(|(a, b)| a - b).collect());
                ops.push(Op::Add(increments.len() - 1));
                cur = h.clone();
            }
        }
    }
    Plan { initial: cumulative(q0.probs()), tables, increments, ops }
}

/// Raw samples in chunk order.
pub fn sample_work_values(process: &Process, q0: &Distribution, bath: &Bath, seed: u64, n: usize) -> Result<Vec<f64>> {
    check_dim(process.dim(), q0.len())?;
    if n == 0 {
        return param("sample count must be at least 1");
    }
    let plan = plan(process, q0, bath);
    let chunks = n.div_ceil(CHUNK_SIZE);
    let out: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK_SIZE.min(n - c * CHUNK_SIZE);
            (0..len)
                .map(|_| {
                    let mut state = draw(&plan.initial, rng.gen::<f64>());
                    let mut w = 0.0;
                    for op in &plan.ops {
                        match *op {
                            Op::Draw(t) => state = draw(&plan.tables[t], rng.gen::<f64>()),
                            Op::Add(k) => w += plan.increments[k][state],
                        }
                    }
                    w
                })
                .collect()
        })
        .collect();
    Ok(out.concat())
}

/// Empirical law of `n` sampled work values.
pub fn sample_work(process: &Process, q0: &Distribution, bath: &Bath, seed: u64, n: usize) -> Result<WorkDistribution> {
    let values = sample_work_values(process, q0, bath, seed, n)?;
    Ok(WorkDistribution {
        law: DiscreteRandomVariable::from_samples(values)?,
        provenance: Provenance::MonteCarlo { samples: n, seed, generator: GENERATOR.into() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::EnergyLevels;

    #[test]
    fn draw_skips_empty_states() {
        let t = cumulative(&[0.5, 0.0, 0.5]);
        assert_eq!(draw(&t, 0.49), 0);
        assert_eq!(draw(&t, 0.5), 2);
        assert_eq!(draw(&t, 1.0), 2);
        let t = cumulative(&[0.5, 0.5, 0.0]);
        assert_eq!(draw(&t, 1.0), 1);
    }

    #[test]
    fn deterministic_process_is_seed_independent() {
        let h = EnergyLevels::new(vec![0.0, 0.0]).unwrap();
        let p = Process::new(h, vec![ProcessStep::Lt(EnergyLevels::new(vec![0.7, 3.0]).unwrap())]).unwrap();
        let q0 = Distribution::point_mass(2, 0).unwrap();
        for seed in [0, 1, 99] {
            let w = sample_work(&p, &q0, &Bath::default(), seed, 1000).unwrap();
            assert_eq!(w.law, DiscreteRandomVariable::point_mass(0.7));
        }
    }

    #[test]
    fn same_seed_same_samples_any_pool() {
        let h = EnergyLevels::new(vec![0.0, 0.4, 1.0]).unwrap();
        let p = crate::process::build_itr(&h, &EnergyLevels::new(vec![1.0, 0.0, 0.0]).unwrap(), 20, &crate::process::ItrPath::Linear, &Bath::default()).unwrap();
        let q0 = Distribution::uniform(3).unwrap();
        let a = sample_work_values(&p, &q0, &Bath::default(), 5, 20_000).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sample_work_values(&p, &q0, &Bath::default(), 5, 20_000).unwrap());
        assert_eq!(a, b);
        let c = sample_work_values(&p, &q0, &Bath::default(), 6, 20_000).unwrap();
        assert_ne!(a, c);
    }
}
