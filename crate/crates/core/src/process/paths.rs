//! Depth-first enumeration of state paths, the brute-force oracle for work laws.

use super::{Process, ProcessStep};
use crate::entropy::DiscreteRandomVariable;
use crate::error::{Error, Result};
use crate::thermo::{check_dim, gibbs, Bath, Distribution};

pub const DEFAULT_PATH_CAP: usize = 1_000_000;

/// `N^(thermalizations + 1)`.
pub fn path_count(process: &Process) -> f64 {
    (process.dim() as f64).powi(process.thermalization_count() as i32 + 1)
}

/// Calls `visit(states, probability, work)` for every path of positive probability.
/// `states[k]` is the state held after the k-th thermalization (`states[0]` is the initial one).
pub fn enumerate_paths(
    process: &Process,
    q0: &Distribution,
    bath: &Bath,
    cap: usize,
    mut visit: impl FnMut(&[usize], f64, f64),
) -> Result<()> {
    check_dim(process.dim(), q0.len())?;
    let paths = path_count(process);
    if paths > cap as f64 {
        return Err(Error::EnumerationCapExceeded { paths, cap });
    }
    let configs = process.configurations();
    let steps = process.steps();
    let therm_weights: Vec<Option<Vec<f64>>> = steps
        .iter()
        .enumerate()
        .map(|(i, s)| matches!(s, ProcessStep::Therm).then(|| gibbs(configs[i], bath).probs().to_vec()))
        .collect();

    struct Ctx<'a, F> {
        steps: &'a [ProcessStep],
        configs: &'a [&'a crate::thermo::EnergyLevels],
        therm: &'a [Option<Vec<f64>>],
        states: Vec<usize>,
        visit: F,
    }

    fn walk<F: FnMut(&[usize], f64, f64)>(c: &mut Ctx<'_, F>, i: usize, state: usize, prob: f64, work: f64) {
        if i == c.steps.len() {
            (c.visit)(&c.states, prob, work);
            return;
        }
        match &c.steps[i] {
            ProcessStep::Lt(h) => {
                let w = work + (h.levels()[state] - c.configs[i].levels()[state]);
                walk(c, i + 1, state, prob, w);
            }
            ProcessStep::Therm => {
                let weights = c.therm[i].as_ref().expect("thermalization weights");
                for (n, &g) in weights.iter().enumerate() {
                    if g > 0.0 {
                        c.states.push(n);
                        walk(c, i + 1, n, prob * g, work);
                        c.states.pop();
                    }
                }
            }
        }
    }

    let mut ctx = Ctx { steps, configs: &configs, therm: &therm_weights, states: Vec::new(), visit: &mut visit };
    for (n0, &p0) in q0.probs().iter().enumerate() {
        if p0 > 0.0 {
            ctx.states.push(n0);
            walk(&mut ctx, 0, n0, p0, 0.0);
            ctx.states.pop();
        }
    }
    Ok(())
}

/// Work law assembled from all paths.
pub fn path_law(process: &Process, q0: &Distribution, bath: &Bath, cap: usize) -> Result<DiscreteRandomVariable> {
    let mut atoms = Vec::new();
    enumerate_paths(process, q0, bath, cap, |_, p, w| atoms.push((w, p)))?;
    DiscreteRandomVariable::new(atoms)
}
