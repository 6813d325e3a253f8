//! Canonical constructions: ITR paths, optimal expected extraction, ε-deterministic
//! extraction, and erasure.

use serde::{Deserialize, Serialize};

use super::{Process, ProcessStep};
use crate::entropy::{eps_free_energy, SubsetSolution};
use crate::error::{param, Error, Result};
use crate::numeric::log_sum_exp;
use crate::thermo::{check_dim, gibbs, log_gibbs, Bath, Distribution, EnergyLevels};

/// How intermediate configurations of an ITR are placed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItrPath {
    /// `h(x) = (1-x) h_i + x h_f` at `x = l/L`.
    Linear,
    /// Same straight line, with `x_l` spaced so every step carries the same
    /// thermodynamic length `∫ β sqrt(Var_G(h(x))[h_f - h_i]) dx`.
    EqualLength,
    /// Explicit configurations `h(1/L), …, h(1)`; the last must equal `h_f`.
    Tabulated(Vec<EnergyLevels>),
}

const LENGTH_GRID: usize = 20_000;

fn equal_length_nodes(h_i: &EnergyLevels, h_f: &EnergyLevels, steps: usize, bath: &Bath) -> Result<Vec<f64>> {
    let d: Vec<f64> = h_f.levels().iter().zip(h_i.levels()).map(|(a, b)| a - b).collect();
    let speed = |x: f64| -> Result<f64> {
        let g = gibbs(&h_i.interpolate(h_f, x)?, bath);
        let m: f64 = g.probs().iter().zip(&d).map(|(p, v)| p * v).sum();
        let v: f64 = g.probs().iter().zip(&d).map(|(p, v)| p * (v - m) * (v - m)).sum();
        Ok(bath.beta() * v.max(0.0).sqrt())
    };
    let mut cum = vec![0.0; LENGTH_GRID + 1];
    let mut prev = speed(0.0)?;
    for k in 1..=LENGTH_GRID {
        let cur = speed(k as f64 / LENGTH_GRID as f64)?;
        cum[k] = cum[k - 1] + 0.5 * (prev + cur) / LENGTH_GRID as f64;
        prev = cur;
    }
    let total = cum[LENGTH_GRID];
    if !(total > 0.0) {
        return Ok((1..=steps).map(|l| l as f64 / steps as f64).collect());
    }
    let mut nodes = Vec::with_capacity(steps);
    let mut k = 0;
    for l in 1..steps {
        let target = total * l as f64 / steps as f64;
        while k < LENGTH_GRID && cum[k + 1] < target {
            k += 1;
        }
        let (a, b) = (cum[k], cum[k + 1]);
        let frac = if b > a { (target - a) / (b - a) } else { 0.0 };
        nodes.push((k as f64 + frac) / LENGTH_GRID as f64);
    }
    nodes.push(1.0);
    Ok(nodes)
}

/// Configurations `h(x_1), …, h(x_L)` visited by an ITR.
pub fn itr_schedule(
    h_i: &EnergyLevels,
    h_f: &EnergyLevels,
    steps: usize,
    path: &ItrPath,
    bath: &Bath,
) -> Result<Vec<EnergyLevels>> {
    check_dim(h_i.len(), h_f.len())?;
    match path {
        ItrPath::Tabulated(configs) => {
            if configs.is_empty() {
                return param("tabulated path needs at least one configuration");
            }
            for c in configs {
                check_dim(h_i.len(), c.len())?;
            }
            let last = configs.last().unwrap();
            let off = last.levels().iter().zip(h_f.levels()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if off > 1e-12 {
                return param("tabulated path does not end at the target levels");
            }
            let mut out = configs.clone();
            *out.last_mut().unwrap() = h_f.clone();
            Ok(out)
        }
        _ if steps == 0 => param("an ITR needs at least one step"),
        ItrPath::Linear => {
            let mut out: Vec<EnergyLevels> =
                (1..steps).map(|l| h_i.interpolate(h_f, l as f64 / steps as f64)).collect::<Result<_>>()?;
            out.push(h_f.clone());
            Ok(out)
        }
        ItrPath::EqualLength => {
            let nodes = equal_length_nodes(h_i, h_f, steps, bath)?;
            let mut out: Vec<EnergyLevels> =
                nodes[..steps - 1].iter().map(|&x| h_i.interpolate(h_f, x)).collect::<Result<_>>()?;
            out.push(h_f.clone());
            Ok(out)
        }
    }
}

/// `[Therm, LT(h(x_1)), Therm, LT(h(x_2)), …, LT(h_f)]` from `h_i`.
pub fn build_itr(h_i: &EnergyLevels, h_f: &EnergyLevels, steps: usize, path: &ItrPath, bath: &Bath) -> Result<Process> {
    let schedule = itr_schedule(h_i, h_f, steps, path, bath)?;
    let mut out = Vec::with_capacity(2 * schedule.len());
    for h in schedule {
        out.push(ProcessStep::Therm);
        out.push(ProcessStep::Lt(h));
    }
    Process::new(h_i.clone(), out)
}

/// `h'_n = -kT ln q_n`, or `m_cutoff` where `q_n = 0`.
fn log_levels(q: &Distribution, bath: &Bath, m_cutoff: f64) -> Result<EnergyLevels> {
    EnergyLevels::new(q.probs().iter().map(|&p| if p > 0.0 { -bath.kt() * p.ln() } else { m_cutoff }).collect())
}

/// `kT ln(q_n / G_n(h))` for every state in the support of q.
pub fn predicted_yields(q: &Distribution, h: &EnergyLevels, bath: &Bath) -> Result<Vec<f64>> {
    check_dim(q.len(), h.len())?;
    let lg = log_gibbs(h, bath);
    Ok(q.probs().iter().zip(lg).filter(|(p, _)| **p > 0.0).map(|(p, g)| bath.kt() * (p.ln() - g)).collect())
}

/// Cyclic extraction: LT to `-kT ln q`, thermalize, linear ITR back to `h`.
pub fn build_expected_extraction(
    q: &Distribution,
    h: &EnergyLevels,
    bath: &Bath,
    steps: usize,
    m_cutoff: f64,
) -> Result<Process> {
    build_expected_extraction_with_path(q, h, bath, steps, m_cutoff, &ItrPath::Linear)
}

pub fn build_expected_extraction_with_path(
    q: &Distribution,
    h: &EnergyLevels,
    bath: &Bath,
    steps: usize,
    m_cutoff: f64,
    path: &ItrPath,
) -> Result<Process> {
    check_dim(q.len(), h.len())?;
    let hp = log_levels(q, bath, m_cutoff)?;
    let itr = build_itr(&hp, h, steps, path, bath)?;
    let lift = Process::new(h.clone(), vec![ProcessStep::Lt(hp)])?;
    lift.then(&itr)
}

/// Lift every level outside `Λ*` by `lift`, thermalize, linear ITR back to `h`.
pub fn build_eps_extraction(
    q: &Distribution,
    h: &EnergyLevels,
    bath: &Bath,
    eps: f64,
    lift: f64,
    steps: usize,
) -> Result<(Process, SubsetSolution)> {
    if !(lift > 0.0 && lift.is_finite()) {
        return param(format!("lift energy must be positive, got {lift}"));
    }
    let (_, witness) = eps_free_energy(q, h, bath, eps)?;
    let hp = lifted(h, &witness, lift)?;
    let itr = build_itr(&hp, h, steps, &ItrPath::Linear, bath)?;
    let p = Process::new(h.clone(), vec![ProcessStep::Lt(hp)])?.then(&itr)?;
    Ok((p, witness))
}

fn lifted(h: &EnergyLevels, witness: &SubsetSolution, lift: f64) -> Result<EnergyLevels> {
    EnergyLevels::new(
        h.levels().iter().enumerate().map(|(n, &e)| if witness.lambda.contains(n) { e } else { e + lift }).collect(),
    )
}

/// Erasure to state `s`: LT to `-kT ln q`, thermalize, ITR to `h^f - m δ_s`, thermalize, LT to `h^f`.
/// The ITR uses the equal-length schedule.
pub fn build_erasure(
    q: &Distribution,
    h_i: &EnergyLevels,
    h_f: &EnergyLevels,
    bath: &Bath,
    s: usize,
    m_cutoff: f64,
    steps: usize,
) -> Result<Process> {
    build_erasure_with_path(q, h_i, h_f, bath, s, m_cutoff, steps, &ItrPath::EqualLength)
}

#[allow(clippy::too_many_arguments)]
pub fn build_erasure_with_path(
    q: &Distribution,
    h_i: &EnergyLevels,
    h_f: &EnergyLevels,
    bath: &Bath,
    s: usize,
    m_cutoff: f64,
    steps: usize,
    path: &ItrPath,
) -> Result<Process> {
    check_dim(q.len(), h_i.len())?;
    check_dim(q.len(), h_f.len())?;
    if s >= q.len() {
        return Err(Error::IndexOutOfRange { index: s, n: q.len() });
    }
    let hp = log_levels(q, bath, m_cutoff)?;
    let mut hpp = h_f.levels().to_vec();
    hpp[s] -= m_cutoff;
    let hpp = EnergyLevels::new(hpp)?;
    let itr = build_itr(&hp, &hpp, steps, path, bath)?;
    let mut steps_out = vec![ProcessStep::Lt(hp)];
    steps_out.extend(itr.steps().iter().cloned());
    steps_out.push(ProcessStep::Therm);
    steps_out.push(ProcessStep::Lt(h_f.clone()));
    Process::new(h_i.clone(), steps_out)
}

/// An ε-deterministic erasure construction and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsErasure {
    pub process: Process,
    /// `1 - P(final = s)`.
    pub tau: f64,
    /// `(ε - τ)/(1 - τ)`, the smoothing used for the extraction part.
    pub eps_bar: f64,
    pub witness: SubsetSolution,
    /// Depth `E_τ` of level `s` below `h^f_s` before the final LT.
    pub well_depth: f64,
}

/// Lift levels outside `Λ*(ε̄)`, thermalize, linear ITR to `h'` (`h^f` with level `s`
/// lowered so that `G_s(h') = 1-τ`), thermalize, LT to `h^f`.
#[allow(clippy::too_many_arguments)]
pub fn build_eps_erasure(
    q: &Distribution,
    h_i: &EnergyLevels,
    h_f: &EnergyLevels,
    bath: &Bath,
    s: usize,
    eps: f64,
    tau: f64,
    lift: f64,
    steps: usize,
) -> Result<EpsErasure> {
    check_dim(q.len(), h_i.len())?;
    check_dim(q.len(), h_f.len())?;
    let n = q.len();
    if s >= n {
        return Err(Error::IndexOutOfRange { index: s, n });
    }
    if !(tau > 0.0 && tau < eps && eps < 1.0) {
        return param(format!("need 0 < tau < eps < 1, got tau={tau}, eps={eps}"));
    }
    let eps_bar = (eps - tau) / (1.0 - tau);
    let (_, witness) = eps_free_energy(q, h_i, bath, eps_bar)?;
    let hl = lifted(h_i, &witness, lift)?;
    let beta = bath.beta();
    let hs = h_f.levels()[s];
    let well_depth = if n == 1 {
        0.0
    } else {
        let others = log_sum_exp((0..n).filter(|&k| k != s).map(|k| -beta * (h_f.levels()[k] - hs)));
        bath.kt() * ((1.0 / tau - 1.0).ln() + others)
    };
    let mut hp = h_f.levels().to_vec();
    hp[s] -= well_depth;
    let hp = EnergyLevels::new(hp)?;
    let itr = build_itr(&hl, &hp, steps, &ItrPath::Linear, bath)?;
    let mut out = vec![ProcessStep::Lt(hl)];
    out.extend(itr.steps().iter().cloned());
    out.push(ProcessStep::Therm);
    out.push(ProcessStep::Lt(h_f.clone()));
    let process = Process::new(h_i.clone(), out)?;
    let tau = if n == 1 { 0.0 } else { 1.0 - gibbs(&hp, bath).probs()[s] };
    Ok(EpsErasure { process, tau, eps_bar, witness, well_depth })
}
