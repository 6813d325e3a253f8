//! Scalar functionals of distributions: relative entropy and its moments,
//! ε-free energy, smoothed Rényi-0 divergence, and (ε,δ)-deterministic sets.

mod subset;
mod variable;

pub use subset::{
    eps_free_energy, eps_free_energy_with, minimize_kept_cost, renyi0, smoothed_renyi0, smoothed_renyi0_with,
    Certificate, SolverOptions, SubsetSolution,
};
pub(crate) mod subset_internals {
    pub(crate) use super::subset::{branch_and_bound, Item, Outcome};
}

pub use variable::{delta_set, mass_within, max_eps, DeltaSetResult, DiscreteRandomVariable};

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::thermo::{check_dim, log_gibbs, Bath, Distribution, EnergyLevels};

/// Mean, standard deviation and centered absolute third moment of `log2(q/p)` under `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogRatioMoments {
    pub mean: f64,
    pub sigma: f64,
    pub rho: f64,
}

/// `(q_n, log2(q_n/p_n))` over the support of q, given `ln p`.
pub(crate) fn log2_ratios(q: &Distribution, log_p: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_dim(q.len(), log_p.len())?;
    let mut out = Vec::with_capacity(q.len());
    for (n, (&qn, &lp)) in q.probs().iter().zip(log_p).enumerate() {
        if qn == 0.0 {
            continue;
        }
        if lp == f64::NEG_INFINITY {
            return Err(Error::SupportViolation(n));
        }
        out.push((qn, (qn.ln() - lp) / LN_2));
    }
    Ok(out)
}

pub(crate) fn moments_from_log_p(q: &Distribution, log_p: &[f64]) -> Result<LogRatioMoments> {
    let terms = log2_ratios(q, log_p)?;
    let mean = compensated_sum(terms.iter().map(|(w, l)| w * l));
    let var = compensated_sum(terms.iter().map(|(w, l)| w * (l - mean).powi(2)));
    let rho = compensated_sum(terms.iter().map(|(w, l)| w * (l - mean).abs().powi(3)));
    Ok(LogRatioMoments { mean, sigma: var.max(0.0).sqrt(), rho })
}

fn ln_probs(p: &Distribution) -> Vec<f64> {
    p.probs().iter().map(|x| x.ln()).collect()
}

pub fn log_ratio_moments(q: &Distribution, p: &Distribution) -> Result<LogRatioMoments> {
    moments_from_log_p(q, &ln_probs(p))
}

/// `D(q‖p)` in bits.
pub fn relative_entropy(q: &Distribution, p: &Distribution) -> Result<f64> {
    Ok(log_ratio_moments(q, p)?.mean)
}

/// `σ(q‖p)` in bits.
pub fn relative_sigma(q: &Distribution, p: &Distribution) -> Result<f64> {
    Ok(log_ratio_moments(q, p)?.sigma)
}

/// `ρ(q‖p)` in bits³.
pub fn relative_rho(q: &Distribution, p: &Distribution) -> Result<f64> {
    Ok(log_ratio_moments(q, p)?.rho)
}

/// Shannon entropy in bits.
pub fn shannon_entropy(q: &Distribution) -> f64 {
    -compensated_sum(q.probs().iter().filter(|&&p| p > 0.0).map(|p| p * p.log2()))
}

/// `A(q,h) = kT ln2 · D(q‖G(h))`.
pub fn expected_work_content(q: &Distribution, h: &EnergyLevels, bath: &Bath) -> Result<f64> {
    let m = moments_from_log_p(q, &log_gibbs(h, bath))?;
    Ok(bath.kt() * LN_2 * m.mean)
}
