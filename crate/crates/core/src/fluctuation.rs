//! Fluctuation statements: the Crooks-type sandwich, the thermal-start bound,
//! intrinsic yield fluctuations and their approach along the optimal family.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::entropy::{delta_set, eps_free_energy, log_ratio_moments, mass_within, DiscreteRandomVariable};
use crate::error::Result;
use crate::process::{
    build_eps_extraction, build_expected_extraction, exact_work_distribution_with, path_law, predicted_yields,
    EpsErasure, Process,
};
use crate::thermo::{free_energy, gibbs, Bath, Distribution, EnergyLevels};

/// One grid point of the Crooks-type check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrooksReport {
    pub w: f64,
    pub delta: f64,
    /// `P(|W - w| ≤ δ)` for the forward process started in `G(h^i)`.
    pub p_forward: f64,
    /// `P(|W_rev + w| ≤ δ)` for the reversed process started in `G(h^f)`.
    pub p_reverse: f64,
    /// `None` when either mass vanishes.
    pub ratio: Option<f64>,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub ok: bool,
}

const WINDOW_TOL: f64 = 1e-12;
const RATIO_SLACK: f64 = 1e-10;

/// Distinct forward work values and the midpoints between neighbours.
pub fn default_w_grid(forward: &DiscreteRandomVariable) -> Vec<f64> {
    let v = forward.values();
    let mut out = Vec::with_capacity(2 * v.len());
    for (i, &x) in v.iter().enumerate() {
        out.push(x);
        if i + 1 < v.len() {
            out.push(0.5 * (x + v[i + 1]));
        }
    }
    out
}

/// Checks `e^{β(w-ΔF)-βδ} ≤ p_f/p_r ≤ e^{β(w-ΔF)+βδ}` on each grid point by exhaustive path enumeration.
pub fn crooks_check(
    process: &Process,
    bath: &Bath,
    w_grid: Option<&[f64]>,
    delta: f64,
    path_cap: usize,
) -> Result<Vec<CrooksReport>> {
    let h_i = process.initial_levels();
    let h_f = process.final_levels();
    let forward = path_law(process, &gibbs(h_i, bath), bath, path_cap)?;
    let rev = process.reverse();
    let reverse = path_law(&rev, &gibbs(h_f, bath), bath, path_cap)?;
    let df = free_energy(h_f, bath) - free_energy(h_i, bath);
    let grid = match w_grid {
        Some(g) => g.to_vec(),
        None => default_w_grid(&forward),
    };
    let scale = 1.0 + forward.min().abs().max(forward.max().abs());
    let beta = bath.beta();
    Ok(grid
        .into_iter()
        .map(|w| {
            let tol = WINDOW_TOL * (scale + w.abs());
            let p_forward = mass_within(&forward, w, delta, tol);
            let p_reverse = mass_within(&reverse, -w, delta, tol);
            let lower_bound = (beta * (w - df) - beta * delta).exp();
            let upper_bound = (beta * (w - df) + beta * delta).exp();
            let (ratio, ok) = if p_forward > 0.0 && p_reverse > 0.0 {
                let r = p_forward / p_reverse;
                (Some(r), r >= lower_bound * (1.0 - RATIO_SLACK) && r <= upper_bound * (1.0 + RATIO_SLACK))
            } else {
                (None, p_forward == 0.0 && p_reverse == 0.0)
            };
            CrooksReport { w, delta, p_forward, p_reverse, ratio, lower_bound, upper_bound, ok }
        })
        .collect())
}

pub fn crooks_csv(reports: &[CrooksReport]) -> String {
    use crate::csv::{fmt_f64, fmt_opt};
    let mut s = String::from("w,delta,p_forward,p_reverse,ratio,lower,upper,ok\n");
    for r in reports {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt_f64(r.w),
            fmt_f64(r.delta),
            fmt_f64(r.p_forward),
            fmt_f64(r.p_reverse),
            fmt_opt(r.ratio),
            fmt_f64(r.lower_bound),
            fmt_f64(r.upper_bound),
            r.ok
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalStartReport {
    /// `inf Δ_δ^ε(W)`, `+inf` when the set is empty.
    pub inf_delta: f64,
    /// `kT ln(1-ε) + F(h^f) - F(h^i) - δ`.
    pub bound: f64,
    pub ok: bool,
}

/// For a process started in `G(h^i)`: `inf Δ_δ^ε(W) ≥ kT ln(1-ε) + ΔF - δ`.
pub fn thermal_start_bound(
    process: &Process,
    bath: &Bath,
    eps: f64,
    delta: f64,
    atom_cap: usize,
) -> Result<ThermalStartReport> {
    let h_i = process.initial_levels();
    let law = exact_work_distribution_with(process, &gibbs(h_i, bath), bath, atom_cap)?.law;
    let inf_delta = delta_set(&law, eps, delta)?.infimum;
    let df = free_energy(process.final_levels(), bath) - free_energy(h_i, bath);
    let bound = bath.kt() * (1.0 - eps).ln() + df - delta;
    let slack = 1e-12 * (1.0 + bound.abs());
    Ok(ThermalStartReport { inf_delta, bound, ok: inf_delta >= bound - slack })
}

/// `σ(W_yield) = kT ln2 · σ(q‖G(h))`.
pub fn yield_fluctuation_sigma(q: &Distribution, h: &EnergyLevels, bath: &Bath) -> Result<f64> {
    Ok(bath.kt() * LN_2 * log_ratio_moments(q, &gibbs(h, bath))?.sigma)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub steps: usize,
    pub m_cutoff: f64,
    pub mean_yield: f64,
    pub std_yield: f64,
    /// Yield mass within `radius` of some `kT ln(q_n/G_n(h))`.
    pub mass_near_predicted: f64,
    pub atoms: usize,
}

/// Exact yield statistics along the optimal-expected family indexed by `(L, m_cutoff)`.
pub fn optimal_sequence_noise_probe(
    q: &Distribution,
    h: &EnergyLevels,
    bath: &Bath,
    steps_list: &[usize],
    cutoff_list: &[f64],
    radius: f64,
    atom_cap: usize,
) -> Result<Vec<ProbeRow>> {
    let predicted = predicted_yields(q, h, bath)?;
    let mut rows = Vec::new();
    for &m_cutoff in cutoff_list {
        for &steps in steps_list {
            let p = build_expected_extraction(q, h, bath, steps, m_cutoff)?;
            let y = exact_work_distribution_with(&p, q, bath, atom_cap)?.yield_law();
            let near: f64 = y
                .atoms()
                .filter(|(v, _)| predicted.iter().any(|c| (v - c).abs() <= radius))
                .map(|(_, p)| p)
                .sum();
            rows.push(ProbeRow {
                steps,
                m_cutoff,
                mean_yield: y.mean(),
                std_yield: y.std_dev(),
                mass_near_predicted: near,
                atoms: y.len(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumExtraction {
    /// `sup Δ_δ^ε` of the yield law, `-inf` when empty.
    pub achieved: f64,
    /// `-kT ln(1-ε)`.
    pub ceiling: f64,
    /// `-kT ln inf_{G_Λ>1-ε} G_Λ(h)`.
    pub floor: f64,
}

/// Runs the lift-and-ITR construction on a system that starts in `G(h)`.
pub fn equilibrium_extraction(
    h: &EnergyLevels,
    bath: &Bath,
    eps: f64,
    delta: f64,
    lift: f64,
    steps: usize,
    atom_cap: usize,
) -> Result<EquilibriumExtraction> {
    let g = gibbs(h, bath);
    let (p, witness) = build_eps_extraction(&g, h, bath, eps, lift, steps)?;
    let y = exact_work_distribution_with(&p, &g, bath, atom_cap)?.yield_law();
    let achieved = delta_set(&y, eps, delta)?.supremum();
    let ceiling = -bath.kt() * (1.0 - eps).ln();
    let floor = -bath.kt() * witness.kept_mass.ln();
    Ok(EquilibriumExtraction { achieved, ceiling, floor })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsErasureReport {
    /// `inf Δ_δ^ε` of the cost, `+inf` when the set is empty.
    pub inf_delta: f64,
    /// `h^f_s - F^ε(q,h^i) - 8δ + kT ln[(1-ε)(1-τ)]`, valid for `τ < ε ≤ 1-1/√2`.
    pub lower: f64,
    /// `h^f_s + kT ln(1-τ) - F^ε̄(q,h^i) + slack`, what the construction reaches.
    pub upper: f64,
    pub tau: f64,
    /// `P(final = s)`.
    pub final_mass: f64,
    pub ok: bool,
}

/// Brackets the (ε,δ)-deterministic cost of a τ-approximate erasure built by `build_eps_erasure`.
#[allow(clippy::too_many_arguments)]
pub fn eps_erasure_check(
    built: &EpsErasure,
    q: &Distribution,
    h_i: &EnergyLevels,
    h_f: &EnergyLevels,
    bath: &Bath,
    s: usize,
    eps: f64,
    delta: f64,
    slack: f64,
    atom_cap: usize,
) -> Result<EpsErasureReport> {
    let law = exact_work_distribution_with(&built.process, q, bath, atom_cap)?.law;
    let inf_delta = delta_set(&law, eps, delta)?.infimum;
    let kt = bath.kt();
    let hs = h_f.levels()[s];
    let (f_eps, _) = eps_free_energy(q, h_i, bath, eps)?;
    let (f_bar, _) = eps_free_energy(q, h_i, bath, built.eps_bar)?;
    let tau = built.tau;
    let lower = hs - f_eps - 8.0 * delta + kt * ((1.0 - eps) * (1.0 - tau)).ln();
    let upper = hs + kt * (1.0 - tau).ln() - f_bar + slack;
    let final_mass = built.process.final_state_distribution(q, bath)?.probs()[s];
    let tol = 1e-12 * (1.0 + lower.abs().max(upper.abs()));
    let ok = inf_delta >= lower - tol && inf_delta <= upper + tol && final_mass >= 1.0 - tau - 1e-12;
    Ok(EpsErasureReport { inf_delta, lower, upper, tau, final_mass, ok })
}
