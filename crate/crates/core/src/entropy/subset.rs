//! Minimal-cost events of large probability.
//!
//! Both `F^ε` and `D₀^ε` ask for `min cost(Λ)` over events with `q(Λ) > 1-ε`.
//! The solver works in covering form on log-domain costs: it decides which
//! states to keep, never forming `1 - removed` (that difference loses all
//! precision once the optimum is tiny).

use std::cmp::Ordering;
use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::numeric::{compensated_sum, log_sum_exp};
use crate::thermo::{check_dim, Bath, Distribution, EnergyLevels, EventSet};

/// How much the returned objective can be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certificate {
    /// Every subset was checked.
    Exhaustive,
    /// Exact over iid type classes.
    TypeClass,
    /// Branch-and-bound with a fractional relaxation ran to completion.
    BranchAndBound,
    /// Node budget ran out; the objective is only an upper bound on the minimum.
    GreedyUpperBound,
}

impl Certificate {
    pub fn is_exact(self) -> bool {
        !matches!(self, Certificate::GreedyUpperBound)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetSolution {
    pub lambda: EventSet,
    /// The minimized `p(Λ)` or `Z_Λ`; may underflow, see `log_objective`.
    pub objective: f64,
    pub log_objective: f64,
    /// `q(Λ)`, summed in index order.
    pub kept_mass: f64,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Feasibility is `q(Λ) > 1 - ε + eta`.
    pub eta: f64,
    pub exhaustive_max: usize,
    pub node_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { eta: 0.0, exhaustive_max: 20, node_limit: 2_000_000 }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return param(format!("epsilon must lie in (0,1], got {eps}"));
    }
    Ok(())
}

/// `(F^ε, Λ*)` with `F^ε = -kT ln min_{q(Λ)>1-ε} Z_Λ(h)`.
pub fn eps_free_energy(q: &Distribution, h: &EnergyLevels, bath: &Bath, eps: f64) -> Result<(f64, SubsetSolution)> {
    eps_free_energy_with(q, h, bath, eps, &SolverOptions::default())
}

pub fn eps_free_energy_with(
    q: &Distribution,
    h: &EnergyLevels,
    bath: &Bath,
    eps: f64,
    opts: &SolverOptions,
) -> Result<(f64, SubsetSolution)> {
    check_dim(q.len(), h.len())?;
    check_eps(eps)?;
    let log_cost: Vec<f64> = h.levels().iter().map(|e| -bath.beta() * e).collect();
    let sol = minimize_kept_cost(q.probs(), &log_cost, eps, opts)?;
    Ok((-bath.kt() * sol.log_objective, sol))
}

/// `D₀^ε(q‖p) = -log2 min_{q(Λ)>1-ε} p(Λ)` in bits.
pub fn smoothed_renyi0(q: &Distribution, p: &Distribution, eps: f64) -> Result<(f64, SubsetSolution)> {
    smoothed_renyi0_with(q, p, eps, &SolverOptions::default())
}

pub fn smoothed_renyi0_with(
    q: &Distribution,
    p: &Distribution,
    eps: f64,
    opts: &SolverOptions,
) -> Result<(f64, SubsetSolution)> {
    check_dim(q.len(), p.len())?;
    check_eps(eps)?;
    let log_cost: Vec<f64> = p.probs().iter().map(|x| x.ln()).collect();
    let sol = minimize_kept_cost(q.probs(), &log_cost, eps, opts)?;
    Ok(((-sol.log_objective / LN_2).max(0.0), sol))
}

/// Unsmoothed `D₀(q‖p) = -log2 p(supp q)`.
pub fn renyi0(q: &Distribution, p: &Distribution) -> Result<f64> {
    check_dim(q.len(), p.len())?;
    let mass = compensated_sum(q.support().into_iter().map(|n| p.probs()[n]));
    Ok((-mass.log2()).max(0.0))
}

/// A group of interchangeable states.
#[derive(Debug, Clone)]
pub(crate) struct Item {
    pub q: f64,
    /// Cost per member, scaled by the caller's reference.
    pub c: f64,
    pub count: f64,
}

fn ratio_order(a: &Item, b: &Item) -> Ordering {
    // cost per unit of q, ascending; zero-cost items first
    (a.c / a.q).partial_cmp(&(b.c / b.q)).unwrap_or(Ordering::Equal)
}

/// Fractional lower bound on the cost of covering `need` more q-mass with `items[from..]`.
fn fractional_fill(items: &[Item], from: usize, need: f64) -> f64 {
    if need < 0.0 {
        return 0.0;
    }
    let mut need = need;
    let mut cost = 0.0;
    for it in &items[from..] {
        let mass = it.q * it.count;
        if mass >= need {
            return cost + it.c * need / it.q;
        }
        cost += it.c * it.count;
        need -= mass;
    }
    f64::INFINITY
}

pub(crate) enum Outcome {
    Exact(Vec<f64>),
    Budget(Vec<f64>),
    Infeasible,
}

/// Bounded-multiplicity covering knapsack: choose `k_j ≤ count_j` minimizing `Σ k_j c_j`
/// subject to `Σ k_j q_j > target`. `items` must be sorted by `ratio_order`.
pub(crate) fn branch_and_bound(items: &[Item], target: f64, node_limit: usize) -> Outcome {
    struct Search<'a> {
        items: &'a [Item],
        target: f64,
        best: f64,
        best_k: Option<Vec<f64>>,
        k: Vec<f64>,
        nodes: usize,
        limit: usize,
        aborted: bool,
    }

    impl Search<'_> {
        fn go(&mut self, j: usize, covered: f64, cost: f64) {
            if self.aborted {
                return;
            }
            self.nodes += 1;
            if self.nodes > self.limit {
                self.aborted = true;
                return;
            }
            if j == self.items.len() {
                return;
            }
            let it = &self.items[j];
            let need = self.target - covered;
            let kmax = it.count.min((need / it.q).floor() + 1.0).max(0.0);
            let mut k = kmax;
            loop {
                let cov = covered + k * it.q;
                let cst = cost + k * it.c;
                if cov > self.target {
                    if cst < self.best {
                        self.best = cst;
                        let mut kk = self.k.clone();
                        kk[j] = k;
                        self.best_k = Some(kk);
                    }
                } else {
                    let lb = cst + fractional_fill(self.items, j + 1, self.target - cov);
                    if lb >= self.best {
                        // smaller k only raises the bound
                        break;
                    }
                    self.k[j] = k;
                    self.go(j + 1, cov, cst);
                    self.k[j] = 0.0;
                    if self.aborted {
                        return;
                    }
                }
                if k < 1.0 {
                    break;
                }
                k -= 1.0;
            }
        }
    }

    let greedy = greedy_fill(items, target);
    let Some(greedy) = greedy else { return Outcome::Infeasible };
    let gcost: f64 = greedy.iter().zip(items).map(|(k, it)| k * it.c).sum();
    let mut s = Search {
        items,
        target,
        best: gcost,
        best_k: Some(greedy.clone()),
        k: vec![0.0; items.len()],
        nodes: 0,
        limit: node_limit,
        aborted: false,
    };
    s.go(0, 0.0, 0.0);
    let best = s.best_k.unwrap_or(greedy);
    if s.aborted {
        Outcome::Budget(best)
    } else {
        Outcome::Exact(best)
    }
}

/// Take items in ratio order, each as far as needed.
pub(crate) fn greedy_fill(items: &[Item], target: f64) -> Option<Vec<f64>> {
    let mut k = vec![0.0; items.len()];
    let mut covered = 0.0;
    for (j, it) in items.iter().enumerate() {
        if covered > target {
            break;
        }
        let need = target - covered;
        k[j] = it.count.min((need / it.q).floor() + 1.0).max(0.0);
        covered += k[j] * it.q;
    }
    (covered > target).then_some(k)
}

/// Minimize `Σ_{n∈Λ} exp(log_cost_n)` subject to `Σ_{n∈Λ} q_n > 1 - ε + eta`.
pub fn minimize_kept_cost(q: &[f64], log_cost: &[f64], eps: f64, opts: &SolverOptions) -> Result<SubsetSolution> {
    check_dim(q.len(), log_cost.len())?;
    let n = q.len();
    let target = 1.0 - eps + opts.eta;
    let kept_mass = |kept: &[usize]| compensated_sum(kept.iter().map(|&i| q[i]));

    // zero-cost states are kept for free; zero-probability states are never worth keeping
    let free: Vec<usize> = (0..n).filter(|&i| q[i] > 0.0 && log_cost[i] == f64::NEG_INFINITY).collect();
    let decide: Vec<usize> = (0..n).filter(|&i| q[i] > 0.0 && log_cost[i] > f64::NEG_INFINITY).collect();

    if kept_mass(&(0..n).filter(|&i| q[i] > 0.0).collect::<Vec<_>>()) <= target {
        return Err(Error::InvalidParameter(format!(
            "no event satisfies q(Λ) > {target}; epsilon too small for the slack"
        )));
    }

    let finish = |mut kept: Vec<usize>, certificate: Certificate| -> Result<SubsetSolution> {
        kept.sort_unstable();
        let log_objective = log_sum_exp(kept.iter().map(|&i| log_cost[i]));
        let kept_mass = kept_mass(&kept);
        Ok(SubsetSolution {
            lambda: EventSet::new(kept, n)?,
            objective: log_objective.exp(),
            log_objective,
            kept_mass,
            certificate,
        })
    };

    if kept_mass(&free) > target {
        return finish(free, Certificate::Exhaustive);
    }

    if decide.len() <= opts.exhaustive_max {
        let lmax = decide.iter().map(|&i| log_cost[i]).fold(f64::NEG_INFINITY, f64::max);
        let scaled: Vec<f64> = decide.iter().map(|&i| (log_cost[i] - lmax).exp()).collect();
        let mut best: Option<(f64, u32)> = None;
        let mut kept = Vec::with_capacity(n);
        for mask in 0u32..(1u32 << decide.len()) {
            let mut cost = 0.0;
            for (b, s) in scaled.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    cost += s;
                }
            }
            if let Some((bc, _)) = best {
                if cost >= bc {
                    continue;
                }
            }
            kept.clear();
            kept.extend(free.iter().copied());
            kept.extend(decide.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i));
            kept.sort_unstable();
            if kept_mass(&kept) > target {
                best = Some((cost, mask));
            }
        }
        let (_, mask) = best.expect("full support set is feasible");
        let mut kept = free.clone();
        kept.extend(decide.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i));
        return finish(kept, Certificate::Exhaustive);
    }

    // group interchangeable states, then branch and bound over groups
    let mut order = decide.clone();
    order.sort_by(|&a, &b| {
        (log_cost[a] - q[a].ln())
            .partial_cmp(&(log_cost[b] - q[b].ln()))
            .unwrap_or(Ordering::Equal)
            .then(q[b].partial_cmp(&q[a]).unwrap_or(Ordering::Equal))
    });
    let mut groups: Vec<(Vec<usize>, f64, f64)> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some((members, gq, gl))
                if (q[i] - *gq).abs() <= 1e-13 * gq.abs() && (log_cost[i] - *gl).abs() <= 1e-13 * (1.0 + gl.abs()) =>
            {
                members.push(i)
            }
            _ => groups.push((vec![i], q[i], log_cost[i])),
        }
    }
    // scale costs by the fractional optimum so the relevant ones are O(1)
    let free_mass = kept_mass(&free);
    let reference = {
        let mut need = target - free_mass;
        let mut logs = Vec::new();
        for (members, gq, gl) in &groups {
            let mass = gq * members.len() as f64;
            if mass >= need {
                logs.push(gl + (need / gq).ln());
                break;
            }
            logs.push(gl + (members.len() as f64).ln());
            need -= mass;
        }
        log_sum_exp(logs)
    };
    let items: Vec<Item> = groups
        .iter()
        .map(|(members, gq, gl)| Item { q: *gq, c: (gl - reference).exp(), count: members.len() as f64 })
        .collect();
    let mut sorted: Vec<usize> = (0..items.len()).collect();
    sorted.sort_by(|&a, &b| ratio_order(&items[a], &items[b]));
    let sorted_items: Vec<Item> = sorted.iter().map(|&g| items[g].clone()).collect();

    let (counts, certificate) = match branch_and_bound(&sorted_items, target - free_mass, opts.node_limit) {
        Outcome::Exact(k) => (k, Certificate::BranchAndBound),
        Outcome::Budget(k) => (k, Certificate::GreedyUpperBound),
        Outcome::Infeasible => unreachable!("full support was checked feasible"),
    };
    let mut kept = free.clone();
    for (pos, &g) in sorted.iter().enumerate() {
        let take = counts[pos] as usize;
        kept.extend(groups[g].0.iter().take(take).copied());
    }
    let sol = finish(kept.clone(), certificate)?;
    if sol.kept_mass > target {
        return Ok(sol);
    }
    // float boundary: the incremental sum disagreed with the index-order sum; keep the next best state
    let mut rest: Vec<usize> = order.iter().copied().filter(|i| !kept.contains(i)).collect();
    rest.reverse();
    while sol_mass(&kept, q) <= target {
        match rest.pop() {
            Some(i) => kept.push(i),
            None => break,
        }
    }
    finish(kept, Certificate::GreedyUpperBound)
}

fn sol_mass(kept: &[usize], q: &[f64]) -> f64 {
    let mut k = kept.to_vec();
    k.sort_unstable();
    compensated_sum(k.iter().map(|&i| q[i]))
}
