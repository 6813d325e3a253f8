//! `D₀^ε` of iid products, evaluated over type classes.

use std::cmp::Ordering;
use std::f64::consts::LN_2;

use serde::Serialize;

use super::normal::{std_normal_cdf, std_normal_quantile};
use crate::entropy::{log_ratio_moments, Certificate, LogRatioMoments, SolverOptions};
use crate::error::{param, Error, Result};
use crate::numeric::{compensated_sum, log_sum_exp, CompensatedSum};
use crate::thermo::{gibbs, Bath, Distribution, EnergyLevels};

/// Best published universal Berry–Esseen constant.
pub const BERRY_ESSEEN_C: f64 = 0.4748;

/// Above this many type classes the exact evaluator refuses.
pub const DEFAULT_CLASS_CAP: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IidInstance {
    pub q: Distribution,
    pub r: Distribution,
    pub m: usize,
    pub eps: f64,
}

impl IidInstance {
    pub fn new(q: Distribution, r: Distribution, m: usize, eps: f64) -> Result<Self> {
        crate::thermo::check_dim(q.len(), r.len())?;
        if m == 0 {
            return param("copy count m must be at least 1");
        }
        if !(eps > 0.0 && eps < 1.0) {
            return param(format!("epsilon must lie in (0,1), got {eps}"));
        }
        for (n, (&a, &b)) in q.probs().iter().zip(r.probs()).enumerate() {
            if a > 0.0 && b == 0.0 {
                return Err(Error::SupportViolation(n));
            }
        }
        Ok(IidInstance { q, r, m, eps })
    }

    pub fn with_m(&self, m: usize) -> Result<Self> {
        IidInstance::new(self.q.clone(), self.r.clone(), m, self.eps)
    }

    pub fn moments(&self) -> LogRatioMoments {
        log_ratio_moments(&self.q, &self.r).expect("validated support")
    }

    /// `C(m+d-1, d-1)`.
    pub fn class_count(&self) -> f64 {
        let d = self.q.len();
        (libm::lgamma((self.m + d) as f64) - libm::lgamma(self.m as f64 + 1.0) - libm::lgamma(d as f64)).exp().round()
    }
}

/// One histogram over the support of q.
#[derive(Debug, Clone)]
struct TypeClass {
    /// ln of the number of sequences.
    log_count: f64,
    log_q: f64,
    log_r: f64,
    /// `Σ n_i log2(q_i/r_i)`.
    log2_ratio: f64,
}

impl TypeClass {
    fn log_q_mass(&self) -> f64 {
        self.log_count + self.log_q
    }
}

fn compositions(m: usize, d: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(left: usize, slot: usize, buf: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if slot + 1 == buf.len() {
            buf[slot] = left;
            visit(buf);
            return;
        }
        for k in 0..=left {
            buf[slot] = k;
            rec(left - k, slot + 1, buf, visit);
        }
    }
    let mut buf = vec![0; d];
    rec(m, 0, &mut buf, visit);
}

/// Type classes over the support of q only; other classes carry no q-mass and are never kept.
fn type_classes(inst: &IidInstance, cap: usize) -> Result<Vec<TypeClass>> {
    let support = inst.q.support();
    let d = support.len();
    if d > 4 {
        return param(format!("type-class evaluation supports at most 4 outcomes in supp(q), got {d}"));
    }
    let count = (libm::lgamma((inst.m + d) as f64) - libm::lgamma(inst.m as f64 + 1.0) - libm::lgamma(d as f64))
        .exp()
        .round();
    if count > cap as f64 {
        return Err(Error::SizeCap(format!("{count} type classes exceed the cap {cap}")));
    }
    let lq: Vec<f64> = support.iter().map(|&i| inst.q.probs()[i].ln()).collect();
    let lr: Vec<f64> = support.iter().map(|&i| inst.r.probs()[i].ln()).collect();
    let lgm = libm::lgamma(inst.m as f64 + 1.0);
    let mut out = Vec::with_capacity(count as usize);
    compositions(inst.m, d, &mut |n| {
        let mut log_count = lgm;
        let (mut log_q, mut log_r) = (0.0, 0.0);
        for (i, &k) in n.iter().enumerate() {
            if k > 0 {
                log_count -= libm::lgamma(k as f64 + 1.0);
                log_q += k as f64 * lq[i];
                log_r += k as f64 * lr[i];
            }
        }
        out.push(TypeClass { log_count, log_q, log_r, log2_ratio: (log_q - log_r) / LN_2 });
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IidValue {
    /// `D₀^ε(q^{⊗m}‖r^{⊗m})` in bits.
    pub bits: f64,
    /// `q^{⊗m}` mass of the optimal event.
    pub kept_mass: f64,
    pub classes: usize,
    pub certificate: Certificate,
}

pub fn d0_eps_iid_exact(inst: &IidInstance) -> Result<IidValue> {
    d0_eps_iid_exact_with(inst, &SolverOptions::default(), DEFAULT_CLASS_CAP)
}

/// Keeps sequences in ascending `r/q` order. The fractional optimum bounds the integer one
/// from below; when the one partially kept class is too light to matter, greedy is exact.
/// Otherwise a bounded-multiplicity branch and bound over classes settles it.
pub fn d0_eps_iid_exact_with(inst: &IidInstance, opts: &SolverOptions, class_cap: usize) -> Result<IidValue> {
    let mut classes = type_classes(inst, class_cap)?;
    classes.sort_by(|a, b| {
        (a.log_r - a.log_q)
            .partial_cmp(&(b.log_r - b.log_q))
            .unwrap_or(Ordering::Equal)
            .then(b.log_q.partial_cmp(&a.log_q).unwrap_or(Ordering::Equal))
    });
    let n_classes = classes.len();
    let target = 1.0 - inst.eps + opts.eta;

    // full classes while they do not reach the target
    let mut acc = CompensatedSum::new();
    let mut j_star = None;
    for (j, c) in classes.iter().enumerate() {
        let mass = c.log_q_mass().exp();
        if acc.value() + mass > target {
            j_star = Some(j);
            break;
        }
        acc.add(mass);
    }
    let Some(j) = j_star else {
        return param(format!("no event of q-mass above {target}"));
    };
    let before = acc.value();
    let c = &classes[j];
    let need = target - before;
    let q_out = c.log_q.exp();
    let count = c.log_count.exp();

    let full_logs = || classes[..j].iter().map(|c| c.log_count + c.log_r);
    let log_lp = log_sum_exp(full_logs().chain(std::iter::once(c.log_r + (need / q_out).ln())));
    let k_partial = if q_out > 0.0 { ((need / q_out).floor() + 1.0).min(count) } else { count };
    let log_greedy = log_sum_exp(full_logs().chain(std::iter::once(c.log_r + k_partial.ln())));
    let kept_greedy = before + k_partial * q_out;

    // gap between greedy and the relaxation is below one sequence of class j
    if c.log_r - log_lp < (1e-15f64).ln() || log_greedy - log_lp <= 1e-15 {
        return Ok(IidValue {
            bits: (-log_greedy / LN_2).max(0.0),
            kept_mass: kept_greedy,
            classes: n_classes,
            certificate: Certificate::TypeClass,
        });
    }

    // integer search over classes; only when the numbers are representable
    let representable = classes.iter().all(|c| c.log_count < (1e7f64).ln())
        && classes.iter().all(|c| c.log_q > -700.0 && c.log_r > -700.0);
    if representable {
        use crate::entropy::subset_internals::{branch_and_bound, Item, Outcome};
        let items: Vec<Item> = classes
            .iter()
            .map(|c| Item { q: c.log_q.exp(), c: (c.log_r - log_lp).exp(), count: c.log_count.exp().round() })
            .collect();
        let outcome = branch_and_bound(&items, target, opts.node_limit);
        let (k, cert) = match outcome {
            Outcome::Exact(k) => (k, Certificate::TypeClass),
            Outcome::Budget(k) => (k, Certificate::GreedyUpperBound),
            Outcome::Infeasible => return param("type classes cannot reach the target mass"),
        };
        let log_cost = log_sum_exp(
            k.iter().zip(&classes).filter(|(k, _)| **k > 0.0).map(|(k, c)| k.ln() + c.log_r),
        );
        let kept = compensated_sum(k.iter().zip(&items).map(|(k, it)| k * it.q));
        return Ok(IidValue { bits: (-log_cost / LN_2).max(0.0), kept_mass: kept, classes: n_classes, certificate: cert });
    }

    Ok(IidValue {
        bits: (-log_greedy / LN_2).max(0.0),
        kept_mass: kept_greedy,
        classes: n_classes,
        certificate: Certificate::GreedyUpperBound,
    })
}

/// Berry–Esseen slack `Cρ/(σ³√m)`.
pub fn berry_esseen_slack(moments: &LogRatioMoments, m: usize, c: f64) -> f64 {
    c * moments.rho / (moments.sigma.powi(3) * (m as f64).sqrt())
}

/// Lower bound valid for the pair `(y, m)` when `ε > b + Φ(y)`.
pub fn lower_sandwich(moments: &LogRatioMoments, m: usize, eps: f64, c: f64) -> Option<f64> {
    let b = berry_esseen_slack(moments, m, c);
    let p = eps - b - 1.0 / m as f64;
    if !(p > 0.0 && p < 1.0) {
        return None;
    }
    let y = std_normal_quantile(p).ok()?;
    if !(eps > b + std_normal_cdf(y)) {
        return None;
    }
    let mf = m as f64;
    Some(mf * moments.mean + y * moments.sigma * mf.sqrt() - (1.0 - std_normal_cdf(y) + b).log2())
}

/// Upper bound valid for the pair `(x, m)` when `Φ(x) > ε + b`.
pub fn upper_sandwich(moments: &LogRatioMoments, m: usize, eps: f64, c: f64) -> Option<f64> {
    let b = berry_esseen_slack(moments, m, c);
    let p = eps + b + 1.0 / m as f64;
    if !(p > 0.0 && p < 1.0) {
        return None;
    }
    let x = std_normal_quantile(p).ok()?;
    let gap = std_normal_cdf(x) - eps - b;
    if !(gap > 0.0) {
        return None;
    }
    let mf = m as f64;
    Some(mf * moments.mean + x * moments.sigma * mf.sqrt() - gap.log2())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub m: usize,
    pub exact: f64,
    pub certificate: Certificate,
    pub first_order: f64,
    pub second_order: f64,
    /// `None` when the feasibility condition fails at this m.
    pub lower_sandwich: Option<f64>,
    pub upper_sandwich: Option<f64>,
    /// `(exact - first_order)/√m`.
    pub residual: f64,
    /// `Φ⁻¹(ε)σ`.
    pub target: f64,
}

impl ExpansionReport {
    /// Lower strictly below, upper from above; vacuous where not applicable.
    pub fn sandwich_holds(&self) -> bool {
        self.lower_sandwich.is_none_or(|l| l < self.exact) && self.upper_sandwich.is_none_or(|u| self.exact <= u)
    }
}

pub fn d0_eps_expansion(inst: &IidInstance) -> Result<ExpansionReport> {
    d0_eps_expansion_with(inst, BERRY_ESSEEN_C)
}

pub fn d0_eps_expansion_with(inst: &IidInstance, c: f64) -> Result<ExpansionReport> {
    let mo = inst.moments();
    let exact = d0_eps_iid_exact(inst)?;
    let mf = inst.m as f64;
    let phi_inv = std_normal_quantile(inst.eps)?;
    let first_order = mf * mo.mean;
    let (lower, upper) = if mo.sigma > 0.0 {
        (lower_sandwich(&mo, inst.m, inst.eps, c), upper_sandwich(&mo, inst.m, inst.eps, c))
    } else {
        // r = c·q on supp(q): the degenerate bracket
        (Some(first_order), Some(first_order - (1.0 - inst.eps).log2()))
    };
    let mut rep = ExpansionReport {
        m: inst.m,
        exact: exact.bits,
        certificate: exact.certificate,
        first_order,
        second_order: first_order + mf.sqrt() * phi_inv * mo.sigma,
        lower_sandwich: lower,
        upper_sandwich: upper,
        residual: (exact.bits - first_order) / mf.sqrt(),
        target: phi_inv * mo.sigma,
    };
    if mo.sigma == 0.0 {
        // the degenerate lower bound is not strict
        rep.lower_sandwich = lower.map(|l| l - 1e-12 * (1.0 + l.abs()));
    }
    Ok(rep)
}

pub fn expansion_csv(rows: &[ExpansionReport]) -> String {
    use crate::csv::{fmt_f64, fmt_opt};
    let mut s = String::from("m,exact,first,second,lower,upper,residual\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.m,
            fmt_f64(r.exact),
            fmt_f64(r.first_order),
            fmt_f64(r.second_order),
            fmt_opt(r.lower_sandwich),
            fmt_opt(r.upper_sandwich),
            fmt_f64(r.residual)
        ));
    }
    s
}

/// `q^{⊗m}` masses of `{Σ log2(q/r) > mD + xσ√m}` and of its complement.
pub fn typical_set_masses(inst: &IidInstance, x: f64) -> Result<(f64, f64)> {
    let mo = inst.moments();
    if !(mo.sigma > 0.0) {
        return param("typical sets need sigma(q||r) > 0");
    }
    let mf = inst.m as f64;
    let threshold = mf * mo.mean + x * mo.sigma * mf.sqrt();
    let classes = type_classes(inst, DEFAULT_CLASS_CAP)?;
    let mut over = CompensatedSum::new();
    let mut under = CompensatedSum::new();
    for c in &classes {
        let mass = c.log_q_mass().exp();
        if c.log2_ratio > threshold {
            over.add(mass);
        } else {
            under.add(mass);
        }
    }
    Ok((over.value(), under.value()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IidWork {
    /// `m·A(q,h)`.
    pub a_m: f64,
    /// `√m·kT ln2·σ(q‖G(h))`.
    pub sigma_m: f64,
    /// `kT ln2 [mD + √m Φ⁻¹(ε) σ]`.
    pub aeps_second_order: f64,
}

pub fn iid_work_quantities(q: &Distribution, h: &EnergyLevels, bath: &Bath, m: usize, eps: f64) -> Result<IidWork> {
    if m == 0 {
        return param("copy count m must be at least 1");
    }
    let mo = log_ratio_moments(q, &gibbs(h, bath))?;
    let mf = m as f64;
    let unit = bath.kt() * LN_2;
    Ok(IidWork {
        a_m: unit * mf * mo.mean,
        sigma_m: unit * mf.sqrt() * mo.sigma,
        aeps_second_order: unit * (mf * mo.mean + mf.sqrt() * std_normal_quantile(eps)? * mo.sigma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::smoothed_renyi0;
    use approx::assert_relative_eq;

    fn d(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    fn base(m: usize) -> IidInstance {
        IidInstance::new(d(&[0.3, 0.7]), d(&[0.5, 0.5]), m, 0.05).unwrap()
    }

    fn product(p: &Distribution, m: usize) -> Distribution {
        let mut v = vec![1.0];
        for _ in 0..m {
            v = v.iter().flat_map(|a| p.probs().iter().map(move |b| a * b)).collect();
        }
        Distribution::new(v).unwrap()
    }

    #[test]
    fn m_one_matches_generic_solver() {
        let inst = IidInstance::new(d(&[0.2, 0.5, 0.3]), d(&[0.4, 0.4, 0.2]), 1, 0.25).unwrap();
        let (g, _) = smoothed_renyi0(&inst.q, &inst.r, inst.eps).unwrap();
        assert_relative_eq!(d0_eps_iid_exact(&inst).unwrap().bits, g, epsilon = 1e-12);
    }

    #[test]
    fn two_copies_match_explicit_product() {
        let inst = base(2);
        let (g, _) = smoothed_renyi0(&product(&inst.q, 2), &product(&inst.r, 2), 0.05).unwrap();
        assert_relative_eq!(d0_eps_iid_exact(&inst).unwrap().bits, g, epsilon = 1e-12);
    }

    #[test]
    fn identical_marginals_bounded() {
        for m in [1, 5, 40] {
            let inst = IidInstance::new(d(&[0.6, 0.4]), d(&[0.6, 0.4]), m, 0.1).unwrap();
            let v = d0_eps_iid_exact(&inst).unwrap().bits;
            assert!(v >= 0.0 && v <= -(0.9f64).log2() + 1e-12);
        }
    }

    #[test]
    fn ladder_values() {
        // oracle: binomial tail sums evaluated independently
        let expect = [(16, 0.999_82), (64, 4.3639), (256, 21.018), (1024, 98.690)];
        for (m, v) in expect {
            let r = d0_eps_iid_exact(&base(m)).unwrap();
            assert!(r.certificate.is_exact());
            assert!((r.bits - v).abs() < 2e-3 * v.max(1.0), "m={m}: {}", r.bits);
        }
    }

    #[test]
    fn sandwich_feasibility() {
        assert!(d0_eps_expansion(&base(64)).unwrap().lower_sandwich.is_none());
        let r = d0_eps_expansion(&base(256)).unwrap();
        assert!((r.lower_sandwich.unwrap() - 8.97).abs() < 0.01);
        assert!((r.upper_sandwich.unwrap() - 26.45).abs() < 0.01);
        assert!(r.sandwich_holds());
    }

    #[test]
    fn degenerate_sigma_bracket() {
        let inst = IidInstance::new(d(&[0.5, 0.5, 0.0]), d(&[0.25, 0.25, 0.5]), 10, 0.2).unwrap();
        let r = d0_eps_expansion(&inst).unwrap();
        assert_relative_eq!(r.first_order, 10.0, epsilon = 1e-12);
        assert!(r.exact >= 10.0 - 1e-12 && r.exact <= 10.0 - (0.8f64).log2() + 1e-12);
        assert!(r.sandwich_holds());
    }

    #[test]
    fn typical_masses_partition() {
        let inst = base(100);
        let (o, u) = typical_set_masses(&inst, 0.0).unwrap();
        assert!((o + u - 1.0).abs() < 1e-12);
        let b = berry_esseen_slack(&inst.moments(), 100, BERRY_ESSEEN_C);
        assert!((u - 0.5).abs() <= b);
        let (_, u) = typical_set_masses(&inst, 50.0).unwrap();
        assert!((u - 1.0).abs() < 1e-12);
    }

    #[test]
    fn work_quantities_scale() {
        let w = iid_work_quantities(&d(&[0.3, 0.7]), &EnergyLevels::new(vec![0.0, 0.0]).unwrap(), &Bath::default(), 100, 0.05)
            .unwrap();
        assert!((w.a_m - 8.228).abs() < 2e-3);
        assert!((w.sigma_m - 3.883).abs() < 2e-3);
    }
}
