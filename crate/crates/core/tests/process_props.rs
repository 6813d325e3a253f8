mod common;

use common::*;
use proptest::prelude::*;
use worklab::entropy::{delta_set, eps_free_energy};
use worklab::fluctuation::{crooks_check, thermal_start_bound};
use worklab::process::{
    build_itr, exact_work_distribution, exact_work_moments, itr_schedule, path_law, sample_work_values, ItrPath,
    DEFAULT_ATOM_CAP, DEFAULT_PATH_CAP,
};
use worklab::thermo::{free_energy, gibbs, log_partition};
use worklab::{Bath, DiscreteRandomVariable, EnergyLevels, Process, ProcessStep};

fn same_law(a: &DiscreteRandomVariable, b: &DiscreteRandomVariable) -> bool {
    let tol = 1e-10;
    (a.mean() - b.mean()).abs() < tol
        && (a.variance() - b.variance()).abs() < tol
        // just right of every atom, so roundoff in summed increments cannot straddle a jump
        && a.values().iter().chain(b.values()).all(|&x| (a.cdf(x + 1e-9) - b.cdf(x + 1e-9)).abs() < tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jarzynski_from_equilibrium(n in 2usize..=4, p in process(4, 4), b in bath()) {
        let p = truncate(&p, n);
        let h0 = p.initial_levels();
        let law = exact_work_distribution(&p, &gibbs(h0, &b), &b).unwrap().law;
        let lhs = law.expectation(|w| (-w / b.kt()).exp());
        let rhs = (log_partition(p.final_levels(), &b) - log_partition(h0, &b)).exp();
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn convolution_matches_path_sum(p in process(3, 4), q in dist(3), b in bath()) {
        let exact = exact_work_distribution(&p, &q, &b).unwrap().law;
        let paths = path_law(&p, &q, &b, DEFAULT_PATH_CAP).unwrap();
        prop_assert!(same_law(&exact, &paths));
        let mo = exact_work_moments(&p, &q, &b).unwrap();
        prop_assert!((mo.mean - exact.mean()).abs() < 1e-10);
        prop_assert!((mo.variance - exact.variance()).abs() < 1e-10);
    }

    #[test]
    fn normalizing_keeps_the_law(p in process(3, 4), q in dist(3), b in bath()) {
        let a = exact_work_distribution(&p, &q, &b).unwrap().law;
        let c = exact_work_distribution(&p.normalize(), &q, &b).unwrap().law;
        prop_assert!(p.normalize().is_normalized());
        prop_assert!(same_law(&a, &c));
    }

    #[test]
    fn reversal_is_an_involution(p in process(3, 4)) {
        let r = p.reverse();
        prop_assert_eq!(r.initial_levels(), p.final_levels());
        prop_assert_eq!(r.reverse().normalize(), p.normalize());
    }

    #[test]
    fn crooks_sandwich(p in process(4, 4), b in bath(), k in 0usize..3) {
        let delta = [0.01, 0.1, 0.5][k];
        for r in crooks_check(&p, &b, None, delta, DEFAULT_PATH_CAP).unwrap() {
            prop_assert!(r.ok, "{r:?}");
        }
    }

    #[test]
    fn thermal_start(p in process(3, 4), b in bath(), e in 0.01f64..0.99, d in 0.0f64..0.5) {
        let r = thermal_start_bound(&p, &b, e, d, DEFAULT_ATOM_CAP).unwrap();
        prop_assert!(r.ok, "{r:?}");
    }

    #[test]
    fn single_lt_bound(q in dist(4), h in levels(4, 2.0), h2 in levels(4, 2.0), e in 0.01f64..0.99, d in 0.0f64..0.5) {
        let b = Bath::default();
        let p = Process::new(h.clone(), vec![ProcessStep::Lt(h2.clone())]).unwrap();
        let law = exact_work_distribution(&p, &q, &b).unwrap().law;
        let (fe, _) = eps_free_energy(&q, &h, &b, e).unwrap();
        let inf = delta_set(&law, e, d).unwrap().infimum;
        prop_assert!(inf >= free_energy(&h2, &b) - fe - d - 1e-12);
    }

    #[test]
    fn final_thermalization_gives_gibbs(p in process(3, 3), q in dist(3), b in bath()) {
        let mut steps = p.steps().to_vec();
        steps.push(ProcessStep::Therm);
        let p = Process::new(p.initial_levels().clone(), steps).unwrap();
        let fin = p.final_state_distribution(&q, &b).unwrap();
        for (x, y) in fin.probs().iter().zip(gibbs(p.final_levels(), &b).probs()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_mean_is_consistent(p in process(3, 3), q in dist(3), seed in any::<u64>()) {
        let b = Bath::default();
        let exact = exact_work_distribution(&p, &q, &b).unwrap().law;
        let s = sample_work_values(&p, &q, &b, seed, 20_000).unwrap();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let se = (exact.variance() / s.len() as f64).sqrt();
        prop_assert!((mean - exact.mean()).abs() <= 6.0 * se + 1e-12);
    }
}

/// Keeps the first `n` states of every configuration.
fn truncate(p: &Process, n: usize) -> Process {
    let cut = |h: &EnergyLevels| EnergyLevels::new(h.levels()[..n].to_vec()).unwrap();
    let steps = p
        .steps()
        .iter()
        .map(|s| match s {
            ProcessStep::Lt(h) => ProcessStep::Lt(cut(h)),
            ProcessStep::Therm => ProcessStep::Therm,
        })
        .collect();
    Process::new(cut(p.initial_levels()), steps).unwrap()
}

/// `Σ_l ⟨h_l - h_{l-1}⟩_{G(h_{l-1})}` for the configurations an ITR visits.
fn discrete_sum(h_i: &EnergyLevels, schedule: &[EnergyLevels], b: &Bath) -> f64 {
    let mut prev = h_i.clone();
    let mut total = 0.0;
    for h in schedule {
        let g = gibbs(&prev, b);
        total += g.probs().iter().zip(h.levels().iter().zip(prev.levels())).map(|(p, (a, c))| p * (a - c)).sum::<f64>();
        prev = h.clone();
    }
    total
}

#[test]
fn itr_mean_is_the_discrete_sum() {
    let b = Bath::default();
    let h_i = EnergyLevels::new(vec![0.0, 0.0]).unwrap();
    let h_f = EnergyLevels::new(vec![0.0, 3.0]).unwrap();
    for l in [50, 100, 200, 400] {
        let p = build_itr(&h_i, &h_f, l, &ItrPath::Linear, &b).unwrap();
        let sched = itr_schedule(&h_i, &h_f, l, &ItrPath::Linear, &b).unwrap();
        let law = exact_work_distribution(&p, &gibbs(&h_i, &b), &b).unwrap().law;
        assert!((law.mean() - discrete_sum(&h_i, &sched, &b)).abs() < 1e-12, "L={l}");
    }
}

#[test]
fn itr_work_approaches_free_energy_difference() {
    let b = Bath::default();
    let h_i = EnergyLevels::new(vec![0.0, 0.5, 1.0]).unwrap();
    let h_f = EnergyLevels::new(vec![1.0, 0.0, 2.0]).unwrap();
    let df = free_energy(&h_f, &b) - free_energy(&h_i, &b);
    let mut prev = f64::INFINITY;
    for l in [25, 50, 100, 200] {
        let p = build_itr(&h_i, &h_f, l, &ItrPath::Linear, &b).unwrap();
        let mo = exact_work_moments(&p, &gibbs(&h_i, &b), &b).unwrap();
        let gap = (mo.mean - df).abs() + mo.std_dev();
        assert!(gap < prev, "L={l}");
        prev = gap;
    }
    assert!(prev < 0.1);
}

#[test]
fn two_level_crooks_ratio() {
    let b = Bath::default();
    let p = Process::new(
        EnergyLevels::new(vec![0.0, 0.0]).unwrap(),
        vec![ProcessStep::Lt(EnergyLevels::new(vec![0.0, 1.0]).unwrap())],
    )
    .unwrap();
    let r = crooks_check(&p, &b, Some(&[1.0]), 0.05, DEFAULT_PATH_CAP).unwrap();
    let e = std::f64::consts::E;
    assert!((r[0].p_forward - 0.5).abs() < 1e-15);
    assert!((r[0].p_reverse - 1.0 / (e + 1.0)).abs() < 1e-15);
    assert!((r[0].ratio.unwrap() - (e + 1.0) / 2.0).abs() < 1e-12);
    assert!(r[0].ok);
}
