use std::f64::consts::LN_2;

use worklab::process::{build_expected_extraction, exact_work_distribution};
use worklab::scenario::{
    flat_spectrum_quantities, mixed_family_quantities, run, semicircle_cdf, wigner_c, wigner_c_bounds,
    wigner_quantities, ScenarioConfig,
};
use worklab::{Bath, Distribution, EnergyLevels, Error};

fn cfg(text: &str) -> ScenarioConfig {
    ScenarioConfig::from_json(text).unwrap()
}

fn config_path(text: &str) -> String {
    match ScenarioConfig::from_json(text) {
        Err(Error::Config { path, .. }) => path,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn equilibrium_has_no_work_content() {
    let r = run(&cfg(
        r#"{"schema":1,"system":{"degenerate":{"n":2,"r":0}},"initial":{"explicit":[0.5,0.5]},"quantities":["work_content"]}"#,
    ))
    .unwrap();
    assert!(r.result("work_content").unwrap().abs() < 1e-15);
}

#[test]
fn fig2_scenario_reproduces_the_builder() {
    let r = run(&cfg(r#"{"schema":1,"system":{"levels":[0,0]},"initial":{"explicit":[0.9,0.1]},
        "process":{"fig2":{"steps":400,"m_cutoff":50}},"quantities":["work_content","work_law"]}"#))
    .unwrap();
    let b = Bath::default();
    let q = Distribution::new(vec![0.9, 0.1]).unwrap();
    let h = EnergyLevels::new(vec![0.0, 0.0]).unwrap();
    let law = exact_work_distribution(&build_expected_extraction(&q, &h, &b, 400, 50.0).unwrap(), &q, &b).unwrap().law;
    assert_eq!(r.result("work_mean").unwrap(), law.mean());
    assert_eq!(r.result("work_std").unwrap(), law.std_dev());
}

#[test]
fn erasure_scenario_reproduces_landauer() {
    let r = run(&cfg(r#"{"schema":1,"system":{"degenerate":{"n":2,"r":0}},"initial":{"explicit":[0.5,0.5]},
        "process":{"erasure":{"target":1,"steps":400,"m_cutoff":50}},"quantities":["landauer"]}"#))
    .unwrap();
    assert!((r.result("erasure_cost_mean").unwrap() - LN_2).abs() < 1e-2);
    assert!(r.result("final_target_mass").unwrap() >= 0.999);
    assert_eq!(r.check("landauer"), Some(true));
}

#[test]
fn errors_name_the_field() {
    assert_eq!(
        config_path(r#"{"schema":1,"system":{"levels":[0,0]},"initial":{"point_mass":5},"quantities":["work_content"]}"#),
        "initial"
    );
    assert_eq!(config_path(r#"{"schema":1,"system":{"levels":[0,0]},"quantities":["bogus"]}"#), "quantities[0]");
    assert_eq!(
        config_path(r#"{"schema":1,"system":{"flat":{"a":1,"samples":1}},"quantities":["work_content"]}"#),
        "system"
    );
    assert_eq!(
        config_path(r#"{"schema":1,"system":{"levels":[0,1]},"quantities":["expansion"],"eps":0.1,"ladder":{"m":[4,0]}}"#),
        "ladder.m[1]"
    );
    assert_eq!(config_path(r#"{"schema":1,"system":{"levels":[0,1]},"quantities":["delta_set"]}"#), "quantities[0].eps");
}

#[test]
fn cap_errors_surface_verbatim() {
    let e = run(&cfg(r#"{"schema":1,"system":{"levels":[0,0.3,1.1]},"initial":{"explicit":[0.5,0.3,0.2]},
        "process":{"fig2":{"steps":200}},"quantities":["delta_set"],"eps":0.1,"delta":0.1,"atom_cap":50}"#))
    .unwrap_err();
    assert!(matches!(e, Error::AtomCapExceeded { cap: 50, .. }), "{e:?}");
}

#[test]
fn reports_are_bit_for_bit_reproducible() {
    let text = r#"{"schema":1,"system":{"levels":[0,0.5,1]},"initial":"uniform",
        "process":{"fig2":{"steps":30}},"quantities":["work_sample","work_law"],"seed":11,"samples":5000,
        "ladder":{"steps":[10,20]}}"#;
    let a = serde_json::to_string(&run(&cfg(text)).unwrap()).unwrap();
    let b = serde_json::to_string(&run(&cfg(text)).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_scalar_has_a_route() {
    let r = run(&cfg(r#"{"schema":1,"system":{"levels":[0,1]},"initial":{"explicit":[0.9,0.1]},
        "process":{"fig3":{"steps":100,"lift":20}},
        "quantities":["free_energy","eps_free_energy","work_law","work_sample","delta_set"],"eps":0.15,"delta":0.1,"samples":1000}"#))
    .unwrap();
    let v = serde_json::to_value(&r).unwrap();
    for s in v["results"].as_array().unwrap() {
        assert!(["exact", "monte-carlo", "closed-form"].contains(&s["route"].as_str().unwrap()), "{s}");
    }
}

#[test]
fn mixed_family_without_mixing_has_no_spread() {
    let h = EnergyLevels::new(vec![0.0, 0.0]).unwrap();
    let r = mixed_family_quantities(&h, &Bath::default(), 0.0, 1, 4, 0.1).unwrap();
    assert_eq!(r.sigma_leading, 0.0);
}

#[test]
fn mixed_family_grows_linearly() {
    let h = EnergyLevels::new(vec![0.0, 0.0]).unwrap();
    let per: Vec<f64> = [6, 9, 12]
        .iter()
        .map(|&m| {
            let r = mixed_family_quantities(&h, &Bath::default(), 0.1, 1, m, 0.1).unwrap();
            r.exact.unwrap().a / m as f64
        })
        .collect();
    // exact(m)/m settles: the increments shrink
    assert!((per[2] - per[1]).abs() < (per[1] - per[0]).abs(), "{per:?}");
}

#[test]
fn mixed_family_a_ratio_improves_with_m() {
    let h = EnergyLevels::new(vec![0.0, 0.0]).unwrap();
    let ratio = |m| mixed_family_quantities(&h, &Bath::default(), 0.1, 1, m, 0.1).unwrap().ratios().unwrap()[0];
    let (r6, r12) = (ratio(6), ratio(12));
    assert!((r12 - 1.0).abs() < (r6 - 1.0).abs());
    assert!((r12 - 1.0).abs() < 0.1, "{r12}");
}

#[test]
fn flat_spread_matches_uniform_variance() {
    let f = flat_spectrum_quantities(50.0, &Bath::default(), 0.05, 10_000).unwrap();
    assert!((f.values.sigma / 50.0 - 1.0 / 3f64.sqrt()).abs() < 1e-3);
    assert!((f.aeps_ratio - 1.0).abs() < 0.05);
}

#[test]
fn flat_a_ratio_grows_with_beta_a() {
    let r: Vec<f64> =
        [5.0, 20.0, 50.0].iter().map(|&a| flat_spectrum_quantities(a, &Bath::default(), 0.05, 10_000).unwrap().a_ratio).collect();
    assert!(r[0] < r[1] && r[1] < r[2], "{r:?}");
}

#[test]
fn spectral_ladders_settle() {
    let b = Bath::default();
    let ns = [1_000, 2_000, 4_000, 8_000];
    let s: Vec<f64> = ns.iter().map(|&n| wigner_quantities(50.0, &b, 0.05, n).unwrap().sigma_over_r).collect();
    let f: Vec<f64> = ns.iter().map(|&n| flat_spectrum_quantities(50.0, &b, 0.05, n).unwrap().sigma_ratio).collect();
    for v in [s, f] {
        for w in v.windows(3) {
            assert!((w[2] - w[1]).abs() < (w[1] - w[0]).abs(), "{v:?}");
        }
    }
}

#[test]
fn wigner_constants() {
    let (lo, hi) = wigner_c_bounds(0.01);
    let c = wigner_c(0.01);
    assert!((0.0652..=0.0653).contains(&lo) && (0.0821..=0.0823).contains(&hi), "{lo} {hi}");
    assert!(lo <= c && c <= hi);
    assert!((wigner_c(0.499_999) - 1.0).abs() < 1e-5);
    assert!((semicircle_cdf(0.0) - 0.5).abs() < 1e-15);
    let w = wigner_quantities(50.0, &Bath::default(), 0.01, 100_000).unwrap();
    assert!((w.sigma_over_r - 0.5).abs() < 1e-3);
}
