//! Declarative experiments: a JSON config names a system, an initial
//! distribution, an optional process and the quantities to report.
//!
//! ```json
//! {"schema": 1, "system": {"levels": [0, 0]}, "initial": {"explicit": [0.9, 0.1]},
//!  "process": {"fig2": {"steps": 400}}, "quantities": ["work_content", "work_law"]}
//! ```

mod cases;

pub use cases::{
    flat_levels, flat_spectrum_quantities, mixed_family_quantities, mixed_state, product_levels, quantile_levels,
    semicircle_cdf, semicircle_levels, semicircle_quantile, uniform_spectrum_values, wigner_c, wigner_c_bounds,
    wigner_quantities, FlatSpectrum, MixedExact, MixedFamily, SpectrumValues, WignerSpectrum, EXPLICIT_PRODUCT_CAP,
};

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::asymptotics::{d0_eps_expansion, expansion_csv, iid_work_quantities, IidInstance};
use crate::csv::fmt_f64;
use crate::entropy::{
    delta_set, eps_free_energy, expected_work_content, relative_entropy, smoothed_renyi0, SubsetSolution,
};
use crate::error::{Error, Result};
use crate::fluctuation::{crooks_check, eps_erasure_check, thermal_start_bound, yield_fluctuation_sigma};
use crate::numeric::log_sum_exp;
use crate::process::{
    build_eps_erasure, build_eps_extraction, build_erasure, build_expected_extraction, build_itr,
    exact_work_distribution_with, exact_work_moments, sample_work, EpsErasure, ItrPath, Process, ProcessStep,
    DEFAULT_ATOM_CAP, DEFAULT_PATH_CAP, GENERATOR,
};
use crate::thermo::{free_energy, gibbs, log_partition, Bath, Distribution, EnergyLevels};

pub const SCHEMA_VERSION: u32 = 1;
const DEFAULT_TOLERANCE: f64 = 1e-2;
const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub bath: Bath,
    pub system: SystemSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessSpec>,
    pub quantities: Vec<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default)]
    pub ladder: Ladder,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_cap: Option<usize>,
    /// Allowed gap for closed-form comparisons and construction slack; 1e-2 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Levels(Vec<f64>),
    Degenerate { n: usize, r: f64 },
    Flat { a: f64, samples: usize },
    Semicircle { radius: f64, samples: usize },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Explicit(Vec<f64>),
    #[default]
    Gibbs,
    Uniform,
    PointMass(usize),
    /// `(1-ν) δ_x + ν G(h)`.
    Mixed { nu: f64, x: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessSpec {
    Itr {
        final_levels: Vec<f64>,
        steps: usize,
        #[serde(default = "linear")]
        path: ItrPath,
    },
    /// Lift to `-kT ln q`, then an ITR back to `h`.
    Fig2 {
        steps: usize,
        #[serde(default = "default_cutoff")]
        m_cutoff: f64,
    },
    /// Lift the complement of `Λ*` by `lift`, then an ITR back.
    Fig3 { steps: usize, lift: f64 },
    Erasure {
        target: usize,
        steps: usize,
        #[serde(default = "default_cutoff")]
        m_cutoff: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        final_levels: Option<Vec<f64>>,
    },
    EpsErasure {
        target: usize,
        steps: usize,
        lift: f64,
        tau: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        final_levels: Option<Vec<f64>>,
    },
    Custom {
        steps: Vec<ProcessStep>,
    },
}

fn linear() -> ItrPath {
    ItrPath::Linear
}

fn default_cutoff() -> f64 {
    50.0
}

impl ProcessSpec {
    fn with_steps(&self, l: usize) -> Option<ProcessSpec> {
        let mut p = self.clone();
        match &mut p {
            ProcessSpec::Itr { steps, .. }
            | ProcessSpec::Fig2 { steps, .. }
            | ProcessSpec::Fig3 { steps, .. }
            | ProcessSpec::Erasure { steps, .. }
            | ProcessSpec::EpsErasure { steps, .. } => *steps = l,
            ProcessSpec::Custom { .. } => return None,
        }
        Some(p)
    }

    fn with_lift(&self, e: f64) -> Option<ProcessSpec> {
        let mut p = self.clone();
        match &mut p {
            ProcessSpec::Fig3 { lift, .. } | ProcessSpec::EpsErasure { lift, .. } => *lift = e,
            ProcessSpec::Fig2 { m_cutoff, .. } | ProcessSpec::Erasure { m_cutoff, .. } => *m_cutoff = e,
            _ => return None,
        }
        Some(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    FreeEnergy,
    WorkContent,
    RelativeEntropy,
    YieldSigma,
    EpsFreeEnergy,
    EpsWorkContent,
    SmoothedRenyi0,
    WorkLaw,
    WorkSample,
    DeltaSet,
    FinalState,
    Jarzynski,
    Crooks,
    ThermalBound,
    EpsBounds,
    Landauer,
    EpsErasureBounds,
    Expansion,
    IidWork,
    MixedFamily,
    FlatSpectrum,
    Wigner,
}

/// Parameter lists swept by ladder-aware quantities.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    /// ITR step counts `L` for `work_law`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<usize>,
    /// Lift energies `E` (or cutoffs) for `work_law`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lift: Vec<f64>,
    /// Copy counts for `expansion`, `iid_work` and `mixed_family`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub m: Vec<usize>,
    /// Spectral sample counts for `flat_spectrum` and `wigner`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<usize>,
}

impl ScenarioConfig {
    /// Parses JSON; errors carry the path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: match e.path().to_string() {
                p if p == "." => "$".into(),
                p => p,
            },
            msg: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return cfg_err("schema", format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema));
        }
        if self.quantities.is_empty() {
            return cfg_err("quantities", "at least one quantity is required");
        }
        if let Some(e) = self.eps {
            if !(e > 0.0 && e < 1.0) {
                return cfg_err("eps", format!("must lie in (0,1), got {e}"));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return cfg_err("delta", format!("must be positive, got {d}"));
            }
        }
        if self.samples == Some(0) {
            return cfg_err("samples", "must be at least 1");
        }
        if self.atom_cap == Some(0) {
            return cfg_err("atom_cap", "must be at least 1");
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0 && t.is_finite()) {
                return cfg_err("tolerance", format!("must be non-negative, got {t}"));
            }
        }
        let h = self.levels()?;
        let q = self.initial_distribution(&h)?;
        if let Some(spec) = &self.process {
            self.build(spec, &h, &q).map_err(|e| at("process", e))?;
        }
        for (i, l) in self.ladder.steps.iter().enumerate() {
            if *l == 0 {
                return cfg_err(&format!("ladder.steps[{i}]"), "must be at least 1");
            }
        }
        for (i, m) in self.ladder.m.iter().enumerate() {
            if *m == 0 {
                return cfg_err(&format!("ladder.m[{i}]"), "must be at least 1");
            }
        }
        for (i, n) in self.ladder.samples.iter().enumerate() {
            if *n < 2 {
                return cfg_err(&format!("ladder.samples[{i}]"), "spectral sample count must be at least 2");
            }
        }
        for (i, q) in self.quantities.iter().enumerate() {
            self.check_quantity(*q).map_err(|e| at(&format!("quantities[{i}]"), e))?;
        }
        Ok(())
    }

    fn check_quantity(&self, q: Quantity) -> Result<()> {
        use Quantity::*;
        let needs_eps = matches!(
            q,
            EpsFreeEnergy
                | EpsWorkContent
                | SmoothedRenyi0
                | DeltaSet
                | ThermalBound
                | EpsBounds
                | EpsErasureBounds
                | Expansion
                | IidWork
                | MixedFamily
                | FlatSpectrum
                | Wigner
        );
        let needs_delta = matches!(q, DeltaSet | Crooks | ThermalBound | EpsBounds | EpsErasureBounds);
        let needs_process = matches!(
            q,
            WorkLaw | WorkSample | DeltaSet | FinalState | Jarzynski | Crooks | ThermalBound | EpsBounds | Landauer
                | EpsErasureBounds
        );
        if needs_eps && self.eps.is_none() {
            return cfg_err("eps", format!("{q:?} needs eps"));
        }
        if needs_delta && self.delta.is_none() {
            return cfg_err("delta", format!("{q:?} needs delta"));
        }
        if needs_process && self.process.is_none() {
            return cfg_err("process", format!("{q:?} needs a process"));
        }
        match q {
            EpsBounds if !matches!(self.process, Some(ProcessSpec::Fig3 { .. })) => {
                cfg_err("process", "eps_bounds needs a fig3 process")
            }
            Landauer if !matches!(self.process, Some(ProcessSpec::Erasure { .. })) => {
                cfg_err("process", "landauer needs an erasure process")
            }
            EpsErasureBounds if !matches!(self.process, Some(ProcessSpec::EpsErasure { .. })) => {
                cfg_err("process", "eps_erasure_bounds needs an eps_erasure process")
            }
            MixedFamily if !matches!(self.initial, InitialSpec::Mixed { .. }) => {
                cfg_err("initial", "mixed_family needs a mixed initial distribution")
            }
            MixedFamily | Expansion | IidWork if self.ladder.m.is_empty() => cfg_err("ladder.m", "needs copy counts"),
            FlatSpectrum if !matches!(self.system, SystemSpec::Flat { .. }) => {
                cfg_err("system", "flat_spectrum needs a flat system")
            }
            Wigner if !matches!(self.system, SystemSpec::Semicircle { .. }) => {
                cfg_err("system", "wigner needs a semicircle system")
            }
            Wigner if self.eps.is_some_and(|e| e >= 0.5) => cfg_err("eps", "wigner needs eps below 1/2"),
            _ => Ok(()),
        }
    }

    pub fn levels(&self) -> Result<EnergyLevels> {
        let r = match &self.system {
            SystemSpec::Levels(v) => EnergyLevels::new(v.clone()),
            SystemSpec::Degenerate { n, r } => EnergyLevels::degenerate(*n, *r),
            SystemSpec::Flat { a, samples } => flat_levels(*a, *samples),
            SystemSpec::Semicircle { radius, samples } => semicircle_levels(*radius, *samples),
        };
        r.map_err(|e| at("system", e))
    }

    pub fn initial_distribution(&self, h: &EnergyLevels) -> Result<Distribution> {
        let n = h.len();
        let r = match &self.initial {
            InitialSpec::Explicit(p) if p.len() != n => {
                Err(Error::DimensionMismatch { expected: n, found: p.len() })
            }
            InitialSpec::Explicit(p) => Distribution::new(p.clone()),
            InitialSpec::Gibbs => Ok(gibbs(h, &self.bath)),
            InitialSpec::Uniform => Distribution::uniform(n),
            InitialSpec::PointMass(s) => Distribution::point_mass(n, *s),
            InitialSpec::Mixed { nu, x } => mixed_state(h, &self.bath, *nu, *x),
        };
        r.map_err(|e| at("initial", e))
    }

    fn build(&self, spec: &ProcessSpec, h: &EnergyLevels, q: &Distribution) -> Result<Built> {
        let bath = &self.bath;
        let final_or = |f: &Option<Vec<f64>>| match f {
            Some(v) => EnergyLevels::new(v.clone()),
            None => Ok(h.clone()),
        };
        let mut built = Built { process: None, witness: None, eps_erasure: None, target: None, h_f: h.clone() };
        let p = match spec {
            ProcessSpec::Itr { final_levels, steps, path } => {
                build_itr(h, &EnergyLevels::new(final_levels.clone())?, *steps, path, bath)?
            }
            ProcessSpec::Fig2 { steps, m_cutoff } => build_expected_extraction(q, h, bath, *steps, *m_cutoff)?,
            ProcessSpec::Fig3 { steps, lift } => {
                let eps = self.eps.ok_or_else(|| config("eps", "fig3 needs eps"))?;
                let (p, w) = build_eps_extraction(q, h, bath, eps, *lift, *steps)?;
                built.witness = Some(w);
                p
            }
            ProcessSpec::Erasure { target, steps, m_cutoff, final_levels } => {
                built.target = Some(*target);
                built.h_f = final_or(final_levels)?;
                build_erasure(q, h, &built.h_f, bath, *target, *m_cutoff, *steps)?
            }
            ProcessSpec::EpsErasure { target, steps, lift, tau, final_levels } => {
                let eps = self.eps.ok_or_else(|| config("eps", "eps_erasure needs eps"))?;
                built.target = Some(*target);
                built.h_f = final_or(final_levels)?;
                let e = build_eps_erasure(q, h, &built.h_f, bath, *target, eps, *tau, *lift, *steps)?;
                let p = e.process.clone();
                built.eps_erasure = Some(e);
                p
            }
            ProcessSpec::Custom { steps } => Process::new(h.clone(), steps.clone())?,
        };
        built.h_f = p.final_levels().clone();
        built.process = Some(p);
        Ok(built)
    }
}

struct Built {
    process: Option<Process>,
    witness: Option<SubsetSolution>,
    eps_erasure: Option<EpsErasure>,
    target: Option<usize>,
    h_f: EnergyLevels,
}

impl Built {
    fn process(&self) -> &Process {
        self.process.as_ref().expect("validated process")
    }
}

fn config(path: &str, msg: impl Into<String>) -> Error {
    Error::Config { path: path.into(), msg: msg.into() }
}

fn cfg_err<T>(path: &str, msg: impl Into<String>) -> Result<T> {
    Err(config(path, msg))
}

fn at(path: &str, e: Error) -> Error {
    match e {
        Error::Config { path: inner, msg } => Error::Config { path: format!("{path}.{inner}"), msg },
        other => Error::Config { path: path.into(), msg: other.to_string() },
    }
}

/// How a reported number was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Exact,
    MonteCarlo,
    ClosedForm,
}

fn ser_f64<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    num(*x).serialize(s)
}

/// JSON number, or a string for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("+inf")
    } else {
        json!("-inf")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scalar {
    pub name: String,
    #[serde(serialize_with = "ser_f64")]
    pub value: f64,
    pub route: Route,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub meta: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub detail: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub scenario: ScenarioConfig,
    pub results: Vec<Scalar>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub generator: &'static str,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Report {
    pub fn result(&self, name: &str) -> Option<f64> {
        self.results.iter().find(|r| r.name == name).map(|r| r.value)
    }

    pub fn check(&self, name: &str) -> Option<bool> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.passed)
    }

    /// All tables, each preceded by a `# name` line.
    pub fn tables_csv(&self) -> String {
        let mut s = String::new();
        for t in &self.tables {
            s.push_str(&format!("# {}\n{}", t.name, t.csv));
        }
        s
    }
}

fn meta(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

struct Out {
    results: Vec<Scalar>,
    checks: Vec<Check>,
    tables: Vec<Table>,
}

impl Out {
    fn push(&mut self, name: &str, value: f64, route: Route, m: &[(&str, Value)]) {
        self.results.push(Scalar { name: name.into(), value, route, meta: meta(m) });
    }

    fn check(&mut self, name: &str, passed: bool, m: &[(&str, Value)]) {
        self.checks.push(Check { name: name.into(), passed, detail: meta(m) });
    }
}

/// Runs every requested quantity in order; deterministic given the config.
pub fn run(cfg: &ScenarioConfig) -> Result<Report> {
    cfg.validate()?;
    let bath = cfg.bath;
    let h = cfg.levels()?;
    let q = cfg.initial_distribution(&h)?;
    let built = match &cfg.process {
        Some(spec) => Some(cfg.build(spec, &h, &q)?),
        None => None,
    };
    let cap = cfg.atom_cap.unwrap_or(DEFAULT_ATOM_CAP);
    let tol = cfg.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let eps = || cfg.eps.expect("validated eps");
    let delta = || cfg.delta.expect("validated delta");
    let kt = bath.kt();
    let mut out = Out { results: Vec::new(), checks: Vec::new(), tables: Vec::new() };

    for quantity in &cfg.quantities {
        match quantity {
            Quantity::FreeEnergy => out.push("free_energy", free_energy(&h, &bath), Route::ClosedForm, &[]),
            Quantity::WorkContent => {
                out.push("work_content", expected_work_content(&q, &h, &bath)?, Route::ClosedForm, &[])
            }
            Quantity::RelativeEntropy => {
                out.push("relative_entropy_bits", relative_entropy(&q, &gibbs(&h, &bath))?, Route::ClosedForm, &[])
            }
            Quantity::YieldSigma => {
                out.push("yield_sigma", yield_fluctuation_sigma(&q, &h, &bath)?, Route::ClosedForm, &[])
            }
            Quantity::EpsFreeEnergy => {
                let (f, sol) = eps_free_energy(&q, &h, &bath, eps())?;
                out.push("eps_free_energy", f, Route::Exact, &solution_meta(&sol));
            }
            Quantity::EpsWorkContent => {
                let (f, sol) = eps_free_energy(&q, &h, &bath, eps())?;
                out.push("eps_work_content", f - free_energy(&h, &bath), Route::Exact, &solution_meta(&sol));
            }
            Quantity::SmoothedRenyi0 => {
                let (d0, sol) = smoothed_renyi0(&q, &gibbs(&h, &bath), eps())?;
                out.push("smoothed_renyi0_bits", d0, Route::Exact, &solution_meta(&sol));
            }
            Quantity::WorkLaw => {
                let b = built.as_ref().expect("validated");
                work_law(cfg, b, &q, cap, &mut out)?;
            }
            Quantity::WorkSample => {
                let b = built.as_ref().expect("validated");
                let n = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
                let mc = sample_work(b.process(), &q, &bath, cfg.seed, n)?;
                let se = mc.law.std_dev() / (n as f64).sqrt();
                let m = [("samples", json!(n)), ("seed", json!(cfg.seed)), ("generator", json!(GENERATOR))];
                out.push("work_mean_mc", mc.law.mean(), Route::MonteCarlo, &m);
                out.push("work_std_error_mc", se, Route::MonteCarlo, &m);
                // consistency with the exact mean whenever that is available
                if let Ok(exact) = exact_work_moments(b.process(), &q, &bath) {
                    let z = (mc.law.mean() - exact.mean).abs() / se.max(f64::MIN_POSITIVE);
                    let ok = (mc.law.mean() - exact.mean).abs() <= 5.0 * se + 1e-12 * (1.0 + exact.mean.abs());
                    out.check("mc_consistency", ok, &[("exact_mean", num(exact.mean)), ("z", num(z))]);
                }
            }
            Quantity::DeltaSet => {
                let b = built.as_ref().expect("validated");
                let wd = exact_work_distribution_with(b.process(), &q, &bath, cap)?;
                let ds = delta_set(&wd.law, eps(), delta())?;
                let ys = delta_set(&wd.yield_law(), eps(), delta())?;
                let m = [("atoms", json!(wd.law.len())), ("eps", num(eps())), ("delta", num(delta()))];
                out.push("work_inf_delta", ds.infimum, Route::Exact, &m);
                out.push("yield_sup_delta", ys.supremum(), Route::Exact, &m);
            }
            Quantity::FinalState => {
                let b = built.as_ref().expect("validated");
                let fin = b.process().final_state_distribution(&q, &bath)?;
                for (i, p) in fin.probs().iter().enumerate() {
                    out.push(&format!("final_state[{i}]"), *p, Route::Exact, &[]);
                }
            }
            Quantity::Jarzynski => {
                let b = built.as_ref().expect("validated");
                let p = b.process();
                let g = gibbs(p.initial_levels(), &bath);
                let law = exact_work_distribution_with(p, &g, &bath, cap)?.law;
                let lhs = log_sum_exp(law.atoms().map(|(w, pr)| pr.ln() - bath.beta() * w));
                let rhs = log_partition(p.final_levels(), &bath) - log_partition(p.initial_levels(), &bath);
                let rel = (lhs - rhs).exp_m1().abs();
                out.push("jarzynski_relative_error", rel, Route::Exact, &[("atoms", json!(law.len()))]);
                out.check("jarzynski", rel <= 1e-10, &[("relative_error", num(rel))]);
            }
            Quantity::Crooks => {
                let b = built.as_ref().expect("validated");
                let reps = crooks_check(b.process(), &bath, None, delta(), DEFAULT_PATH_CAP)?;
                let bad = reps.iter().filter(|r| !r.ok).count();
                out.check("crooks", bad == 0, &[("grid_points", json!(reps.len())), ("violations", json!(bad))]);
                out.tables.push(Table { name: "crooks".into(), csv: crate::fluctuation::crooks_csv(&reps) });
            }
            Quantity::ThermalBound => {
                let b = built.as_ref().expect("validated");
                let r = thermal_start_bound(b.process(), &bath, eps(), delta(), cap)?;
                out.push("thermal_inf_delta", r.inf_delta, Route::Exact, &[]);
                out.check("thermal_bound", r.ok, &[("inf_delta", num(r.inf_delta)), ("bound", num(r.bound))]);
            }
            Quantity::EpsBounds => {
                let b = built.as_ref().expect("validated");
                let y = exact_work_distribution_with(b.process(), &q, &bath, cap)?.yield_law();
                let ds = delta_set(&y, eps(), delta())?;
                let (fe, sol) = eps_free_energy(&q, &h, &bath, eps())?;
                let gap = fe - free_energy(&h, &bath);
                let lower = gap + kt * (1.0 - eps()).ln() - 6.0 * delta();
                let upper = gap + tol;
                // any (ε,δ)-deterministic value of the yield law counts as achieved
                let hit = ds.largest_in(lower, upper);
                let mut m = solution_meta(b.witness.as_ref().unwrap_or(&sol));
                m.push(("atoms", json!(y.len())));
                out.push("eps_yield_sup", ds.supremum(), Route::Exact, &m);
                out.push("eps_yield", hit.unwrap_or(f64::NAN), Route::Exact, &[]);
                out.check(
                    "eps_bounds",
                    hit.is_some(),
                    &[
                        ("sup_delta", num(ds.supremum())),
                        ("lower", num(lower)),
                        ("upper", num(upper)),
                        ("tolerance", num(tol)),
                    ],
                );
            }
            Quantity::Landauer => {
                let b = built.as_ref().expect("validated");
                let s = b.target.expect("erasure target");
                let mo = exact_work_moments(b.process(), &q, &bath)?;
                let target = b.h_f.levels()[s]
                    - free_energy(&h, &bath)
                    - kt * LN_2 * relative_entropy(&q, &gibbs(&h, &bath))?;
                let fin = b.process().final_state_distribution(&q, &bath)?.probs()[s];
                out.push("erasure_cost_mean", mo.mean, Route::Exact, &[]);
                out.push("erasure_cost_limit", target, Route::ClosedForm, &[]);
                out.push("final_target_mass", fin, Route::Exact, &[]);
                out.check(
                    "landauer",
                    (mo.mean - target).abs() <= tol,
                    &[("gap", num(mo.mean - target)), ("tolerance", num(tol))],
                );
            }
            Quantity::EpsErasureBounds => {
                let b = built.as_ref().expect("validated");
                let e = b.eps_erasure.as_ref().expect("eps erasure");
                let s = b.target.expect("erasure target");
                let r = eps_erasure_check(e, &q, &h, &b.h_f, &bath, s, eps(), delta(), tol, cap)?;
                out.push("eps_erasure_inf_delta", r.inf_delta, Route::Exact, &[("tau", num(r.tau))]);
                out.check(
                    "eps_erasure_bounds",
                    r.ok,
                    &[
                        ("inf_delta", num(r.inf_delta)),
                        ("lower", num(r.lower)),
                        ("upper", num(r.upper)),
                        ("final_mass", num(r.final_mass)),
                    ],
                );
            }
            Quantity::Expansion => {
                let g = gibbs(&h, &bath);
                let rows: Vec<_> = cfg
                    .ladder
                    .m
                    .par_iter()
                    .map(|&m| d0_eps_expansion(&IidInstance::new(q.clone(), g.clone(), m, eps())?))
                    .collect::<Result<_>>()?;
                for r in &rows {
                    let tag = format!("m={}", r.m);
                    out.push(
                        &format!("d0_eps_bits[{tag}]"),
                        r.exact,
                        Route::Exact,
                        &[("certificate", json!(r.certificate)), ("residual", num(r.residual)), ("target", num(r.target))],
                    );
                    out.check(
                        &format!("sandwich[{tag}]"),
                        r.sandwich_holds(),
                        &[
                            ("lower", r.lower_sandwich.map_or(Value::Null, num)),
                            ("upper", r.upper_sandwich.map_or(Value::Null, num)),
                        ],
                    );
                }
                out.tables.push(Table { name: "expansion".into(), csv: expansion_csv(&rows) });
            }
            Quantity::IidWork => {
                for &m in &cfg.ladder.m {
                    let w = iid_work_quantities(&q, &h, &bath, m, eps())?;
                    out.push(&format!("iid_work_content[m={m}]"), w.a_m, Route::ClosedForm, &[]);
                    out.push(&format!("iid_yield_sigma[m={m}]"), w.sigma_m, Route::ClosedForm, &[]);
                    out.push(&format!("iid_eps_work_second_order[m={m}]"), w.aeps_second_order, Route::ClosedForm, &[]);
                }
            }
            Quantity::MixedFamily => {
                let InitialSpec::Mixed { nu, x } = cfg.initial else { unreachable!("validated") };
                let rows: Vec<_> = cfg
                    .ladder
                    .m
                    .par_iter()
                    .map(|&m| mixed_family_quantities(&h, &bath, nu, x, m, eps()))
                    .collect::<Result<_>>()?;
                let mut csv = String::from("m,a_leading,sigma_leading,aeps_leading,a_exact,sigma_exact,aeps_exact,gibbs_weight\n");
                for r in &rows {
                    let m = r.m;
                    let gm = [("gibbs_weight", num(r.gibbs_weight))];
                    out.push(&format!("mixed_a_leading[m={m}]"), r.a_leading, Route::ClosedForm, &gm);
                    out.push(&format!("mixed_sigma_leading[m={m}]"), r.sigma_leading, Route::ClosedForm, &[]);
                    out.push(&format!("mixed_aeps_leading[m={m}]"), r.aeps_leading, Route::ClosedForm, &[]);
                    let (ea, es, ee) = match &r.exact {
                        Some(e) => {
                            let c = [("certificate", json!(e.certificate))];
                            out.push(&format!("mixed_a_exact[m={m}]"), e.a, Route::Exact, &[]);
                            out.push(&format!("mixed_sigma_exact[m={m}]"), e.sigma, Route::Exact, &[]);
                            out.push(&format!("mixed_aeps_exact[m={m}]"), e.aeps, Route::Exact, &c);
                            (e.a, e.sigma, e.aeps)
                        }
                        None => (f64::NAN, f64::NAN, f64::NAN),
                    };
                    csv.push_str(&format!(
                        "{m},{},{},{},{},{},{},{}\n",
                        fmt_f64(r.a_leading),
                        fmt_f64(r.sigma_leading),
                        fmt_f64(r.aeps_leading),
                        fmt_f64(ea),
                        fmt_f64(es),
                        fmt_f64(ee),
                        fmt_f64(r.gibbs_weight)
                    ));
                }
                // the leading forms assume G_x(h^m) -> 0
                let decays = rows.windows(2).all(|w| w[1].gibbs_weight < w[0].gibbs_weight)
                    && rows.iter().all(|r| r.gibbs_weight < 1.0);
                out.check("mixed_gibbs_condition", decays, &[]);
                out.tables.push(Table { name: "mixed_family".into(), csv });
            }
            Quantity::FlatSpectrum => {
                let SystemSpec::Flat { a, samples } = cfg.system else { unreachable!("validated") };
                let ns = if cfg.ladder.samples.is_empty() { vec![samples] } else { cfg.ladder.samples.clone() };
                let rows: Vec<_> = ns
                    .par_iter()
                    .map(|&n| flat_spectrum_quantities(a, &bath, eps(), n))
                    .collect::<Result<_>>()?;
                let mut csv = String::from("n,a,sigma,aeps,a_ratio,sigma_ratio,aeps_ratio\n");
                for r in &rows {
                    let n = r.values.n;
                    let m = [("calibration", json!("ratios to the continuum leading forms, no rate is known"))];
                    out.push(&format!("flat_a_ratio[n={n}]"), r.a_ratio, Route::Exact, &m);
                    out.push(&format!("flat_sigma_ratio[n={n}]"), r.sigma_ratio, Route::Exact, &[]);
                    out.push(&format!("flat_aeps_ratio[n={n}]"), r.aeps_ratio, Route::Exact, &[]);
                    csv.push_str(&format!(
                        "{n},{},{},{},{},{},{}\n",
                        fmt_f64(r.values.a),
                        fmt_f64(r.values.sigma),
                        fmt_f64(r.values.aeps),
                        fmt_f64(r.a_ratio),
                        fmt_f64(r.sigma_ratio),
                        fmt_f64(r.aeps_ratio)
                    ));
                }
                out.tables.push(Table { name: "flat_spectrum".into(), csv });
            }
            Quantity::Wigner => {
                let SystemSpec::Semicircle { radius, samples } = cfg.system else { unreachable!("validated") };
                let ns = if cfg.ladder.samples.is_empty() { vec![samples] } else { cfg.ladder.samples.clone() };
                let rows: Vec<_> = ns
                    .par_iter()
                    .map(|&n| wigner_quantities(radius, &bath, eps(), n))
                    .collect::<Result<_>>()?;
                let mut csv = String::from("n,a,sigma,aeps,a_ratio,sigma_over_r,aeps_ratio,c_eps\n");
                for r in &rows {
                    let n = r.values.n;
                    out.push(&format!("wigner_a_ratio[n={n}]"), r.a_ratio, Route::Exact, &[]);
                    out.push(&format!("wigner_sigma_over_r[n={n}]"), r.sigma_over_r, Route::Exact, &[]);
                    out.push(&format!("wigner_aeps_ratio[n={n}]"), r.aeps_ratio, Route::Exact, &[]);
                    csv.push_str(&format!(
                        "{n},{},{},{},{},{},{},{}\n",
                        fmt_f64(r.values.a),
                        fmt_f64(r.values.sigma),
                        fmt_f64(r.values.aeps),
                        fmt_f64(r.a_ratio),
                        fmt_f64(r.sigma_over_r),
                        fmt_f64(r.aeps_ratio),
                        fmt_f64(r.c_eps)
                    ));
                }
                let c = crate::scenario::wigner_c(eps());
                let (lo, hi) = wigner_c_bounds(eps());
                out.push("wigner_c_eps", c, Route::ClosedForm, &[("lower", num(lo)), ("upper", num(hi))]);
                out.check("wigner_c_bounds", lo <= c && c <= hi, &[("lower", num(lo)), ("upper", num(hi))]);
                out.tables.push(Table { name: "wigner".into(), csv });
            }
        }
    }

    let passed = out.checks.iter().all(|c| c.passed);
    Ok(Report {
        schema: SCHEMA_VERSION,
        scenario: cfg.clone(),
        results: out.results,
        checks: out.checks,
        passed,
        generator: GENERATOR,
        tables: out.tables,
    })
}

fn solution_meta(sol: &SubsetSolution) -> Vec<(&'static str, Value)> {
    vec![
        ("certificate", json!(sol.certificate)),
        ("lambda", json!(sol.lambda.members())),
        ("kept_mass", num(sol.kept_mass)),
    ]
}

/// Exact law of the configured process, or a ladder over `L` and `E` when given.
fn work_law(cfg: &ScenarioConfig, b: &Built, q: &Distribution, cap: usize, out: &mut Out) -> Result<()> {
    let bath = cfg.bath;
    let wd = exact_work_distribution_with(b.process(), q, &bath, cap);
    match wd {
        Ok(wd) => {
            let m = [("atoms", json!(wd.law.len()))];
            out.push("work_mean", wd.law.mean(), Route::Exact, &m);
            out.push("work_std", wd.law.std_dev(), Route::Exact, &m);
            out.push("yield_mean", -wd.law.mean(), Route::Exact, &m);
            out.tables.push(Table { name: "work_law".into(), csv: wd.to_csv() });
        }
        Err(Error::AtomCapExceeded { atoms, cap }) => {
            // moments stay exact even when the full law does not fit
            let mo = exact_work_moments(b.process(), q, &bath)?;
            let m = [("atoms_needed", json!(atoms)), ("atom_cap", json!(cap))];
            out.push("work_mean", mo.mean, Route::Exact, &m);
            out.push("work_std", mo.std_dev(), Route::Exact, &m);
            out.push("yield_mean", -mo.mean, Route::Exact, &m);
        }
        Err(e) => return Err(e),
    }
    let spec = cfg.process.as_ref().expect("validated");
    let mut variants: Vec<(String, ProcessSpec)> = Vec::new();
    for &l in &cfg.ladder.steps {
        if let Some(p) = spec.with_steps(l) {
            variants.push((format!("L={l}"), p));
        }
    }
    for &e in &cfg.ladder.lift {
        if let Some(p) = spec.with_lift(e) {
            variants.push((format!("E={e}"), p));
        }
    }
    if variants.is_empty() {
        return Ok(());
    }
    let h = cfg.levels()?;
    let rows: Vec<(String, f64, f64)> = variants
        .par_iter()
        .map(|(tag, spec)| {
            let b = cfg.build(spec, &h, q)?;
            let mo = exact_work_moments(b.process(), q, &bath)?;
            Ok((tag.clone(), mo.mean, mo.variance))
        })
        .collect::<Result<_>>()?;
    let mut csv = String::from("point,mean,variance\n");
    for (tag, mean, var) in rows {
        out.push(&format!("work_mean[{tag}]"), mean, Route::Exact, &[]);
        out.push(&format!("work_variance[{tag}]"), var, Route::Exact, &[]);
        csv.push_str(&format!("{tag},{},{}\n", fmt_f64(mean), fmt_f64(var)));
    }
    out.tables.push(Table { name: "work_ladder".into(), csv });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ScenarioConfig {
        ScenarioConfig::from_json(text).unwrap()
    }

    #[test]
    fn degenerate_gibbs_has_no_content() {
        let c = cfg(r#"{"schema":1,"system":{"degenerate":{"n":2,"r":0}},"initial":{"explicit":[0.5,0.5]},
                        "quantities":["work_content"]}"#);
        let r = run(&c).unwrap();
        assert!(r.result("work_content").unwrap().abs() < 1e-15);
        assert!(r.passed);
    }

    #[test]
    fn field_paths_in_errors() {
        let e = ScenarioConfig::from_json(r#"{"schema":1,"system":{"levels":[0,0]},"initial":{"point_mass":5},"quantities":["work_content"]}"#)
            .unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "initial"), "{e}");
        let e = ScenarioConfig::from_json(r#"{"schema":1,"system":{"levels":[0,0]},"quantities":["bogus"]}"#).unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path.starts_with("quantities")), "{e}");
        let e = ScenarioConfig::from_json(r#"{"schema":2,"system":{"levels":[0]},"quantities":["free_energy"]}"#).unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "schema"));
        let e = ScenarioConfig::from_json(r#"{"schema":1,"system":{"levels":[0,1]},"quantities":["delta_set"]}"#).unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path.starts_with("quantities[0]")), "{e}");
    }

    #[test]
    fn report_is_reproducible() {
        let text = r#"{"schema":1,"system":{"levels":[0,0.5,1]},"initial":"uniform",
            "process":{"itr":{"final_levels":[1,0,0.2],"steps":5}},
            "quantities":["work_sample","jarzynski"],"seed":7,"samples":5000}"#;
        let a = serde_json::to_string(&run(&cfg(text)).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&cfg(text)).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
