//! `worklab`: work extraction and erasure experiments from the command line.
//!
//! Every subcommand prints one JSON document on stdout. The exit status is 0 when
//! all bound checks in the output pass, 1 when one fails, and 2 on errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use worklab::asymptotics::{d0_eps_expansion_with, expansion_csv, IidInstance, BERRY_ESSEEN_C};
use worklab::entropy::{eps_free_energy, expected_work_content, relative_entropy, smoothed_renyi0};
use worklab::fluctuation::{crooks_check, crooks_csv, eps_erasure_check, yield_fluctuation_sigma};
use worklab::process::{
    build_eps_erasure, build_eps_extraction, build_erasure, build_expected_extraction, build_itr, exact_work_distribution_with,
    exact_work_moments, sample_work, ItrPath, DEFAULT_ATOM_CAP, DEFAULT_PATH_CAP,
};
use worklab::scenario::{num, run, ScenarioConfig};
use worklab::thermo::{free_energy, gibbs};
use worklab::{Bath, Distribution, EnergyLevels, Error, Process};

#[derive(Parser)]
#[command(name = "worklab", version, about = "Work extraction and erasure against a heat bath")]
struct Cli {
    /// Seed for Monte Carlo sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Largest exact work law, in atoms after merging.
    #[arg(long, global = true)]
    atom_cap: Option<usize>,
    /// Write tabular output here.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Bath temperature kT; overrides the scenario file.
    #[arg(long = "bath-kT", global = true)]
    bath_kt: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form quantities of (q, h).
    Analyze(SystemArgs),
    /// Work law of a process, exact or sampled.
    Simulate {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        process: ProcessArgs,
        /// Sample this many runs instead of the exact law.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Crooks-type sandwich on forward and reversed processes started in equilibrium.
    Crooks {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        process: ProcessArgs,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
    /// D₀^ε of iid products against the expansion and its sandwich bounds.
    Asymptotics {
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_delimiter = ',', default_value = "64,256,1024")]
        m: Vec<usize>,
        /// Berry–Esseen constant.
        #[arg(long, default_value_t = BERRY_ESSEEN_C)]
        c: f64,
    },
    /// Erase to a target state; with --eps, the ε-deterministic variant.
    Erase {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        target: usize,
        #[arg(long, value_delimiter = ',')]
        final_levels: Option<Vec<f64>>,
        #[arg(long, default_value_t = 400)]
        steps: usize,
        #[arg(long, default_value_t = 50.0)]
        m_cutoff: f64,
        /// With --eps: the τ of a τ-approximate erasure.
        #[arg(long, default_value_t = 0.01)]
        tau: f64,
        #[arg(long, default_value_t = 20.0)]
        lift: f64,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        /// Allowed gap to the limiting cost, or slack on the construction bound.
        #[arg(long, default_value_t = 1e-2)]
        tolerance: f64,
    },
    /// Run a JSON scenario file.
    Scenario { file: PathBuf },
}

#[derive(Args)]
struct SystemArgs {
    /// Energy levels.
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<f64>,
    /// Initial distribution; Gibbs when absent.
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args)]
struct ProcessArgs {
    /// Process as JSON: {"initial_levels": [...], "steps": [...]}.
    #[arg(long, conflicts_with_all = ["itr_final", "fig2", "fig3"])]
    process_file: Option<PathBuf>,
    /// Isothermal reversible transformation to these levels.
    #[arg(long, value_delimiter = ',')]
    itr_final: Option<Vec<f64>>,
    /// Optimal expected extraction.
    #[arg(long)]
    fig2: bool,
    /// ε-deterministic extraction with this lift energy.
    #[arg(long)]
    fig3: Option<f64>,
    #[arg(long, default_value_t = 400)]
    steps: usize,
    #[arg(long, default_value_t = 50.0)]
    m_cutoff: f64,
}

struct Ctx {
    bath: Bath,
    seed: u64,
    atom_cap: usize,
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli) {
        Ok((doc, passed)) => {
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(Value, bool), Error> {
    let bath = match cli.bath_kt {
        Some(kt) => Bath::with_kt(kt)?,
        None => Bath::default(),
    };
    let ctx = Ctx { bath, seed: cli.seed.unwrap_or(0), atom_cap: cli.atom_cap.unwrap_or(DEFAULT_ATOM_CAP), csv: cli.csv.clone() };
    match cli.command {
        Command::Analyze(sys) => analyze(&ctx, &sys),
        Command::Simulate { system, process, samples } => simulate(&ctx, &system, &process, samples),
        Command::Crooks { system, process, delta } => crooks(&ctx, &system, &process, delta),
        Command::Asymptotics { q, r, eps, m, c } => asymptotics(&ctx, q, r, eps, &m, c),
        Command::Erase { system, target, final_levels, steps, m_cutoff, tau, lift, delta, tolerance } => {
            let e = EraseArgs { target, final_levels, steps, m_cutoff, eps: system.eps, tau, lift, delta, tolerance };
            erase(&ctx, &system, &e)
        }
        Command::Scenario { file } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| Error::Config { path: file.display().to_string(), msg: e.to_string() })?;
            let mut cfg = ScenarioConfig::from_json(&text)?;
            // flags given on the command line win over the file
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(c) = cli.atom_cap {
                cfg.atom_cap = Some(c);
            }
            if cli.bath_kt.is_some() {
                cfg.bath = bath;
            }
            let report = run(&cfg)?;
            write_csv(&ctx, &report.tables_csv())?;
            let passed = report.passed;
            Ok((serde_json::to_value(&report)?, passed))
        }
    }
}

fn write_csv(ctx: &Ctx, text: &str) -> Result<(), Error> {
    if let Some(path) = &ctx.csv {
        std::fs::write(path, text).map_err(|e| Error::Config { path: path.display().to_string(), msg: e.to_string() })?;
    }
    Ok(())
}

fn system(ctx: &Ctx, sys: &SystemArgs) -> Result<(EnergyLevels, Distribution), Error> {
    let h = EnergyLevels::new(sys.levels.clone())?;
    let q = match &sys.q {
        Some(p) => Distribution::new(p.clone())?,
        None => gibbs(&h, &ctx.bath),
    };
    Ok((h, q))
}

fn analyze(ctx: &Ctx, sys: &SystemArgs) -> Result<(Value, bool), Error> {
    let (h, q) = system(ctx, sys)?;
    let b = &ctx.bath;
    let mut doc = json!({
        "free_energy": num(free_energy(&h, b)),
        "work_content": num(expected_work_content(&q, &h, b)?),
        "relative_entropy_bits": num(relative_entropy(&q, &gibbs(&h, b))?),
        "yield_sigma": num(yield_fluctuation_sigma(&q, &h, b)?),
        "route": "closed-form",
    });
    if let Some(eps) = sys.eps {
        let (fe, sol) = eps_free_energy(&q, &h, b, eps)?;
        let (d0, _) = smoothed_renyi0(&q, &gibbs(&h, b), eps)?;
        doc["eps"] = num(eps);
        doc["eps_free_energy"] = num(fe);
        doc["eps_work_content"] = num(fe - free_energy(&h, b));
        doc["smoothed_renyi0_bits"] = num(d0);
        doc["witness"] = serde_json::to_value(&sol)?;
    }
    Ok((doc, true))
}

fn process(ctx: &Ctx, sys: &SystemArgs, args: &ProcessArgs) -> Result<(Process, EnergyLevels, Distribution), Error> {
    let (h, q) = system(ctx, sys)?;
    let b = &ctx.bath;
    let p = if let Some(path) = &args.process_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config { path: path.display().to_string(), msg: e.to_string() })?;
        serde_json::from_str::<Process>(&text)?
    } else if let Some(f) = &args.itr_final {
        build_itr(&h, &EnergyLevels::new(f.clone())?, args.steps, &ItrPath::Linear, b)?
    } else if let Some(lift) = args.fig3 {
        let eps = sys.eps.ok_or_else(|| Error::InvalidParameter("--fig3 needs --eps".into()))?;
        build_eps_extraction(&q, &h, b, eps, lift, args.steps)?.0
    } else if args.fig2 {
        build_expected_extraction(&q, &h, b, args.steps, args.m_cutoff)?
    } else {
        return Err(Error::InvalidParameter("give one of --process-file, --itr-final, --fig2, --fig3".into()));
    };
    Ok((p, h, q))
}

fn simulate(ctx: &Ctx, sys: &SystemArgs, args: &ProcessArgs, samples: Option<usize>) -> Result<(Value, bool), Error> {
    let (p, _, q) = process(ctx, sys, args)?;
    let wd = match samples {
        Some(n) => sample_work(&p, &q, &ctx.bath, ctx.seed, n)?,
        None => exact_work_distribution_with(&p, &q, &ctx.bath, ctx.atom_cap)?,
    };
    write_csv(ctx, &wd.to_csv())?;
    let doc = json!({
        "mean": num(wd.law.mean()),
        "std": num(wd.law.std_dev()),
        "atoms": wd.law.len(),
        "min": num(wd.law.min()),
        "max": num(wd.law.max()),
        "provenance": wd.provenance,
    });
    Ok((doc, true))
}

fn crooks(ctx: &Ctx, sys: &SystemArgs, args: &ProcessArgs, delta: f64) -> Result<(Value, bool), Error> {
    let (p, _, _) = process(ctx, sys, args)?;
    let reps = crooks_check(&p, &ctx.bath, None, delta, DEFAULT_PATH_CAP)?;
    write_csv(ctx, &crooks_csv(&reps))?;
    let bad = reps.iter().filter(|r| !r.ok).count();
    let doc = json!({ "delta": num(delta), "grid_points": reps.len(), "violations": bad, "route": "exact" });
    Ok((doc, bad == 0))
}

fn asymptotics(ctx: &Ctx, q: Vec<f64>, r: Vec<f64>, eps: f64, ms: &[usize], c: f64) -> Result<(Value, bool), Error> {
    use rayon::prelude::*;
    let base = IidInstance::new(Distribution::new(q)?, Distribution::new(r)?, 1, eps)?;
    let rows: Vec<_> = ms.par_iter().map(|&m| d0_eps_expansion_with(&base.with_m(m)?, c)).collect::<Result<_, _>>()?;
    write_csv(ctx, &expansion_csv(&rows))?;
    let passed = rows.iter().all(|r| r.sandwich_holds());
    let rows_json: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "m": r.m,
                "exact": num(r.exact),
                "certificate": r.certificate,
                "first_order": num(r.first_order),
                "second_order": num(r.second_order),
                "lower_sandwich": r.lower_sandwich.map_or(Value::Null, num),
                "upper_sandwich": r.upper_sandwich.map_or(Value::Null, num),
                "residual": num(r.residual),
                "target": num(r.target),
                "sandwich_holds": r.sandwich_holds(),
            })
        })
        .collect();
    Ok((json!({ "eps": num(eps), "c": num(c), "rows": rows_json }), passed))
}

struct EraseArgs {
    target: usize,
    final_levels: Option<Vec<f64>>,
    steps: usize,
    m_cutoff: f64,
    eps: Option<f64>,
    tau: f64,
    lift: f64,
    delta: f64,
    tolerance: f64,
}

fn erase(ctx: &Ctx, sys: &SystemArgs, a: &EraseArgs) -> Result<(Value, bool), Error> {
    let (h, q) = system(ctx, sys)?;
    let b = &ctx.bath;
    let h_f = match &a.final_levels {
        Some(v) => EnergyLevels::new(v.clone())?,
        None => h.clone(),
    };
    let s = a.target;
    if s >= h.len() {
        return Err(Error::IndexOutOfRange { index: s, n: h.len() });
    }
    if let Some(eps) = a.eps {
        let built = build_eps_erasure(&q, &h, &h_f, b, s, eps, a.tau, a.lift, a.steps)?;
        let r = eps_erasure_check(&built, &q, &h, &h_f, b, s, eps, a.delta, a.tolerance, ctx.atom_cap)?;
        let doc = json!({
            "inf_delta": num(r.inf_delta),
            "lower": num(r.lower),
            "upper": num(r.upper),
            "tau": num(r.tau),
            "final_mass": num(r.final_mass),
            "ok": r.ok,
            "route": "exact",
        });
        return Ok((doc, r.ok));
    }
    let p = build_erasure(&q, &h, &h_f, b, s, a.m_cutoff, a.steps)?;
    let mo = exact_work_moments(&p, &q, b)?;
    let limit = h_f.levels()[s] - free_energy(&h, b) - b.kt() * std::f64::consts::LN_2 * relative_entropy(&q, &gibbs(&h, b))?;
    let fin = p.final_state_distribution(&q, b)?.probs()[s];
    let ok = (mo.mean - limit).abs() <= a.tolerance;
    let doc = json!({
        "mean_cost": num(mo.mean),
        "std_cost": num(mo.std_dev()),
        "limit": num(limit),
        "final_target_mass": num(fin),
        "ok": ok,
        "route": "exact",
    });
    Ok((doc, ok))
}
