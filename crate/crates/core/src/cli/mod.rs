//! Command-line driver. `run` parses arguments, executes one subcommand and
//! returns the process exit code.

pub mod bench;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::alloc::AllocParams;
use crate::error::{OmpnError, Result};
use crate::exact::{binomial, solve_exact, ExactParams, Solution};
use crate::heuristics::{heuristic1, heuristic2, initial_solution, HeuristicParams};
use crate::instance::{
    builtin_by_name, generate_random, load_instance, preset_with_defaults, Instance, ScenarioSpec, SelfService,
};
use crate::model::text::{to_text, ModelFormat};
use crate::model::{export_model, ExportOptions, Formulation, Strengthening};
use crate::om::LambdaVector;

use bench::{run_suite, BenchOptions, Suite};
use report::{evaluate_report, ParamsEcho, RunReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CAPABILITY: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "ompn", version, about = "Ordered p-median location with ball neighborhoods")]
pub struct Cli {
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random instance.
    Generate(GenerateArgs),
    /// Solve an instance and write a run report.
    Solve(SolveArgs),
    /// Write a mixed-integer model of an instance.
    Export(ExportArgs),
    /// Re-check a run report against its instance.
    Evaluate(EvaluateArgs),
    /// Run a benchmark suite and write CSV.
    Bench(BenchArgs),
    /// Describe an instance, or list built-ins.
    Info(InfoArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Radius range 1, 2 or 3.
    #[arg(long, default_value_t = 1)]
    pub scenario: u8,
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// Preset name (median, center, kcentrum, centdian) or comma-separated weights.
    #[arg(long, default_value = "median")]
    pub lambda: String,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// zero or travel.
    #[arg(long)]
    pub self_service: Option<String>,
    #[arg(long, env = "OMPN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, env = "OMPN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Multistarts of the location step.
    #[arg(long, default_value_t = 20)]
    pub starts: usize,
    /// Sweep budget of h1.
    #[arg(long, default_value_t = 50)]
    pub it_max: usize,
    /// Lower-bound weight of the starting cost matrix.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    /// h1 probes one random open site per sweep.
    #[arg(long)]
    pub randomized: bool,
    /// Largest C(n,p) the exact solver accepts.
    #[arg(long, default_value_t = 1e7)]
    pub subset_cap: f64,
}

impl SolverArgs {
    fn alloc(&self) -> AllocParams {
        AllocParams {
            starts: self.starts,
            seed: self.seed,
            ..AllocParams::default()
        }
    }

    pub fn heuristic(&self) -> HeuristicParams {
        HeuristicParams {
            it_max: self.it_max,
            theta: self.theta,
            randomized: self.randomized,
            alloc: self.alloc(),
            ..HeuristicParams::default()
        }
    }

    pub fn exact(&self) -> ExactParams {
        ExactParams {
            subset_cap: self.subset_cap,
            alloc: self.alloc(),
            ..ExactParams::default()
        }
    }

    fn echo(&self, solver: &str) -> ParamsEcho {
        let heuristic = solver != "exact";
        ParamsEcho {
            starts: self.starts,
            it_max: (solver == "h1").then_some(self.it_max),
            theta: heuristic.then_some(self.theta),
            randomized: (solver == "h1").then_some(self.randomized),
            subset_cap: (!heuristic).then_some(self.subset_cap),
        }
    }

    pub fn run(&self, solver: &str, instance: &Instance) -> Result<Solution> {
        match solver {
            "exact" => solve_exact(instance, &self.exact()),
            "h0" => initial_solution(instance, &self.heuristic()),
            "h1" => heuristic1(instance, &self.heuristic()),
            "h2" => heuristic2(instance, &self.heuristic()),
            other => Err(OmpnError::validation(
                "solver",
                format!("`{other}` is not exact, h0, h1 or h2"),
            )),
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance file or built-in name.
    #[arg(long = "in")]
    pub input: String,
    #[arg(long, default_value = "exact")]
    pub solver: String,
    #[command(flatten)]
    pub params: SolverArgs,
    /// Run report file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include wall time in the report (breaks byte-identity across runs).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long = "in")]
    pub input: String,
    /// 3I, 2I, OT, BEP or MILP_block.
    #[arg(long, default_value = "BEP")]
    pub formulation: String,
    /// Apply bound-based strengthening.
    #[arg(long)]
    pub strengthen: bool,
    /// Upper bound source: h0, h1, h2, exact or a number.
    #[arg(long, default_value = "h0")]
    pub ub_from: String,
    /// Also apply the suffix elimination rule (three-index only).
    #[arg(long)]
    pub suffix_rule: bool,
    #[arg(long)]
    pub no_position_rule: bool,
    #[arg(long)]
    pub no_valid_equations: bool,
    /// JSON array of dual-ball extreme points for MILP_block.
    #[arg(long)]
    pub dual_points: Option<PathBuf>,
    /// conic_text or lp_text.
    #[arg(long, default_value = "conic_text")]
    pub format: String,
    #[command(flatten)]
    pub params: SolverArgs,
    /// Model file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long = "in")]
    pub input: String,
    /// Run report to check.
    #[arg(long)]
    pub solution: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// us49-quick or us49-full.
    #[arg(long, default_value = "us49-quick")]
    pub suite: String,
    #[command(flatten)]
    pub params: SolverArgs,
    /// Exact solves only where C(n,p) is at most this.
    #[arg(long, default_value_t = 5000.0)]
    pub exact_cap: f64,
    /// Add timing and timestamp columns.
    #[arg(long)]
    pub timings: bool,
    /// CSV file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[arg(long = "in")]
    pub input: Option<String>,
}

pub fn exit_code(err: &OmpnError) -> i32 {
    match err {
        OmpnError::CapExceeded { .. } => EXIT_CAPABILITY,
        OmpnError::Io { .. } => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(OmpnError::validation("threads", e.to_string())),
        },
        None => dispatch(&cli.command),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: &Command) -> Result<i32> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Export(a) => export(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Bench(a) => bench(a),
        Command::Info(a) => info(a),
    }
}

/// A path to an instance file, or a built-in name.
pub fn resolve_instance(spec: &str) -> Result<Instance> {
    let path = Path::new(spec);
    if path.exists() {
        return load_instance(path);
    }
    match builtin_by_name(spec) {
        Some(r) => r,
        None => Err(OmpnError::Io {
            path: spec.into(),
            detail: "no such file or built-in instance".into(),
        }),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| OmpnError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn generate(a: &GenerateArgs) -> Result<i32> {
    let scenario = ScenarioSpec::new(a.scenario)?;
    let explicit = a.lambda.contains(',') || a.lambda.parse::<f64>().is_ok();
    let preset = if explicit {
        preset_with_defaults("median", None, None, a.n)?
    } else {
        preset_with_defaults(&a.lambda, a.k, a.alpha, a.n)?
    };
    let mut inst = generate_random(a.n, a.dim, scenario, a.p, preset, a.seed)?;
    if explicit {
        let weights = a
            .lambda
            .split(',')
            .map(|w| {
                w.trim()
                    .parse::<f64>()
                    .map_err(|_| OmpnError::validation("lambda", format!("`{w}` is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        inst = inst.with_lambda(LambdaVector::new(weights)?)?;
    }
    if let Some(mode) = &a.self_service {
        inst = inst.with_self_service(SelfService::parse(mode)?);
    }
    emit(a.out.as_deref(), &inst.to_json_string())?;
    Ok(EXIT_OK)
}

fn solve(a: &SolveArgs) -> Result<i32> {
    let inst = resolve_instance(&a.input)?;
    let sol = a.params.run(&a.solver, &inst)?;
    let report = RunReport::new(&inst, &a.solver, a.params.seed, a.params.echo(&a.solver), &sol, a.timings);
    println!("{}", report.summary());
    if let Some(out) = &a.out {
        std::fs::write(out, report.to_json()).map_err(|e| OmpnError::io(out, e))?;
    }
    Ok(EXIT_OK)
}

fn upper_bound(a: &ExportArgs, inst: &Instance) -> Result<f64> {
    if let Ok(v) = a.ub_from.parse::<f64>() {
        return Ok(v);
    }
    Ok(a.params.run(&a.ub_from, inst)?.objective)
}

fn export(a: &ExportArgs) -> Result<i32> {
    let inst = resolve_instance(&a.input)?;
    let formulation = Formulation::parse(&a.formulation)?;
    let format = ModelFormat::parse(&a.format)?;
    let mut options = ExportOptions::default();
    if let Some(path) = &a.dual_points {
        let text = std::fs::read_to_string(path).map_err(|e| OmpnError::io(path, e))?;
        let points: Vec<Vec<f64>> = serde_json::from_str(&text).map_err(|e| OmpnError::Parse {
            line: e.line(),
            column: e.column(),
            detail: e.to_string(),
        })?;
        options.block_dual_points = Some(points);
    }
    if a.strengthen {
        let mut s = Strengthening::new(upper_bound(a, &inst)?);
        s.suffix_rule = a.suffix_rule;
        s.position_rule = !a.no_position_rule;
        s.valid_equations = !a.no_valid_equations;
        options.strengthen = Some(s);
    }
    let model = export_model(&inst, formulation, &options)?;
    let text = to_text(&model, format)?;
    emit(a.out.as_deref(), &text)?;
    if a.out.is_some() {
        let c = model.counts();
        println!(
            "{formulation}: {} variables ({} binary), {} linear rows, {} cone rows",
            c.variables, c.binaries, c.linear, c.soc
        );
    }
    Ok(EXIT_OK)
}

fn evaluate(a: &EvaluateArgs) -> Result<i32> {
    let inst = resolve_instance(&a.input)?;
    let text = std::fs::read_to_string(&a.solution).map_err(|e| OmpnError::io(&a.solution, e))?;
    let report = RunReport::from_json(&text)?;
    let checks = evaluate_report(&inst, &report);
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if checks.iter().all(|c| c.pass) {
        EXIT_OK
    } else {
        EXIT_INVALID
    })
}

fn bench(a: &BenchArgs) -> Result<i32> {
    let suite = Suite::parse(&a.suite)?;
    let opts = BenchOptions {
        heuristic: a.params.heuristic(),
        exact: a.params.exact(),
        exact_cap: a.exact_cap,
        timings: a.timings,
    };
    let csv = run_suite(suite, &opts, |cell| eprintln!("done {cell}"))?;
    emit(a.out.as_deref(), &csv)?;
    Ok(EXIT_OK)
}

fn info(a: &InfoArgs) -> Result<i32> {
    let Some(spec) = &a.input else {
        println!("solvers: exact h0 h1 h2");
        let ids: Vec<&str> = Formulation::ALL.iter().map(|f| f.id()).collect();
        println!("formulations: {}", ids.join(" "));
        println!("formats: conic_text lp_text");
        println!("built-ins: example_3_5, us49_s{{1,2,3}}_p<N>_{{median,center,kcentrum,centdian}}");
        println!("bench suites: us49-quick us49-full");
        return Ok(EXIT_OK);
    };
    let inst = resolve_instance(spec)?;
    let n = inst.n();
    let subsets = binomial(n, inst.p());
    println!("name: {}", inst.name());
    println!("hash: {}", inst.hash());
    println!("sites: {n} in dimension {}", inst.dim());
    println!("facilities: {}", inst.p());
    println!("ball norm: {}  distance norm: {}", inst.ball_norm(), inst.distance_norm());
    println!("self-service: {}", inst.self_service().as_str());
    println!("weights: {:?}", inst.lambda().weights());
    println!(
        "open sets: {subsets:.0} ({})",
        if subsets <= ExactParams::default().subset_cap {
            "exact solver available"
        } else {
            "use h1 or h2"
        }
    );
    Ok(EXIT_OK)
}
