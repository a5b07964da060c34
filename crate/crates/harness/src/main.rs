use std::fs;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use olp_core::dual_lp::{solve_offline_primal, DEFAULT_TOL};
use olp_core::input_gen::{generate_instance, CapacityBounds, InputModel, Instance};
use olp_core::metrics::RegretReport;
use olp_core::planner::{optimal_frequency, BudgetModel};
use olp_core::policies::{run_policy, PolicyKind};
use olp_harness::report::{compare_table, csv, failure_manifest, regret_table};
use olp_harness::{run_experiment, ExperimentResult, ExperimentSpec, FrequencyRule};

/// Exit code when some trial failed.
const EXIT_TRIAL_FAILURE: u8 = 4;
/// Exit code when no frequency fits the compute budget.
const EXIT_PLAN_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "olp", version, about = "Online linear programming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials and print a regret table per horizon and frequency.
    Run(ExperimentArgs),
    /// Compare algorithms: regret, wall time and LP solve counts.
    Compare(ExperimentArgs),
    /// Pick the re-solving frequency for a compute budget.
    Plan(PlanArgs),
    /// Generate an instance and write it in columnar text form.
    Gen(GenArgs),
    /// Run one policy on a serialized instance.
    Replay(ReplayArgs),
}

/// Flags override values from `--config`. List flags take comma-separated values.
#[derive(Args)]
struct ExperimentArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Horizons, e.g. `1000,10000`.
    #[arg(long = "T")]
    horizons: Option<String>,
    #[arg(long)]
    m: Option<String>,
    /// `input1` or `input2`.
    #[arg(long)]
    model: Option<String>,
    /// Algorithms: ahdl, first-order, hybrid, enhanced-hybrid.
    #[arg(long)]
    algo: Option<String>,
    /// Fixed re-solving periods.
    #[arg(long)]
    freq: Option<String>,
    /// Exponents β for f = ⌈T^β⌉, decimals or fractions such as `1/3`.
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// `hard` or `theoretical`.
    #[arg(long)]
    guard: Option<String>,
    /// Stability band δ for the theoretical guard.
    #[arg(long)]
    delta: Option<String>,
    /// `harmonic` or `batch-const`.
    #[arg(long)]
    steps: Option<String>,
    /// Reuse the previous LP basis.
    #[arg(long)]
    warm_start: bool,
    /// Worker threads.
    #[arg(long)]
    workers: Option<String>,
    /// Per-trial CSV path; without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_config_file(path)?,
            None => ExperimentSpec::default(),
        };
        let flags = [
            ("T", &self.horizons),
            ("m", &self.m),
            ("model", &self.model),
            ("algo", &self.algo),
            ("freq", &self.freq),
            ("beta", &self.beta),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("guard", &self.guard),
            ("delta", &self.delta),
            ("steps", &self.steps),
            ("workers", &self.workers),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                spec.apply(key, v)?;
            }
        }
        if self.warm_start {
            spec.warm_start = true;
        }
        if let Some(out) = &self.out {
            spec.out = Some(out.clone());
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long = "T")]
    horizon: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Compute budget R in abstract units; unlimited if omitted.
    #[arg(long)]
    budget: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long = "T")]
    horizon: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value = "input1")]
    model: InputModel,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lower bound of the average capacity draw.
    #[arg(long, default_value_t = olp_core::input_gen::DEFAULT_D_LO)]
    d_lo: f64,
    /// Upper bound of the average capacity draw.
    #[arg(long, default_value_t = olp_core::input_gen::DEFAULT_D_HI)]
    d_hi: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Instance file written by `gen`.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "hybrid")]
    algo: PolicyKind,
    #[arg(long)]
    freq: Option<usize>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    guard: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// Per-step trajectory output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(&args, false),
        Command::Compare(args) => cmd_run(&args, true),
        Command::Plan(args) => cmd_plan(&args),
        Command::Gen(args) => cmd_gen(&args),
        Command::Replay(args) => cmd_replay(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing to stdout"),
    }
}

fn cmd_run(args: &ExperimentArgs, compare: bool) -> Result<ExitCode> {
    let spec = args.spec()?;
    if compare && spec.algorithms.len() < 2 {
        bail!("compare needs at least two algorithms");
    }
    let result: ExperimentResult = run_experiment(&spec)?;
    write_output(spec.out.as_ref(), &csv(&result))?;
    let table = if compare { compare_table(&result) } else { regret_table(&result) };
    if spec.out.is_some() {
        print!("{table}");
    } else {
        eprint!("{table}");
    }
    if result.has_failures() {
        eprint!("failed trials:\n{}", failure_manifest(&result));
        return Ok(ExitCode::from(EXIT_TRIAL_FAILURE));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_plan(args: &PlanArgs) -> Result<ExitCode> {
    let model = BudgetModel::new(args.horizon, args.m, args.budget.unwrap_or(f64::INFINITY))?;
    let plan = optimal_frequency(&model);
    println!("f = {}", plan.frequency);
    println!("bound = {:.6}", plan.bound_value);
    println!("cost = {}", model.cost(plan.frequency));
    if !plan.feasible {
        eprintln!("warning: no frequency fits the budget; reporting the unconstrained minimizer");
        return Ok(ExitCode::from(EXIT_PLAN_INFEASIBLE));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(args: &GenArgs) -> Result<ExitCode> {
    let bounds = CapacityBounds { d_lo: args.d_lo, d_hi: args.d_hi };
    let instance = generate_instance(args.horizon, args.m, args.model, args.seed, bounds)?;
    write_output(args.out.as_ref(), &instance.to_columnar())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(args: &ReplayArgs) -> Result<ExitCode> {
    let file = fs::File::open(&args.instance).with_context(|| format!("opening {}", args.instance.display()))?;
    let instance = Instance::from_columnar(BufReader::new(file))?;
    let mut spec = ExperimentSpec::default();
    for (key, value) in [("guard", &args.guard), ("delta", &args.delta), ("steps", &args.steps)] {
        if let Some(v) = value {
            spec.apply(key, v)?;
        }
    }
    let frequency = match (args.freq, &args.beta) {
        (Some(f), _) => FrequencyRule::Fixed(f).frequency(instance.horizon),
        (None, Some(beta)) => {
            let beta = olp_harness::spec::parse_beta(beta).map_err(anyhow::Error::msg)?;
            FrequencyRule::Power(beta).frequency(instance.horizon)
        }
        (None, None) if args.algo.uses_frequency() => FrequencyRule::Power(1.0 / 3.0).frequency(instance.horizon),
        (None, None) => 1,
    };
    let cfg = spec.policy_config(args.algo, frequency);
    let trajectory = run_policy(&instance, &cfg)?;
    let offline = solve_offline_primal(&instance, DEFAULT_TOL)?.objective;
    let report = RegretReport::new(&trajectory, &instance, offline);
    if let Some(out) = &args.out {
        fs::write(out, trajectory.to_columnar(&instance)).with_context(|| format!("writing {}", out.display()))?;
    }
    println!(
        "algorithm={} f={} revenue={:.6} offline={:.6} gap={:.6} violation={:.6} total={:.6} lp_solves={}",
        args.algo,
        frequency,
        report.online_revenue,
        report.offline_objective,
        report.optimality_gap,
        report.violation,
        report.total,
        trajectory.lp_solve_count
    );
    Ok(ExitCode::SUCCESS)
}
