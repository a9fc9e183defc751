use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use heavytail::harness::{
    compare_rate, configured_exponent, run_experiment, ExperimentConfig, RatePoint, SeedsConfig,
    DEFAULT_RATE_TOLERANCE,
};
use heavytail::noise::{make_zero_chain_oracle, Stream};
use heavytail::optim::{known_p_schedule, unknown_p_schedule_full, KnownPInputs, Schedule};
use heavytail::problems::prog_alpha;
use heavytail::verify::{run_suite, SuiteOptions};
use heavytail::{linalg, Error, HardInstanceParams, Method, OptimizerState};

#[derive(Parser, Debug)]
#[command(
    name = "heavytail",
    version,
    about = "Normalized momentum SGD under heavy-tailed noise"
)]
struct Cli {
    /// Worker threads for experiment cells (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment grid and write results.csv / results.json.
    Run(ExperimentArgs),
    /// Run an experiment, fit the log-log slope and compare with theory.
    Rates(RatesArgs),
    /// Run the lemma verification suite.
    Verify(VerifyArgs),
    /// Build the hard instance and track the progress of an optimizer on it.
    HardInstance(HardInstanceArgs),
    /// Print the (beta, eta, B) schedule.
    Schedule(ScheduleArgs),
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Experiment config (TOML).
    config_path: Option<PathBuf>,
    #[arg(long = "config")]
    config_flag: Option<PathBuf>,
    /// Override the seed count.
    #[arg(long)]
    seeds: Option<u64>,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Treat warnings and tolerance misses as failures (exit 2).
    #[arg(long)]
    strict: bool,
}

impl ExperimentArgs {
    fn load(&self) -> Result<ExperimentConfig, Failure> {
        let path = self
            .config_flag
            .as_ref()
            .or(self.config_path.as_ref())
            .ok_or_else(|| Failure::Config(anyhow!("no config given")))?;
        let mut cfg = ExperimentConfig::from_path(path).map_err(Failure::from)?;
        if let Some(n) = self.seeds {
            cfg.seeds = SeedsConfig::Count(n);
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        cfg.validate().map_err(Failure::from)?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct RatesArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Accepted |fitted - theoretical| (overrides the config).
    #[arg(long)]
    tolerance: Option<f64>,
    /// Test mode: fit an exact power law `T^exponent` instead of running.
    #[arg(long, value_name = "EXPONENT", allow_hyphen_values = true)]
    synthetic: Option<f64>,
    /// Horizons for the synthetic power law.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "256,512,1024,2048,4096,8192,16384"
    )]
    synthetic_grid: Vec<u64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Smaller sample sizes.
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    json: bool,
    /// Directory for verify_report.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScheduleChoice {
    KnownP,
    UnknownP,
}

#[derive(Args, Debug)]
struct HardInstanceArgs {
    #[arg(long, allow_hyphen_values = true)]
    p: f64,
    #[arg(long)]
    delta1: f64,
    #[arg(long)]
    l0: f64,
    #[arg(long)]
    sigma0: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value = "nsgdm")]
    method: Method,
    /// Iterations (default: twice the iteration floor, at least 100).
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, value_enum, default_value = "unknown-p")]
    schedule: ScheduleChoice,
    /// Clipping level for clipped-sgd.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    #[arg(long, value_enum, default_value = "known-p")]
    kind: ScheduleChoice,
    #[arg(long = "T", alias = "horizon")]
    horizon: u64,
    #[arg(long, default_value_t = 0.0)]
    l1: f64,
    #[arg(long)]
    l0: Option<f64>,
    #[arg(long)]
    delta1: Option<f64>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    sigma1: f64,
    #[arg(long)]
    p: Option<f64>,
    /// `|grad F(x1)|`.
    #[arg(long, default_value_t = 0.0)]
    grad_norm: f64,
    #[arg(long)]
    json: bool,
}

enum Failure {
    /// Bad input: exit 1.
    Config(anyhow::Error),
    /// Strict-mode assertion: exit 2.
    Strict(String),
    /// Anything else: exit 1.
    Other(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Io(_) | Error::InvalidParameter { .. } => {
                Failure::Config(e.into())
            }
            other => Failure::Other(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_run(args: &ExperimentArgs) -> Result<(), Failure> {
    let cfg = args.load()?;
    let res = run_experiment(&cfg)?;
    print!("{}", res.to_csv()?);
    if let Some(dir) = &cfg.output {
        res.write(dir)
            .with_context(|| format!("writing results to {}", dir.display()))?;
        eprintln!("wrote {}", dir.display());
    }
    let warnings = res.warnings();
    warn_all(&warnings);
    if args.strict && !warnings.is_empty() {
        return Err(Failure::Strict(format!("{} warnings", warnings.len())));
    }
    Ok(())
}

fn print_comparison(cmp: &heavytail::harness::RateComparison) {
    println!("fitted slope      = {:.4}", cmp.fit.slope);
    println!("theoretical       = {:.4}", cmp.theoretical);
    println!("|difference|      = {:.4}", cmp.abs_diff);
    println!("tolerance         = {:.4}", cmp.tolerance);
    println!("r_squared         = {:.4}", cmp.fit.r_squared);
    println!(
        "outcome           = {}",
        if cmp.within_tolerance {
            "within tolerance"
        } else {
            "outside tolerance"
        }
    );
}

fn cmd_rates(args: &RatesArgs) -> Result<(), Failure> {
    if let Some(exponent) = args.synthetic {
        let points: Vec<RatePoint> = args
            .synthetic_grid
            .iter()
            .map(|&t| RatePoint {
                t: t as f64,
                metric: (t as f64).powf(exponent),
                std_err: 0.0,
            })
            .collect();
        let tol = args.tolerance.unwrap_or(DEFAULT_RATE_TOLERANCE);
        let cmp = compare_rate(&points, exponent, tol)?;
        print_comparison(&cmp);
        return Ok(());
    }
    let cfg = args.exp.load()?;
    let theory = configured_exponent(&cfg)?.ok_or_else(|| {
        Failure::Config(anyhow!("manual schedule: set rates.exponent in the config"))
    })?;
    let tol = args
        .tolerance
        .or(cfg.rates.map(|r| r.tolerance))
        .unwrap_or(DEFAULT_RATE_TOLERANCE);
    let res = run_experiment(&cfg)?;
    print!("{}", res.to_csv()?);
    if let Some(dir) = &cfg.output {
        res.write(dir)
            .with_context(|| format!("writing results to {}", dir.display()))?;
    }
    warn_all(&res.warnings());
    let cmp = compare_rate(&res.rate_points(), theory, tol)?;
    print_comparison(&cmp);
    if args.exp.strict && !cmp.within_tolerance {
        return Err(Failure::Strict(format!(
            "slope {:.4} is {:.4} away from {:.4} (tolerance {tol})",
            cmp.fit.slope, cmp.abs_diff, theory
        )));
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let mut opts = SuiteOptions {
        quick: args.quick,
        ..SuiteOptions::default()
    };
    if let Some(s) = args.seed {
        opts.seed = s;
    }
    let report = run_suite(&opts);
    let json = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
    if args.json {
        println!("{json}");
    } else {
        print!("{}", report.to_text());
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Config(e.into()))?;
        std::fs::write(dir.join("verify_report.json"), &json)
            .map_err(|e| Failure::Config(e.into()))?;
    }
    if !report.passed() {
        return Err(Failure::Strict("verification failed".into()));
    }
    Ok(())
}

fn cmd_hard_instance(args: &HardInstanceArgs) -> Result<(), Failure> {
    let params = HardInstanceParams::new(args.p, args.delta1, args.l0, args.sigma0, args.epsilon)?;
    let oracle = make_zero_chain_oracle(&params)?;
    let problem = oracle.problem().clone();
    let floor = params.iteration_floor();
    let horizon = args
        .horizon
        .unwrap_or_else(|| ((2.0 * floor).ceil() as u64).max(100));
    println!("d                 = {}", params.d);
    println!("lambda            = {}", params.lambda);
    println!("q                 = {}", params.q);
    println!("iteration floor   = {floor:.1}  ((d - 1) / (2q))");
    println!("complexity order  = {:.4e}", params.complexity_order());
    println!("horizon           = {horizon}");

    let schedule = match args.schedule {
        ScheduleChoice::UnknownP => unknown_p_schedule_full(horizon, 0.0, 0.0, Some(args.p))?,
        ScheduleChoice::KnownP => known_p_schedule(&KnownPInputs {
            delta1: params.delta1,
            l0: params.l0,
            l1: 0.0,
            sigma0: params.sigma0,
            sigma1: 0.0,
            grad_norm_x1: linalg::norm(&problem.grad(&problem.x1)),
            p: params.p,
            horizon,
        })?,
    };
    let tau = match (args.method, args.tau) {
        (Method::ClippedSgd, None) => {
            return Err(Failure::Config(anyhow!(
                "--tau is required for clipped-sgd"
            )))
        }
        (_, t) => t.unwrap_or(f64::INFINITY),
    };
    println!(
        "schedule          = beta {}, eta {}, B {}",
        schedule.beta, schedule.eta, schedule.batch
    );
    let oracle = oracle.with_batch(schedule.batch)?;
    let mut stream = Stream::new(args.seed);
    let mut state = OptimizerState::new(problem.x1.clone());
    let eta_coords = vec![schedule.eta; problem.dim()];
    let mut next_report = 1u64;
    let mut reached = None;
    println!("{:>10}  {:>8}  {:>12}", "t", "prog_0", "|grad F|");
    for t in 1..=horizon {
        let prog = prog_alpha(&state.x, 0.0);
        if prog >= params.d && reached.is_none() {
            reached = Some(t);
        }
        if t == next_report || t == horizon {
            let gn = linalg::norm(&problem.grad(&state.x));
            println!("{t:>10}  {prog:>8}  {gn:>12.5e}");
            next_report *= 2;
        }
        let batch = oracle.sample_batch(&state.x, &mut stream);
        match args.method {
            Method::Nsgdm => {
                state.nsgdm_step(&batch, schedule.beta, schedule.eta)?;
            }
            Method::Ssgdm => {
                state.ssgdm_step(&batch, schedule.beta, &eta_coords)?;
            }
            Method::ClippedSgd | Method::Sgd => {
                state.clipped_sgd_step(&batch, schedule.eta, tau)?;
            }
        }
    }
    let final_prog = prog_alpha(&state.x, 0.0);
    println!("final prog_0      = {final_prog} of {}", params.d);
    match reached {
        Some(t) => println!("prog_0 reached d at t = {t}"),
        None => println!("prog_0 stayed below d for all {horizon} iterations"),
    }
    Ok(())
}

fn cmd_schedule(args: &ScheduleArgs) -> Result<(), Failure> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Failure::Config(anyhow!("--{name} is required for the known-p schedule")))
    };
    let s: Schedule = match args.kind {
        ScheduleChoice::KnownP => known_p_schedule(&KnownPInputs {
            delta1: need(args.delta1, "delta1")?,
            l0: need(args.l0, "l0")?,
            l1: args.l1,
            sigma0: need(args.sigma0, "sigma0")?,
            sigma1: args.sigma1,
            grad_norm_x1: args.grad_norm,
            p: need(args.p, "p")?,
            horizon: args.horizon,
        })?,
        ScheduleChoice::UnknownP => {
            unknown_p_schedule_full(args.horizon, args.l1, args.sigma1, args.p)?
        }
    };
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&s).map_err(anyhow::Error::from)?
        );
    } else {
        println!("beta = {}", s.beta);
        println!("eta = {}", s.eta);
        println!("B = {}", s.batch);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Rates(a) => cmd_rates(a),
        Command::Verify(a) => cmd_verify(a),
        Command::HardInstance(a) => cmd_hard_instance(a),
        Command::Schedule(a) => cmd_schedule(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Strict(m)) => {
            eprintln!("strict: {m}");
            ExitCode::from(2)
        }
    }
}
