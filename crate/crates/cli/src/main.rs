use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use covplan::bench::{
    compute_metrics, export_report, read_trajectory, run_benchmark, scaling_sweep, write_report, write_trajectory,
    BenchConfig, ReportFormat, SurfaceSource,
};
use covplan::kinematics::ToleranceSpec;
use covplan::planners::{plan, validate_trajectory, Method, PlannerParams};
use covplan::Error;

/// Coverage path planning for redundant manipulators.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one surface with one method; writes the trajectory and metrics.
    Plan(PlanArgs),
    /// Repeat every method and report mean and spread.
    Bench(BenchArgs),
    /// Benchmark at several target densities.
    Sweep(SweepArgs),
    /// Re-check an exported trajectory against its surface and robot.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Common {
    /// TOML benchmark config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Surface kind (hemisphere, bowl, floor-grid, stairs) or mesh file
    /// (.obj, .ply).
    #[arg(long)]
    surface: Option<String>,
    /// Approximate target count of a generated surface.
    #[arg(long)]
    targets: Option<usize>,
    /// Bundled model name or model file.
    #[arg(long)]
    robot: Option<String>,
    /// free-spin, position-only or full-6dof.
    #[arg(long)]
    tolerance: Option<String>,
    /// IK restarts per target.
    #[arg(long)]
    samples: Option<usize>,
    /// Weight of normal angle against distance in the Cartesian metric.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Seconds without improvement before a solver stops, or "off".
    #[arg(long)]
    stagnation_secs: Option<String>,
    /// Kick rounds without improvement before a solver stops, or "off".
    #[arg(long)]
    stagnation_rounds: Option<String>,
    /// Hard wall-clock cap per solver call.
    #[arg(long)]
    time_cap_secs: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "h-joint-gtsp")]
    method: Method,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Methods to compare, in report order; repeatable. Defaults to all.
    #[arg(long)]
    method: Vec<Method>,
    #[arg(long)]
    repeats: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    bench: BenchArgs,
    /// Comma-separated target counts.
    #[arg(long, value_delimiter = ',')]
    densities: Vec<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    /// Trajectory exported by `plan` (.csv or .json).
    #[arg(long)]
    trajectory: PathBuf,
}

/// Exit codes.
const INFEASIBLE: u8 = 2;
const INPUT_ERROR: u8 = 3;
const INVALID_TRAJECTORY: u8 = 4;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are input errors; help and version are not errors
            return if e.use_stderr() { ExitCode::from(INPUT_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<Error>() {
                Some(Error::Unreachable { .. } | Error::Infeasible(_) | Error::EmptySampleSet { .. }) => INFEASIBLE,
                Some(Error::InvalidTrajectory(_)) => INVALID_TRAJECTORY,
                _ => INPUT_ERROR,
            };
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Plan(a) => plan_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Validate(a) => validate_cmd(a),
    }
}

fn limit<T: std::str::FromStr>(flag: &str, v: &str) -> Result<Option<T>, Error> {
    if v == "off" {
        return Ok(None);
    }
    v.parse()
        .map(Some)
        .map_err(|_| Error::InvalidParameter(format!("--{flag}: expected a number or \"off\", got `{v}`")))
}

/// Config file (or defaults), then every flag on top.
fn config(c: &Common) -> Result<BenchConfig, Error> {
    let mut cfg = match &c.config {
        Some(path) => BenchConfig::from_file(path)?,
        None => BenchConfig::wok(60),
    };
    if let Some(s) = &c.surface {
        cfg.set_source(SurfaceSource::parse(s)?);
    }
    if let Some(n) = c.targets {
        cfg = cfg.with_target_count(n)?;
    }
    if let Some(r) = &c.robot {
        cfg.robot = r.clone();
    }
    if let Some(t) = &c.tolerance {
        cfg.tolerance = match t.as_str() {
            "free-spin" => ToleranceSpec::free_spin(),
            "position-only" => ToleranceSpec::position_only(),
            "full-6dof" => ToleranceSpec::full_6dof(),
            _ => return Err(Error::InvalidParameter(format!("unknown tolerance `{t}`"))),
        };
    }
    let p = &mut cfg.planner;
    if let Some(v) = c.samples {
        p.samples = v;
    }
    if let Some(v) = c.alpha {
        p.alpha = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = &c.stagnation_secs {
        p.budget.stagnation_secs = limit("stagnation-secs", v)?;
    }
    if let Some(v) = &c.stagnation_rounds {
        p.budget.stagnation_rounds = limit("stagnation-rounds", v)?;
    }
    if let Some(v) = c.time_cap_secs {
        p.budget.time_cap_secs = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn bench_config(a: &BenchArgs) -> Result<BenchConfig, Error> {
    let mut cfg = config(&a.common)?;
    if !a.method.is_empty() {
        cfg.methods = a.method.clone();
    }
    if let Some(r) = a.repeats {
        cfg.repeats = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(path: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn plan_cmd(a: PlanArgs) -> anyhow::Result<()> {
    let cfg = config(&a.common)?;
    let chain = cfg.chain()?;
    let problem = cfg.problem()?;
    let params = PlannerParams {
        seed: cfg.seed,
        ..cfg.planner
    };
    let p = plan(a.method, &problem, &chain, &cfg.tolerance, &params)?;
    validate_trajectory(&p.trajectory, &problem.targets, &chain, &cfg.tolerance, &p.reconfig, params.alpha, &params.ik)?;
    let metrics = compute_metrics(&p.trajectory, &problem.targets, &chain, &cfg.tolerance)?;

    out_dir(&a.common.out)?;
    write_trajectory(&p.trajectory, &a.common.out.join("trajectory.csv"))?;
    write_trajectory(&p.trajectory, &a.common.out.join("trajectory.json"))?;
    let summary = serde_json::json!({
        "method": a.method,
        "n": problem.len(),
        "seed": params.seed,
        "metrics": metrics,
        "stats": p.stats,
    });
    write_report(&summary, &a.common.out.join("metrics.json"))?;

    println!("{} on {} targets", a.method, problem.len());
    println!("  reconfigurations  {}", metrics.reconfigs);
    println!("  joint movement    {:.3} rad", metrics.movement);
    println!("  time              {:.2} s", p.stats.total_secs);
    println!("  max position err  {:.1e} m", metrics.max_position_error);
    match metrics.max_rotation_error {
        Some(r) => println!("  max rotation err  {r:.1e} rad"),
        None => println!("  max rotation err  -"),
    }
    println!("wrote {}", a.common.out.display());
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> anyhow::Result<()> {
    let cfg = bench_config(&a)?;
    let reports = run_benchmark(&cfg)?;
    out_dir(&a.common.out)?;
    write_report(&reports, &a.common.out.join("report.json"))?;
    let table = export_report(&reports, ReportFormat::Table)?;
    std::fs::write(a.common.out.join("report.txt"), &table).context("writing report.txt")?;
    print!("{table}");
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> anyhow::Result<()> {
    let cfg = bench_config(&a.bench)?;
    let densities = if a.densities.is_empty() { cfg.densities.clone() } else { a.densities.clone() };
    if densities.is_empty() {
        return Err(Error::InvalidParameter("no densities given (--densities or `densities` in the config)".into()).into());
    }
    let points = scaling_sweep(&cfg, &densities)?;
    let out = &a.bench.common.out;
    out_dir(out)?;
    write_report(&points, &out.join("sweep.json"))?;
    for p in &points {
        println!("n = {}", p.n);
        print!("{}", export_report(&p.reports, ReportFormat::Table)?);
        println!();
    }
    Ok(())
}

fn validate_cmd(a: ValidateArgs) -> anyhow::Result<()> {
    let cfg = config(&a.common)?;
    let chain = cfg.chain()?;
    let problem = cfg.problem()?;
    let traj = read_trajectory(&a.trajectory)?;
    let reconfig = problem.reconfig_params(&cfg.planner, &cfg.tolerance);
    validate_trajectory(&traj, &problem.targets, &chain, &cfg.tolerance, &reconfig, cfg.planner.alpha, &cfg.planner.ik)?;
    let m = compute_metrics(&traj, &problem.targets, &chain, &cfg.tolerance)?;
    println!(
        "valid: {} steps, {} reconfigurations, {:.3} rad joint movement",
        traj.len(),
        m.reconfigs,
        m.movement
    );
    Ok(())
}
