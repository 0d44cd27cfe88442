use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wpbc_trade::experiments::{run_benchmark, run_sweep, write_csv, write_results, OutputFormat, ResultRow};
use wpbc_trade::game::{verify_stackelberg, PerturbationGrid};
use wpbc_trade::oracle::{grid_search, local_improvement_check, GridSpec, ProbeSteps};
use wpbc_trade::scenario::{load_scenario, Method, Scenario};
use wpbc_trade::schemes::{solve, Mask, Scheme};
use wpbc_trade::{Error, Objective};

#[derive(Parser)]
#[command(name = "wpbc", version, about = "Energy trading equilibria for wireless-powered backscatter networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scenario at its base point.
    Solve(RunArgs),
    /// Run the scenario's sweep.
    Sweep(RunArgs),
    /// Time the solvers on N/N/N networks.
    Benchmark(BenchArgs),
    /// Check the equilibrium of a one-device-per-kind network against
    /// exhaustive search and local probes.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    scenario: PathBuf,
    /// Comma-separated methods: pa,ja,fixed-price,welfare,bbcm,httcm,tdma.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Outer stopping tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Output file; a table goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Record wall-clock time per solve (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Devices per kind.
    #[arg(long, value_delimiter = ',', default_values_t = vec![5, 10, 15])]
    sizes: Vec<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Grid points per schedule entry.
    #[arg(long, default_value_t = 10)]
    grid: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Plot,
}

enum Failure {
    Scenario(Error),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn load(c: &Common) -> Result<Scenario, Failure> {
    let mut sc = load_scenario(&c.scenario).map_err(Failure::Scenario)?;
    if let Some(list) = &c.methods {
        sc.methods = list
            .iter()
            .map(|m| {
                Method::parse(m.trim()).ok_or_else(|| {
                    Failure::Scenario(Error::Config {
                        field: "--methods".into(),
                        message: format!("unknown method `{m}`"),
                    })
                })
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(s) = c.seed {
        sc.seed = s;
    }
    if let Some(t) = c.tol {
        sc.solver.tolerance = t;
    }
    sc.validate().map_err(Failure::Scenario)?;
    Ok(sc)
}

fn print_rows(rows: &[ResultRow]) {
    println!(
        "{:>10} {:>12} {:>11} {:>12} {:>12} {:>12} {:>8} {:>8} {:>9} {:>7} {:>4}",
        "sweep", "method", "", "u_leader", "u_follower", "u_welfare", "poa", "P_S", "p_l", "beta", "it"
    );
    for r in rows {
        if let Some(e) = &r.error {
            println!("{:>10} {:>12}  failed: {e}", r.sweep_value, r.method.name());
            continue;
        }
        let poa = r.poa.map(|p| format!("{p:.4}")).unwrap_or_else(|| "-".into());
        println!(
            "{:>10} {:>12} {:>11} {:>12.6} {:>12.6} {:>12.6} {:>8} {:>8.4} {:>9.4} {:>7.4} {:>4}",
            r.sweep_value,
            r.method.name(),
            if r.negotiated { "" } else { "no-trade" },
            r.u_leader,
            r.u_follower,
            r.u_welfare,
            poa,
            r.p_s_star,
            r.p_l_star,
            r.beta_star,
            r.iterations
        );
    }
}

fn resolved_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".resolved.toml");
    PathBuf::from(s)
}

fn run(args: &RunArgs, sweep: bool) -> Result<(), Failure> {
    let mut sc = load(&args.common)?;
    if !sweep {
        sc.sweep = None;
    }
    let rows = run_sweep(&sc, args.timing)?;
    match &args.out {
        Some(out) => {
            let format = match args.format {
                Format::Csv => OutputFormat::Csv,
                Format::Plot => OutputFormat::Plot,
            };
            write_results(&rows, out, format)?;
            let resolved = resolved_path(out);
            std::fs::write(&resolved, sc.to_toml())
                .map_err(|e| Failure::Run(format!("{}: {e}", resolved.display())))?;
        }
        None if matches!(args.format, Format::Csv) && sweep => write_csv(&rows, std::io::stdout())?,
        None => print_rows(&rows),
    }
    let failed: Vec<&ResultRow> = rows.iter().filter(|r| r.error.is_some()).collect();
    if let Some(r) = failed.first() {
        return Err(Failure::Run(format!(
            "{} of {} solves failed; first: {} at {} = {}: {}",
            failed.len(),
            rows.len(),
            r.method,
            r.sweep_var,
            r.sweep_value,
            r.error.as_deref().unwrap_or("")
        )));
    }
    Ok(())
}

fn benchmark(args: &BenchArgs) -> Result<(), Failure> {
    let mut sc = load(&args.common)?;
    if args.common.methods.is_none() {
        sc.methods = vec![Method::Pa, Method::Ja];
    }
    let rows = run_benchmark(&sc, &args.sizes, &sc.methods, args.reps)?;
    println!("{:>6} {:>12} {:>6} {:>12} {:>12} {:>12}", "n/kind", "method", "reps", "mean_ms", "p95_ms", "max_ms");
    for r in &rows {
        println!(
            "{:>6} {:>12} {:>6} {:>12.2} {:>12.2} {:>12.2}",
            r.n_per_kind,
            r.method.name(),
            r.repetitions,
            r.mean_ms,
            r.p95_ms,
            r.max_ms
        );
    }
    match rows.iter().find(|r| r.failures > 0) {
        Some(r) => Err(Failure::Run(format!("{} solves of {} failed", r.failures, r.method))),
        None => Ok(()),
    }
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let mut sc = load(&args.common)?;
    sc.sweep = None;
    if sc.devices.list.is_empty() {
        sc.devices.awpd_count = 1;
        sc.devices.pwpd_count = 1;
        sc.devices.hwpd_count = 1;
    }
    let net = sc.network().map_err(Failure::Scenario)?;
    let cost = sc.cost_model().map_err(Failure::Scenario)?;
    let opts = sc.solver_options();
    let spec = GridSpec {
        schedule: wpbc_trade::oracle::Axis::Points(args.grid),
        ..GridSpec::default()
    };
    let t = Instant::now();
    let grid = grid_search(Objective::Leader, &net, &cost, &spec)?;
    println!(
        "grid: {} points, {} feasible, best {:.6}, slack {:.3e} ({:.1} s)",
        grid.evaluated,
        grid.feasible,
        grid.value,
        grid.slack,
        t.elapsed().as_secs_f64()
    );
    let margin = grid.slack.min(2e-2);
    let mut ok = true;
    for scheme in [Scheme::Pa, Scheme::Ja] {
        let r = solve(Objective::Leader, scheme, &net, &cost, Mask::ALL, None, &opts)?;
        let local = local_improvement_check(&r.decision, Objective::Leader, &net, &cost, &ProbeSteps::default());
        let se = verify_stackelberg(&r.outcome, &net, &cost, &PerturbationGrid::default());
        let vs_grid = r.outcome.u_leader >= grid.value - margin;
        let pass = vs_grid && local.improvements.is_empty() && se.passed();
        ok &= pass;
        println!(
            "{}: u_leader {:.6} ({} grid - {:.3e}), local gain {:.3e} over {} probes, follower gain {:.3e}: {}",
            scheme.name(),
            r.outcome.u_leader,
            if vs_grid { ">=" } else { "<" },
            margin,
            local.best_gain.max(0.0),
            local.probes,
            se.follower_gain,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Run("verification failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => run(a, false),
        Command::Sweep(a) => run(a, true),
        Command::Benchmark(a) => benchmark(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Scenario(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
