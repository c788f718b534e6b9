use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dtsp::bench::{
    compare_solvers, comparison_csv, emit_csv, execute_batch, parse_t_values, summary_csv, sweep_t,
    ExperimentConfig, Settings,
};
use dtsp::Error;

/// Dynamic TSP experiments with the baseline ant colony and the hybrid
/// solver.
#[derive(Parser, Debug)]
#[command(name = "dtsp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one solver once and print the best tour.
    Solve(SolveArgs),
    /// Run a solver over a range of seeds and summarise the final lengths.
    Batch(BatchArgs),
    /// Run two configurations over the same instance and seeds.
    Compare(CompareArgs),
    /// Run hybrid batches for several values of t.
    #[command(name = "sweep-t")]
    SweepT(SweepArgs),
}

/// Flags shared by every subcommand. Values are kept as text and validated
/// together with the config file.
#[derive(Args, Debug, Default)]
struct Common {
    /// Key/value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance file (TSPLIB EUC_2D or native `N` + `id x y` lines).
    #[arg(long)]
    instance: Option<String>,
    #[arg(long)]
    random_n: Option<String>,
    /// Bounding box for random instances, e.g. 100x100.
    #[arg(long)]
    bbox: Option<String>,
    #[arg(long)]
    instance_seed: Option<String>,
    /// Event schedule file: `iteration insert|remove|move id [x y]`.
    #[arg(long)]
    events: Option<String>,
    /// `aco` or `hybrid`.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    ants: Option<String>,
    #[arg(long)]
    tau0: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    tau_max: Option<String>,
    #[arg(long)]
    x_max: Option<String>,
    /// Iterations without improvement before a pheromone reset, or `none`.
    #[arg(long)]
    stagnation_window: Option<String>,
    /// Improve only the iteration-best tour instead of every ant's.
    #[arg(long)]
    best_only_local_search: bool,
    /// Output directory for CSV files.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args, Debug, Default)]
struct Runs {
    #[arg(long)]
    runs: Option<String>,
    /// Runs use seeds seed_base, seed_base + 1, ...
    #[arg(long)]
    seed_base: Option<String>,
}

#[derive(Args, Debug)]
struct BatchArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    runs: Runs,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    runs: Runs,
    /// Extra config layered over the shared settings for side A.
    #[arg(long)]
    config_a: Option<PathBuf>,
    /// Extra config for side B.
    #[arg(long)]
    config_b: Option<PathBuf>,
    #[arg(long, default_value = "aco")]
    solver_a: String,
    #[arg(long, default_value = "hybrid")]
    solver_b: String,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    runs: Runs,
    /// Comma-separated list, e.g. 0.1,0.4,0.8.
    #[arg(long, default_value = "0.1,0.4,0.8")]
    t_values: String,
}

/// Failures of the command line itself count as configuration errors.
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn load_settings(path: &Path) -> Result<Settings, Failure> {
    Settings::load(path).map_err(|e| Failure::Config(e.to_string()))
}

impl Common {
    fn settings(&self) -> Result<Settings, Failure> {
        let base = match &self.config {
            Some(p) => load_settings(p)?,
            None => Settings::new(),
        };
        let mut flags = Settings::new();
        let pairs = [
            ("instance", &self.instance),
            ("random_n", &self.random_n),
            ("bbox", &self.bbox),
            ("instance_seed", &self.instance_seed),
            ("events", &self.events),
            ("solver", &self.solver),
            ("iters", &self.iters),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("rho", &self.rho),
            ("q", &self.q),
            ("ants", &self.ants),
            ("tau0", &self.tau0),
            ("t", &self.t),
            ("tau_max", &self.tau_max),
            ("x_max", &self.x_max),
            ("stagnation_window", &self.stagnation_window),
            ("out", &self.out),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                flags.set(key, v.as_str())?;
            }
        }
        if self.best_only_local_search {
            flags.set("best_only_local_search", "true")?;
        }
        // a flag-level instance source replaces the file's wholesale
        let mut base = base;
        if flags.get("instance").is_some() || flags.get("random_n").is_some() {
            for key in ["instance", "random_n", "bbox", "instance_seed"] {
                base.remove(key);
            }
        }
        Ok(base.merged(&flags))
    }
}

impl Runs {
    fn apply(&self, mut s: Settings) -> Result<Settings, Failure> {
        if let Some(v) = &self.runs {
            s.set("runs", v.as_str())?;
        }
        if let Some(v) = &self.seed_base {
            s.remove("seed");
            s.set("seed_base", v.as_str())?;
        }
        Ok(s)
    }
}

fn print_stats(stats: &dtsp::bench::BatchStats) {
    println!(
        "{}: runs {} average {} best {} worst {} mean iterations to best {}",
        stats.solver,
        stats.runs(),
        dtsp::bench::fmt_num(stats.average),
        dtsp::bench::fmt_num(stats.best),
        dtsp::bench::fmt_num(stats.worst),
        dtsp::bench::fmt_num(stats.mean_iterations_to_best()),
    );
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let mut s = args.common.settings()?;
    if let Some(seed) = &args.seed {
        s.remove("seed_base");
        s.set("seed", seed.as_str())?;
    }
    let mut cfg = s.to_config()?;
    cfg.runs = 1;
    let (_, results) = execute_batch(&cfg)?;
    let run = &results[0];
    let ids: Vec<String> = run
        .best_tour
        .city_ids(&run.final_instance)
        .iter()
        .map(|id| id.to_string())
        .collect();
    println!("solver {} seed {}", cfg.solver.name(), run.seed);
    println!("best length {}", dtsp::bench::fmt_num(run.final_length()));
    println!("found at iteration {}", run.iterations_to_best());
    println!("tour {}", ids.join(" "));
    Ok(())
}

fn batch(args: BatchArgs) -> Result<(), Failure> {
    let cfg = args.runs.apply(args.common.settings()?)?.to_config()?;
    let (stats, _) = execute_batch(&cfg)?;
    print_stats(&stats);
    Ok(())
}

fn side(
    shared: &Settings,
    extra: Option<&Path>,
    solver: &str,
    out: Option<&Path>,
) -> Result<ExperimentConfig, Failure> {
    let mut s = shared.clone();
    s.set("solver", solver)?;
    if let Some(p) = extra {
        s = s.merged(&load_settings(p)?);
    }
    let mut cfg = s.to_config()?;
    cfg.output_dir = out.map(Path::to_path_buf);
    Ok(cfg)
}

fn compare(args: CompareArgs) -> Result<(), Failure> {
    let shared = args.runs.apply(args.common.settings()?)?;
    let out = shared.get("out").map(PathBuf::from);
    let a = side(
        &shared,
        args.config_a.as_deref(),
        &args.solver_a,
        out.as_ref().map(|d| d.join("a")).as_deref(),
    )?;
    let b = side(
        &shared,
        args.config_b.as_deref(),
        &args.solver_b,
        out.as_ref().map(|d| d.join("b")).as_deref(),
    )?;
    let cmp = compare_solvers(&a, &b)?;
    if let Some(dir) = &out {
        emit_csv(&dir.join("comparison.csv"), &comparison_csv(&cmp))?;
        emit_csv(&dir.join("summary.csv"), &summary_csv(&[&cmp.a, &cmp.b]))?;
    }
    println!("A = {}", args.solver_a);
    print_stats(&cmp.a);
    println!("B = {}", args.solver_b);
    print_stats(&cmp.b);
    println!(
        "per-seed: A wins {}, B wins {}, ties {}",
        cmp.a_wins, cmp.b_wins, cmp.ties
    );
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut s = args.runs.apply(args.common.settings()?)?;
    if s.get("solver").is_none() {
        s.set("solver", "hybrid")?;
    }
    let cfg = s.to_config()?;
    let t_values = parse_t_values(&args.t_values)?;
    for point in sweep_t(&cfg, &t_values)? {
        print!("t = {}: ", dtsp::bench::fmt_num(point.t));
        print_stats(&point.stats);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Batch(a) => batch(a),
        Command::Compare(a) => compare(a),
        Command::SweepT(a) => sweep(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
