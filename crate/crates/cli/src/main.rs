use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use skip_pricing::config::{self, SimSpec, SingleConfig};
use skip_pricing::experiments::{self, GridSpec, StudyKind, StudyOptions, StudyOutput};
use skip_pricing::simulator;
use skip_pricing::single_task::{self, FigureFamily, Objective, SearchOptions};
use skip_pricing::{Error, Result, Scheme};

/// Skip pricing for wait-timer games: single-task optimization, repeated-task
/// simulation and the grid study.
#[derive(Debug, Parser)]
#[command(name = "skipprice", version)]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output root; each command writes to a subdirectory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Utility- and revenue-optimal prices for one task.
    Single(SingleArgs),
    /// Simulate repeated tasks under one pricing scheme.
    Simulate(SimulateArgs),
    /// Run a grid study and write its CSV directory.
    Study(StudyArgs),
    /// Write the CSVs behind the single-task figures.
    Figures(FiguresArgs),
}

#[derive(Debug, Args)]
struct SingleArgs {
    /// JSON file with `types`, `value` and optional search settings.
    #[arg(long)]
    config: PathBuf,
    /// Report only this optimum (utility or revenue).
    #[arg(long)]
    objective: Option<ObjectiveArg>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ObjectiveArg {
    Utility,
    Revenue,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON file describing the simulation.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the initial population size.
    #[arg(long)]
    n: Option<usize>,
    /// Overrides the scheme: mt, myerson, threshold, known-types,
    /// scaled-mt=<c> or fixed=<p>.
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
}

#[derive(Debug, Args)]
struct StudyArgs {
    /// main, scaling or independent.
    #[arg(long, default_value = "main")]
    study: String,
    /// JSON grid spec; defaults to the study's built-in grid.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Agents per simulation.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Seed replicates per cell.
    #[arg(long, default_value_t = 5)]
    replicates: usize,
}

#[derive(Debug, Args)]
struct FiguresArgs {
    /// Restrict to these families (patience, flattened_tail, clinear_rising, clinear_falling,
    /// clinear_flattened, clinear_concentrated).
    #[arg(long = "family")]
    families: Vec<String>,
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    let number = |v: &str| v.parse::<f64>().map_err(|e| format!("bad number `{v}`: {e}"));
    match s.split_once('=') {
        Some(("scaled-mt", c)) => Ok(Scheme::ScaledMyersonThreshold { c: number(c)? }),
        Some(("fixed", p)) => Ok(Scheme::FixedPrice { p: number(p)? }),
        None => match s {
            "mt" => Ok(Scheme::MyersonThreshold),
            "myerson" => Ok(Scheme::MyersonOnly),
            "threshold" => Ok(Scheme::RetentionThresholdOnly),
            "known-types" => Ok(Scheme::KnownTypes),
            _ => Err(format!("unknown scheme `{s}`")),
        },
        _ => Err(format!("unknown scheme `{s}`")),
    }
}

#[derive(Serialize)]
struct RunManifest<'a, C: Serialize> {
    command: Vec<String>,
    config_hash: String,
    master_seed: Option<u64>,
    version: &'static str,
    started_unix: u64,
    finished_unix: u64,
    config: &'a C,
    outputs: Vec<String>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn write_manifest<C: Serialize>(
    dir: &Path,
    started: u64,
    seed: Option<u64>,
    config: &C,
    outputs: &[&str],
) -> Result<()> {
    let manifest = RunManifest {
        command: std::env::args().collect(),
        config_hash: config::config_hash(config)?,
        master_seed: seed,
        version: env!("CARGO_PKG_VERSION"),
        started_unix: started,
        finished_unix: unix_now(),
        config,
        outputs: outputs.iter().map(|o| dir.join(o).display().to_string()).collect(),
    };
    fs::write(dir.join("run_manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

fn cmd_single(args: &SingleArgs, out: &Path) -> Result<()> {
    let started = unix_now();
    let cfg: SingleConfig = config::load(&args.config)?;
    let opts: SearchOptions<f64> = cfg.search()?;
    let types = cfg.types.build()?;
    let vf = cfg.value.build(&types)?;
    let report = single_task::analyze(&types, &vf, opts)?;

    let dir = out.join("single");
    fs::create_dir_all(&dir)?;
    let mut w = csv::Writer::from_path(dir.join("curve.csv"))?;
    w.write_record(["p", "v", "U", "REV"])?;
    for row in single_task::curve(&types, &vf, cfg.curve_points) {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    let json = serde_json::to_string_pretty(&report)?;
    fs::write(dir.join("report.json"), json.clone() + "\n")?;

    let objective = args.objective.map(|o| match o {
        ObjectiveArg::Utility => Objective::Utility,
        ObjectiveArg::Revenue => Objective::Revenue,
    });
    let mut lines = Vec::new();
    if objective != Some(Objective::Revenue) {
        lines.push(("p_util", report.p_util.to_string()));
        lines.push(("u_max", report.u_max.to_string()));
    }
    if objective != Some(Objective::Utility) {
        lines.push(("p_rev", report.p_rev.to_string()));
        lines.push(("rev_max", report.rev_max.to_string()));
    }
    if objective.is_none() {
        lines.push(("nosale_condition_holds", report.nosale_condition_holds.to_string()));
        lines.push(("revenue_frontier", report.revenue_frontier.to_string()));
        lines.push(("utility_floor", report.utility_floor.map_or("-".into(), |f| f.to_string())));
    }
    for (k, v) in lines {
        println!("{k:<24}{v}");
    }
    println!("{json}");
    write_manifest(&dir, started, None, &cfg, &["curve.csv", "report.json"])
}

fn cmd_simulate(args: &SimulateArgs, out: &Path) -> Result<()> {
    let started = unix_now();
    let mut spec: SimSpec = config::load(&args.config)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(scheme) = args.scheme {
        spec.scheme = scheme;
    }
    let sim = spec.build()?;
    let result = simulator::run(&sim)?;

    let dir = out.join("simulate");
    fs::create_dir_all(&dir)?;
    result.write_trajectories(&dir.join("trajectories.csv"))?;
    #[derive(Serialize)]
    struct Summary<'a> {
        scheme: String,
        discounted_revenue: f64,
        rounds_run: usize,
        seed_echo: u64,
        horizon_truncated: bool,
        thinning_events: usize,
        spec: &'a SimSpec,
    }
    let summary = Summary {
        scheme: spec.scheme.label(),
        discounted_revenue: result.discounted_revenue,
        rounds_run: result.rounds_run,
        seed_echo: result.seed_echo,
        horizon_truncated: result.horizon_truncated,
        thinning_events: result.thinning_events,
        spec: &spec,
    };
    fs::write(dir.join("result.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    println!("{:<24}{}", "scheme", summary.scheme);
    println!("{:<24}{}", "discounted_revenue", result.discounted_revenue);
    println!("{:<24}{}", "rounds_run", result.rounds_run);
    if result.horizon_truncated {
        println!("{:<24}true", "horizon_truncated");
    }
    write_manifest(&dir, started, Some(spec.seed), &spec, &["trajectories.csv", "result.json"])
}

fn cmd_study(args: &StudyArgs, out: &Path) -> Result<()> {
    let started = unix_now();
    let kind: StudyKind = args.study.parse()?;
    let grid: GridSpec = match &args.config {
        Some(path) => config::load(path)?,
        None => kind.default_grid(),
    };
    let opts = StudyOptions { n: args.n, seed: args.seed, replicates: args.replicates, ..StudyOptions::default() };
    let dir = out.join(kind.name());
    match experiments::run_and_write(kind, &grid, &opts, &dir)? {
        StudyOutput::Comparison(s) => {
            println!("{:<32}{}", "cells", s.cells);
            println!("{:<32}{}", "failed_cells", s.failed_cells);
            println!("{:<32}{:.4}", "frac_mt_within_1pct", s.frac_mt_within_1pct);
            println!("{:<32}{:.4}", "frac_mt_strictly_best", s.frac_mt_strictly_best);
            println!("{:<32}{:.4}", "frac_threshold_beats_myerson", s.frac_threshold_beats_myerson);
            println!("{:<32}{:.4}", "frac_cells_mt_within_1pct", s.frac_cells_mt_within_1pct);
            println!("{:<32}{:.4}", "frac_cells_mt_strictly_best", s.frac_cells_mt_strictly_best);
            println!("{:<32}{:.4}", "min_reference_ratio", s.min_reference_ratio);
        }
        StudyOutput::Scaling(s) => {
            println!("{:<32}{}", "cells", s.cells);
            for sc in &s.scales {
                println!("{:<32}{:.4}", format!("median_ratio_c{:.4}", sc.c), sc.median);
            }
        }
    }
    #[derive(Serialize)]
    struct StudyInputs<'a> {
        study: StudyKind,
        grid: &'a GridSpec,
        options: &'a StudyOptions,
    }
    let inputs = StudyInputs { study: kind, grid: &grid, options: &opts };
    let files = [
        "manifest.json",
        "runs.csv",
        "ratios.csv",
        "summary.csv",
        "hist_mt_vs_best.csv",
        "hist_indep.csv",
        "hist_scaled.csv",
    ];
    write_manifest(&dir, started, Some(args.seed), &inputs, &files)
}

fn cmd_figures(args: &FiguresArgs, out: &Path) -> Result<()> {
    let started = unix_now();
    let families: Vec<FigureFamily> = if args.families.is_empty() {
        FigureFamily::ALL.to_vec()
    } else {
        args.families
            .iter()
            .map(|name| {
                FigureFamily::ALL
                    .into_iter()
                    .find(|f| f.name() == name)
                    .ok_or_else(|| Error::Config(format!("unknown figure family `{name}`")))
            })
            .collect::<Result<_>>()?
    };
    let dir = out.join("figures");
    let mut outputs = Vec::new();
    for family in &families {
        let rows = single_task::figure_sweep(*family, &dir, SearchOptions::default())?;
        for r in rows {
            println!("{:<16}{:<22}p_util {:.6}  p_rev {:.6}", family.name(), r.param, r.p_util, r.p_rev);
        }
        outputs.push(format!("{}.csv", family.name()));
    }
    let names: Vec<&str> = families.iter().map(|f| f.name()).collect();
    let refs: Vec<&str> = outputs.iter().map(String::as_str).collect();
    write_manifest(&dir, started, None, &names, &refs)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let result = match &cli.command {
        Command::Single(a) => cmd_single(a, &cli.out),
        Command::Simulate(a) => cmd_simulate(a, &cli.out),
        Command::Study(a) => cmd_study(a, &cli.out),
        Command::Figures(a) => cmd_figures(a, &cli.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
