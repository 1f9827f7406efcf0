use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use arz_cli::runner::{convergence_study, run_scenario, save, RunOutcome};
use arz_cli::scenario::{registry, suite_entries, ScenarioConfig};
use arz_cli::Status;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "arz", version, about = "Bound-preserving OEDG experiments for ARZ traffic models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its CSV and JSON report.
    Run(RunArgs),
    /// L1 errors and orders of the smooth test over a list of meshes.
    Converge(ConvergeArgs),
    /// Run every scenario at every exponent it is reported with.
    Suite(SuiteArgs),
    /// Run a network description file.
    Network(NetworkArgs),
    /// List the scenario ids.
    List,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario id (see `arz list`).
    #[arg(long)]
    scenario: Option<String>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Defaults to gamma + 1.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    /// global-bp, local-bp, nonbp-oe, plain-dg or bp-no-oe.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    tend: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// certified or bound.
    #[arg(long)]
    speed: Option<String>,
    /// Drop the upper marker bound from the limiter.
    #[arg(long)]
    no_w_max: bool,
    /// Do not retry steps whose later stages need a larger coefficient.
    #[arg(long)]
    no_retry: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Cells per unit length.
    #[arg(long)]
    cells: Option<usize>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated mesh sizes.
    #[arg(long, value_delimiter = ',', default_value = "10,20,40,80,160,320")]
    cells: Vec<usize>,
}

#[derive(Args)]
struct SuiteArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    cells: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct NetworkArgs {
    #[command(flatten)]
    common: Common,
    /// Network description (JSON).
    #[arg(long)]
    file: PathBuf,
    #[arg(long)]
    cells: Option<usize>,
}

fn config(common: &Common, cells: Option<usize>) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(s) = &common.scenario {
        cfg.scenario = s.clone();
    }
    cfg.gamma = common.gamma.or(cfg.gamma);
    cfg.kappa = common.kappa.or(cfg.kappa);
    cfg.cells = cells.or(cfg.cells);
    cfg.t_end = common.tend.or(cfg.t_end);
    if let Some(c) = common.cfl {
        cfg.cfl = c;
    }
    if let Some(m) = &common.mode {
        cfg.mode = m.clone();
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(s) = &common.speed {
        cfg.speed = s.clone();
    }
    if common.no_w_max {
        cfg.enforce_w_max = false;
    }
    if common.no_retry {
        cfg.retry = false;
    }
    cfg.resolve()?;
    Ok(cfg)
}

/// Machine-readable outcome printed on stdout.
#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    status: &'a Status,
    time_reached: f64,
    failure: Option<&'a arz_cli::runner::Failure>,
    error: Option<&'a str>,
    report: String,
}

fn finish(dir: &Path, stem: &str, outcome: &RunOutcome) -> Result<ExitCode> {
    save(dir, stem, outcome)?;
    let r = &outcome.report;
    let summary = Summary {
        scenario: &r.scenario,
        status: &r.status,
        time_reached: r.time_reached,
        failure: r.failure.as_ref(),
        error: r.error.as_deref(),
        report: dir.join(format!("{stem}.json")).display().to_string(),
    };
    println!("{}", serde_json::to_string(&summary)?);
    Ok(match r.status {
        Status::Completed => ExitCode::SUCCESS,
        Status::Failed => ExitCode::from(2),
        Status::Error => ExitCode::from(1),
    })
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for s in registry() {
                let gammas: Vec<String> = s.gammas.iter().map(|g| g.to_string()).collect();
                println!("{:<12} gamma {:<8} t_end {:<7} {}", s.id, gammas.join(","), s.t_end, s.title);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(a) => {
            let cfg = config(&a.common, a.cells)?;
            let outcome = run_scenario(&cfg)?;
            finish(&a.common.out, &cfg.stem(), &outcome)
        }
        Command::Network(a) => {
            let mut cfg = config(&a.common, a.cells)?;
            if a.common.scenario.is_none() && a.common.config.is_none() {
                cfg.scenario = "ex5_5".into();
            }
            if !matches!(cfg.resolve()?.scenario.setup, arz_cli::scenario::Setup::Network { .. }) {
                bail!("scenario {} is not a network scenario", cfg.scenario);
            }
            cfg.network_file = Some(a.file.clone());
            let stem = format!("{}_{}", a.file.file_stem().and_then(|s| s.to_str()).unwrap_or("network"), cfg.mode);
            let outcome = run_scenario(&cfg)?;
            finish(&a.common.out, &stem, &outcome)
        }
        Command::Converge(a) => {
            let mut cfg = config(&a.common, None)?;
            if a.common.scenario.is_none() && a.common.config.is_none() {
                cfg.scenario = "ex5_1".into();
            }
            let table = convergence_study(&cfg, &a.cells)?;
            std::fs::create_dir_all(&a.common.out)?;
            let path = a.common.out.join(format!("converge_{}_{}_g{}.json", table.scenario, table.mode, table.gamma));
            std::fs::write(&path, serde_json::to_string_pretty(&table)? + "\n")?;
            println!("{:>6} {:>12} {:>7}", "N", "L1 error", "order");
            for r in &table.rows {
                let o = r.order.map_or("-".to_string(), |o| format!("{o:.2}"));
                println!("{:>6} {:>12.3e} {:>7}", r.cells, r.l1_error, o);
            }
            if let Some(o) = table.average_order_last3 {
                println!("average order over the last three refinements: {o:.2}");
            }
            println!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Suite(a) => {
            let base = config(&a.common, a.cells)?;
            let entries: Vec<(&str, f64)> =
                suite_entries().into_iter().filter(|(id, _)| a.common.scenario.as_deref().is_none_or(|s| s == *id)).collect();
            let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs.unwrap_or(0)).build()?;
            let results: Vec<(ScenarioConfig, Result<RunOutcome>)> = pool.install(|| {
                entries
                    .par_iter()
                    .map(|&(id, g)| {
                        let cfg = ScenarioConfig { scenario: id.into(), gamma: Some(g), ..base.clone() };
                        let out = run_scenario(&cfg);
                        (cfg, out)
                    })
                    .collect()
            });
            #[derive(Serialize)]
            struct Row {
                scenario: String,
                gamma: f64,
                status: String,
                bp_violations: usize,
                failure_time: Option<f64>,
                wall_seconds: f64,
            }
            let mut rows = Vec::new();
            let mut any_error = false;
            for (cfg, res) in &results {
                match res {
                    Ok(o) => {
                        save(&a.common.out, &cfg.stem(), o)?;
                        let r = &o.report;
                        any_error |= r.status == Status::Error;
                        rows.push(Row {
                            scenario: cfg.scenario.clone(),
                            gamma: r.gamma,
                            status: serde_json::to_value(&r.status)?.as_str().unwrap_or_default().into(),
                            bp_violations: r.bp.violations,
                            failure_time: r.failure.as_ref().map(|f| f.time),
                            wall_seconds: r.wall_seconds,
                        });
                        println!("{:<12} gamma {} {:<9} bp_violations {}", cfg.scenario, r.gamma, rows.last().map_or("", |x| &x.status), r.bp.violations);
                    }
                    Err(e) => {
                        any_error = true;
                        println!("{:<12} gamma {:?} error: {e:#}", cfg.scenario, cfg.gamma);
                    }
                }
            }
            std::fs::create_dir_all(&a.common.out)?;
            std::fs::write(a.common.out.join("suite.json"), serde_json::to_string_pretty(&rows)? + "\n")?;
            Ok(if any_error { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
    }
}
