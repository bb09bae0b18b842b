//! Experiment runner: single runs, multi-seed benchmarks, pretraining, and
//! checkpoint evaluation against the simulated pick-and-place task.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rmrl_core::config::RunConfig;
use rmrl_core::datasets::{
    read_checkpoint, write_checkpoint, write_dataset, write_trace, Checkpoint, DatasetHeader,
    GridFileSpec, TraceRow,
};
use rmrl_core::env::Env;
use rmrl_core::learn::{pretrain_with, run_method_with_init, Method, RunResult};
use rmrl_core::metrics::{
    ema, evaluate_policy, median_f64, median_t_tau, EvalSummary, MetricReport,
};
use rmrl_core::policy::PolicyParams;
use rmrl_core::rng::Stream;
use rmrl_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "rmrl",
    version,
    about = "Role-model RL lab on a simulated precise pick-and-place task"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to a JSON run config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config's out_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a config file populated with every default.
    InitConfig {
        /// Destination path.
        #[arg(long, default_value = "rmrl.json")]
        out: PathBuf,
    },
    /// Train one method and write trace, metrics, checkpoint, and (for
    /// labeling methods) the labeled dataset.
    Run {
        /// standard | replay | rmrl | pretrained-rmrl
        #[arg(long)]
        method: String,
        /// Start from this checkpoint instead of a fresh (or pretrained)
        /// initialization.
        #[arg(long)]
        init_checkpoint: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a methods x seeds grid and emit a comparison table.
    Bench {
        /// Comma-separated methods (default: all four).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Seed list: items are N, A-B (inclusive), or A..B (exclusive).
        #[arg(long, default_value = "0-19")]
        seeds: String,
        /// Worker threads for independent cells.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate a role-model-labeled pretraining dataset and checkpoint.
    Pretrain {
        /// Number of labeled samples to collect.
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate a checkpoint greedily on fresh scenes.
    Eval {
        /// Checkpoint to evaluate.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Number of evaluation scenes (default: config metrics.eval_scenes).
        #[arg(long)]
        scenes: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_)
        | Error::UnsupportedVersion { .. }
        | Error::GridMismatch { .. }
        | Error::ArchMismatch(_)
        | Error::Malformed { .. } => 2,
        _ => 3,
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::InitConfig { out } => cmd_init_config(&out),
        Command::Run {
            method,
            init_checkpoint,
            common,
        } => cmd_run(&method, init_checkpoint.as_deref(), &common),
        Command::Bench {
            methods,
            seeds,
            jobs,
            common,
        } => cmd_bench(&methods, &seeds, jobs, &common),
        Command::Pretrain { samples, common } => cmd_pretrain(samples, &common),
        Command::Eval {
            checkpoint,
            scenes,
            common,
        } => cmd_eval(&checkpoint, scenes, &common),
    }
}

struct Setup {
    config: RunConfig,
    seed: u64,
    out_dir: PathBuf,
}

fn setup(common: &CommonArgs) -> Result<Setup> {
    let config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = common.seed.unwrap_or(config.seed);
    let out_dir = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.out_dir));
    std::fs::create_dir_all(&out_dir)?;
    Ok(Setup { config, seed, out_dir })
}

fn cmd_init_config(out: &Path) -> Result<()> {
    let config = RunConfig::default();
    std::fs::write(out, config.to_json_pretty())?;
    println!("wrote {}", out.display());
    Ok(())
}

/// Greedy evaluation on fresh scenes drawn from the run's eval stream.
fn eval_summary(config: &RunConfig, seed: u64, params: &PolicyParams<f64>, scenes: usize) -> Result<EvalSummary<f64>> {
    let mut env = Env::new(config.env_config()?, seed, Stream::Eval)?;
    evaluate_policy(params, &mut env, scenes, config.success_thresholds())
}

fn build_report(config: &RunConfig, seed: u64, result: &RunResult<f64>) -> Result<MetricReport> {
    let eval = eval_summary(config, seed, &result.params, config.metrics.eval_scenes)?;
    Ok(MetricReport::from_parts(
        &result.rewards(),
        config.metrics.tau,
        &eval,
    ))
}

fn trace_rows(config: &RunConfig, result: &RunResult<f64>) -> Vec<TraceRow> {
    let rewards = result.rewards();
    let smoothed = ema(&rewards, config.metrics.ema_alpha);
    result
        .trace
        .iter()
        .zip(smoothed)
        .map(|(step, ema_reward)| TraceRow {
            step: step.step,
            scene_id: step.scene_id,
            reward: step.reward,
            ema_reward,
            phase: step.phase,
        })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn load_init_checkpoint(config: &RunConfig, path: &Path) -> Result<PolicyParams<f64>> {
    let checkpoint = read_checkpoint(path)?;
    let grid = GridFileSpec::from_grid(&config.grid_spec::<f64>()?);
    checkpoint.ensure_compatible(&grid, &config.architecture()?)?;
    checkpoint.to_policy_params()
}

fn cmd_run(method: &str, init_checkpoint: Option<&Path>, common: &CommonArgs) -> Result<()> {
    let Setup { config, seed, out_dir } = setup(common)?;
    let method: Method = method.parse()?;
    let init = init_checkpoint
        .map(|path| load_init_checkpoint(&config, path))
        .transpose()?;

    let result = run_method_with_init::<f64>(&config, seed, method, init)?;
    let report = build_report(&config, seed, &result)?;

    write_trace(&out_dir.join("trace.csv"), &trace_rows(&config, &result))?;
    write_json(&out_dir.join("metrics.json"), &report)?;
    let grid = config.grid_spec::<f64>()?;
    write_checkpoint(
        &out_dir.join("checkpoint.json"),
        &Checkpoint::new(&result.params, &grid, seed),
    )?;
    if method.labels_scenes() {
        write_dataset(
            &out_dir.join("dataset.jsonl"),
            DatasetHeader::new(&grid, config.env.feature_dim),
            &result.dataset,
        )?;
    }

    println!(
        "{method} seed {seed}: {} steps, avg reward {:.4}, t_tau_10 {} -> {}",
        result.trace.len(),
        report.avg_reward,
        report.t_tau_10,
        out_dir.display()
    );
    Ok(())
}

fn cmd_pretrain(samples: Option<usize>, common: &CommonArgs) -> Result<()> {
    let Setup { config, seed, out_dir } = setup(common)?;
    let n_samples = samples.unwrap_or(config.pretrain.samples);
    let outcome = pretrain_with::<f64>(&config, seed, n_samples)?;

    let grid = config.grid_spec::<f64>()?;
    write_dataset(
        &out_dir.join("pretrain_dataset.jsonl"),
        DatasetHeader::new(&grid, config.env.feature_dim),
        &outcome.dataset,
    )?;
    write_checkpoint(
        &out_dir.join("pretrain_checkpoint.json"),
        &Checkpoint::new(&outcome.params, &grid, seed),
    )?;
    println!(
        "pretrained on {} samples -> {}",
        outcome.dataset.len(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_eval(checkpoint: &Path, scenes: Option<usize>, common: &CommonArgs) -> Result<()> {
    let Setup { config, seed, out_dir } = setup(common)?;
    let params = load_init_checkpoint(&config, checkpoint)?;
    let scenes = scenes.unwrap_or(config.metrics.eval_scenes);
    if scenes == 0 {
        return Err(Error::InvalidConfig("--scenes must be >= 1".into()));
    }
    let summary = eval_summary(&config, seed, &params, scenes)?;

    #[derive(Serialize)]
    struct EvalFile {
        scenes: usize,
        mean_reward: f64,
        std_reward: f64,
        e_trans_mm: f64,
        e_rot_deg: f64,
        success_rate: f64,
    }
    let file = EvalFile {
        scenes,
        mean_reward: summary.mean_reward,
        std_reward: summary.std_reward,
        e_trans_mm: summary.e_trans_mm,
        e_rot_deg: summary.e_rot_deg,
        success_rate: summary.success_rate,
    };
    write_json(&out_dir.join("eval.json"), &file)?;
    println!(
        "eval over {scenes} scenes: reward {:.4}, e_trans {:.2} mm, e_rot {:.2} deg, success {:.0}%",
        summary.mean_reward,
        summary.e_trans_mm,
        summary.e_rot_deg,
        summary.success_rate * 100.0
    );
    Ok(())
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for item in spec.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let parse = |s: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::InvalidConfig(format!("invalid seed {s:?}")))
        };
        if let Some((a, b)) = item.split_once("..") {
            let (a, b) = (parse(a)?, parse(b)?);
            seeds.extend(a..b);
        } else if let Some((a, b)) = item.split_once('-') {
            let (a, b) = (parse(a)?, parse(b)?);
            seeds.extend(a..=b);
        } else {
            seeds.push(parse(item)?);
        }
    }
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("no seeds given".into()));
    }
    Ok(seeds)
}

#[derive(Serialize)]
struct BenchRow {
    method: String,
    seed: u64,
    #[serde(flatten)]
    report: MetricReport,
}

#[derive(Serialize)]
struct BenchError {
    method: String,
    seed: u64,
    error: String,
}

fn cmd_bench(methods: &[String], seeds_spec: &str, jobs: usize, common: &CommonArgs) -> Result<()> {
    let Setup { config, seed: _, out_dir } = setup(common)?;
    let methods: Vec<Method> = if methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        methods.iter().map(|m| m.parse()).collect::<Result<_>>()?
    };
    let seeds = parse_seeds(seeds_spec)?;

    let cells: Vec<(Method, u64)> = methods
        .iter()
        .flat_map(|&m| seeds.iter().map(move |&s| (m, s)))
        .collect();
    let results: Vec<Option<std::result::Result<MetricReport, String>>> =
        run_cells(&config, &cells, jobs.max(1));

    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for ((method, seed), outcome) in cells.iter().zip(results) {
        match outcome.expect("every cell filled") {
            Ok(report) => rows.push(BenchRow {
                method: method.to_string(),
                seed: *seed,
                report,
            }),
            Err(message) => {
                eprintln!("cell {method}/{seed} failed: {message}");
                errors.push(BenchError {
                    method: method.to_string(),
                    seed: *seed,
                    error: message,
                });
            }
        }
    }

    let medians: Vec<(String, MetricReport)> = methods
        .iter()
        .filter_map(|&method| {
            let cells: Vec<&MetricReport> = rows
                .iter()
                .filter(|r| r.method == method.to_string())
                .map(|r| &r.report)
                .collect();
            if cells.is_empty() {
                return None;
            }
            let field = |f: fn(&MetricReport) -> f64| median_f64(&cells.iter().map(|r| f(r)).collect::<Vec<_>>());
            Some((
                method.to_string(),
                MetricReport {
                    t_tau_10: median_t_tau(&cells.iter().map(|r| r.t_tau_10).collect::<Vec<_>>()),
                    avg_reward: field(|r| r.avg_reward),
                    std_reward: field(|r| r.std_reward),
                    e_trans_mm: field(|r| r.e_trans_mm),
                    e_rot_deg: field(|r| r.e_rot_deg),
                    success_rate: field(|r| r.success_rate),
                },
            ))
        })
        .collect();

    let csv_path = out_dir.join("bench.csv");
    let mut csv = String::from("method,seed,t_tau_10,avg_reward,std_reward,e_trans_mm,e_rot_deg,success_rate\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.method,
            row.seed,
            row.report.t_tau_10,
            row.report.avg_reward,
            row.report.std_reward,
            row.report.e_trans_mm,
            row.report.e_rot_deg,
            row.report.success_rate
        ));
    }
    for (method, report) in &medians {
        csv.push_str(&format!(
            "{},median,{},{},{},{},{},{}\n",
            method,
            report.t_tau_10,
            report.avg_reward,
            report.std_reward,
            report.e_trans_mm,
            report.e_rot_deg,
            report.success_rate
        ));
    }
    std::fs::write(&csv_path, csv)?;

    #[derive(Serialize)]
    struct BenchFile {
        rows: Vec<BenchRow>,
        medians: Vec<(String, MetricReport)>,
        errors: Vec<BenchError>,
    }
    let had_errors = !errors.is_empty();
    write_json(&out_dir.join("bench.json"), &BenchFile { rows, medians: medians.clone(), errors })?;

    for (method, report) in &medians {
        println!(
            "{method}: median t_tau_10 {}, avg reward {:.4}, e_trans {:.2} mm, success {:.0}%",
            report.t_tau_10,
            report.avg_reward,
            report.e_trans_mm,
            report.success_rate * 100.0
        );
    }
    println!("wrote {}", csv_path.display());
    if had_errors {
        eprintln!("error: one or more bench cells failed");
        std::process::exit(3);
    }
    Ok(())
}

/// Runs bench cells on `jobs` workers; each cell is independent.
fn run_cells(
    config: &RunConfig,
    cells: &[(Method, u64)],
    jobs: usize,
) -> Vec<Option<std::result::Result<MetricReport, String>>> {
    let next = AtomicUsize::new(0);
    let results = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(cells.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() {
                    break;
                }
                let (method, seed) = cells[i];
                let outcome = run_method_with_init::<f64>(config, seed, method, None)
                    .and_then(|result| build_report(config, seed, &result))
                    .map_err(|e| e.to_string());
                results.lock().unwrap()[i] = Some(outcome);
            });
        }
    });
    results.into_inner().unwrap()
}
