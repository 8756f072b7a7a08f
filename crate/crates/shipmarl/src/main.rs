//! Thin command-line front end over the library.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use shipmarl::analysis::{
    analyze_comm, sweep_noise, welch_t_test, write_comm_csvs, write_curve_csv, write_sweep_csv,
};
use shipmarl::baselines::{run_scripted, PidGains, ScriptedPolicy};
use shipmarl::config::{ConfigError, RunConfig};
use shipmarl::marl::{evaluate, EvalOptions, Maddpg};
use shipmarl::scenarios::log::read_episode_logs;

#[derive(Parser)]
#[command(
    name = "shipmarl",
    about = "Cooperative ship navigation and collision avoidance with multi-agent RL",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a policy set from a run-config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Override the training seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint or a scripted baseline.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// `checkpoint:<dir>`, `pid` or `fixed`.
        #[arg(long)]
        policy: String,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per-step episode logs (episodes.jsonl).
        #[arg(long)]
        log: bool,
    },
    /// Evaluate checkpoints across a grid of channel noise levels.
    SweepNoise {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated test values overriding the config sweep block.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Communication-vector analysis over an episodes.jsonl file.
    AnalyzeComm {
        #[arg(long)]
        episodes: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Welch t-test between one numeric CSV column of two files.
    Stats {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Zero-based column index.
        #[arg(long, default_value_t = 0)]
        column: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            // Schema/validation problems get a distinct exit code.
            let config_error = e.downcast_ref::<ConfigError>().is_some()
                || e.downcast_ref::<serde_json::Error>().is_some();
            if config_error {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Train { config, seed, out } => cmd_train(config, seed, out),
        Cmd::Eval {
            config,
            policy,
            episodes,
            seed,
            out,
            log,
        } => cmd_eval(config, policy, episodes, seed, out, log),
        Cmd::SweepNoise {
            config,
            values,
            out,
        } => cmd_sweep_noise(config, values, out),
        Cmd::AnalyzeComm { episodes, out } => cmd_analyze_comm(episodes, out),
        Cmd::Stats { a, b, column } => cmd_stats(a, b, column),
    }
}

fn load_config(path: &PathBuf, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = seed {
        cfg.training.seed = Some(seed);
    }
    Ok(cfg)
}

fn cmd_train(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let cfg = load_config(&config, seed)?;
    let out_dir = out.unwrap_or_else(|| cfg.resolved_output_dir());
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    // Snapshot the resolved configuration next to the artifacts.
    std::fs::write(
        out_dir.join("config.json"),
        serde_json::to_string_pretty(&cfg)?,
    )?;

    let world = cfg.world_config()?;
    let train = cfg.train_config();
    let final_eval_episodes = train.final_eval_episodes;
    let eval_seed = train.seed.wrapping_add(0xE7A1);
    let mut trainer = Maddpg::new(world, train)?;
    let report = trainer.train()?;
    log::info!(
        "trained {} episodes ({} updates, {} skipped), early stop: {}",
        report.episodes_run,
        report.updates_run,
        report.updates_skipped,
        report.stopped_early
    );
    write_curve_csv(&report.curve, &out_dir.join("curve.csv"))?;

    let ckpt_dir = out_dir.join("checkpoint");
    trainer.save_checkpoint(&ckpt_dir)?;

    if final_eval_episodes > 0 {
        let opts = EvalOptions {
            episodes: final_eval_episodes,
            seed: eval_seed,
            log_path: Some(out_dir.join("episodes.jsonl")),
            parallel: true,
        };
        let metrics = evaluate(&trainer.world, &trainer.agents, &opts)?;
        std::fs::write(
            out_dir.join("metrics.json"),
            serde_json::to_string_pretty(&metrics)?,
        )?;
        println!(
            "final evaluation: success {:.3} +- {:.3} over {} episodes",
            metrics.success_rate, metrics.success_se, metrics.episodes
        );
    }
    println!("artifacts in {}", out_dir.display());
    Ok(())
}

fn cmd_eval(
    config: PathBuf,
    policy: String,
    episodes: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    log: bool,
) -> Result<()> {
    let cfg = load_config(&config, None)?;
    let out_dir = out.unwrap_or_else(|| cfg.resolved_output_dir());
    std::fs::create_dir_all(&out_dir)?;

    let world = cfg.world_config()?;
    let train = cfg.train_config();
    let opts = EvalOptions {
        episodes: episodes.unwrap_or(train.final_eval_episodes.max(1)),
        seed: seed.unwrap_or(train.seed),
        log_path: log.then(|| out_dir.join("episodes.jsonl")),
        parallel: true,
    };

    let metrics = match policy.as_str() {
        "pid" => run_scripted(ScriptedPolicy::Pid(PidGains::default()), &world, &opts)?,
        "fixed" => run_scripted(ScriptedPolicy::FixedStraight, &world, &opts)?,
        other => {
            let Some(dir) = other.strip_prefix("checkpoint:") else {
                bail!("--policy must be pid, fixed or checkpoint:<dir>");
            };
            let mut trainer = Maddpg::new(world.clone(), train)?;
            trainer.load_checkpoint(dir)?;
            evaluate(&world, &trainer.agents, &opts)?
        }
    };
    let json = serde_json::to_string_pretty(&metrics)?;
    std::fs::write(out_dir.join("metrics.json"), &json)?;
    println!("{json}");
    Ok(())
}

fn cmd_sweep_noise(
    config: PathBuf,
    values: Option<Vec<f64>>,
    out: Option<PathBuf>,
) -> Result<()> {
    let cfg = load_config(&config, None)?;
    let out_dir = out.unwrap_or_else(|| cfg.resolved_output_dir());
    std::fs::create_dir_all(&out_dir)?;

    let Some(sweep) = cfg.sweep.clone() else {
        bail!(ConfigError::Invalid(
            "sweep-noise needs a sweep block in the config".into()
        ));
    };
    let values = values.unwrap_or(sweep.values);
    let world = cfg.world_config()?;
    let train = cfg.train_config();
    let outcome = sweep_noise(
        &world,
        &train,
        sweep.kind,
        &sweep.policies,
        &values,
        sweep.episodes,
        sweep.seed,
    )?;
    for s in &outcome.skipped {
        eprintln!("skipped: {s}");
    }
    let path = out_dir.join("sweep.csv");
    write_sweep_csv(&outcome.rows, &path)?;
    println!(
        "{} rows -> {} ({} policies skipped)",
        outcome.rows.len(),
        path.display(),
        outcome.skipped.len()
    );
    Ok(())
}

fn cmd_analyze_comm(episodes: PathBuf, out: PathBuf) -> Result<()> {
    let logs = read_episode_logs(&episodes)
        .with_context(|| format!("reading {}", episodes.display()))?;
    let analysis = analyze_comm(&logs)?;
    write_comm_csvs(&analysis, &out)?;
    if let Some(r) = &analysis.regression {
        println!(
            "pre-meeting norm vs distance: slope {:.6} (p = {:.3e}, R^2 = {:.4}, n = {})",
            r.slope, r.p_slope, r.r_squared, r.n
        );
    }
    println!(
        "mean norm pre-meeting {:.4}, post-meeting {:.4}; outputs in {}",
        analysis.mean_norm_pre,
        analysis.mean_norm_post,
        out.display()
    );
    Ok(())
}

fn read_column(path: &PathBuf, column: usize) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = record
            .get(column)
            .with_context(|| format!("column {column} missing in {}", path.display()))?;
        if field.is_empty() {
            continue;
        }
        values.push(field.parse::<f64>()?);
    }
    Ok(values)
}

fn cmd_stats(a: PathBuf, b: PathBuf, column: usize) -> Result<()> {
    let sample_a = read_column(&a, column)?;
    let sample_b = read_column(&b, column)?;
    let r = welch_t_test(&sample_a, &sample_b)?;
    println!(
        "{}",
        serde_json::json!({
            "n_a": sample_a.len(),
            "n_b": sample_b.len(),
            "t": r.t,
            "dof": r.dof,
            "p_two_sided": r.p_two_sided,
        })
    );
    Ok(())
}
