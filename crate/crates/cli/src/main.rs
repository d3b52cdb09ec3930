use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use uavpc::env::EnvMap;
use uavpc::estimator::ChannelEstimator;
use uavpc::harness::{
    episode_log_to_string, prepare_env, pretrain, read_records, read_text, records_to_string, run, summarize,
    write_text, Estimation, RunConfig, TrajectorySelect,
};
use uavpc::solver::{solve_instance, SolveInstance};

#[derive(Parser)]
#[command(name = "uavpc", version, about = "URLLC UAV link simulation: channels, estimation and power control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Root seed; overrides `seed` from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the building map.
    GenEnv {
        #[command(flatten)]
        common: Common,
    },
    /// Pre-train the channel estimators at random positions.
    Pretrain {
        #[command(flatten)]
        common: Common,
        /// Overrides `pretrain_episodes`.
        #[arg(long)]
        episodes: Option<usize>,
        /// Building map from `gen-env`; generated from the seed if absent.
        #[arg(long)]
        env: Option<PathBuf>,
    },
    /// Run the slot loop along a trajectory.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        traj: Option<Traj>,
        /// Overrides `T`.
        #[arg(long)]
        slots: Option<usize>,
        #[arg(long)]
        env: Option<PathBuf>,
        /// Estimator checkpoint from `pretrain`; pre-trains first if absent.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Solve on the true channels instead of estimates.
        #[arg(long)]
        exact: bool,
    },
    /// Solve a single power-control instance given as JSON.
    SolveOne {
        #[command(flatten)]
        common: Common,
        /// Instance file, `{"h_ul": [[re, im], ...], "g_dl": ..., "params": {...}}`.
        #[arg(long)]
        instance: PathBuf,
    },
    /// Summarize a records CSV.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        records: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Traj {
    C2t,
    Vat,
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = read_text(path)?;
            RunConfig::parse(&text).with_context(|| format!("in config {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn load_env(cfg: &RunConfig, path: Option<&Path>) -> Result<EnvMap> {
    match path {
        Some(p) => Ok(EnvMap::from_json(&read_text(p)?).with_context(|| format!("in {}", p.display()))?),
        None => Ok(prepare_env(cfg)?),
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    write_text(path, contents)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Writes to `<out>/<name>` when `--out` is given, otherwise to stdout.
fn emit(common: &Common, name: &str, contents: &str) -> Result<()> {
    match &common.out {
        Some(dir) => write(&dir.join(name), contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn check_weights(est: &ChannelEstimator, cfg: &RunConfig) -> Result<()> {
    if est.antennas != cfg.radio.antennas {
        bail!("checkpoint has K = {}, config has K = {}", est.antennas, cfg.radio.antennas);
    }
    if est.bs_pos != cfg.radio.bs_pos || est.region_km != cfg.buildings.area_side {
        bail!("checkpoint geometry (BS position or region) differs from the config");
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::GenEnv { common } => {
            let cfg = load_config(&common)?;
            let env = prepare_env(&cfg)?;
            write(&out_dir(&common).join("envmap.json"), &env.to_json()?)?;
        }
        Command::Pretrain { common, episodes, env } => {
            let mut cfg = load_config(&common)?;
            if let Some(n) = episodes {
                cfg.train.pretrain_episodes = n;
            }
            let env = load_env(&cfg, env.as_deref())?;
            let (est, log) = pretrain(&cfg, &env)?;
            let dir = out_dir(&common);
            write(&dir.join("estimator.json"), &est.to_json()?)?;
            write(&dir.join("pretrain_mape.csv"), &episode_log_to_string(&log)?)?;
        }
        Command::Run {
            common,
            traj,
            slots,
            env,
            weights,
            exact,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(t) = traj {
                cfg.traj = match t {
                    Traj::C2t => TrajectorySelect::C2t,
                    Traj::Vat => TrajectorySelect::Vat,
                };
            }
            if let Some(n) = slots {
                cfg.horizon = n;
            }
            cfg.validate()?;
            let env = load_env(&cfg, env.as_deref())?;
            let dir = out_dir(&common);
            let output = if exact {
                run(&cfg, &env, Estimation::Exact)?
            } else {
                let mut est = match &weights {
                    Some(p) => {
                        let est = ChannelEstimator::from_json(&read_text(p)?)
                            .with_context(|| format!("in {}", p.display()))?;
                        check_weights(&est, &cfg)?;
                        est
                    }
                    None => pretrain(&cfg, &env)?.0,
                };
                let output = run(&cfg, &env, Estimation::Learned(&mut est))?;
                write(&dir.join("estimator_final.json"), &est.to_json()?)?;
                output
            };
            write(&dir.join("records.csv"), &records_to_string(&output.records)?)?;
            write(&dir.join("summary.json"), &summarize(&output.records)?.to_json()?)?;
            write(&dir.join("diagnostics.json"), &serde_json::to_string_pretty(&output.diagnostics)?)?;
            write(&dir.join("config.txt"), &cfg.to_config_string())?;
        }
        Command::SolveOne { common, instance } => {
            let cfg = load_config(&common)?;
            let text = read_text(&instance)?;
            let value: serde_json::Value =
                serde_json::from_str(&text).with_context(|| format!("in {}", instance.display()))?;
            let mut inst = SolveInstance::from_json(&text).with_context(|| format!("in {}", instance.display()))?;
            if value.get("params").is_none() {
                inst.params = cfg.link;
            }
            let out = solve_instance(&inst)?;
            emit(&common, "solution.json", &format!("{}\n", serde_json::to_string_pretty(&out)?))?;
        }
        Command::Report { common, records } => {
            let _ = load_config(&common)?;
            let text = read_text(&records)?;
            let recs = read_records(text.as_bytes()).with_context(|| format!("in {}", records.display()))?;
            emit(&common, "summary.json", &format!("{}\n", summarize(&recs)?.to_json()?))?;
        }
    }
    Ok(())
}
