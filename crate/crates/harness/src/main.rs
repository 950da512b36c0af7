use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rbo_harness::bo::RunOptions;
use rbo_harness::config::{self, BoStudyConfig, DemoConfig, MismatchConfig, VarStudyConfig};
use rbo_harness::{demo, mismatch, output, study, variance, HarnessError, Result};

#[derive(Parser)]
#[command(name = "rbo", version, about = "Rollout Bayesian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare optimization methods on one objective.
    RunBo(Common),
    /// Estimation error of the rollout acquisition against sample size.
    VarStudy(Common),
    /// Policy search against its member acquisitions, with usage histograms.
    PolicySearch(Common),
    /// Rollout horizons on GP-sampled objectives under model mismatch.
    Mismatch(Common),
    /// Two BO steps on the 1D demo problem with EI, KG and rollout EI.
    Demo(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config file. Built-in defaults are used where a command has them.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Use the replication and trial counts of the original experiments.
    #[arg(long)]
    paper_scale: bool,
    /// Record per-iteration wall-clock times (outputs are then not reproducible).
    #[arg(long)]
    timing: bool,
}

fn required<T: serde::de::DeserializeOwned>(path: &Option<PathBuf>, what: &str) -> Result<T> {
    match path {
        Some(p) => config::load(p),
        None => Err(HarnessError::Config(format!("{what} needs --config <file>"))),
    }
}

fn mismatch_default() -> Result<MismatchConfig> {
    // the built-in study: Matern 5/2 model, smoother and rougher truths
    let text = include_str!("../../../configs/mismatch.json");
    serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
}

fn execute(cmd: &Command) -> Result<PathBuf> {
    let (c, out): (&Common, &Path) = match cmd {
        Command::RunBo(c) | Command::VarStudy(c) | Command::PolicySearch(c) | Command::Mismatch(c) | Command::Demo(c) => {
            (c, c.out.as_path())
        }
    };
    let opts = RunOptions { timing: c.timing };
    match cmd {
        Command::RunBo(_) | Command::PolicySearch(_) => {
            let mut cfg: BoStudyConfig = required(&c.config, "this command")?;
            if let Some(s) = c.seed {
                cfg.seed = s;
            }
            if c.paper_scale {
                cfg.apply_paper_scale();
            }
            let result = study::run_study(&cfg, opts)?;
            output::emit_study(&result, cfg.objective.dim(), out)?;
        }
        Command::VarStudy(_) => {
            let mut cfg: VarStudyConfig = required(&c.config, "var-study")?;
            if let Some(s) = c.seed {
                cfg.seed = s;
            }
            if c.paper_scale {
                cfg.apply_paper_scale();
            }
            output::emit_variance(&variance::variance_study(&cfg)?, out)?;
        }
        Command::Mismatch(_) => {
            let mut cfg = match &c.config {
                Some(p) => config::load(p)?,
                None => mismatch_default()?,
            };
            if let Some(s) = c.seed {
                cfg.seed = s;
            }
            if c.paper_scale {
                cfg.apply_paper_scale();
            }
            output::emit_mismatch(&mismatch::mismatch_study(&cfg, opts)?, out)?;
        }
        Command::Demo(_) => {
            let mut cfg: DemoConfig = match &c.config {
                Some(p) => config::load(p)?,
                None => DemoConfig::default(),
            };
            if let Some(s) = c.seed {
                cfg.seed = s;
            }
            output::emit_demo(&demo::demo(&cfg)?, out)?;
        }
    }
    Ok(out.to_path_buf())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let threads = match &cli.command {
        Command::RunBo(c) | Command::VarStudy(c) | Command::PolicySearch(c) | Command::Mismatch(c) | Command::Demo(c) => {
            c.threads
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| execute(&cli.command)) {
        Ok(out) => {
            log::info!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
