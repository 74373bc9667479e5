mod config;
mod failure;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::PipelineConfig;
use failure::{CliResult, Failure};
use stages::Pipeline;

#[derive(Parser)]
#[command(name = "pbench", version, about = "Player-profile classification pipeline")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Pipeline config file (JSON). Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "PBENCH_OUT")]
    out: Option<PathBuf>,
    /// Master seed for generation, balancing, splitting and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Force a fixed gradient reduction order.
    #[arg(long, global = true)]
    deterministic: bool,
    #[arg(long, global = true)]
    games_per_profile: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    /// Comma-separated ladder rung ids.
    #[arg(long, global = true, value_delimiter = ',')]
    rungs: Option<Vec<String>>,
    /// Windows per profile after balancing.
    #[arg(long, global = true)]
    balance_target: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the corpus: gen/sessions.jsonl and gen/manifest.json.
    Gen,
    /// Window and featurize every session.
    Featurize,
    /// Drop whole games until the profiles hold similar window counts.
    Balance,
    /// Assign balanced games to train, validation and test.
    Split,
    /// Train every ladder rung.
    Train,
    /// Evaluate every trained rung on the test games.
    Eval,
    /// Merge per-rung reports into one table.
    Report {
        /// Directory holding one subdirectory per report; defaults to <out>/eval.
        dir: Option<PathBuf>,
    },
    /// Every stage in order, then the report.
    RunAll,
}

fn resolve(g: &Global) -> CliResult<PipelineConfig> {
    let mut cfg = match &g.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &g.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if g.deterministic {
        cfg.train.deterministic = true;
    }
    if let Some(n) = g.games_per_profile {
        cfg.games_per_profile = n;
    }
    if let Some(n) = g.epochs {
        cfg.train.epochs = n;
    }
    if let Some(r) = &g.rungs {
        cfg.ladder = r.clone();
    }
    if let Some(t) = g.balance_target {
        cfg.balance_target = Some(t);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = resolve(&cli.global)?;
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Failure::config("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
    }
    println!("seed: {}", cfg.seed);
    let p = Pipeline::new(cfg);
    match cli.command {
        Command::Gen => p.gen(),
        Command::Featurize => p.featurize(),
        Command::Balance => p.balance(),
        Command::Split => p.split(),
        Command::Train => p.train(),
        Command::Eval => p.eval(),
        Command::Report { dir } => {
            let dir = dir.unwrap_or_else(|| p.out.join("eval"));
            print!("{}", stages::report(&dir)?);
            Ok(())
        }
        Command::RunAll => {
            p.gen()?;
            p.featurize()?;
            p.balance()?;
            p.split()?;
            p.train()?;
            p.eval()?;
            stages::report(&p.out.join("eval")).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { failure::EXIT_CONFIG } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
