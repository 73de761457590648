use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use metonymy::commands::{self, parse_run_arg, CommandError, CommandOutput};
use metonymy::config::{parse_strategy_spec, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "metonymy", version, about = "Common-noun metonymy resolution toolkit")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Record/replay cache directory.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    concurrency: Option<usize>,
    /// Votes per instance (odd).
    #[arg(long, global = true)]
    votes: Option<usize>,
    /// Show the neighboring sentences to the model.
    #[arg(long, global = true)]
    with_context: bool,
    /// basic | cot | cot2s, optionally with -sc for 9-vote self-consistency.
    #[arg(long, global = true)]
    strategy: Option<String>,
    /// http | scripted:<file> | replay | none
    #[arg(long, global = true)]
    backend: Option<String>,
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    endpoint: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow a noun-verb lexicon from seed pairs.
    Augment {
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract candidate sentences from CoNLL-U files.
    Mine {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        conllu: Vec<PathBuf>,
    },
    /// Draw a noun-balanced sample of mined candidates.
    Sample {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(short, long)]
        n: usize,
        /// Take n per category instead of n in total.
        #[arg(long)]
        per_category: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify every instance of a dataset.
    Classify {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against gold labels.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        per_category: bool,
    },
    /// Label counts per category.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
        /// Check against the published ConMeC counts.
        #[arg(long)]
        conmec: bool,
    },
    /// Cohen's kappa between two annotation files.
    Kappa {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Metonymic F1 by vote count, from N=PREDICTIONS arguments.
    VoteCurve {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(required = true, value_parser = parse_run_arg)]
        runs: Vec<(usize, PathBuf)>,
        /// CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<CommandOutput, CommandError> {
    if let Some(s) = &cli.strategy {
        parse_strategy_spec(s).map_err(CommandError::Usage)?;
    }
    let mut cfg = RunConfig::load(cli.config.as_deref()).map_err(|e| CommandError::Usage(e.to_string()))?;
    cfg.apply(&Overrides {
        seed: cli.seed,
        cache_dir: cli.cache_dir,
        concurrency: cli.concurrency,
        votes: cli.votes,
        with_context: cli.with_context,
        strategy: cli.strategy,
        backend: cli.backend,
        model: cli.model,
        endpoint: cli.endpoint,
    })
    .map_err(|e| CommandError::Usage(e.to_string()))?;
    match cli.command {
        Command::Augment { seeds, out } => commands::cmd_augment(&seeds, &out, &cfg),
        Command::Mine { lexicon, out, conllu } => commands::cmd_mine(&conllu, &lexicon, &out),
        Command::Sample {
            candidates,
            n,
            per_category,
            out,
        } => commands::cmd_sample(&candidates, n, per_category, &out, &cfg),
        Command::Classify { dataset, out } => commands::cmd_classify(&dataset, &out, &cfg),
        Command::Evaluate {
            predictions,
            dataset,
            out,
            per_category,
        } => commands::cmd_evaluate(&predictions, &dataset, out.as_deref(), per_category),
        Command::Stats { dataset, conmec } => commands::cmd_stats(&dataset, conmec),
        Command::Kappa { a, b, out } => commands::cmd_kappa(&a, &b, out.as_deref()),
        Command::VoteCurve { dataset, runs, out } => commands::cmd_vote_curve(&dataset, &runs, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(out) => {
            println!("{}", out.message);
            if out.failures > 0 {
                eprintln!("{} item(s) failed", out.failures);
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
