mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{CliError, Context};
use crate::config::Config;

#[derive(Parser, Debug)]
#[command(name = "simrel", version, about = "Similarity and relatedness scoring pipeline")]
struct Cli {
    /// TOML configuration file. Without one, every section takes its defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's `output`, else `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed applied to every stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads applied to every stage.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Validate the configuration and inputs without writing anything.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate and filter candidate word pairs.
    Curate,
    /// Score candidate pairs through the chat endpoint, resuming from the cache.
    Annotate,
    /// Train the two-headed scorer on the annotated dataset.
    Train,
    /// Benchmark correlations, part-of-speech split and polysemy probes.
    Eval,
    /// Score word pairs read from a TSV file with the trained model.
    Score {
        /// `w1<TAB>w2` per line.
        pairs: PathBuf,
    },
    /// Topic-model atlas stages.
    Atlas {
        #[command(subcommand)]
        stage: AtlasStage,
    },
    /// Document classification, kNN purity and synonym retrieval tasks.
    Downstream,
    /// Regress downstream outcomes on atlas axes.
    Regress,
    /// Retrain on growing fractions of the training split.
    Scaling,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum AtlasStage {
    /// Score every run topic and the random baseline topics.
    Score,
    /// Min-max normalise scores within each corpus.
    Normalize,
    /// Kendall's W across corpora on each axis.
    Concordance,
    /// Per-corpus plot tables.
    Export,
}

fn run(cli: Cli) -> Result<String, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p).map_err(CliError::Config)?,
        None => Config::default(),
    };
    cfg.apply_overrides(cli.seed, cli.workers);
    cfg.validate().map_err(CliError::Config)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Context {
        cfg,
        out,
        dry_run: cli.dry_run,
    };
    match cli.command {
        Command::Curate => commands::curate(&ctx),
        Command::Annotate => commands::annotate(&ctx),
        Command::Train => commands::train(&ctx),
        Command::Eval => commands::eval(&ctx),
        Command::Score { pairs } => commands::score(&ctx, &pairs),
        Command::Atlas { stage } => match stage {
            AtlasStage::Score => commands::atlas_score(&ctx),
            AtlasStage::Normalize => commands::atlas_normalize(&ctx),
            AtlasStage::Concordance => commands::atlas_concordance(&ctx),
            AtlasStage::Export => commands::atlas_export(&ctx),
        },
        Command::Downstream => commands::downstream(&ctx),
        Command::Regress => commands::regress(&ctx),
        Command::Scaling => commands::scaling(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
