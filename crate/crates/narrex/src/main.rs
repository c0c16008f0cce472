use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use narrex::error::{read_text, AppError, AppResult};
use narrex::gateway::CacheMode;
use narrex::{ConfigOverrides, Pipeline, RunConfig, Stage};
use narrex_core::gold::{parse_gold_file, render_gold_file};
use narrex_core::Source;

/// Extract, normalize, count and evaluate causal economic narratives.
#[derive(Parser)]
#[command(name = "narrex", version)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(short, long, global = true, default_value = "narrex.toml")]
    config: PathBuf,
    /// Corpus file (JSONL, one article per line)
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Directory for stage outputs
    #[arg(long, global = true)]
    run_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    cache_mode: Option<CacheMode>,
    /// Directory of recorded model responses
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Concurrent model requests.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Sentences kept on each side of a matching sentence.
    #[arg(long, global = true)]
    window: Option<usize>,
    /// Regex that selects sentences for excerpts
    #[arg(long, global = true)]
    filter_pattern: Option<String>,
    /// Minimum token Jaccard for a predicted/gold match
    #[arg(long, global = true)]
    match_threshold: Option<f64>,
    /// Minimum cosine similarity for joining a cluster
    #[arg(long, global = true)]
    similarity_threshold: Option<f64>,
    /// More log output; repeat for debug logs.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one stage.
    Run {
        #[arg(value_enum)]
        stage: Stage,
    },
    /// Run ingest through aggregate.
    Pipeline {
        /// Also run eval at the end.
        #[arg(long)]
        eval: bool,
    },
    /// Show cluster assignments from the last normalize run.
    ReviewClusters,
    /// Parse gold-format files and check that they render back unchanged.
    CheckGold { files: Vec<PathBuf> },
}

impl Cli {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            corpus: self.corpus.clone(),
            run_dir: self.run_dir.clone(),
            cache_mode: self.cache_mode,
            cache_dir: self.cache_dir.clone(),
            parallelism: self.parallelism,
            window: self.window,
            filter_pattern: self.filter_pattern.clone(),
            match_threshold: self.match_threshold,
            similarity_threshold: self.similarity_threshold,
        }
    }

    fn pipeline(&self) -> AppResult<Pipeline> {
        Pipeline::new(RunConfig::load(&self.config, &self.overrides())?)
    }
}

fn check_gold(files: &[PathBuf]) -> AppResult<()> {
    if files.is_empty() {
        return Err(AppError::Usage("check-gold needs at least one file".to_string()));
    }
    for path in files {
        let text = read_text(path)?;
        let docs = parse_gold_file(&text, Source::Gold).map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;
        let rendered = render_gold_file(&docs)?;
        let again = parse_gold_file(&rendered, Source::Gold)?;
        if again != docs {
            return Err(AppError::Data(format!("{}: does not survive a render/parse round trip", path.display())));
        }
        let narratives: usize = docs.iter().map(|d| d.narratives.len()).sum();
        println!("{}: {} documents, {narratives} narratives", path.display(), docs.len());
    }
    Ok(())
}

fn run(cli: &Cli) -> AppResult<()> {
    match &cli.command {
        Command::Run { stage } => {
            let manifest = cli.pipeline()?.run(*stage)?;
            println!("{}: {}", stage.name(), serde_json::to_string(&manifest.counts).unwrap_or_default());
        }
        Command::Pipeline { eval } => {
            let pipeline = cli.pipeline()?;
            let mut stages = Stage::PIPELINE.to_vec();
            if *eval {
                stages.push(Stage::Eval);
            }
            for stage in stages {
                let manifest = pipeline.run(stage)?;
                println!("{}: {}", stage.name(), serde_json::to_string(&manifest.counts).unwrap_or_default());
            }
        }
        Command::ReviewClusters => {
            let report = narrex::review::review_clusters(&cli.pipeline()?)?;
            if report.is_empty() {
                eprintln!("no topics to review");
            }
            print!("{report}");
        }
        Command::CheckGold { files } => check_gold(files)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
