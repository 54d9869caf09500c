mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::Duration;
use clap::{Args, Parser, Subcommand, ValueEnum};
use crossprice::analytics::CapitalBasis;

use config::{parse_duration, Provider, RunConfig};
use error::CliError;
use output::Summary;

/// Cross-venue prediction market arbitrage, run as batch stages over a working directory.
#[derive(Debug, Parser)]
#[command(name = "crossprice", version)]
struct Cli {
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct DirFlags {
    /// Directory holding the conventional input files.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output directory; defaults to the input directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    markets: Option<PathBuf>,
    #[arg(long)]
    prices: Option<PathBuf>,
    #[arg(long)]
    frictions: Option<PathBuf>,
    #[arg(long)]
    relations: Option<PathBuf>,
}

impl From<DirFlags> for commands::DirArgs {
    fn from(d: DirFlags) -> Self {
        commands::DirArgs {
            input: d.input,
            out: d.out,
            markets: d.markets,
            prices: d.prices,
            frictions: d.frictions,
            relations: d.relations,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Basis {
    Notional,
    AllIn,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and filter a raw corpus and its prices.
    Ingest {
        #[arg(long)]
        markets: Option<PathBuf>,
        #[arg(long)]
        prices: Option<PathBuf>,
        #[arg(long)]
        frictions: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the inclusion policy.
        #[arg(long)]
        keep_all: bool,
    },
    /// Generate a synthetic corpus with ground truth and a planted ledger.
    Synth {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scenario TOML; flags below override its fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        platforms: Option<usize>,
        #[arg(long)]
        events_per_category: Option<usize>,
        #[arg(long)]
        intensity: Option<f64>,
        #[arg(long)]
        async_quotes: bool,
    },
    /// Retrieve and verify semantic relations.
    Match {
        #[command(flatten)]
        dir: DirFlags,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        retrieve_k: Option<usize>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Ground truth for the rule verifier.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, value_enum)]
        provider: Option<Provider>,
    },
    /// Scan quotes for friction-adjusted arbitrage.
    Detect {
        #[command(flatten)]
        dir: DirFlags,
        /// Join window for cross-venue quotes, e.g. `5m` or `0s`.
        #[arg(long, value_parser = parse_duration)]
        staleness: Option<Duration>,
    },
    /// Per-relation deviation metrics and the case-study spread export.
    Analyze {
        #[command(flatten)]
        dir: DirFlags,
        #[arg(long, value_parser = parse_duration)]
        staleness: Option<Duration>,
        /// Persistence filter for the case-study spread.
        #[arg(long, value_parser = parse_duration)]
        persistence: Option<Duration>,
        /// `market|market` pair to export; defaults to the widest equivalent pair.
        #[arg(long)]
        case_study: Option<String>,
    },
    /// Naive sequential backtest over detected equivalent-pair opportunities.
    Backtest {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        markets: Option<PathBuf>,
        #[arg(long)]
        opportunities: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "notional")]
        basis: Basis,
    },
    /// Text and CSV summaries of the metrics.
    Report {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        metrics: Option<PathBuf>,
        #[arg(long)]
        trades: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Synth { .. } => "synth",
            Command::Match { .. } => "match",
            Command::Detect { .. } => "detect",
            Command::Analyze { .. } => "analyze",
            Command::Backtest { .. } => "backtest",
            Command::Report { .. } => "report",
        }
    }
}

fn run(cfg: &RunConfig, command: Command, summary: &mut Summary) -> Result<Vec<String>, CliError> {
    let out = match command {
        Command::Ingest {
            markets,
            prices,
            frictions,
            out,
            keep_all,
        } => commands::ingest(
            cfg,
            commands::IngestArgs {
                markets,
                prices,
                frictions,
                out,
                keep_all,
            },
            summary,
        )?,
        Command::Synth {
            out,
            spec,
            seed,
            platforms,
            events_per_category,
            intensity,
            async_quotes,
        } => commands::synth(
            cfg,
            commands::SynthArgs {
                out,
                spec,
                seed,
                platforms,
                events_per_category,
                intensity,
                async_quotes,
            },
            summary,
        )?,
        Command::Match {
            dir,
            k,
            retrieve_k,
            cache_dir,
            truth,
            provider,
        } => commands::match_markets(
            cfg,
            commands::MatchArgs {
                dir: dir.into(),
                k,
                retrieve_k,
                cache_dir,
                truth,
                provider,
            },
            summary,
        )?,
        Command::Detect { dir, staleness } => commands::detect_opportunities(
            cfg,
            commands::DetectArgs {
                dir: dir.into(),
                staleness,
            },
            summary,
        )?,
        Command::Analyze {
            dir,
            staleness,
            persistence,
            case_study,
        } => commands::analyze(
            cfg,
            commands::AnalyzeArgs {
                dir: dir.into(),
                staleness,
                persistence,
                case_study,
            },
            summary,
        )?,
        Command::Backtest {
            input,
            out,
            markets,
            opportunities,
            basis,
        } => commands::backtest(
            cfg,
            commands::BacktestArgs {
                input,
                out,
                markets,
                opportunities,
                basis: match basis {
                    Basis::Notional => CapitalBasis::Notional,
                    Basis::AllIn => CapitalBasis::AllIn,
                },
            },
            summary,
        )?,
        Command::Report {
            input,
            out,
            metrics,
            trades,
        } => commands::report(
            cfg,
            commands::ReportArgs {
                input,
                out,
                metrics,
                trades,
            },
            summary,
        )?,
    };
    Ok(out.written().to_vec())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = cli.command.name();
    let cfg = match cli.config.as_deref().map(RunConfig::load).transpose() {
        Ok(cfg) => cfg.unwrap_or_default(),
        Err(e) => return fail(name, e),
    };
    let mut summary = Summary::default();
    match run(&cfg, cli.command, &mut summary) {
        Ok(outputs) => {
            println!("{}", summary.render(name, &outputs));
            ExitCode::SUCCESS
        }
        Err(e) => fail(name, e),
    }
}

fn fail(name: &str, e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    println!("{}", output::failure_line(name, &e));
    ExitCode::from(e.code())
}
