//! `portcheck`: litmus-test engine and optimization-portability checker.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use portcheck_cli::{run, CliError, Command, Config, Format, Settings, CAP};

/// Batch checker for litmus tests, candidate executions and
/// optimization-portability questions under SC, TSO and SRA.
///
/// Exit codes: 0 success, 1 usage or I/O error, 2 property or claim
/// violation, 3 search budget exhausted.
#[derive(Parser)]
#[command(name = "portcheck", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// JSON config file mirroring the flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output format: json, text, or dot (pre-traces/executions only).
    #[arg(long, global = true, value_name = "FMT")]
    format: Option<String>,

    /// Worker threads. Reserved: every engine currently runs on one
    /// thread so identical invocations stay byte-identical.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Enumeration cap on events per pre-trace (default 12).
    #[arg(long, global = true, value_name = "EVENTS")]
    cap: Option<usize>,
}

#[derive(Args)]
struct ModelArg {
    /// Memory model: sc, tso or sra.
    #[arg(long, value_name = "MODEL")]
    model: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a .litmus program and print its label map.
    Parse { input: PathBuf },
    /// Flatten a .litmus program into pre-trace documents.
    Pretraces { input: PathBuf },
    /// Count candidate executions of a .litmus or .pretrace input.
    Enumerate { input: PathBuf },
    /// Check consistency; with --outcome, decide reachability.
    Check {
        input: PathBuf,
        #[command(flatten)]
        model: ModelArg,
        /// Outcome predicate `name=int,...` over read labels or locals.
        #[arg(long, value_name = "K=V,...")]
        outcome: Option<String>,
    },
    /// Classify the minimal cycles of a .exec execution document.
    ClassifyCycles {
        input: PathBuf,
        #[command(flatten)]
        model: ModelArg,
    },
    /// Diff two pre-traces into a transformation effect.
    Diff { p: PathBuf, p2: PathBuf },
    /// Classify a transformation effect's syntactic flags.
    ClassifyEffect { p: PathBuf, p2: PathBuf },
    /// Decide behavioral safety of a transformation under a model.
    Safety {
        p: PathBuf,
        p2: PathBuf,
        #[command(flatten)]
        model: ModelArg,
    },
    /// Detect triangular races in a .exec execution document.
    Race { input: PathBuf },
    /// Check portability of a transformation from SC to a weaker target.
    Port {
        p: PathBuf,
        p2: PathBuf,
        /// Target model: tso or sra.
        #[arg(long, value_name = "MODEL")]
        target: Option<String>,
    },
    /// Run the bounded theorem search.
    Search {
        /// JSON bounds file; defaults match the shipped verification run.
        #[arg(long, value_name = "FILE")]
        bounds: Option<PathBuf>,
    },
    /// Audit the model-weakness chain over .litmus files/directories.
    Audit { inputs: Vec<PathBuf> },
}

fn settings(cli: &Cli) -> Result<Settings, CliError> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let format = match &cli.format {
        Some(f) => f.parse::<Format>()?,
        None => config.format.unwrap_or(Format::Json),
    };
    let jobs = cli.jobs.or(config.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let (model, outcome, target, bounds) = match &cli.cmd {
        Cmd::Check { model, outcome, .. } => {
            (model.model.clone(), outcome.clone(), None, None)
        }
        Cmd::ClassifyCycles { model, .. } | Cmd::Safety { model, .. } => {
            (model.model.clone(), None, None, None)
        }
        Cmd::Port { target, .. } => (None, None, target.clone(), None),
        Cmd::Search { bounds } => (None, None, None, bounds.clone()),
        _ => (None, None, None, None),
    };
    Ok(Settings {
        format,
        cap: cli.cap.or(config.cap).unwrap_or(CAP),
        model: model.or(config.model),
        target: target.or(config.target),
        outcome: outcome.or(config.outcome),
        bounds: bounds.or(config.bounds),
    })
}

fn command(cmd: Cmd) -> Command {
    match cmd {
        Cmd::Parse { input } => Command::Parse { input },
        Cmd::Pretraces { input } => Command::Pretraces { input },
        Cmd::Enumerate { input } => Command::Enumerate { input },
        Cmd::Check { input, .. } => Command::Check { input },
        Cmd::ClassifyCycles { input, .. } => Command::ClassifyCycles { input },
        Cmd::Diff { p, p2 } => Command::Diff { p, p2 },
        Cmd::ClassifyEffect { p, p2 } => Command::ClassifyEffect { p, p2 },
        Cmd::Safety { p, p2, .. } => Command::Safety { p, p2 },
        Cmd::Race { input } => Command::Race { input },
        Cmd::Port { p, p2, .. } => Command::Port { p, p2 },
        Cmd::Search { .. } => Command::Search,
        Cmd::Audit { inputs } => Command::Audit { inputs },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Render clap's message but keep the usage exit code contract.
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let s = match settings(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(&command(cli.cmd), &s) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
