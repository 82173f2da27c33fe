use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use ansgen::corrector::{CorrectorConfig, OnError};
use ansgen_cli::{
    default_workers, run, Command, CorrectorKind, ReportFormat, Rule, RunConfig, ENDPOINT_ENV,
};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OnGecError {
    Fail,
    Passthrough,
}

/// Generate full-length answers from questions and short answers, then
/// correct, score and diagnose them.
#[derive(Debug, Parser)]
#[command(name = "ansgen", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,

    /// JSONL corpus
    #[arg(long)]
    corpus: PathBuf,

    #[arg(long, value_enum, default_value_t = Rule::Auto)]
    rule: Rule,

    #[arg(long, value_enum, default_value_t = CorrectorKind::Identity)]
    corrector: CorrectorKind,

    /// Base URL of the correction service
    #[arg(long, env = ENDPOINT_ENV, default_value = "")]
    endpoint: String,

    #[arg(long, default_value_t = 5000)]
    timeout_ms: u64,

    #[arg(long, default_value_t = 2)]
    retries: u32,

    #[arg(long, value_enum, default_value_t = OnGecError::Fail)]
    on_gec_error: OnGecError,

    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pronoun_swap: Toggle,

    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,

    /// Worker threads (default: number of processors)
    #[arg(long)]
    workers: Option<usize>,
}

impl From<Args> for RunConfig {
    fn from(a: Args) -> Self {
        RunConfig {
            command: a.command,
            corpus_path: a.corpus,
            rule: a.rule,
            corrector: a.corrector,
            corrector_config: CorrectorConfig {
                endpoint: a.endpoint,
                timeout_ms: a.timeout_ms,
                max_retries: a.retries,
                on_error: match a.on_gec_error {
                    OnGecError::Fail => OnError::Fail,
                    OnGecError::Passthrough => OnError::Passthrough,
                },
            },
            pronoun_swap: matches!(a.pronoun_swap, Toggle::On),
            output_path: a.out,
            report_format: a.format,
            workers: a.workers.unwrap_or_else(default_workers),
        }
    }
}

fn main() -> ExitCode {
    let config = RunConfig::from(Args::parse());
    let stdout = io::stdout();
    let stderr = io::stderr();
    match run(&config, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
