//! Driver behind the `ansgen` binary: generation, correction, evaluation,
//! error diagnostics and corpus statistics over a JSONL corpus.

pub mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use ansgen::analysis::analyze;
use ansgen::corpus::{load_jsonl, stats, CorpusError, LoadMode, Sample};
use ansgen::corrector::{
    Corrector, CorrectorConfig, CorrectorError, HttpCorrector, IdentityCorrector,
};
use ansgen::diagnostics::{audit_corpus, time_pipeline};
use ansgen::metrics::{aggregate, score_sample, EvalScores};
use ansgen::parsetree::ParsedQuestion;
use ansgen::rules::{generate, GeneratedAnswer, GenerationRequest, RuleChoice, RuleError};
use clap::ValueEnum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use report::{
    AnswerRecord, DiagnosisReport, EvaluationReport, SampleScore, StatsReport, TimingSection,
    TIMING_SCOPE,
};

pub const ENDPOINT_ENV: &str = "ANSGEN_GEC_ENDPOINT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no samples in corpus")]
    NoSamples,
    #[error("sample {id}: {source}")]
    Correction { id: String, source: CorrectorError },
    #[error(transparent)]
    Corrector(#[from] CorrectorError),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Generate,
    Evaluate,
    Diagnose,
    Stats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    V1,
    V2,
    Existential,
    #[default]
    Auto,
}

impl Rule {
    pub fn choice(self) -> RuleChoice {
        match self {
            Rule::V1 => RuleChoice::V1,
            Rule::V2 => RuleChoice::V2,
            Rule::Existential => RuleChoice::Existential,
            Rule::Auto => RuleChoice::Auto,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Rule::V1 => "RBV1",
            Rule::V2 => "RBV2",
            Rule::Existential => "RB",
            Rule::Auto => "RB-auto",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectorKind {
    #[default]
    Identity,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub command: Command,
    pub corpus_path: PathBuf,
    pub rule: Rule,
    pub corrector: CorrectorKind,
    pub corrector_config: CorrectorConfig,
    pub pronoun_swap: bool,
    pub output_path: Option<PathBuf>,
    pub report_format: ReportFormat,
    /// Worker threads for generation and correction; timing always runs on
    /// one thread.
    pub workers: usize,
}

impl RunConfig {
    pub fn new(command: Command, corpus_path: impl Into<PathBuf>) -> Self {
        RunConfig {
            command,
            corpus_path: corpus_path.into(),
            rule: Rule::Auto,
            corrector: CorrectorKind::Identity,
            corrector_config: CorrectorConfig::new(""),
            pronoun_swap: true,
            output_path: None,
            report_format: ReportFormat::Text,
            workers: default_workers(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if self.corrector == CorrectorKind::Remote {
            if self.corrector_config.endpoint.trim().is_empty() {
                return Err(CliError::Config(format!(
                    "remote corrector needs --endpoint or {ENDPOINT_ENV}"
                )));
            }
            self.corrector_config.validate()?;
        }
        Ok(())
    }

    fn model_label(&self) -> String {
        match self.corrector {
            CorrectorKind::Identity => self.rule.label().to_owned(),
            CorrectorKind::Remote => format!("{}+GCM", self.rule.label()),
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Run one command. Reports go to `out` (or the configured output file),
/// warnings to `err`.
pub fn run(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    config.validate()?;
    match config.command {
        Command::Generate => run_generate(config, out, err),
        Command::Evaluate => run_evaluate(config, out, err),
        Command::Diagnose => run_diagnose(config, out, err),
        Command::Stats => run_stats(config, out, err),
    }
}

/// One sample carried through analysis, rules and correction.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: String,
    /// Rule output before correction.
    pub generated: Option<GeneratedAnswer>,
    pub answer: Option<String>,
    pub changed_by_gec: bool,
    pub error: Option<String>,
}

fn load_strict(config: &RunConfig) -> Result<Vec<Sample>, CliError> {
    let samples = load_jsonl(&config.corpus_path, LoadMode::Strict)?.samples;
    if samples.is_empty() {
        return Err(CliError::NoSamples);
    }
    Ok(samples)
}

fn build_corrector(config: &RunConfig) -> Result<Box<dyn Corrector>, CliError> {
    Ok(match config.corrector {
        CorrectorKind::Identity => Box::new(IdentityCorrector),
        CorrectorKind::Remote => Box::new(HttpCorrector::new(config.corrector_config.clone())?),
    })
}

fn parse_all(samples: &[Sample]) -> Result<Vec<ParsedQuestion>, CliError> {
    // strict loading already validated alignment
    samples
        .iter()
        .map(|s| {
            s.parse_question()
                .map_err(|e| CliError::Config(format!("sample {}: {e}", s.id)))
        })
        .collect()
}

fn generate_one(
    config: &RunConfig,
    sample: &Sample,
    pq: &ParsedQuestion,
) -> Result<GeneratedAnswer, RuleError> {
    let analysis = analyze(pq);
    let req = GenerationRequest::new(pq, &analysis, &sample.factoid, sample.qtype)?
        .pronoun_swap(config.pronoun_swap);
    generate(&req, config.rule.choice())
}

fn process(
    config: &RunConfig,
    samples: &[Sample],
    parsed: &[ParsedQuestion],
    err: &mut dyn Write,
) -> Result<Vec<Outcome>, CliError> {
    let corrector = build_corrector(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;

    let results: Vec<Result<Outcome, CliError>> = pool.install(|| {
        samples
            .par_iter()
            .zip(parsed.par_iter())
            .map(|(sample, pq)| {
                let generated = match generate_one(config, sample, pq) {
                    Ok(g) => g,
                    Err(e) => {
                        return Ok(Outcome {
                            id: sample.id.clone(),
                            generated: None,
                            answer: None,
                            changed_by_gec: false,
                            error: Some(e.to_string()),
                        })
                    }
                };
                let corrected =
                    corrector
                        .correct(&generated.text)
                        .map_err(|source| CliError::Correction {
                            id: sample.id.clone(),
                            source,
                        })?;
                Ok(Outcome {
                    id: sample.id.clone(),
                    answer: Some(corrected.corrected.clone()),
                    changed_by_gec: corrected.changed,
                    error: corrected
                        .warning
                        .map(|w| format!("correction skipped: {w}")),
                    generated: Some(generated),
                })
            })
            .collect()
    });

    let outcomes = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    for o in &outcomes {
        if let Some(e) = &o.error {
            writeln!(err, "warning: sample {}: {e}", o.id)?;
        }
    }
    Ok(outcomes)
}

fn with_output(config: &RunConfig, out: &mut dyn Write, body: &str) -> Result<(), CliError> {
    match &config.output_path {
        Some(path) => write_file(path, body)?,
        None => out.write_all(body.as_bytes())?,
    }
    Ok(())
}

fn write_file(path: &Path, body: &str) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(body.as_bytes())?;
    w.flush()
}

pub fn run_generate(
    config: &RunConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let samples = load_strict(config)?;
    let parsed = parse_all(&samples)?;
    let outcomes = process(config, &samples, &parsed, err)?;
    let mut body = String::new();
    for o in &outcomes {
        let record = AnswerRecord::from(o);
        body.push_str(&serde_json::to_string(&record).expect("record serializes"));
        body.push('\n');
    }
    with_output(config, out, &body)
}

pub fn run_evaluate(
    config: &RunConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let samples = load_strict(config)?;
    let parsed = parse_all(&samples)?;
    let outcomes = process(config, &samples, &parsed, err)?;

    let mut per_sample = Vec::with_capacity(samples.len());
    for (s, o) in samples.iter().zip(&outcomes) {
        // a sample the rules could not answer scores zero
        let scores = match &o.answer {
            Some(answer) => score_sample(answer, &s.targets).unwrap_or_else(|e| {
                let _ = writeln!(err, "warning: sample {}: {e}", s.id);
                EvalScores::uniform(0.0)
            }),
            None => EvalScores::uniform(0.0),
        };
        per_sample.push(SampleScore {
            id: s.id.clone(),
            answer: o.answer.clone(),
            rule_case: o.generated.as_ref().map(|g| g.rule_case),
            scores,
        });
    }
    let all: Vec<EvalScores> = per_sample.iter().map(|p| p.scores).collect();
    let aggregate = aggregate(&all).map_err(|_| CliError::NoSamples)?;

    let items: Vec<(&Sample, &ParsedQuestion)> = samples.iter().zip(&parsed).collect();
    let (timing, _) = time_pipeline(&items, |(s, pq)| generate_one(config, s, pq).is_ok())
        .map_err(|_| CliError::NoSamples)?;

    let report = EvaluationReport {
        model: config.model_label(),
        rule: config.rule,
        corrector: config.corrector,
        sample_count: samples.len(),
        failures: outcomes.iter().filter(|o| o.answer.is_none()).count(),
        aggregate,
        per_sample,
        timing: TimingSection {
            scope: TIMING_SCOPE.to_owned(),
            sample_count: timing.sample_count,
            total_seconds: timing.total_seconds,
            avg_seconds: timing.avg_seconds,
        },
    };
    let body = match config.report_format {
        ReportFormat::Text => report.to_table(),
        ReportFormat::Json => report.to_json(),
    };
    with_output(config, out, &body)
}

pub fn run_diagnose(
    config: &RunConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let samples = load_strict(config)?;
    let parsed = parse_all(&samples)?;
    let outcomes = process(config, &samples, &parsed, err)?;
    let (before, after): (Vec<&str>, Vec<&str>) = outcomes
        .iter()
        .filter_map(|o| Some((o.generated.as_ref()?.text.as_str(), o.answer.as_deref()?)))
        .unzip();
    let counts = audit_corpus(&before, &after).expect("pairs have equal length");
    let report = DiagnosisReport {
        model: config.model_label(),
        sample_count: before.len(),
        changed: outcomes.iter().filter(|o| o.changed_by_gec).count(),
        counts,
    };
    let body = match config.report_format {
        ReportFormat::Text => report.to_table(),
        ReportFormat::Json => report.to_json(),
    };
    with_output(config, out, &body)
}

pub fn run_stats(
    config: &RunConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let loaded = match load_jsonl(&config.corpus_path, LoadMode::Lenient) {
        Ok(l) => l,
        Err(CorpusError::Io(e)) => return Err(CliError::Corpus(CorpusError::Io(e))),
        Err(e) => unreachable!("lenient loading only fails on I/O: {e}"),
    };
    for w in &loaded.warnings {
        writeln!(err, "warning: line {}: {}", w.line, w.message)?;
    }
    let report = StatsReport {
        stats: stats(&loaded.samples),
        warnings: loaded.warnings.len(),
    };
    let body = match config.report_format {
        ReportFormat::Text => report.to_table(),
        ReportFormat::Json => report.to_json(),
    };
    with_output(config, out, &body)
}
