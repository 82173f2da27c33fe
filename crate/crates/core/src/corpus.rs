//! JSONL datasets of questions, answers, reference targets and precomputed
//! parses.
//!
//! One object per line:
//!
//! ```text
//! {"id": "...", "question": "...", "factoid": "...", "targets": ["..."],
//!  "qtype": "factoid" | "existential", "constituency": "(ROOT ...)",
//!  "dependency": "1\tWhat\t...", "source": "squad"}
//! ```
//!
//! `source` is optional. Unknown fields are kept and written back unchanged.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parsetree::{align, parse_conllu, parse_ptb_bracketed, ParseTreeError, ParsedQuestion};
use crate::rules::{Polarity, QuestionType};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: malformed JSON: {message}")]
    MalformedJson { line: usize, message: String },
    #[error("line {line}: {}", violations.join("; "))]
    Schema {
        line: usize,
        violations: Vec<String>,
    },
    #[error("line {line}: duplicate id '{id}'")]
    DuplicateId { line: usize, id: String },
}

impl CorpusError {
    pub fn line(&self) -> Option<usize> {
        match self {
            CorpusError::Io(_) => None,
            CorpusError::MalformedJson { line, .. }
            | CorpusError::Schema { line, .. }
            | CorpusError::DuplicateId { line, .. } => Some(*line),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub question: String,
    pub factoid: String,
    pub targets: Vec<String>,
    pub qtype: QuestionType,
    pub constituency: String,
    pub dependency: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl Sample {
    /// Build the aligned parse from the embedded constituency and dependency
    /// strings. The raw question string is kept as-is; the dependency tokens
    /// are authoritative.
    pub fn parse_question(&self) -> Result<ParsedQuestion, ParseTreeError> {
        let tree = parse_ptb_bracketed(&self.constituency)?;
        let tokens = parse_conllu(&self.dependency)?;
        Ok(align(tree, tokens)?.with_raw(self.question.clone()))
    }
}

/// Every rule a sample violates; empty when the sample is well formed.
pub fn validate(sample: &Sample) -> Vec<String> {
    let mut report = Vec::new();
    if sample.id.trim().is_empty() {
        report.push("id empty".to_owned());
    }
    if sample.question.trim().is_empty() {
        report.push("question empty".to_owned());
    }
    if sample.factoid.trim().is_empty() {
        report.push("factoid empty".to_owned());
    }
    if sample.targets.is_empty() {
        report.push("targets empty".to_owned());
    }
    for (i, t) in sample.targets.iter().enumerate() {
        if t.trim().is_empty() {
            report.push(format!("target {i} empty"));
        }
    }
    if sample.qtype == QuestionType::Existential && sample.factoid.parse::<Polarity>().is_err() {
        report.push(format!(
            "existential factoid must be yes or no, got '{}'",
            sample.factoid
        ));
    }

    let tree = parse_ptb_bracketed(&sample.constituency);
    let tokens = parse_conllu(&sample.dependency);
    if let Err(e) = &tree {
        report.push(format!("invalid constituency parse: {e}"));
    }
    if let Err(e) = &tokens {
        report.push(format!("invalid dependency parse: {e}"));
    }
    if let (Ok(tree), Ok(tokens)) = (tree, tokens) {
        if let Err(e) = align(tree, tokens) {
            report.push(format!("parse alignment failure: {e}"));
        }
    }
    report
}

/// Corpus-level checks: `(index, message)` for each sample whose id was
/// already used by an earlier one.
pub fn validate_corpus(samples: &[Sample]) -> Vec<(usize, String)> {
    let mut seen = HashSet::new();
    samples
        .iter()
        .enumerate()
        .filter(|(_, s)| !seen.insert(s.id.as_str()))
        .map(|(i, s)| (i, format!("duplicate id '{}'", s.id)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    /// Abort on the first bad line.
    #[default]
    Strict,
    /// Skip bad lines and record a warning for each.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub samples: Vec<Sample>,
    pub warnings: Vec<LoadWarning>,
}

fn parse_line(line_no: usize, line: &str, seen: &HashSet<String>) -> Result<Sample, CorpusError> {
    let sample: Sample = serde_json::from_str(line).map_err(|e| {
        if e.is_data() {
            CorpusError::Schema {
                line: line_no,
                violations: vec![e.to_string()],
            }
        } else {
            CorpusError::MalformedJson {
                line: line_no,
                message: e.to_string(),
            }
        }
    })?;
    let violations = validate(&sample);
    if !violations.is_empty() {
        return Err(CorpusError::Schema {
            line: line_no,
            violations,
        });
    }
    if seen.contains(&sample.id) {
        return Err(CorpusError::DuplicateId {
            line: line_no,
            id: sample.id,
        });
    }
    Ok(sample)
}

/// Parse JSONL text. Line numbers are 1-based; blank lines are ignored.
pub fn parse_jsonl(text: &str, mode: LoadMode) -> Result<LoadedCorpus, CorpusError> {
    let mut corpus = LoadedCorpus::default();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(i + 1, line, &seen) {
            Ok(sample) => {
                seen.insert(sample.id.clone());
                corpus.samples.push(sample);
            }
            Err(e) if mode == LoadMode::Lenient => corpus.warnings.push(LoadWarning {
                line: i + 1,
                message: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(corpus)
}

pub fn load_jsonl(path: impl AsRef<Path>, mode: LoadMode) -> Result<LoadedCorpus, CorpusError> {
    parse_jsonl(&fs::read_to_string(path)?, mode)
}

pub fn to_jsonl(samples: &[Sample]) -> String {
    let mut out = String::new();
    for s in samples {
        // Sample holds only strings, lists and JSON values, so this cannot fail.
        out.push_str(&serde_json::to_string(s).expect("sample serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl(path: impl AsRef<Path>, samples: &[Sample]) -> io::Result<()> {
    fs::write(path, to_jsonl(samples))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: usize,
    pub by_qtype: BTreeMap<QuestionType, usize>,
    /// Samples without a `source` tag are not counted here.
    pub by_source: BTreeMap<String, usize>,
}

pub fn stats(samples: &[Sample]) -> CorpusStats {
    let mut st = CorpusStats {
        total: samples.len(),
        by_qtype: [(QuestionType::Factoid, 0), (QuestionType::Existential, 0)].into(),
        by_source: BTreeMap::new(),
    };
    for s in samples {
        *st.by_qtype.entry(s.qtype).or_default() += 1;
        if let Some(src) = &s.source {
            *st.by_source.entry(src.clone()).or_default() += 1;
        }
    }
    st
}
