//! Report records and their text / JSON renderings.

use std::fmt::Write as _;

use ansgen::corpus::CorpusStats;
use ansgen::diagnostics::ErrorCategoryCounts;
use ansgen::metrics::EvalScores;
use ansgen::rules::RuleCase;
use serde::{Deserialize, Serialize};

use crate::{CorrectorKind, Outcome, Rule};

pub const TIMING_SCOPE: &str =
    "rule generation only (analysis + rules, parses precomputed, single thread)";
const BLEU_NOTE: &str = "BLEU is the mean of sentence-level scores";

/// One line of `generate` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub id: String,
    pub answer: Option<String>,
    pub rule_case: Option<RuleCase>,
    pub changed_by_gec: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl From<&Outcome> for AnswerRecord {
    fn from(o: &Outcome) -> Self {
        AnswerRecord {
            id: o.id.clone(),
            answer: o.answer.clone(),
            rule_case: o.generated.as_ref().map(|g| g.rule_case),
            changed_by_gec: o.changed_by_gec,
            error: o.error.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub id: String,
    pub answer: Option<String>,
    pub rule_case: Option<RuleCase>,
    pub scores: EvalScores,
}

/// Everything that depends on the clock lives here, so two runs differ only
/// in this section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSection {
    pub scope: String,
    pub sample_count: usize,
    pub total_seconds: f64,
    pub avg_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model: String,
    pub rule: Rule,
    pub corrector: CorrectorKind,
    pub sample_count: usize,
    /// Samples the rules could not answer; they score zero.
    pub failures: usize,
    pub aggregate: EvalScores,
    pub per_sample: Vec<SampleScore>,
    pub timing: TimingSection,
}

impl EvaluationReport {
    pub fn to_table(&self) -> String {
        let a = &self.aggregate;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<14} {:>6} {:>8} {:>8} {:>8} {:>12}",
            "Model", "BLEU", "ROUGE-1", "ROUGE-2", "ROUGE-L", "Avg-time"
        );
        let _ = writeln!(
            s,
            "{:<14} {:>6.1} {:>8.1} {:>8.1} {:>8.1} {:>11.6}s",
            self.model, a.bleu, a.rouge1, a.rouge2, a.rouge_l, self.timing.avg_seconds
        );
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "samples: {} (unanswered: {})",
            self.sample_count, self.failures
        );
        let _ = writeln!(s, "timing: {}", self.timing.scope);
        let _ = writeln!(s, "note: {BLEU_NOTE}");
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub model: String,
    pub sample_count: usize,
    pub changed: usize,
    pub counts: ErrorCategoryCounts,
}

impl DiagnosisReport {
    pub fn to_table(&self) -> String {
        let c = &self.counts;
        let mut s = String::new();
        let _ = writeln!(s, "{:<18} {:>7}", "Type of error", "Count");
        for (label, n) in [
            ("Extra words", c.extra),
            ("Incorrect words", c.incorrect),
            ("Misplaced words", c.misplaced),
            ("Missing words", c.missing),
        ] {
            let _ = writeln!(s, "{label:<18} {n:>7}");
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "samples: {} (changed by correction: {})",
            self.sample_count, self.changed
        );
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    #[serde(flatten)]
    pub stats: CorpusStats,
    pub warnings: usize,
}

impl StatsReport {
    pub fn to_table(&self) -> String {
        let st = &self.stats;
        let mut s = String::new();
        let _ = writeln!(s, "total: {}", st.total);
        for (qtype, n) in &st.by_qtype {
            let _ = writeln!(s, "qtype {qtype}: {n}");
        }
        for (source, n) in &st.by_source {
            let _ = writeln!(s, "source {source}: {n}");
        }
        let _ = writeln!(s, "warnings: {}", self.warnings);
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
