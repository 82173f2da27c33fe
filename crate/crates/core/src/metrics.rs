//! Sentence-level BLEU (multi-reference) and ROUGE-1/2/L.
//!
//! Scores are reported on a 0-100 scale. BLEU uses clipped n-gram
//! precisions for n = 1..4, uniform weights and the closest-reference
//! brevity penalty; without smoothing any zero precision gives 0.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("empty input")]
    EmptyInput,
    #[error("empty corpus")]
    EmptyCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalScores {
    pub bleu: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
}

impl EvalScores {
    pub fn uniform(value: f64) -> Self {
        EvalScores {
            bleu: value,
            rouge1: value,
            rouge2: value,
            rouge_l: value,
        }
    }

    pub fn values(&self) -> [f64; 4] {
        [self.bleu, self.rouge1, self.rouge2, self.rouge_l]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PrecisionRecall {
    fn new(matched: usize, candidate_total: usize, reference_total: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(matched, candidate_total);
        let recall = ratio(matched, reference_total);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        PrecisionRecall {
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Smoothing {
    #[default]
    None,
    /// Replace a zero matched count by epsilon.
    Epsilon(f64),
}

/// Multiset of n-grams of one order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramProfile<'a> {
    pub n: usize,
    pub counts: HashMap<&'a [String], usize>,
}

impl<'a> NGramProfile<'a> {
    pub fn new(tokens: &'a [String], n: usize) -> Self {
        let mut counts = HashMap::new();
        if n > 0 && tokens.len() >= n {
            for gram in tokens.windows(n) {
                *counts.entry(gram).or_insert(0) += 1;
            }
        }
        NGramProfile { n, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Matches clipped by the counts in `other`.
    pub fn clipped_overlap(&self, other: &NGramProfile) -> usize {
        self.counts
            .iter()
            .map(|(gram, &c)| c.min(other.counts.get(gram).copied().unwrap_or(0)))
            .sum()
    }
}

/// Tokens for diffing: whitespace split with every punctuation character
/// as its own token. Case is preserved.
pub fn split_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut current = String::new();
        for c in chunk.chars() {
            if c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace()) {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
                out.push(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            out.push(current);
        }
    }
    out
}

/// Lowercased [`split_tokens`].
pub fn metric_tokenize(text: &str) -> Vec<String> {
    split_tokens(&text.to_lowercase())
}

pub fn sentence_bleu(candidate: &[String], references: &[Vec<String>]) -> Result<f64, MetricError> {
    sentence_bleu_with(candidate, references, Smoothing::None)
}

pub fn sentence_bleu_with(
    candidate: &[String],
    references: &[Vec<String>],
    smoothing: Smoothing,
) -> Result<f64, MetricError> {
    if candidate.is_empty() || references.is_empty() || references.iter().all(Vec::is_empty) {
        return Err(MetricError::EmptyInput);
    }

    let mut log_sum = 0.0;
    for n in 1..=4 {
        let cand = NGramProfile::new(candidate, n);
        let total = cand.total();
        let mut max_ref: HashMap<&[String], usize> = HashMap::new();
        for reference in references {
            for (gram, c) in NGramProfile::new(reference, n).counts {
                let e = max_ref.entry(gram).or_insert(0);
                *e = (*e).max(c);
            }
        }
        let matched: usize = cand
            .counts
            .iter()
            .map(|(gram, &c)| c.min(max_ref.get(gram).copied().unwrap_or(0)))
            .sum();

        let precision = match (matched, smoothing) {
            (0, Smoothing::Epsilon(eps)) if total > 0 => eps / total as f64,
            (0, _) => return Ok(0.0),
            (m, _) => m as f64 / total as f64,
        };
        log_sum += precision.ln() / 4.0;
    }

    let c = candidate.len();
    let r = references
        .iter()
        .map(Vec::len)
        .min_by_key(|&len| (len.abs_diff(c), len))
        .unwrap();
    let bp = if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    Ok((100.0 * bp * log_sum.exp()).clamp(0.0, 100.0))
}

pub fn rouge_n(
    candidate: &[String],
    reference: &[String],
    n: usize,
) -> Result<PrecisionRecall, MetricError> {
    let cand = NGramProfile::new(candidate, n);
    let reference = NGramProfile::new(reference, n);
    let (ct, rt) = (cand.total(), reference.total());
    if ct == 0 && rt == 0 {
        return Err(MetricError::EmptyInput);
    }
    Ok(PrecisionRecall::new(
        cand.clipped_overlap(&reference),
        ct,
        rt,
    ))
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

pub fn rouge_l(candidate: &[String], reference: &[String]) -> Result<PrecisionRecall, MetricError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    Ok(PrecisionRecall::new(
        lcs_len(candidate, reference),
        candidate.len(),
        reference.len(),
    ))
}

/// Score one candidate against several references: BLEU natively
/// multi-reference, each ROUGE variant as the best F1 over references.
pub fn score_sample<S: AsRef<str>>(
    candidate: &str,
    references: &[S],
) -> Result<EvalScores, MetricError> {
    score_sample_with(candidate, references, Smoothing::None)
}

pub fn score_sample_with<S: AsRef<str>>(
    candidate: &str,
    references: &[S],
    smoothing: Smoothing,
) -> Result<EvalScores, MetricError> {
    let cand = metric_tokenize(candidate);
    let refs: Vec<Vec<String>> = references
        .iter()
        .map(|r| metric_tokenize(r.as_ref()))
        .collect();
    if cand.is_empty() || refs.is_empty() || refs.iter().any(Vec::is_empty) {
        return Err(MetricError::EmptyInput);
    }

    let best = |f: &dyn Fn(&[String]) -> Result<PrecisionRecall, MetricError>| -> Result<f64, MetricError> {
        let mut best: f64 = 0.0;
        for r in &refs {
            match f(r) {
                Ok(pr) => best = best.max(pr.f1),
                // no bigrams on either side
                Err(MetricError::EmptyInput) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(100.0 * best)
    };

    Ok(EvalScores {
        bleu: sentence_bleu_with(&cand, &refs, smoothing)?,
        rouge1: best(&|r| rouge_n(&cand, r, 1))?,
        rouge2: best(&|r| rouge_n(&cand, r, 2))?,
        rouge_l: best(&|r| rouge_l(&cand, r))?,
    })
}

/// Field-wise arithmetic mean.
pub fn aggregate(per_sample: &[EvalScores]) -> Result<EvalScores, MetricError> {
    if per_sample.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let n = per_sample.len() as f64;
    let mean = |f: fn(&EvalScores) -> f64| per_sample.iter().map(f).sum::<f64>() / n;
    Ok(EvalScores {
        bleu: mean(|s| s.bleu),
        rouge1: mean(|s| s.rouge1),
        rouge2: mean(|s| s.rouge2),
        rouge_l: mean(|s| s.rouge_l),
    })
}
