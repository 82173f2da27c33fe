//! Answer construction rules.
//!
//! * `generate_v1` substitutes the factoid for the WH word.
//! * `generate_v2` reorders around the auxiliary and the main verb.
//! * `generate_existential` turns AUX-NP-VP yes/no questions into
//!   `Yes,|No, NP AUX [not] VP`.
//!
//! All generators emit space-joined tokens terminated by a standalone `.`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{is_auxiliary_like, QuestionAnalysis};
use crate::parsetree::ParsedQuestion;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("answer is empty")]
    EmptyAnswer,
    #[error("existential answer must be yes or no, got '{0}'")]
    InvalidPolarity(String),
    #[error("rule expects a {expected} question")]
    WrongQuestionType { expected: QuestionType },
    #[error("question has no WH word")]
    MissingWhWord,
    #[error("question has neither an auxiliary nor a WH word")]
    Unanalyzable,
    #[error("no NP/VP structure found")]
    StructureNotFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionType {
    Factoid,
    Existential,
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuestionType::Factoid => "factoid",
            QuestionType::Existential => "existential",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Yes,
    No,
}

impl FromStr for Polarity {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "yes" => Ok(Polarity::Yes),
            "no" => Ok(Polarity::No),
            _ => Err(RuleError::InvalidPolarity(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleCase {
    V1Substitution,
    V2Consecutive,
    V2Split,
    V2NoMainVerb,
    ExDirect,
    ExIndirect,
    Fallback,
}

impl RuleCase {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleCase::V1Substitution => "V1_SUBSTITUTION",
            RuleCase::V2Consecutive => "V2_CONSECUTIVE",
            RuleCase::V2Split => "V2_SPLIT",
            RuleCase::V2NoMainVerb => "V2_NO_MAIN_VERB",
            RuleCase::ExDirect => "EX_DIRECT",
            RuleCase::ExIndirect => "EX_INDIRECT",
            RuleCase::Fallback => "FALLBACK",
        }
    }
}

impl fmt::Display for RuleCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which generator to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleChoice {
    V1,
    V2,
    Existential,
    /// V2 for factoid questions, existential for yes/no questions.
    Auto,
}

/// Where a piece of the answer came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepSource {
    /// Question tokens, copied (possibly with pronoun perspective swapped).
    Question(Range<usize>),
    /// The auxiliary, lowercased.
    Auxiliary(usize),
    Factoid,
    Polarity,
    Negation,
    DoSupport,
    Terminator,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub source: StepSource,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedAnswer {
    pub text: String,
    pub rule_case: RuleCase,
    pub trace: Vec<TraceStep>,
    /// Set when a generator fell back to another rule.
    pub note: Option<String>,
}

impl GeneratedAnswer {
    pub fn tokens(&self) -> Vec<&str> {
        self.text.split(' ').collect()
    }

    /// The answer rebuilt from its derivation trace.
    pub fn trace_text(&self) -> String {
        self.trace
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub question: &'a ParsedQuestion,
    pub analysis: &'a QuestionAnalysis,
    /// Factoid answer, or `yes`/`no` for existential questions.
    pub answer: &'a str,
    pub qtype: QuestionType,
    /// Swap first/second person pronouns in existential answers.
    pub pronoun_swap: bool,
}

impl<'a> GenerationRequest<'a> {
    pub fn new(
        question: &'a ParsedQuestion,
        analysis: &'a QuestionAnalysis,
        answer: &'a str,
        qtype: QuestionType,
    ) -> Result<Self, RuleError> {
        if answer.trim().is_empty() {
            return Err(RuleError::EmptyAnswer);
        }
        if qtype == QuestionType::Existential {
            answer.parse::<Polarity>()?;
        }
        Ok(GenerationRequest {
            question,
            analysis,
            answer,
            qtype,
            pronoun_swap: true,
        })
    }

    pub fn pronoun_swap(mut self, on: bool) -> Self {
        self.pronoun_swap = on;
        self
    }

    fn answer_tokens(&self) -> Vec<String> {
        self.answer.split_whitespace().map(str::to_owned).collect()
    }

    fn require(&self, expected: QuestionType) -> Result<(), RuleError> {
        if self.qtype != expected {
            return Err(RuleError::WrongQuestionType { expected });
        }
        Ok(())
    }
}

/// Drop a trailing `?` token, append `.`, join with single spaces.
pub fn finalize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    if out.last() == Some(&"?") {
        out.pop();
    }
    out.push(".");
    out.join(" ")
}

const PRONOUN_SWAPS: [(&str, &str); 6] = [
    ("my", "your"),
    ("your", "my"),
    ("i", "you"),
    ("me", "you"),
    ("mine", "yours"),
    ("our", "your"),
];

/// Speaker/listener perspective swap; keeps a leading capital except for "I".
pub fn swap_pronoun(word: &str) -> String {
    let lower = word.to_lowercase();
    let Some(&(_, to)) = PRONOUN_SWAPS.iter().find(|(from, _)| *from == lower) else {
        return word.to_owned();
    };
    let capitalized = word != "I" && word.chars().next().is_some_and(char::is_uppercase);
    if capitalized {
        let mut chars = to.chars();
        chars
            .next()
            .map(|c| c.to_uppercase().chain(chars).collect())
            .unwrap_or_default()
    } else {
        to.to_owned()
    }
}

/// Exclusive end of the question body (a final `?` is excluded).
fn body_end(pq: &ParsedQuestion) -> usize {
    match pq.tokens.last() {
        Some(t) if t.text == "?" => pq.len() - 1,
        _ => pq.len(),
    }
}

struct Builder<'a> {
    pq: &'a ParsedQuestion,
    steps: Vec<TraceStep>,
}

impl<'a> Builder<'a> {
    fn new(pq: &'a ParsedQuestion) -> Self {
        Builder {
            pq,
            steps: Vec::new(),
        }
    }

    fn push(&mut self, source: StepSource, tokens: Vec<String>) {
        if !tokens.is_empty() {
            self.steps.push(TraceStep { source, tokens });
        }
    }

    fn question(&mut self, range: Range<usize>, swap: bool) {
        let tokens = self.pq.tokens[range.clone()]
            .iter()
            .map(|t| {
                if swap {
                    swap_pronoun(&t.text)
                } else {
                    t.text.clone()
                }
            })
            .collect();
        self.push(StepSource::Question(range), tokens);
    }

    fn literal(&mut self, source: StepSource, word: &str) {
        self.push(source, vec![word.to_owned()]);
    }

    fn finish(mut self, rule_case: RuleCase, note: Option<String>) -> GeneratedAnswer {
        if let Some(last) = self.steps.last_mut() {
            if last.tokens.last().map(String::as_str) == Some("?") {
                last.tokens.pop();
                if last.tokens.is_empty() {
                    self.steps.pop();
                }
            }
        }
        let tokens: Vec<&str> = self
            .steps
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str))
            .collect();
        let text = finalize(&tokens);
        self.literal(StepSource::Terminator, ".");
        GeneratedAnswer {
            text,
            rule_case,
            trace: self.steps,
            note,
        }
    }
}

/// Replace the WH word with the factoid answer.
pub fn generate_v1(req: &GenerationRequest) -> Result<GeneratedAnswer, RuleError> {
    req.require(QuestionType::Factoid)?;
    Ok(substitute_wh(req)?.finish(RuleCase::V1Substitution, None))
}

fn substitute_wh<'a>(req: &GenerationRequest<'a>) -> Result<Builder<'a>, RuleError> {
    let wh = req.analysis.wh_index.ok_or(RuleError::MissingWhWord)?;
    let end = body_end(req.question).max(wh + 1);
    let mut b = Builder::new(req.question);
    b.question(0..wh, false);
    b.push(StepSource::Factoid, req.answer_tokens());
    b.question(wh + 1..end, false);
    Ok(b)
}

/// Case selection for the positional rule. Only sentence-initial WH words
/// take part in the reordering; everything else falls back to substitution.
pub fn classify_v2(analysis: &QuestionAnalysis) -> RuleCase {
    let (Some(aux), Some(0)) = (analysis.aux_index, analysis.wh_index) else {
        return RuleCase::Fallback;
    };
    if aux == 0 {
        return RuleCase::Fallback;
    }
    match analysis.main_verb_index {
        None => RuleCase::V2NoMainVerb,
        Some(m) if m == aux + 1 => RuleCase::V2Consecutive,
        Some(m) if m > aux + 1 => RuleCase::V2Split,
        // verb inside the WH phrase
        Some(_) => RuleCase::Fallback,
    }
}

/// Reorder around the auxiliary and main verb.
///
/// Tokens before the auxiliary form the WH phrase and are replaced by the
/// factoid answer.
pub fn generate_v2(req: &GenerationRequest) -> Result<GeneratedAnswer, RuleError> {
    req.require(QuestionType::Factoid)?;
    let a = req.analysis;
    let end = body_end(req.question);
    let case = classify_v2(a);
    let mut b = Builder::new(req.question);

    match case {
        RuleCase::V2Consecutive => {
            let aux = a.aux_index.unwrap();
            b.push(StepSource::Factoid, req.answer_tokens());
            b.question(aux..end, false);
        }
        RuleCase::V2Split => {
            let aux = a.aux_index.unwrap();
            let main = a.main_verb_index.unwrap();
            b.question(aux + 1..main, false);
            b.question(aux..aux + 1, false);
            b.question(main..end, false);
            b.push(StepSource::Factoid, req.answer_tokens());
        }
        RuleCase::V2NoMainVerb => {
            let aux = a.aux_index.unwrap();
            b.question(aux + 1..end, false);
            b.question(aux..aux + 1, false);
            b.push(StepSource::Factoid, req.answer_tokens());
        }
        _ => {
            let reason = match (a.aux_index, a.wh_index) {
                (None, _) => "no auxiliary verb; substituted the WH word",
                (_, None) => "no WH word",
                (_, Some(w)) if w != 0 => "WH word not sentence-initial; substituted in place",
                _ => "main verb precedes the auxiliary; substituted the WH word",
            };
            let b = substitute_wh(req).map_err(|_| RuleError::Unanalyzable)?;
            return Ok(b.finish(RuleCase::Fallback, Some(reason.to_owned())));
        }
    }
    Ok(b.finish(case, None))
}

/// `Yes,|No,` + NP + AUX + [`not`] + VP.
///
/// For embedded questions ("can you tell me if ...") the NP and VP come from
/// the embedded clause, and `does` is inserted when that clause has no
/// auxiliary of its own.
pub fn generate_existential(req: &GenerationRequest) -> Result<GeneratedAnswer, RuleError> {
    req.require(QuestionType::Existential)?;
    let polarity: Polarity = req.answer.parse()?;
    let a = req.analysis;
    let (Some(np), Some(vp)) = (a.np_span.clone(), a.vp_span.clone()) else {
        return Err(RuleError::StructureNotFound);
    };
    let pq = req.question;
    let swap = req.pronoun_swap;

    let mut b = Builder::new(pq);
    b.literal(
        StepSource::Polarity,
        match polarity {
            Polarity::Yes => "Yes,",
            Polarity::No => "No,",
        },
    );
    b.question(np.clone(), swap);

    let (case, tail) = if a.embedded_start.is_some() {
        let k = np.end;
        if k < vp.end && is_auxiliary_like(&pq.tokens[k]) {
            b.push(StepSource::Auxiliary(k), vec![pq.text(k).to_lowercase()]);
            (RuleCase::ExIndirect, k + 1..vp.end)
        } else {
            b.literal(StepSource::DoSupport, "does");
            (RuleCase::ExIndirect, vp)
        }
    } else {
        let aux = a.aux_index.ok_or(RuleError::StructureNotFound)?;
        b.push(
            StepSource::Auxiliary(aux),
            vec![pq.text(aux).to_lowercase()],
        );
        (RuleCase::ExDirect, vp)
    };
    if polarity == Polarity::No {
        b.literal(StepSource::Negation, "not");
    }
    b.question(tail, swap);
    Ok(b.finish(case, None))
}

pub fn generate(req: &GenerationRequest, rule: RuleChoice) -> Result<GeneratedAnswer, RuleError> {
    match rule {
        RuleChoice::V1 => generate_v1(req),
        RuleChoice::V2 => generate_v2(req),
        RuleChoice::Existential => generate_existential(req),
        RuleChoice::Auto => match req.qtype {
            QuestionType::Factoid => generate_v2(req),
            QuestionType::Existential => generate_existential(req),
        },
    }
}
