//! Token-level edit scripts between rule output and corrected output, the
//! four-way grammar error taxonomy built on them, and generation timing.

use std::collections::HashSet;
use std::ops::{Add, AddAssign};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::split_tokens;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagnosticsError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("length mismatch: {rule} rule outputs vs {corrected} corrected outputs")]
    LengthMismatch { rule: usize, corrected: usize },
}

/// One edit. Positions index the `before` sequence; an insert's position is
/// the slot it goes in front of. A move's `to` is its index in `after`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EditOp {
    Insert {
        token: String,
        at: usize,
    },
    Delete {
        token: String,
        at: usize,
    },
    Substitute {
        from: String,
        to: String,
        at: usize,
    },
    Move {
        token: String,
        from: usize,
        to: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorCategoryCounts {
    pub extra: usize,
    pub incorrect: usize,
    pub misplaced: usize,
    pub missing: usize,
}

impl ErrorCategoryCounts {
    pub fn total(&self) -> usize {
        self.extra + self.incorrect + self.misplaced + self.missing
    }
}

impl Add for ErrorCategoryCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        ErrorCategoryCounts {
            extra: self.extra + rhs.extra,
            incorrect: self.incorrect + rhs.incorrect,
            misplaced: self.misplaced + rhs.misplaced,
            missing: self.missing + rhs.missing,
        }
    }
}

impl AddAssign for ErrorCategoryCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for ErrorCategoryCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub sample_count: usize,
    pub total_seconds: f64,
    pub avg_seconds: f64,
}

fn same(a: &str, b: &str) -> bool {
    a == b || a.to_lowercase() == b.to_lowercase()
}

enum Step {
    Equal,
    Delete(usize),
    Insert(usize, usize),
}

fn lcs_steps<S: AsRef<str>>(before: &[S], after: &[S]) -> Vec<Step> {
    let (n, m) = (before.len(), after.len());
    // suffix table so the walk runs front to back
    let mut table = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            table[i][j] = if same(before[i].as_ref(), after[j].as_ref()) {
                table[i + 1][j + 1] + 1
            } else {
                table[i + 1][j].max(table[i][j + 1])
            };
        }
    }

    let mut steps = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        if i < n && j < m && same(before[i].as_ref(), after[j].as_ref()) {
            steps.push(Step::Equal);
            i += 1;
            j += 1;
        } else if i < n && (j == m || table[i + 1][j] >= table[i][j + 1]) {
            steps.push(Step::Delete(i));
            i += 1;
        } else {
            steps.push(Step::Insert(i, j));
            j += 1;
        }
    }
    steps
}

/// Edit script from an LCS alignment (case-insensitive). A deleted token
/// reinserted elsewhere becomes a move; within one changed run, deletes and
/// inserts are paired into substitutions.
pub fn token_diff<S: AsRef<str>>(before: &[S], after: &[S]) -> Vec<EditOp> {
    let steps = lcs_steps(before, after);

    let deletes: Vec<usize> = steps
        .iter()
        .filter_map(|s| match s {
            Step::Delete(i) => Some(*i),
            _ => None,
        })
        .collect();
    let inserts: Vec<(usize, usize)> = steps
        .iter()
        .filter_map(|s| match s {
            Step::Insert(i, j) => Some((*i, *j)),
            _ => None,
        })
        .collect();

    // moves: same text deleted in one place and inserted in another
    let mut moved_from = HashSet::new();
    let mut moved_to = HashSet::new();
    let mut moves = Vec::new();
    for &d in &deletes {
        if let Some(&(_, j)) = inserts
            .iter()
            .find(|(_, j)| !moved_to.contains(j) && same(before[d].as_ref(), after[*j].as_ref()))
        {
            moved_from.insert(d);
            moved_to.insert(j);
            moves.push(EditOp::Move {
                token: before[d].as_ref().to_owned(),
                from: d,
                to: j,
            });
        }
    }

    let mut ops = Vec::new();
    let mut run_deletes: Vec<usize> = Vec::new();
    let mut run_inserts: Vec<(usize, usize)> = Vec::new();
    let flush = |dels: &mut Vec<usize>, ins: &mut Vec<(usize, usize)>, ops: &mut Vec<EditOp>| {
        let paired = dels.len().min(ins.len());
        for (&d, &(_, j)) in dels.iter().zip(ins.iter()) {
            ops.push(EditOp::Substitute {
                from: before[d].as_ref().to_owned(),
                to: after[j].as_ref().to_owned(),
                at: d,
            });
        }
        for &d in &dels[paired..] {
            ops.push(EditOp::Delete {
                token: before[d].as_ref().to_owned(),
                at: d,
            });
        }
        for &(i, j) in &ins[paired..] {
            ops.push(EditOp::Insert {
                token: after[j].as_ref().to_owned(),
                at: i,
            });
        }
        dels.clear();
        ins.clear();
    };

    for step in &steps {
        match *step {
            Step::Equal => flush(&mut run_deletes, &mut run_inserts, &mut ops),
            Step::Delete(i) if !moved_from.contains(&i) => run_deletes.push(i),
            Step::Insert(i, j) if !moved_to.contains(&j) => run_inserts.push((i, j)),
            _ => {}
        }
    }
    flush(&mut run_deletes, &mut run_inserts, &mut ops);
    ops.extend(moves);
    ops
}

/// Rebuild `after` from `before` and an edit script produced by
/// [`token_diff`]. Tokens left untouched keep their `before` spelling.
pub fn apply_edits<S: AsRef<str>>(before: &[S], edits: &[EditOp]) -> Vec<String> {
    let mut removed = HashSet::new();
    let mut replaced = std::collections::HashMap::new();
    let mut inserted: std::collections::BTreeMap<usize, Vec<&str>> = Default::default();
    let mut moves: Vec<(usize, &str)> = Vec::new();

    for op in edits {
        match op {
            EditOp::Insert { token, at } => inserted.entry(*at).or_default().push(token),
            EditOp::Delete { at, .. } => {
                removed.insert(*at);
            }
            EditOp::Substitute { to, at, .. } => {
                replaced.insert(*at, to.as_str());
            }
            EditOp::Move { token, from, to } => {
                removed.insert(*from);
                moves.push((*to, token));
            }
        }
    }

    let mut out = Vec::with_capacity(before.len());
    for i in 0..=before.len() {
        if let Some(tokens) = inserted.get(&i) {
            out.extend(tokens.iter().map(|t| t.to_string()));
        }
        if i == before.len() || removed.contains(&i) {
            continue;
        }
        match replaced.get(&i) {
            Some(to) => out.push(to.to_string()),
            None => out.push(before[i].as_ref().to_owned()),
        }
    }

    moves.sort_by_key(|(to, _)| *to);
    for (to, token) in moves {
        out.insert(to.min(out.len()), token.to_owned());
    }
    out
}

pub fn categorize(edits: &[EditOp]) -> ErrorCategoryCounts {
    let mut counts = ErrorCategoryCounts::default();
    for op in edits {
        match op {
            EditOp::Delete { .. } => counts.extra += 1,
            EditOp::Insert { .. } => counts.missing += 1,
            EditOp::Substitute { .. } => counts.incorrect += 1,
            EditOp::Move { .. } => counts.misplaced += 1,
        }
    }
    counts
}

/// Category counts summed over (rule output, corrected output) pairs.
pub fn audit_corpus<S: AsRef<str>>(
    rule_outputs: &[S],
    corrected_outputs: &[S],
) -> Result<ErrorCategoryCounts, DiagnosticsError> {
    if rule_outputs.len() != corrected_outputs.len() {
        return Err(DiagnosticsError::LengthMismatch {
            rule: rule_outputs.len(),
            corrected: corrected_outputs.len(),
        });
    }
    Ok(rule_outputs
        .iter()
        .zip(corrected_outputs)
        .map(|(before, after)| {
            let before = split_tokens(before.as_ref());
            let after = split_tokens(after.as_ref());
            categorize(&token_diff(&before, &after))
        })
        .sum())
}

/// Run `generate` once per item, single-threaded, timing only the call.
pub fn time_pipeline<T, R>(
    items: &[T],
    mut generate: impl FnMut(&T) -> R,
) -> Result<(TimingReport, Vec<R>), DiagnosticsError> {
    if items.is_empty() {
        return Err(DiagnosticsError::EmptyCorpus);
    }
    let mut total = 0.0;
    let mut outputs = Vec::with_capacity(items.len());
    for item in items {
        let start = Instant::now();
        let out = generate(item);
        total += start.elapsed().as_secs_f64();
        outputs.push(out);
    }
    let report = TimingReport {
        sample_count: items.len(),
        total_seconds: total,
        avg_seconds: total / items.len() as f64,
    };
    Ok((report, outputs))
}
