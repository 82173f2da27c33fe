//! Linguistic landmarks read off a parsed question: WH word, auxiliary,
//! main verb, NP/VP spans and the start of an embedded yes/no clause.

use std::ops::Range;

use crate::parsetree::{ParsedQuestion, Token};

const WH_TAGS: [&str; 4] = ["WP", "WRB", "WDT", "WP$"];

const AUX_FORMS: [&str; 22] = [
    "be", "am", "is", "are", "was", "were", "been", "being", "'s", "'re", "'m", "do", "does",
    "did", "doing", "done", "have", "has", "had", "having", "'ve", "'d",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuestionAnalysis {
    pub wh_index: Option<usize>,
    pub aux_index: Option<usize>,
    pub main_verb_index: Option<usize>,
    pub np_span: Option<Range<usize>>,
    pub vp_span: Option<Range<usize>>,
    /// First token after "if"/"whether".
    pub embedded_start: Option<usize>,
}

fn is_aux_relation(deprel: &str) -> bool {
    matches!(
        deprel.to_ascii_lowercase().as_str(),
        "aux" | "auxpass" | "aux:pass"
    )
}

fn is_be_do_have(token: &Token) -> bool {
    if let Some(lemma) = &token.lemma {
        if matches!(lemma.to_ascii_lowercase().as_str(), "be" | "do" | "have") {
            return true;
        }
    }
    let lower = token.text.to_lowercase();
    AUX_FORMS.contains(&lower.as_str())
}

/// True for tokens that behave as auxiliaries: aux relations, copulas and
/// modals.
pub(crate) fn is_auxiliary_like(token: &Token) -> bool {
    is_aux_relation(&token.deprel)
        || token.deprel.eq_ignore_ascii_case("cop")
        || token.pos_tag == "MD"
}

pub fn find_wh(pq: &ParsedQuestion) -> Option<usize> {
    pq.tokens
        .iter()
        .position(|t| WH_TAGS.contains(&t.pos_tag.as_str()))
}

/// First `aux`/`auxpass` dependent; failing that, the first modal or
/// be/do/have form attached as root or copula.
pub fn find_auxiliary(pq: &ParsedQuestion) -> Option<usize> {
    if let Some(i) = pq.tokens.iter().position(|t| is_aux_relation(&t.deprel)) {
        return Some(i);
    }
    pq.tokens.iter().position(|t| {
        (t.pos_tag == "MD" || is_be_do_have(t))
            && (t.is_root() || t.deprel.eq_ignore_ascii_case("cop"))
    })
}

/// The verbal root when it is not the auxiliary; otherwise the first
/// non-auxiliary `VB*` token after the auxiliary.
pub fn find_main_verb(pq: &ParsedQuestion, aux: Option<usize>) -> Option<usize> {
    let is_verb = |t: &Token| t.pos_tag.starts_with("VB");
    if let Some(root) = pq.tokens.iter().find(|t| t.is_root()) {
        if is_verb(root) && Some(root.index) != aux {
            return Some(root.index);
        }
    }
    let from = aux.map_or(0, |a| a + 1);
    pq.tokens
        .iter()
        .skip(from)
        .find(|t| is_verb(t) && Some(t.index) != aux && !is_auxiliary_like(t))
        .map(|t| t.index)
}

/// Lowest-covering constituent with `label` starting at or after `from`:
/// smallest start wins, ties go to the shorter span.
fn first_phrase(pq: &ParsedQuestion, label: &str, from: usize) -> Option<Range<usize>> {
    pq.root
        .phrases()
        .into_iter()
        .filter(|(l, span)| *l == label && span.start >= from)
        .map(|(_, span)| span)
        .min_by_key(|span| (span.start, span.len()))
}

/// First NP at or after `from`, then the first VP starting at or after the
/// end of that NP.
pub fn find_np_vp(
    pq: &ParsedQuestion,
    from: usize,
) -> (Option<Range<usize>>, Option<Range<usize>>) {
    let np = first_phrase(pq, "NP", from);
    let vp = np.as_ref().and_then(|np| first_phrase(pq, "VP", np.end));
    (np, vp)
}

pub fn find_embedded_clause(pq: &ParsedQuestion) -> Option<usize> {
    let marker = pq.tokens.iter().position(|t| {
        let lower = t.text.to_lowercase();
        lower == "if" || lower == "whether"
    })?;
    (marker + 1 < pq.len()).then_some(marker + 1)
}

pub fn analyze(pq: &ParsedQuestion) -> QuestionAnalysis {
    let wh_index = find_wh(pq);
    let aux_index = find_auxiliary(pq);
    let main_verb_index = find_main_verb(pq, aux_index);
    let embedded_start = find_embedded_clause(pq);
    let search_from = embedded_start.or(aux_index.map(|a| a + 1));
    let (np_span, vp_span) = match search_from {
        Some(from) => find_np_vp(pq, from),
        None => (None, None),
    };
    QuestionAnalysis {
        wh_index,
        aux_index,
        main_verb_index,
        np_span,
        vp_span,
        embedded_start,
    }
}
