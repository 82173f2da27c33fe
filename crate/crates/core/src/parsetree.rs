//! Constituency (Penn bracketed) and dependency (CoNLL-U) question parses,
//! and their alignment into a single [`ParsedQuestion`].

use std::fmt;
use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseTreeError {
    #[error("empty input")]
    EmptyInput,
    #[error("unbalanced brackets at offset {offset}")]
    UnbalancedBrackets { offset: usize },
    #[error("empty constituent at offset {offset}")]
    EmptyConstituent { offset: usize },
    #[error("leaf with no preterminal label at offset {offset}")]
    MissingPreterminal { offset: usize },
    #[error("unexpected trailing input at offset {offset}")]
    TrailingInput { offset: usize },
    #[error("line {line}: expected at least 8 columns, found {found}")]
    MissingColumns { line: usize, found: usize },
    #[error("line {line}: non-numeric ID '{value}'")]
    NonNumericId { line: usize, value: String },
    #[error("line {line}: non-numeric HEAD '{value}'")]
    NonNumericHead { line: usize, value: String },
    #[error("line {line}: duplicate ID {id}")]
    DuplicateId { line: usize, id: usize },
    #[error("line {line}: ID {id} out of sequence, expected {expected}")]
    IdOutOfSequence {
        line: usize,
        id: usize,
        expected: usize,
    },
    #[error("token {id}: head out of range ({head} > {len})")]
    HeadOutOfRange { id: usize, head: usize, len: usize },
    #[error("token {id}: token is its own head")]
    SelfHead { id: usize },
    #[error("no root")]
    NoRoot,
    #[error("multiple roots")]
    MultipleRoots,
    #[error("root token {id} has relation '{deprel}', expected 'root'")]
    RootRelation { id: usize, deprel: String },
    #[error("no tokens in block")]
    NoTokens,
    #[error("count mismatch: {leaves} leaves vs {tokens} tokens")]
    CountMismatch { leaves: usize, tokens: usize },
    #[error("text mismatch at {position}: leaf '{leaf}' vs token '{token}'")]
    TextMismatch {
        position: usize,
        leaf: String,
        token: String,
    },
    #[error("range {start}..{end} out of bounds for {len} tokens")]
    RangeOutOfBounds {
        start: usize,
        end: usize,
        len: usize,
    },
}

pub type Result<T> = std::result::Result<T, ParseTreeError>;

/// One token of a dependency-annotated question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// 0-based position.
    pub index: usize,
    pub text: String,
    pub lemma: Option<String>,
    pub upos: Option<String>,
    /// Penn Treebank tag, taken from the XPOS column.
    pub pos_tag: String,
    /// 0-based head index; `None` for the root.
    pub head: Option<usize>,
    pub deprel: String,
}

impl Token {
    pub fn new(index: usize, text: &str, pos_tag: &str, head: Option<usize>, deprel: &str) -> Self {
        Token {
            index,
            text: text.to_owned(),
            lemma: None,
            upos: None,
            pos_tag: pos_tag.to_owned(),
            head,
            deprel: deprel.to_owned(),
        }
    }

    pub fn with_lemma(mut self, lemma: &str) -> Self {
        self.lemma = Some(lemma.to_owned());
        self
    }

    pub fn is_root(&self) -> bool {
        self.head.is_none()
    }
}

/// A node of a constituency tree. Preterminals are leaves: they carry the
/// POS label, the surface word and the index of the aligned token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstituencyNode {
    Phrase {
        label: String,
        children: Vec<ConstituencyNode>,
    },
    Leaf {
        label: String,
        word: String,
        token: usize,
    },
}

impl ConstituencyNode {
    pub fn label(&self) -> &str {
        match self {
            ConstituencyNode::Phrase { label, .. } | ConstituencyNode::Leaf { label, .. } => label,
        }
    }

    pub fn children(&self) -> &[ConstituencyNode] {
        match self {
            ConstituencyNode::Phrase { children, .. } => children,
            ConstituencyNode::Leaf { .. } => &[],
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, ConstituencyNode::Leaf { .. })
    }

    /// Leaves in reading order.
    pub fn leaves(&self) -> Vec<&ConstituencyNode> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a ConstituencyNode>) {
        match self {
            ConstituencyNode::Leaf { .. } => out.push(self),
            ConstituencyNode::Phrase { children, .. } => {
                for child in children {
                    child.collect_leaves(out);
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            ConstituencyNode::Leaf { .. } => 1,
            ConstituencyNode::Phrase { children, .. } => {
                children.iter().map(Self::leaf_count).sum()
            }
        }
    }

    /// Token range covered by this node, or `None` for a phrase without leaves.
    pub fn span(&self) -> Option<Range<usize>> {
        match self {
            ConstituencyNode::Leaf { token, .. } => Some(*token..*token + 1),
            ConstituencyNode::Phrase { children, .. } => {
                let first = children.iter().find_map(Self::span)?;
                let last = children.iter().rev().find_map(Self::span)?;
                Some(first.start..last.end)
            }
        }
    }

    /// Every phrase node with its label and token span, in pre-order.
    pub fn phrases(&self) -> Vec<(&str, Range<usize>)> {
        let mut out = Vec::new();
        self.collect_phrases(&mut out);
        out
    }

    fn collect_phrases<'a>(&'a self, out: &mut Vec<(&'a str, Range<usize>)>) {
        if let ConstituencyNode::Phrase { label, children } = self {
            if let Some(span) = self.span() {
                out.push((label.as_str(), span));
            }
            for child in children {
                child.collect_phrases(out);
            }
        }
    }
}

impl fmt::Display for ConstituencyNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstituencyNode::Leaf { label, word, .. } => write!(f, "({} {})", label, word),
            ConstituencyNode::Phrase { label, children } => {
                write!(f, "({}", label)?;
                for child in children {
                    write!(f, " {}", child)?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Parse a Penn-bracketed tree such as
/// `(SBARQ (WHNP (WP What)) (SQ (VBZ is) ...))`.
///
/// An unlabeled outer wrapper `( (S ...) )` is accepted and dropped.
pub fn parse_ptb_bracketed(text: &str) -> Result<ConstituencyNode> {
    if text.trim().is_empty() {
        return Err(ParseTreeError::EmptyInput);
    }
    let mut parser = BracketParser {
        src: text,
        pos: 0,
        next_leaf: 0,
    };
    parser.skip_ws();
    match parser.peek() {
        Some('(') => {}
        Some(_) => return Err(ParseTreeError::MissingPreterminal { offset: parser.pos }),
        None => return Err(ParseTreeError::EmptyInput),
    }
    let node = parser.node()?;
    parser.skip_ws();
    if parser.pos < text.len() {
        let offset = parser.pos;
        return Err(if parser.peek() == Some(')') {
            ParseTreeError::UnbalancedBrackets { offset }
        } else {
            ParseTreeError::TrailingInput { offset }
        });
    }
    Ok(node)
}

struct BracketParser<'a> {
    src: &'a str,
    pos: usize,
    next_leaf: usize,
}

enum Item {
    Node(ConstituencyNode),
    Word(String, usize),
}

impl<'a> BracketParser<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn atom(&mut self) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || c == '(' || c == ')' {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    // Called with the cursor on '('.
    fn node(&mut self) -> Result<ConstituencyNode> {
        let open = self.pos;
        self.pos += 1;
        self.skip_ws();
        let label = match self.peek() {
            None => return Err(ParseTreeError::UnbalancedBrackets { offset: open }),
            Some(')') => return Err(ParseTreeError::EmptyConstituent { offset: open }),
            Some('(') => "",
            Some(_) => self.atom(),
        };

        let mut items = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None => return Err(ParseTreeError::UnbalancedBrackets { offset: open }),
                Some(')') => {
                    self.pos += 1;
                    break;
                }
                Some('(') => items.push(Item::Node(self.node()?)),
                Some(_) => {
                    let offset = self.pos;
                    let word = self.atom().to_owned();
                    items.push(Item::Word(word, offset));
                }
            }
        }

        match items.len() {
            0 => Err(ParseTreeError::EmptyConstituent { offset: open }),
            1 if matches!(items[0], Item::Word(..)) => {
                let Some(Item::Word(word, offset)) = items.pop() else {
                    unreachable!()
                };
                if label.is_empty() {
                    return Err(ParseTreeError::MissingPreterminal { offset });
                }
                let token = self.next_leaf;
                self.next_leaf += 1;
                Ok(ConstituencyNode::Leaf {
                    label: label.to_owned(),
                    word,
                    token,
                })
            }
            _ => {
                let mut children = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        Item::Node(n) => children.push(n),
                        Item::Word(_, offset) => {
                            return Err(ParseTreeError::MissingPreterminal { offset })
                        }
                    }
                }
                if label.is_empty() && children.len() == 1 {
                    return Ok(children.pop().unwrap());
                }
                Ok(ConstituencyNode::Phrase {
                    label: label.to_owned(),
                    children,
                })
            }
        }
    }
}

fn field(value: &str) -> Option<String> {
    if value == "_" {
        None
    } else {
        Some(value.to_owned())
    }
}

/// Read one CoNLL-U sentence block. Comment lines (`#`) and blank lines are
/// skipped; IDs must run 1..n.
pub fn parse_conllu(block: &str) -> Result<Vec<Token>> {
    let mut tokens: Vec<Token> = Vec::new();
    let mut raw_heads = Vec::new();

    for (lineno, line) in block.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 8 {
            return Err(ParseTreeError::MissingColumns {
                line: line_no,
                found: cols.len(),
            });
        }
        let id: usize = cols[0].parse().map_err(|_| ParseTreeError::NonNumericId {
            line: line_no,
            value: cols[0].to_owned(),
        })?;
        let expected = tokens.len() + 1;
        if id != expected {
            if id >= 1 && id < expected {
                return Err(ParseTreeError::DuplicateId { line: line_no, id });
            }
            return Err(ParseTreeError::IdOutOfSequence {
                line: line_no,
                id,
                expected,
            });
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| ParseTreeError::NonNumericHead {
                line: line_no,
                value: cols[6].to_owned(),
            })?;
        raw_heads.push(head);
        tokens.push(Token {
            index: id - 1,
            text: cols[1].to_owned(),
            lemma: field(cols[2]),
            upos: field(cols[3]),
            pos_tag: cols[4].to_owned(),
            head: None,
            deprel: cols[7].to_owned(),
        });
    }

    if tokens.is_empty() {
        return Err(ParseTreeError::NoTokens);
    }

    let len = tokens.len();
    let mut root = None;
    for (token, &head) in tokens.iter_mut().zip(&raw_heads) {
        let id = token.index + 1;
        if head > len {
            return Err(ParseTreeError::HeadOutOfRange { id, head, len });
        }
        if head == id {
            return Err(ParseTreeError::SelfHead { id });
        }
        if head == 0 {
            if root.is_some() {
                return Err(ParseTreeError::MultipleRoots);
            }
            root = Some(token.index);
        } else {
            token.head = Some(head - 1);
        }
    }

    let root = root.ok_or(ParseTreeError::NoRoot)?;
    if !tokens[root].deprel.eq_ignore_ascii_case("root") {
        return Err(ParseTreeError::RootRelation {
            id: root + 1,
            deprel: tokens[root].deprel.clone(),
        });
    }
    if tokens
        .iter()
        .any(|t| t.index != root && t.deprel.eq_ignore_ascii_case("root"))
    {
        return Err(ParseTreeError::MultipleRoots);
    }

    Ok(tokens)
}

/// Write tokens back as a CoNLL-U block (10 columns, `_` for absent fields,
/// trailing newline).
pub fn to_conllu(tokens: &[Token]) -> String {
    let mut out = String::new();
    for t in tokens {
        let head = t.head.map_or(0, |h| h + 1);
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t_\t{}\t{}\t_\t_\n",
            t.index + 1,
            t.text,
            t.lemma.as_deref().unwrap_or("_"),
            t.upos.as_deref().unwrap_or("_"),
            t.pos_tag,
            head,
            t.deprel
        ));
    }
    out
}

/// A question with aligned constituency and dependency parses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedQuestion {
    pub raw: String,
    pub tokens: Vec<Token>,
    pub root: ConstituencyNode,
}

impl ParsedQuestion {
    pub fn with_raw(mut self, raw: impl Into<String>) -> Self {
        self.raw = raw.into();
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn text(&self, index: usize) -> &str {
        &self.tokens[index].text
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }
}

/// Pair a constituency tree with its token list. Leaf words must match the
/// token texts exactly (case-sensitive). `raw` defaults to the space-joined
/// tokens.
pub fn align(root: ConstituencyNode, tokens: Vec<Token>) -> Result<ParsedQuestion> {
    let leaves = root.leaves();
    if leaves.len() != tokens.len() {
        return Err(ParseTreeError::CountMismatch {
            leaves: leaves.len(),
            tokens: tokens.len(),
        });
    }
    for (position, (leaf, token)) in leaves.iter().zip(&tokens).enumerate() {
        let ConstituencyNode::Leaf { word, .. } = leaf else {
            unreachable!("leaves() only yields leaves")
        };
        if *word != token.text {
            return Err(ParseTreeError::TextMismatch {
                position,
                leaf: word.clone(),
                token: token.text.clone(),
            });
        }
    }
    let raw = tokens
        .iter()
        .map(|t| t.text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    Ok(ParsedQuestion { raw, tokens, root })
}

/// Space-joined token texts over `range`; no detokenization.
pub fn span_text(pq: &ParsedQuestion, range: Range<usize>) -> Result<String> {
    if range.start > range.end || range.end > pq.tokens.len() {
        return Err(ParseTreeError::RangeOutOfBounds {
            start: range.start,
            end: range.end,
            len: pq.tokens.len(),
        });
    }
    Ok(pq.tokens[range]
        .iter()
        .map(|t| t.text.as_str())
        .collect::<Vec<_>>()
        .join(" "))
}
