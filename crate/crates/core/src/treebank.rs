//! CoNLL-U ingestion and emission, plus head-rooted constituent extraction.
//!
//! Only integer-ID rows become tokens: multiword ranges (`3-4`) and empty
//! nodes (`5.1`) are skipped. A malformed sentence is rejected with a
//! line-numbered diagnostic and reading resumes at the next sentence.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Metadata key that carries the sentence identifier.
pub const SENT_ID_KEY: &str = "sent_id";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based surface position.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    /// Governor index, 0 for the root.
    pub head: usize,
    pub deprel: String,
}

impl Token {
    pub fn new(
        index: usize,
        form: impl Into<String>,
        lemma: impl Into<String>,
        upos: impl Into<String>,
        head: usize,
        deprel: impl Into<String>,
    ) -> Self {
        Token {
            index,
            form: form.into(),
            lemma: lemma.into(),
            upos: upos.into(),
            head,
            deprel: deprel.into(),
        }
    }
}

/// A sentence as a single-rooted dependency tree in surface order.
///
/// Construct through [`DepTree::new`], which validates the tree invariants.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepTree {
    pub sentence_id: String,
    pub metadata: BTreeMap<String, String>,
    tokens: Vec<Token>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("sentence has no tokens")]
    Empty,
    #[error("token {position} has index {found}, expected contiguous numbering")]
    NonContiguous { position: usize, found: usize },
    #[error("token {index} has empty form")]
    EmptyForm { index: usize },
    #[error("token {index} is its own head")]
    SelfHead { index: usize },
    #[error("token {index} has head {head} outside 0..={len}")]
    HeadOutOfRange { index: usize, head: usize, len: usize },
    #[error("expected exactly one root, found {0}")]
    RootCount(usize),
    #[error("head relation has a cycle through token {0}")]
    Cycle(usize),
    #[error("token index {0} does not exist in the sentence")]
    InvalidIndex(usize),
}

impl DepTree {
    pub fn new(
        sentence_id: impl Into<String>,
        tokens: Vec<Token>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self, TreeError> {
        validate(&tokens)?;
        Ok(DepTree {
            sentence_id: sentence_id.into(),
            metadata,
            tokens,
        })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token at a 1-based index.
    pub fn token(&self, index: usize) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn root(&self) -> usize {
        self.tokens
            .iter()
            .find(|t| t.head == 0)
            .map(|t| t.index)
            .expect("validated tree has a root")
    }

    pub fn forms(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.form.clone()).collect()
    }

    /// Whitespace-joined surface string.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&t.form);
        }
        out
    }

    /// Dependents of every node in surface order; slot 0 holds the root.
    pub fn dependents(&self) -> Dependents {
        let mut children = vec![Vec::new(); self.tokens.len() + 1];
        for t in &self.tokens {
            children[t.head].push(t.index);
        }
        Dependents { children }
    }

    /// Size of every node's subtree, indexed by token index (slot 0 unused).
    pub fn subtree_sizes(&self, deps: &Dependents) -> Vec<usize> {
        let mut sizes = vec![1usize; self.tokens.len() + 1];
        sizes[0] = 0;
        for node in deps.postorder(self.root()) {
            let below: usize = deps.of(node).iter().map(|&c| sizes[c]).sum();
            sizes[node] = 1 + below;
        }
        sizes
    }

    /// All tokens dominated by `node`, the node included.
    pub fn subtree_span(&self, node: usize) -> Result<Span, TreeError> {
        if self.token(node).is_none() {
            return Err(TreeError::InvalidIndex(node));
        }
        Ok(self.subtree_span_with(&self.dependents(), node))
    }

    /// As [`DepTree::subtree_span`], reusing a precomputed dependents table.
    pub fn subtree_span_with(&self, deps: &Dependents, node: usize) -> Span {
        let mut members = Vec::new();
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            members.push(n);
            stack.extend_from_slice(deps.of(n));
        }
        members.sort_unstable();
        Span {
            token_indices: members,
            head_index: node,
        }
    }
}

fn validate(tokens: &[Token]) -> Result<(), TreeError> {
    if tokens.is_empty() {
        return Err(TreeError::Empty);
    }
    let len = tokens.len();
    let mut roots = 0;
    for (pos, t) in tokens.iter().enumerate() {
        if t.index != pos + 1 {
            return Err(TreeError::NonContiguous {
                position: pos + 1,
                found: t.index,
            });
        }
        if t.form.is_empty() {
            return Err(TreeError::EmptyForm { index: t.index });
        }
        if t.head == t.index {
            return Err(TreeError::SelfHead { index: t.index });
        }
        if t.head > len {
            return Err(TreeError::HeadOutOfRange {
                index: t.index,
                head: t.head,
                len,
            });
        }
        if t.head == 0 {
            roots += 1;
        }
    }
    if roots != 1 {
        return Err(TreeError::RootCount(roots));
    }
    // 0 = unvisited, 1 = on current path, 2 = reaches root
    let mut state = vec![0u8; len + 1];
    for start in 1..=len {
        let mut path = Vec::new();
        let mut n = start;
        while n != 0 && state[n] != 2 {
            if state[n] == 1 {
                return Err(TreeError::Cycle(n));
            }
            state[n] = 1;
            path.push(n);
            n = tokens[n - 1].head;
        }
        for p in path {
            state[p] = 2;
        }
    }
    Ok(())
}

/// Children lists, indexed by head (0 = artificial root slot).
#[derive(Clone, Debug)]
pub struct Dependents {
    children: Vec<Vec<usize>>,
}

impl Dependents {
    pub fn of(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Nodes of the subtree rooted at `node`, children before parents.
    pub fn postorder(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![(node, false)];
        while let Some((n, expanded)) = stack.pop() {
            if expanded {
                out.push(n);
            } else {
                stack.push((n, true));
                for &c in self.children[n].iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }
}

/// A head-rooted constituent: sorted token indices plus the head.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub token_indices: Vec<usize>,
    pub head_index: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.token_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_indices.is_empty()
    }

    pub fn first(&self) -> usize {
        self.token_indices[0]
    }

    pub fn last(&self) -> usize {
        *self.token_indices.last().expect("span is non-empty")
    }

    pub fn contains(&self, index: usize) -> bool {
        self.token_indices.binary_search(&index).is_ok()
    }

    pub fn is_contiguous(&self) -> bool {
        self.last() - self.first() + 1 == self.len()
    }

    pub fn is_disjoint(&self, other: &Span) -> bool {
        !self.token_indices.iter().any(|&i| other.contains(i))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected 10 tab-separated columns, found {0}")]
    ColumnCount(usize),
    #[error("unparseable token id `{0}`")]
    BadId(String),
    #[error("unparseable head `{0}`")]
    BadHead(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("invalid UTF-8")]
    Encoding,
    #[error("read failed: {0}")]
    Io(String),
}

/// A rejected sentence. `line` is the 1-based line that triggered the error.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub sentence_id: Option<String>,
    pub kind: ParseErrorKind,
}

/// Streaming CoNLL-U reader yielding one item per sentence block.
pub struct TreebankReader<R> {
    input: R,
    line_no: usize,
    blocks: usize,
    buf: Vec<u8>,
    done: bool,
}

impl<R: BufRead> TreebankReader<R> {
    pub fn new(input: R) -> Self {
        TreebankReader {
            input,
            line_no: 0,
            blocks: 0,
            buf: Vec::new(),
            done: false,
        }
    }

    fn next_line(&mut self) -> Option<Result<(), ParseError>> {
        self.buf.clear();
        match self.input.read_until(b'\n', &mut self.buf) {
            Ok(0) => None,
            Ok(_) => {
                self.line_no += 1;
                while matches!(self.buf.last(), Some(b'\n' | b'\r')) {
                    self.buf.pop();
                }
                Some(Ok(()))
            }
            Err(e) => Some(Err(ParseError {
                line: self.line_no + 1,
                sentence_id: None,
                kind: ParseErrorKind::Io(e.to_string()),
            })),
        }
    }
}

struct Block {
    start_line: usize,
    metadata: BTreeMap<String, String>,
    tokens: Vec<Token>,
    error: Option<(usize, ParseErrorKind)>,
}

impl<R: BufRead> Iterator for TreebankReader<R> {
    type Item = Result<DepTree, ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut block: Option<Block> = None;
        loop {
            match self.next_line() {
                None => {
                    self.done = true;
                    break;
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e));
                }
                Some(Ok(())) => {}
            }
            let line_no = self.line_no;
            let line = match std::str::from_utf8(&self.buf) {
                Ok(l) => l,
                Err(_) => {
                    let b = block.get_or_insert_with(|| Block::new(line_no));
                    b.error.get_or_insert((line_no, ParseErrorKind::Encoding));
                    continue;
                }
            };
            if line.trim().is_empty() {
                if block.is_some() {
                    break;
                }
                continue;
            }
            let b = block.get_or_insert_with(|| Block::new(line_no));
            if b.error.is_some() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((k, v)) = comment.split_once('=') {
                    b.metadata
                        .insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if let Err(kind) = parse_row(line, &mut b.tokens) {
                b.error = Some((line_no, kind));
            }
        }
        let mut block = block?;
        self.blocks += 1;
        let sentence_id = block
            .metadata
            .remove(SENT_ID_KEY)
            .unwrap_or_else(|| format!("s{}", self.blocks));
        if let Some((line, kind)) = block.error {
            return Some(Err(ParseError {
                line,
                sentence_id: Some(sentence_id),
                kind,
            }));
        }
        if block.tokens.is_empty() {
            // comment-only block
            return self.next();
        }
        Some(
            DepTree::new(sentence_id.clone(), block.tokens, block.metadata).map_err(|e| {
                ParseError {
                    line: block.start_line,
                    sentence_id: Some(sentence_id),
                    kind: e.into(),
                }
            }),
        )
    }
}

impl Block {
    fn new(start_line: usize) -> Self {
        Block {
            start_line,
            metadata: BTreeMap::new(),
            tokens: Vec::new(),
            error: None,
        }
    }
}

fn parse_row(line: &str, tokens: &mut Vec<Token>) -> Result<(), ParseErrorKind> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(ParseErrorKind::ColumnCount(cols.len()));
    }
    let id = cols[0];
    if id.contains('-') || id.contains('.') {
        return Ok(());
    }
    let index: usize = id.parse().map_err(|_| ParseErrorKind::BadId(id.to_string()))?;
    let head: usize = cols[6]
        .parse()
        .map_err(|_| ParseErrorKind::BadHead(cols[6].to_string()))?;
    tokens.push(Token {
        index,
        form: cols[1].to_string(),
        lemma: cols[2].to_string(),
        upos: cols[3].to_string(),
        head,
        deprel: cols[7].to_string(),
    });
    Ok(())
}

/// Result of reading a whole treebank into memory.
#[derive(Debug, Default)]
pub struct ParsedTreebank {
    pub trees: Vec<DepTree>,
    pub errors: Vec<ParseError>,
}

pub fn parse_treebank(input: &[u8]) -> ParsedTreebank {
    let mut out = ParsedTreebank::default();
    for item in TreebankReader::new(input) {
        match item {
            Ok(t) => out.trees.push(t),
            Err(e) => out.errors.push(e),
        }
    }
    out
}

pub fn write_tree<W: Write>(out: &mut W, tree: &DepTree) -> io::Result<()> {
    writeln!(out, "# {} = {}", SENT_ID_KEY, tree.sentence_id)?;
    for (k, v) in &tree.metadata {
        writeln!(out, "# {} = {}", k, v)?;
    }
    for t in &tree.tokens {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_",
            t.index, t.form, t.lemma, t.upos, t.head, t.deprel
        )?;
    }
    writeln!(out)
}

pub fn emit_treebank(trees: &[DepTree]) -> Vec<u8> {
    let mut out = Vec::new();
    for t in trees {
        write_tree(&mut out, t).expect("writing to a Vec cannot fail");
    }
    out
}

impl fmt::Display for DepTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}
