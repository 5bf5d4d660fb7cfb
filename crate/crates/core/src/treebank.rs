//! Bracketed (Penn-style) parse trees: reading, writing, normalization and
//! constituent extraction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// A parse tree. Terminal words only ever occur as the single child of a
/// preterminal node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tree {
    Node { label: String, children: Vec<Tree> },
    Leaf(String),
}

impl Tree {
    pub fn node(label: impl Into<String>, children: Vec<Tree>) -> Tree {
        Tree::Node { label: label.into(), children }
    }

    /// A preterminal `(label word)`.
    pub fn preterminal(label: impl Into<String>, word: impl Into<String>) -> Tree {
        Tree::Node { label: label.into(), children: vec![Tree::Leaf(word.into())] }
    }

    /// Node label, or the word for a leaf.
    pub fn label(&self) -> &str {
        match self {
            Tree::Node { label, .. } => label,
            Tree::Leaf(word) => word,
        }
    }

    pub fn children(&self) -> &[Tree] {
        match self {
            Tree::Node { children, .. } => children,
            Tree::Leaf(_) => &[],
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Tree::Leaf(_))
    }

    pub fn is_preterminal(&self) -> bool {
        match self {
            Tree::Node { children, .. } => children.len() == 1 && children[0].is_leaf(),
            Tree::Leaf(_) => false,
        }
    }

    /// The terminal yield, left to right.
    pub fn words(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_words(&mut out);
        out
    }

    fn collect_words<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Tree::Leaf(w) => out.push(w),
            Tree::Node { children, .. } => children.iter().for_each(|c| c.collect_words(out)),
        }
    }

    /// Number of edges on the longest path from this node to a leaf.
    pub fn height(&self) -> usize {
        match self {
            Tree::Leaf(_) => 0,
            Tree::Node { children, .. } => 1 + children.iter().map(Tree::height).max().unwrap_or(0),
        }
    }

    /// Number of non-leaf nodes (preterminals included).
    pub fn internal_node_count(&self) -> usize {
        match self {
            Tree::Leaf(_) => 0,
            Tree::Node { children, .. } => 1 + children.iter().map(Tree::internal_node_count).sum::<usize>(),
        }
    }

    /// Pre-order traversal of the non-leaf nodes.
    pub fn internal_nodes(&self) -> Vec<&Tree> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            if let Tree::Node { children, .. } = t {
                out.push(t);
                stack.extend(children.iter().rev());
            }
        }
        out
    }

    /// Checks the structural invariants of a well-formed tree.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Tree::Leaf(_) => Err("a bare word is not a tree".to_string()),
            Tree::Node { .. } => self.validate_node(),
        }
    }

    fn validate_node(&self) -> Result<(), String> {
        let Tree::Node { label, children } = self else {
            return Ok(());
        };
        if !valid_symbol(label) {
            return Err(format!("invalid label {label:?}"));
        }
        if children.is_empty() {
            return Err(format!("node {label} has no children"));
        }
        if children.len() > 1 && children.iter().any(Tree::is_leaf) {
            return Err(format!("terminal under {label} has siblings"));
        }
        for c in children {
            match c {
                Tree::Leaf(w) if !valid_symbol(w) => return Err(format!("invalid word {w:?}")),
                Tree::Leaf(_) => {}
                node => node.validate_node()?,
            }
        }
        Ok(())
    }
}

fn valid_symbol(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == '(' || c == ')')
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Leaf(w) => f.write_str(w),
            Tree::Node { label, children } => {
                write!(f, "({label}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A labeled span over the word yield, `start` inclusive, `end` exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constituent {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// An ordered collection of trees with the symbol inventory and word counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Treebank {
    pub trees: Vec<Tree>,
    pub inventory: BTreeSet<String>,
    pub vocabulary: BTreeMap<String, u64>,
}

impl Treebank {
    pub fn from_trees(trees: Vec<Tree>) -> Treebank {
        let mut inventory = BTreeSet::new();
        let mut vocabulary = BTreeMap::new();
        for t in &trees {
            for n in t.internal_nodes() {
                inventory.insert(n.label().to_string());
            }
            for w in t.words() {
                *vocabulary.entry(w.to_string()).or_insert(0) += 1;
            }
        }
        Treebank { trees, inventory, vocabulary }
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Labels of the tree roots.
    pub fn root_labels(&self) -> BTreeSet<String> {
        self.trees.iter().map(|t| t.label().to_string()).collect()
    }

    /// Occurrence count of every node label (preterminals included).
    pub fn label_counts(&self) -> BTreeMap<String, u64> {
        let mut counts = BTreeMap::new();
        for t in &self.trees {
            for n in t.internal_nodes() {
                *counts.entry(n.label().to_string()).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Normalizes every tree, dropping the ones that become empty.
    /// Returns the normalized treebank and the indices of skipped trees.
    pub fn normalized(&self) -> (Treebank, Vec<usize>) {
        let mut kept = Vec::with_capacity(self.trees.len());
        let mut skipped = Vec::new();
        for (i, t) in self.trees.iter().enumerate() {
            match normalize(t) {
                Some(n) => kept.push(n),
                None => skipped.push(i),
            }
        }
        (Treebank::from_trees(kept), skipped)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReadErrorKind {
    #[error("unbalanced brackets: missing ')'")]
    Unclosed,
    #[error("unbalanced brackets: unexpected ')'")]
    UnexpectedClose,
    #[error("empty node")]
    EmptyNode,
    #[error("terminal with siblings")]
    TerminalWithSiblings,
    #[error("word outside of any bracket")]
    StrayWord,
    #[error("node without a label")]
    MissingLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ReadError {
    pub line: usize,
    pub column: usize,
    pub kind: ReadErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

fn tokenize(input: &str) -> Vec<(Tok, Pos)> {
    let mut toks = Vec::new();
    let mut depth = 0usize;
    let mut line = 1;
    let mut column = 0;
    let mut at_line_start = true;
    let mut chars = input.chars().peekable();
    let mut atom = String::new();
    let mut atom_pos = Pos { line, column };
    let flush = |atom: &mut String, pos: Pos, toks: &mut Vec<(Tok, Pos)>| {
        if !atom.is_empty() {
            toks.push((Tok::Atom(std::mem::take(atom)), pos));
        }
    };
    while let Some(c) = chars.next() {
        column += 1;
        if c == '#' && depth == 0 && at_line_start && atom.is_empty() {
            for c in chars.by_ref() {
                if c == '\n' {
                    break;
                }
            }
            line += 1;
            column = 0;
            continue;
        }
        match c {
            '(' => {
                flush(&mut atom, atom_pos, &mut toks);
                toks.push((Tok::Open, Pos { line, column }));
                depth += 1;
                at_line_start = false;
            }
            ')' => {
                flush(&mut atom, atom_pos, &mut toks);
                toks.push((Tok::Close, Pos { line, column }));
                depth = depth.saturating_sub(1);
                at_line_start = false;
            }
            c if c.is_whitespace() => {
                flush(&mut atom, atom_pos, &mut toks);
                if c == '\n' {
                    line += 1;
                    column = 0;
                    at_line_start = true;
                }
            }
            c => {
                if atom.is_empty() {
                    atom_pos = Pos { line, column };
                }
                atom.push(c);
                at_line_start = false;
            }
        }
    }
    flush(&mut atom, atom_pos, &mut toks);
    toks
}

struct Reader {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Reader {
    fn err(pos: Pos, kind: ReadErrorKind) -> ReadError {
        ReadError { line: pos.line, column: pos.column, kind }
    }

    /// Parses one bracketed expression starting at an `Open` token. The label
    /// may be absent (wrapper brackets).
    fn expr(&mut self) -> Result<(Option<String>, Vec<Tree>), ReadError> {
        let open = self.toks[self.at].1;
        self.at += 1;
        let mut label = None;
        if let Some((Tok::Atom(a), _)) = self.toks.get(self.at) {
            label = Some(a.clone());
            self.at += 1;
        }
        let mut children = Vec::new();
        let mut word_pos = None;
        loop {
            let Some((tok, pos)) = self.toks.get(self.at).cloned() else {
                return Err(Self::err(open, ReadErrorKind::Unclosed));
            };
            match tok {
                Tok::Close => {
                    self.at += 1;
                    break;
                }
                Tok::Open => {
                    let (l, cs) = self.expr()?;
                    match l {
                        Some(l) => children.push(Tree::Node { label: l, children: cs }),
                        None if cs.len() == 1 && !cs[0].is_leaf() => children.extend(cs),
                        None => return Err(Self::err(pos, ReadErrorKind::MissingLabel)),
                    }
                }
                Tok::Atom(w) => {
                    self.at += 1;
                    word_pos.get_or_insert(pos);
                    children.push(Tree::Leaf(w));
                }
            }
        }
        if children.is_empty() {
            return Err(Self::err(open, ReadErrorKind::EmptyNode));
        }
        if children.len() > 1 && children.iter().any(Tree::is_leaf) {
            return Err(Self::err(word_pos.unwrap_or(open), ReadErrorKind::TerminalWithSiblings));
        }
        Ok((label, children))
    }
}

/// Reads every tree in `input`, in order.
pub fn read_bracketed(input: &str) -> Result<Treebank, ReadError> {
    read_trees(input).map(Treebank::from_trees)
}

/// Like [`read_bracketed`] but returns the bare trees.
pub fn read_trees(input: &str) -> Result<Vec<Tree>, ReadError> {
    let mut r = Reader { toks: tokenize(input), at: 0 };
    let mut trees = Vec::new();
    while let Some((tok, pos)) = r.toks.get(r.at).cloned() {
        match tok {
            Tok::Close => return Err(Reader::err(pos, ReadErrorKind::UnexpectedClose)),
            Tok::Atom(_) => return Err(Reader::err(pos, ReadErrorKind::StrayWord)),
            Tok::Open => {
                let (label, mut children) = r.expr()?;
                match label {
                    Some(label) => trees.push(Tree::Node { label, children }),
                    None if children.len() == 1 && !children[0].is_leaf() => {
                        trees.push(children.pop().expect("one child"))
                    }
                    None => return Err(Reader::err(pos, ReadErrorKind::MissingLabel)),
                }
            }
        }
    }
    Ok(trees)
}

/// Single-line bracketed form of `tree`.
pub fn write_bracketed(tree: &Tree) -> String {
    tree.to_string()
}

fn keeps_whole_label(label: &str) -> bool {
    (label.len() > 1 && label.starts_with('-') && label.ends_with('-'))
        || !label.chars().any(char::is_alphanumeric)
}

fn strip_label(label: &str) -> &str {
    if keeps_whole_label(label) {
        return label;
    }
    match label[1..].find(['-', '=']) {
        Some(i) => &label[..i + 1],
        None => label,
    }
}

fn is_deleted_preterminal(label: &str) -> bool {
    label == "-NONE-" || label == "''" || label == "``"
}

/// Strips function tags and co-indexing from labels and removes null
/// elements and quotation marks. `None` if nothing is left.
pub fn normalize(tree: &Tree) -> Option<Tree> {
    match tree {
        Tree::Leaf(w) => Some(Tree::Leaf(w.clone())),
        Tree::Node { label, children } => {
            if tree.is_preterminal() && is_deleted_preterminal(label) {
                return None;
            }
            let children: Vec<Tree> = children.iter().filter_map(normalize).collect();
            if children.is_empty() {
                return None;
            }
            Some(Tree::Node { label: strip_label(label).to_string(), children })
        }
    }
}

/// One constituent per non-preterminal internal node, in pre-order.
pub fn constituents(tree: &Tree) -> Vec<Constituent> {
    fn walk(t: &Tree, start: usize, out: &mut Vec<Constituent>) -> usize {
        match t {
            Tree::Leaf(_) => start + 1,
            Tree::Node { label, children } => {
                let slot = out.len();
                let preterminal = t.is_preterminal();
                if !preterminal {
                    out.push(Constituent { label: label.clone(), start, end: start });
                }
                let mut end = start;
                for c in children {
                    end = walk(c, end, out);
                }
                if !preterminal {
                    out[slot].end = end;
                }
                end
            }
        }
    }
    let mut out = Vec::new();
    walk(tree, 0, &mut out);
    out
}
