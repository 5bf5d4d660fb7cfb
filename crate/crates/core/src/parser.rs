//! Fragment-rule chart parsing.
//!
//! Every model fragment becomes one rule `root -> frontier`. Rules with more
//! than two right-hand symbols are left-factored into shared intermediate
//! symbols, so the chart only ever combines two items. Each chart item keeps
//! up to `n_best` derivations, found with a lazy best-first merge over its
//! incoming edges; unary rules are closed over each span in bounded rounds.
//! After a span is complete, items whose inside score times label prior falls
//! below `prune_ratio` of the span's best are dropped.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::rc::Rc;
use std::sync::Arc;

use thiserror::Error;

use crate::fragments::{FragNode, Fragment, FrontierItem};
use crate::model::{CorpusStats, FragmentModel};
use crate::treebank::Tree;

/// Default number of derivations kept per chart item and returned per
/// sentence.
pub const DEFAULT_N_BEST: usize = 1000;

/// Default pruning threshold relative to the best item in a span.
pub const DEFAULT_PRUNE_RATIO: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("left operand has no open substitution site")]
    NoOpenSite,
    #[error("leftmost open site is {site}, cannot substitute a fragment rooted in {root}")]
    LabelMismatch { site: String, root: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty sentence")]
    EmptySentence,
    #[error("no derivation spans the sentence")]
    NoParse,
    #[error("invalid parser configuration: {0}")]
    Config(String),
}

fn substitute(node: &mut FragNode, right: &Fragment) -> Result<bool, ComposeError> {
    match node {
        FragNode::Word(_) => Ok(false),
        FragNode::Site(label) => {
            if label != right.root_label() {
                return Err(ComposeError::LabelMismatch { site: label.clone(), root: right.root_label().to_string() });
            }
            *node = right.root().clone();
            Ok(true)
        }
        FragNode::Internal { children, .. } => {
            for c in children {
                if substitute(c, right)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

/// Node substitution: replaces the leftmost open site of `left` with `right`.
pub fn compose(left: &Fragment, right: &Fragment) -> Result<Fragment, ComposeError> {
    let mut root = left.root().clone();
    if substitute(&mut root, right)? {
        Ok(Fragment::new(root).expect("root stays internal"))
    } else {
        Err(ComposeError::NoOpenSite)
    }
}

/// One right-hand-side symbol of an indexed rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RhsSymbol {
    Label(String),
    Word(String),
}

/// A fragment flattened to a context-free rule over its frontier.
#[derive(Debug, Clone)]
pub struct IndexedRule {
    pub lhs: String,
    pub rhs: Vec<RhsSymbol>,
    pub fragment_id: usize,
    pub probability: f64,
    pub fragment: Arc<Fragment>,
}

impl IndexedRule {
    pub fn from_fragment(fragment: Arc<Fragment>, fragment_id: usize, probability: f64) -> IndexedRule {
        let rhs = fragment
            .frontier()
            .into_iter()
            .map(|item| match item {
                FrontierItem::Site(l) => RhsSymbol::Label(l.to_string()),
                FrontierItem::Word(w) => RhsSymbol::Word(w.to_string()),
            })
            .collect();
        IndexedRule { lhs: fragment.root_label().to_string(), rhs, fragment_id, probability, fragment }
    }
}

/// One rule per model entry; `fragment_id` is the entry id.
pub fn to_rules(model: &FragmentModel) -> Vec<IndexedRule> {
    model
        .entries()
        .iter()
        .enumerate()
        .map(|(id, e)| IndexedRule::from_fragment(e.fragment.clone(), id, e.probability))
        .collect()
}

type Sym = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    Label,
    Word,
    Intermediate,
}

#[derive(Debug, Clone, Copy)]
struct UnaryEdge {
    lhs: Sym,
    log_weight: f64,
    rule: u32,
}

#[derive(Debug, Clone, Copy)]
struct BinaryEdge {
    right: Sym,
    result: Sym,
    log_weight: f64,
    rule: Option<u32>,
}

/// Binarized, indexed rule set ready for chart parsing.
#[derive(Debug, Clone)]
pub struct Grammar {
    rules: Vec<IndexedRule>,
    names: Vec<String>,
    kinds: Vec<Kind>,
    labels: HashMap<String, Sym>,
    words: HashMap<String, Sym>,
    unary: HashMap<Sym, Vec<UnaryEdge>>,
    binary: HashMap<Sym, Vec<BinaryEdge>>,
    log_priors: Vec<f64>,
    start: Vec<Sym>,
    label_count: usize,
}

impl Grammar {
    /// Indexes `rules`. Priors and start labels come from `corpus`; without
    /// label counts every prior is 1, without start labels any label may
    /// span the sentence.
    pub fn new(rules: Vec<IndexedRule>, corpus: &CorpusStats) -> Grammar {
        let mut g = Grammar {
            rules: Vec::new(),
            names: Vec::new(),
            kinds: Vec::new(),
            labels: HashMap::new(),
            words: HashMap::new(),
            unary: HashMap::new(),
            binary: HashMap::new(),
            log_priors: Vec::new(),
            start: Vec::new(),
            label_count: 0,
        };
        let mut intermediates: HashMap<(Sym, Sym), Sym> = HashMap::new();
        for (idx, rule) in rules.iter().enumerate() {
            if rule.probability.is_nan() || rule.probability <= 0.0 || rule.rhs.is_empty() {
                continue;
            }
            let idx = idx as u32;
            let lhs = g.label_sym(&rule.lhs);
            let rhs: Vec<Sym> = rule
                .rhs
                .iter()
                .map(|s| match s {
                    RhsSymbol::Label(l) => g.label_sym(l),
                    RhsSymbol::Word(w) => g.word_sym(w),
                })
                .collect();
            let log_weight = rule.probability.ln();
            if rhs.len() == 1 {
                g.unary.entry(rhs[0]).or_default().push(UnaryEdge { lhs, log_weight, rule: idx });
                continue;
            }
            let mut prev = rhs[0];
            for &next in &rhs[1..rhs.len() - 1] {
                prev = match intermediates.get(&(prev, next)) {
                    Some(&s) => s,
                    None => {
                        let s = g.new_sym(format!("@{}", intermediates.len()), Kind::Intermediate);
                        intermediates.insert((prev, next), s);
                        g.binary.entry(prev).or_default().push(BinaryEdge { right: next, result: s, log_weight: 0.0, rule: None });
                        s
                    }
                };
            }
            let last = *rhs.last().expect("rhs has at least two symbols");
            g.binary.entry(prev).or_default().push(BinaryEdge { right: last, result: lhs, log_weight, rule: Some(idx) });
        }
        g.rules = rules;
        let total: u64 = corpus.label_counts.values().sum();
        let floor = if total > 0 { (1.0 / (total as f64 + 1.0)).ln() } else { 0.0 };
        g.log_priors = (0..g.names.len())
            .map(|s| match g.kinds[s] {
                Kind::Label if total > 0 => match corpus.label_counts.get(&g.names[s]) {
                    Some(&c) if c > 0 => (c as f64 / total as f64).ln(),
                    _ => floor,
                },
                _ => 0.0,
            })
            .collect();
        let mut start: Vec<Sym> = if corpus.start_labels.is_empty() {
            g.labels.values().copied().collect()
        } else {
            corpus.start_labels.iter().filter_map(|l| g.labels.get(l).copied()).collect()
        };
        start.sort_unstable();
        g.start = start;
        g
    }

    /// Grammar for a trained model, using its corpus statistics.
    pub fn from_model(model: &FragmentModel) -> Grammar {
        Grammar::new(to_rules(model), model.corpus())
    }

    fn new_sym(&mut self, name: String, kind: Kind) -> Sym {
        let s = self.names.len() as Sym;
        self.names.push(name);
        self.kinds.push(kind);
        s
    }

    fn label_sym(&mut self, l: &str) -> Sym {
        if let Some(&s) = self.labels.get(l) {
            return s;
        }
        let s = self.new_sym(l.to_string(), Kind::Label);
        self.labels.insert(l.to_string(), s);
        self.label_count += 1;
        s
    }

    fn word_sym(&mut self, w: &str) -> Sym {
        if let Some(&s) = self.words.get(w) {
            return s;
        }
        let s = self.new_sym(w.to_string(), Kind::Word);
        self.words.insert(w.to_string(), s);
        s
    }

    pub fn rules(&self) -> &[IndexedRule] {
        &self.rules
    }

    /// Whether `word` occurs on the frontier of some usable rule.
    pub fn knows_word(&self, word: &str) -> bool {
        self.words.contains_key(word)
    }

    pub fn knows_label(&self, label: &str) -> bool {
        self.labels.contains_key(label)
    }

    /// Number of distinct symbols after binarization (labels, words and
    /// intermediates).
    pub fn symbol_count(&self) -> usize {
        self.names.len()
    }
}

#[derive(Debug)]
enum Back {
    Word,
    Unary { rule: u32, child: Rc<Deriv> },
    Binary { rule: Option<u32>, left: Rc<Deriv>, right: Rc<Deriv> },
}

#[derive(Debug)]
struct Deriv {
    log_prob: f64,
    back: Back,
}

/// Knobs of a chart parse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartConfig {
    /// Derivations kept per item.
    pub n_best: usize,
    /// Items scoring below this fraction of the best item in their span are
    /// pruned; `0` disables pruning.
    pub prune_ratio: f64,
    /// Cap on unary closure rounds per span; defaults to one more than the
    /// number of labels.
    pub max_unary_rounds: Option<usize>,
}

impl Default for ChartConfig {
    fn default() -> Self {
        ChartConfig { n_best: DEFAULT_N_BEST, prune_ratio: DEFAULT_PRUNE_RATIO, max_unary_rounds: None }
    }
}

impl ChartConfig {
    pub fn validate(&self) -> Result<(), ParseError> {
        if self.n_best == 0 {
            return Err(ParseError::Config("n_best must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.prune_ratio) {
            return Err(ParseError::Config(format!("prune ratio {} outside [0, 1]", self.prune_ratio)));
        }
        Ok(())
    }
}

/// A labeled chart item with its candidate log probabilities, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartItem {
    pub label: String,
    pub start: usize,
    pub end: usize,
    pub log_probs: Vec<f64>,
}

type Cell = BTreeMap<Sym, Vec<Rc<Deriv>>>;

/// A filled chart for one sentence.
pub struct Chart<'g> {
    grammar: &'g Grammar,
    extra: Vec<IndexedRule>,
    len: usize,
    cells: Vec<Cell>,
    n_best: usize,
}

struct HeapEntry {
    score: f64,
    edge: usize,
    a: usize,
    b: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| (other.edge, other.a, other.b).cmp(&(self.edge, self.a, self.b)))
    }
}

struct Incoming<'c> {
    log_weight: f64,
    rule: Option<u32>,
    left: &'c [Rc<Deriv>],
    right: &'c [Rc<Deriv>],
}

fn kbest_merge(edges: &[Incoming<'_>], n: usize) -> Vec<Rc<Deriv>> {
    let score = |e: &Incoming<'_>, a: usize, b: usize| e.log_weight + e.left[a].log_prob + e.right[b].log_prob;
    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    for (i, e) in edges.iter().enumerate() {
        heap.push(HeapEntry { score: score(e, 0, 0), edge: i, a: 0, b: 0 });
        seen.insert((i, 0, 0));
    }
    let mut out = Vec::with_capacity(n.min(16));
    while out.len() < n {
        let Some(top) = heap.pop() else { break };
        let e = &edges[top.edge];
        out.push(Rc::new(Deriv {
            log_prob: top.score,
            back: Back::Binary { rule: e.rule, left: e.left[top.a].clone(), right: e.right[top.b].clone() },
        }));
        for (a, b) in [(top.a + 1, top.b), (top.a, top.b + 1)] {
            if a < e.left.len() && b < e.right.len() && seen.insert((top.edge, a, b)) {
                heap.push(HeapEntry { score: score(e, a, b), edge: top.edge, a, b });
            }
        }
    }
    out
}

fn merge_sorted(existing: &mut Vec<Rc<Deriv>>, mut new: Vec<Rc<Deriv>>, n: usize) -> bool {
    if new.is_empty() {
        return false;
    }
    let new_ptrs: HashSet<*const Deriv> = new.iter().map(Rc::as_ptr).collect();
    existing.append(&mut new);
    existing.sort_by(|x, y| y.log_prob.total_cmp(&x.log_prob));
    existing.truncate(n);
    existing.iter().any(|d| new_ptrs.contains(&Rc::as_ptr(d)))
}

/// Fills a chart for `sentence`. `extra` holds sentence-specific single-word
/// rules (unknown-word guesses); their ids continue after the grammar's.
pub fn parse_chart<'g>(
    grammar: &'g Grammar,
    sentence: &[&str],
    extra: Vec<IndexedRule>,
    config: &ChartConfig,
) -> Result<Chart<'g>, ParseError> {
    config.validate()?;
    if sentence.is_empty() {
        return Err(ParseError::EmptySentence);
    }
    let n = sentence.len();
    let base = grammar.rules.len() as u32;
    let mut extra_at: Vec<Vec<UnaryEdge>> = vec![Vec::new(); n];
    for (k, r) in extra.iter().enumerate() {
        let (Some(&lhs), [RhsSymbol::Word(w)]) = (grammar.labels.get(&r.lhs), r.rhs.as_slice()) else {
            continue;
        };
        if r.probability.is_nan() || r.probability <= 0.0 {
            continue;
        }
        for (i, &word) in sentence.iter().enumerate() {
            if word == w {
                extra_at[i].push(UnaryEdge { lhs, log_weight: r.probability.ln(), rule: base + k as u32 });
            }
        }
    }
    let term_sym = |i: usize| grammar.words.get(sentence[i]).copied().unwrap_or((grammar.names.len() + i) as Sym);
    let rounds = config.max_unary_rounds.unwrap_or(grammar.label_count + 1);
    let log_ratio = if config.prune_ratio > 0.0 { Some(config.prune_ratio.ln()) } else { None };
    let idx = |i: usize, j: usize| i * (n + 1) + j;
    let mut cells: Vec<Cell> = (0..(n + 1) * (n + 1)).map(|_| Cell::new()).collect();
    for len in 1..=n {
        for i in 0..=n - len {
            let j = i + len;
            let mut cell = Cell::new();
            if len == 1 {
                cell.insert(term_sym(i), vec![Rc::new(Deriv { log_prob: 0.0, back: Back::Word })]);
            } else {
                let mut incoming: BTreeMap<Sym, Vec<Incoming<'_>>> = BTreeMap::new();
                for k in i + 1..j {
                    let (lc, rc) = (&cells[idx(i, k)], &cells[idx(k, j)]);
                    for (lsym, llist) in lc {
                        let Some(edges) = grammar.binary.get(lsym) else { continue };
                        for e in edges {
                            if let Some(rlist) = rc.get(&e.right) {
                                incoming.entry(e.result).or_default().push(Incoming {
                                    log_weight: e.log_weight,
                                    rule: e.rule,
                                    left: llist,
                                    right: rlist,
                                });
                            }
                        }
                    }
                }
                for (sym, edges) in incoming {
                    cell.insert(sym, kbest_merge(&edges, config.n_best));
                }
            }
            let lexical = if len == 1 { extra_at[i].as_slice() } else { &[] };
            close_unary(grammar, &mut cell, lexical, term_sym(i), config.n_best, rounds);
            if let Some(log_ratio) = log_ratio {
                prune(grammar, &mut cell, log_ratio);
            }
            cells[idx(i, j)] = cell;
        }
    }
    Ok(Chart { grammar, extra, len: n, cells, n_best: config.n_best })
}

fn close_unary(grammar: &Grammar, cell: &mut Cell, lexical: &[UnaryEdge], term: Sym, n: usize, rounds: usize) {
    let mut applied: HashSet<(u32, *const Deriv)> = HashSet::new();
    let mut keep_alive: Vec<Rc<Deriv>> = Vec::new();
    for _ in 0..rounds {
        let mut proposals: BTreeMap<Sym, Vec<Rc<Deriv>>> = BTreeMap::new();
        for (&child, list) in cell.iter() {
            let edges = grammar.unary.get(&child).map(Vec::as_slice).unwrap_or(&[]);
            let local = if child == term { lexical } else { &[] };
            for e in edges.iter().chain(local) {
                for c in list.iter().take(n) {
                    if applied.insert((e.rule, Rc::as_ptr(c))) {
                        keep_alive.push(c.clone());
                        proposals.entry(e.lhs).or_default().push(Rc::new(Deriv {
                            log_prob: e.log_weight + c.log_prob,
                            back: Back::Unary { rule: e.rule, child: c.clone() },
                        }));
                    }
                }
            }
        }
        let mut changed = false;
        for (lhs, props) in proposals {
            changed |= merge_sorted(cell.entry(lhs).or_default(), props, n);
        }
        if !changed {
            break;
        }
    }
}

fn prune(grammar: &Grammar, cell: &mut Cell, log_ratio: f64) {
    let score = |sym: Sym, list: &[Rc<Deriv>]| list[0].log_prob + grammar.log_priors[sym as usize];
    let is_label = |sym: Sym| grammar.kinds.get(sym as usize) == Some(&Kind::Label);
    let best = cell
        .iter()
        .filter(|(s, l)| is_label(**s) && !l.is_empty())
        .map(|(&s, l)| score(s, l))
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return;
    }
    cell.retain(|&s, l| !is_label(s) || (!l.is_empty() && score(s, l) >= best + log_ratio));
}

/// A full derivation: fragment ids in leftmost-substitution order.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    pub fragment_ids: Vec<usize>,
    pub log_prob: f64,
    pub tree: Tree,
}

impl<'g> Chart<'g> {
    pub fn sentence_len(&self) -> usize {
        self.len
    }

    fn rule(&self, id: u32) -> &IndexedRule {
        let base = self.grammar.rules.len();
        let id = id as usize;
        if id < base {
            &self.grammar.rules[id]
        } else {
            &self.extra[id - base]
        }
    }

    fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[i * (self.len + 1) + j]
    }

    /// Labeled items of span `(start, end)`.
    pub fn items(&self, start: usize, end: usize) -> Vec<ChartItem> {
        self.cell(start, end)
            .iter()
            .filter(|(s, _)| self.grammar.kinds.get(**s as usize) == Some(&Kind::Label))
            .map(|(&s, list)| ChartItem {
                label: self.grammar.names[s as usize].clone(),
                start,
                end,
                log_probs: list.iter().map(|d| d.log_prob).collect(),
            })
            .collect()
    }

    /// Whether a start-label item covers the sentence.
    pub fn has_parse(&self) -> bool {
        let full = self.cell(0, self.len);
        self.grammar.start.iter().any(|s| full.get(s).is_some_and(|l| !l.is_empty()))
    }

    fn rule_ids(&self, d: &Deriv, out: &mut Vec<u32>) {
        fn flatten<'a>(d: &'a Rc<Deriv>, out: &mut Vec<&'a Rc<Deriv>>) {
            match &d.back {
                Back::Binary { rule: None, left, right } => {
                    flatten(left, out);
                    out.push(right);
                }
                _ => out.push(d),
            }
        }
        match &d.back {
            Back::Word => {}
            Back::Unary { rule, child } => {
                out.push(*rule);
                self.rule_ids(child, out);
            }
            Back::Binary { rule, left, right } => {
                out.push(rule.expect("complete items end in a rule"));
                let mut children = Vec::new();
                flatten(left, &mut children);
                children.push(right);
                for c in children {
                    self.rule_ids(c, out);
                }
            }
        }
    }

    fn derivation(&self, d: &Deriv) -> Derivation {
        let mut ids = Vec::new();
        self.rule_ids(d, &mut ids);
        let mut acc = (*self.rule(ids[0]).fragment).clone();
        for &id in &ids[1..] {
            acc = compose(&acc, &self.rule(id).fragment).expect("chart derivations compose");
        }
        Derivation {
            fragment_ids: ids.iter().map(|&id| self.rule(id).fragment_id).collect(),
            log_prob: d.log_prob,
            tree: acc.to_tree().expect("chart derivations are complete"),
        }
    }
}

/// Up to `n` most probable derivations of the whole sentence, best first.
pub fn nbest_derivations(chart: &Chart<'_>, n: usize) -> Vec<Derivation> {
    let full = chart.cell(0, chart.len);
    let mut all: Vec<&Rc<Deriv>> = chart.grammar.start.iter().filter_map(|s| full.get(s)).flatten().collect();
    all.sort_by(|x, y| y.log_prob.total_cmp(&x.log_prob));
    all.into_iter().take(n.min(chart.n_best)).map(|d| chart.derivation(d)).collect()
}

/// Derivation statistics for one distinct tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeTally {
    pub tree: Tree,
    pub bracketed: String,
    pub probability: f64,
    pub derivations: usize,
    pub best_log_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseResult {
    pub tree: Tree,
    /// Sum of the probabilities of the found derivations of `tree`.
    pub probability: f64,
    pub derivations_examined: usize,
    /// Every distinct tree, best first.
    pub tallies: Vec<TreeTally>,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if f64::abs(sum) >= f64::abs(v) {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Groups derivations by tree and picks the tree with the largest summed
/// probability. Ties go to the higher single best derivation, then to the
/// lexicographically smaller bracketing.
pub fn most_probable_parse(derivations: &[Derivation]) -> Option<ParseResult> {
    let max = derivations.iter().map(|d| d.log_prob).fold(f64::NEG_INFINITY, f64::max);
    if derivations.is_empty() {
        return None;
    }
    let mut groups: BTreeMap<String, (Tree, Vec<f64>)> = BTreeMap::new();
    for d in derivations {
        groups.entry(d.tree.to_string()).or_insert_with(|| (d.tree.clone(), Vec::new())).1.push(d.log_prob);
    }
    let mut tallies: Vec<(f64, TreeTally)> = groups
        .into_iter()
        .map(|(bracketed, (tree, lps))| {
            let scaled = compensated_sum(lps.iter().map(|lp| (lp - max).exp()));
            let best = lps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let tally = TreeTally { tree, bracketed, probability: scaled * max.exp(), derivations: lps.len(), best_log_prob: best };
            (scaled, tally)
        })
        .collect();
    tallies.sort_by(|(sa, a), (sb, b)| {
        sb.total_cmp(sa)
            .then_with(|| b.best_log_prob.total_cmp(&a.best_log_prob))
            .then_with(|| a.bracketed.cmp(&b.bracketed))
    });
    let tallies: Vec<TreeTally> = tallies.into_iter().map(|(_, t)| t).collect();
    Some(ParseResult {
        tree: tallies[0].tree.clone(),
        probability: tallies[0].probability,
        derivations_examined: derivations.len(),
        tallies,
    })
}

/// A grammar together with the model it came from, handling unknown words.
pub struct DopParser<'m> {
    model: &'m FragmentModel,
    grammar: Grammar,
    config: ChartConfig,
}

/// Everything produced for one sentence.
#[derive(Debug, Clone)]
pub struct SentenceParse {
    pub result: ParseResult,
    pub derivations: Vec<Derivation>,
    pub unknown_words: Vec<String>,
}

impl<'m> DopParser<'m> {
    pub fn new(model: &'m FragmentModel, config: ChartConfig) -> Result<DopParser<'m>, ParseError> {
        config.validate()?;
        Ok(DopParser { model, grammar: Grammar::from_model(model), config })
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn config(&self) -> &ChartConfig {
        &self.config
    }

    /// Single-word rules for words the grammar has never seen, from the
    /// model's unknown-word guesser.
    pub fn unknown_word_rules(&self, sentence: &[&str]) -> (Vec<IndexedRule>, Vec<String>) {
        let mut rules = Vec::new();
        let mut unknown = Vec::new();
        let mut seen = HashSet::new();
        for &w in sentence {
            if self.grammar.knows_word(w) || !seen.insert(w) {
                continue;
            }
            unknown.push(w.to_string());
            let Some(guesser) = self.model.unknown_model() else { continue };
            for (tag, p) in guesser.tag_unknown(w) {
                if !self.grammar.knows_label(&tag) {
                    continue;
                }
                let fragment = Fragment::new(FragNode::Internal { label: tag.clone(), children: vec![FragNode::Word(w.to_string())] })
                    .expect("internal root");
                let id = self.model.len() + rules.len();
                let prob = self.model.unseen_mass(&tag) * p;
                rules.push(IndexedRule::from_fragment(Arc::new(fragment), id, prob));
            }
        }
        (rules, unknown)
    }

    pub fn parse(&self, sentence: &[&str]) -> Result<SentenceParse, ParseError> {
        let (extra, unknown_words) = self.unknown_word_rules(sentence);
        let chart = parse_chart(&self.grammar, sentence, extra, &self.config)?;
        let derivations = nbest_derivations(&chart, self.config.n_best);
        let result = most_probable_parse(&derivations).ok_or(ParseError::NoParse)?;
        Ok(SentenceParse { result, derivations, unknown_words })
    }
}
