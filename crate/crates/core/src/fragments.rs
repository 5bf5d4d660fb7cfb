//! Tree fragments: exhaustive extraction, random sampling by depth,
//! per-fragment statistics and the restriction filter.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::headrules::HeadRuleTable;
use crate::treebank::{Tree, Treebank};

/// Default limit on the number of fragments [`extract_all`] will materialize
/// for one tree.
pub const DEFAULT_EXTRACTION_CAP: u128 = 1_000_000;

/// Default number of consecutive failed draws before sampling gives up.
pub const DEFAULT_MAX_RESTARTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FragmentError {
    #[error("tree has {count} fragments, more than the cap of {cap}; use sampling instead")]
    Overflow { count: u128, cap: u128 },
    #[error("no node supports fragments of depth {depth} (gave up after {restarts} restarts)")]
    DepthUnreachable { depth: usize, restarts: usize },
    #[error("invalid sampling request: {0}")]
    InvalidRequest(String),
    #[error("malformed fragment key {key:?}: {reason}")]
    MalformedKey { key: String, reason: String },
}

/// A node inside a fragment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FragNode {
    /// A node whose full child list is part of the fragment.
    Internal { label: String, children: Vec<FragNode> },
    /// A frontier nonterminal, open for substitution.
    Site(String),
    /// A frontier word.
    Word(String),
}

impl FragNode {
    pub fn label(&self) -> &str {
        match self {
            FragNode::Internal { label, .. } | FragNode::Site(label) | FragNode::Word(label) => label,
        }
    }

    fn depth(&self) -> usize {
        match self {
            FragNode::Internal { children, .. } => 1 + children.iter().map(FragNode::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    fn frontier<'a>(&'a self, out: &mut Vec<FrontierItem<'a>>) {
        match self {
            FragNode::Internal { children, .. } => children.iter().for_each(|c| c.frontier(out)),
            FragNode::Site(l) => out.push(FrontierItem::Site(l)),
            FragNode::Word(w) => out.push(FrontierItem::Word(w)),
        }
    }

    fn write_key(&self, out: &mut String) {
        match self {
            FragNode::Internal { label, children } => {
                out.push('(');
                out.push_str(label);
                for c in children {
                    out.push(' ');
                    c.write_key(out);
                }
                out.push(')');
            }
            FragNode::Site(label) => {
                out.push('(');
                out.push_str(label);
                out.push(')');
            }
            FragNode::Word(w) => out.push_str(w),
        }
    }

    fn from_tree(tree: &Tree) -> FragNode {
        match tree {
            Tree::Leaf(w) => FragNode::Word(w.clone()),
            Tree::Node { label, children } => FragNode::Internal {
                label: label.clone(),
                children: children.iter().map(FragNode::from_tree).collect(),
            },
        }
    }

    fn to_tree(&self) -> Option<Tree> {
        match self {
            FragNode::Internal { label, children } => Some(Tree::Node {
                label: label.clone(),
                children: children.iter().map(FragNode::to_tree).collect::<Option<_>>()?,
            }),
            FragNode::Word(w) => Some(Tree::Leaf(w.clone())),
            FragNode::Site(_) => None,
        }
    }
}

/// One element of a fragment's frontier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrontierItem<'a> {
    Site(&'a str),
    Word(&'a str),
}

/// A connected subtree of a corpus tree. The root is always an internal node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fragment {
    root: FragNode,
}

/// Canonical text form of a fragment. Frontier nonterminals are written as
/// childless brackets, `(NP)`, which no tree node can be.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FragmentKey(pub String);

impl fmt::Display for FragmentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Fragment {
    /// Wraps an internal node as a fragment; `None` for sites and words.
    pub fn new(root: FragNode) -> Option<Fragment> {
        match root {
            FragNode::Internal { .. } => Some(Fragment { root }),
            _ => None,
        }
    }

    /// The whole tree as one fragment.
    pub fn from_tree(tree: &Tree) -> Fragment {
        Fragment { root: FragNode::from_tree(tree) }
    }

    /// The single-level fragment at `node`: every child cut, or the word for
    /// a preterminal.
    pub fn depth_one(node: &Tree) -> Fragment {
        let children = node
            .children()
            .iter()
            .map(|c| match c {
                Tree::Leaf(w) => FragNode::Word(w.clone()),
                Tree::Node { label, .. } => FragNode::Site(label.clone()),
            })
            .collect();
        Fragment { root: FragNode::Internal { label: node.label().to_string(), children } }
    }

    pub fn root(&self) -> &FragNode {
        &self.root
    }

    pub fn root_label(&self) -> &str {
        self.root.label()
    }

    /// Edges on the longest root-to-frontier path.
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn frontier(&self) -> Vec<FrontierItem<'_>> {
        let mut out = Vec::new();
        self.root.frontier(&mut out);
        out
    }

    pub fn frontier_word_count(&self) -> usize {
        self.frontier().iter().filter(|f| matches!(f, FrontierItem::Word(_))).count()
    }

    pub fn site_count(&self) -> usize {
        self.frontier().iter().filter(|f| matches!(f, FrontierItem::Site(_))).count()
    }

    pub fn is_lexicalized(&self) -> bool {
        self.frontier_word_count() > 0
    }

    /// The fragment as a tree, if it has no open substitution sites.
    pub fn to_tree(&self) -> Option<Tree> {
        self.root.to_tree()
    }

    pub fn key(&self) -> FragmentKey {
        let mut s = String::new();
        self.root.write_key(&mut s);
        FragmentKey(s)
    }

    /// Parses the canonical key form back into a fragment.
    pub fn parse(key: &str) -> Result<Fragment, FragmentError> {
        let bad = |reason: &str| FragmentError::MalformedKey { key: key.to_string(), reason: reason.to_string() };
        let mut toks = Vec::new();
        let mut atom = String::new();
        for c in key.chars() {
            if c == '(' || c == ')' || c.is_whitespace() {
                if !atom.is_empty() {
                    toks.push(std::mem::take(&mut atom));
                }
                if !c.is_whitespace() {
                    toks.push(c.to_string());
                }
            } else {
                atom.push(c);
            }
        }
        if !atom.is_empty() {
            toks.push(atom);
        }
        fn node(toks: &[String], at: &mut usize) -> Result<FragNode, &'static str> {
            match toks.get(*at).map(String::as_str) {
                Some("(") => {
                    *at += 1;
                    let label = match toks.get(*at).map(String::as_str) {
                        Some("(") | Some(")") | None => return Err("missing label"),
                        Some(l) => l.to_string(),
                    };
                    *at += 1;
                    let mut children = Vec::new();
                    loop {
                        match toks.get(*at).map(String::as_str) {
                            None => return Err("unclosed bracket"),
                            Some(")") => {
                                *at += 1;
                                break;
                            }
                            _ => children.push(node(toks, at)?),
                        }
                    }
                    if children.is_empty() {
                        return Ok(FragNode::Site(label));
                    }
                    if children.len() > 1 && children.iter().any(|c| matches!(c, FragNode::Word(_))) {
                        return Err("word with siblings");
                    }
                    Ok(FragNode::Internal { label, children })
                }
                Some(")") => Err("unexpected ')'"),
                Some(w) => {
                    *at += 1;
                    Ok(FragNode::Word(w.to_string()))
                }
                None => Err("empty input"),
            }
        }
        let mut at = 0;
        let root = node(&toks, &mut at).map_err(bad)?;
        if at != toks.len() {
            return Err(bad("trailing input"));
        }
        Fragment::new(root).ok_or_else(|| bad("root must have children"))
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key().0)
    }
}

/// Number of fragments rooted at each node, summed over the tree.
pub fn count_fragments(tree: &Tree) -> u128 {
    fn rooted(t: &Tree, total: &mut u128) -> u128 {
        match t {
            Tree::Leaf(_) => 0,
            Tree::Node { children, .. } => {
                let mut f: u128 = 1;
                for c in children {
                    f = f.saturating_mul(1u128.saturating_add(rooted(c, total)));
                }
                *total = total.saturating_add(f);
                f
            }
        }
    }
    let mut total = 0;
    rooted(tree, &mut total);
    total
}

fn rooted_at(node: &Tree) -> Vec<FragNode> {
    let Tree::Node { label, children } = node else {
        return Vec::new();
    };
    let mut combos: Vec<Vec<FragNode>> = vec![Vec::with_capacity(children.len())];
    for c in children {
        let options: Vec<FragNode> = match c {
            Tree::Leaf(w) => vec![FragNode::Word(w.clone())],
            Tree::Node { label, .. } => {
                let mut opts = vec![FragNode::Site(label.clone())];
                opts.extend(rooted_at(c));
                opts
            }
        };
        let mut next = Vec::with_capacity(combos.len() * options.len());
        for prefix in &combos {
            for o in &options {
                let mut v = prefix.clone();
                v.push(o.clone());
                next.push(v);
            }
        }
        combos = next;
    }
    combos
        .into_iter()
        .map(|children| FragNode::Internal { label: label.clone(), children })
        .collect()
}

/// Every fragment of `tree`, one per (root node, frontier cut) pair.
pub fn extract_all(tree: &Tree) -> Result<Vec<Fragment>, FragmentError> {
    extract_all_capped(tree, DEFAULT_EXTRACTION_CAP)
}

pub fn extract_all_capped(tree: &Tree, cap: u128) -> Result<Vec<Fragment>, FragmentError> {
    let count = count_fragments(tree);
    if count > cap {
        return Err(FragmentError::Overflow { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    for node in tree.internal_nodes() {
        out.extend(rooted_at(node).into_iter().map(|root| Fragment { root }));
    }
    Ok(out)
}

/// The single-level fragment of every internal node of every tree.
pub fn depth_one_fragments(treebank: &Treebank) -> Vec<Fragment> {
    treebank
        .trees
        .iter()
        .flat_map(|t| t.internal_nodes().into_iter().map(Fragment::depth_one))
        .collect()
}

struct Sampler<'a> {
    rng: ChaCha8Rng,
    trees: &'a [Tree],
    nodes: Vec<Vec<&'a Tree>>,
}

impl<'a> Sampler<'a> {
    fn grow(&mut self, root: &'a Tree, target: usize) -> Option<Fragment> {
        let mut expanded: HashSet<*const Tree> = HashSet::new();
        expanded.insert(root as *const Tree);
        let mut sites: Vec<(&'a Tree, usize)> = Vec::new();
        let open = |node: &'a Tree, depth: usize, sites: &mut Vec<(&'a Tree, usize)>| {
            for c in node.children() {
                if !c.is_leaf() {
                    sites.push((c, depth + 1));
                }
            }
        };
        open(root, 0, &mut sites);
        let mut depth = 1;
        while depth < target {
            if sites.is_empty() {
                return None;
            }
            let i = self.rng.random_range(0..sites.len());
            let (node, d) = sites.remove(i);
            expanded.insert(node as *const Tree);
            open(node, d, &mut sites);
            depth = depth.max(d + 1);
        }
        let mut pending: std::collections::VecDeque<(&'a Tree, usize)> =
            sites.into_iter().filter(|&(_, d)| d < target).collect();
        while let Some((node, d)) = pending.pop_front() {
            if self.rng.random_bool(0.5) {
                expanded.insert(node as *const Tree);
                for c in node.children() {
                    if !c.is_leaf() && d + 1 < target {
                        pending.push_back((c, d + 1));
                    }
                }
            }
        }
        fn build(t: &Tree, expanded: &HashSet<*const Tree>) -> FragNode {
            match t {
                Tree::Leaf(w) => FragNode::Word(w.clone()),
                Tree::Node { label, children } => {
                    if expanded.contains(&(t as *const Tree)) {
                        FragNode::Internal {
                            label: label.clone(),
                            children: children.iter().map(|c| build(c, expanded)).collect(),
                        }
                    } else {
                        FragNode::Site(label.clone())
                    }
                }
            }
        }
        Some(Fragment { root: build(root, &expanded) })
    }
}

/// Draws `count` fragments of exactly `depth` from random nodes of random
/// trees. Deterministic for a given seed.
pub fn sample_fragments(
    treebank: &Treebank,
    depth: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Fragment>, FragmentError> {
    sample_fragments_with_restarts(treebank, depth, count, seed, DEFAULT_MAX_RESTARTS)
}

pub fn sample_fragments_with_restarts(
    treebank: &Treebank,
    depth: usize,
    count: usize,
    seed: u64,
    max_restarts: usize,
) -> Result<Vec<Fragment>, FragmentError> {
    if depth < 2 {
        return Err(FragmentError::InvalidRequest(format!("sampling depth must be at least 2, got {depth}")));
    }
    if count == 0 {
        return Err(FragmentError::InvalidRequest("sample count must be at least 1".into()));
    }
    if treebank.trees.is_empty() {
        return Err(FragmentError::DepthUnreachable { depth, restarts: 0 });
    }
    let mut s = Sampler {
        rng: ChaCha8Rng::seed_from_u64(seed),
        trees: &treebank.trees,
        nodes: treebank.trees.iter().map(Tree::internal_nodes).collect(),
    };
    let mut out = Vec::with_capacity(count);
    let mut failures = 0;
    while out.len() < count {
        let t = s.rng.random_range(0..s.trees.len());
        let nodes = &s.nodes[t];
        let node = nodes[s.rng.random_range(0..nodes.len())];
        let grown = if node.height() >= depth { s.grow(node, depth) } else { None };
        match grown {
            Some(f) => {
                debug_assert_eq!(f.depth(), depth);
                out.push(f);
                failures = 0;
            }
            None => {
                failures += 1;
                if failures >= max_restarts {
                    return Err(FragmentError::DepthUnreachable { depth, restarts: failures });
                }
            }
        }
    }
    Ok(out)
}

/// Follows head children from the root; the word reached, if the head path
/// stays inside the fragment.
pub fn headword<'a>(f: &'a Fragment, rules: &HeadRuleTable) -> Option<&'a str> {
    let mut node = &f.root;
    loop {
        match node {
            FragNode::Word(w) => return Some(w),
            FragNode::Site(_) => return None,
            FragNode::Internal { label, children } => {
                let labels: Vec<&str> = children.iter().map(FragNode::label).collect();
                node = &children[rules.head_child(label, &labels)];
            }
        }
    }
}

/// Frontier words that are not the root's headword.
pub fn nonheadword_count(f: &Fragment, rules: &HeadRuleTable) -> usize {
    let words = f.frontier_word_count();
    words - usize::from(headword(f, rules).is_some())
}

/// Upper bounds that decide which fragments enter a model. `None` is
/// unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RestrictionSet {
    pub max_depth: Option<usize>,
    pub max_frontier_words: Option<usize>,
    pub max_unlexicalized_depth: Option<usize>,
    pub max_nonheadwords: Option<usize>,
    pub sample_per_depth: Option<usize>,
}

impl Default for RestrictionSet {
    fn default() -> Self {
        RestrictionSet {
            max_depth: Some(14),
            max_frontier_words: Some(12),
            max_unlexicalized_depth: Some(6),
            max_nonheadwords: None,
            sample_per_depth: Some(400_000),
        }
    }
}

fn within(value: usize, bound: Option<usize>) -> bool {
    bound.is_none_or(|b| value <= b)
}

fn bound_le(a: Option<usize>, b: Option<usize>) -> bool {
    match (a, b) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(a), Some(b)) => a <= b,
    }
}

impl RestrictionSet {
    pub fn unbounded() -> Self {
        RestrictionSet {
            max_depth: None,
            max_frontier_words: None,
            max_unlexicalized_depth: None,
            max_nonheadwords: None,
            sample_per_depth: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("max_depth", self.max_depth),
            ("max_unlexicalized_depth", self.max_unlexicalized_depth),
            ("sample_per_depth", self.sample_per_depth),
        ] {
            if v == Some(0) {
                return Err(format!("{name} must be at least 1"));
            }
        }
        Ok(())
    }

    /// True when every filtering bound of `self` is at most the matching
    /// bound of `other`.
    pub fn is_tighter_or_equal(&self, other: &RestrictionSet) -> bool {
        bound_le(self.max_depth, other.max_depth)
            && bound_le(self.max_frontier_words, other.max_frontier_words)
            && bound_le(self.max_unlexicalized_depth, other.max_unlexicalized_depth)
            && bound_le(self.max_nonheadwords, other.max_nonheadwords)
    }

    pub fn describe(&self) -> String {
        let b = |v: Option<usize>| v.map_or_else(|| "inf".to_string(), |v| v.to_string());
        format!(
            "max_depth={} max_frontier_words={} max_unlex_depth={} max_nonheadwords={} sample_per_depth={}",
            b(self.max_depth),
            b(self.max_frontier_words),
            b(self.max_unlexicalized_depth),
            b(self.max_nonheadwords),
            b(self.sample_per_depth)
        )
    }

    /// Inverse of [`RestrictionSet::describe`].
    pub fn from_description(s: &str) -> Result<RestrictionSet, String> {
        let mut r = RestrictionSet::unbounded();
        for part in s.split_whitespace() {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("bad restriction field {part:?}"))?;
            let v = parse_bound(v)?;
            match k {
                "max_depth" => r.max_depth = v,
                "max_frontier_words" => r.max_frontier_words = v,
                "max_unlex_depth" => r.max_unlexicalized_depth = v,
                "max_nonheadwords" => r.max_nonheadwords = v,
                "sample_per_depth" => r.sample_per_depth = v,
                _ => return Err(format!("unknown restriction field {k:?}")),
            }
        }
        Ok(r)
    }
}

/// Parses a bound: a non-negative integer, or `inf`/`unbounded`/`none`.
pub fn parse_bound(s: &str) -> Result<Option<usize>, String> {
    match s.trim() {
        "inf" | "unbounded" | "none" | "unrestricted" => Ok(None),
        v => v.parse().map(Some).map_err(|_| format!("invalid bound {v:?}")),
    }
}

/// Whether `f` satisfies every bound in `r`.
pub fn passes(f: &Fragment, r: &RestrictionSet, rules: &HeadRuleTable) -> bool {
    let depth = f.depth();
    let words = f.frontier_word_count();
    within(depth, r.max_depth)
        && within(words, r.max_frontier_words)
        && (words >= 1 || within(depth, r.max_unlexicalized_depth))
        && (r.max_nonheadwords.is_none() || within(nonheadword_count(f, rules), r.max_nonheadwords))
}

/// TSV dump of a fragment multiset: `count<TAB>root<TAB>key`, ordered by root
/// label then key.
pub fn dump_fragments<'a>(fragments: impl IntoIterator<Item = &'a Fragment>) -> String {
    let mut counts: BTreeMap<(String, FragmentKey), u64> = BTreeMap::new();
    for f in fragments {
        *counts.entry((f.root_label().to_string(), f.key())).or_insert(0) += 1;
    }
    let mut out = String::new();
    for ((root, key), n) in counts {
        out.push_str(&format!("{n}\t{root}\t{key}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::read_trees;

    fn tree(s: &str) -> Tree {
        read_trees(s).unwrap().remove(0)
    }

    fn frag(s: &str) -> Fragment {
        Fragment::parse(s).unwrap()
    }

    fn toy_rules() -> HeadRuleTable {
        HeadRuleTable::parse("default left\nS left VP\nVP left V\n").unwrap()
    }

    #[test]
    fn extract_all_counts_toy_tree() {
        let t = tree("(S (NP john) (VP (V likes) (NP mary)))");
        let all = extract_all(&t).unwrap();
        assert_eq!(all.len(), 17);
        assert_eq!(count_fragments(&t), 17);
        assert_eq!(all.iter().filter(|f| f.root_label() == "S").count(), 10);
        assert_eq!(all.iter().filter(|f| f.root_label() == "VP").count(), 4);
    }

    #[test]
    fn extract_all_preterminal() {
        let all = extract_all(&tree("(NP mary)")).unwrap();
        assert_eq!(all, vec![frag("(NP mary)")]);
    }

    #[test]
    fn extract_all_lists_binary_tree() {
        let all = extract_all(&tree("(X (A a) (B b))")).unwrap();
        let keys: HashSet<String> = all.iter().map(|f| f.key().0).collect();
        let expect: HashSet<String> = ["(X (A) (B))", "(X (A a) (B))", "(X (A) (B b))", "(X (A a) (B b))", "(A a)", "(B b)"]
            .into_iter()
            .map(String::from)
            .collect();
        assert_eq!(all.len(), 6);
        assert_eq!(keys, expect);
    }

    #[test]
    fn extract_all_overflow() {
        let t = tree("(S (NP john) (VP (V likes) (NP mary)))");
        assert_eq!(extract_all_capped(&t, 16), Err(FragmentError::Overflow { count: 17, cap: 16 }));
    }

    #[test]
    fn depth_examples() {
        assert_eq!(frag("(S (NP) (VP))").depth(), 1);
        assert_eq!(frag("(S (NP john) (VP (V likes) (NP mary)))").depth(), 3);
        assert_eq!(frag("(S (NP john) (VP))").depth(), 2);
    }

    #[test]
    fn headword_examples() {
        let r = toy_rules();
        assert_eq!(headword(&frag("(S (NP john) (VP (V likes) (NP mary)))"), &r), Some("likes"));
        assert_eq!(headword(&frag("(S (NP john) (VP))"), &r), None);
        assert_eq!(headword(&frag("(V likes)"), &r), Some("likes"));
    }

    #[test]
    fn nonheadword_examples() {
        let r = toy_rules();
        assert_eq!(nonheadword_count(&frag("(S (NP john) (VP (V likes) (NP mary)))"), &r), 2);
        assert_eq!(nonheadword_count(&frag("(S (NP john) (VP))"), &r), 1);
        assert_eq!(nonheadword_count(&frag("(S (NP) (VP))"), &r), 0);
    }

    fn chain(label: &str, depth: usize, leaf: Option<&str>) -> FragNode {
        // a unary chain of `depth` edges, ending in a word or a site
        let mut node = match leaf {
            Some(w) => FragNode::Word(w.to_string()),
            None => FragNode::Site("Z".to_string()),
        };
        for _ in 0..depth {
            node = FragNode::Internal { label: label.to_string(), children: vec![node] };
        }
        node
    }

    #[test]
    fn passes_boundary_cases() {
        let r = RestrictionSet::default();
        let rules = HeadRuleTable::collins();
        let unlex7 = Fragment::new(chain("X", 7, None)).unwrap();
        let unlex6 = Fragment::new(chain("X", 6, None)).unwrap();
        assert!(!passes(&unlex7, &r, &rules));
        assert!(passes(&unlex6, &r, &rules));
        let words = |n: usize| {
            let children = (0..n).map(|i| FragNode::Internal { label: "W".into(), children: vec![FragNode::Word(format!("w{i}"))] }).collect();
            Fragment::new(FragNode::Internal { label: "S".into(), children }).unwrap()
        };
        assert!(passes(&words(12), &r, &rules));
        assert!(!passes(&words(13), &r, &rules));
        assert!(passes(&frag("(NN dog)"), &r, &rules));
    }

    #[test]
    fn key_distinguishes_sites() {
        let a = frag("(S (NP) (VP))");
        let b = frag("(S (NP (N x)) (VP))");
        assert_ne!(a.key(), b.key());
        assert_eq!(frag("(V likes)").key().0, "(V likes)");
        let t1 = tree("(S (NP john) (VP (V sleeps)))");
        let t2 = tree("(S (NP mary) (VP (V sleeps)))");
        let k1: HashSet<_> = extract_all(&t1).unwrap().iter().map(Fragment::key).collect();
        let k2: HashSet<_> = extract_all(&t2).unwrap().iter().map(Fragment::key).collect();
        assert!(k1.contains(&FragmentKey("(VP (V sleeps))".into())));
        assert!(k2.contains(&FragmentKey("(VP (V sleeps))".into())));
    }

    #[test]
    fn malformed_keys_rejected() {
        assert!(Fragment::parse("(NP)").is_err());
        assert!(Fragment::parse("(S (A a) b)").is_err());
        assert!(Fragment::parse("(S (A a)").is_err());
        assert!(Fragment::parse("word").is_err());
    }

    fn toy_bank() -> Treebank {
        Treebank::from_trees(
            read_trees("(S (NP john) (VP (V likes) (NP mary)))\n(S (NP peter) (VP (V hates) (NP susan)))").unwrap(),
        )
    }

    #[test]
    fn sampling_yields_requested_depth() {
        let tb = toy_bank();
        let s = sample_fragments(&tb, 2, 1000, 7).unwrap();
        assert_eq!(s.len(), 1000);
        assert!(s.iter().all(|f| f.depth() == 2));
        let all: HashSet<FragmentKey> =
            tb.trees.iter().flat_map(|t| extract_all(t).unwrap()).map(|f| f.key()).collect();
        assert!(s.iter().all(|f| all.contains(&f.key())));
    }

    #[test]
    fn sampling_is_reproducible() {
        let tb = toy_bank();
        assert_eq!(sample_fragments(&tb, 3, 200, 11).unwrap(), sample_fragments(&tb, 3, 200, 11).unwrap());
        assert_ne!(sample_fragments(&tb, 2, 200, 11).unwrap(), sample_fragments(&tb, 2, 200, 12).unwrap());
    }

    #[test]
    fn sampling_impossible_depth() {
        let err = sample_fragments_with_restarts(&toy_bank(), 15, 1, 0, 1000).unwrap_err();
        assert!(matches!(err, FragmentError::DepthUnreachable { depth: 15, .. }));
        assert!(sample_fragments(&toy_bank(), 1, 5, 0).is_err());
    }

    #[test]
    fn sampling_reaches_every_depth_three_fragment() {
        let tb = toy_bank();
        let expect: HashSet<FragmentKey> = tb
            .trees
            .iter()
            .flat_map(|t| extract_all(t).unwrap())
            .filter(|f| f.depth() == 3)
            .map(|f| f.key())
            .collect();
        let got: HashSet<FragmentKey> = sample_fragments(&tb, 3, 4000, 3).unwrap().iter().map(Fragment::key).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn dump_merges_duplicates() {
        let fs = [frag("(NP john)"), frag("(NP john)"), frag("(V x)")];
        assert_eq!(dump_fragments(&fs), "2\tNP\t(NP john)\n1\tV\t(V x)\n");
    }

    #[test]
    fn restriction_description_round_trip() {
        let r = RestrictionSet::default();
        assert_eq!(RestrictionSet::from_description(&r.describe()).unwrap(), r);
        assert!(RestrictionSet::unbounded().is_tighter_or_equal(&RestrictionSet::unbounded()));
        assert!(r.is_tighter_or_equal(&RestrictionSet::unbounded()));
        assert!(!RestrictionSet::unbounded().is_tighter_or_equal(&r));
    }
}
