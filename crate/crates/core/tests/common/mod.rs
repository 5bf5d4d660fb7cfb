//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use dop::treebank::{read_trees, Tree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOY: &str = "(S (NP john) (VP (V likes) (NP mary)))\n(S (NP peter) (VP (V hates) (NP susan)))";

pub fn tree(s: &str) -> Tree {
    let mut v = read_trees(s).unwrap();
    assert_eq!(v.len(), 1, "expected one tree in {s:?}");
    v.remove(0)
}

/// Random tree with at most `max_nodes` internal nodes over a small label and
/// word alphabet. Every node has a label; words hang only under preterminals.
pub fn random_tree(rng: &mut ChaCha8Rng, max_nodes: usize) -> Tree {
    const LABELS: [&str; 4] = ["A", "B", "C", "D"];
    const WORDS: [&str; 3] = ["x", "y", "z"];
    fn grow(rng: &mut ChaCha8Rng, budget: &mut usize) -> Tree {
        *budget -= 1;
        let label = LABELS[rng.random_range(0..LABELS.len())];
        if *budget == 0 || rng.random_bool(0.35) {
            return Tree::preterminal(label, WORDS[rng.random_range(0..WORDS.len())]);
        }
        let want = rng.random_range(1..=3);
        let mut children = Vec::new();
        for _ in 0..want {
            if *budget == 0 {
                break;
            }
            children.push(grow(rng, budget));
        }
        Tree::node(label, children)
    }
    let mut budget = max_nodes;
    grow(rng, &mut budget)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

struct Flat<'a> {
    nodes: Vec<&'a Tree>,
    parent: Vec<Option<usize>>,
}

fn flatten(t: &Tree) -> Flat<'_> {
    let mut f = Flat { nodes: Vec::new(), parent: Vec::new() };
    fn walk<'a>(t: &'a Tree, parent: Option<usize>, f: &mut Flat<'a>) {
        if t.is_leaf() {
            return;
        }
        let me = f.nodes.len();
        f.nodes.push(t);
        f.parent.push(parent);
        for c in t.children() {
            walk(c, Some(me), f);
        }
    }
    walk(t, None, &mut f);
    f
}

fn key_of(t: &Tree, expanded: &dyn Fn(&Tree) -> bool) -> String {
    match t {
        Tree::Leaf(w) => w.clone(),
        Tree::Node { label, children } if expanded(t) => {
            let parts: Vec<String> = children.iter().map(|c| key_of(c, expanded)).collect();
            format!("({label} {})", parts.join(" "))
        }
        Tree::Node { label, .. } => format!("({label})"),
    }
}

/// Every fragment of `t` by brute force: for each root node, each subset of
/// its internal descendants that is closed under taking parents up to the
/// root is one frontier cut. Returns canonical keys.
pub fn naive_fragment_keys(t: &Tree) -> Vec<String> {
    let flat = flatten(t);
    let n = flat.nodes.len();
    let mut keys = Vec::new();
    for root in 0..n {
        let below: Vec<usize> = (0..n)
            .filter(|&d| {
                let mut p = flat.parent[d];
                while let Some(x) = p {
                    if x == root {
                        return true;
                    }
                    p = flat.parent[x];
                }
                false
            })
            .collect();
        assert!(below.len() < 20, "tree too large for brute force");
        for mask in 0u32..(1 << below.len()) {
            let chosen: Vec<usize> = (0..below.len()).filter(|i| mask >> i & 1 == 1).map(|i| below[i]).collect();
            let closed = chosen.iter().all(|&d| {
                let p = flat.parent[d].unwrap();
                p == root || chosen.contains(&p)
            });
            if !closed {
                continue;
            }
            let expanded = |x: &Tree| {
                std::ptr::eq(x, flat.nodes[root]) || chosen.iter().any(|&c| std::ptr::eq(x, flat.nodes[c]))
            };
            keys.push(key_of(flat.nodes[root], &expanded));
        }
    }
    keys
}

/// Context-free rewrite `lhs -> rhs` of every internal node, as a key in the
/// fragment notation, with its relative frequency among same-lhs rewrites.
pub fn rule_relative_frequencies(trees: &[Tree]) -> BTreeMap<String, (u64, u64)> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut lhs_totals: BTreeMap<String, u64> = BTreeMap::new();
    for t in trees {
        let flat = flatten(t);
        for node in flat.nodes {
            let rhs: Vec<String> = node
                .children()
                .iter()
                .map(|c| if c.is_leaf() { c.label().to_string() } else { format!("({})", c.label()) })
                .collect();
            *counts.entry(format!("({} {})", node.label(), rhs.join(" "))).or_insert(0) += 1;
            *lhs_totals.entry(node.label().to_string()).or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .map(|(k, c)| {
            let lhs = k[1..].split(' ').next().unwrap().to_string();
            (k, (c, lhs_totals[&lhs]))
        })
        .collect()
}

/// A named corpus with the sentences to test on.
pub type ToyBank = (&'static str, Vec<Tree>, Vec<Vec<&'static str>>);

/// Small corpora covering ambiguity, unary chains, flat rules, recursion and
/// lexical overlap.
pub fn toy_treebanks() -> Vec<ToyBank> {
    let parse = |s: &str| read_trees(s).unwrap();
    vec![
        (
            "two-sentence",
            parse(TOY),
            vec![vec!["john", "likes", "mary"], vec!["mary", "hates", "john"], vec!["peter", "likes", "susan"]],
        ),
        (
            "pp-attachment",
            parse(
                "(S (NP i) (VP (V saw) (NP (NP (N men)) (PP (P with) (NP (N scopes))))))
                 (S (NP i) (VP (VP (V saw) (NP (N dogs))) (PP (P with) (NP (N scopes)))))",
            ),
            vec![vec!["i", "saw", "dogs", "with", "scopes"], vec!["i", "saw", "men", "with", "scopes"]],
        ),
        (
            "unary-chains",
            parse(
                "(S (VP (V go)))
                 (S (NP (N kim)) (VP (V go)))
                 (S (NP (NP (N kim)) (CC and) (NP (N lee))) (VP (V run)))",
            ),
            vec![vec!["go"], vec!["lee", "go"], vec!["kim", "and", "lee", "go"], vec!["kim", "run"]],
        ),
        (
            "flat-rules",
            parse(
                "(S (NP a) (V b) (NP c) (PP (P d) (NP e)))
                 (S (NP c) (V b) (NP a))
                 (S (NP e) (V b) (NP (NP c) (PP (P d) (NP a))))",
            ),
            vec![vec!["a", "b", "c", "d", "e"], vec!["e", "b", "a"], vec!["c", "b", "c", "d", "a"]],
        ),
        (
            "recursive-np",
            parse(
                "(S (NP (D the) (N cat)) (VP (V sat)))
                 (S (NP (NP (D the) (N dog)) (PP (P of) (NP (D the) (N cat)))) (VP (V ran)))
                 (S (NP (D a) (N dog)) (VP (V sat) (PP (P on) (NP (D the) (N mat)))))
                 (S (NP (N kim)) (VP (V ran)))",
            ),
            vec![vec!["the", "dog", "sat"], vec!["a", "cat", "of", "the", "dog", "ran"], vec!["kim", "sat", "on", "a", "mat"]],
        ),
        (
            "ten-trees",
            parse(
                "(S (NP x) (VP (V a)))
                 (S (NP y) (VP (V b)))
                 (S (NP x) (VP (V a) (NP y)))
                 (S (NP y) (VP (V b) (NP x)))
                 (S (NP z) (VP (V a)))
                 (S (NP x) (VP (V c) (NP z)))
                 (S (NP (D the) (N x)) (VP (V a)))
                 (S (NP z) (VP (V b) (NP (D the) (N y))))
                 (S (NP y) (VP (V c)))
                 (S (NP x) (VP (V b) (NP y)))",
            ),
            vec![vec!["z", "c", "x"], vec!["the", "y", "b", "the", "x"], vec!["y", "a"], vec!["the", "z", "c", "y"]],
        ),
    ]
}
