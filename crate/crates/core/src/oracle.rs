//! Exhaustive derivation enumeration with exact rational probabilities, for
//! checking the chart parser on small instances.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::fragments::{Fragment, FrontierItem};
use crate::model::FragmentModel;
use crate::parser::compose;
use crate::treebank::Tree;

pub const DEFAULT_DERIVATION_CAP: usize = 1_000_000;

/// Derivations longer than this many fragments are reported as an error;
/// only unary cycles produce them on sentence-sized inputs.
pub const MAX_DERIVATION_LENGTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("more than {0} derivations; instance too large for exhaustive enumeration")]
    TooManyDerivations(usize),
    #[error("search exceeded {0} steps; instance too large for exhaustive enumeration")]
    TooManySteps(usize),
    #[error("a derivation exceeded {0} fragments; the grammar has a unary cycle")]
    DerivationTooLong(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleDerivation {
    pub fragment_ids: Vec<usize>,
    pub probability: BigRational,
    pub tree: Tree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeSum {
    pub tree: Tree,
    pub probability: BigRational,
    pub derivations: usize,
    pub best_derivation: BigRational,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OracleReport {
    pub derivations: Vec<OracleDerivation>,
    /// Keyed by bracketed tree.
    pub trees: BTreeMap<String, TreeSum>,
}

impl OracleReport {
    pub fn total_probability(&self) -> BigRational {
        self.trees.values().map(|t| t.probability.clone()).sum()
    }

    /// TSV rows `tree<TAB>probability<TAB>derivations`, by tree.
    pub fn to_tsv(&self) -> String {
        self.trees
            .iter()
            .map(|(b, t)| format!("{b}\t{}\t{}\n", t.probability, t.derivations))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Elem<'a> {
    Word(&'a str),
    Site(&'a str),
}

fn consistent(frontier: &[Elem<'_>], sentence: &[&str]) -> bool {
    if frontier.len() > sentence.len() {
        return false;
    }
    let first_site = frontier.iter().position(|e| matches!(e, Elem::Site(_)));
    let Some(first) = first_site else {
        return frontier.len() == sentence.len()
            && frontier.iter().zip(sentence).all(|(e, w)| *e == Elem::Word(w));
    };
    let prefix_ok = frontier[..first].iter().zip(sentence).all(|(e, w)| *e == Elem::Word(w));
    let last = frontier.iter().rposition(|e| matches!(e, Elem::Site(_))).expect("has a site");
    let tail = &frontier[last + 1..];
    let suffix_ok = tail.iter().rev().zip(sentence.iter().rev()).all(|(e, w)| *e == Elem::Word(w));
    prefix_ok && suffix_ok
}

struct State<'a> {
    frontier: Vec<Elem<'a>>,
    ids: Vec<usize>,
    probability: BigRational,
}

/// Every derivation of `sentence` from the model's start labels.
pub fn enumerate_derivations(model: &FragmentModel, sentence: &[&str], cap: usize) -> Result<OracleReport, OracleError> {
    enumerate_with_budget(model, sentence, cap, cap.saturating_mul(100).max(10_000))
}

/// [`enumerate_derivations`] with an explicit bound on search steps, which
/// also stops unary cycles.
pub fn enumerate_with_budget(
    model: &FragmentModel,
    sentence: &[&str],
    cap: usize,
    max_steps: usize,
) -> Result<OracleReport, OracleError> {
    let mut by_root: BTreeMap<&str, Vec<(usize, Vec<Elem<'_>>)>> = BTreeMap::new();
    for (id, e) in model.entries().iter().enumerate() {
        let frontier = e
            .fragment
            .frontier()
            .into_iter()
            .map(|item| match item {
                FrontierItem::Site(l) => Elem::Site(l),
                FrontierItem::Word(w) => Elem::Word(w),
            })
            .collect();
        by_root.entry(e.fragment.root_label()).or_default().push((id, frontier));
    }
    let starts: BTreeSet<&str> = if model.corpus().start_labels.is_empty() {
        by_root.keys().copied().collect()
    } else {
        model.corpus().start_labels.iter().map(String::as_str).collect()
    };
    let mut report = OracleReport::default();
    if sentence.is_empty() {
        return Ok(report);
    }
    let mut stack: Vec<State<'_>> = starts
        .iter()
        .rev()
        .map(|s| State { frontier: vec![Elem::Site(s)], ids: Vec::new(), probability: BigRational::one() })
        .collect();
    let mut steps = 0;
    while let Some(state) = stack.pop() {
        steps += 1;
        if steps > max_steps {
            return Err(OracleError::TooManySteps(max_steps));
        }
        let Some(p) = state.frontier.iter().position(|e| matches!(e, Elem::Site(_))) else {
            if report.derivations.len() == cap {
                return Err(OracleError::TooManyDerivations(cap));
            }
            report.derivations.push(finish(model, state));
            continue;
        };
        let Elem::Site(label) = state.frontier[p] else { unreachable!() };
        let Some(candidates) = by_root.get(label) else { continue };
        for (id, frontier) in candidates.iter().rev() {
            let mut next = Vec::with_capacity(state.frontier.len() + frontier.len());
            next.extend_from_slice(&state.frontier[..p]);
            next.extend_from_slice(frontier);
            next.extend_from_slice(&state.frontier[p + 1..]);
            if !consistent(&next, sentence) {
                continue;
            }
            if state.ids.len() == MAX_DERIVATION_LENGTH {
                return Err(OracleError::DerivationTooLong(MAX_DERIVATION_LENGTH));
            }
            let mut ids = state.ids.clone();
            ids.push(*id);
            stack.push(State { frontier: next, ids, probability: &state.probability * model.exact_probability(*id) });
        }
    }
    for d in &report.derivations {
        let key = d.tree.to_string();
        let sum = report.trees.entry(key).or_insert_with(|| TreeSum {
            tree: d.tree.clone(),
            probability: BigRational::from_integer(0.into()),
            derivations: 0,
            best_derivation: BigRational::from_integer(0.into()),
        });
        sum.probability += &d.probability;
        sum.derivations += 1;
        if d.probability > sum.best_derivation {
            sum.best_derivation = d.probability.clone();
        }
    }
    Ok(report)
}

fn finish(model: &FragmentModel, state: State<'_>) -> OracleDerivation {
    let mut acc: Fragment = (*model.entry(state.ids[0]).fragment).clone();
    for &id in &state.ids[1..] {
        acc = compose(&acc, &model.entry(id).fragment).expect("enumerated derivations compose");
    }
    OracleDerivation {
        fragment_ids: state.ids,
        probability: state.probability,
        tree: acc.to_tree().expect("complete derivation"),
    }
}

/// The tree with the largest exact probability; ties as in
/// [`crate::parser::most_probable_parse`].
pub fn exact_mpp(report: &OracleReport) -> Option<Tree> {
    report
        .trees
        .iter()
        .max_by(|(ka, a), (kb, b)| {
            a.probability
                .cmp(&b.probability)
                .then_with(|| a.best_derivation.cmp(&b.best_derivation))
                .then_with(|| kb.cmp(ka))
        })
        .map(|(_, t)| t.tree.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragments::{extract_all, RestrictionSet};
    use crate::headrules::HeadRuleTable;
    use crate::model::{build_model, CorpusStats};
    use crate::treebank::{read_trees, Treebank};

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn model_of(text: &str, max_depth: Option<usize>) -> FragmentModel {
        let trees = read_trees(text).unwrap();
        let all = trees.iter().flat_map(|t| extract_all(t).unwrap());
        let r = RestrictionSet { max_depth, ..RestrictionSet::unbounded() };
        let mut m = build_model(all, r, HeadRuleTable::collins()).unwrap();
        m.set_corpus(CorpusStats::from_treebank(&Treebank::from_trees(trees)));
        m
    }

    const TOY: &str = "(S (NP john) (VP (V likes) (NP mary)))\n(S (NP peter) (VP (V hates) (NP susan)))";

    #[test]
    fn corpus_sentence_probability() {
        let m = model_of(TOY, None);
        let r = enumerate_derivations(&m, &["john", "likes", "mary"], DEFAULT_DERIVATION_CAP).unwrap();
        // one tree; every S fragment of the corpus tree combines with the
        // matching VP/NP/V choices
        assert_eq!(r.trees.len(), 1);
        let t = &r.trees["(S (NP john) (VP (V likes) (NP mary)))"];
        assert_eq!(t.derivations, 16);
        // derived by hand: sum over the 10 S-fragments of P(S-frag) times the
        // product of the probabilities of what fills its open sites
        let p_np = q(1, 4);
        let p_v = q(1, 2);
        // VP subtrees of VP(V likes, NP mary): (VP V NP) is shared (2/8), the
        // other three are unique (1/8)
        let vp = q(2, 8) * &p_v * &p_np + q(1, 8) * &p_np + q(1, 8) * &p_v + q(1, 8);
        let s = q(2, 20) * &p_np * &vp // (S NP VP)
            + q(1, 20) * &vp // (S (NP john) VP)
            + q(2, 20) * &p_np * &p_v * &p_np // (S NP (VP V NP))
            + q(1, 20) * &p_v * &p_np // (S (NP john) (VP V NP))
            + q(1, 20) * &p_np * &p_np // (S NP (VP (V likes) NP))
            + q(1, 20) * &p_np * &p_v // (S NP (VP V (NP mary)))
            + q(1, 20) * &p_np // (S (NP john) (VP (V likes) NP))
            + q(1, 20) * &p_v // (S (NP john) (VP V (NP mary)))
            + q(1, 20) * &p_np // (S NP (VP (V likes) (NP mary)))
            + q(1, 20); // whole tree
        assert_eq!(t.probability, s);
        assert_eq!(exact_mpp(&r).unwrap().to_string(), "(S (NP john) (VP (V likes) (NP mary)))");
    }

    #[test]
    fn uncovered_word_has_no_derivations() {
        let m = model_of(TOY, None);
        let r = enumerate_derivations(&m, &["john", "likes", "bob"], DEFAULT_DERIVATION_CAP).unwrap();
        assert!(r.derivations.is_empty());
        assert_eq!(exact_mpp(&r), None);
    }

    #[test]
    fn depth_one_model_has_one_derivation_per_tree() {
        let m = model_of(TOY, Some(1));
        let r = enumerate_derivations(&m, &["mary", "hates", "john"], DEFAULT_DERIVATION_CAP).unwrap();
        assert!(!r.trees.is_empty());
        assert!(r.trees.values().all(|t| t.derivations == 1));
    }

    #[test]
    fn cap_overflow() {
        let m = model_of(TOY, None);
        let err = enumerate_derivations(&m, &["john", "likes", "mary"], 5).unwrap_err();
        assert_eq!(err, OracleError::TooManyDerivations(5));
    }

    #[test]
    fn unary_cycle_is_reported() {
        let m = model_of("(S (S (X x)))", None);
        // S -> S is a cycle; enumeration would never finish without a bound
        let err = enumerate_with_budget(&m, &["x"], 1_000_000, 100).unwrap_err();
        assert_eq!(err, OracleError::TooManySteps(100));
        let err = enumerate_derivations(&m, &["x"], 1_000_000).unwrap_err();
        assert_eq!(err, OracleError::DerivationTooLong(MAX_DERIVATION_LENGTH));
    }

    #[test]
    fn exact_mpp_prefers_larger_sum() {
        let tree = |s: &str| read_trees(s).unwrap().remove(0);
        let mut r = OracleReport::default();
        for (s, p, best) in [("(A (X a))", q(11, 20), q(3, 10)), ("(B (X a))", q(1, 2), q(1, 2))] {
            r.trees.insert(s.into(), TreeSum { tree: tree(s), probability: p, derivations: 1, best_derivation: best });
        }
        assert_eq!(exact_mpp(&r).unwrap().to_string(), "(A (X a))");
        assert_eq!(r.to_tsv(), "(A (X a))\t11/20\t1\n(B (X a))\t1/2\t1\n");
    }
}
