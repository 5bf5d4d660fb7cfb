//! Treebank to model: fragment collection per depth, filtering, optional
//! smoothing and the unknown-word guesser.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fragments::{depth_one_fragments, extract_all, sample_fragments, Fragment, FragmentError, FragmentKey, RestrictionSet};
use crate::headrules::HeadRuleTable;
use crate::model::{build_model_counted, good_turing_adjust, CorpusStats, FragmentModel, ModelError};
use crate::treebank::{write_bracketed, Treebank};
use crate::unknown::{train_unknown_model, UnknownWordError};

pub const DEFAULT_UNKNOWN_THRESHOLD: u64 = 5;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training treebank is empty")]
    EmptyTreebank,
    #[error("invalid restriction: {0}")]
    Restriction(String),
    #[error(transparent)]
    Fragment(#[from] FragmentError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Unknown(#[from] UnknownWordError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub restriction: RestrictionSet,
    pub head_rules: HeadRuleTable,
    pub seed: u64,
    pub smoothing: bool,
    /// Rarity threshold for the unknown-word guesser; `None` disables it.
    pub unknown_threshold: Option<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            restriction: RestrictionSet::default(),
            head_rules: HeadRuleTable::collins(),
            seed: 0,
            smoothing: false,
            unknown_threshold: Some(DEFAULT_UNKNOWN_THRESHOLD),
        }
    }
}

/// Fragments of one depth with their multiplicities, in key order.
pub type DepthBag = Vec<(Fragment, u64)>;

fn merge(fragments: impl IntoIterator<Item = Fragment>) -> DepthBag {
    let mut counts: BTreeMap<FragmentKey, (Fragment, u64)> = BTreeMap::new();
    for f in fragments {
        counts.entry(f.key()).or_insert_with(|| (f, 0)).1 += 1;
    }
    counts.into_values().collect()
}

/// Seed used for sampling at `depth`, so depths are independent of each
/// other and of the order they are drawn in.
pub fn depth_seed(seed: u64, depth: usize) -> u64 {
    seed ^ (depth as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Hex SHA-256 of the bracketed treebank, identifying it in caches.
pub fn treebank_digest(tb: &Treebank) -> String {
    let mut h = Sha256::new();
    for t in &tb.trees {
        h.update(write_bracketed(t).as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Largest fragment depth the treebank supports.
pub fn max_height(tb: &Treebank) -> usize {
    tb.trees.iter().map(|t| t.height()).max().unwrap_or(0)
}

/// Collects the fragment bags for depths `1..=max_depth`, capped at the
/// treebank's height. Depth 1 is always exhaustive; deeper levels are sampled
/// `sample_per_depth` times, or extracted exhaustively when that is `None`.
pub fn collect_fragments(
    tb: &Treebank,
    max_depth: Option<usize>,
    sample_per_depth: Option<usize>,
    seed: u64,
) -> Result<BTreeMap<usize, DepthBag>, TrainError> {
    if tb.is_empty() {
        return Err(TrainError::EmptyTreebank);
    }
    let height = max_height(tb);
    let top = max_depth.map_or(height, |d| d.min(height));
    if let Some(d) = max_depth.filter(|&d| d > height) {
        log::info!("depth bound {d} exceeds the deepest tree ({height}); deeper levels are empty");
    }
    let mut bags = BTreeMap::new();
    match sample_per_depth {
        None => {
            let per_tree: Vec<Vec<Fragment>> = tb
                .trees
                .par_iter()
                .map(|t| extract_all(t).map(|v| v.into_iter().filter(|f| f.depth() <= top).collect()))
                .collect::<Result<_, _>>()?;
            let mut by_depth: BTreeMap<usize, Vec<Fragment>> = BTreeMap::new();
            for f in per_tree.into_iter().flatten() {
                by_depth.entry(f.depth()).or_default().push(f);
            }
            for (d, fs) in by_depth {
                bags.insert(d, merge(fs));
            }
        }
        Some(n) => {
            bags.insert(1, merge(depth_one_fragments(tb)));
            let sampled: Vec<(usize, DepthBag)> = (2..=top)
                .into_par_iter()
                .map(|d| sample_fragments(tb, d, n, depth_seed(seed, d)).map(|fs| (d, merge(fs))))
                .collect::<Result<_, _>>()?;
            bags.extend(sampled);
        }
    }
    for (d, bag) in &bags {
        log::debug!("depth {d}: {} distinct fragments, {} tokens", bag.len(), bag.iter().map(|b| b.1).sum::<u64>());
    }
    Ok(bags)
}

/// Builds a model from already collected bags, filtering by
/// `config.restriction`.
pub fn model_from_bags<'a>(
    tb: &Treebank,
    bags: impl IntoIterator<Item = &'a DepthBag>,
    config: &TrainConfig,
) -> Result<FragmentModel, TrainError> {
    config.restriction.validate().map_err(TrainError::Restriction)?;
    let fragments = bags.into_iter().flat_map(|b| b.iter().cloned());
    let mut model = build_model_counted(fragments, config.restriction, config.head_rules.clone())?;
    if config.smoothing {
        model = good_turing_adjust(&model)?;
    }
    model.set_corpus(CorpusStats::from_treebank(tb));
    if let Some(threshold) = config.unknown_threshold {
        match train_unknown_model(tb, threshold) {
            Ok(u) => model.set_unknown_model(Some(u)),
            Err(UnknownWordError::NoRareWords(t)) => {
                log::warn!("no training word occurs at most {t} times; unknown words will not be parsed");
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(model)
}

/// Full training run.
pub fn train(tb: &Treebank, config: &TrainConfig) -> Result<FragmentModel, TrainError> {
    config.restriction.validate().map_err(TrainError::Restriction)?;
    let r = &config.restriction;
    let bags = collect_fragments(tb, r.max_depth, r.sample_per_depth, config.seed)?;
    model_from_bags(tb, bags.values(), config)
}

/// Memoizes fragment bags by (treebank digest, depth, seed, sample size) so a
/// sweep over other dimensions samples each depth once.
#[derive(Debug, Default)]
pub struct FragmentCache {
    bags: HashMap<(String, usize, u64, Option<usize>), Arc<DepthBag>>,
}

impl FragmentCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    /// Bags for depths `1..=max_depth` (capped at the treebank height),
    /// computing only the missing ones.
    pub fn bags(
        &mut self,
        tb: &Treebank,
        digest: &str,
        max_depth: Option<usize>,
        sample_per_depth: Option<usize>,
        seed: u64,
    ) -> Result<Vec<Arc<DepthBag>>, TrainError> {
        let top = max_depth.map_or(max_height(tb), |d| d.min(max_height(tb)));
        let key = |d: usize| (digest.to_string(), d, seed, sample_per_depth);
        let missing = (1..=top).any(|d| !self.bags.contains_key(&key(d)));
        if missing {
            // Exhaustive extraction yields every depth at once; sampling is
            // per depth, so only the absent levels are drawn.
            let fresh = if let Some(n) = sample_per_depth {
                let mut fresh = BTreeMap::new();
                if !self.bags.contains_key(&key(1)) {
                    fresh.insert(1, merge(depth_one_fragments(tb)));
                }
                let todo: Vec<usize> = (2..=top).filter(|&d| !self.bags.contains_key(&key(d))).collect();
                let drawn: Vec<(usize, DepthBag)> = todo
                    .into_par_iter()
                    .map(|d| sample_fragments(tb, d, n, depth_seed(seed, d)).map(|fs| (d, merge(fs))))
                    .collect::<Result<_, _>>()?;
                fresh.extend(drawn);
                fresh
            } else {
                collect_fragments(tb, Some(top), None, seed)?
            };
            for d in 1..=top {
                self.bags.entry(key(d)).or_insert_with(|| Arc::new(fresh.get(&d).cloned().unwrap_or_default()));
            }
        }
        Ok((1..=top).map(|d| Arc::clone(&self.bags[&key(d)])).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::read_bracketed;

    fn toy() -> Treebank {
        read_bracketed("(S (NP john) (VP (V likes) (NP mary)))\n(S (NP peter) (VP (V hates) (NP susan)))").unwrap()
    }

    #[test]
    fn exhaustive_collection_matches_extraction() {
        let bags = collect_fragments(&toy(), None, None, 0).unwrap();
        let tokens: u64 = bags.values().flatten().map(|b| b.1).sum();
        assert_eq!(tokens, 2 * 17);
        assert_eq!(bags.keys().copied().collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn sampled_collection_is_seeded() {
        let a = collect_fragments(&toy(), Some(3), Some(50), 7).unwrap();
        let b = collect_fragments(&toy(), Some(3), Some(50), 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[&2].iter().map(|x| x.1).sum::<u64>(), 50);
        // depths beyond the tallest tree are skipped
        let c = collect_fragments(&toy(), Some(9), Some(5), 7).unwrap();
        assert_eq!(c.keys().max(), Some(&3));
    }

    #[test]
    fn train_toy_model() {
        let cfg = TrainConfig {
            restriction: RestrictionSet::unbounded(),
            unknown_threshold: Some(1),
            ..TrainConfig::default()
        };
        let m = train(&toy(), &cfg).unwrap();
        assert_eq!(m.roots()["S"].raw_total, 20);
        assert!(m.unknown_model().is_some());
        assert!(m.corpus().start_labels.contains("S"));
    }

    #[test]
    fn cache_reuses_bags() {
        let tb = toy();
        let digest = treebank_digest(&tb);
        let mut cache = FragmentCache::new();
        let a = cache.bags(&tb, &digest, Some(2), Some(20), 1).unwrap();
        assert_eq!(cache.len(), 2);
        let b = cache.bags(&tb, &digest, Some(3), Some(20), 1).unwrap();
        assert_eq!(cache.len(), 3);
        assert!(Arc::ptr_eq(&a[1], &b[1]));
        let direct = collect_fragments(&tb, Some(3), Some(20), 1).unwrap();
        assert_eq!(*b[2], direct[&3]);
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(treebank_digest(&toy()), treebank_digest(&toy()));
        assert_ne!(treebank_digest(&toy()), treebank_digest(&read_bracketed("(S (X x))").unwrap()));
    }
}
