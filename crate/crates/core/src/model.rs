//! Relative-frequency fragment models, simple Good-Turing smoothing and the
//! on-disk model format.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::fragments::{passes, Fragment, FragmentKey, RestrictionSet};
use crate::headrules::{HeadRuleError, HeadRuleTable};
use crate::treebank::Treebank;
use crate::unknown::{UnknownWordError, UnknownWordModel};

const FORMAT_TAG: &str = "# dop-model 1";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no fragments survive the restrictions; the grammar would be empty")]
    Empty,
    #[error("model is already smoothed")]
    AlreadySmoothed,
    #[error("model file line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    HeadRules(#[from] HeadRuleError),
    #[error(transparent)]
    Unknown(#[from] UnknownWordError),
}

fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// One distinct fragment with its (possibly smoothed) count.
#[derive(Debug, Clone)]
pub struct ModelEntry {
    pub fragment: Arc<Fragment>,
    pub key: FragmentKey,
    pub count: BigRational,
    pub probability: f64,
}

/// Per-root-label bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct RootStats {
    pub entries: usize,
    /// Sum of entry counts.
    pub total: BigRational,
    /// Sum of raw counts before smoothing.
    pub raw_total: u64,
    /// Distinct fragments seen exactly once, before smoothing.
    pub singletons: u64,
    /// Probability mass held back for unseen events.
    pub reserved: BigRational,
}

/// Treebank facts the parser needs besides the fragments themselves.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    pub start_labels: BTreeSet<String>,
    /// Node-label occurrence counts (preterminals included).
    pub label_counts: BTreeMap<String, u64>,
}

impl CorpusStats {
    pub fn from_treebank(tb: &Treebank) -> CorpusStats {
        CorpusStats { start_labels: tb.root_labels(), label_counts: tb.label_counts() }
    }

    /// Relative frequency of each label among all labeled nodes.
    pub fn priors(&self) -> BTreeMap<String, f64> {
        let total: u64 = self.label_counts.values().sum();
        self.label_counts.iter().map(|(l, &c)| (l.clone(), c as f64 / total as f64)).collect()
    }
}

/// Distinct fragments with counts and probabilities. Entry ids are positions
/// in (root label, key) order.
#[derive(Debug, Clone)]
pub struct FragmentModel {
    entries: Vec<ModelEntry>,
    index: HashMap<FragmentKey, usize>,
    roots: BTreeMap<String, RootStats>,
    head_rules: HeadRuleTable,
    restriction: RestrictionSet,
    smoothed: bool,
    corpus: CorpusStats,
    unknown: Option<UnknownWordModel>,
}

/// Builds a model from a fragment multiset, keeping only fragments that pass
/// `restriction`.
pub fn build_model(
    fragments: impl IntoIterator<Item = Fragment>,
    restriction: RestrictionSet,
    rules: HeadRuleTable,
) -> Result<FragmentModel, ModelError> {
    build_model_counted(fragments.into_iter().map(|f| (f, 1)), restriction, rules)
}

/// Like [`build_model`] for fragments that already carry multiplicities.
pub fn build_model_counted(
    fragments: impl IntoIterator<Item = (Fragment, u64)>,
    restriction: RestrictionSet,
    rules: HeadRuleTable,
) -> Result<FragmentModel, ModelError> {
    let mut merged: HashMap<FragmentKey, (Fragment, u64)> = HashMap::new();
    for (f, n) in fragments {
        if n == 0 || !passes(&f, &restriction, &rules) {
            continue;
        }
        merged.entry(f.key()).or_insert_with(|| (f, 0)).1 += n;
    }
    if merged.is_empty() {
        return Err(ModelError::Empty);
    }
    let mut sorted: Vec<(String, FragmentKey, Fragment, u64)> =
        merged.into_iter().map(|(k, (f, n))| (f.root_label().to_string(), k, f, n)).collect();
    sorted.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    let entries = sorted
        .into_iter()
        .map(|(_, key, f, n)| ModelEntry {
            fragment: Arc::new(f),
            key,
            count: BigRational::from_integer(BigInt::from(n)),
            probability: 0.0,
        })
        .collect();
    let mut model = FragmentModel {
        entries,
        index: HashMap::new(),
        roots: BTreeMap::new(),
        head_rules: rules,
        restriction,
        smoothed: false,
        corpus: CorpusStats::default(),
        unknown: None,
    };
    model.reindex();
    let mut raw: BTreeMap<String, (usize, u64, u64)> = BTreeMap::new();
    for e in &model.entries {
        let n = e.count.to_integer().to_u64().expect("raw counts are integral");
        let r = raw.entry(e.fragment.root_label().to_string()).or_default();
        r.0 += 1;
        r.1 += n;
        r.2 += u64::from(n == 1);
    }
    model.roots = raw
        .into_iter()
        .map(|(root, (entries, raw_total, singletons))| {
            let stats = RootStats {
                entries,
                total: BigRational::from_integer(BigInt::from(raw_total)),
                raw_total,
                singletons,
                reserved: BigRational::zero(),
            };
            (root, stats)
        })
        .collect();
    model.refresh_probabilities();
    Ok(model)
}

/// Outcome of scoring a fragment sequence against a model.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivationScore {
    pub probability: BigRational,
    /// Fragments absent from the model; non-empty means probability zero.
    pub missing: Vec<FragmentKey>,
}

/// Product of the model probabilities of `fragments`.
pub fn derivation_probability(model: &FragmentModel, fragments: &[Fragment]) -> DerivationScore {
    let mut probability = BigRational::one();
    let mut missing = Vec::new();
    for f in fragments {
        let key = f.key();
        match model.id(&key) {
            Some(id) => probability *= model.exact_probability(id),
            None => missing.push(key),
        }
    }
    if !missing.is_empty() {
        probability = BigRational::zero();
    }
    DerivationScore { probability, missing }
}

/// Simple Good-Turing adjustment within each root label.
///
/// A count `r` becomes `(r+1) N(r+1) / N(r)` for every `r` below the first
/// gap in the count-of-counts, and `N(1)/N` of the root's mass is reserved
/// for unseen fragments. Roots with one distinct fragment, or with only
/// singletons, are left unadjusted.
pub fn good_turing_adjust(model: &FragmentModel) -> Result<FragmentModel, ModelError> {
    if model.smoothed {
        return Err(ModelError::AlreadySmoothed);
    }
    let mut out = model.clone();
    let mut by_root: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (id, e) in out.entries.iter().enumerate() {
        by_root.entry(e.fragment.root_label().to_string()).or_default().push(id);
    }
    for (root, ids) in by_root {
        let stats = out.roots.get_mut(&root).expect("root stats exist");
        if ids.len() < 2 || stats.singletons == ids.len() as u64 {
            continue;
        }
        let raw: Vec<u64> = ids
            .iter()
            .map(|&id| out.entries[id].count.to_integer().to_u64().expect("raw counts are integral"))
            .collect();
        let mut n_r: BTreeMap<u64, u64> = BTreeMap::new();
        for &r in &raw {
            *n_r.entry(r).or_insert(0) += 1;
        }
        let nr = |r: u64| n_r.get(&r).copied().unwrap_or(0);
        let mut cutoff = 1;
        while nr(cutoff + 1) > 0 {
            cutoff += 1;
        }
        let mut total = BigRational::zero();
        for (&id, &r) in ids.iter().zip(&raw) {
            let adjusted = if r < cutoff { ratio((r + 1) * nr(r + 1), nr(r)) } else { ratio(r, 1) };
            total += &adjusted;
            out.entries[id].count = adjusted;
        }
        stats.total = total;
        stats.reserved = ratio(stats.singletons, stats.raw_total);
    }
    out.smoothed = true;
    out.refresh_probabilities();
    Ok(out)
}

impl FragmentModel {
    fn reindex(&mut self) {
        self.index = self.entries.iter().enumerate().map(|(i, e)| (e.key.clone(), i)).collect();
    }

    fn refresh_probabilities(&mut self) {
        for id in 0..self.entries.len() {
            let p = to_f64(&self.exact_probability(id));
            self.entries[id].probability = p;
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ModelEntry] {
        &self.entries
    }

    pub fn entry(&self, id: usize) -> &ModelEntry {
        &self.entries[id]
    }

    pub fn id(&self, key: &FragmentKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn roots(&self) -> &BTreeMap<String, RootStats> {
        &self.roots
    }

    pub fn root_total(&self, root: &str) -> Option<&BigRational> {
        self.roots.get(root).map(|r| &r.total)
    }

    pub fn head_rules(&self) -> &HeadRuleTable {
        &self.head_rules
    }

    pub fn restriction(&self) -> &RestrictionSet {
        &self.restriction
    }

    pub fn is_smoothed(&self) -> bool {
        self.smoothed
    }

    pub fn corpus(&self) -> &CorpusStats {
        &self.corpus
    }

    pub fn set_corpus(&mut self, corpus: CorpusStats) {
        self.corpus = corpus;
    }

    pub fn unknown_model(&self) -> Option<&UnknownWordModel> {
        self.unknown.as_ref()
    }

    pub fn set_unknown_model(&mut self, unknown: Option<UnknownWordModel>) {
        self.unknown = unknown;
    }

    /// Exact probability of entry `id`: its share of the root's count, scaled
    /// by the mass not reserved for unseen events.
    pub fn exact_probability(&self, id: usize) -> BigRational {
        let e = &self.entries[id];
        let stats = &self.roots[e.fragment.root_label()];
        (BigRational::one() - &stats.reserved) * &e.count / &stats.total
    }

    pub fn probability(&self, id: usize) -> f64 {
        self.entries[id].probability
    }

    /// Every word on some fragment frontier.
    pub fn vocabulary(&self) -> BTreeSet<&str> {
        let mut v = BTreeSet::new();
        for e in &self.entries {
            for item in e.fragment.frontier() {
                if let crate::fragments::FrontierItem::Word(w) = item {
                    v.insert(w);
                }
            }
        }
        v
    }

    /// Probability mass available to unseen single-word fragments under
    /// `root`: the reserved mass when smoothed, otherwise the Good-Turing
    /// estimate `N(1)/N`. Falls back to `1/(N+1)` when that is zero.
    pub fn unseen_mass(&self, root: &str) -> f64 {
        let Some(stats) = self.roots.get(root) else {
            return 1.0;
        };
        let mass = if self.smoothed { to_f64(&stats.reserved) } else { stats.singletons as f64 / stats.raw_total as f64 };
        if mass > 0.0 {
            mass
        } else {
            1.0 / (stats.raw_total as f64 + 1.0)
        }
    }

    /// Serializes the model. Output is byte-identical for identical models.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(FORMAT_TAG);
        out.push('\n');
        out.push_str(&format!("# restriction {}\n", self.restriction.describe()));
        out.push_str(&format!("# smoothing {}\n", if self.smoothed { "on" } else { "off" }));
        for (root, s) in &self.roots {
            out.push_str(&format!(
                "# root {root} entries={} total={} raw_total={} singletons={} reserved={}\n",
                s.entries, s.total, s.raw_total, s.singletons, s.reserved
            ));
        }
        for l in &self.corpus.start_labels {
            out.push_str(&format!("# start {l}\n"));
        }
        for (l, c) in &self.corpus.label_counts {
            out.push_str(&format!("# label {l} {c}\n"));
        }
        for line in self.head_rules.to_text().lines() {
            out.push_str(&format!("# head {line}\n"));
        }
        if let Some(u) = &self.unknown {
            for line in u.to_lines() {
                out.push_str(&format!("# unknown {line}\n"));
            }
        }
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\t{}\n", e.count, e.probability, e.key));
        }
        out
    }

    /// Reads a model written by [`FragmentModel::to_text`].
    pub fn from_text(text: &str) -> Result<FragmentModel, ModelError> {
        let mut restriction = None;
        let mut smoothed = None;
        let mut roots = BTreeMap::new();
        let mut corpus = CorpusStats::default();
        let mut head = String::new();
        let mut unknown_lines = Vec::new();
        let mut entries = Vec::new();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, FORMAT_TAG)) => {}
            _ => return Err(ModelError::Format { line: 1, reason: "missing model header".into() }),
        }
        for (i, line) in lines {
            let err = |reason: &str| ModelError::Format { line: i + 1, reason: reason.to_string() };
            if let Some(h) = line.strip_prefix("# ") {
                let (kind, rest) = h.split_once(' ').unwrap_or((h, ""));
                match kind {
                    "restriction" => restriction = Some(RestrictionSet::from_description(rest).map_err(|e| err(&e))?),
                    "smoothing" => smoothed = Some(rest == "on"),
                    "root" => {
                        let mut parts = rest.split_whitespace();
                        let label = parts.next().ok_or_else(|| err("root without label"))?;
                        let mut fields = HashMap::new();
                        for p in parts {
                            let (k, v) = p.split_once('=').ok_or_else(|| err("bad root field"))?;
                            fields.insert(k, v);
                        }
                        let get = |k: &str| fields.get(k).copied().ok_or_else(|| err("missing root field"));
                        let stats = RootStats {
                            entries: get("entries")?.parse().map_err(|_| err("bad entries"))?,
                            total: get("total")?.parse().map_err(|_| err("bad total"))?,
                            raw_total: get("raw_total")?.parse().map_err(|_| err("bad raw_total"))?,
                            singletons: get("singletons")?.parse().map_err(|_| err("bad singletons"))?,
                            reserved: get("reserved")?.parse().map_err(|_| err("bad reserved"))?,
                        };
                        roots.insert(label.to_string(), stats);
                    }
                    "start" => {
                        corpus.start_labels.insert(rest.to_string());
                    }
                    "label" => {
                        let (l, c) = rest.split_once(' ').ok_or_else(|| err("bad label line"))?;
                        corpus.label_counts.insert(l.to_string(), c.parse().map_err(|_| err("bad label count"))?);
                    }
                    "head" => {
                        head.push_str(rest);
                        head.push('\n');
                    }
                    "unknown" => unknown_lines.push(rest),
                    _ => return Err(err("unknown header line")),
                }
                continue;
            }
            let mut cols = line.splitn(3, '\t');
            let (Some(count), Some(_), Some(key)) = (cols.next(), cols.next(), cols.next()) else {
                return Err(err("expected count<TAB>probability<TAB>key"));
            };
            let count: BigRational = count.parse().map_err(|_| err("bad count"))?;
            let fragment = Fragment::parse(key).map_err(|e| err(&e.to_string()))?;
            entries.push(ModelEntry { key: fragment.key(), fragment: Arc::new(fragment), count, probability: 0.0 });
        }
        let end = text.lines().count();
        let missing = |what: &str| ModelError::Format { line: end, reason: format!("missing {what} header") };
        let unknown = if unknown_lines.is_empty() { None } else { Some(UnknownWordModel::from_lines(unknown_lines)?) };
        let mut model = FragmentModel {
            entries,
            index: HashMap::new(),
            roots,
            head_rules: HeadRuleTable::parse(&head)?,
            restriction: restriction.ok_or_else(|| missing("restriction"))?,
            smoothed: smoothed.ok_or_else(|| missing("smoothing"))?,
            corpus,
            unknown,
        };
        if model.entries.is_empty() {
            return Err(ModelError::Empty);
        }
        for e in &model.entries {
            if !model.roots.contains_key(e.fragment.root_label()) {
                return Err(missing(&format!("root {}", e.fragment.root_label())));
            }
        }
        model.reindex();
        model.refresh_probabilities();
        Ok(model)
    }
}
