//! Category guessing for words never seen in training, from the endings,
//! capitalization, hyphenation and digits of rare training words.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::treebank::{Tree, Treebank};

/// Longest suffix considered.
pub const MAX_SUFFIX: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnknownWordError {
    #[error("rarity threshold must be at least 1")]
    ZeroThreshold,
    #[error("no word occurs at most {0} times; try a higher threshold")]
    NoRareWords(u64),
    #[error("malformed unknown-word line {0:?}")]
    Malformed(String),
}

/// Orthographic features of a word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordFeatures {
    /// Lowercased suffixes of the last hyphen-separated segment, longest
    /// first, at most [`MAX_SUFFIX`] characters.
    pub suffixes: Vec<String>,
    pub capitalized: bool,
    pub hyphen: bool,
    pub digit: bool,
}

impl WordFeatures {
    pub fn of(word: &str) -> WordFeatures {
        let segment = word.rsplit('-').find(|s| !s.is_empty()).unwrap_or(word);
        let chars: Vec<char> = segment.chars().flat_map(char::to_lowercase).collect();
        let suffixes = (1..=MAX_SUFFIX.min(chars.len()))
            .rev()
            .map(|n| chars[chars.len() - n..].iter().collect())
            .collect();
        WordFeatures {
            suffixes,
            capitalized: word.chars().next().is_some_and(char::is_uppercase),
            hyphen: word.contains('-'),
            digit: word.chars().any(|c| c.is_ascii_digit()),
        }
    }
}

type Signature = (String, bool, bool, bool);
type Tally = BTreeMap<String, u64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownWordModel {
    threshold: u64,
    full: BTreeMap<Signature, Tally>,
    by_suffix: BTreeMap<String, Tally>,
    open_class: BTreeSet<String>,
}

fn preterminal_pairs(tree: &Tree, out: &mut Vec<(String, String)>) {
    if tree.is_preterminal() {
        out.push((tree.label().to_string(), tree.children()[0].label().to_string()));
    } else {
        tree.children().iter().for_each(|c| preterminal_pairs(c, out));
    }
}

/// Gathers feature statistics from every word occurring at most `threshold`
/// times.
pub fn train_unknown_model(treebank: &Treebank, threshold: u64) -> Result<UnknownWordModel, UnknownWordError> {
    if threshold == 0 {
        return Err(UnknownWordError::ZeroThreshold);
    }
    let mut model = UnknownWordModel {
        threshold,
        full: BTreeMap::new(),
        by_suffix: BTreeMap::new(),
        open_class: BTreeSet::new(),
    };
    let mut pairs = Vec::new();
    for t in &treebank.trees {
        preterminal_pairs(t, &mut pairs);
    }
    for (tag, word) in pairs {
        if treebank.vocabulary.get(&word).copied().unwrap_or(0) > threshold {
            continue;
        }
        let f = WordFeatures::of(&word);
        for s in &f.suffixes {
            *model.full.entry((s.clone(), f.capitalized, f.hyphen, f.digit)).or_default().entry(tag.clone()).or_insert(0) += 1;
            *model.by_suffix.entry(s.clone()).or_default().entry(tag.clone()).or_insert(0) += 1;
        }
        model.open_class.insert(tag);
    }
    if model.open_class.is_empty() {
        return Err(UnknownWordError::NoRareWords(threshold));
    }
    Ok(model)
}

fn normalized(tally: &Tally) -> BTreeMap<String, f64> {
    let total: u64 = tally.values().sum();
    tally.iter().map(|(t, &c)| (t.clone(), c as f64 / total as f64)).collect()
}

impl UnknownWordModel {
    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn open_class(&self) -> &BTreeSet<String> {
        &self.open_class
    }

    /// Preterminal distribution for an unseen word. Backs off from the full
    /// feature tuple to the suffix alone to a uniform open-class guess,
    /// trying longer suffixes first at each level.
    pub fn tag_unknown(&self, word: &str) -> BTreeMap<String, f64> {
        let f = WordFeatures::of(word);
        for s in &f.suffixes {
            if let Some(t) = self.full.get(&(s.clone(), f.capitalized, f.hyphen, f.digit)) {
                return normalized(t);
            }
        }
        for s in &f.suffixes {
            if let Some(t) = self.by_suffix.get(s) {
                return normalized(t);
            }
        }
        let p = 1.0 / self.open_class.len() as f64;
        self.open_class.iter().map(|t| (t.clone(), p)).collect()
    }

    /// Line-oriented serialization used inside model files.
    pub fn to_lines(&self) -> Vec<String> {
        let mut out = vec![format!("threshold\t{}", self.threshold)];
        for t in &self.open_class {
            out.push(format!("open\t{t}"));
        }
        let b = |v: bool| u8::from(v);
        for ((s, c, h, d), tally) in &self.full {
            for (tag, n) in tally {
                out.push(format!("full\t{s}\t{}\t{}\t{}\t{tag}\t{n}", b(*c), b(*h), b(*d)));
            }
        }
        for (s, tally) in &self.by_suffix {
            for (tag, n) in tally {
                out.push(format!("suffix\t{s}\t{tag}\t{n}"));
            }
        }
        out
    }

    pub fn from_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Result<UnknownWordModel, UnknownWordError> {
        let mut m = UnknownWordModel {
            threshold: 0,
            full: BTreeMap::new(),
            by_suffix: BTreeMap::new(),
            open_class: BTreeSet::new(),
        };
        for line in lines {
            let bad = || UnknownWordError::Malformed(line.to_string());
            let f: Vec<&str> = line.split('\t').collect();
            let flag = |s: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(bad()),
            };
            let num = |s: &str| s.parse::<u64>().map_err(|_| bad());
            match f.as_slice() {
                ["threshold", t] => m.threshold = num(t)?,
                ["open", t] => {
                    m.open_class.insert(t.to_string());
                }
                ["full", s, c, h, d, tag, n] => {
                    let key = (s.to_string(), flag(c)?, flag(h)?, flag(d)?);
                    m.full.entry(key).or_default().insert(tag.to_string(), num(n)?);
                }
                ["suffix", s, tag, n] => {
                    m.by_suffix.entry(s.to_string()).or_default().insert(tag.to_string(), num(n)?);
                }
                _ => return Err(bad()),
            }
        }
        if m.threshold == 0 {
            return Err(UnknownWordError::ZeroThreshold);
        }
        if m.open_class.is_empty() {
            return Err(UnknownWordError::NoRareWords(m.threshold));
        }
        Ok(m)
    }
}
