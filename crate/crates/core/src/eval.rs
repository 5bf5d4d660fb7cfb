//! PARSEVAL labeled precision and recall.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::treebank::{constituents, Constituent, Tree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("proposed and gold trees yield different words ({proposed} vs {gold} words)")]
    YieldMismatch { proposed: usize, gold: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Leave the root constituent out of both trees.
    pub exclude_root: bool,
}

/// Constituent counts for one sentence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairScore {
    pub correct: usize,
    pub proposed: usize,
    pub gold: usize,
}

fn scored_constituents(tree: &Tree, opts: EvalOptions) -> Vec<Constituent> {
    let mut c = constituents(tree);
    if opts.exclude_root && !tree.is_preterminal() && !c.is_empty() {
        c.remove(0);
    }
    c
}

/// Size of the multiset intersection of the two constituent multisets.
pub fn score_pair(proposed: &Tree, gold: &Tree) -> Result<PairScore, EvalError> {
    score_pair_with(proposed, gold, EvalOptions::default())
}

pub fn score_pair_with(proposed: &Tree, gold: &Tree, opts: EvalOptions) -> Result<PairScore, EvalError> {
    let (pw, gw) = (proposed.words(), gold.words());
    if pw != gw {
        return Err(EvalError::YieldMismatch { proposed: pw.len(), gold: gw.len() });
    }
    let p = scored_constituents(proposed, opts);
    let g = scored_constituents(gold, opts);
    let mut available: HashMap<&Constituent, usize> = HashMap::new();
    for c in &g {
        *available.entry(c).or_insert(0) += 1;
    }
    let mut correct = 0;
    for c in &p {
        if let Some(n) = available.get_mut(c) {
            if *n > 0 {
                *n -= 1;
                correct += 1;
            }
        }
    }
    Ok(PairScore { correct, proposed: p.len(), gold: g.len() })
}

/// Micro-averaged totals over a set of sentences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Totals {
    pub correct: usize,
    pub proposed: usize,
    pub gold: usize,
    pub sentences: usize,
    pub no_parse: usize,
}

impl Totals {
    fn add(&mut self, s: PairScore, no_parse: bool) {
        self.correct += s.correct;
        self.proposed += s.proposed;
        self.gold += s.gold;
        self.sentences += 1;
        self.no_parse += usize::from(no_parse);
    }

    /// Labeled precision in `[0, 1]`. An empty proposal set scores 1 only
    /// when the gold set is empty too.
    pub fn precision(&self) -> f64 {
        match self.proposed {
            0 if self.gold == 0 => 1.0,
            0 => 0.0,
            p => self.correct as f64 / p as f64,
        }
    }

    /// Labeled recall in `[0, 1]`.
    pub fn recall(&self) -> f64 {
        match self.gold {
            0 => 1.0,
            g => self.correct as f64 / g as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceScore {
    pub index: usize,
    pub length: usize,
    pub score: PairScore,
    pub no_parse: bool,
    /// Set when the pair could not be scored; such sentences are excluded
    /// from every total.
    pub error: Option<EvalError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub sentences: Vec<SentenceScore>,
    pub all: Totals,
    pub upto40: Totals,
    pub upto100: Totals,
}

/// Scores aligned (proposal, gold) pairs. `None` marks a sentence the parser
/// failed on: it contributes its gold constituents and nothing else.
pub fn score_corpus(pairs: &[(Option<Tree>, Tree)]) -> ScoreReport {
    score_corpus_with(pairs, EvalOptions::default())
}

pub fn score_corpus_with(pairs: &[(Option<Tree>, Tree)], opts: EvalOptions) -> ScoreReport {
    let mut report = ScoreReport {
        sentences: Vec::with_capacity(pairs.len()),
        all: Totals::default(),
        upto40: Totals::default(),
        upto100: Totals::default(),
    };
    for (index, (proposed, gold)) in pairs.iter().enumerate() {
        let length = gold.words().len();
        let no_parse = proposed.is_none();
        let scored = match proposed {
            Some(p) => score_pair_with(p, gold, opts),
            None => Ok(PairScore { correct: 0, proposed: 0, gold: scored_constituents(gold, opts).len() }),
        };
        let (score, error) = match scored {
            Ok(s) => (s, None),
            Err(e) => {
                log::warn!("sentence {index}: {e}; excluded from scoring");
                (PairScore::default(), Some(e))
            }
        };
        if error.is_none() {
            report.all.add(score, no_parse);
            if length <= 40 {
                report.upto40.add(score, no_parse);
            }
            if length <= 100 {
                report.upto100.add(score, no_parse);
            }
        }
        report.sentences.push(SentenceScore { index, length, score, no_parse, error });
    }
    report
}

impl ScoreReport {
    /// Human-readable LP/LR per length bin, as percentages.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for (name, t) in [("<=40 words", &self.upto40), ("<=100 words", &self.upto100), ("all", &self.all)] {
            let _ = writeln!(
                out,
                "{name:<12} sentences {:>5}  no-parse {:>4}  LP {:>6.2}  LR {:>6.2}",
                t.sentences,
                t.no_parse,
                100.0 * t.precision(),
                100.0 * t.recall()
            );
        }
        let errors = self.sentences.iter().filter(|s| s.error.is_some()).count();
        if errors > 0 {
            let _ = writeln!(out, "{errors} sentence(s) skipped on yield mismatch");
        }
        out
    }

    /// Per-sentence rows followed by the bin totals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("sentence\tlength\tcorrect\tproposed\tgold\tstatus\n");
        for s in &self.sentences {
            let status = match (&s.error, s.no_parse) {
                (Some(_), _) => "error",
                (None, true) => "no-parse",
                (None, false) => "ok",
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{status}",
                s.index, s.length, s.score.correct, s.score.proposed, s.score.gold
            );
        }
        out.push_str("bin\tsentences\tcorrect\tproposed\tgold\tLP\tLR\n");
        for (name, t) in [("<=40", &self.upto40), ("<=100", &self.upto100), ("all", &self.all)] {
            let _ = writeln!(
                out,
                "{name}\t{}\t{}\t{}\t{}\t{:.2}\t{:.2}",
                t.sentences,
                t.correct,
                t.proposed,
                t.gold,
                100.0 * t.precision(),
                100.0 * t.recall()
            );
        }
        out
    }
}
