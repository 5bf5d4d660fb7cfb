//! Seeded treebanks drawn from a small probabilistic grammar, with PP
//! attachment ambiguity and a Zipfian lexicon so that held-out sentences
//! contain rare and unseen words.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::treebank::{Tree, Treebank};

/// One expansion of a nonterminal with its relative weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Production {
    pub lhs: String,
    pub rhs: Vec<String>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticGrammar {
    pub start: String,
    pub productions: Vec<Production>,
    /// Words per preterminal, most frequent first.
    pub lexicon: Vec<(String, Vec<String>)>,
    /// Exponent of the Zipfian word distribution within a preterminal.
    pub zipf: f64,
}

const RULES: &[(&str, &str, f64)] = &[
    ("S", "NP VP", 0.9),
    ("S", "PP NP VP", 0.1),
    ("NP", "DT NN", 0.40),
    ("NP", "DT JJ NN", 0.15),
    ("NP", "NNP", 0.20),
    ("NP", "NP PP", 0.15),
    ("NP", "PRP", 0.10),
    ("VP", "VBD NP", 0.40),
    ("VP", "VBD NP PP", 0.15),
    ("VP", "VBD", 0.15),
    ("VP", "VP PP", 0.15),
    ("VP", "MD VB NP", 0.15),
    ("PP", "IN NP", 1.0),
];

const WORDS: &[(&str, &str)] = &[
    ("DT", "the a every some this that"),
    (
        "NN",
        "dog cat man woman telescope park idea house garden letter child student book table river \
         window painter doctor engine harbor bridge violin lantern meadow orchard",
    ),
    ("JJ", "big small old red happy quiet strange careful ancient bright"),
    ("NNP", "Kim Lee Sandy Robin Alex Morgan Jordan Casey Taylor Quinn"),
    ("PRP", "she he it they"),
    (
        "VBD",
        "saw liked chased watched found painted visited opened followed admired noticed \
         carried wanted helped",
    ),
    ("MD", "will can might"),
    ("VB", "see like find visit follow admire"),
    ("IN", "with in near on under behind"),
];

const SYLLABLES: [&str; 12] = ["bra", "cor", "dal", "fen", "gru", "hol", "mir", "nat", "pol", "sar", "tev", "vun"];

/// Rare open-class words with class-typical endings, appended after the
/// common words so the Zipfian draw rarely reaches them.
fn tail(tag: &str) -> Vec<String> {
    let endings: &[&str] = match tag {
        "NN" => &["tion", "ness", "ment", "er"],
        "VBD" => &["ed", "ated"],
        "JJ" => &["ous", "ive", "ful"],
        "NNP" => &["son", "ia"],
        _ => return Vec::new(),
    };
    (0..60)
        .map(|i| {
            let w = format!("{}{}{}", SYLLABLES[i % 12], SYLLABLES[(i / 12 + i) % 12], endings[i % endings.len()]);
            if tag == "NNP" {
                let mut c = w.chars();
                c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
            } else {
                w
            }
        })
        .collect()
}

impl SyntheticGrammar {
    /// A small English-like grammar.
    pub fn english() -> SyntheticGrammar {
        SyntheticGrammar {
            start: "S".into(),
            productions: RULES
                .iter()
                .map(|(l, r, w)| Production {
                    lhs: l.to_string(),
                    rhs: r.split_whitespace().map(String::from).collect(),
                    weight: *w,
                })
                .collect(),
            lexicon: WORDS
                .iter()
                .map(|(t, ws)| {
                    let mut words: Vec<String> = ws.split_whitespace().map(String::from).collect();
                    words.extend(tail(t));
                    (t.to_string(), words)
                })
                .collect(),
            zipf: 1.1,
        }
    }

    fn expand(&self, label: &str, rng: &mut ChaCha8Rng, depth: usize, budget: &mut usize) -> Option<Tree> {
        if let Some((_, words)) = self.lexicon.iter().find(|(t, _)| t == label) {
            *budget = budget.checked_sub(1)?;
            let weights: Vec<f64> = (1..=words.len()).map(|r| (r as f64).powf(-self.zipf)).collect();
            let w = &words[WeightedIndex::new(&weights).expect("positive weights").sample(rng)];
            return Some(Tree::preterminal(label, w.clone()));
        }
        if depth == 0 {
            return None;
        }
        let options: Vec<&Production> = self.productions.iter().filter(|p| p.lhs == label).collect();
        let weights: Vec<f64> = options.iter().map(|p| p.weight).collect();
        let p = options[WeightedIndex::new(&weights).expect("positive weights").sample(rng)];
        let children = p
            .rhs
            .iter()
            .map(|c| self.expand(c, rng, depth - 1, budget))
            .collect::<Option<Vec<_>>>()?;
        Some(Tree::node(label, children))
    }

    /// `n` trees of at most `max_words` words, redrawing any tree that runs
    /// over the word or depth limit.
    pub fn generate(&self, n: usize, max_words: usize, seed: u64) -> Treebank {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trees = Vec::with_capacity(n);
        while trees.len() < n {
            let mut budget = max_words;
            if let Some(t) = self.expand(&self.start, &mut rng, 12, &mut budget) {
                trees.push(t);
            }
        }
        Treebank::from_trees(trees)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_bounded() {
        let g = SyntheticGrammar::english();
        let a = g.generate(50, 10, 3);
        assert_eq!(a, g.generate(50, 10, 3));
        assert_ne!(a, g.generate(50, 10, 4));
        assert!(a.trees.iter().all(|t| t.words().len() <= 10 && t.label() == "S"));
        assert!(a.trees.iter().all(|t| t.validate().is_ok()));
    }

    #[test]
    fn tails_are_distinct() {
        for tag in ["NN", "VBD", "JJ", "NNP"] {
            let t = tail(tag);
            let set: std::collections::BTreeSet<&String> = t.iter().collect();
            assert_eq!(set.len(), t.len(), "{tag}");
        }
        assert!(tail("NNP").iter().all(|w| w.starts_with(char::is_uppercase)));
    }

    #[test]
    fn lexicon_has_rare_words() {
        let tb = SyntheticGrammar::english().generate(200, 12, 0);
        assert!(tb.vocabulary.values().any(|&c| c <= 2));
        assert!(tb.vocabulary.values().any(|&c| c >= 20));
    }
}
