//! Head-percolation rules.
//!
//! File format, one rule per line:
//!
//! ```text
//! default left
//! VP left TO VBD VBN MD VBZ VB VBG VBP VP
//! PP right IN TO VBG VBN RP FW
//! ```
//!
//! `left` scans children left to right, `right` scans right to left. For each
//! listed child label in priority order the first matching child wins; if
//! none matches, the first child in scan direction is the head.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Left,
    Right,
}

impl FromStr for Direction {
    type Err = HeadRuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(Direction::Left),
            "right" => Ok(Direction::Right),
            other => Err(HeadRuleError::BadDirection(other.to_string())),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Left => "left",
            Direction::Right => "right",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeadRuleError {
    #[error("unknown direction {0:?}, expected left or right")]
    BadDirection(String),
    #[error("line {0}: expected `PARENT direction child...`")]
    BadLine(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadRule {
    pub direction: Direction,
    pub priorities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadRuleTable {
    rules: BTreeMap<String, HeadRule>,
    default: Direction,
}

impl Default for HeadRuleTable {
    fn default() -> Self {
        HeadRuleTable::collins()
    }
}

const COLLINS: &str = "\
default left
ADJP left NNS QP NN $ ADVP JJ VBN VBG ADJP JJR NP JJS DT FW RBR RBS SBAR RB
ADVP right RB RBR RBS FW ADVP TO CD JJR JJ IN NP JJS NN
CONJP right CC RB IN
FRAG right
INTJ left
LST right LS :
NAC left NN NNS NNP NNPS NP NAC EX $ CD QP PRP VBG JJ JJS JJR ADJP FW
NP right NN NNP NNPS NNS NX POS JJR NP $ ADJP PRN CD JJ JJS RB QP
NX right NN NNP NNPS NNS NX POS JJR NP
PP right IN TO VBG VBN RP FW
PRN left
PRT right RP
QP left $ IN NNS NN JJ RB DT CD NCD QP JJR JJS
RRC right VP NP ADVP ADJP PP
S left TO IN VP S SBAR ADJP UCP NP
SBAR left WHNP WHPP WHADVP WHADJP IN DT S SQ SINV SBAR FRAG
SBARQ left SQ S SINV SBARQ FRAG
SINV left VBZ VBD VBP VB MD VP S SINV ADJP NP
SQ left VBZ VBD VBP VB MD VP SQ
UCP right
VP left TO VBD VBN MD VBZ VB VBG VBP VP ADJP NN NNS NP
WHADJP left CC WRB JJ ADJP
WHADVP right CC WRB
WHNP left WDT WP WP$ WHADJP WHPP WHNP
WHPP right IN TO FW
";

impl HeadRuleTable {
    /// A table with no parent-specific rules.
    pub fn with_default(direction: Direction) -> Self {
        HeadRuleTable { rules: BTreeMap::new(), default: direction }
    }

    /// Penn Treebank head table after Collins (1999, appendix A), with the
    /// special-cased NP rule flattened into one priority list.
    pub fn collins() -> Self {
        HeadRuleTable::parse(COLLINS).expect("built-in head table parses")
    }

    pub fn parse(text: &str) -> Result<Self, HeadRuleError> {
        let mut table = HeadRuleTable::with_default(Direction::Left);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parent = parts.next().ok_or(HeadRuleError::BadLine(i + 1))?;
            let direction: Direction = parts.next().ok_or(HeadRuleError::BadLine(i + 1))?.parse()?;
            if parent == "default" {
                table.default = direction;
                continue;
            }
            let priorities = parts.map(String::from).collect();
            table.rules.insert(parent.to_string(), HeadRule { direction, priorities });
        }
        Ok(table)
    }

    /// Serializes back to the file format.
    pub fn to_text(&self) -> String {
        let mut out = format!("default {}\n", self.default);
        for (parent, rule) in &self.rules {
            out.push_str(parent);
            out.push(' ');
            out.push_str(&rule.direction.to_string());
            for p in &rule.priorities {
                out.push(' ');
                out.push_str(p);
            }
            out.push('\n');
        }
        out
    }

    /// Index of the head among `children` of a node labeled `parent`.
    ///
    /// Panics if `children` is empty.
    pub fn head_child(&self, parent: &str, children: &[&str]) -> usize {
        assert!(!children.is_empty(), "head of a childless node");
        let (direction, priorities): (Direction, &[String]) = match self.rules.get(parent) {
            Some(r) => (r.direction, &r.priorities),
            None => (self.default, &[]),
        };
        let order: Box<dyn Iterator<Item = usize>> = match direction {
            Direction::Left => Box::new(0..children.len()),
            Direction::Right => Box::new((0..children.len()).rev()),
        };
        let order: Vec<usize> = order.collect();
        for p in priorities {
            if let Some(&i) = order.iter().find(|&&i| children[i] == p) {
                return i;
            }
        }
        order[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn priority_then_direction() {
        let t = HeadRuleTable::parse("default right\nVP left V VP\nNP right N\n").unwrap();
        assert_eq!(t.head_child("VP", &["NP", "V", "V"]), 1);
        assert_eq!(t.head_child("VP", &["VP", "V"]), 1);
        assert_eq!(t.head_child("NP", &["N", "DT", "N"]), 2);
        assert_eq!(t.head_child("NP", &["DT", "JJ"]), 1);
        // unlisted parent uses the default direction
        assert_eq!(t.head_child("X", &["A", "B", "C"]), 2);
    }

    #[test]
    fn collins_examples() {
        let t = HeadRuleTable::collins();
        assert_eq!(t.head_child("S", &["NP", "VP", "."]), 1);
        assert_eq!(t.head_child("PP", &["IN", "NP"]), 0);
        assert_eq!(t.head_child("NP", &["DT", "JJ", "NN"]), 2);
        assert_eq!(t.head_child("VP", &["MD", "VP"]), 0);
    }

    #[test]
    fn round_trips_text() {
        let t = HeadRuleTable::collins();
        assert_eq!(HeadRuleTable::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn rejects_bad_lines() {
        assert_eq!(HeadRuleTable::parse("VP up V"), Err(HeadRuleError::BadDirection("up".into())));
        assert_eq!(HeadRuleTable::parse("VP"), Err(HeadRuleError::BadLine(1)));
    }
}
