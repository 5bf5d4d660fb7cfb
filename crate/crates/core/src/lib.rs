//! Data-Oriented Parsing: tree fragments extracted from a treebank, combined
//! by leftmost substitution, with parses ranked by summed derivation
//! probability.

pub mod eval;
pub mod experiment;
pub mod fragments;
pub mod headrules;
pub mod model;
pub mod oracle;
pub mod parser;
pub mod synth;
pub mod train;
pub mod treebank;
pub mod unknown;

pub use fragments::{Fragment, FragmentKey, RestrictionSet};
pub use headrules::HeadRuleTable;
pub use model::FragmentModel;
pub use parser::{DopParser, ParseResult};
pub use treebank::{Tree, Treebank};
