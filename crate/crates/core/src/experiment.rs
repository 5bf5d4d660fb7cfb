//! Sweeps over one fragment restriction, training and evaluating a model at
//! every grid point.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::eval::{score_corpus_with, EvalOptions};
use crate::fragments::RestrictionSet;
use crate::parser::{ChartConfig, DopParser};
use crate::train::{model_from_bags, treebank_digest, FragmentCache, TrainConfig};
use crate::treebank::{Tree, Treebank};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDimension {
    Depth,
    FrontierWords,
    UnlexicalizedDepth,
    Nonheadwords,
}

impl FromStr for SweepDimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "depth" => Ok(SweepDimension::Depth),
            "frontier-words" | "words" => Ok(SweepDimension::FrontierWords),
            "unlex-depth" => Ok(SweepDimension::UnlexicalizedDepth),
            "nonheadwords" => Ok(SweepDimension::Nonheadwords),
            _ => Err(format!("unknown sweep dimension {s:?} (depth, frontier-words, unlex-depth, nonheadwords)")),
        }
    }
}

impl fmt::Display for SweepDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepDimension::Depth => "depth",
            SweepDimension::FrontierWords => "frontier-words",
            SweepDimension::UnlexicalizedDepth => "unlex-depth",
            SweepDimension::Nonheadwords => "nonheadwords",
        })
    }
}

impl SweepDimension {
    /// `base` with this dimension's bound replaced.
    pub fn apply(self, base: RestrictionSet, bound: Option<usize>) -> RestrictionSet {
        let mut r = base;
        match self {
            SweepDimension::Depth => r.max_depth = bound,
            SweepDimension::FrontierWords => r.max_frontier_words = bound,
            SweepDimension::UnlexicalizedDepth => r.max_unlexicalized_depth = bound,
            SweepDimension::Nonheadwords => r.max_nonheadwords = bound,
        }
        r
    }

    fn header(self) -> &'static str {
        match self {
            SweepDimension::Depth => "depth of subtrees",
            SweepDimension::FrontierWords => "number of words",
            SweepDimension::UnlexicalizedDepth => "depth of unlexicalized subtrees",
            SweepDimension::Nonheadwords => "number of nonheadwords",
        }
    }

    /// Row label: the exact value at the smallest meaningful bound, `<=k`
    /// above it, `unrestricted` for no bound.
    pub fn label(self, bound: Option<usize>) -> String {
        let floor = if self == SweepDimension::Depth { 1 } else { 0 };
        match bound {
            None => "unrestricted".into(),
            Some(b) if b <= floor => b.to_string(),
            Some(b) => format!("<={b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dimension: SweepDimension,
    pub grid: Vec<Option<usize>>,
    /// Restriction and training options shared by every grid point.
    pub train: TrainConfig,
    pub chart: ChartConfig,
    pub eval: EvalOptions,
    /// Parser threads; `None` uses all cores.
    pub workers: Option<usize>,
    /// When false the seconds column is written as `-`, making the table
    /// byte-identical across runs.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowScores {
    pub lp: f64,
    pub lr: f64,
    pub sentences: usize,
    pub no_parse: usize,
    pub distinct_fragments: usize,
    pub fragment_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub bound: Option<usize>,
    pub restriction: RestrictionSet,
    pub outcome: Result<RowScores, String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub dimension: SweepDimension,
    pub timing: bool,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentReport {
    /// `bound<TAB>LP<TAB>LR<TAB>seconds`, LP and LR in percent.
    pub fn to_table(&self) -> String {
        let mut out = format!("{}\tLP\tLR\tseconds\n", self.dimension.header());
        for row in &self.rows {
            let secs = if self.timing { format!("{:.2}", row.seconds) } else { "-".into() };
            let label = self.dimension.label(row.bound);
            let _ = match &row.outcome {
                Ok(s) => writeln!(out, "{label}\t{:.2}\t{:.2}\t{secs}", 100.0 * s.lp, 100.0 * s.lr),
                Err(_) => writeln!(out, "{label}\tFAILED\tFAILED\t{secs}"),
            };
        }
        out
    }

    /// Companion log of model sizes per row, for checking that looser bounds
    /// keep more fragments.
    pub fn fragments_table(&self) -> String {
        let mut out = String::from("bound\tdistinct_fragments\tfragment_tokens\tno_parse\tnote\n");
        for row in &self.rows {
            let label = self.dimension.label(row.bound);
            let _ = match &row.outcome {
                Ok(s) => writeln!(out, "{label}\t{}\t{}\t{}\t", s.distinct_fragments, s.fragment_tokens, s.no_parse),
                Err(e) => writeln!(out, "{label}\t-\t-\t-\t{e}"),
            };
        }
        out
    }
}

fn run_point(
    train: &Treebank,
    digest: &str,
    test: &[Tree],
    cfg: &ExperimentConfig,
    restriction: RestrictionSet,
    cache: &mut FragmentCache,
    pool: &rayon::ThreadPool,
) -> Result<RowScores, String> {
    let bags = cache
        .bags(train, digest, restriction.max_depth, restriction.sample_per_depth, cfg.train.seed)
        .map_err(|e| e.to_string())?;
    let tc = TrainConfig { restriction, ..cfg.train.clone() };
    let model = model_from_bags(train, bags.iter().map(|b| &**b), &tc).map_err(|e| e.to_string())?;
    let parser = DopParser::new(&model, cfg.chart).map_err(|e| e.to_string())?;
    let proposals: Vec<Option<Tree>> = pool.install(|| {
        test.par_iter()
            .map(|gold| {
                let words = gold.words();
                parser.parse(&words).ok().map(|p| p.result.tree)
            })
            .collect()
    });
    let pairs: Vec<(Option<Tree>, Tree)> = proposals.into_iter().zip(test.iter().cloned()).collect();
    let report = score_corpus_with(&pairs, cfg.eval);
    Ok(RowScores {
        lp: report.all.precision(),
        lr: report.all.recall(),
        sentences: report.all.sentences,
        no_parse: report.all.no_parse,
        distinct_fragments: model.len(),
        fragment_tokens: model.roots().values().map(|r| r.raw_total).sum(),
    })
}

/// Trains and evaluates one model per grid point. A failing point yields a
/// FAILED row and the sweep continues.
pub fn run_experiment(train: &Treebank, test: &[Tree], cfg: &ExperimentConfig, cache: &mut FragmentCache) -> ExperimentReport {
    let digest = treebank_digest(train);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().expect("thread pool");
    let mut rows = Vec::with_capacity(cfg.grid.len());
    for &bound in &cfg.grid {
        let restriction = cfg.dimension.apply(cfg.train.restriction, bound);
        let started = Instant::now();
        let outcome = run_point(train, &digest, test, cfg, restriction, cache, &pool);
        let seconds = started.elapsed().as_secs_f64();
        match &outcome {
            Ok(s) => log::info!(
                "{} {}: LP {:.2} LR {:.2} ({} fragments, {:.1}s)",
                cfg.dimension,
                cfg.dimension.label(bound),
                100.0 * s.lp,
                100.0 * s.lr,
                s.distinct_fragments,
                seconds
            ),
            Err(e) => log::error!("{} {}: {e}", cfg.dimension, cfg.dimension.label(bound)),
        }
        rows.push(ExperimentRow { bound, restriction, outcome, seconds });
    }
    ExperimentReport { dimension: cfg.dimension, timing: cfg.timing, rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SyntheticGrammar;

    fn config(dimension: SweepDimension, grid: Vec<Option<usize>>) -> ExperimentConfig {
        ExperimentConfig {
            dimension,
            grid,
            train: TrainConfig {
                restriction: RestrictionSet { sample_per_depth: Some(300), ..RestrictionSet::unbounded() },
                seed: 5,
                ..TrainConfig::default()
            },
            chart: ChartConfig { n_best: 50, ..ChartConfig::default() },
            eval: EvalOptions::default(),
            workers: Some(2),
            timing: false,
        }
    }

    #[test]
    fn labels() {
        assert_eq!(SweepDimension::Depth.label(Some(1)), "1");
        assert_eq!(SweepDimension::Depth.label(Some(3)), "<=3");
        assert_eq!(SweepDimension::Nonheadwords.label(Some(0)), "0");
        assert_eq!(SweepDimension::FrontierWords.label(None), "unrestricted");
        assert_eq!("unlex-depth".parse(), Ok(SweepDimension::UnlexicalizedDepth));
    }

    #[test]
    fn depth_sweep_is_deterministic_and_monotone_in_size() {
        let g = SyntheticGrammar::english();
        let train = g.generate(40, 8, 1);
        let test: Vec<Tree> = g.generate(5, 6, 2).trees;
        let cfg = config(SweepDimension::Depth, vec![Some(1), Some(2), Some(3)]);
        let a = run_experiment(&train, &test, &cfg, &mut FragmentCache::new());
        let b = run_experiment(&train, &test, &cfg, &mut FragmentCache::new());
        assert_eq!(a.to_table(), b.to_table());
        assert!(a.to_table().starts_with("depth of subtrees\tLP\tLR\tseconds\n1\t"));
        let sizes: Vec<usize> = a.rows.iter().map(|r| r.outcome.as_ref().unwrap().distinct_fragments).collect();
        assert!(sizes.windows(2).all(|w| w[0] <= w[1]), "{sizes:?}");
    }

    #[test]
    fn failed_point_does_not_stop_the_sweep() {
        let g = SyntheticGrammar::english();
        let train = g.generate(20, 8, 1);
        let test = g.generate(2, 6, 2).trees;
        // a zero depth bound is rejected at training time
        let cfg = config(SweepDimension::Depth, vec![Some(0), Some(2)]);
        let r = run_experiment(&train, &test, &cfg, &mut FragmentCache::new());
        assert!(r.rows[0].outcome.is_err());
        assert!(r.rows[1].outcome.is_ok());
        assert!(r.to_table().contains("0\tFAILED\tFAILED\t-\n"));
    }
}
