use std::fmt;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};
use dop::eval::{score_corpus_with, EvalOptions};
use dop::experiment::{run_experiment, ExperimentConfig, SweepDimension};
use dop::fragments::parse_bound;
use dop::headrules::HeadRuleTable;
use dop::model::FragmentModel;
use dop::oracle::{enumerate_derivations, exact_mpp, DEFAULT_DERIVATION_CAP};
use dop::parser::{ChartConfig, DopParser, DEFAULT_N_BEST, DEFAULT_PRUNE_RATIO};
use dop::train::{collect_fragments, model_from_bags, FragmentCache, TrainConfig};
use dop::treebank::{read_bracketed, read_trees, Tree, Treebank};
use dop::RestrictionSet;
use rayon::prelude::*;

mod config;

/// Marks an error as a usage mistake (exit code 1) rather than bad data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const NO_PARSE: &str = "NO-PARSE";

#[derive(Parser)]
#[command(name = "dop", version, about = "Data-oriented parsing: train, parse, score and sweep fragment restrictions")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract fragments from a treebank and write a model file.
    Train(TrainArgs),
    /// Parse one pre-tokenized sentence per line.
    Parse(ParseArgs),
    /// Sweep one restriction and print an LP/LR table.
    Experiment(ExperimentArgs),
    /// PARSEVAL scores of proposed trees against gold trees.
    Score(ScoreArgs),
    /// Enumerate every derivation exactly (small models only).
    Oracle(OracleArgs),
}

/// A restriction bound; `None` is unbounded. Aliased so clap treats it as a
/// plain value rather than an optional flag.
type Bound = Option<usize>;

fn bound(s: &str) -> Result<Bound, String> {
    parse_bound(s)
}

fn on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        _ => Err(format!("expected on or off, got {s:?}")),
    }
}

#[derive(Args, Clone)]
struct ConfigArg {
    /// Flat key=value file of option defaults; command-line flags win.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RestrictionArgs {
    /// Maximum fragment depth (`inf` for none).
    #[arg(long, default_value = "14", value_parser = bound)]
    max_depth: Bound,
    /// Maximum number of words on a fragment frontier.
    #[arg(long, default_value = "12", value_parser = bound)]
    max_frontier_words: Bound,
    /// Maximum depth of fragments without any word.
    #[arg(long, default_value = "6", value_parser = bound)]
    max_unlex_depth: Bound,
    /// Maximum number of frontier words other than the headword.
    #[arg(long, default_value = "inf", value_parser = bound)]
    max_nonheadwords: Bound,
    /// Fragments sampled per depth above 1 (`inf` extracts exhaustively).
    #[arg(long, default_value = "400000", value_parser = bound)]
    sample_per_depth: Bound,
}

impl RestrictionArgs {
    fn restriction(&self) -> RestrictionSet {
        RestrictionSet {
            max_depth: self.max_depth,
            max_frontier_words: self.max_frontier_words,
            max_unlexicalized_depth: self.max_unlex_depth,
            max_nonheadwords: self.max_nonheadwords,
            sample_per_depth: self.sample_per_depth,
        }
    }
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[command(flatten)]
    restriction: RestrictionArgs,
    /// Sampling seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Good-Turing smoothing of fragment counts.
    #[arg(long, default_value = "off", value_parser = on_off)]
    smoothing: bool,
    /// Training words seen at most this often inform the unknown-word model;
    /// 0 disables it.
    #[arg(long, default_value_t = 5)]
    unknown_threshold: u64,
    /// Head-rule file; the built-in table is used otherwise.
    #[arg(long, value_name = "FILE")]
    head_rules: Option<PathBuf>,
    /// Strip function tags and empty elements from training trees.
    #[arg(long)]
    normalize: bool,
}

impl ModelArgs {
    fn train_config(&self) -> Result<TrainConfig> {
        let head_rules = match &self.head_rules {
            Some(p) => HeadRuleTable::parse(&read_file(p)?).with_context(|| format!("head rules {}", p.display()))?,
            None => HeadRuleTable::collins(),
        };
        let restriction = self.restriction.restriction();
        restriction.validate().map_err(UsageError)?;
        Ok(TrainConfig {
            restriction,
            head_rules,
            seed: self.seed,
            smoothing: self.smoothing,
            unknown_threshold: (self.unknown_threshold > 0).then_some(self.unknown_threshold),
        })
    }
}

#[derive(Args, Clone)]
struct ChartArgs {
    /// Derivations kept per chart item.
    #[arg(long, default_value_t = DEFAULT_N_BEST)]
    n_best: usize,
    /// Prune items below this fraction of the best in their span (0 disables).
    #[arg(long, default_value_t = DEFAULT_PRUNE_RATIO)]
    prune_ratio: f64,
    /// Parser threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

impl ChartArgs {
    fn chart_config(&self) -> Result<ChartConfig> {
        let c = ChartConfig { n_best: self.n_best, prune_ratio: self.prune_ratio, ..ChartConfig::default() };
        c.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(c)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.workers {
            if n == 0 {
                bail!(UsageError("--workers must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        Ok(b.build()?)
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Training treebank in bracketed format.
    treebank: PathBuf,
    /// Model file to write.
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Args)]
struct ParseArgs {
    /// Model file written by `train`.
    #[arg(short, long)]
    model: PathBuf,
    /// Sentences, one per line, tokens separated by whitespace.
    sentences: PathBuf,
    /// Output file for trees (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Per-sentence TSV: index, tree probability, derivations, seconds.
    #[arg(long, value_name = "FILE")]
    stats: Option<PathBuf>,
    #[command(flatten)]
    chart: ChartArgs,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Training treebank.
    #[arg(long)]
    train: PathBuf,
    /// Test treebank; its yields are parsed and its trees are the gold standard.
    #[arg(long)]
    test: PathBuf,
    /// Restriction to sweep: depth, frontier-words, unlex-depth or nonheadwords.
    #[arg(long)]
    sweep: SweepDimension,
    /// Comma-separated bounds, e.g. `1,2,3,inf`.
    #[arg(long, value_delimiter = ',', value_parser = bound, required = true)]
    grid: Vec<Bound>,
    /// Directory for `<sweep>.tsv` and `<sweep>.fragments.tsv`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Skip test sentences longer than this.
    #[arg(long)]
    max_sentence_length: Option<usize>,
    /// Leave the root constituent out of scoring.
    #[arg(long)]
    exclude_root: bool,
    /// Write `-` in the seconds column so tables are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    chart: ChartArgs,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Args)]
struct ScoreArgs {
    /// Proposed trees, one per line (`NO-PARSE` for failures).
    proposed: PathBuf,
    /// Gold trees, one per line.
    gold: PathBuf,
    /// Leave the root constituent out of scoring.
    #[arg(long)]
    exclude_root: bool,
    /// Per-sentence TSV report.
    #[arg(long, value_name = "FILE")]
    tsv: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Model file written by `train`.
    #[arg(short, long)]
    model: PathBuf,
    /// Sentences, one per line.
    sentences: PathBuf,
    /// Give up beyond this many derivations per sentence.
    #[arg(long, default_value_t = DEFAULT_DERIVATION_CAP)]
    cap: usize,
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_treebank(path: &Path, normalize: bool) -> Result<Treebank> {
    let tb = read_bracketed(&read_file(path)?).with_context(|| format!("in {}", path.display()))?;
    if tb.is_empty() {
        bail!("{} contains no trees", path.display());
    }
    if !normalize {
        return Ok(tb);
    }
    let (tb, skipped) = tb.normalized();
    if !skipped.is_empty() {
        log::warn!("{}: {} tree(s) empty after normalization were dropped", path.display(), skipped.len());
    }
    Ok(tb)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing to stdout"),
    }
}

fn load_model(path: &Path) -> Result<FragmentModel> {
    FragmentModel::from_text(&read_file(path)?).with_context(|| format!("loading model {}", path.display()))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let cfg = a.model.train_config()?;
    let tb = read_treebank(&a.treebank, a.model.normalize)?;
    let r = cfg.restriction;
    let bags = collect_fragments(&tb, r.max_depth, r.sample_per_depth, cfg.seed)?;
    let model = model_from_bags(&tb, bags.values(), &cfg)?;
    fs::write(&a.output, model.to_text()).with_context(|| format!("cannot write {}", a.output.display()))?;
    println!("depth\tdistinct\ttokens");
    for (d, bag) in &bags {
        println!("{d}\t{}\t{}", bag.len(), bag.iter().map(|b| b.1).sum::<u64>());
    }
    let tokens: u64 = model.roots().values().map(|s| s.raw_total).sum();
    println!("kept\t{}\t{tokens}", model.len());
    Ok(())
}

fn cmd_parse(a: ParseArgs) -> Result<()> {
    let chart = a.chart.chart_config()?;
    let model = load_model(&a.model)?;
    let text = read_file(&a.sentences)?;
    let sentences: Vec<&str> = text.lines().collect();
    let parser = DopParser::new(&model, chart).map_err(|e| UsageError(e.to_string()))?;
    let pool = a.chart.pool()?;
    let results: Vec<(String, String)> = pool.install(|| {
        sentences
            .par_iter()
            .enumerate()
            .map(|(i, line)| {
                let words: Vec<&str> = line.split_whitespace().collect();
                let started = Instant::now();
                let parsed = parser.parse(&words);
                let secs = started.elapsed().as_secs_f64();
                match parsed {
                    Ok(p) => (
                        p.result.tree.to_string(),
                        format!("{i}\t{}\t{}\t{secs:.3}", p.result.probability, p.derivations.len()),
                    ),
                    Err(e) => {
                        log::warn!("sentence {i}: {e}");
                        (NO_PARSE.to_string(), format!("{i}\t0\t0\t{secs:.3}"))
                    }
                }
            })
            .collect()
    });
    let mut trees = String::new();
    let mut stats = String::from("sentence\tprobability\tderivations\tseconds\n");
    for (t, s) in &results {
        trees.push_str(t);
        trees.push('\n');
        stats.push_str(s);
        stats.push('\n');
    }
    write_output(a.output.as_deref(), &trees)?;
    if let Some(p) = &a.stats {
        fs::write(p, stats).with_context(|| format!("cannot write {}", p.display()))?;
    }
    let failed = results.iter().filter(|(t, _)| t == NO_PARSE).count();
    log::info!("parsed {} sentence(s), {failed} without a parse", results.len());
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let train_cfg = a.model.train_config()?;
    let chart = a.chart.chart_config()?;
    if a.chart.workers == Some(0) {
        bail!(UsageError("--workers must be at least 1".into()));
    }
    let train = read_treebank(&a.train, a.model.normalize)?;
    let mut test = read_treebank(&a.test, a.model.normalize)?.trees;
    if let Some(n) = a.max_sentence_length {
        test.retain(|t| t.words().len() <= n);
    }
    let cfg = ExperimentConfig {
        dimension: a.sweep,
        grid: a.grid,
        train: train_cfg,
        chart,
        eval: EvalOptions { exclude_root: a.exclude_root },
        workers: a.chart.workers,
        timing: !a.no_timing,
    };
    let report = run_experiment(&train, &test, &cfg, &mut FragmentCache::new());
    let table = report.to_table();
    print!("{table}");
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        fs::write(dir.join(format!("{}.tsv", cfg.dimension)), &table)?;
        fs::write(dir.join(format!("{}.fragments.tsv", cfg.dimension)), report.fragments_table())?;
    }
    Ok(())
}

/// Non-blank lines with their 1-based line numbers.
fn numbered_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty()).collect()
}

fn parse_line(path: &Path, n: usize, line: &str) -> Result<Tree> {
    let mut trees = read_trees(line).with_context(|| format!("{} line {n}", path.display()))?;
    if trees.len() != 1 {
        bail!("{} line {n}: expected one tree, found {}", path.display(), trees.len());
    }
    Ok(trees.remove(0))
}

fn cmd_score(a: ScoreArgs) -> Result<()> {
    let (ptext, gtext) = (read_file(&a.proposed)?, read_file(&a.gold)?);
    let (plines, glines) = (numbered_lines(&ptext), numbered_lines(&gtext));
    if plines.len() != glines.len() {
        let k = plines.len().min(glines.len());
        let line = |v: &[(usize, &str)]| v.get(k).map_or_else(|| "end of file".to_string(), |(n, _)| format!("line {n}"));
        bail!(
            "files are misaligned: {} has {} trees and {} has {}; first unmatched entry at {} / {}",
            a.proposed.display(),
            plines.len(),
            a.gold.display(),
            glines.len(),
            line(&plines),
            line(&glines)
        );
    }
    let mut pairs = Vec::with_capacity(glines.len());
    for (&(pn, p), &(gn, g)) in plines.iter().zip(&glines) {
        let gold = parse_line(&a.gold, gn, g)?;
        let proposed = if p == NO_PARSE { None } else { Some(parse_line(&a.proposed, pn, p)?) };
        if let Some(t) = &proposed {
            if t.words() != gold.words() {
                bail!("files are misaligned at line {pn}: proposed and gold yields differ");
            }
        }
        pairs.push((proposed, gold));
    }
    let report = score_corpus_with(&pairs, EvalOptions { exclude_root: a.exclude_root });
    for (name, t) in [("<=40", &report.upto40), ("<=100", &report.upto100), ("all", &report.all)] {
        println!(
            "{name}\tsentences {}\tno-parse {}\tLP {:.1}\tLR {:.1}",
            t.sentences,
            t.no_parse,
            100.0 * t.precision(),
            100.0 * t.recall()
        );
    }
    if let Some(p) = &a.tsv {
        fs::write(p, report.to_tsv()).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let text = read_file(&a.sentences)?;
    let mut out = String::new();
    for (i, line) in text.lines().enumerate() {
        let words: Vec<&str> = line.split_whitespace().collect();
        out.push_str(&format!("# sentence {i}\t{line}\n"));
        match enumerate_derivations(&model, &words, a.cap) {
            Ok(report) => {
                out.push_str(&format!("# derivations {}\n", report.derivations.len()));
                if let Some(t) = exact_mpp(&report) {
                    out.push_str(&format!("# mpp {t}\n"));
                }
                out.push_str(&report.to_tsv());
            }
            Err(e) => out.push_str(&format!("# error {e}\n")),
        }
    }
    write_output(None, &out)
}

fn run(args: Vec<String>) -> Result<()> {
    let args = config::expand(args, &Cli::command())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => bail!(UsageError(e.to_string())),
    };
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Parse(a) => cmd_parse(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Score(a) => cmd_score(a),
        Command::Oracle(a) => cmd_oracle(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprint!("{e}");
            if !e.to_string().ends_with('\n') {
                eprintln!();
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
