use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TOY: &str = "(S (NP john) (VP (V likes) (NP mary)))\n(S (NP peter) (VP (V hates) (NP susan)))\n";

fn dop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dop")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn train_toy(dir: &Path, extra: &[&str]) -> PathBuf {
    let tb = write(dir, "toy.mrg", TOY);
    let model = dir.join("toy.model");
    let mut args = vec!["train", s(&tb), "-o", s(&model), "--max-depth", "inf", "--sample-per-depth", "inf"];
    args.extend_from_slice(extra);
    let o = dop(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    model
}

#[test]
fn train_reports_exhaustive_counts_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let model = train_toy(dir.path(), &[]);
    let first = fs::read(&model).unwrap();
    let tb = dir.path().join("toy.mrg");
    let o = dop(&["train", s(&tb), "-o", s(&model), "--max-depth", "inf", "--sample-per-depth", "inf"]);
    assert!(stdout(&o).contains("kept\t31\t34\n"), "{}", stdout(&o));
    assert_eq!(fs::read(&model).unwrap(), first);
}

#[test]
fn parse_toy_sentence() {
    let dir = TempDir::new().unwrap();
    let model = train_toy(dir.path(), &[]);
    let sents = write(dir.path(), "s.txt", "john likes mary\n\nbob likes mary\n");
    let stats = dir.path().join("stats.tsv");
    let o = dop(&["parse", "-m", s(&model), s(&sents), "--stats", s(&stats), "--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines[0], "(S (NP john) (VP (V likes) (NP mary)))");
    assert_eq!(lines[1], "NO-PARSE");
    // "bob" is unknown: every toy word occurs once, so it is guessed from the rare words
    assert_eq!(lines[2], "(S (NP bob) (VP (V likes) (NP mary)))");
    let stats = fs::read_to_string(&stats).unwrap();
    assert_eq!(stats.lines().count(), 4);
    assert!(stats.lines().nth(1).unwrap().starts_with("0\t0.1375"));
}

#[test]
fn parse_empty_input() {
    let dir = TempDir::new().unwrap();
    let model = train_toy(dir.path(), &[]);
    let sents = write(dir.path(), "empty.txt", "");
    let stats = dir.path().join("stats.tsv");
    let o = dop(&["parse", "-m", s(&model), s(&sents), "--stats", s(&stats)]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(fs::read_to_string(&stats).unwrap().lines().count(), 1);
}

#[test]
fn parse_single_unknown_word() {
    let dir = TempDir::new().unwrap();
    let tb = write(dir.path(), "u.mrg", "(S (VP (V runs)))\n(S (NP kim) (VP (V walks)))\n(S (NP lee) (VP (V runs)))\n");
    let model = dir.path().join("u.model");
    let o = dop(&["train", s(&tb), "-o", s(&model), "--sample-per-depth", "inf", "--unknown-threshold", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sents = write(dir.path(), "s.txt", "sleeps\n");
    let o = dop(&["parse", "-m", s(&model), s(&sents)]);
    assert_eq!(stdout(&o).trim(), "(S (VP (V sleeps)))");
}

#[test]
fn score_reports_bins() {
    let dir = TempDir::new().unwrap();
    let gold = "(S (NP (D a) (N b)) (VP (X (V c)) (Y (P d))))\n(S (A (x x) (y y)) (Z z))\n";
    let proposed = "(S (NP (D a) (N b)) (VP (V c) (PP (P d))))\n(S (A (x x) (y y)) (Z z))\n";
    let g = write(dir.path(), "gold.mrg", gold);
    let p = write(dir.path(), "prop.mrg", proposed);
    let o = dop(&["score", s(&p), s(&g)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("all\tsentences 2\tno-parse 0\tLP 83.3\tLR 71.4"), "{}", stdout(&o));
    let o = dop(&["score", s(&g), s(&g)]);
    assert!(stdout(&o).contains("LP 100.0\tLR 100.0"));

    let words: Vec<String> = (0..45).map(|i| format!("(W w{i})")).collect();
    let long = write(dir.path(), "long.mrg", &format!("(S {})\n", words.join(" ")));
    let o = dop(&["score", s(&long), s(&long)]);
    let out = stdout(&o);
    assert!(out.contains("<=40\tsentences 0"), "{out}");
    assert!(out.contains("<=100\tsentences 1"), "{out}");
}

#[test]
fn score_misaligned_files() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "gold.mrg", "(S (A a))\n(S (B b))\n");
    let p = write(dir.path(), "prop.mrg", "(S (A a))\n");
    let o = dop(&["score", s(&p), s(&g)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    let p = write(dir.path(), "prop2.mrg", "(S (A a))\n(S (C c))\n");
    let o = dop(&["score", s(&p), s(&g)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn exit_codes() {
    assert_eq!(dop(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(dop(&["parse", "-m", "x", "y", "--n-best", "0"]).status.code(), Some(1));
    assert_eq!(dop(&["train", "/nonexistent/file", "-o", "m"]).status.code(), Some(2));
    assert_eq!(dop(&["--help"]).status.code(), Some(0));
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.mrg", "(S (NP john)\n");
    let o = dop(&["train", s(&bad), "-o", s(&dir.path().join("m"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn experiment_is_deterministic_and_marks_failures() {
    let dir = TempDir::new().unwrap();
    let train = write(
        dir.path(),
        "train.mrg",
        &(TOY.to_string() + "(S (NP mary) (VP (V likes) (NP peter)))\n(S (NP susan) (VP (V hates) (NP john)))\n"),
    );
    let out = dir.path().join("out");
    let args = [
        "experiment", "--train", s(&train), "--test", s(&train), "--sweep", "depth", "--grid", "0,1,2,inf",
        "--sample-per-depth", "50", "--seed", "9", "--no-timing", "--out-dir", s(&out),
    ];
    let a = dop(&args);
    let b = dop(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let table = stdout(&a);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "depth of subtrees\tLP\tLR\tseconds");
    assert_eq!(lines[1], "0\tFAILED\tFAILED\t-");
    assert!(lines[2].starts_with("1\t") && lines[3].starts_with("<=2\t") && lines[4].starts_with("unrestricted\t"));
    assert_eq!(fs::read_to_string(out.join("depth.tsv")).unwrap(), table);
    let frag = fs::read_to_string(out.join("depth.fragments.tsv")).unwrap();
    let sizes: Vec<usize> = frag.lines().skip(2).map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert!(sizes.windows(2).all(|w| w[0] <= w[1]), "{frag}");
}

#[test]
fn config_file_and_command_line_precedence() {
    let dir = TempDir::new().unwrap();
    let tb = write(dir.path(), "toy.mrg", TOY);
    let cfg = write(dir.path(), "c.cfg", "# depth-1 model\nmax_depth = 1\nsample_per_depth = inf\n");
    let model = dir.path().join("m");
    let o = dop(&["train", "--config", s(&cfg), s(&tb), "-o", s(&model)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("kept\t8\t10\n"), "{}", stdout(&o));
    let o = dop(&["train", s(&tb), "-o", s(&model), "--config", s(&cfg), "--max-depth", "inf"]);
    assert!(stdout(&o).contains("kept\t31\t34\n"), "{}", stdout(&o));
    let bad = write(dir.path(), "bad.cfg", "no_such_option = 3\n");
    assert_eq!(dop(&["train", "--config", s(&bad), s(&tb), "-o", s(&model)]).status.code(), Some(1));
}

#[test]
fn oracle_prints_exact_fractions() {
    let dir = TempDir::new().unwrap();
    let model = train_toy(dir.path(), &[]);
    let sents = write(dir.path(), "s.txt", "john likes mary\n");
    let o = dop(&["oracle", "-m", s(&model), s(&sents)]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("# derivations 16\n"));
    assert!(out.contains("(S (NP john) (VP (V likes) (NP mary)))\t11/80\t16\n"), "{out}");
}
