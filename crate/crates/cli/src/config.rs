//! `--config FILE` support: flat `key=value` lines become command-line flags
//! placed before the user's own arguments, so explicit flags win.

use std::fs;

use clap::Command;

use crate::UsageError;

fn config_path(args: &[String]) -> Option<(usize, usize, String)> {
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            return args.get(i + 1).map(|p| (i, 2, p.clone()));
        }
        if let Some(p) = args[i].strip_prefix("--config=") {
            return Some((i, 1, p.to_string()));
        }
        i += 1;
    }
    None
}

/// Parses config text into `(key, value)` pairs, skipping blanks and `#`
/// comments.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, UsageError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| UsageError(format!("config line {}: expected key=value, got {line:?}", n + 1)))?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Returns `args` with the config file, if any, expanded in place.
pub fn expand(args: Vec<String>, cli: &Command) -> Result<Vec<String>, UsageError> {
    let Some((at, width, path)) = config_path(&args) else { return Ok(args) };
    let text = fs::read_to_string(&path).map_err(|e| UsageError(format!("cannot read config {path}: {e}")))?;
    let Some(sub_at) = (1..args.len()).find(|&i| !(at..at + width).contains(&i) && !args[i].starts_with('-')) else {
        return Err(UsageError("--config needs a subcommand".into()));
    };
    let sub = cli
        .find_subcommand(&args[sub_at])
        .ok_or_else(|| UsageError(format!("unknown subcommand {:?}", args[sub_at])))?;
    let mut injected = Vec::new();
    for (key, value) in parse_config(&text)? {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| UsageError(format!("config key {key:?} is not an option of {}", sub.get_name())))?;
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}={value}"));
        } else {
            match value.as_str() {
                "true" | "on" | "yes" | "1" => injected.push(format!("--{key}")),
                "false" | "off" | "no" | "0" => {}
                _ => return Err(UsageError(format!("config key {key:?} expects true or false"))),
            }
        }
    }
    let mut out: Vec<String> = Vec::with_capacity(args.len() + injected.len());
    for (i, a) in args.into_iter().enumerate() {
        if i >= at && i < at + width {
            continue;
        }
        out.push(a);
        if i == sub_at {
            out.append(&mut injected);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs() {
        let kv = parse_config("# comment\nmax_depth = 3\n\nseed=7\n").unwrap();
        assert_eq!(kv, vec![("max-depth".into(), "3".into()), ("seed".into(), "7".into())]);
        assert!(parse_config("oops").is_err());
    }
}
