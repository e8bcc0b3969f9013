//! The optional `key = value` settings file behind `--config`.
//!
//! Keys are long flag names without the leading dashes. Flags given on the
//! command line win over the file. `true` enables a switch, `false` leaves it off.

use std::path::Path;

use crate::error::{CliError, CliResult};
use crate::io::read_text;

pub fn parse_config(path: &Path) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in read_text(path)?.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::parse(path, i + 1, "<line>", "expected key = value"))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(CliError::parse(path, i + 1, "<key>", "empty key"));
        }
        let value = value.trim().trim_matches('"').to_owned();
        out.push((key, value));
    }
    Ok(out)
}

fn given(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefixed = format!("{flag}=");
    args.iter().any(|a| *a == flag || a.starts_with(&prefixed))
}

/// Remove `--config FILE` from `args` and splice the file's settings in after
/// the subcommand, skipping keys already given as flags.
pub fn apply_config(args: Vec<String>) -> CliResult<Vec<String>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let path = it
                .next()
                .ok_or_else(|| CliError::Usage("--config needs a file path".into()))?;
            config = Some(path);
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_owned());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let settings = parse_config(Path::new(&path))?;
    let mut injected = Vec::new();
    for (key, value) in settings {
        if given(&rest, &key) {
            continue;
        }
        match value.as_str() {
            "true" => injected.push(format!("--{key}")),
            "false" => {}
            _ => {
                injected.push(format!("--{key}"));
                injected.push(value);
            }
        }
    }
    // the subcommand is the first argument after the program name
    let at = rest.len().min(2);
    rest.splice(at..at, injected);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# settings\nseed = 3\nepochs=4\nwhole_corpus = true\nverbose = false\n",
        )
        .unwrap();
        let out = apply_config(args(&[
            "bin",
            "train",
            "--config",
            path.to_str().unwrap(),
            "--seed",
            "9",
        ]))
        .unwrap();
        assert_eq!(
            out,
            args(&[
                "bin",
                "train",
                "--epochs",
                "4",
                "--whole-corpus",
                "--seed",
                "9"
            ])
        );
    }

    #[test]
    fn malformed_line_names_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        std::fs::write(&path, "seed = 1\njunk\n").unwrap();
        let err = parse_config(&path).unwrap_err().to_string();
        assert!(err.contains("bad.conf:2"), "{err}");
    }
}
