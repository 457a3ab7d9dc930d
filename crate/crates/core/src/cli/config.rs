//! `key = value` configuration files. Blank lines and `#` comments are
//! ignored; keys use the long flag names (`n_max` and `n-max` are equal).
//! A key also present on the command line is ignored: flags win.

use std::ffi::OsString;
use std::path::Path;

use crate::error::{Error, Result};

const SWITCHES: [&str; 2] = ["parallel", "timings"];

fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: i + 1,
            column: 1,
            message,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected key = value, got {line:?}")))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key.starts_with('-') || key == "config" {
            return Err(parse_err(format!("invalid key {:?}", k.trim())));
        }
        if out.iter().any(|(existing, _)| *existing == key) {
            return Err(parse_err(format!("duplicate key {key:?}")));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn given(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefix = format!("{flag}=");
    args.iter().any(|a| a.to_str().is_some_and(|s| s == flag || s.starts_with(&prefix)))
}

/// Returns `args` extended by the config entries not already given as flags.
pub fn merge_config(args: &[OsString], path: &Path) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path)?;
    let mut merged = args.to_vec();
    for (key, value) in parse(&text)? {
        if given(args, &key) {
            continue;
        }
        if SWITCHES.contains(&key.as_str()) {
            match value.as_str() {
                "true" => merged.push(format!("--{key}").into()),
                "false" => {}
                _ => {
                    return Err(Error::BadParameter(format!("{key} must be true or false, got {value:?}")));
                }
            }
        } else {
            merged.push(format!("--{key}={value}").into());
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn flags_win_and_switches_expand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# comment\nh = 0.5\nn_max=3 # trailing\nparallel = true\n").unwrap();
        let args = os(&["interlace", "verify", "--h", "0.25"]);
        let merged = merge_config(&args, &path).unwrap();
        assert_eq!(merged, os(&["interlace", "verify", "--h", "0.25", "--n-max=3", "--parallel"]));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(parse("a = 1\nnonsense\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse("a=1\na=2").is_err());
        assert!(parse("config = x").is_err());
    }
}
