//! Merges a TOML configuration file into the argument list.
//!
//! Top-level keys apply to every command; a table named after a command word
//! (and nested tables for sub-words) applies to that command only, with deeper
//! tables winning. Keys are long flag names. A flag already present on the
//! command line is left alone, so flags take precedence over the file.

use std::collections::BTreeMap;
use std::fs;

use toml::{Table, Value};

fn flag_value(v: &Value) -> Result<Option<Vec<String>>, String> {
    Ok(Some(match v {
        Value::Boolean(true) => Vec::new(),
        Value::Boolean(false) => return Ok(None),
        Value::String(s) => vec![s.clone()],
        Value::Integer(i) => vec![i.to_string()],
        Value::Float(f) => vec![f.to_string()],
        Value::Array(items) => {
            let parts: Result<Vec<String>, String> = items
                .iter()
                .map(|x| match x {
                    Value::String(s) => Ok(s.clone()),
                    Value::Integer(i) => Ok(i.to_string()),
                    Value::Float(f) => Ok(f.to_string()),
                    other => Err(format!("unsupported array element {other}")),
                })
                .collect();
            vec![parts?.join(",")]
        }
        other => return Err(format!("unsupported value {other}")),
    }))
}

fn collect(table: &Table, words: &[String], out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        if !v.is_table() {
            out.insert(k.clone(), v.clone());
        }
    }
    if let Some((first, rest)) = words.split_first() {
        if let Some(Value::Table(sub)) = table.get(first) {
            collect(sub, rest, out);
        }
    }
}

/// Removes `--config PATH` from `argv` and appends the file's settings.
pub fn merge(mut argv: Vec<String>) -> Result<(Vec<String>, Option<String>), String> {
    let pos = argv.iter().position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else {
        return Ok((argv, None));
    };
    let path = if let Some(p) = argv[pos].strip_prefix("--config=") {
        let p = p.to_string();
        argv.remove(pos);
        p
    } else {
        if pos + 1 >= argv.len() {
            return Err("--config needs a path".into());
        }
        let p = argv.remove(pos + 1);
        argv.remove(pos);
        p
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let table: Table = text.parse().map_err(|e| format!("invalid config {path}: {e}"))?;
    let words: Vec<String> = argv.iter().skip(1).take_while(|a| !a.starts_with('-')).cloned().collect();
    let mut settings = BTreeMap::new();
    collect(&table, &words, &mut settings);
    for (key, value) in settings {
        let flag = format!("--{key}");
        let present = argv.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if present {
            continue;
        }
        if let Some(values) = flag_value(&value).map_err(|e| format!("config key `{key}`: {e}"))? {
            argv.push(flag);
            argv.extend(values);
        }
    }
    Ok((argv, Some(path)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn flags_beat_file_and_tables_nest() {
        let mut f = tempfile_path("nest");
        writeln!(f.1, "trials = 10\n[ensemble]\nbeta = 1\n[ensemble.mc-exponent]\neps = [0.4, 0.2]\nbeta = 2\n").unwrap();
        let (argv, path) = merge(args(&format!("gapless ensemble mc-exponent --trials 5 --config {}", f.0))).unwrap();
        assert_eq!(path.as_deref(), Some(f.0.as_str()));
        assert_eq!(argv, args("gapless ensemble mc-exponent --trials 5 --beta 2 --eps 0.4,0.2"));
    }

    #[test]
    fn booleans_and_missing_path() {
        let mut f = tempfile_path("bool");
        writeln!(f.1, "periodic = true\nverbose = false").unwrap();
        let (argv, _) = merge(args(&format!("gapless ham random --config={}", f.0))).unwrap();
        assert_eq!(argv, args("gapless ham random --periodic"));
        assert!(merge(args("gapless ham random --config")).is_err());
        assert!(merge(args("gapless ham random --config /nonexistent/x.toml")).is_err());
    }

    fn tempfile_path(tag: &str) -> (String, fs::File) {
        let p = std::env::temp_dir().join(format!("gapless-config-{tag}-{}.toml", std::process::id()));
        let f = fs::File::create(&p).unwrap();
        (p.to_string_lossy().into_owned(), f)
    }
}
