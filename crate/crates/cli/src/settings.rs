//! Flat `key = value` configuration shared by every command.
//!
//! A command starts from its defaults, then applies a `--config` file, then
//! the flags given on the command line. The resolved table is echoed into
//! the output header as `# key = value` lines, so stripping the `# ` prefix
//! gives back a valid config file.

use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Settings {
    pub command: String,
    values: BTreeMap<String, String>,
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_flat(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("line {}: expected `key = value`, got `{line}`", lineno + 1));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k.contains(char::is_whitespace) {
            return Err(format!("line {}: bad key `{k}`", lineno + 1));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(format!("line {}: duplicate key `{k}`", lineno + 1));
        }
    }
    Ok(out)
}

impl Settings {
    pub fn new(command: &str, defaults: &[(&str, &str)]) -> Self {
        Self {
            command: command.to_string(),
            values: defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    /// Applies `entries`; keys the command does not know are an error.
    pub fn overlay(&mut self, entries: &BTreeMap<String, String>, origin: &str) -> Result<(), String> {
        for (k, v) in entries {
            self.set(k, v).map_err(|e| format!("{origin}: {e}"))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(format!("unknown key `{key}` for `{}`", self.command)),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn f64(&self, key: &str) -> Result<f64, String> {
        let s = self.get(key);
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("`{key}` must be a finite number, got `{s}`")),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize, String> {
        let s = self.get(key);
        s.parse::<usize>()
            .map_err(|_| format!("`{key}` must be a non-negative integer, got `{s}`"))
    }

    pub fn u64(&self, key: &str) -> Result<u64, String> {
        let s = self.get(key);
        s.parse::<u64>()
            .map_err(|_| format!("`{key}` must be a non-negative integer, got `{s}`"))
    }

    /// `None` for the literal `auto`.
    pub fn f64_or_auto(&self, key: &str) -> Result<Option<f64>, String> {
        if self.get(key) == "auto" {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    pub fn header(&self) -> String {
        let mut s = format!("# memdiff {}\n", self.command);
        for (k, v) in &self.values {
            let _ = writeln!(s, "# {k} = {v}");
        }
        s
    }

    /// Reads back the config echoed by [`Settings::header`] from the start
    /// of an output file. `##` result lines are skipped.
    pub fn from_header(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let command = lines
            .next()
            .and_then(|l| l.strip_prefix("# memdiff "))
            .ok_or("missing `# memdiff <command>` line")?
            .trim()
            .to_string();
        let mut body = String::new();
        for line in lines {
            if line.starts_with("##") {
                continue;
            }
            let Some(rest) = line.strip_prefix("# ") else {
                break;
            };
            body.push_str(rest);
            body.push('\n');
        }
        Ok(Self {
            command,
            values: parse_flat(&body)?,
        })
    }
}
