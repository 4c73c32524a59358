//! Flat `key=value` configuration: file values, overridden by flags, with the
//! resolved set echoed back to `config.resolved`.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
/// Hyphens in keys are read as underscores.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("config line {}: expected key=value, got `{raw}`", lineno + 1))
        })?;
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(CliError::Config(format!("config line {}: empty key", lineno + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("config key `{key}` given twice")));
        }
    }
    Ok(out)
}

pub struct Resolver {
    file: BTreeMap<String, String>,
    resolved: Vec<(String, String)>,
}

impl Resolver {
    pub fn new(command: &str, config: Option<&Path>) -> Result<Self, CliError> {
        let mut file = match config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        if let Some(c) = file.remove("command") {
            if c != command {
                return Err(CliError::Config(format!(
                    "config was resolved for `{c}`, not `{command}`"
                )));
            }
        }
        Ok(Self {
            file,
            resolved: vec![("command".into(), command.into())],
        })
    }

    /// Flag value if given, else the file value, else `None`.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let from_file = self.file.remove(key);
        let value = match flag {
            Some(v) => Some(v),
            None => match from_file {
                Some(text) => Some(text.parse::<T>().map_err(|e| {
                    CliError::Config(format!("config key `{key}`: cannot parse `{text}`: {e}"))
                })?),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.resolved.push((key.to_string(), v.to_string()));
        }
        Ok(value)
    }

    pub fn with_default<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.optional(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.resolved.push((key.to_string(), default.to_string()));
                Ok(default)
            }
        }
    }

    pub fn required<T>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.optional(key, flag)?.ok_or_else(|| {
            CliError::Config(format!("missing required setting `{key}` (flag --{})", key.replace('_', "-")))
        })
    }

    /// Errors on leftover file keys, which are almost always typos.
    pub fn finish(self) -> Result<Vec<(String, String)>, CliError> {
        if !self.file.is_empty() {
            let keys: Vec<_> = self.file.keys().cloned().collect();
            return Err(CliError::Config(format!(
                "unused config keys: {}",
                keys.join(", ")
            )));
        }
        Ok(self.resolved)
    }
}

pub fn render(resolved: &[(String, String)]) -> String {
    resolved.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Comma-separated list of sample sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeList(pub Vec<usize>);

impl FromStr for SizeList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(SizeList)
    }
}

impl Display for SizeList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}
