//! Flat `key = value` configuration with flag overrides.
//!
//! Every subcommand reads its settings through [`Settings::get`], which
//! records the resolved value for the manifest. Keys present in the file but
//! never read are rejected before any solver runs.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    used: Vec<String>,
    resolved: BTreeMap<String, String>,
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected `key = value`, got `{raw}`", lineno + 1))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", lineno + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::Usage(format!("config key `{k}` given twice")));
        }
    }
    Ok(map)
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        Ok(Settings {
            file,
            ..Default::default()
        })
    }

    /// Flag value if given, else the config entry, else `default`.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = match self.lookup(key, flag)? {
            Some(v) => v,
            None => default,
        };
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// Like [`Settings::get`] with no default; absent keys stay `None`.
    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = self.lookup(key, flag)?;
        if let Some(v) = &v {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    fn lookup<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.used.push(key.to_string());
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(text) => text
                .parse()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key `{key}`: cannot parse `{text}`: {e}"))),
            None => Ok(None),
        }
    }

    /// Fails on the first config key no setting asked for.
    pub fn reject_unknown(&self) -> Result<(), CliError> {
        match self.file.keys().find(|k| !self.used.contains(k)) {
            Some(k) => Err(CliError::Usage(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }
}

/// `start:stop:step` (inclusive) or a comma list.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        match parts.len() {
            1 => s.split(',').map(num).collect::<Result<Vec<_>, _>>().map(FloatList),
            3 => {
                let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
                if !(h > 0.0) || b < a {
                    return Err(format!("range `{s}` needs start <= stop and a positive step"));
                }
                let count = ((b - a) / h + 1e-9).floor() as usize + 1;
                Ok(FloatList((0..count).map(|i| a + i as f64 * h).collect()))
            }
            _ => Err(format!("`{s}` is neither start:stop:step nor a comma list")),
        }
    }
}

impl Display for FloatList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Unsigned version of [`FloatList`].
#[derive(Debug, Clone, PartialEq)]
pub struct UsizeList(pub Vec<usize>);

impl FromStr for UsizeList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
        match parts.len() {
            1 => s.split(',').map(num).collect::<Result<Vec<_>, _>>().map(UsizeList),
            2 | 3 => {
                let a = num(parts[0])?;
                let b = num(parts[1])?;
                let h = if parts.len() == 3 { num(parts[2])? } else { 1 };
                if h == 0 || b < a {
                    return Err(format!("range `{s}` needs start <= stop and a positive step"));
                }
                Ok(UsizeList((a..=b).step_by(h).collect()))
            }
            _ => Err(format!("`{s}` is neither start:stop[:step] nor a comma list")),
        }
    }
}

impl Display for UsizeList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Orbital counts `n1+n2` for the molecular basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub n1: usize,
    pub n2: usize,
}

impl FromStr for BasisSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once('+')
            .ok_or_else(|| format!("basis `{s}` must look like 8+8"))?;
        let n1 = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
        let n2 = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
        Ok(BasisSpec { n1, n2 })
    }
}

impl Display for BasisSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}+{}", self.n1, self.n2)
    }
}
