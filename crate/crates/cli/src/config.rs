//! Flat `key = value` files with `[section]` headers.
//!
//! Keys are addressed as `section.key`. `#` and `;` start comments. Every
//! entry remembers its line so errors can point at it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pdelin::Error;

#[derive(Clone, Debug, Default)]
pub struct Config {
    pub path: Option<PathBuf>,
    entries: BTreeMap<String, (String, usize)>,
}

impl Config {
    pub fn load(path: &Path) -> pdelin::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: cannot read config: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}:{m}", path.display())),
            other => other,
        })?;
        cfg.path = Some(path.to_owned());
        Ok(cfg)
    }

    pub fn parse(text: &str) -> pdelin::Result<Self> {
        let mut section = String::new();
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("{line_no}: unterminated section header")))?;
                section = name.trim().to_ascii_lowercase();
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("{line_no}: expected `key = value`")))?;
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(Error::Config(format!("{line_no}: empty key")));
            }
            let full = if section.is_empty() { key } else { format!("{section}.{key}") };
            if entries.insert(full.clone(), (value.trim().to_owned(), line_no)).is_some() {
                return Err(Error::Config(format!("{line_no}: duplicate key `{full}`")));
            }
        }
        Ok(Self { path: None, entries })
    }

    fn location(&self, line: usize) -> String {
        match &self.path {
            Some(p) => format!("{}:{line}", p.display()),
            None => format!("line {line}"),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> pdelin::Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::Config(format!("{}: bad value for `{key}`: {e}", self.location(*line)))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> pdelin::Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let what = self.path.as_ref().map_or("config".to_owned(), |p| p.display().to_string());
        self.get(key)?.ok_or_else(|| Error::Config(format!("{what}: missing required key `{key}`")))
    }

    /// Non-negative integer, written in any decimal or exponent form.
    pub fn count(&self, key: &str) -> pdelin::Result<Option<usize>> {
        match self.get::<f64>(key)? {
            None => Ok(None),
            Some(x) if x >= 0.0 && x.fract() == 0.0 && x < 1e15 => Ok(Some(x as usize)),
            Some(x) => {
                let line = self.entries[key].1;
                Err(Error::Config(format!("{}: `{key}` must be a non-negative integer, got {x}", self.location(line))))
            }
        }
    }

    /// Comma-separated numbers.
    pub fn list(&self, key: &str) -> pdelin::Result<Option<Vec<f64>>> {
        let Some((v, line)) = self.entries.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("{}: bad list entry `{}` in `{key}`: {e}", self.location(*line), t.trim())))
            })
            .collect::<pdelin::Result<Vec<_>>>()
            .map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_comments_and_numbers() {
        let c = Config::parse("top = 1\n[Data]\n n = 1e8 # comment\nm=100000000\n; note\n[x]\nlist = 1, 2e1,3\n").unwrap();
        assert_eq!(c.get::<f64>("top").unwrap(), Some(1.0));
        assert_eq!(c.get::<f64>("data.n").unwrap(), c.get::<f64>("data.m").unwrap());
        assert_eq!(c.count("data.n").unwrap(), Some(100_000_000));
        assert_eq!(c.list("x.list").unwrap(), Some(vec![1.0, 20.0, 3.0]));
        assert!(c.get::<f64>("data.missing").unwrap().is_none());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = Config::parse("[a]\nb = 1\nnot a pair\n").unwrap_err().to_string();
        assert!(e.contains("3:"), "{e}");
        let c = Config::parse("[a]\n\nb = x\n").unwrap();
        let e = c.get::<f64>("a.b").unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
        assert!(Config::parse("a=1\na=2").is_err());
        assert!(c.count("a.b").is_err());
    }
}
