//! Minimal --flag value parsing with strict unknown-flag rejection.

use std::collections::BTreeMap;

use crate::error::{usage, Result};

pub struct ArgMap {
    values: BTreeMap<String, String>,
    switches: Vec<String>,
}

impl ArgMap {
    /// Parse `--name value` pairs; names listed in `switch_names` are
    /// boolean and take no value.
    pub fn parse(args: &[String], switch_names: &[&str]) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut switches = Vec::new();
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let Some(name) = arg.strip_prefix("--") else {
                return usage(format!("unexpected positional argument '{arg}'"));
            };
            if switch_names.contains(&name) {
                switches.push(name.to_string());
                i += 1;
                continue;
            }
            let Some(value) = args.get(i + 1) else {
                return usage(format!("flag --{name} needs a value"));
            };
            if values.insert(name.to_string(), value.clone()).is_some() {
                return usage(format!("flag --{name} given twice"));
            }
            i += 2;
        }
        Ok(ArgMap { values, switches })
    }

    pub fn take(&mut self, name: &str) -> Option<String> {
        self.values.remove(name)
    }

    pub fn require(&mut self, name: &str) -> Result<String> {
        self.take(name)
            .ok_or(())
            .or_else(|_| usage(format!("missing required flag --{name}")))
    }

    pub fn switch(&mut self, name: &str) -> bool {
        if let Some(pos) = self.switches.iter().position(|s| s == name) {
            self.switches.remove(pos);
            true
        } else {
            false
        }
    }

    pub fn take_parsed<T: std::str::FromStr>(&mut self, name: &str) -> Result<Option<T>> {
        match self.take(name) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .or_else(|_| usage(format!("flag --{name} has invalid value '{raw}'"))),
        }
    }

    pub fn require_parsed<T: std::str::FromStr>(&mut self, name: &str) -> Result<T> {
        let raw = self.require(name)?;
        raw.parse::<T>()
            .or_else(|_| usage(format!("flag --{name} has invalid value '{raw}'")))
    }

    /// Reject anything the command did not consume.
    pub fn finish(self) -> Result<()> {
        if let Some(name) = self.values.keys().next() {
            return usage(format!("unknown flag --{name}"));
        }
        if let Some(name) = self.switches.first() {
            return usage(format!("unknown flag --{name}"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_pairs_and_switches() {
        let mut a = ArgMap::parse(&strs(&["--x", "1", "--no-ref", "--y", "z"]), &["no-ref"])
            .unwrap();
        assert_eq!(a.require("x").unwrap(), "1");
        assert!(a.switch("no-ref"));
        assert_eq!(a.take("y").unwrap(), "z");
        a.finish().unwrap();
    }

    #[test]
    fn rejects_unknown_and_duplicate_flags() {
        let a = ArgMap::parse(&strs(&["--x", "1"]), &[]).unwrap();
        assert!(a.finish().is_err());
        assert!(ArgMap::parse(&strs(&["--x", "1", "--x", "2"]), &[]).is_err());
        assert!(ArgMap::parse(&strs(&["positional"]), &[]).is_err());
        assert!(ArgMap::parse(&strs(&["--dangling"]), &[]).is_err());
    }
}
