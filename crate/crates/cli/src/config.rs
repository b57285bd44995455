//! Plain-text `key = value` configuration with `[section]` headers.
//!
//! Keys before the first header belong to the top-level section (""). Lines
//! starting with `#` or `;` are comments. Every section and key must appear
//! in [`KNOWN_KEYS`].

use crate::CliError;
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Write;

pub const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("", &["seed", "serial", "out"]),
    ("coeffs", &["d", "w_max", "n_w", "n_theta"]),
    ("profiles", &["d", "w", "n_theta"]),
    (
        "ibm",
        &[
            "task", "law", "n", "steps", "w", "nu", "diff", "speed", "radius", "box", "dt", "dump_every", "psi_table",
            "burn_in", "snapshots", "spacing", "bins", "zero_flux_tol",
        ],
    ),
    (
        "hydro",
        &[
            "task", "model", "d", "nx", "ny", "lx", "ly", "dt", "t_end", "rho0", "y0", "phi0", "amplitude", "zeta",
            "w_max", "n_w", "n_theta", "sigma_w", "w_center", "theta", "dump_every",
        ],
    ),
    ("dispersion", &["d", "w_max", "n_w", "n_theta", "sigma", "xi", "theta"]),
    ("validate", &["tags"]),
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Config::default();
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::Config(format!("line {}: unterminated section header", no + 1)))?;
                section = name.trim().to_string();
                check_key(&section, None)?;
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(&section, k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), CliError> {
        check_key(section, Some(key))?;
        self.sections.entry(section.to_string()).or_default().insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Apply a `section.key=value` (or `key=value` for the top level) override.
    pub fn set_override(&mut self, spec: &str) -> Result<(), CliError> {
        let (path, value) =
            spec.split_once('=').ok_or_else(|| CliError::Config(format!("override '{spec}' lacks '='")))?;
        let (section, key) = path.trim().split_once('.').unwrap_or(("", path.trim()));
        self.set(section, key, value.trim())
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn section(&self, section: &str) -> Params<'_> {
        Params { cfg: self, section: section.to_string(), used: RefCell::new(Vec::new()) }
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        if let Some(top) = self.sections.get("") {
            for (k, v) in top {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        for (name, keys) in self.sections.iter().filter(|(n, _)| !n.is_empty()) {
            let _ = writeln!(out, "[{name}]");
            for (k, v) in keys {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }
}

fn check_key(section: &str, key: Option<&str>) -> Result<(), CliError> {
    let keys = KNOWN_KEYS
        .iter()
        .find(|(s, _)| *s == section)
        .map(|(_, k)| *k)
        .ok_or_else(|| CliError::Config(format!("unknown section [{section}]")))?;
    match key {
        Some(k) if !keys.contains(&k) => {
            let at = if section.is_empty() { String::new() } else { format!(" in [{section}]") };
            Err(CliError::Config(format!("unknown key '{k}'{at}")))
        }
        _ => Ok(()),
    }
}

/// Typed view of one section. Every value read (including defaults) is
/// recorded so output headers can carry the effective parameter set.
pub struct Params<'a> {
    cfg: &'a Config,
    section: String,
    used: RefCell<Vec<(String, String)>>,
}

impl Params<'_> {
    fn raw(&self, key: &str, default: &str) -> String {
        let v = self.cfg.get(&self.section, key).unwrap_or(default).to_string();
        let mut used = self.used.borrow_mut();
        if let Some(slot) = used.iter_mut().find(|(k, _)| k == key) {
            slot.1 = v.clone();
        } else {
            used.push((key.to_string(), v.clone()));
        }
        v
    }

    fn bad(&self, key: &str, v: &str, what: &str) -> CliError {
        CliError::Config(format!("{}.{key} = '{v}': expected {what}", self.section))
    }

    pub fn str(&self, key: &str, default: &str) -> String {
        self.raw(key, default)
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.raw(key, &default.to_string());
        v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| self.bad(key, &v, "a finite number"))
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.cfg.get(&self.section, key) {
            None => Ok(None),
            Some(_) => self.f64(key, 0.0).map(Some),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        let v = self.raw(key, &default.to_string());
        v.parse::<usize>().map_err(|_| self.bad(key, &v, "a nonnegative integer"))
    }

    pub fn u64(&self, key: &str, default: u64) -> Result<u64, CliError> {
        let v = self.raw(key, &default.to_string());
        v.parse::<u64>().map_err(|_| self.bad(key, &v, "a nonnegative integer"))
    }

    pub fn list_f64(&self, key: &str, default: &str) -> Result<Vec<f64>, CliError> {
        let v = self.raw(key, default);
        let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if items.is_empty() {
            return Err(CliError::Config(format!("{}.{key} must not be empty", self.section)));
        }
        items
            .iter()
            .map(|s| s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| self.bad(key, &v, "numbers")))
            .collect()
    }

    pub fn list_str(&self, key: &str, default: &str) -> Vec<String> {
        self.raw(key, default).split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    }

    /// `k=v` pairs of everything read so far, in reading order.
    pub fn used(&self) -> String {
        self.used.borrow().iter().map(|(k, v)| format!("{k}={}", v.replace(' ', ""))).collect::<Vec<_>>().join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "seed = 7\n# comment\n[coeffs]\nd = 0.2, 1, 5\nw_max=10\n\n[hydro]\nmodel = sohr_s\n";

    #[test]
    fn parse_and_read() {
        let c = Config::parse(SAMPLE).unwrap();
        assert_eq!(c.get("", "seed"), Some("7"));
        let p = c.section("coeffs");
        assert_eq!(p.list_f64("d", "1").unwrap(), vec![0.2, 1.0, 5.0]);
        assert_eq!(p.f64("w_max", 3.0).unwrap(), 10.0);
        assert_eq!(p.usize("n_w", 64).unwrap(), 64);
        assert_eq!(p.used(), "d=0.2,1,5 w_max=10 n_w=64");
    }

    #[test]
    fn round_trip_is_idempotent() {
        let c = Config::parse(SAMPLE).unwrap();
        let s = c.serialize();
        let c2 = Config::parse(&s).unwrap();
        assert_eq!(c, c2);
        assert_eq!(s, c2.serialize());
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        assert!(Config::parse("[coeffs]\nbogus = 1\n").is_err());
        assert!(Config::parse("[nowhere]\n").is_err());
        assert!(Config::parse("colour = red\n").is_err());
        assert!(Config::parse("[coeffs\n").is_err());
        assert!(Config::parse("[coeffs]\njust words\n").is_err());
    }

    #[test]
    fn overrides_and_bad_values() {
        let mut c = Config::default();
        c.set_override("coeffs.w_max=4").unwrap();
        c.set_override("seed=3").unwrap();
        assert_eq!(c.get("coeffs", "w_max"), Some("4"));
        assert_eq!(c.get("", "seed"), Some("3"));
        assert!(c.set_override("coeffs.nope=1").is_err());
        c.set("coeffs", "n_w", "many").unwrap();
        assert!(c.section("coeffs").usize("n_w", 1).is_err());
        c.set("profiles", "w", "").unwrap();
        assert!(c.section("profiles").list_f64("w", "0").is_err());
    }
}
