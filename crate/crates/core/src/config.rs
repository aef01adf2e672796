//! Flat run configuration.
//!
//! ```text
//! # comment
//! [section]
//! key = value
//! ```
//!
//! Keys repeat where a list is meant (`generator`, `cusp`). Numbers are
//! decimals or fractions `p/q`. Group blocks either name a shipped group
//! (`name = hecke-3`), point at another file (`file = my.group`, resolved
//! next to the config) or list generators and cusps inline:
//!
//! ```text
//! [group]
//! label = hecke-3
//! generator = 1 3 0 1        # a b c d of a real matrix, row-major
//! generator = 0 -1 1 0
//! cusp = inf 1 0.5 0         # point, rank, horoball radius, stabilizer indices
//! ```
//!
//! Cusp points are `inf` or a real boundary point of the upper half-plane;
//! the radius is Euclidean, in the disc.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gauge::{GaugeSpec, BASIS, COEFFICIENT_NAMES};
use crate::group::{CuspDatum, GroupSpec};
use crate::hyperbolic::{BoundaryPoint, Isometry};
use crate::real::Real;
use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Section {
    pub line: usize,
    pub entries: Vec<Entry>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    pub sections: BTreeMap<String, Section>,
    pub base_dir: Option<PathBuf>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| parse_err(line, "unclosed section header"))?.trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                    return Err(parse_err(line, format!("bad section name {name:?}")));
                }
                if sections.contains_key(name) {
                    return Err(parse_err(line, format!("section [{name}] repeated")));
                }
                sections.insert(name.to_string(), Section { line, entries: vec![] });
                current = Some(name.to_string());
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| parse_err(line, format!("expected key = value, got {body:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(parse_err(line, "empty key"));
            }
            let Some(sec) = current.as_ref() else {
                return Err(parse_err(line, "key outside any section"));
            };
            sections.get_mut(sec).expect("current section").entries.push(Entry { key: k.into(), value: v.into(), line });
        }
        Ok(Self { sections, base_dir: None })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Configuration(format!("{}: {e}", path.display())))?;
        let mut c = Self::parse(&text)?;
        c.base_dir = path.parent().map(Path::to_path_buf);
        Ok(c)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.get(name)
    }

    pub fn require(&self, name: &str) -> Result<&Section> {
        self.section(name).ok_or_else(|| Error::Configuration(format!("missing section [{name}]")))
    }

    pub fn resolve(&self, file: &str) -> PathBuf {
        match &self.base_dir {
            Some(d) if Path::new(file).is_relative() => d.join(file),
            _ => PathBuf::from(file),
        }
    }

    /// Group from `[group]`.
    pub fn group(&self) -> Result<GroupSpec> {
        let sec = self.require("group")?;
        if let Some(e) = sec.entry("file") {
            let path = self.resolve(&e.value);
            if !path.exists() {
                return Err(parse_err(e.line, format!("group file {} does not exist", path.display())));
            }
            let inner = Config::load(&path)?;
            if inner.section("group").and_then(|s| s.entry("file")).is_some() {
                return Err(parse_err(e.line, "group files may not chain"));
            }
            return inner.group();
        }
        if let Some(e) = sec.entry("name") {
            return GroupSpec::catalog(&e.value).ok_or_else(|| parse_err(e.line, format!("unknown group {:?}", e.value)));
        }
        group_from_section(sec)
    }

    /// Gauge from `[gauge]`: a shipped `name` or `delta` plus coefficients.
    pub fn gauge(&self) -> Result<GaugeSpec> {
        let sec = self.require("gauge")?;
        if let Some(e) = sec.entry("name") {
            if e.value == "stratmann" {
                if let (Some(d), Some(k)) = (sec.opt::<Real>("delta")?, sec.opt::<Real>("kmax")?) {
                    return GaugeSpec::stratmann(d, k).map_err(|err| parse_err(e.line, err.to_string()));
                }
            }
            return GaugeSpec::catalog(&e.value).map_err(|err| parse_err(e.line, err.to_string()));
        }
        let delta: Real = sec.get("delta")?;
        let mut c: [Real; BASIS] = Default::default();
        for (i, name) in COEFFICIENT_NAMES.iter().enumerate() {
            c[i] = sec.opt(name)?.unwrap_or_default();
        }
        GaugeSpec::new(delta, c).map_err(|err| parse_err(sec.line, err.to_string()))
    }
}

impl Section {
    pub fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let mut found = self.all(key);
        let Some(e) = found.next() else { return Ok(None) };
        if let Some(dup) = found.next() {
            return Err(parse_err(dup.line, format!("{key} given twice")));
        }
        e.value.parse().map(Some).map_err(|err| parse_err(e.line, format!("{key}: {err}")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.opt(key)?.ok_or_else(|| parse_err(self.line, format!("missing key {key}")))
    }

    /// Whitespace-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(e) = self.entry(key) else { return Ok(None) };
        e.value
            .split_whitespace()
            .map(|w| w.parse().map_err(|err| parse_err(e.line, format!("{key}: {err}"))))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Checks `key` against `[lo, hi]` when present.
    pub fn ranged(&self, key: &str, lo: f64, hi: f64) -> Result<Option<f64>> {
        let v: Option<f64> = self.opt(key)?;
        if let Some(x) = v {
            if !(x >= lo && x <= hi) {
                let line = self.entry(key).map_or(self.line, |e| e.line);
                return Err(parse_err(line, format!("{key} = {x} outside [{lo}, {hi}]")));
            }
        }
        Ok(v)
    }
}

fn numbers(e: &Entry, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = e
        .value
        .split_whitespace()
        .take(n)
        .map(|w| w.parse::<f64>().map_err(|_| parse_err(e.line, format!("not a number: {w:?}"))))
        .collect::<Result<_>>()?;
    if v.len() < n {
        return Err(parse_err(e.line, format!("{} needs {n} numbers", e.key)));
    }
    Ok(v)
}

fn group_from_section(sec: &Section) -> Result<GroupSpec> {
    let generators: Vec<Isometry> = sec
        .all("generator")
        .map(|e| {
            let m = numbers(e, 4)?;
            if e.value.split_whitespace().count() != 4 {
                return Err(parse_err(e.line, "generator takes exactly 4 numbers"));
            }
            Isometry::real(m[0], m[1], m[2], m[3]).map_err(|err| parse_err(e.line, err.to_string()))
        })
        .collect::<Result<_>>()?;
    if generators.is_empty() {
        return Err(parse_err(sec.line, "group needs a name, a file or generators"));
    }
    let cusps: Vec<CuspDatum> = sec
        .all("cusp")
        .map(|e| {
            let w: Vec<&str> = e.value.split_whitespace().collect();
            if w.len() < 3 {
                return Err(parse_err(e.line, "cusp = point rank radius [stabilizer indices]"));
            }
            let bad = |what: &str| parse_err(e.line, format!("bad cusp {what}"));
            let rank: usize = w[1].parse().map_err(|_| bad("rank"))?;
            let radius: f64 = w[2].parse().map_err(|_| bad("radius"))?;
            let point = if w[0] == "inf" {
                BoundaryPoint::infinity(2)
            } else {
                let x: f64 = w[0].parse().map_err(|_| bad("point"))?;
                BoundaryPoint::from_half_space(Complex64::new(x, 0.0), 2)
            };
            let stabilizer = w[3..]
                .iter()
                .map(|s| s.parse::<usize>().ok().and_then(|i| generators.get(i).copied()).ok_or_else(|| bad("stabilizer index")))
                .collect::<Result<Vec<_>>>()?;
            CuspDatum::new(point, rank, radius, stabilizer).map_err(|err| parse_err(e.line, err.to_string()))
        })
        .collect::<Result<_>>()?;
    let label = sec.entry("label").map_or("custom".to_string(), |e| e.value.clone());
    GroupSpec::new(label, generators, cusps).map_err(|err| parse_err(sec.line, err.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_keys_and_lines() {
        let c = Config::parse("# top\n[run]\nseed = 7\nt_max = 12.5 # inline\n\n[gauge]\nname = stratmann\n").unwrap();
        let run = c.require("run").unwrap();
        assert_eq!(run.get::<u64>("seed").unwrap(), 7);
        assert_eq!(run.entry("t_max").unwrap().line, 4);
        assert_eq!(c.gauge().unwrap().c_log, Real::frac(1, 2));
        let err = Config::parse("[run]\nseed 7\n").unwrap_err();
        assert_eq!(err, Error::Parse { line: 2, message: "expected key = value, got \"seed 7\"".into() });
        assert!(matches!(Config::parse("seed = 1\n"), Err(Error::Parse { line: 1, .. })));
        let c = Config::parse("[run]\nseed = x\n").unwrap();
        assert!(matches!(c.require("run").unwrap().get::<u64>("seed"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn inline_group_matches_catalog() {
        let c = Config::parse("[group]\nlabel = h3\ngenerator = 1 3 0 1\ngenerator = 0 -1 1 0\ncusp = inf 1 0.5 0\n").unwrap();
        let g = c.group().unwrap();
        let h = GroupSpec::hecke(3.0);
        assert_eq!(g.generators.len(), 2);
        assert!(g.generators.iter().zip(&h.generators).all(|(a, b)| a.approx_eq(b, 0.0)));
        assert_eq!(g.cusps[0].base_radius, h.cusps[0].base_radius);
        let bad = Config::parse("[group]\ngenerator = 1 3 0 1\ncusp = inf 1 0.5 0\ncusp = inf one 0.5\n").unwrap();
        assert!(matches!(bad.group(), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn gauge_block_and_ranges() {
        let c = Config::parse("[gauge]\ndelta = 3/2\nc_log = -1/4\nc_logloglog = -1/4\n[run]\nsamples = 0\n").unwrap();
        assert_eq!(c.gauge().unwrap(), GaugeSpec::catalog("bertrand-negative").unwrap());
        assert!(matches!(c.require("run").unwrap().ranged("samples", 1.0, 1e6), Err(Error::Parse { line: 6, .. })));
        let missing = Config::parse("[group]\nfile = nowhere.group\n").unwrap();
        assert!(matches!(missing.group(), Err(Error::Parse { line: 2, .. })));
    }
}
