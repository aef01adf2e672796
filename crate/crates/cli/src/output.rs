use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cuspidal::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory whose files all carry the config hash and seed.
pub struct Outputs {
    dir: PathBuf,
    pub config_sha256: String,
    pub seed: u64,
    pub command: &'static str,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    command: &'a str,
    config_sha256: &'a str,
    seed: u64,
    result: &'a T,
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Configuration(format!("{}: {e}", path.display()))
}

impl Outputs {
    pub fn new(dir: PathBuf, config_sha256: String, seed: u64, command: &'static str) -> Result<Self> {
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        Ok(Self { dir, config_sha256, seed, command })
    }

    fn put(&self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| io(&path, e))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    pub fn csv(&self, name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
        let mut s = format!("# command={} config_sha256={} seed={}\n{header}\n", self.command, self.config_sha256, self.seed);
        for r in rows {
            writeln!(s, "{r}").expect("string write");
        }
        self.put(name, &s)
    }

    pub fn json<T: Serialize>(&self, name: &str, result: &T) -> Result<()> {
        let doc = Stamped { command: self.command, config_sha256: &self.config_sha256, seed: self.seed, result };
        let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Numeric(e.to_string()))?;
        s.push('\n');
        self.put(name, &s)
    }
}

/// Empty for unresolved entries.
pub fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}
