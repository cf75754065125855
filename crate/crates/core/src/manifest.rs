//! Run manifests: configuration snapshot, input digests, tool version,
//! stage timings and diagnostic counters, written as `run.manifest` beside
//! a run's outputs.

use std::fmt::Write as _;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::time::Duration;

use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "run.manifest";

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    command: String,
    config: Vec<(String, String)>,
    digests: Vec<(String, String)>,
    timings: Vec<(String, u128)>,
    diagnostics: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Manifest {
            command: command.to_owned(),
            config: config.to_kv().into_iter().map(|(k, v)| (k.to_owned(), v)).collect(),
            ..Default::default()
        }
    }

    /// A manifest whose configuration is exactly `entries`.
    pub fn with_entries(command: &str, entries: Vec<(String, String)>) -> Self {
        Manifest {
            command: command.to_owned(),
            config: entries,
            ..Default::default()
        }
    }

    /// Adds or replaces one configuration entry.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.config.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.config.push((key.to_owned(), value)),
        }
    }

    /// Records the digest of an input file named by configuration key `key`.
    pub fn digest(&mut self, key: &str, path: &Path) -> Result<()> {
        let d = sha256_file(path)?;
        self.digests.push((key.to_owned(), d));
        Ok(())
    }

    /// Records digests of every input file named in the configuration.
    pub fn digest_inputs(&mut self) -> Result<()> {
        let named: Vec<(String, String)> = self
            .config
            .iter()
            .filter(|(k, v)| {
                matches!(
                    k.as_str(),
                    "pubs" | "refs" | "cites" | "pool-pubs" | "pool-refs" | "pool-cites"
                ) && !v.is_empty()
            })
            .cloned()
            .collect();
        for (k, v) in named {
            self.digest(&k, Path::new(&v))?;
        }
        Ok(())
    }

    pub fn timing(&mut self, stage: &str, elapsed: Duration) {
        self.timings.push((stage.to_owned(), elapsed.as_millis()));
    }

    pub fn diag(&mut self, key: &str, value: impl ToString) {
        self.diagnostics.push((key.to_owned(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# cocite run manifest");
        let _ = writeln!(out, "tool.name = cocite");
        let _ = writeln!(out, "tool.version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "command = {}", self.command);
        for (k, v) in &self.config {
            let _ = writeln!(out, "{k} = {v}");
        }
        for (k, v) in &self.digests {
            let _ = writeln!(out, "digest.{k} = {v}");
        }
        for (k, v) in &self.timings {
            let _ = writeln!(out, "timing.{k}_ms = {v}");
        }
        for (k, v) in &self.diagnostics {
            let _ = writeln!(out, "diag.{k} = {v}");
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_NAME);
        std::fs::write(&path, self.render()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{load_config_file, parse_kv};

    #[test]
    fn manifest_loads_as_config_and_checks_digests() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("publications.tsv");
        std::fs::write(&input, "pub_id\tyear\tjournal_id\tcitations_8yr\n").unwrap();
        let cfg = RunConfig {
            sims: 7,
            inputs: crate::config::InputFiles {
                pubs: Some(input.clone()),
                ..Default::default()
            },
            ..RunConfig::default()
        };
        let mut m = Manifest::new("pipeline", &cfg);
        m.digest_inputs().unwrap();
        m.timing("simulate", Duration::from_millis(12));
        m.diag("deleted_pubs_total", 3);
        m.write(dir.path()).unwrap();

        let path = dir.path().join(MANIFEST_NAME);
        let kv = load_config_file(&path).unwrap();
        let mut back = RunConfig::default();
        back.apply(&kv).unwrap();
        assert_eq!(back.sims, 7);
        assert_eq!(back.inputs.pubs, Some(input.clone()));

        std::fs::write(&input, "changed\n").unwrap();
        assert!(load_config_file(&path).is_err());
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(parse_kv(&text, &path).unwrap().contains_key("digest.pubs"));
    }
}
