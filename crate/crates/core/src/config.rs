//! Run configuration as plain `key = value` text.
//!
//! Keys match the CLI long flag names without the leading dashes. A run
//! manifest is itself a valid configuration file: its bookkeeping keys
//! (`tool.*`, `digest.*`, `timing.*`, `diag.*`, `command`) are skipped when
//! loading a configuration, and input digests are checked.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::classify::{ClassifyConfig, NoveltyPercentile};
use crate::corpus::Background;
use crate::diverge::DEFAULT_EPSILON;
use crate::error::{Error, Result};
use crate::impact::HitConfig;
use crate::ingest::{AliasRule, CorpusFiles, IngestConfig};
use crate::shuffle::{Algorithm, DEFAULT_MAX_RETRIES};
use crate::simulate::{SigmaMode, SimConfig};

const BOOKKEEPING: [&str; 4] = ["tool.", "digest.", "timing.", "diag."];

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_kv(text: &str, origin: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::malformed(origin, i as u64 + 1, "expected `key = value`"));
        };
        out.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(out)
}

/// Input files of one corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InputFiles {
    pub pubs: Option<PathBuf>,
    pub refs: Option<PathBuf>,
    pub cites: Option<PathBuf>,
}

impl InputFiles {
    pub fn is_empty(&self) -> bool {
        self.pubs.is_none() && self.refs.is_none() && self.cites.is_none()
    }

    pub fn resolve(&self, what: &str) -> Result<CorpusFiles> {
        match (&self.pubs, &self.refs, &self.cites) {
            (Some(p), Some(r), Some(c)) => Ok(CorpusFiles {
                publications: p.clone(),
                references: r.clone(),
                citations: c.clone(),
            }),
            _ => Err(Error::InvalidConfig(format!(
                "{what} needs publications, references and citations files"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inputs: InputFiles,
    pub pool: InputFiles,
    pub background: Background,
    pub algorithm: Algorithm,
    pub sims: usize,
    pub seed: u64,
    pub novelty_pct: u32,
    pub hit_pct: u32,
    pub workers: usize,
    pub max_retries: u32,
    pub epsilon: f64,
    pub sigma: SigmaMode,
    pub slice_year: Option<i32>,
    pub alias_rule: AliasRule,
    pub tag: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: InputFiles::default(),
            pool: InputFiles::default(),
            background: Background::Local,
            algorithm: Algorithm::Repcs,
            sims: 1000,
            seed: 0,
            novelty_pct: 10,
            hit_pct: 10,
            workers: default_workers(),
            max_retries: DEFAULT_MAX_RETRIES,
            epsilon: DEFAULT_EPSILON,
            sigma: SigmaMode::Population,
            slice_year: None,
            alias_rule: AliasRule::IssnStem,
            tag: "corpus".into(),
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidConfig(format!("invalid value `{v}` for `{key}`")))
}

impl RunConfig {
    /// Applies every recognized key of `kv` on top of `self`.
    pub fn apply(&mut self, kv: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in kv {
            let path = || (!v.is_empty()).then(|| PathBuf::from(v));
            match k.as_str() {
                "pubs" => self.inputs.pubs = path(),
                "refs" => self.inputs.refs = path(),
                "cites" => self.inputs.cites = path(),
                "pool-pubs" => self.pool.pubs = path(),
                "pool-refs" => self.pool.refs = path(),
                "pool-cites" => self.pool.cites = path(),
                "background" => self.background = v.parse()?,
                "algorithm" => self.algorithm = v.parse()?,
                "sims" => self.sims = value(k, v)?,
                "seed" => self.seed = value(k, v)?,
                "novelty-pct" => self.novelty_pct = value(k, v)?,
                "hit-pct" => self.hit_pct = value(k, v)?,
                "workers" => self.workers = value(k, v)?,
                "max-retries" => self.max_retries = value(k, v)?,
                "epsilon" => self.epsilon = value(k, v)?,
                "sigma" => self.sigma = v.parse()?,
                "slice-year" => self.slice_year = if v.is_empty() { None } else { Some(value(k, v)?) },
                "alias-rule" => {
                    self.alias_rule = match v.as_str() {
                        "exact" => AliasRule::Exact,
                        "issn-stem" => AliasRule::IssnStem,
                        _ => return Err(Error::InvalidConfig(format!("unknown alias rule `{v}`"))),
                    }
                }
                "tag" => self.tag = v.clone(),
                "command" => {}
                other if BOOKKEEPING.iter().any(|p| other.starts_with(p)) => {}
                other => return Err(Error::InvalidConfig(format!("unknown configuration key `{other}`"))),
            }
        }
        Ok(())
    }

    /// Every configuration key, in a fixed order.
    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        let p = |x: &Option<PathBuf>| x.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        vec![
            ("pubs", p(&self.inputs.pubs)),
            ("refs", p(&self.inputs.refs)),
            ("cites", p(&self.inputs.cites)),
            ("pool-pubs", p(&self.pool.pubs)),
            ("pool-refs", p(&self.pool.refs)),
            ("pool-cites", p(&self.pool.cites)),
            ("background", self.background.to_string()),
            ("algorithm", self.algorithm.to_string()),
            ("sims", self.sims.to_string()),
            ("seed", self.seed.to_string()),
            ("novelty-pct", self.novelty_pct.to_string()),
            ("hit-pct", self.hit_pct.to_string()),
            ("workers", self.workers.to_string()),
            ("max-retries", self.max_retries.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("sigma", self.sigma.to_string()),
            ("slice-year", self.slice_year.map(|y| y.to_string()).unwrap_or_default()),
            (
                "alias-rule",
                match self.alias_rule {
                    AliasRule::Exact => "exact".into(),
                    AliasRule::IssnStem => "issn-stem".into(),
                },
            ),
            ("tag", self.tag.clone()),
        ]
    }

    pub fn ingest_config(&self, background: Background) -> IngestConfig {
        IngestConfig {
            slice_year: self.slice_year,
            ref_year_range: None,
            background,
            alias_rule: self.alias_rule,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            n_simulations: self.sims,
            master_seed: self.seed,
            background: self.background,
            algorithm: self.algorithm,
            workers: self.workers,
            max_retries: self.max_retries,
            sigma: self.sigma,
        }
    }

    pub fn classify_config(&self) -> Result<ClassifyConfig> {
        Ok(ClassifyConfig {
            novelty_percentile: NoveltyPercentile::try_from(self.novelty_pct)?,
        })
    }

    pub fn hit_config(&self) -> Result<HitConfig> {
        HitConfig::new(self.hit_pct)
    }
}

/// Reads a configuration or manifest file, verifying any recorded input
/// digests against the files they name.
pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let kv = parse_kv(&text, path)?;
    for (k, want) in &kv {
        let Some(input) = k.strip_prefix("digest.") else {
            continue;
        };
        let Some(file) = kv.get(input).filter(|f| !f.is_empty()) else {
            continue;
        };
        let got = crate::manifest::sha256_file(Path::new(file))?;
        if &got != want {
            return Err(Error::InvalidConfig(format!(
                "{}: input `{file}` changed since the run (sha256 {got}, recorded {want})",
                path.display()
            )));
        }
    }
    Ok(kv)
}
