use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cocite_core::config::{load_config_file, RunConfig};
use cocite_core::Algorithm;

#[derive(Parser, Debug)]
#[command(
    name = "cocite",
    version,
    about = "Journal co-citation novelty and conventionality analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate and normalize the input tables.
    Ingest(RunArgs),
    /// Publication and reference counts of the corpus.
    Summarize(RunArgs),
    /// Observed journal-pair co-citation frequencies.
    Observe(RunArgs),
    /// Null-model simulations: expected frequency and sigma per pair.
    Simulate(RunArgs),
    /// Pair z-scores.
    Zscore {
        #[command(flatten)]
        run: RunArgs,
        /// Reuse a sim_stats.csv instead of simulating.
        #[arg(long)]
        sim_stats: Option<PathBuf>,
    },
    /// Novelty and conventionality class of every publication.
    Classify {
        #[command(flatten)]
        run: RunArgs,
        /// Reuse a pair_stats.csv instead of recomputing it.
        #[arg(long)]
        pair_stats: Option<PathBuf>,
    },
    /// Hit rates per class and chi-square tests.
    Hits {
        #[command(flatten)]
        run: RunArgs,
        /// Reuse a classification.csv instead of recomputing it.
        #[arg(long)]
        classification: Option<PathBuf>,
    },
    /// K-L divergence of observed from expected pair frequencies.
    Kld {
        #[command(flatten)]
        run: RunArgs,
        /// Compute both the local and the global background and their ratio.
        #[arg(long)]
        compare: bool,
    },
    /// Subject composition fold differences after one shuffle.
    Compose(RunArgs),
    /// Generate a synthetic corpus.
    Synth(SynthArgs),
    /// Time the null-model algorithms on one corpus and seed.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', value_parser = parse_algorithm)]
        algorithms: Vec<Algorithm>,
        /// Citation count of the synthetic corpus used when no inputs are given.
        #[arg(long)]
        citations: Option<usize>,
    },
    /// Run the whole chain.
    Pipeline(RunArgs),
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: cocite_core::Error| e.to_string())
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// key = value configuration file; a run.manifest also works. Flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub pubs: Option<PathBuf>,
    #[arg(long)]
    pub refs: Option<PathBuf>,
    #[arg(long)]
    pub cites: Option<PathBuf>,
    #[arg(long)]
    pub pool_pubs: Option<PathBuf>,
    #[arg(long)]
    pub pool_refs: Option<PathBuf>,
    #[arg(long)]
    pub pool_cites: Option<PathBuf>,
    #[arg(long, value_parser = ["local", "global"])]
    pub background: Option<String>,
    #[arg(long, value_parser = ["repcs", "umsj"])]
    pub algorithm: Option<String>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub sims: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = ["10", "1"])]
    pub novelty_pct: Option<String>,
    #[arg(long, value_parser = ["1", "2", "5", "10"])]
    pub hit_pct: Option<String>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_parser = ["population", "sample"])]
    pub sigma: Option<String>,
    #[arg(long)]
    pub slice_year: Option<i32>,
    #[arg(long, value_parser = ["issn-stem", "exact"])]
    pub alias_rule: Option<String>,
    #[arg(long)]
    pub tag: Option<String>,
}

pub const DEFAULT_OUT: &str = "cocite-out";

fn path_value(p: &Path) -> String {
    std::fs::canonicalize(p)
        .unwrap_or_else(|_| p.to_owned())
        .display()
        .to_string()
}

impl RunArgs {
    fn flag_kv(&self) -> BTreeMap<String, String> {
        let mut kv = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.insert(k.to_owned(), v);
            }
        };
        put("pubs", self.pubs.as_deref().map(path_value));
        put("refs", self.refs.as_deref().map(path_value));
        put("cites", self.cites.as_deref().map(path_value));
        put("pool-pubs", self.pool_pubs.as_deref().map(path_value));
        put("pool-refs", self.pool_refs.as_deref().map(path_value));
        put("pool-cites", self.pool_cites.as_deref().map(path_value));
        put("background", self.background.clone());
        put("algorithm", self.algorithm.clone());
        put("sims", self.sims.map(|x| x.to_string()));
        put("seed", self.seed.map(|x| x.to_string()));
        put("novelty-pct", self.novelty_pct.clone());
        put("hit-pct", self.hit_pct.clone());
        put("workers", self.workers.map(|x| x.to_string()));
        put("max-retries", self.max_retries.map(|x| x.to_string()));
        put("epsilon", self.epsilon.map(|x| x.to_string()));
        put("sigma", self.sigma.clone());
        put("slice-year", self.slice_year.map(|x| x.to_string()));
        put("alias-rule", self.alias_rule.clone());
        put("tag", self.tag.clone());
        kv
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    /// Resolves the run configuration: defaults, then the config file, then
    /// flags. `extras` are subcommand-specific keys with their flag values;
    /// a config file may supply them too.
    pub fn resolve(&self, extras: &[(&str, Option<String>)]) -> anyhow::Result<Resolved> {
        let mut file = match &self.config {
            Some(path) => load_config_file(path)?,
            None => BTreeMap::new(),
        };
        let mut extra = BTreeMap::new();
        for (key, flag) in extras {
            let from_file = file.remove(*key);
            if let Some(v) = flag.clone().or(from_file).filter(|v| !v.is_empty()) {
                extra.insert((*key).to_owned(), v);
            }
        }
        let mut config = RunConfig::default();
        config.apply(&file)?;
        config.apply(&self.flag_kv())?;
        Ok(Resolved { config, extra })
    }
}

pub struct Resolved {
    pub config: RunConfig,
    pub extra: BTreeMap<String, String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub disciplines: Option<usize>,
    #[arg(long)]
    pub journals_per_discipline: Option<usize>,
    #[arg(long)]
    pub pubs_per_discipline: Option<usize>,
    #[arg(long)]
    pub ref_pool: Option<usize>,
    #[arg(long)]
    pub refs_mean: Option<f64>,
    #[arg(long)]
    pub refs_dispersion: Option<f64>,
    #[arg(long)]
    pub refs_min: Option<usize>,
    #[arg(long)]
    pub refs_max: Option<usize>,
    #[arg(long)]
    pub p_intra: Option<f64>,
    #[arg(long)]
    pub skew: Option<f64>,
    #[arg(long)]
    pub slice_year: Option<i32>,
    #[arg(long)]
    pub ref_year_span: Option<u32>,
    /// Comma-separated per-discipline publication multipliers.
    #[arg(long)]
    pub scale: Option<String>,
    #[arg(long)]
    pub citations_mu: Option<f64>,
    #[arg(long)]
    pub citations_sigma: Option<f64>,
}

pub const SYNTH_KEYS: [&str; 16] = [
    "seed",
    "disciplines",
    "journals-per-discipline",
    "pubs-per-discipline",
    "ref-pool",
    "refs-mean",
    "refs-dispersion",
    "refs-min",
    "refs-max",
    "p-intra",
    "skew",
    "slice-year",
    "ref-year-span",
    "scale",
    "citations-mu",
    "citations-sigma",
];

impl SynthArgs {
    pub fn flag_kv(&self) -> BTreeMap<String, String> {
        let values = [
            self.seed.map(|x| x.to_string()),
            self.disciplines.map(|x| x.to_string()),
            self.journals_per_discipline.map(|x| x.to_string()),
            self.pubs_per_discipline.map(|x| x.to_string()),
            self.ref_pool.map(|x| x.to_string()),
            self.refs_mean.map(|x| x.to_string()),
            self.refs_dispersion.map(|x| x.to_string()),
            self.refs_min.map(|x| x.to_string()),
            self.refs_max.map(|x| x.to_string()),
            self.p_intra.map(|x| x.to_string()),
            self.skew.map(|x| x.to_string()),
            self.slice_year.map(|x| x.to_string()),
            self.ref_year_span.map(|x| x.to_string()),
            self.scale.clone(),
            self.citations_mu.map(|x| x.to_string()),
            self.citations_sigma.map(|x| x.to_string()),
        ];
        SYNTH_KEYS
            .iter()
            .zip(values)
            .filter_map(|(k, v)| v.map(|v| ((*k).to_owned(), v)))
            .collect()
    }
}
