//! Monte Carlo expected journal-pair frequencies and z-scores.
//!
//! Each simulation shuffles the corpus once and counts journal pairs of the
//! surviving publications. Per-pair totals are accumulated as exact integer
//! sums of frequencies and squared frequencies, so the merge across workers
//! is order-independent and the resulting mean and standard deviation are
//! bitwise identical for any worker count.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::cocite::{journals_of, JournalPair, JournalPairTable, PairCounter, PairKey};
use crate::corpus::{Background, Corpus, JournalIdx, RefIdx};
use crate::error::{Error, Result};
use crate::rng::simulation_seed;
use crate::shuffle::{
    build_groups, permute_repcs, permute_umsj, Algorithm, DuplicateFinder, GroupSet, DEFAULT_MAX_RETRIES,
};

/// Divisor of the simulated-frequency variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaMode {
    /// Divide by N.
    #[default]
    Population,
    /// Divide by N - 1.
    Sample,
}

impl fmt::Display for SigmaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SigmaMode::Population => "population",
            SigmaMode::Sample => "sample",
        })
    }
}

impl FromStr for SigmaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "population" => Ok(SigmaMode::Population),
            "sample" => Ok(SigmaMode::Sample),
            other => Err(Error::InvalidConfig(format!("unknown sigma mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_simulations: usize,
    pub master_seed: u64,
    pub background: Background,
    pub algorithm: Algorithm,
    pub workers: usize,
    pub max_retries: u32,
    pub sigma: SigmaMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_simulations: 1000,
            master_seed: 0,
            background: Background::Local,
            algorithm: Algorithm::Repcs,
            workers: 1,
            max_retries: DEFAULT_MAX_RETRIES,
            sigma: SigmaMode::Population,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_simulations < 2 {
            return Err(Error::InvalidConfig("at least two simulations are required".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be positive".into()));
        }
        Ok(())
    }
}

/// Exact running totals of one pair's per-simulation frequencies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrequencyAccumulator {
    sum: u64,
    sum_sq: u128,
}

impl FrequencyAccumulator {
    #[inline]
    pub fn push(&mut self, f: u64) {
        self.sum += f;
        self.sum_sq += (f as u128) * (f as u128);
    }

    pub fn merge(&mut self, other: &FrequencyAccumulator) {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    /// Mean and standard deviation over `n` simulations, simulations not
    /// pushed counting as frequency 0.
    pub fn moments(&self, n: u64, mode: SigmaMode) -> PairMoments {
        let n128 = n as u128;
        let mean = self.sum as f64 / n as f64;
        // n * Σf² - (Σf)² >= 0 exactly, by Cauchy-Schwarz.
        let s = self.sum as u128;
        let num = n128 * self.sum_sq - s * s;
        let den = match mode {
            SigmaMode::Population => n128 * n128,
            SigmaMode::Sample => n128 * (n128 - 1),
        };
        let sigma = if num == 0 {
            0.0
        } else {
            (num as f64 / den as f64).sqrt()
        };
        PairMoments { mean, sigma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMoments {
    pub mean: f64,
    pub sigma: f64,
}

/// Per-simulation diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimulationDiagnostics {
    pub deleted_pubs: usize,
    pub fixed_points: usize,
    pub retry_exhausted: usize,
    pub total_pairs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub n_simulations: usize,
    pub background: Background,
    pub algorithm: Algorithm,
    pub moments: BTreeMap<JournalPair, PairMoments>,
    pub per_simulation: Vec<SimulationDiagnostics>,
}

impl SimulationResult {
    pub fn get(&self, pair: &JournalPair) -> Option<PairMoments> {
        self.moments.get(pair).copied()
    }

    pub fn total_deleted(&self) -> usize {
        self.per_simulation.iter().map(|d| d.deleted_pubs).sum()
    }

    pub fn total_retry_exhausted(&self) -> usize {
        self.per_simulation.iter().map(|d| d.retry_exhausted).sum()
    }
}

struct Worker<'a> {
    set: &'a GroupSet,
    cfg: &'a SimConfig,
    flat: Vec<RefIdx>,
    scratch: Vec<RefIdx>,
    journals: Vec<JournalIdx>,
    finder: DuplicateFinder,
    counter: PairCounter,
    acc: FxHashMap<PairKey, FrequencyAccumulator>,
    diags: Vec<(usize, SimulationDiagnostics)>,
}

impl<'a> Worker<'a> {
    fn new(set: &'a GroupSet, cfg: &'a SimConfig) -> Self {
        Worker {
            set,
            cfg,
            flat: vec![0; set.analyzed_len()],
            scratch: Vec::new(),
            journals: Vec::new(),
            finder: DuplicateFinder::new(set.catalog().n_refs()),
            counter: PairCounter::for_journals(set.catalog().n_journals()),
            acc: FxHashMap::default(),
            diags: Vec::new(),
        }
    }

    fn run(&mut self, index: usize) {
        let seed = simulation_seed(self.cfg.master_seed, index as u64);
        let stats = match self.cfg.algorithm {
            Algorithm::Repcs => permute_repcs(self.set, seed, &mut self.scratch, &mut self.flat),
            Algorithm::Umsj => permute_umsj(self.set, seed, self.cfg.max_retries, &mut self.flat),
        };
        let offsets = self.set.offsets();
        let catalog = self.set.catalog();
        let mut diag = SimulationDiagnostics {
            fixed_points: stats.fixed_points,
            retry_exhausted: stats.retry_exhausted,
            ..Default::default()
        };
        for i in 0..self.set.n_analyzed() {
            let refs = &self.flat[offsets[i] as usize..offsets[i + 1] as usize];
            if self.finder.has_duplicate(refs) {
                diag.deleted_pubs += 1;
                continue;
            }
            journals_of(refs, catalog, &mut self.journals);
            self.counter.add_publication(&mut self.journals);
        }
        let acc = &mut self.acc;
        self.counter.drain(|key, n| {
            diag.total_pairs += n as u64;
            acc.entry(key).or_default().push(n as u64);
        });
        self.diags.push((index, diag));
    }
}

struct Partial {
    acc: FxHashMap<PairKey, FrequencyAccumulator>,
    diags: Vec<(usize, SimulationDiagnostics)>,
}

fn merge(mut a: Partial, mut b: Partial) -> Partial {
    if a.acc.len() < b.acc.len() {
        std::mem::swap(&mut a, &mut b);
    }
    for (k, v) in &b.acc {
        a.acc.entry(*k).or_default().merge(v);
    }
    a.diags.append(&mut b.diags);
    a
}

/// Runs `cfg.n_simulations` shuffles over prepared groups.
pub fn simulate_groups(set: &GroupSet, cfg: &SimConfig) -> Result<SimulationResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let partial = pool.install(|| {
        (0..cfg.n_simulations)
            .into_par_iter()
            .fold(
                || Worker::new(set, cfg),
                |mut w, i| {
                    w.run(i);
                    w
                },
            )
            .map(|w| Partial {
                acc: w.acc,
                diags: w.diags,
            })
            .reduce(
                || Partial {
                    acc: FxHashMap::default(),
                    diags: Vec::new(),
                },
                merge,
            )
    });

    let n = cfg.n_simulations as u64;
    let moments = partial
        .acc
        .iter()
        .map(|(&key, acc)| (JournalPair::from_key(set.catalog(), key), acc.moments(n, cfg.sigma)))
        .collect();
    let mut diags = partial.diags;
    diags.sort_unstable_by_key(|d| d.0);
    Ok(SimulationResult {
        n_simulations: cfg.n_simulations,
        background: set.background(),
        algorithm: cfg.algorithm,
        moments,
        per_simulation: diags.into_iter().map(|d| d.1).collect(),
    })
}

/// Builds permutation groups of `corpus` against `pool` and runs the
/// simulations.
pub fn run_simulations(corpus: &Corpus, pool: &Corpus, cfg: &SimConfig) -> Result<SimulationResult> {
    cfg.validate()?;
    let set = build_groups(corpus, pool)?;
    simulate_groups(&set, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairStats {
    pub pair: JournalPair,
    pub f_obs: u64,
    pub f_exp: f64,
    pub sigma: f64,
    /// `None` when sigma is zero.
    pub z: Option<f64>,
}

impl PairStats {
    pub fn new(pair: JournalPair, f_obs: u64, f_exp: f64, sigma: f64) -> Self {
        let z = (sigma > 0.0).then(|| (f_obs as f64 - f_exp) / sigma);
        PairStats {
            pair,
            f_obs,
            f_exp,
            sigma,
            z,
        }
    }
}

/// One [`PairStats`] per pair in the union of observed and simulated
/// supports, in pair order.
pub fn zscores(f_obs: &JournalPairTable, sims: &BTreeMap<JournalPair, PairMoments>) -> Vec<PairStats> {
    let mut out = Vec::with_capacity(sims.len().max(f_obs.len()));
    let mut obs = f_obs.iter().peekable();
    let mut sim = sims.iter().peekable();
    loop {
        let next = match (obs.peek(), sim.peek()) {
            (None, None) => break,
            (Some(&(p, n)), None) => {
                obs.next();
                PairStats::new(p.clone(), n, 0.0, 0.0)
            }
            (None, Some(&(p, m))) => {
                sim.next();
                PairStats::new(p.clone(), 0, m.mean, m.sigma)
            }
            (Some(&(po, n)), Some(&(ps, m))) => match po.cmp(ps) {
                std::cmp::Ordering::Less => {
                    obs.next();
                    PairStats::new(po.clone(), n, 0.0, 0.0)
                }
                std::cmp::Ordering::Greater => {
                    sim.next();
                    PairStats::new(ps.clone(), 0, m.mean, m.sigma)
                }
                std::cmp::Ordering::Equal => {
                    obs.next();
                    sim.next();
                    PairStats::new(po.clone(), n, m.mean, m.sigma)
                }
            },
        };
        out.push(next);
    }
    out
}

pub fn undefined_count(stats: &[PairStats]) -> usize {
    stats.iter().filter(|s| s.z.is_none()).count()
}

/// Fraction of pairs, among those with a defined z in both lists, whose
/// z-scores have strictly opposite signs.
pub fn sign_change_report(stats_a: &[PairStats], stats_b: &[PairStats]) -> f64 {
    let a: FxHashMap<&JournalPair, f64> = stats_a.iter().filter_map(|s| s.z.map(|z| (&s.pair, z))).collect();
    let mut both = 0usize;
    let mut flipped = 0usize;
    for s in stats_b {
        let (Some(zb), Some(&za)) = (s.z, a.get(&s.pair)) else {
            continue;
        };
        both += 1;
        if (za > 0.0 && zb < 0.0) || (za < 0.0 && zb > 0.0) {
            flipped += 1;
        }
    }
    if both == 0 {
        0.0
    } else {
        flipped as f64 / both as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::corpus;

    fn acc_of(values: &[u64]) -> FrequencyAccumulator {
        let mut a = FrequencyAccumulator::default();
        for &v in values {
            if v > 0 {
                a.push(v);
            }
        }
        a
    }

    #[test]
    fn two_point_population_sigma() {
        let m = acc_of(&[4, 6]).moments(2, SigmaMode::Population);
        assert_eq!(m.mean, 5.0);
        assert_eq!(m.sigma, 1.0);
    }

    #[test]
    fn absent_simulations_count_as_zero() {
        let m = acc_of(&[8]).moments(4, SigmaMode::Population);
        assert_eq!(m.mean, 2.0);
        assert!((m.sigma - 12f64.sqrt()).abs() < 1e-12);
        assert!((m.sigma - 3.4641).abs() < 1e-4);
        let s = acc_of(&[8]).moments(4, SigmaMode::Sample);
        assert!((s.sigma - 16f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn z_formula() {
        let p = JournalPair::new("A", "B");
        assert_eq!(PairStats::new(p.clone(), 12, 9.5, 2.5).z, Some(1.0));
        assert_eq!(PairStats::new(p.clone(), 7, 7.0, 3.0).z, Some(0.0));
        assert_eq!(PairStats::new(p, 7, 7.0, 0.0).z, None);
    }

    #[test]
    fn single_slot_corpus_has_zero_sigma() {
        let c = corpus(2000, &[("p", &[("a", 1980, "A"), ("b", 1981, "B")])]);
        let cfg = SimConfig {
            n_simulations: 10,
            ..SimConfig::default()
        };
        let r = run_simulations(&c, &c, &cfg).unwrap();
        assert!(r.moments.values().all(|m| m.sigma == 0.0));
        let z = zscores(&crate::cocite::observed_frequencies(&c), &r.moments);
        assert_eq!(undefined_count(&z), z.len());
    }

    #[test]
    fn zscores_cover_union_support() {
        let obs: JournalPairTable = [(JournalPair::new("A", "B"), 3), (JournalPair::new("C", "C"), 1)]
            .into_iter()
            .collect();
        let mut sims = BTreeMap::new();
        sims.insert(JournalPair::new("A", "B"), PairMoments { mean: 2.0, sigma: 0.5 });
        sims.insert(JournalPair::new("A", "C"), PairMoments { mean: 1.0, sigma: 1.0 });
        let z = zscores(&obs, &sims);
        let pairs: Vec<_> = z.iter().map(|s| s.pair.to_string()).collect();
        assert_eq!(pairs, vec!["(A, B)", "(A, C)", "(C, C)"]);
        assert_eq!(z[0].z, Some(2.0));
        assert_eq!(z[1].z, Some(-1.0));
        assert_eq!(z[2].z, None);
    }

    #[test]
    fn sign_changes() {
        let mk = |zs: &[f64]| -> Vec<PairStats> {
            zs.iter()
                .enumerate()
                .map(|(i, &z)| PairStats::new(JournalPair::new(format!("J{i}"), "X"), 0, -z, 1.0))
                .collect()
        };
        let a = mk(&[1.0, -2.0, 0.5, 3.0]);
        let b = mk(&[-1.0, 3.0, 0.7, 1.0]);
        assert_eq!(sign_change_report(&a, &a), 0.0);
        assert_eq!(sign_change_report(&a, &b), 0.5);
        let zero = mk(&[0.0, -2.0, 0.5, 3.0]);
        assert_eq!(sign_change_report(&zero, &b), 0.25);
    }

    #[test]
    fn n_simulations_must_exceed_one() {
        let c = corpus(2000, &[("p", &[("a", 1980, "A"), ("b", 1981, "B")])]);
        let cfg = SimConfig {
            n_simulations: 1,
            ..SimConfig::default()
        };
        assert!(run_simulations(&c, &c, &cfg).is_err());
    }
}
