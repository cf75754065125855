//! Synthetic citation corpora with disciplinary structure.
//!
//! Each discipline owns a set of journals and a pool of cited references.
//! A publication draws its reference count from a negative binomial, then
//! each citation picks its own discipline with probability `p_intra` (else a
//! uniformly chosen other discipline) and a reference from that pool with
//! Zipf-distributed popularity, never citing the same reference twice.
//! Subject labels are discipline labels. 8-year citation counts are
//! discretized lognormal.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Gamma, LogNormal, Poisson};

use crate::corpus::{Background, CatalogBuilder, Corpus, Publication, RawReference, RefIdx};
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq)]
pub struct RefsPerPub {
    pub mean: f64,
    /// Negative-binomial dispersion (variance = m + dispersion * m^2 over the
    /// part above `min`); 0 gives a Poisson.
    pub dispersion: f64,
    pub min: usize,
    pub max: usize,
}

impl Default for RefsPerPub {
    fn default() -> Self {
        RefsPerPub {
            mean: 20.0,
            dispersion: 0.3,
            min: 2,
            max: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_disciplines: usize,
    pub journals_per_discipline: usize,
    pub pubs_per_discipline: usize,
    pub ref_pool_per_discipline: usize,
    pub refs_per_pub: RefsPerPub,
    pub p_intra: f64,
    /// Zipf exponent of reference popularity within a pool; 0 is uniform.
    pub skew: f64,
    pub seed: u64,
    pub slice_year: i32,
    /// References are published in the `ref_year_span` years before the slice.
    pub ref_year_span: u32,
    /// Per-discipline multiplier of `pubs_per_discipline`; empty means 1.0 for all.
    pub discipline_scale: Vec<f64>,
    /// Lognormal parameters of the 8-year citation count.
    pub citations_mu: f64,
    pub citations_sigma: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_disciplines: 3,
            journals_per_discipline: 20,
            pubs_per_discipline: 1000,
            ref_pool_per_discipline: 5000,
            refs_per_pub: RefsPerPub::default(),
            p_intra: 0.85,
            skew: 0.5,
            seed: 0,
            slice_year: 1985,
            ref_year_span: 10,
            discipline_scale: Vec::new(),
            citations_mu: 2.0,
            citations_sigma: 1.2,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if !(0.0..=1.0).contains(&self.p_intra) {
            return bad("p_intra must lie in [0, 1]");
        }
        if self.n_disciplines == 0 || self.journals_per_discipline == 0 {
            return bad("need at least one discipline and one journal per discipline");
        }
        if self.refs_per_pub.min < 2 || self.refs_per_pub.max < self.refs_per_pub.min {
            return bad("refs_per_pub needs 2 <= min <= max");
        }
        if self.ref_pool_per_discipline < self.refs_per_pub.max {
            return Err(Error::InvalidConfig(format!(
                "reference pool of {} per discipline cannot supply {} distinct references",
                self.ref_pool_per_discipline, self.refs_per_pub.max
            )));
        }
        if self.skew < 0.0 || self.refs_per_pub.dispersion < 0.0 || self.citations_sigma < 0.0 {
            return bad("skew, dispersion and citations_sigma must be non-negative");
        }
        if self.ref_year_span == 0 {
            return bad("ref_year_span must be positive");
        }
        if !self.discipline_scale.is_empty() && self.discipline_scale.len() != self.n_disciplines {
            return bad("discipline_scale needs one entry per discipline");
        }
        if self.discipline_scale.iter().any(|&s| s.is_nan() || s < 0.0) {
            return bad("discipline_scale entries must be non-negative");
        }
        Ok(())
    }

    pub fn pubs_in(&self, discipline: usize) -> usize {
        let scale = self.discipline_scale.get(discipline).copied().unwrap_or(1.0);
        (self.pubs_per_discipline as f64 * scale).round() as usize
    }
}

pub fn discipline_label(d: usize) -> String {
    format!("S{d:02}")
}

/// A generated corpus and its per-discipline sub-corpora, all sharing one
/// catalog.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    /// Every publication; tagged as a global background.
    pub corpus: Corpus,
    /// One local corpus per discipline.
    pub disciplines: Vec<Corpus>,
    /// Discipline index of each publication of `corpus`.
    pub pub_discipline: Vec<usize>,
}

impl SynthCorpus {
    pub fn labels(&self) -> Vec<String> {
        (0..self.disciplines.len()).map(discipline_label).collect()
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = seeded(cfg.seed);
    let d_count = cfg.n_disciplines;
    let pool = cfg.ref_pool_per_discipline;

    let mut builder = CatalogBuilder::new();
    for d in 0..d_count {
        for j in 0..cfg.journals_per_discipline {
            builder.add_journal(&journal_id(d, j));
        }
        for r in 0..pool {
            let year = cfg.slice_year - 1 - rng.random_range(0..cfg.ref_year_span) as i32;
            let j = rng.random_range(0..cfg.journals_per_discipline);
            builder.add_reference(RawReference {
                ref_id: format!("R{d:02}-{r:07}"),
                year,
                journal_id: journal_id(d, j),
                subject: discipline_label(d),
            });
        }
    }
    let catalog = Arc::new(builder.build()?);
    let first_ref = |d: usize| catalog.ref_index(&format!("R{d:02}-{:07}", 0)).expect("generated");

    let weights: Vec<f64> = (1..=pool).map(|rank| (rank as f64).powf(-cfg.skew)).collect();
    let popularity = WeightedIndex::new(&weights).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let citations =
        LogNormal::new(cfg.citations_mu, cfg.citations_sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let rp = &cfg.refs_per_pub;
    let extra_mean = (rp.mean - rp.min as f64).max(0.0);
    let gamma = if rp.dispersion > 0.0 && extra_mean > 0.0 {
        Some(
            Gamma::new(1.0 / rp.dispersion, extra_mean * rp.dispersion)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?,
        )
    } else {
        None
    };

    let mut publications = Vec::new();
    let mut pub_discipline = Vec::new();
    let mut chosen: Vec<RefIdx> = Vec::new();
    for d in 0..d_count {
        for i in 0..cfg.pubs_in(d) {
            let lambda = match &gamma {
                Some(g) => g.sample(&mut rng),
                None => extra_mean,
            };
            let extra = if lambda > 0.0 {
                Poisson::new(lambda).map(|p| p.sample(&mut rng) as usize).unwrap_or(0)
            } else {
                0
            };
            let n = (rp.min + extra).min(rp.max);

            chosen.clear();
            while chosen.len() < n {
                let target = if d_count == 1 || rng.random_bool(cfg.p_intra) {
                    d
                } else {
                    let k = rng.random_range(0..d_count - 1);
                    if k >= d {
                        k + 1
                    } else {
                        k
                    }
                };
                let base = first_ref(target);
                let mut r = base + popularity.sample(&mut rng) as RefIdx;
                let mut tries = 0;
                while chosen.contains(&r) {
                    tries += 1;
                    if tries > 64 {
                        // fall back to the most popular unused reference
                        r = (base..base + pool as RefIdx)
                            .find(|x| !chosen.contains(x))
                            .expect("pool larger than max refs");
                        break;
                    }
                    r = base + popularity.sample(&mut rng) as RefIdx;
                }
                chosen.push(r);
            }
            let cites = citations.sample(&mut rng).floor() as u64;
            publications.push(Publication {
                pub_id: format!("P{d:02}-{i:07}"),
                year: cfg.slice_year,
                journal_id: journal_id(d, rng.random_range(0..cfg.journals_per_discipline)),
                refs: chosen.clone(),
                citations_8yr: cites,
            });
            pub_discipline.push(d);
        }
    }

    let corpus = Corpus::new(cfg.slice_year, Background::Global, Arc::clone(&catalog), publications)?;
    let disciplines = (0..d_count)
        .map(|d| {
            let pubs = corpus
                .publications()
                .iter()
                .zip(&pub_discipline)
                .filter(|(_, &pd)| pd == d)
                .map(|(p, _)| p.clone())
                .collect();
            Corpus::new_unchecked(cfg.slice_year, Background::Local, Arc::clone(&catalog), pubs)
        })
        .collect();
    Ok(SynthCorpus {
        corpus,
        disciplines,
        pub_discipline,
    })
}

fn journal_id(d: usize, j: usize) -> String {
    format!("J{d:02}-{j:04}")
}
