//! Per-publication z-score statistics and novelty/conventionality labels.

use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashMap;

use crate::cocite::PairKey;
use crate::corpus::{Corpus, JournalIdx, Publication};
use crate::error::{Error, Result};
use crate::simulate::PairStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Lnlc,
    Lnhc,
    Hnlc,
    Hnhc,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Lnlc, Category::Lnhc, Category::Hnlc, Category::Hnhc];

    pub fn new(high_novelty: bool, high_conventionality: bool) -> Self {
        match (high_novelty, high_conventionality) {
            (false, false) => Category::Lnlc,
            (false, true) => Category::Lnhc,
            (true, false) => Category::Hnlc,
            (true, true) => Category::Hnhc,
        }
    }

    pub fn high_novelty(self) -> bool {
        matches!(self, Category::Hnlc | Category::Hnhc)
    }

    pub fn high_conventionality(self) -> bool {
        matches!(self, Category::Lnhc | Category::Hnhc)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Lnlc => "LNLC",
            Category::Lnhc => "LNHC",
            Category::Hnlc => "HNLC",
            Category::Hnhc => "HNHC",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown category `{s}`")))
    }
}

/// Low-tail statistic used for novelty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoveltyPercentile {
    #[default]
    P10,
    P1,
}

impl NoveltyPercentile {
    pub fn percent(self) -> u32 {
        match self {
            NoveltyPercentile::P10 => 10,
            NoveltyPercentile::P1 => 1,
        }
    }
}

impl TryFrom<u32> for NoveltyPercentile {
    type Error = Error;

    fn try_from(p: u32) -> Result<Self> {
        match p {
            10 => Ok(NoveltyPercentile::P10),
            1 => Ok(NoveltyPercentile::P1),
            other => Err(Error::InvalidConfig(format!(
                "novelty percentile must be 10 or 1, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassifyConfig {
    pub novelty_percentile: NoveltyPercentile,
}

/// Linear interpolation between closest order statistics of a sorted slice
/// (the "type 7" quantile), `q` in [0, 1].
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PubSummary {
    pub pub_id: String,
    pub z_median: f64,
    pub z_p10: f64,
    pub z_p1: f64,
    pub n_defined_pairs: usize,
    pub category: Option<Category>,
}

impl PubSummary {
    /// Summary of a z-score multiset; `None` if it is empty.
    pub fn from_zscores(pub_id: impl Into<String>, zs: &mut [f64]) -> Option<Self> {
        if zs.is_empty() {
            return None;
        }
        zs.sort_unstable_by(f64::total_cmp);
        Some(PubSummary {
            pub_id: pub_id.into(),
            z_median: quantile_sorted(zs, 0.5),
            z_p10: quantile_sorted(zs, 0.1),
            z_p1: quantile_sorted(zs, 0.01),
            n_defined_pairs: zs.len(),
            category: None,
        })
    }

    pub fn novelty_statistic(&self, p: NoveltyPercentile) -> f64 {
        match p {
            NoveltyPercentile::P10 => self.z_p10,
            NoveltyPercentile::P1 => self.z_p1,
        }
    }
}

/// Defined z-scores keyed by journal-index pairs of one corpus catalog.
#[derive(Debug, Clone, Default)]
pub struct PairIndex {
    z: FxHashMap<PairKey, f64>,
}

impl PairIndex {
    /// Indexes the defined z-scores of pairs whose journals both exist in
    /// the corpus catalog.
    pub fn new(corpus: &Corpus, stats: &[PairStats]) -> Self {
        let cat = corpus.catalog();
        let z = stats
            .iter()
            .filter_map(|s| {
                let z = s.z?;
                let a = cat.journal_index(s.pair.a())?;
                let b = cat.journal_index(s.pair.b())?;
                Some((PairKey::new(a, b), z))
            })
            .collect();
        PairIndex { z }
    }

    #[inline]
    fn get(&self, a: JournalIdx, b: JournalIdx) -> Option<f64> {
        self.z.get(&PairKey::new(a, b)).copied()
    }
}

/// z-score statistics of one publication, every pair instance counted with
/// multiplicity. `None` if no pair has a defined z.
pub fn pub_zstats(publication: &Publication, corpus: &Corpus, index: &PairIndex) -> Option<PubSummary> {
    let cat = corpus.catalog();
    let js: Vec<JournalIdx> = publication.refs.iter().map(|&r| cat.ref_journal(r)).collect();
    let mut zs = Vec::with_capacity(js.len() * js.len().saturating_sub(1) / 2);
    for i in 0..js.len() {
        for j in i + 1..js.len() {
            if let Some(z) = index.get(js[i], js[j]) {
                zs.push(z);
            }
        }
    }
    PubSummary::from_zscores(publication.pub_id.clone(), &mut zs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summaries {
    pub summaries: Vec<PubSummary>,
    /// Publications with no defined pair, excluded from classification.
    pub excluded: Vec<String>,
}

pub fn summarize_publications(corpus: &Corpus, stats: &[PairStats]) -> Summaries {
    let index = PairIndex::new(corpus, stats);
    let mut summaries = Vec::with_capacity(corpus.len());
    let mut excluded = Vec::new();
    for p in corpus.publications() {
        match pub_zstats(p, corpus, &index) {
            Some(s) => summaries.push(s),
            None => excluded.push(p.pub_id.clone()),
        }
    }
    Summaries { summaries, excluded }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub summaries: Vec<PubSummary>,
    /// Median over publications of their median z-score.
    pub threshold: f64,
}

/// Labels HC iff z_median > threshold and HN iff the chosen low percentile
/// is < 0, both strict.
pub fn classify_corpus(mut summaries: Vec<PubSummary>, cfg: &ClassifyConfig) -> Result<Classification> {
    if summaries.is_empty() {
        return Err(Error::Empty("no publications to classify"));
    }
    let mut medians: Vec<f64> = summaries.iter().map(|s| s.z_median).collect();
    medians.sort_unstable_by(f64::total_cmp);
    let threshold = quantile_sorted(&medians, 0.5);
    for s in &mut summaries {
        let hn = s.novelty_statistic(cfg.novelty_percentile) < 0.0;
        let hc = s.z_median > threshold;
        s.category = Some(Category::new(hn, hc));
    }
    Ok(Classification { summaries, threshold })
}
