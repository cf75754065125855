//! Hit articles and hit-rate statistics by category.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use statrs::function::gamma::gamma_ur;

use crate::classify::{Category, PubSummary};
use crate::corpus::Publication;
use crate::error::{Error, Result};

/// Smallest expected count for a valid chi-square test.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HitConfig {
    hit_percentile: u32,
}

impl HitConfig {
    pub const ALLOWED: [u32; 4] = [1, 2, 5, 10];

    pub fn new(hit_percentile: u32) -> Result<Self> {
        if Self::ALLOWED.contains(&hit_percentile) {
            Ok(HitConfig { hit_percentile })
        } else {
            Err(Error::InvalidConfig(format!(
                "hit percentile must be one of 1, 2, 5, 10; got {hit_percentile}"
            )))
        }
    }

    pub fn percentile(&self) -> u32 {
        self.hit_percentile
    }
}

impl Default for HitConfig {
    fn default() -> Self {
        HitConfig { hit_percentile: 10 }
    }
}

/// Citation count a publication must reach to be a hit: the count of the
/// `ceil(N * p / 100)`-th most cited publication.
pub fn hit_cutoff(citations: &[u64], percentile: u32) -> Result<u64> {
    if citations.is_empty() {
        return Err(Error::Empty("cannot designate hits in an empty corpus"));
    }
    let n = citations.len();
    let k = (n * percentile as usize).div_ceil(100).max(1);
    let mut counts = citations.to_vec();
    // k-th largest == (n - k)-th smallest
    let (_, cutoff, _) = counts.select_nth_unstable(n - k);
    Ok(*cutoff)
}

/// Publications whose 8-year citation count reaches the top-p% cutoff. All
/// publications tied at the cutoff are hits.
pub fn designate_hits(pubs: &[Publication], cfg: &HitConfig) -> Result<BTreeSet<String>> {
    let counts: Vec<u64> = pubs.iter().map(|p| p.citations_8yr).collect();
    let cutoff = hit_cutoff(&counts, cfg.hit_percentile)?;
    Ok(pubs
        .iter()
        .filter(|p| p.citations_8yr >= cutoff)
        .map(|p| p.pub_id.clone())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Over,
    Under,
    Even,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Over => "over",
            Direction::Under => "under",
            Direction::Even => "even",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// False when any expected count is below [`MIN_EXPECTED`].
    pub valid: bool,
    pub expected: Vec<f64>,
    pub directions: Vec<Direction>,
}

/// Survival function of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df as f64 / 2.0, x / 2.0)
}

/// Goodness of fit of `observed` hits against hits distributed in
/// proportion to `sizes`. Cells with zero expected count add nothing to the
/// statistic (and make the test invalid).
pub fn chi_square_gof(observed: &[u64], sizes: &[u64]) -> ChiSquare {
    assert_eq!(observed.len(), sizes.len());
    let total_hits: u64 = observed.iter().sum();
    let n: u64 = sizes.iter().sum();
    let expected: Vec<f64> = sizes
        .iter()
        .map(|&s| {
            if n == 0 {
                0.0
            } else {
                total_hits as f64 * s as f64 / n as f64
            }
        })
        .collect();
    let statistic: f64 = observed
        .iter()
        .zip(&expected)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let df = observed.len().saturating_sub(1);
    let directions = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| {
            let o = o as f64;
            if o > e {
                Direction::Over
            } else if o < e {
                Direction::Under
            } else {
                Direction::Even
            }
        })
        .collect();
    ChiSquare {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
        valid: expected.iter().all(|&e| e >= MIN_EXPECTED),
        expected,
        directions,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryRow {
    pub category: Category,
    pub n_articles: u64,
    pub n_hits: u64,
    pub hit_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitReport {
    pub rows: Vec<CategoryRow>,
    pub chi2_4cat: ChiSquare,
    /// LN vs HN.
    pub chi2_novelty: ChiSquare,
    /// LC vs HC.
    pub chi2_conventionality: ChiSquare,
    pub total_hits: u64,
    pub total_articles: u64,
}

impl HitReport {
    pub fn row(&self, c: Category) -> &CategoryRow {
        self.rows
            .iter()
            .find(|r| r.category == c)
            .expect("all categories present")
    }
}

pub fn hit_report(summaries: &[PubSummary], hits: &BTreeSet<String>) -> Result<HitReport> {
    let mut counts: BTreeMap<Category, (u64, u64)> = Category::ALL.iter().map(|&c| (c, (0, 0))).collect();
    for s in summaries {
        let c = s
            .category
            .ok_or_else(|| Error::InvalidConfig(format!("publication `{}` is not classified", s.pub_id)))?;
        let e = counts.get_mut(&c).expect("all categories");
        e.0 += 1;
        e.1 += hits.contains(&s.pub_id) as u64;
    }
    let rows: Vec<CategoryRow> = counts
        .iter()
        .map(|(&category, &(n_articles, n_hits))| CategoryRow {
            category,
            n_articles,
            n_hits,
            hit_rate: if n_articles == 0 {
                0.0
            } else {
                n_hits as f64 / n_articles as f64
            },
        })
        .collect();

    let sizes: Vec<u64> = rows.iter().map(|r| r.n_articles).collect();
    let obs: Vec<u64> = rows.iter().map(|r| r.n_hits).collect();
    let pooled = |pick: fn(Category) -> bool| {
        let mut size = [0u64; 2];
        let mut hit = [0u64; 2];
        for r in &rows {
            let i = pick(r.category) as usize;
            size[i] += r.n_articles;
            hit[i] += r.n_hits;
        }
        chi_square_gof(&hit, &size)
    };
    Ok(HitReport {
        chi2_4cat: chi_square_gof(&obs, &sizes),
        chi2_novelty: pooled(Category::high_novelty),
        chi2_conventionality: pooled(Category::high_conventionality),
        total_hits: obs.iter().sum(),
        total_articles: sizes.iter().sum(),
        rows,
    })
}
