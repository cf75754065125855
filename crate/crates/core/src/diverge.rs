//! Null-model fit diagnostics: relative entropy between observed and
//! simulated journal-pair distributions, and per-subject fold differences of
//! citation counts before and after a shuffle.

use std::collections::{BTreeMap, BTreeSet};

use crate::cocite::{JournalPair, JournalPairTable};
use crate::corpus::{Background, Corpus, Publication};
use crate::error::{Error, Result};
use crate::shuffle::ShuffleOutcome;
use crate::simulate::PairMoments;

pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceResult {
    pub corpus_tag: String,
    pub background: Background,
    /// D(P_obs || P_sim) in bits.
    pub kld: f64,
    pub n_support: usize,
    pub epsilon: f64,
}

/// Relative entropy in bits of two aligned non-negative weight vectors,
/// each smoothed by `epsilon` per bin and normalized.
pub fn kl_bits(p: &[f64], q: &[f64], epsilon: f64) -> f64 {
    assert_eq!(p.len(), q.len());
    let k = p.len() as f64;
    let zp: f64 = p.iter().sum::<f64>() + k * epsilon;
    let zq: f64 = q.iter().sum::<f64>() + k * epsilon;
    let d: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let pa = (a + epsilon) / zp;
            let qb = (b + epsilon) / zq;
            if pa == qb {
                0.0
            } else {
                pa * (pa / qb).log2()
            }
        })
        .sum();
    d.max(0.0)
}

/// K-L divergence of observed from simulated pair frequencies, restricted to
/// pairs with both journals in `journal_filter`.
pub fn kl_divergence(
    obs: &JournalPairTable,
    sim_mean: &BTreeMap<JournalPair, PairMoments>,
    journal_filter: &BTreeSet<String>,
    epsilon: f64,
) -> Result<DivergenceResult> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidConfig("epsilon must be positive".into()));
    }
    let keep = |p: &JournalPair| journal_filter.contains(p.a()) && journal_filter.contains(p.b());
    let mut support: BTreeMap<&JournalPair, (f64, f64)> = BTreeMap::new();
    for (pair, n) in obs.iter().filter(|(p, _)| keep(p)) {
        support.entry(pair).or_default().0 = n as f64;
    }
    for (pair, m) in sim_mean.iter().filter(|(p, _)| keep(p)) {
        support.entry(pair).or_default().1 = m.mean;
    }
    let (p, q): (Vec<f64>, Vec<f64>) = support.values().copied().unzip();
    if p.iter().all(|&x| x == 0.0) || q.iter().all(|&x| x == 0.0) {
        return Err(Error::Empty("empty pair support after journal filtering"));
    }
    Ok(DivergenceResult {
        corpus_tag: String::new(),
        background: Background::Local,
        kld: kl_bits(&p, &q, epsilon),
        n_support: p.len(),
        epsilon,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionRow {
    pub subject: String,
    pub o: u64,
    pub s: u64,
    pub fold: u64,
}

/// `round(max(o, s) / min(o, s))`, 1 when both are zero, a zero side counted as 1.
pub fn fold_difference(o: u64, s: u64) -> u64 {
    if o == s {
        return 1;
    }
    let (hi, lo) = if o > s { (o, s) } else { (s, o) };
    let lo = lo.max(1);
    ((hi as f64 / lo as f64).round() as u64).max(1)
}

/// Which shuffled assignment to count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stage {
    /// Every shuffled publication, including those error correction deletes.
    #[default]
    BeforeCorrection,
    /// Surviving publications only.
    AfterCorrection,
}

fn subject_counts<'a>(corpus: &Corpus, pubs: impl Iterator<Item = &'a Publication>) -> BTreeMap<String, u64> {
    let cat = corpus.catalog();
    let mut counts = BTreeMap::new();
    for p in pubs {
        for &r in &p.refs {
            let subject = &cat.reference(r).subject;
            if let Some(n) = counts.get_mut(subject) {
                *n += 1;
            } else {
                counts.insert(subject.clone(), 1);
            }
        }
    }
    counts
}

/// Per-subject citation counts before and after a shuffle. `subjects` adds
/// labels that may be absent from both sides; every observed subject is
/// always reported.
pub fn composition_fold(
    before: &Corpus,
    after: &ShuffleOutcome,
    subjects: &BTreeSet<String>,
    stage: Stage,
) -> Vec<CompositionRow> {
    let o = subject_counts(before, before.publications().iter());
    let s = match stage {
        Stage::BeforeCorrection => subject_counts(&after.corpus, after.assigned_publications()),
        Stage::AfterCorrection => subject_counts(&after.corpus, after.corpus.publications().iter()),
    };
    let labels: BTreeSet<&String> = subjects.iter().chain(o.keys()).chain(s.keys()).collect();
    labels
        .into_iter()
        .map(|subject| {
            let o = o.get(subject).copied().unwrap_or(0);
            let s = s.get(subject).copied().unwrap_or(0);
            CompositionRow {
                subject: subject.clone(),
                o,
                s,
                fold: fold_difference(o, s),
            }
        })
        .collect()
}
