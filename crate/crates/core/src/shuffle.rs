//! Citation-switching null models.
//!
//! Citations are partitioned into permutation groups by the publication year
//! of the cited reference. `repcs` permutes each group's token multiset
//! uniformly and then deletes publications that ended up citing one
//! reference twice. `umsj` walks the slots and swaps each with a random
//! partner of the same group, rejecting swaps that restore an original
//! reference or create a duplicate.
//!
//! For a global background the pool's publications that are not part of the
//! analyzed corpus contribute "ghost" slots: their tokens take part in the
//! permutation, but only analyzed slots are read back.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::corpus::{Background, Catalog, Corpus, Publication, RefIdx};
use crate::error::{Error, Result};
use crate::rng::group_rng;

pub const DEFAULT_MAX_RETRIES: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Repcs,
    Umsj,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Repcs => "repcs",
            Algorithm::Umsj => "umsj",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "repcs" => Ok(Algorithm::Repcs),
            "umsj" => Ok(Algorithm::Umsj),
            other => Err(Error::InvalidConfig(format!(
                "unknown algorithm `{other}` (expected repcs or umsj)"
            ))),
        }
    }
}

/// A citation position: the `position`-th reference of publication
/// `publication`. Publications are numbered analyzed-first, then ghosts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    pub publication: u32,
    pub position: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationGroup {
    pub year: i32,
    /// Analyzed slots first, then ghost slots.
    pub slots: Vec<Slot>,
    /// Original token of each slot.
    pub tokens: Vec<RefIdx>,
    analyzed: usize,
    flat: Vec<u32>,
}

impl PermutationGroup {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Number of slots belonging to the analyzed corpus.
    pub fn analyzed_slots(&self) -> usize {
        self.analyzed
    }
}

/// Permutation groups of one corpus against one substitution pool.
#[derive(Debug, Clone)]
pub struct GroupSet {
    catalog: Arc<Catalog>,
    corpus: Corpus,
    background: Background,
    /// Flat-array offsets of every publication (analyzed, then ghosts); one
    /// extra trailing entry.
    offsets: Vec<u32>,
    /// Original flat assignment of every slot.
    original: Vec<RefIdx>,
    groups: Vec<PermutationGroup>,
}

impl GroupSet {
    pub fn groups(&self) -> &[PermutationGroup] {
        &self.groups
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    /// The analyzed corpus, indexed against [`GroupSet::catalog`].
    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn background(&self) -> Background {
        self.background
    }

    pub fn n_analyzed(&self) -> usize {
        self.corpus.len()
    }

    pub fn n_ghosts(&self) -> usize {
        self.offsets.len() - 1 - self.corpus.len()
    }

    pub(crate) fn analyzed_len(&self) -> usize {
        self.offsets[self.corpus.len()] as usize
    }

    pub(crate) fn offsets(&self) -> &[u32] {
        &self.offsets
    }

    /// Union of all token multisets, as ref index -> count.
    pub fn token_multiset(&self) -> BTreeMap<RefIdx, usize> {
        let mut m = BTreeMap::new();
        for g in &self.groups {
            for &t in &g.tokens {
                *m.entry(t).or_default() += 1;
            }
        }
        m
    }
}

/// Partitions the corpus's citations into permutation groups by reference
/// year. When `pool` has publications outside `corpus` (matched by pub_id),
/// their citations join the groups as ghost slots.
pub fn build_groups(corpus: &Corpus, pool: &Corpus) -> Result<GroupSet> {
    let (catalog, pool_map): (Arc<Catalog>, Option<Vec<RefIdx>>) =
        if Arc::ptr_eq(corpus.shared_catalog(), pool.shared_catalog()) {
            (Arc::clone(corpus.shared_catalog()), None)
        } else {
            let (merged, map) = corpus.catalog().merge(pool.catalog())?;
            (Arc::new(merged), Some(map))
        };
    let analyzed_ids: FxHashSet<&str> = corpus.publications().iter().map(|p| p.pub_id.as_str()).collect();
    let ghost_pubs: Vec<Vec<RefIdx>> = pool
        .publications()
        .iter()
        .filter(|p| !analyzed_ids.contains(p.pub_id.as_str()))
        .map(|p| match &pool_map {
            Some(map) => p.refs.iter().map(|&r| map[r as usize]).collect(),
            None => p.refs.clone(),
        })
        .collect();
    let background = if ghost_pubs.is_empty() {
        Background::Local
    } else {
        Background::Global
    };

    if background == Background::Global {
        let pool_years: FxHashSet<i32> = pool
            .publications()
            .iter()
            .flat_map(|p| p.refs.iter().map(|&r| pool.catalog().ref_year(r)))
            .collect();
        for p in corpus.publications() {
            for &r in &p.refs {
                let y = catalog.ref_year(r);
                if !pool_years.contains(&y) {
                    return Err(Error::MissingGroup(y));
                }
            }
        }
    }

    let analyzed = corpus.publications().iter().map(|p| p.refs.as_slice());
    let all: Vec<&[RefIdx]> = analyzed.chain(ghost_pubs.iter().map(Vec::as_slice)).collect();
    let n_analyzed = corpus.len();

    let mut offsets = Vec::with_capacity(all.len() + 1);
    let mut original = Vec::new();
    offsets.push(0u32);
    for refs in &all {
        original.extend_from_slice(refs);
        offsets.push(original.len() as u32);
    }

    type Entries = Vec<(Slot, u32, RefIdx)>;
    let mut by_year: BTreeMap<i32, (Entries, Entries)> = BTreeMap::new();
    for (pi, refs) in all.iter().enumerate() {
        for (pos, &r) in refs.iter().enumerate() {
            let slot = Slot {
                publication: pi as u32,
                position: pos as u32,
            };
            let flat = offsets[pi] + pos as u32;
            let entry = by_year.entry(catalog.ref_year(r)).or_default();
            if pi < n_analyzed {
                entry.0.push((slot, flat, r));
            } else {
                entry.1.push((slot, flat, r));
            }
        }
    }
    let groups = by_year
        .into_iter()
        .map(|(year, (mine, ghosts))| {
            let analyzed = mine.len();
            let mut slots = Vec::with_capacity(mine.len() + ghosts.len());
            let mut tokens = Vec::with_capacity(slots.capacity());
            let mut flat = Vec::with_capacity(slots.capacity());
            for (s, f, t) in mine.into_iter().chain(ghosts) {
                slots.push(s);
                flat.push(f);
                tokens.push(t);
            }
            PermutationGroup {
                year,
                slots,
                tokens,
                analyzed,
                flat,
            }
        })
        .collect();

    let corpus = Corpus::new_unchecked(
        corpus.slice_year(),
        background,
        Arc::clone(&catalog),
        corpus.publications().to_vec(),
    );
    Ok(GroupSet {
        catalog,
        corpus,
        background,
        offsets,
        original,
        groups,
    })
}

/// Counters produced by one shuffle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ShuffleStats {
    /// Analyzed slots whose final token is their original reference.
    pub fixed_points: usize,
    /// Slots for which umsj found no admissible swap.
    pub retry_exhausted: usize,
}

/// repcs: uniform permutation of each group's tokens. Writes the analyzed
/// slots of `flat` (length at least `groups.analyzed_len()`).
pub(crate) fn permute_repcs(set: &GroupSet, seed: u64, scratch: &mut Vec<RefIdx>, flat: &mut [RefIdx]) -> ShuffleStats {
    let mut stats = ShuffleStats::default();
    for (gi, group) in set.groups.iter().enumerate() {
        let mut rng = group_rng(seed, gi as u64);
        scratch.clear();
        scratch.extend_from_slice(&group.tokens);
        scratch.shuffle(&mut rng);
        for k in 0..group.analyzed {
            let t = scratch[k];
            flat[group.flat[k] as usize] = t;
            stats.fixed_points += (t == group.tokens[k]) as usize;
        }
    }
    stats
}

/// umsj: one pass of rejection-sampled swaps over every slot, ghosts
/// included. `flat` must span all publications.
pub(crate) fn permute_umsj(set: &GroupSet, seed: u64, max_retries: u32, flat: &mut Vec<RefIdx>) -> ShuffleStats {
    flat.clear();
    flat.extend_from_slice(&set.original);
    let offsets = &set.offsets;
    let holds_elsewhere = |flat: &[RefIdx], publication: u32, except: u32, token: RefIdx| {
        let lo = offsets[publication as usize] as usize;
        let hi = offsets[publication as usize + 1] as usize;
        (lo..hi).any(|f| f != except as usize && flat[f] == token)
    };

    let mut stats = ShuffleStats::default();
    for (gi, group) in set.groups.iter().enumerate() {
        let mut rng = group_rng(seed, gi as u64);
        let n = group.len();
        for i in 0..n {
            if n < 2 {
                stats.retry_exhausted += 1;
                continue;
            }
            let mut swapped = false;
            for _ in 0..max_retries {
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let (fi, fj) = (group.flat[i], group.flat[j]);
                let (ti, tj) = (flat[fi as usize], flat[fj as usize]);
                if tj == group.tokens[i] || ti == group.tokens[j] {
                    continue;
                }
                let (pi, pj) = (group.slots[i].publication, group.slots[j].publication);
                if pi != pj && (holds_elsewhere(flat, pi, fi, tj) || holds_elsewhere(flat, pj, fj, ti)) {
                    continue;
                }
                flat.swap(fi as usize, fj as usize);
                swapped = true;
                break;
            }
            if !swapped {
                stats.retry_exhausted += 1;
            }
        }
        for k in 0..group.analyzed {
            stats.fixed_points += (flat[group.flat[k] as usize] == group.tokens[k]) as usize;
        }
    }
    stats
}

/// Marks references seen within one publication; reused across publications.
#[derive(Debug, Default)]
pub(crate) struct DuplicateFinder {
    stamp: Vec<u32>,
    epoch: u32,
}

impl DuplicateFinder {
    pub fn new(n_refs: usize) -> Self {
        DuplicateFinder {
            stamp: vec![0; n_refs],
            epoch: 0,
        }
    }

    #[inline]
    pub fn has_duplicate(&mut self, refs: &[RefIdx]) -> bool {
        if self.epoch == u32::MAX {
            self.stamp.fill(0);
            self.epoch = 0;
        }
        self.epoch += 1;
        for &r in refs {
            let s = &mut self.stamp[r as usize];
            if *s == self.epoch {
                return true;
            }
            *s = self.epoch;
        }
        false
    }
}

/// Result of one shuffle of the analyzed corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ShuffleOutcome {
    /// Surviving publications with their shuffled references.
    pub corpus: Corpus,
    /// Publications removed by error correction.
    pub deleted_pubs: Vec<String>,
    /// Shuffled reference lists of the deleted publications, as they were
    /// before error correction removed them.
    pub deleted: Vec<Publication>,
    pub fixed_points: usize,
    pub retry_exhausted: usize,
    pub algorithm: Algorithm,
}

impl ShuffleOutcome {
    /// Every shuffled publication before error correction.
    pub fn assigned_publications(&self) -> impl Iterator<Item = &Publication> {
        self.corpus.publications().iter().chain(self.deleted.iter())
    }
}

fn outcome(set: &GroupSet, flat: &[RefIdx], stats: ShuffleStats, algorithm: Algorithm) -> ShuffleOutcome {
    let mut finder = DuplicateFinder::new(set.catalog.n_refs());
    let mut survivors = Vec::with_capacity(set.n_analyzed());
    let mut deleted = Vec::new();
    for (i, p) in set.corpus.publications().iter().enumerate() {
        let refs = &flat[set.offsets[i] as usize..set.offsets[i + 1] as usize];
        let shuffled = Publication {
            refs: refs.to_vec(),
            ..p.clone()
        };
        if finder.has_duplicate(refs) {
            deleted.push(shuffled);
        } else {
            survivors.push(shuffled);
        }
    }
    ShuffleOutcome {
        corpus: Corpus::new_unchecked(
            set.corpus.slice_year(),
            set.background,
            Arc::clone(&set.catalog),
            survivors,
        ),
        deleted_pubs: deleted.iter().map(|p| p.pub_id.clone()).collect(),
        deleted,
        fixed_points: stats.fixed_points,
        retry_exhausted: stats.retry_exhausted,
        algorithm,
    }
}

/// Year-stratified multiset permutation with duplicate-deletion error
/// correction. Deterministic in `seed`.
pub fn repcs_shuffle(set: &GroupSet, seed: u64) -> ShuffleOutcome {
    let mut flat = vec![0; set.analyzed_len()];
    let mut scratch = Vec::new();
    let stats = permute_repcs(set, seed, &mut scratch, &mut flat);
    outcome(set, &flat, stats, Algorithm::Repcs)
}

/// Swap-based baseline with rejection of fixed points and duplicates.
pub fn umsj_shuffle(set: &GroupSet, seed: u64, max_retries: u32) -> ShuffleOutcome {
    let mut flat = Vec::new();
    let stats = permute_umsj(set, seed, max_retries, &mut flat);
    outcome(set, &flat, stats, Algorithm::Umsj)
}

pub fn shuffle(set: &GroupSet, algorithm: Algorithm, seed: u64, max_retries: u32) -> ShuffleOutcome {
    match algorithm {
        Algorithm::Repcs => repcs_shuffle(set, seed),
        Algorithm::Umsj => umsj_shuffle(set, seed, max_retries),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PubDelta {
    pub pub_id: String,
    pub ref_count_delta: i64,
    /// Sum over years of |after - before| reference counts.
    pub year_histogram_delta: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreservationReport {
    pub deltas: Vec<PubDelta>,
    /// before.len() - surviving publications.
    pub publication_delta: usize,
    pub deleted: usize,
}

impl PreservationReport {
    pub fn is_preserved(&self) -> bool {
        self.publication_delta == self.deleted
            && self
                .deltas
                .iter()
                .all(|d| d.ref_count_delta == 0 && d.year_histogram_delta == 0)
    }
}

/// Compares each surviving publication with its original.
pub fn preservation_report(before: &Corpus, after: &ShuffleOutcome) -> PreservationReport {
    let index: FxHashMap<&str, &Publication> = before.publications().iter().map(|p| (p.pub_id.as_str(), p)).collect();
    let cat_before = before.catalog();
    let cat_after = after.corpus.catalog();
    let mut hist: FxHashMap<i32, i64> = FxHashMap::default();
    let deltas = after
        .corpus
        .publications()
        .iter()
        .map(|p| {
            let Some(orig) = index.get(p.pub_id.as_str()) else {
                return PubDelta {
                    pub_id: p.pub_id.clone(),
                    ref_count_delta: p.refs.len() as i64,
                    year_histogram_delta: p.refs.len() as u64,
                };
            };
            hist.clear();
            for &r in &orig.refs {
                *hist.entry(cat_before.ref_year(r)).or_default() -= 1;
            }
            for &r in &p.refs {
                *hist.entry(cat_after.ref_year(r)).or_default() += 1;
            }
            PubDelta {
                pub_id: p.pub_id.clone(),
                ref_count_delta: p.refs.len() as i64 - orig.refs.len() as i64,
                year_histogram_delta: hist.values().map(|v| v.unsigned_abs()).sum(),
            }
        })
        .collect();
    PreservationReport {
        deltas,
        publication_delta: before.len() - after.corpus.len(),
        deleted: after.deleted_pubs.len(),
    }
}
