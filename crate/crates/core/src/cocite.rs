//! Journal co-citation pairs and their frequencies.

use std::collections::BTreeMap;
use std::fmt;

use rustc_hash::FxHashMap;

use crate::corpus::{Catalog, Corpus, JournalIdx, Publication, RefIdx};
use crate::error::{Error, Result};

/// Canonical unordered pair of journal ids, `a <= b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JournalPair {
    a: String,
    b: String,
}

impl JournalPair {
    pub fn new(x: impl Into<String>, y: impl Into<String>) -> Self {
        let (x, y) = (x.into(), y.into());
        if x <= y {
            JournalPair { a: x, b: y }
        } else {
            JournalPair { a: y, b: x }
        }
    }

    pub fn a(&self) -> &str {
        &self.a
    }

    pub fn b(&self) -> &str {
        &self.b
    }

    pub fn is_self_pair(&self) -> bool {
        self.a == self.b
    }

    pub(crate) fn from_key(catalog: &Catalog, key: PairKey) -> Self {
        let (a, b) = key.split();
        JournalPair {
            a: catalog.journal_id(a).to_owned(),
            b: catalog.journal_id(b).to_owned(),
        }
    }
}

impl fmt::Display for JournalPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

/// Pair of journal indices packed into a `u64`, smaller index high.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct PairKey(u64);

impl PairKey {
    #[inline]
    pub fn new(x: JournalIdx, y: JournalIdx) -> Self {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        PairKey(((a as u64) << 32) | b as u64)
    }

    #[inline]
    pub fn split(self) -> (JournalIdx, JournalIdx) {
        ((self.0 >> 32) as JournalIdx, self.0 as JournalIdx)
    }
}

/// Sparse journal-pair frequency table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JournalPairTable {
    counts: BTreeMap<JournalPair, u64>,
    total_pairs: u64,
}

impl JournalPairTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, pair: JournalPair, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(pair).or_default() += n;
        self.total_pairs += n;
    }

    pub fn get(&self, pair: &JournalPair) -> u64 {
        self.counts.get(pair).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&JournalPair, u64)> {
        self.counts.iter().map(|(p, &n)| (p, n))
    }

    pub fn total_pairs(&self) -> u64 {
        self.total_pairs
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

impl FromIterator<(JournalPair, u64)> for JournalPairTable {
    fn from_iter<I: IntoIterator<Item = (JournalPair, u64)>>(iter: I) -> Self {
        let mut t = JournalPairTable::new();
        for (p, n) in iter {
            t.add(p, n);
        }
        t
    }
}

pub fn pair_count(n_refs: usize) -> u64 {
    let n = n_refs as u64;
    n * n.saturating_sub(1) / 2
}

/// All `n(n-1)/2` journal pairs of a publication's references.
pub fn pub_pairs(publication: &Publication, catalog: &Catalog) -> Result<Vec<JournalPair>> {
    let mut journals = Vec::with_capacity(publication.refs.len());
    for &r in &publication.refs {
        if r as usize >= catalog.n_refs() {
            return Err(Error::UnresolvedJournal(format!("#{r} in {}", publication.pub_id)));
        }
        journals.push(catalog.journal_id(catalog.ref_journal(r)));
    }
    let mut out = Vec::with_capacity(pair_count(journals.len()) as usize);
    for i in 0..journals.len() {
        for j in i + 1..journals.len() {
            out.push(JournalPair::new(journals[i], journals[j]));
        }
    }
    Ok(out)
}

/// Frequency counter over [`PairKey`]s: a dense triangular array when the
/// journal count is small, a hash map otherwise.
#[derive(Debug)]
pub(crate) struct PairCounter {
    store: Store,
    runs: Vec<(JournalIdx, u32)>,
}

#[derive(Debug)]
enum Store {
    Dense { counts: Vec<u32>, touched: Vec<PairKey> },
    Sparse(FxHashMap<PairKey, u32>),
}

/// Largest triangular array (entries) used for dense counting.
const DENSE_LIMIT: usize = 1 << 22;

#[inline]
fn tri(a: JournalIdx, b: JournalIdx) -> usize {
    b as usize * (b as usize + 1) / 2 + a as usize
}

impl PairCounter {
    pub fn for_journals(n_journals: usize) -> Self {
        let cells = n_journals * (n_journals + 1) / 2;
        let store = if cells <= DENSE_LIMIT {
            Store::Dense {
                counts: vec![0; cells],
                touched: Vec::new(),
            }
        } else {
            Store::Sparse(FxHashMap::default())
        };
        PairCounter {
            store,
            runs: Vec::new(),
        }
    }

    #[cfg(test)]
    fn sparse() -> Self {
        PairCounter {
            store: Store::Sparse(FxHashMap::default()),
            runs: Vec::new(),
        }
    }

    #[inline]
    fn add(store: &mut Store, a: JournalIdx, b: JournalIdx, n: u32) {
        debug_assert!(a <= b);
        match store {
            Store::Dense { counts, touched } => {
                let c = &mut counts[tri(a, b)];
                if *c == 0 {
                    touched.push(PairKey::new(a, b));
                }
                *c += n;
            }
            Store::Sparse(map) => {
                *map.entry(PairKey::new(a, b)).or_default() += n;
            }
        }
    }

    /// Counts every pair of `journals`, which is sorted in place.
    #[inline]
    pub fn add_publication(&mut self, journals: &mut [JournalIdx]) {
        journals.sort_unstable();
        // Runs of equal journals: m choose 2 self-pairs, m_a * m_b cross pairs.
        self.runs.clear();
        for &j in journals.iter() {
            match self.runs.last_mut() {
                Some((last, m)) if *last == j => *m += 1,
                _ => self.runs.push((j, 1)),
            }
        }
        for (i, &(a, ma)) in self.runs.iter().enumerate() {
            if ma > 1 {
                Self::add(&mut self.store, a, a, ma * (ma - 1) / 2);
            }
            for &(b, mb) in &self.runs[i + 1..] {
                Self::add(&mut self.store, a, b, ma * mb);
            }
        }
    }

    /// Visits every nonzero count and resets the counter.
    pub fn drain(&mut self, mut f: impl FnMut(PairKey, u32)) {
        match &mut self.store {
            Store::Dense { counts, touched } => {
                for key in touched.drain(..) {
                    let (a, b) = key.split();
                    f(key, std::mem::take(&mut counts[tri(a, b)]));
                }
            }
            Store::Sparse(map) => {
                for (key, n) in map.drain() {
                    f(key, n);
                }
            }
        }
    }
}

pub(crate) fn journals_of(refs: &[RefIdx], catalog: &Catalog, out: &mut Vec<JournalIdx>) {
    out.clear();
    out.extend(refs.iter().map(|&r| catalog.ref_journal(r)));
}

/// Journal-pair frequencies summed over every publication of the corpus.
pub fn observed_frequencies(corpus: &Corpus) -> JournalPairTable {
    let catalog = corpus.catalog();
    let mut counter = PairCounter::for_journals(catalog.n_journals());
    let mut buf = Vec::new();
    for p in corpus.publications() {
        journals_of(&p.refs, catalog, &mut buf);
        counter.add_publication(&mut buf);
    }
    let mut table = JournalPairTable::new();
    counter.drain(|key, n| table.add(JournalPair::from_key(catalog, key), n as u64));
    table
}
