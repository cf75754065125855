//! Corpus data model: interned journals and references, publications, and
//! year slices.
//!
//! Journals and references are interned into a [`Catalog`] so that hot loops
//! (shuffling, pair counting) work on `u32` indices. Journal indices are
//! assigned in lexicographic order of their identifiers, which makes index
//! order and canonical pair order coincide.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};

pub type JournalIdx = u32;
pub type RefIdx = u32;

/// Substitution pool a corpus represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Background {
    Local,
    Global,
}

impl fmt::Display for Background {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Background::Local => "local",
            Background::Global => "global",
        })
    }
}

impl FromStr for Background {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(Background::Local),
            "global" => Ok(Background::Global),
            other => Err(Error::InvalidConfig(format!(
                "unknown background `{other}` (expected local or global)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceRecord {
    pub ref_id: String,
    pub year: i32,
    pub journal: JournalIdx,
    pub subject: String,
}

/// Interned journals and cited references.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    journals: Vec<String>,
    journal_lookup: FxHashMap<String, JournalIdx>,
    refs: Vec<ReferenceRecord>,
    ref_lookup: FxHashMap<String, RefIdx>,
    // Hot-path projections of `refs`.
    ref_journal: Vec<JournalIdx>,
    ref_year: Vec<i32>,
}

impl Catalog {
    pub fn journals(&self) -> &[String] {
        &self.journals
    }

    pub fn journal_id(&self, idx: JournalIdx) -> &str {
        &self.journals[idx as usize]
    }

    pub fn journal_index(&self, id: &str) -> Option<JournalIdx> {
        self.journal_lookup.get(id).copied()
    }

    pub fn references(&self) -> &[ReferenceRecord] {
        &self.refs
    }

    pub fn reference(&self, idx: RefIdx) -> &ReferenceRecord {
        &self.refs[idx as usize]
    }

    pub fn ref_index(&self, ref_id: &str) -> Option<RefIdx> {
        self.ref_lookup.get(ref_id).copied()
    }

    #[inline]
    pub fn ref_journal(&self, idx: RefIdx) -> JournalIdx {
        self.ref_journal[idx as usize]
    }

    #[inline]
    pub fn ref_year(&self, idx: RefIdx) -> i32 {
        self.ref_year[idx as usize]
    }

    pub fn ref_journals(&self) -> &[JournalIdx] {
        &self.ref_journal
    }

    pub fn n_journals(&self) -> usize {
        self.journals.len()
    }

    pub fn n_refs(&self) -> usize {
        self.refs.len()
    }
}

/// A reference as seen before interning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawReference {
    pub ref_id: String,
    pub year: i32,
    pub journal_id: String,
    pub subject: String,
}

/// Collects journals and references, then interns them.
#[derive(Debug, Default)]
pub struct CatalogBuilder {
    extra_journals: BTreeSet<String>,
    refs: Vec<RawReference>,
    seen: FxHashSet<String>,
}

impl CatalogBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a journal that may not be cited by any reference (for
    /// example the journal a publication appeared in).
    pub fn add_journal(&mut self, journal_id: &str) {
        if !self.extra_journals.contains(journal_id) {
            self.extra_journals.insert(journal_id.to_owned());
        }
    }

    /// Adds a reference. Returns `false` if the ref_id was already present.
    pub fn add_reference(&mut self, raw: RawReference) -> bool {
        if !self.seen.insert(raw.ref_id.clone()) {
            return false;
        }
        self.refs.push(raw);
        true
    }

    pub fn contains_reference(&self, ref_id: &str) -> bool {
        self.seen.contains(ref_id)
    }

    pub fn build(self) -> Result<Catalog> {
        let mut names: BTreeSet<String> = self.extra_journals;
        for r in &self.refs {
            if r.journal_id.is_empty() {
                return Err(Error::UnresolvedJournal(r.ref_id.clone()));
            }
            if !names.contains(&r.journal_id) {
                names.insert(r.journal_id.clone());
            }
        }
        if names.iter().any(String::is_empty) {
            return Err(Error::InvalidCorpus("empty journal id".into()));
        }
        let journals: Vec<String> = names.into_iter().collect();
        let journal_lookup: FxHashMap<String, JournalIdx> = journals
            .iter()
            .enumerate()
            .map(|(i, j)| (j.clone(), i as JournalIdx))
            .collect();

        let mut refs = Vec::with_capacity(self.refs.len());
        let mut ref_lookup = FxHashMap::default();
        for (i, r) in self.refs.into_iter().enumerate() {
            let journal = journal_lookup[&r.journal_id];
            ref_lookup.insert(r.ref_id.clone(), i as RefIdx);
            refs.push(ReferenceRecord {
                ref_id: r.ref_id,
                year: r.year,
                journal,
                subject: r.subject,
            });
        }
        let ref_journal = refs.iter().map(|r| r.journal).collect();
        let ref_year = refs.iter().map(|r| r.year).collect();
        Ok(Catalog {
            journals,
            journal_lookup,
            refs,
            ref_lookup,
            ref_journal,
            ref_year,
        })
    }
}

impl Catalog {
    /// Catalog containing every reference and journal of `self` and `other`.
    /// References of `self` keep their indices; references only in `other`
    /// are appended. Returns the merged catalog and the index mapping for
    /// `other`.
    pub fn merge(&self, other: &Catalog) -> Result<(Catalog, Vec<RefIdx>)> {
        let mut b = CatalogBuilder::new();
        for j in self.journals.iter().chain(other.journals.iter()) {
            b.add_journal(j);
        }
        for r in &self.refs {
            b.add_reference(self.raw(r));
        }
        for r in &other.refs {
            if let Some(&mine) = self.ref_lookup.get(&r.ref_id) {
                let existing = &self.refs[mine as usize];
                if existing.year != r.year || self.journal_id(existing.journal) != other.journal_id(r.journal) {
                    return Err(Error::InvalidCorpus(format!(
                        "reference `{}` differs between corpus and pool",
                        r.ref_id
                    )));
                }
            } else {
                b.add_reference(other.raw(r));
            }
        }
        let merged = b.build()?;
        let mapping = other.refs.iter().map(|r| merged.ref_lookup[&r.ref_id]).collect();
        Ok((merged, mapping))
    }

    fn raw(&self, r: &ReferenceRecord) -> RawReference {
        RawReference {
            ref_id: r.ref_id.clone(),
            year: r.year,
            journal_id: self.journal_id(r.journal).to_owned(),
            subject: r.subject.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Publication {
    pub pub_id: String,
    pub year: i32,
    pub journal_id: String,
    /// Cited references, in citation order, as indices into the corpus catalog.
    pub refs: Vec<RefIdx>,
    /// Citations received in the first 8 years after publication.
    pub citations_8yr: u64,
}

/// One year slice of publications with their cited references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    slice_year: i32,
    background: Background,
    catalog: Arc<Catalog>,
    publications: Vec<Publication>,
}

impl Corpus {
    /// Builds a corpus, checking every structural invariant.
    pub fn new(
        slice_year: i32,
        background: Background,
        catalog: Arc<Catalog>,
        publications: Vec<Publication>,
    ) -> Result<Self> {
        let corpus = Self::new_unchecked(slice_year, background, catalog, publications);
        corpus.validate()?;
        Ok(corpus)
    }

    pub(crate) fn new_unchecked(
        slice_year: i32,
        background: Background,
        catalog: Arc<Catalog>,
        publications: Vec<Publication>,
    ) -> Self {
        Corpus {
            slice_year,
            background,
            catalog,
            publications,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n_refs = self.catalog.n_refs();
        let mut ids = FxHashSet::default();
        let mut seen = FxHashSet::default();
        for p in &self.publications {
            if !ids.insert(p.pub_id.as_str()) {
                return Err(Error::InvalidCorpus(format!("duplicate publication `{}`", p.pub_id)));
            }
            if p.year != self.slice_year {
                return Err(Error::InvalidCorpus(format!(
                    "publication `{}` has year {} outside slice {}",
                    p.pub_id, p.year, self.slice_year
                )));
            }
            if p.refs.len() < 2 {
                return Err(Error::InvalidCorpus(format!(
                    "publication `{}` has fewer than two references",
                    p.pub_id
                )));
            }
            seen.clear();
            for &r in &p.refs {
                if r as usize >= n_refs {
                    return Err(Error::InvalidCorpus(format!(
                        "publication `{}` cites an unknown reference",
                        p.pub_id
                    )));
                }
                if !seen.insert(r) {
                    return Err(Error::InvalidCorpus(format!(
                        "publication `{}` cites `{}` twice",
                        p.pub_id,
                        self.catalog.reference(r).ref_id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn slice_year(&self) -> i32 {
        self.slice_year
    }

    pub fn background(&self) -> Background {
        self.background
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn shared_catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn publications(&self) -> &[Publication] {
        &self.publications
    }

    pub fn len(&self) -> usize {
        self.publications.len()
    }

    pub fn is_empty(&self) -> bool {
        self.publications.is_empty()
    }

    pub fn total_citations(&self) -> usize {
        self.publications.iter().map(|p| p.refs.len()).sum()
    }

    /// Journals of references cited anywhere in the corpus.
    pub fn cited_journals(&self) -> BTreeSet<String> {
        let mut set = FxHashSet::default();
        for p in &self.publications {
            for &r in &p.refs {
                set.insert(self.catalog.ref_journal(r));
            }
        }
        set.into_iter().map(|j| self.catalog.journal_id(j).to_owned()).collect()
    }

    /// Subset of publications sharing this corpus's catalog.
    pub fn subset<F>(&self, background: Background, mut keep: F) -> Corpus
    where
        F: FnMut(&Publication) -> bool,
    {
        Corpus {
            slice_year: self.slice_year,
            background,
            catalog: Arc::clone(&self.catalog),
            publications: self.publications.iter().filter(|p| keep(p)).cloned().collect(),
        }
    }

    pub fn with_background(mut self, background: Background) -> Corpus {
        self.background = background;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusSummary {
    pub unique_publications: usize,
    pub unique_references: usize,
    pub total_references: usize,
    /// total_references / unique_references, or 0 for an empty corpus.
    pub ratio: f64,
}

pub fn summarize(corpus: &Corpus) -> CorpusSummary {
    let mut unique = FxHashSet::default();
    let mut total = 0usize;
    for p in corpus.publications() {
        total += p.refs.len();
        unique.extend(p.refs.iter().copied());
    }
    let ratio = if unique.is_empty() {
        0.0
    } else {
        total as f64 / unique.len() as f64
    };
    CorpusSummary {
        unique_publications: corpus.len(),
        unique_references: unique.len(),
        total_references: total,
        ratio,
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::corpus;
    use super::*;

    #[test]
    fn summary_counts_unique_and_total() {
        let c = corpus(
            2000,
            &[
                ("p1", &[("A", 1990, "J1"), ("B", 1990, "J2")]),
                ("p2", &[("B", 1990, "J2"), ("C", 1991, "J3")]),
            ],
        );
        let s = summarize(&c);
        assert_eq!(s.unique_publications, 2);
        assert_eq!(s.unique_references, 3);
        assert_eq!(s.total_references, 4);
        assert!((s.ratio - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(format!("{:.2}", s.ratio), "1.33");
    }

    #[test]
    fn empty_corpus_summarizes_to_zero() {
        let c = Corpus::new(2000, Background::Local, Arc::new(Catalog::default()), vec![]).unwrap();
        let s = summarize(&c);
        assert_eq!(
            s,
            CorpusSummary {
                unique_publications: 0,
                unique_references: 0,
                total_references: 0,
                ratio: 0.0
            }
        );
    }

    #[test]
    fn journal_indices_follow_lexicographic_order() {
        let c = corpus(2000, &[("p", &[("x", 1, "zeta"), ("y", 1, "alpha"), ("z", 1, "mu")])]);
        let cat = c.catalog();
        let names: Vec<_> = cat.journals().to_vec();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        assert!(cat.journal_index("alpha") < cat.journal_index("mu"));
    }

    #[test]
    fn validation_rejects_duplicate_refs_and_short_lists() {
        let c = corpus(2000, &[("p", &[("a", 1, "J"), ("b", 1, "J")])]);
        let cat = Arc::clone(c.shared_catalog());
        let dup = Publication {
            pub_id: "q".into(),
            year: 2000,
            journal_id: "PUBJ".into(),
            refs: vec![0, 0],
            citations_8yr: 0,
        };
        assert!(Corpus::new(2000, Background::Local, Arc::clone(&cat), vec![dup]).is_err());
        let short = Publication {
            pub_id: "q".into(),
            year: 2000,
            journal_id: "PUBJ".into(),
            refs: vec![0],
            citations_8yr: 0,
        };
        assert!(Corpus::new(2000, Background::Local, cat, vec![short]).is_err());
    }

    #[test]
    fn merge_appends_pool_only_references() {
        let a = corpus(2000, &[("p", &[("a", 1, "J1"), ("b", 1, "J2")])]);
        let b = corpus(2000, &[("q", &[("b", 1, "J2"), ("c", 1, "J3")])]);
        let (m, map) = a.catalog().merge(b.catalog()).unwrap();
        assert_eq!(m.n_refs(), 3);
        assert_eq!(m.ref_index("a"), a.catalog().ref_index("a"));
        assert_eq!(
            m.reference(map[b.catalog().ref_index("c").unwrap() as usize]).ref_id,
            "c"
        );
        assert_eq!(m.journals(), &["J1", "J2", "J3", "PUBJ"]);
    }
}
