//! TSV ingestion and export of corpora.
//!
//! Three tab-separated files with a header row:
//!
//! * `publications.tsv`: `pub_id, year, journal_id, citations_8yr`
//! * `references.tsv`: `ref_id, year, journal_id, subject`
//! * `citations.tsv`: `pub_id, ref_id`, one row per citation instance

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::corpus::{Background, CatalogBuilder, Corpus, Publication, RawReference, RefIdx};
use crate::error::{Error, Result};

pub const PUBLICATIONS_HEADER: [&str; 4] = ["pub_id", "year", "journal_id", "citations_8yr"];
pub const REFERENCES_HEADER: [&str; 4] = ["ref_id", "year", "journal_id", "subject"];
pub const CITATIONS_HEADER: [&str; 2] = ["pub_id", "ref_id"];

/// How raw journal identifiers are grouped before picking a canonical id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AliasRule {
    /// Every distinct raw id is its own journal.
    Exact,
    /// ISSN-shaped ids (`NNNN-NNNC`) that differ only in the check character
    /// are one journal. Other ids are left alone.
    #[default]
    IssnStem,
}

#[derive(Debug, Clone)]
pub struct IngestConfig {
    /// Publication year to keep. `None` requires all publications to share one year.
    pub slice_year: Option<i32>,
    /// Inclusive range of admissible reference years.
    pub ref_year_range: Option<(i32, i32)>,
    pub background: Background,
    pub alias_rule: AliasRule,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            slice_year: None,
            ref_year_range: None,
            background: Background::Local,
            alias_rule: AliasRule::IssnStem,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropReason {
    FewerThanTwoReferences,
    ReferenceWithoutJournal,
    ReferenceWithoutSubject,
    ReferenceYearOutOfRange,
    PublicationWithoutJournal,
    PublicationOutsideSlice,
    UnresolvedReference,
    UnknownPublication,
    DuplicateCitation,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::FewerThanTwoReferences => "fewer_than_two_references",
            DropReason::ReferenceWithoutJournal => "reference_without_journal",
            DropReason::ReferenceWithoutSubject => "reference_without_subject",
            DropReason::ReferenceYearOutOfRange => "reference_year_out_of_range",
            DropReason::PublicationWithoutJournal => "publication_without_journal",
            DropReason::PublicationOutsideSlice => "publication_outside_slice",
            DropReason::UnresolvedReference => "unresolved_reference",
            DropReason::UnknownPublication => "unknown_publication",
            DropReason::DuplicateCitation => "duplicate_citation",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rows dropped during ingestion, by reason.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestDiagnostics {
    pub dropped: BTreeMap<DropReason, usize>,
    /// Raw journal id -> canonical journal id, for ids that were rewritten.
    pub journal_aliases: BTreeMap<String, String>,
}

impl IngestDiagnostics {
    fn drop(&mut self, reason: DropReason) {
        *self.dropped.entry(reason).or_default() += 1;
    }

    pub fn count(&self, reason: DropReason) -> usize {
        self.dropped.get(&reason).copied().unwrap_or(0)
    }

    pub fn total_dropped(&self) -> usize {
        self.dropped.values().sum()
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub corpus: Corpus,
    pub diagnostics: IngestDiagnostics,
}

struct TsvReader {
    path: PathBuf,
    inner: csv::Reader<File>,
}

impl TsvReader {
    fn open(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut inner = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .quoting(false)
            .flexible(true)
            .has_headers(true)
            .from_reader(file);
        let got = inner.headers()?.clone();
        if got.len() != header.len() || got.iter().zip(header).any(|(g, h)| g.trim() != *h) {
            return Err(Error::malformed(
                path,
                1,
                format!("expected header `{}`", header.join("\t")),
            ));
        }
        Ok(TsvReader {
            path: path.to_owned(),
            inner,
        })
    }

    /// Calls `f(line, fields)` for each data row, checking the column count.
    fn for_each<F>(&mut self, width: usize, mut f: F) -> Result<()>
    where
        F: FnMut(u64, &csv::StringRecord) -> Result<()>,
    {
        let mut record = csv::StringRecord::new();
        loop {
            let more = self.inner.read_record(&mut record).map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                Error::malformed(&self.path, line, e.to_string())
            })?;
            if !more {
                return Ok(());
            }
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() == 1 && record.get(0) == Some("") {
                continue;
            }
            if record.len() != width {
                return Err(Error::malformed(
                    &self.path,
                    line,
                    format!("expected {width} columns, found {}", record.len()),
                ));
            }
            f(line, &record)?;
        }
    }
}

struct RawPub {
    pub_id: String,
    year: i32,
    journal_id: String,
    citations_8yr: u64,
}

fn issn_stem(id: &str) -> Option<&str> {
    let b = id.as_bytes();
    let shaped = b.len() == 9
        && b[4] == b'-'
        && b[..4].iter().all(u8::is_ascii_digit)
        && b[5..8].iter().all(u8::is_ascii_digit)
        && (b[8].is_ascii_digit() || b[8] == b'X' || b[8] == b'x');
    shaped.then(|| &id[..8])
}

/// Maps each raw journal id to its canonical id: within an alias group, the
/// id with the most rows wins, ties broken by the smaller id.
pub fn canonical_journals(counts: &FxHashMap<String, usize>, rule: AliasRule) -> FxHashMap<String, String> {
    let mut groups: BTreeMap<&str, Vec<(&str, usize)>> = BTreeMap::new();
    for (id, &n) in counts {
        let key = match rule {
            AliasRule::Exact => id.as_str(),
            AliasRule::IssnStem => issn_stem(id).unwrap_or(id.as_str()),
        };
        groups.entry(key).or_default().push((id.as_str(), n));
    }
    let mut out = FxHashMap::default();
    for members in groups.values() {
        let canonical = members
            .iter()
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(a.0)))
            .map(|m| m.0)
            .unwrap_or_default();
        for (id, _) in members {
            out.insert((*id).to_owned(), canonical.to_owned());
        }
    }
    out
}

/// Reads and validates a corpus from the three TSV files.
pub fn ingest(pub_file: &Path, ref_file: &Path, cite_file: &Path, config: &IngestConfig) -> Result<Ingested> {
    let mut diag = IngestDiagnostics::default();
    let mut journal_rows: FxHashMap<String, usize> = FxHashMap::default();

    let mut raw_refs = Vec::new();
    let mut ref_ids = FxHashSet::default();
    let mut reader = TsvReader::open(ref_file, &REFERENCES_HEADER)?;
    reader.for_each(4, |line, rec| {
        let ref_id = rec[0].trim();
        if ref_id.is_empty() {
            return Err(Error::malformed(ref_file, line, "empty ref_id"));
        }
        let year: i32 = reader_int(ref_file, line, &rec[1], "year")?;
        if !ref_ids.insert(ref_id.to_owned()) {
            return Err(Error::DuplicateId {
                file: ref_file.to_owned(),
                line,
                kind: "reference",
                id: ref_id.to_owned(),
            });
        }
        let journal_id = rec[2].trim();
        let subject = rec[3].trim();
        if journal_id.is_empty() {
            diag.drop(DropReason::ReferenceWithoutJournal);
            return Ok(());
        }
        if subject.is_empty() {
            diag.drop(DropReason::ReferenceWithoutSubject);
            return Ok(());
        }
        if let Some((lo, hi)) = config.ref_year_range {
            if year < lo || year > hi {
                diag.drop(DropReason::ReferenceYearOutOfRange);
                return Ok(());
            }
        }
        *journal_rows.entry(journal_id.to_owned()).or_default() += 1;
        raw_refs.push(RawReference {
            ref_id: ref_id.to_owned(),
            year,
            journal_id: journal_id.to_owned(),
            subject: subject.to_owned(),
        });
        Ok(())
    })?;

    let mut raw_pubs = Vec::new();
    let mut pub_ids = FxHashSet::default();
    let mut reader = TsvReader::open(pub_file, &PUBLICATIONS_HEADER)?;
    reader.for_each(4, |line, rec| {
        let pub_id = rec[0].trim();
        if pub_id.is_empty() {
            return Err(Error::malformed(pub_file, line, "empty pub_id"));
        }
        let year: i32 = reader_int(pub_file, line, &rec[1], "year")?;
        let citations_8yr: u64 = reader_int(pub_file, line, &rec[3], "citations_8yr")?;
        if !pub_ids.insert(pub_id.to_owned()) {
            return Err(Error::DuplicateId {
                file: pub_file.to_owned(),
                line,
                kind: "publication",
                id: pub_id.to_owned(),
            });
        }
        let journal_id = rec[2].trim();
        if journal_id.is_empty() {
            diag.drop(DropReason::PublicationWithoutJournal);
            return Ok(());
        }
        *journal_rows.entry(journal_id.to_owned()).or_default() += 1;
        raw_pubs.push(RawPub {
            pub_id: pub_id.to_owned(),
            year,
            journal_id: journal_id.to_owned(),
            citations_8yr,
        });
        Ok(())
    })?;

    let slice_year = match config.slice_year {
        Some(y) => y,
        None => {
            let mut years: Vec<i32> = raw_pubs.iter().map(|p| p.year).collect();
            years.sort_unstable();
            years.dedup();
            match years.as_slice() {
                [] => 0,
                [y] => *y,
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "{}: publications span years {}..={}; set a slice year",
                        pub_file.display(),
                        years[0],
                        years[years.len() - 1]
                    )))
                }
            }
        }
    };
    raw_pubs.retain(|p| {
        let keep = p.year == slice_year;
        if !keep {
            diag.drop(DropReason::PublicationOutsideSlice);
        }
        keep
    });

    let canonical = canonical_journals(&journal_rows, config.alias_rule);
    for (raw, canon) in &canonical {
        if raw != canon {
            diag.journal_aliases.insert(raw.clone(), canon.clone());
        }
    }

    let mut builder = CatalogBuilder::new();
    for mut r in raw_refs {
        r.journal_id = canonical[&r.journal_id].clone();
        builder.add_reference(r);
    }
    for p in &mut raw_pubs {
        p.journal_id = canonical[&p.journal_id].clone();
        builder.add_journal(&p.journal_id);
    }
    let catalog = Arc::new(builder.build()?);

    let pub_slot: FxHashMap<&str, usize> = raw_pubs
        .iter()
        .enumerate()
        .map(|(i, p)| (p.pub_id.as_str(), i))
        .collect();
    let mut cited: Vec<Vec<RefIdx>> = vec![Vec::new(); raw_pubs.len()];
    let mut seen: FxHashSet<(usize, RefIdx)> = FxHashSet::default();
    let mut reader = TsvReader::open(cite_file, &CITATIONS_HEADER)?;
    reader.for_each(2, |_, rec| {
        let Some(&slot) = pub_slot.get(rec[0].trim()) else {
            diag.drop(DropReason::UnknownPublication);
            return Ok(());
        };
        let Some(r) = catalog.ref_index(rec[1].trim()) else {
            diag.drop(DropReason::UnresolvedReference);
            return Ok(());
        };
        if !seen.insert((slot, r)) {
            diag.drop(DropReason::DuplicateCitation);
            return Ok(());
        }
        cited[slot].push(r);
        Ok(())
    })?;
    drop(pub_slot);

    let mut publications = Vec::with_capacity(raw_pubs.len());
    for (p, refs) in raw_pubs.into_iter().zip(cited) {
        if refs.len() < 2 {
            diag.drop(DropReason::FewerThanTwoReferences);
            continue;
        }
        publications.push(Publication {
            pub_id: p.pub_id,
            year: p.year,
            journal_id: p.journal_id,
            refs,
            citations_8yr: p.citations_8yr,
        });
    }

    let corpus = Corpus::new(slice_year, config.background, catalog, publications)?;
    Ok(Ingested {
        corpus,
        diagnostics: diag,
    })
}

fn reader_int<T: std::str::FromStr>(file: &Path, line: u64, field: &str, what: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::malformed(file, line, format!("{what} `{field}` is not an integer")))
}

/// Standard file names inside a corpus directory.
#[derive(Debug, Clone)]
pub struct CorpusFiles {
    pub publications: PathBuf,
    pub references: PathBuf,
    pub citations: PathBuf,
}

impl CorpusFiles {
    pub fn in_dir(dir: &Path) -> Self {
        CorpusFiles {
            publications: dir.join("publications.tsv"),
            references: dir.join("references.tsv"),
            citations: dir.join("citations.tsv"),
        }
    }

    pub fn ingest(&self, config: &IngestConfig) -> Result<Ingested> {
        ingest(&self.publications, &self.references, &self.citations, config)
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes `corpus` as the three TSV files. Every catalog reference is
/// written, cited or not.
pub fn export(corpus: &Corpus, files: &CorpusFiles) -> Result<()> {
    let cat = corpus.catalog();

    let mut w = create(&files.publications)?;
    let err = io(&files.publications);
    writeln!(w, "{}", PUBLICATIONS_HEADER.join("\t")).map_err(&err)?;
    for p in corpus.publications() {
        writeln!(w, "{}\t{}\t{}\t{}", p.pub_id, p.year, p.journal_id, p.citations_8yr).map_err(&err)?;
    }
    w.flush().map_err(&err)?;

    let mut w = create(&files.references)?;
    let err = io(&files.references);
    writeln!(w, "{}", REFERENCES_HEADER.join("\t")).map_err(&err)?;
    for r in cat.references() {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            r.ref_id,
            r.year,
            cat.journal_id(r.journal),
            r.subject
        )
        .map_err(&err)?;
    }
    w.flush().map_err(&err)?;

    let mut w = create(&files.citations)?;
    let err = io(&files.citations);
    writeln!(w, "{}", CITATIONS_HEADER.join("\t")).map_err(&err)?;
    for p in corpus.publications() {
        for &r in &p.refs {
            writeln!(w, "{}\t{}", p.pub_id, cat.reference(r).ref_id).map_err(&err)?;
        }
    }
    w.flush().map_err(&err)?;
    Ok(())
}
