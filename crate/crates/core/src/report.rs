//! CSV and plain-text outputs, and readers for the intermediate tables the
//! CLI chains between subcommands.
//!
//! Floats are written in Rust's shortest round-trip form so that a table
//! read back reproduces the in-memory values exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::File;
use std::path::Path;

use crate::classify::{Category, Classification, PubSummary};
use crate::cocite::{JournalPair, JournalPairTable};
use crate::corpus::CorpusSummary;
use crate::diverge::{CompositionRow, DivergenceResult};
use crate::error::{Error, Result};
use crate::impact::{ChiSquare, HitReport};
use crate::simulate::{PairMoments, PairStats, SimulationResult};

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().from_writer(file))
}

fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().from_reader(file);
    let got = r.headers()?;
    if got.iter().ne(header.iter().copied()) {
        return Err(Error::malformed(
            path,
            1,
            format!("expected header `{}`", header.join(",")),
        ));
    }
    Ok(r)
}

fn parse<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<T> {
    let line = rec.position().map(|p| p.line()).unwrap_or(0);
    let field = rec
        .get(i)
        .ok_or_else(|| Error::malformed(path, line, format!("missing column {}", i + 1)))?;
    field
        .parse()
        .map_err(|_| Error::malformed(path, line, format!("cannot parse `{field}`")))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub const OBSERVED_HEADER: [&str; 3] = ["journal_a", "journal_b", "frequency"];
pub const MOMENTS_HEADER: [&str; 4] = ["journal_a", "journal_b", "f_exp", "sigma"];
pub const PAIR_STATS_HEADER: [&str; 7] = ["journal_a", "journal_b", "f_obs", "f_exp", "sigma", "z", "defined_flag"];
pub const CLASSIFICATION_HEADER: [&str; 6] = ["pub_id", "z_median", "z_p10", "z_p1", "category", "n_defined_pairs"];
pub const HITS_HEADER: [&str; 4] = ["category", "n_articles", "n_hits", "hit_rate"];
pub const KLD_HEADER: [&str; 5] = ["corpus", "year", "background", "kld", "ratio"];
pub const COMPOSITION_HEADER: [&str; 4] = ["subject", "o", "s", "fold"];

pub fn write_observed(path: &Path, table: &JournalPairTable) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(OBSERVED_HEADER)?;
    for (p, n) in table.iter() {
        w.write_record([p.a(), p.b(), &n.to_string()])?;
    }
    finish(w, path)
}

pub fn read_observed(path: &Path) -> Result<JournalPairTable> {
    let mut r = reader(path, &OBSERVED_HEADER)?;
    let mut t = JournalPairTable::new();
    for rec in r.records() {
        let rec = rec?;
        t.add(JournalPair::new(&rec[0], &rec[1]), parse(path, &rec, 2)?);
    }
    Ok(t)
}

pub fn write_moments(path: &Path, sims: &SimulationResult) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(MOMENTS_HEADER)?;
    for (p, m) in &sims.moments {
        w.write_record([p.a(), p.b(), &m.mean.to_string(), &m.sigma.to_string()])?;
    }
    finish(w, path)
}

pub fn read_moments(path: &Path) -> Result<BTreeMap<JournalPair, PairMoments>> {
    let mut r = reader(path, &MOMENTS_HEADER)?;
    let mut out = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        out.insert(
            JournalPair::new(&rec[0], &rec[1]),
            PairMoments {
                mean: parse(path, &rec, 2)?,
                sigma: parse(path, &rec, 3)?,
            },
        );
    }
    Ok(out)
}

pub fn write_pair_stats(path: &Path, stats: &[PairStats]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(PAIR_STATS_HEADER)?;
    for s in stats {
        let z = s.z.map(|z| z.to_string()).unwrap_or_default();
        w.write_record([
            s.pair.a(),
            s.pair.b(),
            &s.f_obs.to_string(),
            &s.f_exp.to_string(),
            &s.sigma.to_string(),
            &z,
            if s.z.is_some() { "1" } else { "0" },
        ])?;
    }
    finish(w, path)
}

pub fn read_pair_stats(path: &Path) -> Result<Vec<PairStats>> {
    let mut r = reader(path, &PAIR_STATS_HEADER)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let defined = &rec[6] == "1";
        out.push(PairStats {
            pair: JournalPair::new(&rec[0], &rec[1]),
            f_obs: parse(path, &rec, 2)?,
            f_exp: parse(path, &rec, 3)?,
            sigma: parse(path, &rec, 4)?,
            z: if defined { Some(parse(path, &rec, 5)?) } else { None },
        });
    }
    Ok(out)
}

/// Splits pair statistics back into the observed table and simulated moments.
pub fn split_pair_stats(stats: &[PairStats]) -> (JournalPairTable, BTreeMap<JournalPair, PairMoments>) {
    let obs = stats.iter().map(|s| (s.pair.clone(), s.f_obs)).collect();
    let sims = stats
        .iter()
        .filter(|s| s.f_exp > 0.0 || s.sigma > 0.0)
        .map(|s| {
            (
                s.pair.clone(),
                PairMoments {
                    mean: s.f_exp,
                    sigma: s.sigma,
                },
            )
        })
        .collect();
    (obs, sims)
}

pub fn write_classification(path: &Path, c: &Classification) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(CLASSIFICATION_HEADER)?;
    for s in &c.summaries {
        w.write_record([
            s.pub_id.as_str(),
            &s.z_median.to_string(),
            &s.z_p10.to_string(),
            &s.z_p1.to_string(),
            s.category.map(Category::as_str).unwrap_or(""),
            &s.n_defined_pairs.to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn read_classification(path: &Path) -> Result<Vec<PubSummary>> {
    let mut r = reader(path, &CLASSIFICATION_HEADER)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let category = if rec[4].is_empty() {
            None
        } else {
            Some(parse(path, &rec, 4)?)
        };
        out.push(PubSummary {
            pub_id: rec[0].to_owned(),
            z_median: parse(path, &rec, 1)?,
            z_p10: parse(path, &rec, 2)?,
            z_p1: parse(path, &rec, 3)?,
            n_defined_pairs: parse(path, &rec, 5)?,
            category,
        });
    }
    Ok(out)
}

pub fn write_hits(path: &Path, report: &HitReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(HITS_HEADER)?;
    for r in &report.rows {
        w.write_record([
            r.category.as_str(),
            &r.n_articles.to_string(),
            &r.n_hits.to_string(),
            &r.hit_rate.to_string(),
        ])?;
    }
    finish(w, path)
}

fn test_block(out: &mut String, name: &str, labels: &[&str], t: &ChiSquare) {
    let _ = writeln!(out, "[{name}]");
    let _ = writeln!(out, "statistic = {}", t.statistic);
    let _ = writeln!(out, "df = {}", t.df);
    let _ = writeln!(out, "p_value = {}", t.p_value);
    let _ = writeln!(out, "valid = {}", t.valid);
    for ((label, e), d) in labels.iter().zip(&t.expected).zip(&t.directions) {
        let _ = writeln!(out, "expected.{label} = {e}");
        let _ = writeln!(out, "direction.{label} = {d}");
    }
    out.push('\n');
}

/// Plain-text block of the chi-square tests.
pub fn format_hit_tests(report: &HitReport, hit_percentile: u32) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "hit_percentile = {hit_percentile}");
    let _ = writeln!(out, "tie_rule = include_all_at_cutoff");
    let _ = writeln!(out, "total_articles = {}", report.total_articles);
    let _ = writeln!(out, "total_hits = {}", report.total_hits);
    out.push('\n');
    test_block(
        &mut out,
        "four_categories",
        &["LNLC", "LNHC", "HNLC", "HNHC"],
        &report.chi2_4cat,
    );
    test_block(&mut out, "novelty", &["LN", "HN"], &report.chi2_novelty);
    test_block(&mut out, "conventionality", &["LC", "HC"], &report.chi2_conventionality);
    out
}

/// 2x2 grid of hit rates: rows novelty, columns conventionality.
pub fn format_hit_grid(report: &HitReport) -> String {
    let cell = |c: Category| {
        let r = report.row(c);
        format!("{:.4} ({}/{})", r.hit_rate, r.n_hits, r.n_articles)
    };
    let mut out = String::new();
    let _ = writeln!(out, "{:<4}{:>24}{:>24}", "", "LC", "HC");
    let _ = writeln!(
        out,
        "{:<4}{:>24}{:>24}",
        "LN",
        cell(Category::Lnlc),
        cell(Category::Lnhc)
    );
    let _ = writeln!(
        out,
        "{:<4}{:>24}{:>24}",
        "HN",
        cell(Category::Hnlc),
        cell(Category::Hnhc)
    );
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KldRow {
    pub corpus: String,
    pub year: i32,
    pub result: DivergenceResult,
    /// kld(global) / kld(local) when both are known.
    pub ratio: Option<f64>,
}

pub fn write_kld(path: &Path, rows: &[KldRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(KLD_HEADER)?;
    for r in rows {
        w.write_record([
            r.corpus.as_str(),
            &r.year.to_string(),
            &r.result.background.to_string(),
            &r.result.kld.to_string(),
            &r.ratio.map(|x| x.to_string()).unwrap_or_default(),
        ])?;
    }
    finish(w, path)
}

pub fn write_composition(path: &Path, rows: &[CompositionRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(COMPOSITION_HEADER)?;
    for r in rows {
        w.write_record([
            r.subject.as_str(),
            &r.o.to_string(),
            &r.s.to_string(),
            &r.fold.to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn write_summary(path: &Path, s: &CorpusSummary) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "unique_publications",
        "unique_references",
        "total_references",
        "tr_ur_ratio",
    ])?;
    w.write_record([
        s.unique_publications.to_string(),
        s.unique_references.to_string(),
        s.total_references.to_string(),
        s.ratio.to_string(),
    ])?;
    finish(w, path)
}

/// Journals appearing in a set of pairs.
pub fn journals_in<'a>(pairs: impl Iterator<Item = &'a JournalPair>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for p in pairs {
        out.insert(p.a().to_owned());
        out.insert(p.b().to_owned());
    }
    out
}
