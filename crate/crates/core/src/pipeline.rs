//! End-to-end run: ingest, observe, simulate, score, classify, hits,
//! divergence and composition, with every output written to one directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::classify::{classify_corpus, summarize_publications, Classification};
use crate::cocite::{observed_frequencies, JournalPairTable};
use crate::config::RunConfig;
use crate::corpus::{summarize, Background, Corpus};
use crate::diverge::{composition_fold, kl_divergence, CompositionRow, DivergenceResult, Stage};
use crate::error::{Error, Result};
use crate::impact::{designate_hits, hit_report, HitReport};
use crate::ingest::{IngestDiagnostics, Ingested};
use crate::manifest::Manifest;
use crate::report;
use crate::rng::auxiliary_seed;
use crate::shuffle::{build_groups, shuffle, GroupSet};
use crate::simulate::{simulate_groups, undefined_count, zscores, PairStats, SimulationResult};

pub const SUMMARY_CSV: &str = "summary.csv";
pub const OBSERVED_CSV: &str = "observed.csv";
pub const MOMENTS_CSV: &str = "sim_stats.csv";
pub const PAIR_STATS_CSV: &str = "pair_stats.csv";
pub const CLASSIFICATION_CSV: &str = "classification.csv";
pub const HITS_CSV: &str = "hits.csv";
pub const HIT_TESTS_TXT: &str = "hit_tests.txt";
pub const KLD_CSV: &str = "kld.csv";
pub const COMPOSITION_CSV: &str = "composition.csv";

/// Every CSV the pipeline writes, in write order.
pub const PIPELINE_CSVS: [&str; 8] = [
    SUMMARY_CSV,
    OBSERVED_CSV,
    PAIR_STATS_CSV,
    CLASSIFICATION_CSV,
    HITS_CSV,
    KLD_CSV,
    COMPOSITION_CSV,
    MOMENTS_CSV,
];

/// Analyzed corpus and substitution pool of a run.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub corpus: Corpus,
    pub pool: Option<Corpus>,
    pub diagnostics: IngestDiagnostics,
    pub pool_diagnostics: Option<IngestDiagnostics>,
}

impl Inputs {
    /// The substitution pool: the corpus itself for a local background.
    pub fn pool(&self) -> &Corpus {
        self.pool.as_ref().unwrap_or(&self.corpus)
    }
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let files = cfg.inputs.resolve("the analyzed corpus")?;
    let Ingested { corpus, diagnostics } = files.ingest(&cfg.ingest_config(Background::Local))?;
    let (pool, pool_diagnostics) = match cfg.background {
        Background::Local => (None, None),
        Background::Global => {
            if cfg.pool.is_empty() {
                return Err(Error::InvalidConfig(
                    "a global background needs --pool-pubs, --pool-refs and --pool-cites".into(),
                ));
            }
            let files = cfg.pool.resolve("the global pool")?;
            let mut ic = cfg.ingest_config(Background::Global);
            ic.slice_year = Some(corpus.slice_year());
            let got = files.ingest(&ic)?;
            (Some(got.corpus), Some(got.diagnostics))
        }
    };
    Ok(Inputs {
        corpus,
        pool,
        diagnostics,
        pool_diagnostics,
    })
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub observed: JournalPairTable,
    pub simulations: SimulationResult,
    pub pair_stats: Vec<PairStats>,
    pub classification: Classification,
    pub excluded_pubs: Vec<String>,
    pub hits: HitReport,
    pub divergence: DivergenceResult,
    pub composition: Vec<CompositionRow>,
    pub out_dir: PathBuf,
}

/// Single shuffle under the run's algorithm, for composition diagnostics.
pub fn composition(set: &GroupSet, cfg: &RunConfig) -> Vec<CompositionRow> {
    let outcome = shuffle(set, cfg.algorithm, auxiliary_seed(cfg.seed, 0), cfg.max_retries);
    composition_fold(set.corpus(), &outcome, &Default::default(), Stage::BeforeCorrection)
}

fn record_ingest(m: &mut Manifest, prefix: &str, d: &IngestDiagnostics) {
    for (reason, n) in &d.dropped {
        m.diag(&format!("{prefix}dropped.{reason}"), n);
    }
    m.diag(&format!("{prefix}journal_aliases"), d.journal_aliases.len());
}

/// Runs the whole chain on already-loaded inputs.
pub fn run_on(inputs: &Inputs, cfg: &RunConfig, out: &Path, manifest: &mut Manifest) -> Result<PipelineOutput> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let corpus = &inputs.corpus;
    record_ingest(manifest, "", &inputs.diagnostics);
    if let Some(d) = &inputs.pool_diagnostics {
        record_ingest(manifest, "pool.", d);
    }
    let classify_cfg = cfg.classify_config()?;
    let hit_cfg = cfg.hit_config()?;

    let t = Instant::now();
    report::write_summary(&out.join(SUMMARY_CSV), &summarize(corpus))?;
    let observed = observed_frequencies(corpus);
    report::write_observed(&out.join(OBSERVED_CSV), &observed)?;
    manifest.timing("observe", t.elapsed());

    let t = Instant::now();
    let set = build_groups(corpus, inputs.pool())?;
    let simulations = simulate_groups(&set, &cfg.sim_config())?;
    report::write_moments(&out.join(MOMENTS_CSV), &simulations)?;
    manifest.timing("simulate", t.elapsed());
    manifest.diag("effective_background", set.background());
    manifest.diag("deleted_pubs_total", simulations.total_deleted());
    manifest.diag(
        "deleted_pubs_per_sim",
        simulations
            .per_simulation
            .iter()
            .map(|d| d.deleted_pubs.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    manifest.diag("retry_exhausted_total", simulations.total_retry_exhausted());

    let t = Instant::now();
    let pair_stats = zscores(&observed, &simulations.moments);
    report::write_pair_stats(&out.join(PAIR_STATS_CSV), &pair_stats)?;
    manifest.diag("sigma_zero_pairs", undefined_count(&pair_stats));
    manifest.timing("zscore", t.elapsed());

    let t = Instant::now();
    let summaries = summarize_publications(corpus, &pair_stats);
    manifest.diag("excluded_pubs", summaries.excluded.len());
    let classification = classify_corpus(summaries.summaries, &classify_cfg)?;
    report::write_classification(&out.join(CLASSIFICATION_CSV), &classification)?;
    manifest.diag("conventionality_threshold", classification.threshold);
    manifest.timing("classify", t.elapsed());

    let t = Instant::now();
    let hit_ids = designate_hits(corpus.publications(), &hit_cfg)?;
    let hits = hit_report(&classification.summaries, &hit_ids)?;
    report::write_hits(&out.join(HITS_CSV), &hits)?;
    report::write_text(
        &out.join(HIT_TESTS_TXT),
        &report::format_hit_tests(&hits, hit_cfg.percentile()),
    )?;
    manifest.timing("hits", t.elapsed());

    let t = Instant::now();
    let mut divergence = kl_divergence(&observed, &simulations.moments, &corpus.cited_journals(), cfg.epsilon)?;
    divergence.corpus_tag = cfg.tag.clone();
    divergence.background = set.background();
    report::write_kld(
        &out.join(KLD_CSV),
        &[report::KldRow {
            corpus: cfg.tag.clone(),
            year: corpus.slice_year(),
            result: divergence.clone(),
            ratio: None,
        }],
    )?;
    let composition = composition(&set, cfg);
    report::write_composition(&out.join(COMPOSITION_CSV), &composition)?;
    manifest.timing("diagnostics", t.elapsed());

    manifest.write(out)?;
    Ok(PipelineOutput {
        observed,
        simulations,
        pair_stats,
        classification,
        excluded_pubs: summaries.excluded,
        hits,
        divergence,
        composition,
        out_dir: out.to_owned(),
    })
}

/// Loads inputs named in `cfg` and runs the whole chain into `out`.
pub fn run_pipeline(cfg: &RunConfig, out: &Path) -> Result<PipelineOutput> {
    let mut manifest = Manifest::new("pipeline", cfg);
    manifest.digest_inputs()?;
    let t = Instant::now();
    let inputs = load_inputs(cfg)?;
    manifest.timing("ingest", t.elapsed());
    run_on(&inputs, cfg, out, &mut manifest)
}
