use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use cocite_core::classify::{classify_corpus, summarize_publications, Classification};
use cocite_core::cocite::observed_frequencies;
use cocite_core::config::{load_config_file, RunConfig};
use cocite_core::corpus::summarize;
use cocite_core::diverge::kl_divergence;
use cocite_core::impact::{designate_hits, hit_report};
use cocite_core::ingest::{export, CorpusFiles};
use cocite_core::manifest::Manifest;
use cocite_core::pipeline::{self, load_inputs, Inputs};
use cocite_core::report::{self, KldRow};
use cocite_core::shuffle::build_groups;
use cocite_core::simulate::{simulate_groups, undefined_count, zscores, PairStats};
use cocite_core::synth::{generate, RefsPerPub, SynthConfig};
use cocite_core::{Algorithm, Background, Corpus, JournalPair, PairMoments};

use crate::args::{Command, RunArgs, SynthArgs, SYNTH_KEYS};

/// A subcommand's working state: resolved configuration, output directory
/// and the manifest that will be written beside the outputs.
struct Run {
    cfg: RunConfig,
    extra: BTreeMap<String, String>,
    out: PathBuf,
    manifest: Manifest,
}

impl Run {
    fn start(command: &str, args: &RunArgs, extras: &[(&str, Option<String>)]) -> Result<Run> {
        let resolved = args.resolve(extras)?;
        let out = args.out_dir();
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        let mut manifest = Manifest::new(command, &resolved.config);
        manifest.digest_inputs()?;
        for (k, v) in &resolved.extra {
            manifest.set(k, v);
            let p = Path::new(v);
            if p.is_file() {
                manifest.digest(k, p)?;
            }
        }
        Ok(Run {
            cfg: resolved.config,
            extra: resolved.extra,
            out,
            manifest,
        })
    }

    fn extra_path(&self, key: &str) -> Option<PathBuf> {
        self.extra.get(key).map(PathBuf::from)
    }

    fn load(&mut self) -> Result<Inputs> {
        let t = Instant::now();
        let inputs = load_inputs(&self.cfg)?;
        self.manifest.timing("ingest", t.elapsed());
        record_drops(&mut self.manifest, &inputs);
        Ok(inputs)
    }

    fn file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn finish(self) -> Result<()> {
        self.manifest.write(&self.out)?;
        Ok(())
    }
}

fn record_drops(m: &mut Manifest, inputs: &Inputs) {
    let mut put = |prefix: &str, d: &cocite_core::ingest::IngestDiagnostics| {
        for (reason, n) in &d.dropped {
            m.diag(&format!("{prefix}dropped.{reason}"), n);
        }
        m.diag(&format!("{prefix}journal_aliases"), d.journal_aliases.len());
    };
    put("", &inputs.diagnostics);
    if let Some(d) = &inputs.pool_diagnostics {
        put("pool.", d);
    }
}

fn path_string(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| {
        std::fs::canonicalize(p)
            .unwrap_or_else(|_| p.clone())
            .display()
            .to_string()
    })
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => ingest(&a),
        Command::Summarize(a) => summarize_cmd(&a),
        Command::Observe(a) => observe(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Zscore { run, sim_stats } => zscore(&run, sim_stats),
        Command::Classify { run, pair_stats } => classify(&run, pair_stats),
        Command::Hits { run, classification } => hits(&run, classification),
        Command::Kld { run, compare } => kld(&run, compare),
        Command::Compose(a) => compose(&a),
        Command::Synth(a) => synth(&a),
        Command::Bench {
            run,
            algorithms,
            citations,
        } => bench(&run, algorithms, citations),
        Command::Pipeline(a) => pipeline_cmd(&a),
    }
}

fn ingest(args: &RunArgs) -> Result<()> {
    let mut run = Run::start("ingest", args, &[])?;
    let inputs = run.load()?;
    export(&inputs.corpus, &CorpusFiles::in_dir(&run.out))?;
    if let Some(pool) = &inputs.pool {
        let dir = run.file("pool");
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        export(pool, &CorpusFiles::in_dir(&dir))?;
    }
    println!(
        "ingested {} publications, {} dropped",
        inputs.corpus.len(),
        inputs.diagnostics.total_dropped()
    );
    for (reason, n) in &inputs.diagnostics.dropped {
        println!("  {reason}: {n}");
    }
    run.finish()
}

fn summarize_cmd(args: &RunArgs) -> Result<()> {
    let mut run = Run::start("summarize", args, &[])?;
    let inputs = run.load()?;
    let s = summarize(&inputs.corpus);
    report::write_summary(&run.file(pipeline::SUMMARY_CSV), &s)?;
    println!(
        "publications {}  unique references {}  total references {}  ratio {:.4}",
        s.unique_publications, s.unique_references, s.total_references, s.ratio
    );
    run.finish()
}

fn observe(args: &RunArgs) -> Result<()> {
    let mut run = Run::start("observe", args, &[])?;
    let inputs = run.load()?;
    let t = Instant::now();
    let observed = observed_frequencies(&inputs.corpus);
    report::write_observed(&run.file(pipeline::OBSERVED_CSV), &observed)?;
    run.manifest.timing("observe", t.elapsed());
    println!(
        "{} journal pairs, {} co-citations",
        observed.len(),
        observed.total_pairs()
    );
    run.finish()
}

fn simulate_moments(run: &mut Run, inputs: &Inputs) -> Result<BTreeMap<JournalPair, PairMoments>> {
    let t = Instant::now();
    let set = build_groups(&inputs.corpus, inputs.pool())?;
    let sims = simulate_groups(&set, &run.cfg.sim_config())?;
    report::write_moments(&run.file(pipeline::MOMENTS_CSV), &sims)?;
    run.manifest.timing("simulate", t.elapsed());
    run.manifest.diag("effective_background", set.background());
    run.manifest.diag("deleted_pubs_total", sims.total_deleted());
    run.manifest.diag(
        "deleted_pubs_per_sim",
        sims.per_simulation
            .iter()
            .map(|d| d.deleted_pubs.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    run.manifest.diag("retry_exhausted_total", sims.total_retry_exhausted());
    Ok(sims.moments)
}

fn simulate(args: &RunArgs) -> Result<()> {
    let mut run = Run::start("simulate", args, &[])?;
    let inputs = run.load()?;
    let moments = simulate_moments(&mut run, &inputs)?;
    println!("{} journal pairs over {} simulations", moments.len(), run.cfg.sims);
    run.finish()
}

fn compute_pair_stats(run: &mut Run, inputs: &Inputs) -> Result<Vec<PairStats>> {
    let observed = observed_frequencies(&inputs.corpus);
    report::write_observed(&run.file(pipeline::OBSERVED_CSV), &observed)?;
    let moments = match run.extra_path("sim-stats") {
        Some(p) => report::read_moments(&p)?,
        None => simulate_moments(run, inputs)?,
    };
    let stats = zscores(&observed, &moments);
    report::write_pair_stats(&run.file(pipeline::PAIR_STATS_CSV), &stats)?;
    run.manifest.diag("sigma_zero_pairs", undefined_count(&stats));
    Ok(stats)
}

fn zscore(args: &RunArgs, sim_stats: Option<PathBuf>) -> Result<()> {
    let mut run = Run::start("zscore", args, &[("sim-stats", path_string(&sim_stats))])?;
    let inputs = run.load()?;
    let stats = compute_pair_stats(&mut run, &inputs)?;
    println!("{} pairs, {} with sigma = 0", stats.len(), undefined_count(&stats));
    run.finish()
}

fn compute_classification(run: &mut Run, inputs: &Inputs) -> Result<Classification> {
    let stats = match run.extra_path("pair-stats") {
        Some(p) => report::read_pair_stats(&p)?,
        None => compute_pair_stats(run, inputs)?,
    };
    let summaries = summarize_publications(&inputs.corpus, &stats);
    run.manifest.diag("excluded_pubs", summaries.excluded.len());
    let c = classify_corpus(summaries.summaries, &run.cfg.classify_config()?)?;
    report::write_classification(&run.file(pipeline::CLASSIFICATION_CSV), &c)?;
    run.manifest.diag("conventionality_threshold", c.threshold);
    Ok(c)
}

fn classify(args: &RunArgs, pair_stats: Option<PathBuf>) -> Result<()> {
    let mut run = Run::start("classify", args, &[("pair-stats", path_string(&pair_stats))])?;
    let inputs = run.load()?;
    let c = compute_classification(&mut run, &inputs)?;
    println!(
        "{} publications classified, threshold {}",
        c.summaries.len(),
        c.threshold
    );
    run.finish()
}

fn hits(args: &RunArgs, classification: Option<PathBuf>) -> Result<()> {
    let mut run = Run::start("hits", args, &[("classification", path_string(&classification))])?;
    let inputs = run.load()?;
    let summaries = match run.extra_path("classification") {
        Some(p) => report::read_classification(&p)?,
        None => compute_classification(&mut run, &inputs)?.summaries,
    };
    let hit_cfg = run.cfg.hit_config()?;
    let ids = designate_hits(inputs.corpus.publications(), &hit_cfg)?;
    let rep = hit_report(&summaries, &ids)?;
    report::write_hits(&run.file(pipeline::HITS_CSV), &rep)?;
    report::write_text(
        &run.file(pipeline::HIT_TESTS_TXT),
        &report::format_hit_tests(&rep, hit_cfg.percentile()),
    )?;
    print!("{}", report::format_hit_grid(&rep));
    run.finish()
}

fn kld_row(cfg: &RunConfig, corpus: &Corpus, pool: &Corpus, background: Background) -> Result<KldRow> {
    let set = build_groups(corpus, pool)?;
    if set.background() != background {
        bail!("the pool adds no publications outside the corpus; a global background needs a larger pool");
    }
    let sims = simulate_groups(&set, &cfg.sim_config())?;
    let observed = observed_frequencies(corpus);
    let mut result = kl_divergence(&observed, &sims.moments, &corpus.cited_journals(), cfg.epsilon)?;
    result.corpus_tag = cfg.tag.clone();
    result.background = background;
    Ok(KldRow {
        corpus: cfg.tag.clone(),
        year: corpus.slice_year(),
        result,
        ratio: None,
    })
}

fn kld(args: &RunArgs, compare: bool) -> Result<()> {
    let extras = [("compare", compare.then(|| "true".to_owned()))];
    let mut run = Run::start("kld", args, &extras)?;
    let compare = match run.extra.get("compare").map(String::as_str) {
        None | Some("false") => false,
        Some("true") => true,
        Some(v) => bail!("invalid value `{v}` for `compare`"),
    };
    if compare {
        run.cfg.background = Background::Global;
    }
    let inputs = run.load()?;
    let t = Instant::now();
    let rows = if compare {
        let local = kld_row(&run.cfg, &inputs.corpus, &inputs.corpus, Background::Local)?;
        let mut global = kld_row(&run.cfg, &inputs.corpus, inputs.pool(), Background::Global)?;
        global.ratio = Some(global.result.kld / local.result.kld);
        vec![local, global]
    } else {
        vec![kld_row(&run.cfg, &inputs.corpus, inputs.pool(), run.cfg.background)?]
    };
    run.manifest.timing("kld", t.elapsed());
    report::write_kld(&run.file(pipeline::KLD_CSV), &rows)?;
    for r in &rows {
        match r.ratio {
            Some(x) => println!("{:<8}{:.6} bits  ratio {x:.3}", r.result.background.to_string(), r.result.kld),
            None => println!("{:<8}{:.6} bits", r.result.background.to_string(), r.result.kld),
        }
    }
    run.finish()
}

fn compose(args: &RunArgs) -> Result<()> {
    let mut run = Run::start("compose", args, &[])?;
    let inputs = run.load()?;
    let set = build_groups(&inputs.corpus, inputs.pool())?;
    let rows = pipeline::composition(&set, &run.cfg);
    report::write_composition(&run.file(pipeline::COMPOSITION_CSV), &rows)?;
    for r in &rows {
        println!("{:<24}{:>10}{:>10}{:>8}", r.subject, r.o, r.s, r.fold);
    }
    run.finish()
}

fn pipeline_cmd(args: &RunArgs) -> Result<()> {
    let mut run = Run::start("pipeline", args, &[])?;
    let t = Instant::now();
    let inputs = load_inputs(&run.cfg)?;
    run.manifest.timing("ingest", t.elapsed());
    let out = pipeline::run_on(&inputs, &run.cfg, &run.out, &mut run.manifest)?;
    print!("{}", report::format_hit_grid(&out.hits));
    println!("kld {} ({})", out.divergence.kld, out.divergence.background);
    Ok(())
}

fn synth_config(kv: &BTreeMap<String, String>) -> Result<SynthConfig> {
    fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
        v.parse().map_err(|_| anyhow::anyhow!("invalid value `{v}` for `{k}`"))
    }
    let mut c = SynthConfig::default();
    let mut rp = RefsPerPub::default();
    for (k, v) in kv {
        match k.as_str() {
            "seed" => c.seed = num(k, v)?,
            "disciplines" => c.n_disciplines = num(k, v)?,
            "journals-per-discipline" => c.journals_per_discipline = num(k, v)?,
            "pubs-per-discipline" => c.pubs_per_discipline = num(k, v)?,
            "ref-pool" => c.ref_pool_per_discipline = num(k, v)?,
            "refs-mean" => rp.mean = num(k, v)?,
            "refs-dispersion" => rp.dispersion = num(k, v)?,
            "refs-min" => rp.min = num(k, v)?,
            "refs-max" => rp.max = num(k, v)?,
            "p-intra" => c.p_intra = num(k, v)?,
            "skew" => c.skew = num(k, v)?,
            "slice-year" => c.slice_year = num(k, v)?,
            "ref-year-span" => c.ref_year_span = num(k, v)?,
            "scale" => {
                c.discipline_scale = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| num(k, s.trim()))
                    .collect::<Result<_>>()?
            }
            "citations-mu" => c.citations_mu = num(k, v)?,
            "citations-sigma" => c.citations_sigma = num(k, v)?,
            _ => {}
        }
    }
    c.refs_per_pub = rp;
    Ok(c)
}

fn synth_entries(c: &SynthConfig) -> Vec<(String, String)> {
    let scale = c
        .discipline_scale
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(",");
    let values = [
        c.seed.to_string(),
        c.n_disciplines.to_string(),
        c.journals_per_discipline.to_string(),
        c.pubs_per_discipline.to_string(),
        c.ref_pool_per_discipline.to_string(),
        c.refs_per_pub.mean.to_string(),
        c.refs_per_pub.dispersion.to_string(),
        c.refs_per_pub.min.to_string(),
        c.refs_per_pub.max.to_string(),
        c.p_intra.to_string(),
        c.skew.to_string(),
        c.slice_year.to_string(),
        c.ref_year_span.to_string(),
        scale,
        c.citations_mu.to_string(),
        c.citations_sigma.to_string(),
    ];
    SYNTH_KEYS.iter().map(|k| (*k).to_owned()).zip(values).collect()
}

fn synth(args: &SynthArgs) -> Result<()> {
    let mut kv = match &args.config {
        Some(p) => load_config_file(p)?,
        None => BTreeMap::new(),
    };
    kv.retain(|k, _| {
        !(k == "command"
            || ["tool.", "digest.", "timing.", "diag."]
                .iter()
                .any(|p| k.starts_with(p)))
    });
    if let Some(k) = kv.keys().find(|k| !SYNTH_KEYS.contains(&k.as_str())) {
        bail!(cocite_core::Error::InvalidConfig(format!(
            "unknown synth configuration key `{k}`"
        )));
    }
    kv.extend(args.flag_kv());
    let cfg = synth_config(&kv)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(crate::args::DEFAULT_OUT));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let mut manifest = Manifest::with_entries("synth", synth_entries(&cfg));
    let t = Instant::now();
    let s = generate(&cfg)?;
    manifest.timing("generate", t.elapsed());
    export(&s.corpus, &CorpusFiles::in_dir(&out))?;
    for (label, d) in s.labels().iter().zip(&s.disciplines) {
        let dir = out.join(label);
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        export(d, &CorpusFiles::in_dir(&dir))?;
        manifest.diag(&format!("publications.{label}"), d.len());
    }
    manifest.diag("publications", s.corpus.len());
    manifest.diag("citations", s.corpus.total_citations());
    manifest.write(&out)?;
    println!(
        "{} publications, {} citations, {} disciplines in {}",
        s.corpus.len(),
        s.corpus.total_citations(),
        s.disciplines.len(),
        out.display()
    );
    Ok(())
}

pub const DEFAULT_BENCH_CITATIONS: usize = 100_000;

fn bench(args: &RunArgs, algorithms: Vec<Algorithm>, citations: Option<usize>) -> Result<()> {
    let algs = (!algorithms.is_empty()).then(|| {
        algorithms
            .iter()
            .map(Algorithm::to_string)
            .collect::<Vec<_>>()
            .join(",")
    });
    let extras = [("algorithms", algs), ("citations", citations.map(|c| c.to_string()))];
    let mut run = Run::start("bench", args, &extras)?;
    let algorithms: Vec<Algorithm> = match run.extra.get("algorithms") {
        Some(v) => v.split(',').map(str::parse).collect::<Result<_, _>>()?,
        None => vec![Algorithm::Repcs, Algorithm::Umsj],
    };
    let (corpus, pool) = if run.cfg.inputs.is_empty() {
        let target: usize = match run.extra.get("citations") {
            Some(v) => v
                .parse()
                .with_context(|| format!("invalid value `{v}` for `citations`"))?,
            None => DEFAULT_BENCH_CITATIONS,
        };
        let cfg = SynthConfig {
            seed: run.cfg.seed,
            pubs_per_discipline: (target / (3 * 20)).max(1),
            ..SynthConfig::default()
        };
        let s = generate(&cfg)?;
        let corpus = s.corpus.with_background(Background::Local);
        (corpus, None)
    } else {
        let inputs = run.load()?;
        (inputs.corpus, inputs.pool)
    };
    let set = build_groups(&corpus, pool.as_ref().unwrap_or(&corpus))?;
    let n_cites = corpus.total_citations();

    let mut table = csv::Writer::from_path(run.file("bench.csv"))?;
    table.write_record([
        "algorithm",
        "sims",
        "workers",
        "citations",
        "seconds",
        "ms_per_sim",
        "deleted_pubs",
        "retry_exhausted",
    ])?;
    println!(
        "{:<8}{:>8}{:>10}{:>12}{:>12}{:>14}",
        "alg", "sims", "citations", "seconds", "ms/sim", "deleted/sim"
    );
    let mut secs = Vec::new();
    for alg in &algorithms {
        let mut cfg = run.cfg.sim_config();
        cfg.algorithm = *alg;
        let t = Instant::now();
        let sims = simulate_groups(&set, &cfg)?;
        let elapsed = t.elapsed();
        run.manifest.timing(&format!("bench.{alg}"), elapsed);
        let s = elapsed.as_secs_f64();
        let per = 1000.0 * s / cfg.n_simulations as f64;
        let deleted = sims.total_deleted() as f64 / cfg.n_simulations as f64;
        println!(
            "{:<8}{:>8}{:>10}{:>12.3}{:>12.2}{:>14.1}",
            alg.to_string(),
            cfg.n_simulations,
            n_cites,
            s,
            per,
            deleted
        );
        table.write_record([
            alg.to_string(),
            cfg.n_simulations.to_string(),
            cfg.workers.to_string(),
            n_cites.to_string(),
            s.to_string(),
            per.to_string(),
            sims.total_deleted().to_string(),
            sims.total_retry_exhausted().to_string(),
        ])?;
        secs.push((*alg, s));
    }
    table.flush()?;
    if let (Some(r), Some(u)) = (
        secs.iter().find(|(a, _)| *a == Algorithm::Repcs),
        secs.iter().find(|(a, _)| *a == Algorithm::Umsj),
    ) {
        println!("umsj / repcs wall-time ratio: {:.2}", u.1 / r.1);
    }
    run.finish()
}
