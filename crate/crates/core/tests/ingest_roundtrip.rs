use cocite_core::corpus::summarize;
use cocite_core::ingest::{export, CorpusFiles, IngestConfig};
use cocite_core::synth::{generate, SynthConfig};
use cocite_core::Corpus;

fn by_ids(c: &Corpus) -> Vec<(String, i32, String, Vec<String>, u64)> {
    let cat = c.catalog();
    c.publications()
        .iter()
        .map(|p| {
            (
                p.pub_id.clone(),
                p.year,
                p.journal_id.clone(),
                p.refs.iter().map(|&r| cat.reference(r).ref_id.clone()).collect(),
                p.citations_8yr,
            )
        })
        .collect()
}

#[test]
fn thousand_publications_round_trip() {
    let s = generate(&SynthConfig {
        pubs_per_discipline: 334,
        ref_pool_per_discipline: 2000,
        seed: 4,
        ..SynthConfig::default()
    })
    .unwrap();
    assert!(s.corpus.len() >= 1000);

    let dir = tempfile::tempdir().unwrap();
    let first = CorpusFiles::in_dir(dir.path());
    export(&s.corpus, &first).unwrap();
    let cfg = IngestConfig::default();
    let got = first.ingest(&cfg).unwrap();
    assert_eq!(got.diagnostics.total_dropped(), 0, "{:?}", got.diagnostics.dropped);
    assert_eq!(by_ids(&got.corpus), by_ids(&s.corpus));
    assert_eq!(got.corpus.catalog().references(), s.corpus.catalog().references());
    assert_eq!(got.corpus.catalog().journals(), s.corpus.catalog().journals());

    let again_dir = dir.path().join("again");
    std::fs::create_dir_all(&again_dir).unwrap();
    let second = CorpusFiles::in_dir(&again_dir);
    export(&got.corpus, &second).unwrap();
    let again = second.ingest(&cfg).unwrap();
    assert_eq!(again.corpus, got.corpus);
    for (a, b) in [
        (&first.publications, &second.publications),
        (&first.references, &second.references),
        (&first.citations, &second.citations),
    ] {
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    let total: usize = got.corpus.publications().iter().map(|p| p.refs.len()).sum();
    assert_eq!(summarize(&got.corpus).total_references, total);
}

#[test]
fn every_discipline_sub_corpus_ingests_cleanly() {
    let s = generate(&SynthConfig {
        pubs_per_discipline: 100,
        ref_pool_per_discipline: 500,
        discipline_scale: vec![1.0, 0.5, 0.05],
        seed: 8,
        ..SynthConfig::default()
    })
    .unwrap();
    for d in &s.disciplines {
        let dir = tempfile::tempdir().unwrap();
        let files = CorpusFiles::in_dir(dir.path());
        export(d, &files).unwrap();
        let got = files.ingest(&IngestConfig::default()).unwrap();
        assert_eq!(got.diagnostics.total_dropped(), 0);
        assert_eq!(by_ids(&got.corpus), by_ids(d));
    }
}
