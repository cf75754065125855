mod common;

use std::collections::BTreeMap;
use std::io::Write;

use cocite_core::classify::{classify_corpus, summarize_publications, PubSummary};
use cocite_core::cocite::{observed_frequencies, pair_count, JournalPairTable};
use cocite_core::corpus::summarize;
use cocite_core::diverge::{kl_bits, kl_divergence};
use cocite_core::impact::{chi_square_gof, chi_square_sf, hit_report};
use cocite_core::ingest::{ingest, IngestConfig};
use cocite_core::shuffle::{build_groups, preservation_report, repcs_shuffle, umsj_shuffle, DEFAULT_MAX_RETRIES};
use cocite_core::simulate::{simulate_groups, zscores};
use cocite_core::{Category, ClassifyConfig, SimConfig};
use proptest::prelude::*;

fn sim(n: usize, seed: u64, workers: usize) -> SimConfig {
    SimConfig {
        n_simulations: n,
        master_seed: seed,
        workers,
        ..SimConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn total_pairs_is_sum_of_binomials(layout in common::strategy::layout(12, 10)) {
        let corpus = common::corpus(&layout);
        let table = observed_frequencies(&corpus);
        let want: u64 = layout.pubs.iter().map(|p| pair_count(p.len())).sum();
        prop_assert_eq!(table.total_pairs(), want);
        prop_assert_eq!(table.iter().map(|(_, n)| n).sum::<u64>(), want);
        prop_assert_eq!(summarize(&corpus).total_references, layout.pubs.iter().map(Vec::len).sum::<usize>());
    }

    #[test]
    fn table_ignores_publication_and_reference_order(layout in common::strategy::layout(12, 10), rot in 0usize..10) {
        let base = observed_frequencies(&common::corpus(&layout));
        let mut shuffled = layout.clone();
        let k = rot % shuffled.pubs.len();
        shuffled.pubs.rotate_left(k);
        for p in &mut shuffled.pubs {
            p.reverse();
        }
        prop_assert_eq!(observed_frequencies(&common::corpus(&shuffled)), base);
    }

    #[test]
    fn shuffles_preserve_surviving_publications(layout in common::strategy::layout(14, 10), seed in any::<u64>()) {
        let corpus = common::corpus(&layout);
        let set = build_groups(&corpus, &corpus).unwrap();
        for out in [repcs_shuffle(&set, seed), umsj_shuffle(&set, seed, DEFAULT_MAX_RETRIES)] {
            let report = preservation_report(&corpus, &out);
            prop_assert!(report.is_preserved());
            prop_assert_eq!(report.publication_delta, out.deleted_pubs.len());
            prop_assert_eq!(out.corpus.len() + out.deleted_pubs.len(), corpus.len());
        }
        prop_assert_eq!(repcs_shuffle(&set, seed).corpus, repcs_shuffle(&set, seed).corpus);
    }

    #[test]
    fn moments_do_not_depend_on_workers(layout in common::strategy::layout(10, 8), seed in any::<u64>()) {
        let corpus = common::corpus(&layout);
        let set = build_groups(&corpus, &corpus).unwrap();
        let a = simulate_groups(&set, &sim(12, seed, 1)).unwrap();
        let b = simulate_groups(&set, &sim(12, seed, 4)).unwrap();
        prop_assert_eq!(a.moments, b.moments);
        prop_assert_eq!(a.per_simulation, b.per_simulation);
    }

    #[test]
    fn categories_survive_journal_relabeling(layout in common::strategy::layout(12, 12), seed in 0u64..1000) {
        // Reversing the alphabet also reverses the pair orientation.
        let relabel = |j: &str| format!("Z{}", 99 - j[1..].parse::<u32>().unwrap());
        let run = |c: &cocite_core::Corpus| {
            let set = build_groups(c, c).unwrap();
            let sims = simulate_groups(&set, &sim(8, seed, 1)).unwrap();
            let stats = zscores(&observed_frequencies(c), &sims.moments);
            let s = summarize_publications(c, &stats);
            if s.summaries.is_empty() {
                return BTreeMap::new();
            }
            classify_corpus(s.summaries, &ClassifyConfig::default())
                .unwrap()
                .summaries
                .into_iter()
                .map(|x| (x.pub_id, x.category))
                .collect::<BTreeMap<_, _>>()
        };
        let plain = run(&common::corpus(&layout));
        let renamed = run(&common::build(&layout, relabel));
        prop_assert_eq!(plain, renamed);
    }

    #[test]
    fn high_conventionality_fraction_is_about_half(medians in proptest::collection::btree_set(-1_000_000i64..1_000_000, 1..60)) {
        let n = medians.len();
        let summaries: Vec<PubSummary> = medians
            .iter()
            .enumerate()
            .map(|(i, &m)| PubSummary {
                pub_id: format!("p{i}"),
                z_median: m as f64 / 1000.0,
                z_p10: 0.0,
                z_p1: 0.0,
                n_defined_pairs: 1,
                category: None,
            })
            .collect();
        let c = classify_corpus(summaries, &ClassifyConfig::default()).unwrap();
        let hc = c.summaries.iter().filter(|s| s.category.unwrap().high_conventionality()).count();
        let frac = hc as f64 / n as f64;
        prop_assert!(frac <= 0.5 && frac >= 0.5 - 1.0 / n as f64, "{hc}/{n}");
    }

    #[test]
    fn hit_rates_reconstruct_total_hits(cats in proptest::collection::vec((0usize..4, any::<bool>()), 1..200)) {
        let mut summaries = Vec::new();
        let mut hits = std::collections::BTreeSet::new();
        for (i, &(c, hit)) in cats.iter().enumerate() {
            let id = format!("p{i}");
            if hit {
                hits.insert(id.clone());
            }
            summaries.push(PubSummary {
                pub_id: id,
                z_median: 0.0,
                z_p10: 0.0,
                z_p1: 0.0,
                n_defined_pairs: 1,
                category: Some(Category::ALL[c]),
            });
        }
        let r = hit_report(&summaries, &hits).unwrap();
        prop_assert_eq!(r.rows.iter().map(|x| x.n_hits).sum::<u64>(), r.total_hits);
        let recon: u64 = r.rows.iter().map(|x| (x.hit_rate * x.n_articles as f64).round() as u64).sum();
        prop_assert_eq!(recon, hits.len() as u64);
    }

    #[test]
    fn chi_square_is_scale_invariant(base in proptest::collection::vec(1u64..50, 4), frac in proptest::collection::vec(0.0f64..1.0, 4), k in 2u64..6) {
        let hits: Vec<u64> = base.iter().zip(&frac).map(|(&n, f)| (n as f64 * f).floor() as u64).collect();
        let a = chi_square_gof(&hits, &base);
        let scaled: Vec<u64> = base.iter().map(|n| n * k).collect();
        let b = chi_square_gof(&hits, &scaled);
        prop_assert!((a.statistic - b.statistic).abs() <= 1e-9 * a.statistic.max(1.0));
    }

    #[test]
    fn chi_square_sf_at_zero_is_one(df in 1usize..40) {
        prop_assert_eq!(chi_square_sf(0.0, df), 1.0);
    }

    #[test]
    fn kl_of_a_table_with_itself_is_zero(
        counts in proptest::collection::vec(0u64..1000, 1..30),
        eps in prop_oneof![Just(1e-12), 1e-9f64..1.0],
    ) {
        let p: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        prop_assert_eq!(kl_bits(&p, &p, eps), 0.0);

        let table: JournalPairTable = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (cocite_core::JournalPair::new(format!("J{}", i % 6), format!("J{}", i / 6)), c))
            .collect();
        let moments = table
            .iter()
            .map(|(p, n)| (p.clone(), cocite_core::PairMoments { mean: n as f64, sigma: 0.0 }))
            .collect();
        let journals = cocite_core::report::journals_in(table.iter().map(|(p, _)| p));
        if table.total_pairs() > 0 {
            prop_assert_eq!(kl_divergence(&table, &moments, &journals, eps).unwrap().kld, 0.0);
        }
    }

    #[test]
    fn ingested_publications_have_two_distinct_refs(
        rows in proptest::collection::vec((0usize..6, 0usize..10), 0..60),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let pubs = dir.path().join("publications.tsv");
        let refs = dir.path().join("references.tsv");
        let cites = dir.path().join("citations.tsv");
        let mut f = std::fs::File::create(&pubs).unwrap();
        writeln!(f, "pub_id\tyear\tjournal_id\tcitations_8yr").unwrap();
        for p in 0..6 {
            writeln!(f, "p{p}\t2000\tX\t{p}").unwrap();
        }
        let mut f = std::fs::File::create(&refs).unwrap();
        writeln!(f, "ref_id\tyear\tjournal_id\tsubject").unwrap();
        for r in 0..10 {
            writeln!(f, "r{r}\t{}\tJ{}\tS", 1990 + r % 3, r % 4).unwrap();
        }
        let mut f = std::fs::File::create(&cites).unwrap();
        writeln!(f, "pub_id\tref_id").unwrap();
        for (p, r) in &rows {
            writeln!(f, "p{p}\tr{r}").unwrap();
        }
        drop(f);
        let got = ingest(&pubs, &refs, &cites, &IngestConfig::default()).unwrap();
        for p in got.corpus.publications() {
            let mut r = p.refs.clone();
            r.sort_unstable();
            r.dedup();
            prop_assert!(r.len() >= 2 && r.len() == p.refs.len());
        }
        got.corpus.validate().unwrap();
    }
}
