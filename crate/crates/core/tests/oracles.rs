mod common;

use std::collections::BTreeMap;

use cocite_core::cocite::{observed_frequencies, JournalPair};
use cocite_core::rng::simulation_seed;
use cocite_core::shuffle::{build_groups, repcs_shuffle, umsj_shuffle, DEFAULT_MAX_RETRIES};
use cocite_core::simulate::{sign_change_report, simulate_groups, zscores, PairStats};
use cocite_core::synth::{generate, SynthConfig};
use cocite_core::{Algorithm, Background, Corpus, GroupSet, Publication, SimConfig};
use common::Layout;

fn brute_force(pubs: &[Publication], corpus: &Corpus) -> BTreeMap<JournalPair, u64> {
    let cat = corpus.catalog();
    let mut m = BTreeMap::new();
    for p in pubs {
        for i in 0..p.refs.len() {
            for j in 0..p.refs.len() {
                if i < j {
                    let a = cat.journal_id(cat.ref_journal(p.refs[i]));
                    let b = cat.journal_id(cat.ref_journal(p.refs[j]));
                    *m.entry(JournalPair::new(a, b)).or_insert(0) += 1;
                }
            }
        }
    }
    m
}

fn small_synth(seed: u64) -> Corpus {
    generate(&SynthConfig {
        pubs_per_discipline: 34,
        ref_pool_per_discipline: 300,
        journals_per_discipline: 6,
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
    .corpus
    .with_background(Background::Local)
}

#[test]
fn observed_table_matches_double_loop() {
    let corpus = small_synth(1);
    assert!(corpus.len() >= 100);
    let table = observed_frequencies(&corpus);
    let oracle = brute_force(corpus.publications(), &corpus);
    let got: BTreeMap<JournalPair, u64> = table.iter().map(|(p, n)| (p.clone(), n)).collect();
    assert_eq!(got, oracle);
}

#[test]
fn three_slot_group_permutes_uniformly() {
    // r0..r2 share 1990 and are each cited once; r3..r5 sit alone in later years.
    let corpus = common::corpus(&Layout {
        years: vec![0, 0, 0, 1, 2, 3],
        journals: vec![0, 1, 2, 3, 3, 3],
        pubs: vec![vec![0, 3], vec![1, 4], vec![2, 5]],
    });
    let set = build_groups(&corpus, &corpus).unwrap();
    let trials = 10_000;
    let mut seen: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    for seed in 0..trials {
        let out = repcs_shuffle(&set, seed);
        assert!(out.deleted_pubs.is_empty());
        let cat = set.catalog();
        let first: Vec<String> = out
            .corpus
            .publications()
            .iter()
            .map(|p| cat.reference(p.refs[0]).ref_id.clone())
            .collect();
        *seen.entry(first).or_default() += 1;
    }
    assert_eq!(seen.len(), 6);
    for (perm, n) in &seen {
        let f = *n as f64 / trials as f64;
        assert!((f - 1.0 / 6.0).abs() < 0.02, "{perm:?}: {f}");
    }
}

fn year_multisets<'a>(set: &GroupSet, pubs: impl Iterator<Item = &'a Publication>) -> BTreeMap<(i32, u32), usize> {
    let cat = set.catalog();
    let mut m = BTreeMap::new();
    for p in pubs {
        for &r in &p.refs {
            *m.entry((cat.ref_year(r), r)).or_default() += 1;
        }
    }
    m
}

#[test]
fn both_algorithms_keep_group_multisets() {
    let corpus = generate(&SynthConfig {
        pubs_per_discipline: 167,
        seed: 2,
        ..SynthConfig::default()
    })
    .unwrap()
    .corpus
    .with_background(Background::Local);
    assert!(corpus.total_citations() >= 10_000);
    let set = build_groups(&corpus, &corpus).unwrap();
    let original = year_multisets(&set, corpus.publications().iter());
    for seed in 0..5 {
        let r = repcs_shuffle(&set, seed);
        assert_eq!(year_multisets(&set, r.assigned_publications()), original);
        let u = umsj_shuffle(&set, seed, DEFAULT_MAX_RETRIES);
        assert_eq!(year_multisets(&set, u.assigned_publications()), original);
        assert!(u.deleted_pubs.is_empty(), "umsj rejects duplicate-creating swaps");
    }
}

#[test]
fn global_shuffle_draws_from_pool_multiset() {
    let s = generate(&SynthConfig {
        pubs_per_discipline: 60,
        ref_pool_per_discipline: 400,
        seed: 3,
        ..SynthConfig::default()
    })
    .unwrap();
    let d0 = &s.disciplines[0];
    let set = build_groups(d0, &s.corpus).unwrap();
    assert_eq!(set.background(), Background::Global);
    let pool = year_multisets(&set, s.corpus.publications().iter());
    for seed in 0..5 {
        for out in [repcs_shuffle(&set, seed), umsj_shuffle(&set, seed, DEFAULT_MAX_RETRIES)] {
            let got = year_multisets(&set, out.assigned_publications());
            assert!(got.iter().all(|(k, n)| pool.get(k).is_some_and(|m| m >= n)));
        }
    }
}

/// Two-pass moments over stored per-simulation tables.
fn naive_moments(set: &GroupSet, alg: Algorithm, master: u64, n: usize) -> BTreeMap<JournalPair, (f64, f64)> {
    let corpus = set.corpus();
    let tables: Vec<BTreeMap<JournalPair, u64>> = (0..n)
        .map(|i| {
            let seed = simulation_seed(master, i as u64);
            let out = match alg {
                Algorithm::Repcs => repcs_shuffle(set, seed),
                Algorithm::Umsj => umsj_shuffle(set, seed, DEFAULT_MAX_RETRIES),
            };
            brute_force(out.corpus.publications(), corpus)
        })
        .collect();
    let mut keys: Vec<JournalPair> = tables.iter().flat_map(|t| t.keys().cloned()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|k| {
            let v: Vec<f64> = tables.iter().map(|t| *t.get(&k).unwrap_or(&0) as f64).collect();
            let mean = v.iter().sum::<f64>() / n as f64;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            (k, (mean, var.sqrt()))
        })
        .collect()
}

#[test]
fn accumulated_moments_match_two_pass_for_both_algorithms() {
    let corpus = small_synth(5);
    let set = build_groups(&corpus, &corpus).unwrap();
    for alg in [Algorithm::Repcs, Algorithm::Umsj] {
        let cfg = SimConfig {
            n_simulations: 40,
            master_seed: 17,
            algorithm: alg,
            workers: 3,
            ..SimConfig::default()
        };
        let got = simulate_groups(&set, &cfg).unwrap();
        let want = naive_moments(&set, alg, 17, 40);
        assert_eq!(got.moments.len(), want.len());
        for (k, (mean, sigma)) in &want {
            let m = got.moments[k];
            assert!(
                (m.mean - mean).abs() < 1e-9 && (m.sigma - sigma).abs() < 1e-9,
                "{alg} {k}"
            );
        }
    }
}

#[test]
fn per_simulation_pair_totals_count_survivors_only() {
    let corpus = small_synth(6);
    let set = build_groups(&corpus, &corpus).unwrap();
    let cfg = SimConfig {
        n_simulations: 10,
        master_seed: 3,
        ..SimConfig::default()
    };
    let r = simulate_groups(&set, &cfg).unwrap();
    for (i, d) in r.per_simulation.iter().enumerate() {
        let out = repcs_shuffle(&set, simulation_seed(3, i as u64));
        let want: u64 = out
            .corpus
            .publications()
            .iter()
            .map(|p| cocite_core::cocite::pair_count(p.refs.len()))
            .sum();
        assert_eq!(d.total_pairs, want);
        assert_eq!(d.deleted_pubs, out.deleted_pubs.len());
    }
}

fn stats(set: &GroupSet, alg: Algorithm) -> Vec<PairStats> {
    let cfg = SimConfig {
        n_simulations: 30,
        master_seed: 21,
        algorithm: alg,
        ..SimConfig::default()
    };
    let sims = simulate_groups(set, &cfg).unwrap();
    zscores(&observed_frequencies(set.corpus()), &sims.moments)
}

#[test]
fn background_flips_more_signs_than_algorithm() {
    let s = generate(&SynthConfig {
        p_intra: 0.9,
        pubs_per_discipline: 300,
        ref_pool_per_discipline: 1500,
        journals_per_discipline: 8,
        seed: 12,
        ..SynthConfig::default()
    })
    .unwrap();
    let d0 = &s.disciplines[0];
    let local = build_groups(d0, d0).unwrap();
    let global = build_groups(d0, &s.corpus).unwrap();
    let local_repcs = stats(&local, Algorithm::Repcs);
    let by_background = sign_change_report(&local_repcs, &stats(&global, Algorithm::Repcs));
    let by_algorithm = sign_change_report(&local_repcs, &stats(&local, Algorithm::Umsj));
    assert!(
        by_background > by_algorithm,
        "background {by_background} vs algorithm {by_algorithm}"
    );
}
