use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const PIPELINE_FILES: [&str; 9] = [
    "summary.csv",
    "observed.csv",
    "sim_stats.csv",
    "pair_stats.csv",
    "classification.csv",
    "hits.csv",
    "hit_tests.txt",
    "kld.csv",
    "composition.csv",
];

fn cocite(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cocite")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = cocite(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small synthetic corpus, `(pubs, refs, cites)`.
fn synth(dir: &Path) -> [PathBuf; 3] {
    let d = dir.join("corpus");
    ok(&[
        "synth",
        "--out",
        s(&d),
        "--seed",
        "5",
        "--disciplines",
        "2",
        "--journals-per-discipline",
        "4",
        "--pubs-per-discipline",
        "120",
        "--ref-pool",
        "300",
    ]);
    ["publications.tsv", "references.tsv", "citations.tsv"].map(|f| d.join(f))
}

fn input_flags(files: &[PathBuf; 3]) -> Vec<String> {
    vec![
        "--pubs".into(),
        s(&files[0]).into(),
        "--refs".into(),
        s(&files[1]).into(),
        "--cites".into(),
        s(&files[2]).into(),
    ]
}

fn run_with(cmd: &str, files: &[PathBuf; 3], out: &Path, extra: &[&str]) -> String {
    let mut args: Vec<String> = vec![cmd.into(), "--out".into(), s(out).into()];
    args.extend(input_flags(files));
    args.extend(extra.iter().map(|x| x.to_string()));
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

fn manifest_value(dir: &Path, key: &str) -> Option<String> {
    let text = std::fs::read_to_string(dir.join("run.manifest")).unwrap();
    text.lines().find_map(|l| {
        let (k, v) = l.split_once('=')?;
        (k.trim() == key).then(|| v.trim().to_owned())
    })
}

#[test]
fn synth_writes_corpus_and_per_discipline_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let files = synth(dir.path());
    for f in &files {
        assert!(f.is_file());
    }
    assert!(dir.path().join("corpus/S00/publications.tsv").is_file());
    assert!(dir.path().join("corpus/S01/citations.tsv").is_file());
    assert!(dir.path().join("corpus/run.manifest").is_file());
}

#[test]
fn pipeline_outputs_and_rerun_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let files = synth(dir.path());
    let first = dir.path().join("first");
    let stdout = run_with(
        "pipeline",
        &files,
        &first,
        &["--sims", "6", "--seed", "11", "--workers", "2"],
    );
    assert!(stdout.contains("kld"));
    for f in PIPELINE_FILES {
        assert!(first.join(f).is_file(), "{f}");
    }
    assert_eq!(manifest_value(&first, "command").as_deref(), Some("pipeline"));
    assert_eq!(manifest_value(&first, "sims").as_deref(), Some("6"));

    let manifest = first.join("run.manifest");
    for workers in ["1", "4", "8"] {
        let again = dir.path().join(format!("w{workers}"));
        ok(&[
            "pipeline",
            "--config",
            s(&manifest),
            "--out",
            s(&again),
            "--workers",
            workers,
        ]);
        for f in PIPELINE_FILES {
            assert_eq!(
                std::fs::read(first.join(f)).unwrap(),
                std::fs::read(again.join(f)).unwrap(),
                "{f} differs with {workers} workers"
            );
        }
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let files = synth(dir.path());
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        format!(
            "# comment\npubs = {}\nrefs = {}\ncites = {}\nsims = 3\nseed = 1\n",
            s(&files[0]),
            s(&files[1]),
            s(&files[2])
        ),
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&out), "--seed", "99"]);
    assert_eq!(manifest_value(&out, "sims").as_deref(), Some("3"));
    assert_eq!(manifest_value(&out, "seed").as_deref(), Some("99"));
}

#[test]
fn every_subcommand_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let files = synth(dir.path());
    for cmd in [
        "ingest",
        "summarize",
        "observe",
        "simulate",
        "zscore",
        "classify",
        "hits",
        "kld",
        "compose",
    ] {
        let out = dir.path().join(cmd);
        run_with(cmd, &files, &out, &["--sims", "3"]);
        assert_eq!(manifest_value(&out, "command").as_deref(), Some(cmd));
    }
}

#[test]
fn staged_commands_reuse_intermediate_files() {
    let dir = tempfile::tempdir().unwrap();
    let files = synth(dir.path());
    let full = dir.path().join("full");
    run_with("pipeline", &files, &full, &["--sims", "4"]);

    let staged = dir.path().join("staged");
    let pair_stats = full.join("pair_stats.csv");
    run_with(
        "classify",
        &files,
        &staged,
        &["--sims", "4", "--pair-stats", s(&pair_stats)],
    );
    assert_eq!(
        std::fs::read(full.join("classification.csv")).unwrap(),
        std::fs::read(staged.join("classification.csv")).unwrap()
    );
    assert!(manifest_value(&staged, "digest.pair-stats").is_some());

    let hits = dir.path().join("hits");
    let stdout = run_with(
        "hits",
        &files,
        &hits,
        &["--classification", s(&full.join("classification.csv"))],
    );
    assert!(stdout.contains("HN"));
    assert_eq!(
        std::fs::read(full.join("hits.csv")).unwrap(),
        std::fs::read(hits.join("hits.csv")).unwrap()
    );
}

#[test]
fn kld_compare_reports_both_backgrounds() {
    let dir = tempfile::tempdir().unwrap();
    let files = synth(dir.path());
    let out = dir.path().join("kld");
    let mut extra = vec!["--compare", "--sims", "4"];
    let pool = [
        "--pool-pubs",
        s(&files[0]),
        "--pool-refs",
        s(&files[1]),
        "--pool-cites",
        s(&files[2]),
    ];
    extra.extend(pool);
    let s00 = ["publications.tsv", "references.tsv", "citations.tsv"].map(|f| dir.path().join("corpus/S00").join(f));
    let stdout = run_with("kld", &s00, &out, &extra);
    assert!(stdout.contains("local") && stdout.contains("global") && stdout.contains("ratio"));
    let csv = std::fs::read_to_string(out.join("kld.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");
}

#[test]
fn bench_prints_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let stdout = ok(&[
        "bench",
        "--out",
        s(&out),
        "--algorithms",
        "repcs,umsj",
        "--sims",
        "2",
        "--citations",
        "3000",
    ]);
    assert!(stdout.contains("ratio"));
    let csv = std::fs::read_to_string(out.join("bench.csv")).unwrap();
    assert!(csv.starts_with("algorithm,sims,workers,citations,seconds"));
    assert_eq!(csv.lines().count(), 3);
    assert!(out.join("run.manifest").is_file());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cocite(&["pipeline", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(cocite(&["hits", "--hit-pct", "3"]).status.code(), Some(2));
    assert_eq!(cocite(&["simulate", "--algorithm", "bogus"]).status.code(), Some(2));
    assert_eq!(cocite(&["simulate", "--sims", "1"]).status.code(), Some(2));
    assert_eq!(cocite(&["bench", "--algorithms", "repcs,nope"]).status.code(), Some(2));
    assert_eq!(cocite(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_input_exits_1_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let files = synth(dir.path());
    let bad = dir.path().join("bad_pubs.tsv");
    let mut text = std::fs::read_to_string(&files[0]).unwrap();
    text.push_str("pX\tnot-a-year\tJ\t0\n");
    std::fs::write(&bad, &text).unwrap();
    let line = text.lines().count();
    let out = cocite(&[
        "ingest",
        "--out",
        s(&dir.path().join("o")),
        "--pubs",
        s(&bad),
        "--refs",
        s(&files[1]),
        "--cites",
        s(&files[2]),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: "), "{err}");
    assert!(err.contains(&format!("bad_pubs.tsv:{line}")), "{err}");

    let missing = cocite(&[
        "ingest",
        "--pubs",
        "/nonexistent/p.tsv",
        "--refs",
        s(&files[1]),
        "--cites",
        s(&files[2]),
    ]);
    assert_eq!(missing.status.code(), Some(1));
}
