use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant, SystemTime};

fn lineage(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lineage"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Synthetic corpus plus a run config whose cohort band and target list make
/// every analysis produce tables.
struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new(papers: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let o = lineage(&["synth", "--out", s(&root.join("syn")), "--papers", &papers.to_string(), "--seed", "3"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let targets: String = (400..460).map(|i| format!("P{i:06}\n")).collect();
        fs::write(root.join("targets.txt"), targets).unwrap();
        fs::write(
            root.join("run.toml"),
            r#"corpus = "syn/corpus.jsonl"
cache_dir = "cache"
output_dir = "out"

[analysis]
targets = "targets.txt"

[analysis.cohort]
band = { kind = "absolute", lo = 10, hi = 40 }
"#,
        )
        .unwrap();
        Fixture { _dir: dir, root }
    }

    fn config(&self) -> String {
        s(&self.root.join("run.toml")).to_string()
    }

    fn out(&self) -> PathBuf {
        self.root.join("out")
    }
}

fn snapshot_dir(dir: &Path) -> BTreeMap<PathBuf, (Vec<u8>, SystemTime)> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_path_buf();
                out.insert(rel, (fs::read(&p).unwrap(), fs::metadata(&p).unwrap().modified().unwrap()));
            }
        }
    }
    out
}

const EXPECTED_TABLES: &[&str] = &[
    "analysis/prevalence_by_year.tsv",
    "analysis/prevalence_by_field_year.tsv",
    "analysis/giant_vs_most_cited.tsv",
    "analysis/conditional_g_given_c.tsv",
    "analysis/g_given_c_histogram.tsv",
    "analysis/cohort_groups.tsv",
    "analysis/cohort_trajectories.tsv",
    "analysis/team_size_curves.tsv",
    "analysis/disruption_g_norm.tsv",
    "analysis/matched_summary.tsv",
    "analysis/matched_sets.tsv",
];

#[test]
fn full_run_emits_every_table_then_reruns_from_cache() {
    let f = Fixture::new(10_000);
    let started = Instant::now();
    let o = lineage(&["all", "--config", &f.config()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(started.elapsed() < Duration::from_secs(120));
    for name in ["giants.tsv", "giants.jsonl", "metrics.tsv", "importance.tsv", "ingest.json"]
        .iter()
        .chain(EXPECTED_TABLES)
    {
        let p = f.out().join(name);
        assert!(p.exists(), "{name} missing");
        let meta: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(f.out().join(format!("{name}.meta.json"))).unwrap()).unwrap();
        assert!(meta["config_hash"].is_string() && meta["tool_version"].is_string(), "{name}");
    }
    assert!(!f.out().join("giants.tsv.partial").exists());

    let before = snapshot_dir(&f.out());
    std::thread::sleep(Duration::from_millis(20));
    let o = lineage(&["all", "--config", &f.config(), "-v"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let log = stderr(&o);
    assert!(log.contains("ingest: cache hit"), "{log}");
    assert!(log.contains("giants: cache hit"), "{log}");
    let after = snapshot_dir(&f.out());
    let changed: Vec<&PathBuf> = before.keys().filter(|k| before.get(*k) != after.get(*k)).collect();
    assert!(changed.is_empty() && before.len() == after.len(), "rewritten: {changed:?}");
}

#[test]
fn corrupted_cache_headers_force_rebuilds() {
    let f = Fixture::new(3000);
    assert_eq!(code(&lineage(&["giants", "--config", &f.config()])), 0);
    let reference = fs::read(f.out().join("giants.tsv")).unwrap();
    let cache = f.root.join("cache");
    for e in fs::read_dir(&cache).unwrap() {
        let p = e.unwrap().path();
        let name = p.file_name().unwrap().to_str().unwrap().to_string();
        let mut bytes = fs::read(&p).unwrap();
        if name.starts_with("giants-") {
            let text = String::from_utf8(bytes).unwrap().replacen("cache v1", "cache v0", 1);
            bytes = text.into_bytes();
        } else {
            bytes[0] ^= 0xff;
        }
        fs::write(&p, bytes).unwrap();
    }
    let o = lineage(&["giants", "--config", &f.config(), "-v"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let log = stderr(&o);
    assert!(log.contains("ingest: rejecting cache"), "{log}");
    assert!(log.contains("giants: rejecting cache"), "{log}");
    assert_eq!(fs::read(f.out().join("giants.tsv")).unwrap(), reference);

    let o = lineage(&["build-cocite", "--config", &f.config(), "--year", "2000"]);
    assert_eq!(code(&o), 0);
    let snap = fs::read_dir(&cache)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_str().unwrap().starts_with("snapshot-"))
        .unwrap();
    let mut bytes = fs::read(&snap).unwrap();
    bytes[0] ^= 0xff;
    fs::write(&snap, bytes).unwrap();
    let o = lineage(&["build-cocite", "--config", &f.config(), "--year", "2000", "-v"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("build-cocite: rejecting cache"));
    let stats: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stats["cache_hit"], false);
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let f = Fixture::new(3000);
    let run = |workers: &str, out: &str| {
        let o = lineage(&["all", "--config", &f.config(), "--workers", workers, "--out", s(&f.root.join(out))]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        snapshot_dir(&f.root.join(out))
            .into_iter()
            .map(|(k, (bytes, _))| (k, bytes))
            .collect::<BTreeMap<_, _>>()
    };
    let (a, b) = (run("1", "seq"), run("4", "par"));
    let differ: Vec<&PathBuf> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    assert!(differ.is_empty() && a.len() == b.len(), "differ: {differ:?}");
}

#[test]
fn exit_codes() {
    let f = Fixture::new(1000);
    assert_eq!(code(&lineage(&["giants", "--bogus"])), 2);
    assert_eq!(code(&lineage(&["giants"])), 2);
    assert_eq!(code(&lineage(&["analyze", "no_such_analysis", "--config", &f.config()])), 2);
    let bad_cfg = f.root.join("bad.toml");
    fs::write(&bad_cfg, "unknown_key = 1\n").unwrap();
    assert_eq!(code(&lineage(&["ingest", "--config", s(&bad_cfg)])), 2);

    let broken = f.root.join("broken.jsonl");
    fs::write(&broken, "{not json\n").unwrap();
    let o = lineage(&["ingest", "--corpus", s(&broken), "--out", s(&f.root.join("o2"))]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));

    let o = lineage(&["oracle-check", "--config", &f.config()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(f.out().join("oracle_report.json")).unwrap()).unwrap();
    assert_eq!(report["mismatches"].as_array().unwrap().len(), 0);
    assert_eq!(code(&lineage(&["oracle-check", "--config", &f.config(), "--cap", "10"])), 1);

    let o = lineage(&["analyze", "prevalence_by_year", "--config", &f.config(), "--from", "1995"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}
