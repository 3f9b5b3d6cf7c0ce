use std::cell::OnceCell;
use std::fs;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use lineage_core::analysis::{self, AnalysisReport, Provenance};
use lineage_core::cocite::CoCitationSnapshot;
use lineage_core::corpus::{load_corpus, read_records, Corpus, IngestConfig, PaperIdx};
use lineage_core::giant::{assign_all_giants, importance_scores, GiantAssignments};
use lineage_core::metrics::{compute_metrics, MetricTable};
use lineage_core::synthgen::{compare, run_oracle, OracleConfig};
use lineage_core::{Error, Exec};

use crate::config::{hash_json, RunConfig};
use crate::output::{is_fresh, write_atomic, write_with_meta, OutputMeta, TOOL_VERSION};

const INGEST_STAGE: u32 = 1;
const GIANT_STAGE: u32 = 1;
const METRICS_STAGE: u32 = 1;
const ANALYSIS_STAGE: u32 = 1;
const GIANT_CACHE_HEADER: &str = "#lineage giant cache v1";

pub struct Pipeline {
    pub cfg: RunConfig,
    exec: Exec,
    input_hash: OnceCell<String>,
}

#[derive(Serialize)]
struct KeyParts<'a, T: Serialize> {
    stage: &'a str,
    version: u32,
    upstream: &'a str,
    config: T,
}

fn key<T: Serialize>(stage: &str, version: u32, upstream: &str, config: T) -> String {
    hash_json(&KeyParts {
        stage,
        version,
        upstream,
        config,
    })
}

pub fn hash_file(path: &Path) -> Result<String> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = BufReader::new(f);
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = r.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(&h.finalize()[..8]))
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Self {
        let exec = Exec::for_workers(cfg.workers());
        Pipeline {
            cfg,
            exec,
            input_hash: OnceCell::new(),
        }
    }

    pub fn config_hash(&self) -> String {
        // Worker count and locations do not change results.
        let mut c = self.cfg.clone();
        c.workers = 0;
        c.cache_dir = PathBuf::new();
        c.output_dir = PathBuf::new();
        c.corpus = None;
        hash_json(&c)
    }

    fn input_hash(&self) -> Result<&str> {
        if self.input_hash.get().is_none() {
            let h = hash_file(self.cfg.corpus_path()?)?;
            let _ = self.input_hash.set(h);
        }
        Ok(self.input_hash.get().expect("set above"))
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    fn meta(&self, stage: &str, version: u32, cache_key: &str, rows: usize) -> Result<OutputMeta> {
        Ok(OutputMeta {
            tool_version: TOOL_VERSION.to_string(),
            stage: stage.to_string(),
            stage_version: version,
            config_hash: self.config_hash(),
            input_hash: self.input_hash()?.to_string(),
            cache_key: cache_key.to_string(),
            rows,
            details: serde_json::Value::Null,
        })
    }

    fn ingest_config(&self) -> Result<IngestConfig> {
        Ok(IngestConfig {
            format: self.cfg.input_format()?,
            year_range: self.cfg.year_range,
        })
    }

    fn corpus_key(&self) -> Result<String> {
        let ic = self.ingest_config()?;
        Ok(key("ingest", INGEST_STAGE, self.input_hash()?, (ic.format, ic.year_range)))
    }

    /// Loads the corpus through the binary cache.
    pub fn corpus(&self) -> Result<Corpus> {
        let k = self.corpus_key()?;
        let path = self.cfg.cache_dir.join(format!("corpus-{k}.bin"));
        if path.exists() {
            match fs::File::open(&path).map_err(anyhow::Error::from).and_then(|f| {
                Corpus::read_cache(BufReader::new(f)).map_err(anyhow::Error::from)
            }) {
                Ok(c) => {
                    log::info!("ingest: cache hit {}", path.display());
                    return Ok(c);
                }
                Err(e) => log::warn!("ingest: rejecting cache {}: {e:#}; rebuilding", path.display()),
            }
        }
        let corpus = load_corpus(self.cfg.corpus_path()?, &self.ingest_config()?)?;
        write_atomic(&path, |w| Ok(corpus.write_cache(w)?))?;
        log::info!("ingest: {} papers cached at {}", corpus.len(), path.display());
        Ok(corpus)
    }

    pub fn ingest(&self) -> Result<Corpus> {
        let corpus = self.corpus()?;
        let k = self.corpus_key()?;
        let path = self.out("ingest.json");
        if !is_fresh(&path, &k) {
            let mut meta = self.meta("ingest", INGEST_STAGE, &k, corpus.len())?;
            meta.details = serde_json::json!({ "fingerprint": corpus.fingerprint() });
            write_with_meta(&path, &meta, |w| {
                let stats = serde_json::json!({
                    "fingerprint": corpus.fingerprint(),
                    "year_bounds": corpus.year_bounds(),
                    "eligible_focal_papers": corpus.indices().filter(|&p| corpus.is_eligible(p)).count(),
                    "stats": corpus.stats(),
                });
                serde_json::to_writer_pretty(&mut *w, &stats)?;
                writeln!(w)?;
                Ok(())
            })?;
        }
        Ok(corpus)
    }

    pub fn build_cocite(&self, year: i32) -> Result<serde_json::Value> {
        let corpus = self.corpus()?;
        let k = self.corpus_key()?;
        let fp = corpus.fingerprint();
        let path = self.cfg.cache_dir.join(format!("snapshot-{k}-{year}.bin"));
        let mut hit = false;
        let cached = if path.exists() {
            let r = fs::File::open(&path)
                .map_err(anyhow::Error::from)
                .and_then(|f| CoCitationSnapshot::read_cache(&fp, BufReader::new(f)).map_err(Into::into));
            match r {
                Ok(s) if s.as_of_year() == year => Some(s),
                Ok(_) => None,
                Err(e) => {
                    log::warn!("build-cocite: rejecting cache {}: {e:#}; rebuilding", path.display());
                    None
                }
            }
        } else {
            None
        };
        let snap = match cached {
            Some(s) => {
                hit = true;
                s
            }
            None => {
                let s = CoCitationSnapshot::build(&corpus, year, self.exec)?;
                write_atomic(&path, |w| Ok(s.write_cache(&fp, w)?))?;
                s
            }
        };
        Ok(serde_json::json!({
            "year": snap.as_of_year(),
            "nodes_with_neighbors": (0..corpus.len()).filter(|&i| snap.degree(PaperIdx(i as u32)) > 0).count(),
            "pairs": snap.pair_count(),
            "total_weight": snap.total_weight(),
            "cache_hit": hit,
            "cache_file": path,
        }))
    }

    fn focal_years(&self, corpus: &Corpus) -> Result<(i32, i32)> {
        let bounds = corpus.year_bounds().context("corpus is empty")?;
        let (from, to) = self.cfg.focal_years.unwrap_or(bounds);
        if from > to {
            bail!("focal year range {from}..{to} is empty");
        }
        Ok((from, to))
    }

    fn giant_key(&self, corpus: &Corpus) -> Result<String> {
        let years = self.focal_years(corpus)?;
        Ok(key("giants", GIANT_STAGE, &self.corpus_key()?, (&self.cfg.giant, years)))
    }

    fn read_giant_cache(&self, corpus: &Corpus, path: &Path) -> Result<GiantAssignments> {
        let text = fs::read_to_string(path)?;
        let Some((first, rest)) = text.split_once('\n') else {
            bail!("empty cache file");
        };
        if first != GIANT_CACHE_HEADER {
            bail!("cache header {first:?} does not match {GIANT_CACHE_HEADER:?}");
        }
        Ok(GiantAssignments::read_tsv(corpus, rest.as_bytes())?)
    }

    /// Giant assignments, from cache when the outputs are current.
    pub fn giants(&self, corpus: &Corpus) -> Result<GiantAssignments> {
        let k = self.giant_key(corpus)?;
        let cache = self.cfg.cache_dir.join(format!("giants-{k}.tsv"));
        let (tsv, jsonl) = (self.out("giants.tsv"), self.out("giants.jsonl"));
        if cache.exists() && is_fresh(&tsv, &k) && is_fresh(&jsonl, &k) {
            match self.read_giant_cache(corpus, &cache) {
                Ok(a) => {
                    log::info!("giants: cache hit {}", cache.display());
                    return Ok(a);
                }
                Err(e) => log::warn!("giants: rejecting cache {}: {e:#}; recomputing", cache.display()),
            }
        }
        let (from, to) = self.focal_years(corpus)?;
        let started = std::time::Instant::now();
        let assign = assign_all_giants(corpus, from, to, &self.cfg.giant, self.exec)?;
        log::info!(
            "giants: {} focal papers, {} with a giant, in {:.1?}",
            assign.len(),
            assign.with_giant(),
            started.elapsed()
        );
        let meta = self.meta("giants", GIANT_STAGE, &k, assign.len())?;
        write_with_meta(&tsv, &meta, |w| Ok(assign.write_tsv(corpus, w)?))?;
        write_with_meta(&jsonl, &meta, |w| Ok(assign.write_jsonl(corpus, w)?))?;
        write_atomic(&cache, |w| {
            writeln!(w, "{GIANT_CACHE_HEADER}")?;
            Ok(assign.write_tsv(corpus, w)?)
        })?;
        Ok(assign)
    }

    pub fn write_scores(&self, corpus: &Corpus, assign: &GiantAssignments) -> Result<()> {
        let k = key("scores", GIANT_STAGE, &self.giant_key(corpus)?, self.cfg.giant.damping);
        let path = self.out("importance.tsv");
        if is_fresh(&path, &k) {
            return Ok(());
        }
        let mut rows = 0;
        let mut body = String::from("focal_id\tref_id\tdegree\tweight\tscore\n");
        for r in assign.results().iter().filter(|r| r.has_giant()) {
            let Ok(scores) = importance_scores(r, self.cfg.giant.damping) else { continue };
            for s in scores {
                rows += 1;
                body.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    corpus.id(r.focal),
                    corpus.id(s.paper),
                    s.degree,
                    s.weight,
                    s.score
                ));
            }
        }
        let meta = self.meta("scores", GIANT_STAGE, &k, rows)?;
        write_with_meta(&path, &meta, |w| Ok(w.write_all(body.as_bytes())?))
    }

    fn metrics_key(&self, corpus: &Corpus) -> Result<String> {
        Ok(key("metrics", METRICS_STAGE, &self.giant_key(corpus)?, &self.cfg.metrics))
    }

    pub fn metrics(&self, corpus: &Corpus, assign: &GiantAssignments) -> Result<MetricTable> {
        let table = compute_metrics(corpus, assign, &self.cfg.metrics, self.exec)?;
        let k = self.metrics_key(corpus)?;
        let path = self.out("metrics.tsv");
        if is_fresh(&path, &k) {
            log::info!("metrics: {} is current", path.display());
        } else {
            let meta = self.meta("metrics", METRICS_STAGE, &k, table.rows.len())?;
            write_with_meta(&path, &meta, |w| Ok(table.write_tsv(corpus, w)?))?;
        }
        Ok(table)
    }

    fn targets(&self, corpus: &Corpus) -> Result<Vec<PaperIdx>> {
        let path = self
            .cfg
            .analysis
            .targets
            .as_deref()
            .context("matched_cohort_compare needs `analysis.targets` (one paper id per line)")?;
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let id = line.trim();
            if id.is_empty() || id.starts_with('#') {
                continue;
            }
            match corpus.idx_of(id) {
                Some(p) => out.push(p),
                None => bail!("{}:{}: unknown paper id {id:?}", path.display(), i + 1),
            }
        }
        Ok(out)
    }

    pub fn run_analysis(
        &self,
        name: &str,
        corpus: &Corpus,
        assign: &GiantAssignments,
        metrics: &MetricTable,
    ) -> Result<AnalysisReport> {
        let a = &self.cfg.analysis;
        let mut report = match name {
            "prevalence_by_year" => analysis::prevalence_by_year(assign, corpus, &a.filter),
            "giant_vs_most_cited" => analysis::giant_vs_most_cited(assign, corpus, &a.filter),
            "conditional_g_given_c" => analysis::conditional_g_given_c(metrics, corpus, &a.filter),
            "cohort_future_impact" => analysis::cohort_future_impact(metrics, corpus, &a.cohort)?,
            "team_size_curves" => analysis::team_size_curves(metrics, corpus),
            "disruption_profile" => analysis::disruption_profile(metrics),
            "matched_cohort_compare" => {
                let targets = self.targets(corpus)?;
                analysis::matched_cohort_compare(&targets, metrics, corpus, &a.matching)?
            }
            other => bail!("unknown analysis {other:?}; expected one of {}", analysis::ANALYSES.join(", ")),
        };
        let targets_hash = match (&a.targets, name) {
            (Some(p), "matched_cohort_compare") => hash_file(p)?,
            _ => String::new(),
        };
        let k = key("analysis", ANALYSIS_STAGE, &self.metrics_key(corpus)?, (name, a, targets_hash));
        report.set_provenance(&Provenance {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: self.config_hash(),
            corpus_id: corpus.fingerprint(),
            snapshot_years: Some(self.focal_years(corpus)?),
        });
        for t in &report.tables {
            let path = self.out(&format!("analysis/{}.tsv", t.name));
            if is_fresh(&path, &k) {
                continue;
            }
            let mut meta = self.meta("analysis", ANALYSIS_STAGE, &k, t.rows.len())?;
            meta.details = t.sidecar();
            write_with_meta(&path, &meta, |w| Ok(t.write_tsv(w)?))?;
        }
        Ok(report)
    }

    /// Every stage in order. Analyses whose inputs are missing (no target
    /// list, cohort below the minimum size) are skipped with a warning.
    pub fn run_all(&self) -> Result<Vec<String>> {
        let corpus = self.ingest()?;
        let assign = self.giants(&corpus)?;
        self.write_scores(&corpus, &assign)?;
        let metrics = self.metrics(&corpus, &assign)?;
        let mut skipped = Vec::new();
        for &name in analysis::ANALYSES {
            if name == "matched_cohort_compare" && self.cfg.analysis.targets.is_none() {
                log::warn!("{name}: skipped, no target list configured");
                skipped.push(format!("{name}: no target list configured"));
                continue;
            }
            match self.run_analysis(name, &corpus, &assign, &metrics) {
                Ok(_) => {}
                Err(e) if matches!(e.downcast_ref::<Error>(), Some(Error::CohortTooSmall { .. })) => {
                    log::warn!("{name}: skipped, {e}");
                    skipped.push(format!("{name}: {e}"));
                }
                Err(e) => return Err(e.context(format!("analysis {name}"))),
            }
        }
        Ok(skipped)
    }

    /// Mismatches between the pipeline and the brute-force oracle.
    pub fn oracle_check(&self, cap: usize) -> Result<Vec<String>> {
        let path = self.cfg.corpus_path()?;
        let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let mut records = read_records(BufReader::new(f), self.cfg.input_format()?)?;
        if let Some((lo, hi)) = self.cfg.year_range {
            records.retain(|r| r.year >= lo && r.year <= hi);
        }
        let oracle = run_oracle(
            &records,
            &OracleConfig {
                giant: self.cfg.giant.clone(),
                window: self.cfg.metrics.window,
                cap,
            },
        )?;
        let corpus = Corpus::from_records(records, &self.ingest_config()?)?;
        let (lo, hi) = corpus.year_bounds().context("corpus is empty")?;
        let assign = assign_all_giants(&corpus, lo, hi, &self.cfg.giant, self.exec)?;
        let metrics = compute_metrics(&corpus, &assign, &self.cfg.metrics, self.exec)?;
        let diff = compare(&oracle, &corpus, &assign, Some(&metrics));
        let report = serde_json::json!({
            "focal_papers": oracle.giants.len(),
            "papers": oracle.counts.len(),
            "mismatches": diff,
        });
        let k = key("oracle", 1, self.input_hash()?, (&self.cfg.giant, &self.cfg.metrics, cap));
        let meta = self.meta("oracle-check", 1, &k, diff.len())?;
        write_with_meta(&self.out("oracle_report.json"), &meta, |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            writeln!(w)?;
            Ok(())
        })?;
        Ok(diff)
    }
}
