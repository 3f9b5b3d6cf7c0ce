use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use lineage_core::analysis::{CohortSpec, MatchConfig, PaperFilter};
use lineage_core::corpus::InputFormat;
use lineage_core::giant::GiantConfig;
use lineage_core::metrics::MetricsConfig;

/// Settings for every stage, read from a TOML file. Every key is optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    /// `jsonl` or `tsv`; guessed from the extension when absent.
    pub format: Option<String>,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Papers outside this range are dropped at ingest.
    pub year_range: Option<(i32, i32)>,
    /// Focal publication years for giant identification; all years when absent.
    pub focal_years: Option<(i32, i32)>,
    /// 0 uses every available core.
    pub workers: usize,
    pub giant: GiantConfig,
    pub metrics: MetricsConfig,
    pub analysis: AnalysisConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub filter: PaperFilter,
    pub cohort: CohortSpec,
    pub matching: MatchConfig,
    /// One paper id per line.
    pub targets: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            format: None,
            cache_dir: PathBuf::from(".lineage-cache"),
            output_dir: PathBuf::from("lineage-out"),
            year_range: None,
            focal_years: None,
            workers: 0,
            giant: GiantConfig::default(),
            metrics: MetricsConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        // Relative paths in the file are relative to the file.
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.corpus.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.analysis.targets.as_mut() {
            rebase(p);
        }
        rebase(&mut cfg.cache_dir);
        rebase(&mut cfg.output_dir);
        Ok(cfg)
    }

    pub fn corpus_path(&self) -> Result<&Path> {
        self.corpus
            .as_deref()
            .context("no corpus given: set `corpus` in the config or pass --corpus")
    }

    pub fn input_format(&self) -> Result<InputFormat> {
        match &self.format {
            Some(f) => f.parse().map_err(|e| anyhow::anyhow!("{e}")),
            None => Ok(InputFormat::from_path(self.corpus_path()?)),
        }
    }

    pub fn workers(&self) -> usize {
        if self.workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            self.workers
        }
    }
}

pub fn hash_json(value: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    hex::encode(&Sha256::digest(bytes)[..8])
}
