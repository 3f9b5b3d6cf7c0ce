mod config;
mod output;
mod stages;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lineage_core::analysis::ANALYSES;
use lineage_core::exec::with_workers;
use lineage_core::giant::Damping;
use lineage_core::synthgen::{generate, GeneratorConfig, DEFAULT_ORACLE_CAP};

use config::RunConfig;
use stages::Pipeline;

/// Exit status: 0 success, 1 stage failure, 2 usage or configuration error,
/// 3 oracle mismatch.
const EXIT_STAGE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(name = "lineage", version, about = "Giant-reference identification on citation corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input corpus (JSON lines or TSV).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Input format, `jsonl` or `tsv`.
    #[arg(long)]
    format: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct GiantFlags {
    /// First focal publication year.
    #[arg(long)]
    from: Option<i32>,
    /// Last focal publication year.
    #[arg(long)]
    to: Option<i32>,
    /// Remove the focal paper's own co-citations from its snapshot (default).
    #[arg(long, conflicts_with = "include_own_refs")]
    exclude_own_refs: bool,
    /// Keep the focal paper's own co-citations in its snapshot.
    #[arg(long)]
    include_own_refs: bool,
    /// Leave references without co-citation neighbors out of the node count.
    #[arg(long)]
    skip_isolated_refs: bool,
    #[arg(long, value_enum)]
    damping: Option<DampingArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DampingArg {
    Delta,
    Linear,
}

#[derive(Args, Clone, Default)]
struct MetricFlags {
    /// Years after publication counted by C_t and G_t.
    #[arg(long)]
    window: Option<u32>,
    /// Report G with self-citing focal papers removed.
    #[arg(long)]
    no_self_citations: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and index the corpus; writes ingest.json.
    Ingest(Common),
    /// Build (or load) the co-citation snapshot as of a year.
    BuildCocite {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        year: i32,
    },
    /// Identify giants; writes giants.tsv and giants.jsonl.
    Giants {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        giant: GiantFlags,
        /// Also write per-reference importance scores.
        #[arg(long)]
        scores: bool,
    },
    /// Per-paper metrics; writes metrics.tsv.
    Metrics {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        giant: GiantFlags,
        #[command(flatten)]
        metrics: MetricFlags,
    },
    /// Run one analysis; writes analysis/<table>.tsv.
    Analyze {
        /// Analysis name.
        name: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        giant: GiantFlags,
        #[command(flatten)]
        metrics: MetricFlags,
        /// Target paper ids, one per line.
        #[arg(long)]
        targets: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with planted signals.
    Synth {
        /// Generator configuration (TOML or JSON); defaults when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        papers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare the pipeline with the brute-force oracle on a small corpus.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        giant: GiantFlags,
        #[command(flatten)]
        metrics: MetricFlags,
        /// Largest corpus the oracle accepts.
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        cap: usize,
    },
    /// Every stage and every analysis.
    All {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        giant: GiantFlags,
        #[command(flatten)]
        metrics: MetricFlags,
        #[arg(long)]
        targets: Option<PathBuf>,
    },
}

/// Configuration problems map to the usage exit status.
#[derive(Debug, thiserror::Error)]
#[error("{0:#}")]
struct ConfigError(anyhow::Error);

fn run_config(common: &Common, giant: &GiantFlags, metrics: &MetricFlags) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).map_err(ConfigError)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &common.corpus {
        cfg.corpus = Some(p.clone());
    }
    if let Some(f) = &common.format {
        cfg.format = Some(f.clone());
    }
    if let Some(p) = &common.out {
        cfg.output_dir = p.clone();
    }
    if let Some(p) = &common.cache_dir {
        cfg.cache_dir = p.clone();
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if giant.from.is_some() || giant.to.is_some() {
        let (lo, hi) = cfg.focal_years.unwrap_or((i32::MIN, i32::MAX));
        cfg.focal_years = Some((giant.from.unwrap_or(lo), giant.to.unwrap_or(hi)));
    }
    if giant.include_own_refs {
        cfg.giant.exclude_own_refs = false;
    }
    if giant.exclude_own_refs {
        cfg.giant.exclude_own_refs = true;
    }
    if giant.skip_isolated_refs {
        cfg.giant.count_isolated_refs = false;
    }
    if let Some(d) = giant.damping {
        cfg.giant.damping = match d {
            DampingArg::Delta => Damping::Delta,
            DampingArg::Linear => Damping::Linear,
        };
    }
    if let Some(w) = metrics.window {
        cfg.metrics.window = w;
        cfg.analysis.cohort.window_t = w;
    }
    if metrics.no_self_citations {
        cfg.metrics.exclude_self_citations = true;
    }
    if cfg.corpus.is_none() {
        return Err(ConfigError(anyhow::anyhow!("no corpus given: set `corpus` in the config or pass --corpus")).into());
    }
    cfg.input_format().map_err(ConfigError)?;
    Ok(cfg)
}

fn load_generator_config(path: &Path) -> Result<GeneratorConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(anyhow::Error::from)
    } else {
        toml::from_str(&text).map_err(anyhow::Error::from)
    };
    parsed
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(|e| ConfigError(e).into())
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn in_pool<R: Send>(cfg: &RunConfig, f: impl FnOnce(Pipeline) -> R + Send) -> R {
    let workers = cfg.workers();
    let cfg = cfg.clone();
    with_workers(workers, move || f(Pipeline::new(cfg)))
}

fn run(cli: Cli) -> Result<u8> {
    let no_giant = GiantFlags::default();
    let no_metrics = MetricFlags::default();
    match cli.command {
        Command::Ingest(common) => {
            let cfg = run_config(&common, &no_giant, &no_metrics)?;
            in_pool(&cfg, |p| -> Result<()> {
                let c = p.ingest()?;
                print_json(&serde_json::json!({
                    "papers": c.len(),
                    "year_bounds": c.year_bounds(),
                    "fingerprint": c.fingerprint(),
                    "output": p.cfg.output_dir.join("ingest.json"),
                }));
                Ok(())
            })?;
        }
        Command::BuildCocite { common, year } => {
            let cfg = run_config(&common, &no_giant, &no_metrics)?;
            let stats = in_pool(&cfg, |p| p.build_cocite(year))?;
            print_json(&stats);
        }
        Command::Giants { common, giant, scores } => {
            let cfg = run_config(&common, &giant, &no_metrics)?;
            in_pool(&cfg, |p| -> Result<()> {
                let c = p.corpus()?;
                let a = p.giants(&c)?;
                if scores {
                    p.write_scores(&c, &a)?;
                }
                println!(
                    "{} focal papers, {} with a giant -> {}",
                    a.len(),
                    a.with_giant(),
                    p.cfg.output_dir.join("giants.tsv").display()
                );
                Ok(())
            })?;
        }
        Command::Metrics { common, giant, metrics } => {
            let cfg = run_config(&common, &giant, &metrics)?;
            in_pool(&cfg, |p| -> Result<()> {
                let c = p.corpus()?;
                let a = p.giants(&c)?;
                let m = p.metrics(&c, &a)?;
                println!(
                    "{} papers ({} in the focal population) -> {}",
                    m.rows.len(),
                    m.population().count(),
                    p.cfg.output_dir.join("metrics.tsv").display()
                );
                Ok(())
            })?;
        }
        Command::Analyze {
            name,
            common,
            giant,
            metrics,
            targets,
        } => {
            if !ANALYSES.contains(&name.as_str()) {
                return Err(ConfigError(anyhow::anyhow!(
                    "unknown analysis {name:?}; expected one of {}",
                    ANALYSES.join(", ")
                ))
                .into());
            }
            let mut cfg = run_config(&common, &giant, &metrics)?;
            if targets.is_some() {
                cfg.analysis.targets = targets;
            }
            in_pool(&cfg, |p| -> Result<()> {
                let c = p.corpus()?;
                let a = p.giants(&c)?;
                let m = p.metrics(&c, &a)?;
                let rep = p.run_analysis(&name, &c, &a, &m)?;
                for t in &rep.tables {
                    println!("{} rows -> {}", t.rows.len(), p.cfg.output_dir.join("analysis").join(format!("{}.tsv", t.name)).display());
                }
                Ok(())
            })?;
        }
        Command::Synth { config, out, papers, seed } => {
            let mut g = match &config {
                Some(p) => load_generator_config(p)?,
                None => GeneratorConfig::default(),
            };
            if let Some(n) = papers {
                g.n_papers = n;
            }
            if let Some(s) = seed {
                g.seed = s;
            }
            let corpus = generate(&g).map_err(|e| ConfigError(e.into()))?;
            corpus.write_to_dir(&out)?;
            let m = corpus.manifest();
            print_json(&serde_json::json!({
                "papers": m.papers,
                "references": m.references,
                "config_hash": m.config_hash,
                "out": out,
            }));
        }
        Command::OracleCheck {
            common,
            giant,
            metrics,
            cap,
        } => {
            let cfg = run_config(&common, &giant, &metrics)?;
            let diff = in_pool(&cfg, |p| p.oracle_check(cap))?;
            if diff.is_empty() {
                println!("oracle agrees on every focal paper and count");
            } else {
                println!("{} mismatches", diff.len());
                for d in diff.iter().take(20) {
                    println!("  {d}");
                }
                return Ok(EXIT_MISMATCH);
            }
        }
        Command::All {
            common,
            giant,
            metrics,
            targets,
        } => {
            let mut cfg = run_config(&common, &giant, &metrics)?;
            if targets.is_some() {
                cfg.analysis.targets = targets;
            }
            let skipped = in_pool(&cfg, |p| p.run_all())?;
            println!("outputs in {}", cfg.output_dir.display());
            for s in skipped {
                println!("skipped {s}");
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_STAGE)
            }
        }
    }
}
