//! Synthetic corpora with planted signals, and a brute-force oracle.

mod config;
mod generate;
pub mod oracle;
mod sampler;

pub use config::{GeneratorConfig, GiantRichPlant, PlantedSignals, RefDist, SkipPlant, TeamSizeDist};
pub use generate::{generate, paper_id, GeneratedCorpus, Manifest, PlantedLabels};
pub use oracle::{compare, run_oracle, DEFAULT_ORACLE_CAP, OracleConfig, OracleCounts, OracleGiant, OracleOutput};
