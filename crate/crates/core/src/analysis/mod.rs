//! Aggregate analyses over giant assignments and metric tables, exported as
//! plot-ready tables.

mod cohort;
mod distributions;
mod matched;
mod prevalence;
mod table;

use serde::{Deserialize, Serialize};

pub use cohort::{cohort_future_impact, CitationBand, CohortSpec, ImpactGroup};
pub use distributions::{conditional_g_given_c, disruption_profile, log_bin, team_size_curves};
pub use matched::{match_controls, matched_cohort_compare, MatchConfig, MatchedTarget};
pub use prevalence::{giant_is_most_cited, giant_vs_most_cited, prevalence_by_year};
pub use table::{AnalysisReport, AnalysisTable, Cell, Provenance};

use crate::corpus::{Corpus, PaperIdx};

pub const ANALYSES: &[&str] = &[
    "prevalence_by_year",
    "giant_vs_most_cited",
    "conditional_g_given_c",
    "cohort_future_impact",
    "team_size_curves",
    "disruption_profile",
    "matched_cohort_compare",
];

/// Field, venue and year predicate applied before aggregating.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PaperFilter {
    pub field: Option<String>,
    pub venue: Option<String>,
    pub years: Option<(i32, i32)>,
}

impl PaperFilter {
    /// Resolves the filter against a corpus. A venue predicate on a corpus
    /// without venue data is dropped, leaving the field predicate.
    pub fn resolve(&self, corpus: &Corpus) -> PaperFilter {
        let mut f = self.clone();
        if f.venue.is_some() && !corpus.papers().iter().any(|p| p.venue.is_some()) {
            log::warn!("corpus has no venue column; venue filter ignored");
            f.venue = None;
        }
        f
    }

    pub fn accepts(&self, corpus: &Corpus, p: PaperIdx) -> bool {
        let r = corpus.paper(p);
        self.field.as_ref().is_none_or(|f| &r.field == f)
            && self.venue.as_ref().is_none_or(|v| r.venue.as_ref() == Some(v))
            && self.years.is_none_or(|(lo, hi)| r.year >= lo && r.year <= hi)
    }
}

pub(crate) fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub(crate) fn std_err(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    Some((var / xs.len() as f64).sqrt())
}

pub(crate) fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}

pub(crate) fn fraction(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[cfg(test)]
mod tests;
