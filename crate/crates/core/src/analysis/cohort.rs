use serde::{Deserialize, Serialize};

use super::{fraction, mean, std_err, AnalysisReport, AnalysisTable, PaperFilter};
use crate::corpus::{Corpus, PaperIdx};
use crate::error::{Error, Result};
use crate::metrics::MetricTable;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CitationBand {
    /// `lo <= C_t <= hi`.
    Absolute { lo: u32, hi: u32 },
    /// Within `±fraction` of `center`.
    Relative { center: u32, fraction: f64 },
}

impl CitationBand {
    pub fn bounds(&self) -> Result<(u32, u32)> {
        let (lo, hi) = match *self {
            CitationBand::Absolute { lo, hi } => (lo, hi),
            CitationBand::Relative { center, fraction } => {
                if !(fraction.is_finite() && fraction >= 0.0) {
                    return Err(Error::InvalidArgument(format!("band fraction {fraction}")));
                }
                let c = center as f64;
                ((c * (1.0 - fraction)).ceil().max(0.0) as u32, (c * (1.0 + fraction)).floor() as u32)
            }
        };
        if lo > hi {
            return Err(Error::InvalidArgument(format!("empty citation band [{lo}, {hi}]")));
        }
        Ok((lo, hi))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortSpec {
    /// Publication year; `None` pools every year with a complete horizon.
    pub year: Option<i32>,
    pub field: Option<String>,
    pub venue: Option<String>,
    /// Band on `C_t`, the citations collected within `window_t` years.
    pub band: CitationBand,
    pub window_t: u32,
    /// Last year offset of the exported trajectories.
    pub horizon: u32,
    /// Share of the `G_t > 0` papers placed in each of the high and low groups.
    pub group_fraction: f64,
    pub min_cohort: usize,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            year: None,
            field: None,
            venue: None,
            band: CitationBand::Absolute { lo: 100, hi: 200 },
            window_t: 5,
            horizon: 15,
            group_fraction: 0.1,
            min_cohort: 30,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpactGroup {
    High,
    Low,
    NonGiant,
}

impl ImpactGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            ImpactGroup::High => "high_g",
            ImpactGroup::Low => "low_g",
            ImpactGroup::NonGiant => "non_giant",
        }
    }
}

/// Citation trajectories of the papers in a citation-banded cohort, split
/// into the top and bottom `G_t` groups and the papers with `G_t = 0`.
pub fn cohort_future_impact(metrics: &MetricTable, corpus: &Corpus, spec: &CohortSpec) -> Result<AnalysisReport> {
    if spec.window_t != metrics.config.window {
        return Err(Error::InvalidArgument(format!(
            "cohort window {} differs from the metric window {}",
            spec.window_t, metrics.config.window
        )));
    }
    if spec.horizon < spec.window_t || !(spec.group_fraction > 0.0 && spec.group_fraction <= 0.5) {
        return Err(Error::InvalidArgument("horizon must reach the window; group fraction in (0, 0.5]".into()));
    }
    let (lo, hi) = spec.band.bounds()?;
    let Some((_, last_year)) = corpus.year_bounds() else {
        return Err(Error::CohortTooSmall { size: 0, min: spec.min_cohort });
    };
    let horizon = spec.horizon as i32;
    if spec.year.is_some_and(|y| y + horizon > last_year) {
        return Err(Error::InvalidArgument(format!(
            "cohort year plus horizon {horizon} passes the last corpus year {last_year}"
        )));
    }
    let filter = PaperFilter {
        field: spec.field.clone(),
        venue: spec.venue.clone(),
        years: None,
    }
    .resolve(corpus);
    let cohort: Vec<PaperIdx> = corpus
        .indices()
        .filter(|&p| {
            let r = corpus.paper(p);
            r.pub_type.is_research()
                && spec.year.is_none_or(|y| r.year == y)
                && r.year + horizon <= last_year
                && filter.accepts(corpus, p)
                && (lo..=hi).contains(&metrics.row(p).citations_window)
        })
        .collect();
    if cohort.len() < spec.min_cohort {
        return Err(Error::CohortTooSmall {
            size: cohort.len(),
            min: spec.min_cohort,
        });
    }

    let g_t = |p: PaperIdx| metrics.row(p).giant_index_window;
    let mut positive: Vec<PaperIdx> = cohort.iter().copied().filter(|&p| g_t(p) > 0).collect();
    positive.sort_by_key(|&p| (std::cmp::Reverse(g_t(p)), p));
    let k = ((spec.group_fraction * positive.len() as f64).ceil() as usize).min(positive.len());
    let groups = [
        (ImpactGroup::High, positive[..k].to_vec()),
        (ImpactGroup::Low, positive[positive.len() - k..].to_vec()),
        (ImpactGroup::NonGiant, cohort.iter().copied().filter(|&p| g_t(p) == 0).collect()),
    ];

    let cumulative = |p: PaperIdx, t: i32| corpus.citing_through(p, corpus.year(p) + t).len() as f64;
    let mut traj = AnalysisTable::new(
        "cohort_trajectories",
        &["group", "t", "papers", "mean_citations", "std_err"],
    );
    let mut summary = AnalysisTable::new(
        "cohort_groups",
        &[
            "group",
            "papers",
            "share_of_cohort",
            "mean_g_window",
            "mean_c_window",
            "mean_c_horizon",
            "mean_gain",
            "gain_ratio_to_non_giant",
        ],
    );
    let gain_of = |ps: &[PaperIdx]| {
        let g: Vec<f64> = ps
            .iter()
            .map(|&p| cumulative(p, horizon) - cumulative(p, spec.window_t as i32))
            .collect();
        mean(&g)
    };
    let base_gain = gain_of(&groups[2].1);
    for (group, members) in &groups {
        for t in 0..=horizon {
            let c: Vec<f64> = members.iter().map(|&p| cumulative(p, t)).collect();
            traj.push(vec![
                group.as_str().into(),
                t.into(),
                members.len().into(),
                mean(&c).into(),
                std_err(&c).into(),
            ]);
        }
        let gw: Vec<f64> = members.iter().map(|&p| g_t(p) as f64).collect();
        let cw: Vec<f64> = members.iter().map(|&p| cumulative(p, spec.window_t as i32)).collect();
        let ch: Vec<f64> = members.iter().map(|&p| cumulative(p, horizon)).collect();
        let gain = gain_of(members);
        let ratio = match (gain, base_gain) {
            (Some(g), Some(b)) if b > 0.0 => Some(g / b),
            _ => None,
        };
        summary.push(vec![
            group.as_str().into(),
            members.len().into(),
            fraction(members.len(), cohort.len()).into(),
            mean(&gw).into(),
            mean(&cw).into(),
            mean(&ch).into(),
            gain.into(),
            ratio.into(),
        ]);
    }
    summary.note("cohort_size", cohort.len());
    summary.note("band", [lo, hi]);
    summary.note("spec", spec);
    summary.note("reference_mean_g_window", serde_json::json!({"high_g": 31.3, "low_g": 1.0}));
    Ok(vec![summary, traj].into())
}
