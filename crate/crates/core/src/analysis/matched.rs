use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{fraction, mean, median, AnalysisReport, AnalysisTable, Cell};
use crate::corpus::{Corpus, PaperIdx};
use crate::error::{Error, Result};
use crate::metrics::MetricTable;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    /// Relative citation band: controls have `|C - C_target| <= band * C_target`.
    pub band: f64,
    /// Minimum count on both sides before a ratio-curve bin is reported.
    pub min_bin_count: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            band: 0.2,
            min_bin_count: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchedTarget {
    pub target: PaperIdx,
    pub controls: Vec<PaperIdx>,
}

/// Research papers of the target's year and field whose citation count lies
/// in the band around the target's, target excluded.
pub fn match_controls(
    targets: &[PaperIdx],
    metrics: &MetricTable,
    corpus: &Corpus,
    band: f64,
) -> Result<Vec<MatchedTarget>> {
    if !(band.is_finite() && band >= 0.0) {
        return Err(Error::InvalidArgument(format!("citation band {band}")));
    }
    let mut pools: BTreeMap<(i32, &str), Vec<(u32, PaperIdx)>> = BTreeMap::new();
    for p in corpus.indices().filter(|&p| corpus.paper(p).pub_type.is_research()) {
        let r = corpus.paper(p);
        pools
            .entry((r.year, r.field.as_str()))
            .or_default()
            .push((metrics.row(p).citations, p));
    }
    for pool in pools.values_mut() {
        pool.sort_unstable();
    }
    Ok(targets
        .iter()
        .map(|&t| {
            let r = corpus.paper(t);
            let c = metrics.row(t).citations as f64;
            let (lo, hi) = ((c * (1.0 - band)).ceil().max(0.0) as u32, (c * (1.0 + band)).floor() as u32);
            let controls = pools
                .get(&(r.year, r.field.as_str()))
                .map(|pool| {
                    let start = pool.partition_point(|&(x, _)| x < lo);
                    let end = pool.partition_point(|&(x, _)| x <= hi);
                    let mut v: Vec<PaperIdx> = pool[start..end].iter().map(|&(_, p)| p).filter(|&p| p != t).collect();
                    v.sort_unstable();
                    v
                })
                .unwrap_or_default();
            MatchedTarget { target: t, controls }
        })
        .collect())
}

/// Power-of-two bins for `G`: 0, 1, 2-3, 4-7, ...
fn g_bin(g: u32) -> u32 {
    if g == 0 {
        0
    } else {
        u32::BITS - g.leading_zeros()
    }
}

fn g_bin_range(b: u32) -> (u32, u32) {
    if b == 0 {
        (0, 0)
    } else {
        (1 << (b - 1), (1u64 << b).saturating_sub(1).min(u32::MAX as u64) as u32)
    }
}

/// Targets against citation-matched controls: per-target comparison,
/// group medians, and the relative probability curve `P(G) / P_C(G)`.
pub fn matched_cohort_compare(
    targets: &[PaperIdx],
    metrics: &MetricTable,
    corpus: &Corpus,
    config: &MatchConfig,
) -> Result<AnalysisReport> {
    let mut targets = targets.to_vec();
    targets.sort_unstable();
    targets.dedup();
    let matched = match_controls(&targets, metrics, corpus, config.band)?;
    let g = |p: PaperIdx| metrics.row(p).giant_index;

    let mut per_target = AnalysisTable::new(
        "matched_targets",
        &["target_id", "year", "field", "citations", "g", "controls", "control_median_g", "control_mean_g", "comparison"],
    );
    let mut pairs = AnalysisTable::new(
        "matched_sets",
        &["target_id", "control_id", "year", "field", "citations", "g"],
    );
    let (mut higher, mut lower, mut equal, mut empty) = (0usize, 0usize, 0usize, 0usize);
    let mut target_g = Vec::new();
    let mut control_g = Vec::new();
    for m in &matched {
        let r = corpus.paper(m.target);
        let cg: Vec<f64> = m.controls.iter().map(|&c| g(c) as f64).collect();
        let med = median(&cg);
        let tg = g(m.target) as f64;
        let comparison = match med {
            None => {
                empty += 1;
                "no_controls"
            }
            Some(x) if tg > x => {
                higher += 1;
                "higher"
            }
            Some(x) if tg < x => {
                lower += 1;
                "lower"
            }
            Some(_) => {
                equal += 1;
                "equal"
            }
        };
        if med.is_some() {
            target_g.push(tg);
            control_g.extend_from_slice(&cg);
        }
        per_target.push(vec![
            r.id.as_str().into(),
            r.year.into(),
            r.field.as_str().into(),
            metrics.row(m.target).citations.into(),
            g(m.target).into(),
            m.controls.len().into(),
            med.into(),
            mean(&cg).into(),
            comparison.into(),
        ]);
        for &c in &m.controls {
            let cr = corpus.paper(c);
            pairs.push(vec![
                r.id.as_str().into(),
                cr.id.as_str().into(),
                cr.year.into(),
                cr.field.as_str().into(),
                metrics.row(c).citations.into(),
                g(c).into(),
            ]);
        }
    }
    let matched_n = matched.len() - empty;
    let (mt, mc) = (median(&target_g), median(&control_g));
    let ratio = match (mt, mc) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    let mut summary = AnalysisTable::new(
        "matched_summary",
        &[
            "targets",
            "matched_targets",
            "flagged_no_controls",
            "fraction_higher",
            "fraction_lower",
            "fraction_equal",
            "median_g_targets",
            "median_g_controls",
            "median_ratio",
        ],
    );
    summary.push(vec![
        matched.len().into(),
        matched_n.into(),
        empty.into(),
        fraction(higher, matched_n).into(),
        fraction(lower, matched_n).into(),
        fraction(equal, matched_n).into(),
        mt.into(),
        mc.into(),
        ratio.into(),
    ]);
    summary.note("config", config);
    summary.note("reference_fraction_higher", 0.67);
    summary.note(
        "reference_median_g",
        serde_json::json!({
            "targets": {"physics": 58.0, "chemistry": 51.0, "medicine": 59.5},
            "controls": {"physics": 20.0, "chemistry": 22.0, "medicine": 24.0},
        }),
    );

    let mut tb: BTreeMap<u32, usize> = BTreeMap::new();
    let mut cb: BTreeMap<u32, usize> = BTreeMap::new();
    for &x in &target_g {
        *tb.entry(g_bin(x as u32)).or_default() += 1;
    }
    for &x in &control_g {
        *cb.entry(g_bin(x as u32)).or_default() += 1;
    }
    let mut curve = AnalysisTable::new(
        "matched_ratio_curve",
        &["g_bin", "g_lo", "g_hi", "targets", "controls", "p_target", "p_control", "ratio"],
    );
    let all_bins: std::collections::BTreeSet<u32> = tb.keys().chain(cb.keys()).copied().collect();
    for b in all_bins {
        let (nt, nc) = (tb.get(&b).copied().unwrap_or(0), cb.get(&b).copied().unwrap_or(0));
        let (pt, pc) = (fraction(nt, target_g.len()), fraction(nc, control_g.len()));
        let ratio = if nt >= config.min_bin_count && nc >= config.min_bin_count {
            match (pt, pc) {
                (Some(a), Some(b)) => Cell::from(a / b),
                _ => Cell::Na,
            }
        } else {
            Cell::Na
        };
        let (lo, hi) = g_bin_range(b);
        curve.push(vec![b.into(), lo.into(), hi.into(), nt.into(), nc.into(), pt.into(), pc.into(), ratio]);
    }
    Ok(vec![summary, per_target, curve, pairs].into())
}
