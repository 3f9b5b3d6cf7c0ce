use std::collections::BTreeMap;

use super::{fraction, mean, AnalysisReport, AnalysisTable, Cell, PaperFilter};
use crate::corpus::Corpus;
use crate::metrics::{MetricRow, MetricTable};

const BINS_PER_DECADE: f64 = 10.0;
const DP_BINS: usize = 10;

/// Logarithmic citation bin, ten per decade; `None` for zero citations.
pub fn log_bin(c: u32) -> Option<i32> {
    (c > 0).then(|| (BINS_PER_DECADE * (c as f64).log10() + 1e-9).floor() as i32)
}

fn bin_edges(bin: i32) -> (f64, f64) {
    let lo = 10f64.powf(bin as f64 / BINS_PER_DECADE);
    let hi = 10f64.powf((bin + 1) as f64 / BINS_PER_DECADE);
    (lo, hi)
}

/// `P(G > 0)`, mean `G` and the `G` histogram within logarithmic `C` bins.
pub fn conditional_g_given_c(metrics: &MetricTable, corpus: &Corpus, filter: &PaperFilter) -> AnalysisReport {
    let filter = filter.resolve(corpus);
    #[derive(Default)]
    struct Bin {
        papers: usize,
        positive: usize,
        g_sum: u64,
        c_min: u32,
        c_max: u32,
        hist: BTreeMap<u32, usize>,
    }
    let mut bins: BTreeMap<i32, Bin> = BTreeMap::new();
    let mut zero_c = 0usize;
    for r in metrics.rows.iter().filter(|r| filter.accepts(corpus, r.paper)) {
        let Some(b) = log_bin(r.citations) else {
            zero_c += 1;
            continue;
        };
        let bin = bins.entry(b).or_insert_with(|| Bin {
            c_min: u32::MAX,
            ..Bin::default()
        });
        bin.papers += 1;
        bin.positive += (r.giant_index > 0) as usize;
        bin.g_sum += r.giant_index as u64;
        bin.c_min = bin.c_min.min(r.citations);
        bin.c_max = bin.c_max.max(r.citations);
        *bin.hist.entry(r.giant_index).or_default() += 1;
    }
    let mut summary = AnalysisTable::new(
        "conditional_g_given_c",
        &["c_bin", "c_lo", "c_hi", "c_min", "c_max", "papers", "g_positive", "p_g_positive", "mean_g"],
    );
    let mut hist = AnalysisTable::new("g_given_c_histogram", &["c_bin", "g", "papers", "p_g_given_c"]);
    for (&b, bin) in &bins {
        let (lo, hi) = bin_edges(b);
        summary.push(vec![
            b.into(),
            lo.into(),
            hi.into(),
            bin.c_min.into(),
            bin.c_max.into(),
            bin.papers.into(),
            bin.positive.into(),
            fraction(bin.positive, bin.papers).into(),
            (bin.g_sum as f64 / bin.papers as f64).into(),
        ]);
        for (&g, &n) in &bin.hist {
            hist.push(vec![b.into(), g.into(), n.into(), fraction(n, bin.papers).into()]);
        }
    }
    summary.note("bins_per_decade", BINS_PER_DECADE);
    summary.note("excluded_zero_citations", zero_c);
    summary.note("filter", &filter);
    vec![summary, hist].into()
}

#[derive(Default)]
struct TeamAcc {
    papers: usize,
    c_norm: Vec<f64>,
    g_norm: Vec<f64>,
}

impl TeamAcc {
    fn add(&mut self, r: &MetricRow) {
        self.papers += 1;
        if let Some(c) = r.c_norm {
            self.c_norm.push(c);
        }
        if r.giant_index > 0 {
            if let Some(g) = r.g_norm {
                self.g_norm.push(g);
            }
        }
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.papers.into(),
            mean(&self.c_norm).into(),
            self.g_norm.len().into(),
            mean(&self.g_norm).into(),
        ]
    }
}

/// Mean normalized `C` over all population papers and mean normalized `G`
/// over papers with `G > 0`, per team size and per field and team size.
pub fn team_size_curves(metrics: &MetricTable, corpus: &Corpus) -> AnalysisReport {
    let mut by_m: BTreeMap<u32, TeamAcc> = BTreeMap::new();
    let mut by_field: BTreeMap<(&str, u32), TeamAcc> = BTreeMap::new();
    let mut missing = 0usize;
    for r in metrics.population() {
        let Some(m) = r.team_size else {
            missing += 1;
            continue;
        };
        by_m.entry(m).or_default().add(r);
        by_field.entry((corpus.paper(r.paper).field.as_str(), m)).or_default().add(r);
    }
    let cols = ["papers", "mean_c_norm", "giant_papers", "mean_g_norm"];
    let mut t = AnalysisTable::new("team_size_curves", &[&["team_size"][..], &cols].concat());
    for (&m, acc) in &by_m {
        t.push([vec![m.into()], acc.cells()].concat());
    }
    t.note("excluded_missing_team_size", missing);
    let mut f = AnalysisTable::new("team_size_curves_by_field", &[&["field", "team_size"][..], &cols].concat());
    for (&(field, m), acc) in &by_field {
        f.push([vec![field.into(), m.into()], acc.cells()].concat());
    }
    vec![t, f].into()
}

fn dp_bin(dp: f64) -> usize {
    ((dp / 100.0 * DP_BINS as f64).floor() as usize).min(DP_BINS - 1)
}

/// Normalized giant index across disruption percentiles, the percentile
/// distribution of papers with and without a giant, and the no-giant share
/// by team size.
pub fn disruption_profile(metrics: &MetricTable) -> AnalysisReport {
    let mut g_norm: Vec<Vec<f64>> = vec![Vec::new(); DP_BINS];
    let mut papers = [0usize; DP_BINS];
    let mut with = [0usize; DP_BINS];
    let mut without = [0usize; DP_BINS];
    let mut by_team: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    let mut no_dp = 0usize;
    for r in metrics.population() {
        let has = r.focal_has_giant == Some(true);
        if let Some(m) = r.team_size {
            let e = by_team.entry(m).or_default();
            e.0 += 1;
            e.1 += (!has) as usize;
        }
        let Some(dp) = r.dp else {
            no_dp += 1;
            continue;
        };
        let b = dp_bin(dp);
        papers[b] += 1;
        if has {
            with[b] += 1;
        } else {
            without[b] += 1;
        }
        if let Some(g) = r.g_norm {
            g_norm[b].push(g);
        }
    }
    let width = 100.0 / DP_BINS as f64;
    let mut t = AnalysisTable::new(
        "disruption_g_norm",
        &["dp_bin", "dp_lo", "dp_hi", "papers", "giant_papers", "mean_g_norm"],
    );
    let mut split = AnalysisTable::new(
        "disruption_by_giant",
        &["dp_bin", "dp_lo", "dp_hi", "with_giant", "without_giant", "share_of_with_giant", "share_of_without_giant"],
    );
    let (tw, tn) = (with.iter().sum::<usize>(), without.iter().sum::<usize>());
    for b in 0..DP_BINS {
        let (lo, hi) = (b as f64 * width, (b + 1) as f64 * width);
        t.push(vec![
            b.into(),
            lo.into(),
            hi.into(),
            papers[b].into(),
            g_norm[b].len().into(),
            mean(&g_norm[b]).into(),
        ]);
        split.push(vec![
            b.into(),
            lo.into(),
            hi.into(),
            with[b].into(),
            without[b].into(),
            fraction(with[b], tw).into(),
            fraction(without[b], tn).into(),
        ]);
    }
    t.note("excluded_undefined_dp", no_dp);
    t.note("reference_thresholds", serde_json::json!({"developmental_below": 20, "disruptive_above": 80}));
    let mut team = AnalysisTable::new(
        "no_giant_by_team_size",
        &["team_size", "papers", "without_giant", "fraction_without_giant"],
    );
    for (&m, &(n, k)) in &by_team {
        team.push(vec![m.into(), n.into(), k.into(), fraction(k, n).into()]);
    }
    vec![t, split, team].into()
}
