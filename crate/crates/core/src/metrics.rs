//! Per-paper metrics derived from the corpus and the giant assignments.
//!
//! The analysis population is the set of focal papers that received a giant
//! result. Every paper gets citation, giant-index and disruption counts;
//! percentiles and field/year normalizations are computed within the
//! population only, so each cohort average is taken over exactly the papers
//! that are normalized by it.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{Author, Corpus, PaperIdx};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::giant::GiantAssignments;

/// Which papers define `⟨G⟩_{f,y}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GNormPopulation {
    /// Only papers with `G > 0`; others get no normalized value.
    #[default]
    GiantsOnly,
    All,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    /// `t` for the windowed counts `C_t` and `G_t`.
    pub window: u32,
    /// Use the self-citation filtered giant index as the headline `G`.
    pub exclude_self_citations: bool,
    pub g_norm_population: GNormPopulation,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            window: 5,
            exclude_self_citations: false,
            g_norm_population: GNormPopulation::GiantsOnly,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disruption {
    /// Subsequent papers citing the paper but none of its references.
    pub n_i: u32,
    /// Subsequent papers citing the paper and at least one reference.
    pub n_j: u32,
    /// Subsequent papers citing a reference but not the paper.
    pub n_k: u32,
}

impl Disruption {
    /// `(n_i - n_j) / (n_i + n_j + n_k)`; undefined when nobody qualifies.
    pub fn score(&self) -> Option<f64> {
        let denom = self.n_i as u64 + self.n_j as u64 + self.n_k as u64;
        (denom > 0).then(|| (self.n_i as f64 - self.n_j as f64) / denom as f64)
    }
}

struct DisruptionScratch {
    mark: Vec<u32>,
    generation: u32,
}

impl DisruptionScratch {
    fn new(n: usize) -> Self {
        DisruptionScratch {
            mark: vec![0; n],
            generation: 0,
        }
    }

    fn compute(&mut self, corpus: &Corpus, paper: PaperIdx) -> Disruption {
        if self.generation > u32::MAX - 4 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.generation = 0;
        }
        let cites_paper = self.generation + 1;
        let both = self.generation + 2;
        let refs_only = self.generation + 3;
        self.generation += 3;

        let citers = corpus.citing(paper);
        for q in citers {
            self.mark[q.get()] = cites_paper;
        }
        // Subsequent papers: published in or after the paper's year.
        let start = corpus.prefix_end(corpus.year(paper) - 1);
        let (mut n_j, mut n_k) = (0u32, 0u32);
        for &r in corpus.refs(paper) {
            let c = corpus.citing(r);
            for &q in &c[c.partition_point(|q| q.get() < start)..] {
                if q == paper {
                    continue;
                }
                let m = &mut self.mark[q.get()];
                if *m == cites_paper {
                    *m = both;
                    n_j += 1;
                } else if *m != both && *m != refs_only {
                    *m = refs_only;
                    n_k += 1;
                }
            }
        }
        Disruption {
            n_i: citers.len() as u32 - n_j,
            n_j,
            n_k,
        }
    }
}

pub fn disruption(corpus: &Corpus, paper: PaperIdx) -> Disruption {
    DisruptionScratch::new(corpus.len()).compute(corpus, paper)
}

pub fn disruption_all(corpus: &Corpus, exec: Exec) -> Vec<Disruption> {
    const CHUNK: usize = 4096;
    let n = corpus.len();
    let chunks = n.div_ceil(CHUNK);
    exec.map_range(0..chunks, |c| {
        let mut scratch = DisruptionScratch::new(n);
        (c * CHUNK..((c + 1) * CHUNK).min(n))
            .map(|i| scratch.compute(corpus, PaperIdx(i as u32)))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

fn count_giants(
    assignments: &GiantAssignments,
    corpus: &Corpus,
    mut keep: impl FnMut(PaperIdx, PaperIdx) -> bool,
) -> Vec<u32> {
    let mut g = vec![0u32; corpus.len()];
    for r in assignments.results() {
        if let Some(giant) = r.giant {
            if keep(r.focal, giant) {
                g[giant.get()] += 1;
            }
        }
    }
    g
}

/// `(G, G_t)` per paper; `G_t` counts focal papers published within `t`
/// years of the giant (equal to `G` without a window).
pub fn giant_index(
    assignments: &GiantAssignments,
    corpus: &Corpus,
    window: Option<u32>,
) -> Vec<(u32, u32)> {
    let all = count_giants(assignments, corpus, |_, _| true);
    let windowed = match window {
        Some(t) => count_giants(assignments, corpus, |f, g| {
            corpus.year(f) <= corpus.year(g) + t as i32
        }),
        None => all.clone(),
    };
    all.into_iter().zip(windowed).collect()
}

/// Whether two papers share an author under the first-initial + last-name key.
/// Papers without author lists never match.
pub fn shares_author(corpus: &Corpus, a: PaperIdx, b: PaperIdx) -> bool {
    let (xa, xb) = (&corpus.paper(a).authors, &corpus.paper(b).authors);
    if xa.is_empty() || xb.is_empty() {
        return false;
    }
    let keys: std::collections::HashSet<&Author> = xa.iter().collect();
    xb.iter().any(|x| keys.contains(x))
}

/// `G_noself`: giant counts ignoring focal papers that share an author with
/// their giant.
pub fn self_citation_filter(assignments: &GiantAssignments, corpus: &Corpus) -> Vec<u32> {
    count_giants(assignments, corpus, |f, g| !shares_author(corpus, f, g))
}

/// Percentile of `D` among same-year papers of the population, with mean
/// ranks for ties: `100 (rank - 1) / (cohort - 1)`. A single-paper cohort
/// gets 50 and is flagged.
pub fn disruption_percentile(
    scores: &[Option<f64>],
    corpus: &Corpus,
    population: &[bool],
) -> (Vec<Option<f64>>, Vec<bool>) {
    let mut dp = vec![None; scores.len()];
    let mut degenerate = vec![false; scores.len()];
    let mut cohorts: BTreeMap<i32, Vec<(f64, usize)>> = BTreeMap::new();
    for (i, s) in scores.iter().enumerate() {
        if let (Some(d), true) = (s, population[i]) {
            cohorts.entry(corpus.year(PaperIdx(i as u32))).or_default().push((*d, i));
        }
    }
    for (_, mut cohort) in cohorts {
        let n = cohort.len();
        if n == 1 {
            dp[cohort[0].1] = Some(50.0);
            degenerate[cohort[0].1] = true;
            continue;
        }
        cohort.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && cohort[end].0 == cohort[start].0 {
                end += 1;
            }
            // ranks start+1 ..= end, mean rank minus one:
            let mean_rank0 = (start + end - 1) as f64 / 2.0;
            let value = 100.0 * mean_rank0 / (n - 1) as f64;
            for &(_, i) in &cohort[start..end] {
                dp[i] = Some(value);
            }
            start = end;
        }
    }
    (dp, degenerate)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRow {
    pub paper: PaperIdx,
    /// `C`: distinct citing papers.
    pub citations: u32,
    /// `C_t`.
    pub citations_window: u32,
    /// Headline `G` (self-citation filtered when configured).
    pub giant_index: u32,
    /// Headline `G_t`.
    pub giant_index_window: u32,
    pub giant_index_all: u32,
    pub giant_index_noself: u32,
    pub disruption: Disruption,
    pub d: Option<f64>,
    pub dp: Option<f64>,
    pub dp_degenerate: bool,
    pub c_norm: Option<f64>,
    pub g_norm: Option<f64>,
    pub team_size: Option<u32>,
    /// `Some(has_giant)` for papers in the analysis population.
    pub focal_has_giant: Option<bool>,
}

impl MetricRow {
    pub fn in_population(&self) -> bool {
        self.focal_has_giant.is_some()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricTable {
    pub config: MetricsConfig,
    pub rows: Vec<MetricRow>,
}

impl MetricTable {
    pub fn row(&self, paper: PaperIdx) -> &MetricRow {
        &self.rows[paper.get()]
    }

    pub fn population(&self) -> impl Iterator<Item = &MetricRow> {
        self.rows.iter().filter(|r| r.in_population())
    }

    pub fn write_tsv(&self, corpus: &Corpus, mut w: impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "paper_id\tyear\tfield\tteam_size\tin_population\thas_giant\tC\tC_t\tG\tG_t\tG_all\tG_noself\tn_i\tn_j\tn_k\tD\tDP\tC_norm\tG_norm"
        )?;
        let f = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        for r in &self.rows {
            let p = corpus.paper(r.paper);
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                p.id,
                p.year,
                p.field,
                r.team_size.map_or_else(|| "NA".to_string(), |m| m.to_string()),
                r.in_population(),
                r.focal_has_giant.map_or_else(|| "NA".to_string(), |b| b.to_string()),
                r.citations,
                r.citations_window,
                r.giant_index,
                r.giant_index_window,
                r.giant_index_all,
                r.giant_index_noself,
                r.disruption.n_i,
                r.disruption.n_j,
                r.disruption.n_k,
                f(r.d),
                f(r.dp),
                f(r.c_norm),
                f(r.g_norm),
            )?;
        }
        w.flush()
    }

    pub fn write_jsonl(&self, corpus: &Corpus, mut w: impl Write) -> std::io::Result<()> {
        for r in &self.rows {
            let p = corpus.paper(r.paper);
            let v = serde_json::json!({
                "paper_id": p.id,
                "year": p.year,
                "field": p.field,
                "team_size": r.team_size,
                "in_population": r.in_population(),
                "has_giant": r.focal_has_giant,
                "C": r.citations,
                "C_t": r.citations_window,
                "G": r.giant_index,
                "G_t": r.giant_index_window,
                "G_all": r.giant_index_all,
                "G_noself": r.giant_index_noself,
                "n_i": r.disruption.n_i,
                "n_j": r.disruption.n_j,
                "n_k": r.disruption.n_k,
                "D": r.d,
                "DP": r.dp,
                "C_norm": r.c_norm,
                "G_norm": r.g_norm,
            });
            serde_json::to_writer(&mut w, &v)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }
}

/// Divides `C` and `G` by their `(field, year)` cohort means over the
/// population. Papers with an unknown field are left unnormalized.
pub fn normalize_by_field_year(rows: &mut [MetricRow], corpus: &Corpus, mode: GNormPopulation) {
    #[derive(Default)]
    struct Acc {
        c_sum: f64,
        c_n: usize,
        g_sum: f64,
        g_n: usize,
    }
    let include_g = |r: &MetricRow| match mode {
        GNormPopulation::GiantsOnly => r.giant_index > 0,
        GNormPopulation::All => true,
    };
    let mut cohorts: BTreeMap<(&str, i32), Acc> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.in_population()) {
        let p = corpus.paper(r.paper);
        if !p.has_known_field() {
            continue;
        }
        let acc = cohorts.entry((p.field.as_str(), p.year)).or_default();
        acc.c_sum += r.citations as f64;
        acc.c_n += 1;
        if include_g(r) {
            acc.g_sum += r.giant_index as f64;
            acc.g_n += 1;
        }
    }
    for r in rows.iter_mut() {
        r.c_norm = None;
        r.g_norm = None;
        if !r.in_population() {
            continue;
        }
        let p = corpus.paper(r.paper);
        let Some(acc) = cohorts.get(&(p.field.as_str(), p.year)) else {
            continue;
        };
        let c_mean = acc.c_sum / acc.c_n as f64;
        if c_mean > 0.0 {
            r.c_norm = Some(r.citations as f64 / c_mean);
        }
        if include_g(r) && acc.g_n > 0 {
            let g_mean = acc.g_sum / acc.g_n as f64;
            if g_mean > 0.0 {
                r.g_norm = Some(r.giant_index as f64 / g_mean);
            }
        }
    }
}

/// Full metric table, one row per corpus paper.
pub fn compute_metrics(
    corpus: &Corpus,
    assignments: &GiantAssignments,
    config: &MetricsConfig,
    exec: Exec,
) -> Result<MetricTable> {
    if config.window == 0 {
        return Err(Error::InvalidArgument("metric window must be positive".into()));
    }
    let n = corpus.len();
    let window = config.window as i32;
    let g_pairs = giant_index(assignments, corpus, Some(config.window));
    let g_noself = self_citation_filter(assignments, corpus);
    let g_noself_window = count_giants(assignments, corpus, |f, g| {
        corpus.year(f) <= corpus.year(g) + window && !shares_author(corpus, f, g)
    });
    let disruptions = disruption_all(corpus, exec);

    let mut population = vec![false; n];
    let mut has_giant = vec![None; n];
    for r in assignments.results() {
        population[r.focal.get()] = true;
        has_giant[r.focal.get()] = Some(r.giant.is_some());
    }
    let scores: Vec<Option<f64>> = disruptions.iter().map(Disruption::score).collect();
    let (dp, degenerate) = disruption_percentile(&scores, corpus, &population);

    let mut rows: Vec<MetricRow> = (0..n)
        .map(|i| {
            let p = PaperIdx(i as u32);
            let year = corpus.year(p);
            let citers = corpus.citing(p);
            let end = corpus.prefix_end(year + window);
            let c_window = citers.partition_point(|q| q.get() < end) as u32;
            let (g_all, g_all_t) = g_pairs[i];
            let (g, g_t) = if config.exclude_self_citations {
                (g_noself[i], g_noself_window[i])
            } else {
                (g_all, g_all_t)
            };
            MetricRow {
                paper: p,
                citations: citers.len() as u32,
                citations_window: c_window,
                giant_index: g,
                giant_index_window: g_t,
                giant_index_all: g_all,
                giant_index_noself: g_noself[i],
                disruption: disruptions[i],
                d: scores[i],
                dp: dp[i],
                dp_degenerate: degenerate[i],
                c_norm: None,
                g_norm: None,
                team_size: corpus.paper(p).team_size(),
                focal_has_giant: has_giant[i],
            }
        })
        .collect();
    normalize_by_field_year(&mut rows, corpus, config.g_norm_population);
    Ok(MetricTable {
        config: config.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{IngestConfig, PaperRecord};
    use crate::giant::GiantResult;

    fn corpus(recs: Vec<PaperRecord>) -> Corpus {
        Corpus::from_records(recs, &IngestConfig::default()).unwrap()
    }

    fn result(focal: PaperIdx, giant: Option<PaperIdx>) -> GiantResult {
        GiantResult {
            focal,
            giant,
            stop_n: 1,
            percolation_reached: giant.is_some(),
            k_max: giant.is_some() as u32,
            edge_count: 0,
            node_count: 0,
            tie_break: None,
            refs: Vec::new(),
        }
    }

    #[test]
    fn maximal_disruption_when_references_ignored() {
        let c = corpus(vec![
            PaperRecord::new("R", 1990),
            PaperRecord::new("P", 1991).with_refs(["R"]),
            PaperRecord::new("a", 1992).with_refs(["P"]),
            PaperRecord::new("b", 1993).with_refs(["P"]),
        ]);
        let d = disruption(&c, c.idx_of("P").unwrap());
        assert_eq!(d, Disruption { n_i: 2, n_j: 0, n_k: 0 });
        assert_eq!(d.score(), Some(1.0));
    }

    #[test]
    fn disruption_arithmetic() {
        let c = corpus(vec![
            PaperRecord::new("old", 1980).with_refs(Vec::<String>::new()),
            PaperRecord::new("R", 1990),
            PaperRecord::new("pre", 1990).with_refs(["R"]),
            PaperRecord::new("P", 1991).with_refs(["R"]),
            PaperRecord::new("i1", 1992).with_refs(["P"]),
            PaperRecord::new("i2", 1992).with_refs(["P"]),
            PaperRecord::new("j1", 1993).with_refs(["P", "R"]),
            PaperRecord::new("k1", 1994).with_refs(["R"]),
        ]);
        let d = disruption(&c, c.idx_of("P").unwrap());
        assert_eq!(d, Disruption { n_i: 2, n_j: 1, n_k: 1 });
        assert_eq!(d.score(), Some(0.25));
        let none = disruption(&c, c.idx_of("old").unwrap());
        assert_eq!(none.score(), None);
    }

    #[test]
    fn giant_index_counts_and_windows() {
        let c = corpus(vec![
            PaperRecord::new("G", 1990),
            PaperRecord::new("f1", 1991),
            PaperRecord::new("f2", 1993),
            PaperRecord::new("f3", 2000),
        ]);
        let g = c.idx_of("G").unwrap();
        let a = GiantAssignments::from_results(
            ["f1", "f2", "f3"]
                .iter()
                .map(|f| result(c.idx_of(f).unwrap(), Some(g)))
                .collect(),
        );
        let gi = giant_index(&a, &c, Some(5));
        assert_eq!(gi[g.get()], (3, 2));
        assert_eq!(gi[c.idx_of("f1").unwrap().get()], (0, 0));
    }

    #[test]
    fn self_citations_removed_by_author_key() {
        let c = corpus(vec![
            PaperRecord::new("G", 1990).with_authors(&["J.Smith", "A.Doe"]),
            PaperRecord::new("self", 1991).with_authors(&["John Smith"]),
            PaperRecord::new("other", 1991).with_authors(&["K.Jones"]),
            PaperRecord::new("anon", 1991),
        ]);
        let g = c.idx_of("G").unwrap();
        let a = GiantAssignments::from_results(
            ["self", "other", "anon"]
                .iter()
                .map(|f| result(c.idx_of(f).unwrap(), Some(g)))
                .collect(),
        );
        assert_eq!(self_citation_filter(&a, &c)[g.get()], 2);
        assert_eq!(giant_index(&a, &c, None)[g.get()].0, 3);
    }

    fn cohort_corpus(n: usize) -> Corpus {
        corpus((0..n).map(|i| PaperRecord::new(format!("p{i}"), 2000)).collect())
    }

    #[test]
    fn percentile_rank_scaling() {
        let c = cohort_corpus(5);
        let scores: Vec<Option<f64>> = [-0.5, -0.1, 0.0, 0.3, 0.9].iter().map(|&x| Some(x)).collect();
        let (dp, deg) = disruption_percentile(&scores, &c, &[true; 5]);
        let dp: Vec<f64> = dp.into_iter().map(Option::unwrap).collect();
        assert_eq!(dp, [0.0, 25.0, 50.0, 75.0, 100.0]);
        assert!(deg.iter().all(|&d| !d));
    }

    #[test]
    fn percentile_ties_and_degenerate_cohorts() {
        let c = cohort_corpus(4);
        let (dp, _) = disruption_percentile(&[Some(0.2); 4], &c, &[true; 4]);
        assert!(dp.iter().all(|&v| v == Some(50.0)));
        let (dp, deg) = disruption_percentile(&[Some(0.2), None, Some(0.1), Some(0.3)], &c, &[true, true, false, false]);
        assert_eq!(dp[0], Some(50.0));
        assert!(deg[0]);
        assert_eq!(dp[1], None);
        assert_eq!(dp[2], None);
    }

    fn row(paper: u32, c: u32, g: u32) -> MetricRow {
        MetricRow {
            paper: PaperIdx(paper),
            citations: c,
            citations_window: c,
            giant_index: g,
            giant_index_window: g,
            giant_index_all: g,
            giant_index_noself: g,
            disruption: Disruption::default(),
            d: None,
            dp: None,
            dp_degenerate: false,
            c_norm: None,
            g_norm: None,
            team_size: None,
            focal_has_giant: Some(true),
        }
    }

    #[test]
    fn normalization_by_cohort_mean() {
        let c = corpus(vec![
            PaperRecord::new("a", 2000).with_field("x"),
            PaperRecord::new("b", 2000).with_field("x"),
            PaperRecord::new("s", 2001).with_field("x"),
            PaperRecord::new("u", 2000),
        ]);
        let mut rows = vec![row(0, 10, 0), row(1, 30, 4), row(2, 5, 1), row(3, 7, 2)];
        normalize_by_field_year(&mut rows, &c, GNormPopulation::GiantsOnly);
        assert_eq!(rows[0].c_norm, Some(0.5));
        assert_eq!(rows[1].c_norm, Some(1.5));
        assert_eq!(rows[2].c_norm, None);
        assert_eq!(rows[3].c_norm, Some(1.0));
        assert_eq!(rows[0].g_norm, None);
        assert_eq!(rows[1].g_norm, Some(1.0));

        normalize_by_field_year(&mut rows, &c, GNormPopulation::All);
        assert_eq!(rows[0].g_norm, Some(0.0));
        assert_eq!(rows[1].g_norm, Some(2.0));
    }

    #[test]
    fn zero_mean_cohort_is_undefined() {
        let c = corpus(vec![PaperRecord::new("a", 2000).with_field("x")]);
        let mut rows = vec![row(0, 0, 0)];
        normalize_by_field_year(&mut rows, &c, GNormPopulation::All);
        assert_eq!(rows[0].c_norm, None);
        assert_eq!(rows[0].g_norm, None);
    }
}
