#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use lineage_core::cocite::CoCitationSnapshot;
use lineage_core::corpus::{Corpus, IngestConfig, PaperIdx, PaperRecord};
use lineage_core::giant::{
    assign_all_giants, build_vote_subnetwork, find_percolation_n, identify_giant, GiantAssignments, GiantConfig,
};
use lineage_core::metrics::{compute_metrics, shares_author, MetricTable, MetricsConfig};
use lineage_core::synthgen::{generate, GeneratorConfig};
use lineage_core::Exec;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus(records: Vec<PaperRecord>) -> Corpus {
    Corpus::from_records(records, &IngestConfig::default()).unwrap()
}

pub fn synthetic(cfg: &GeneratorConfig) -> (Vec<PaperRecord>, Corpus) {
    let g = generate(cfg).unwrap();
    let c = corpus(g.records.clone());
    (g.records, c)
}

pub fn pipeline(c: &Corpus, giant: &GiantConfig, metrics: &MetricsConfig, exec: Exec) -> (GiantAssignments, MetricTable) {
    let (lo, hi) = c.year_bounds().unwrap();
    let a = assign_all_giants(c, lo, hi, giant, exec).unwrap();
    let m = compute_metrics(c, &a, metrics, exec).unwrap();
    (a, m)
}

/// Violations of the per-paper metric invariants.
pub fn metric_violations(c: &Corpus, a: &GiantAssignments, m: &MetricTable) -> Vec<String> {
    let mut bad = Vec::new();
    let mut self_giant: BTreeMap<PaperIdx, u32> = BTreeMap::new();
    for r in a.results() {
        if let Some(g) = r.giant {
            if shares_author(c, r.focal, g) {
                *self_giant.entry(g).or_default() += 1;
            }
        }
    }
    let mut cohorts: BTreeMap<(String, i32), (f64, usize)> = BTreeMap::new();
    for row in &m.rows {
        let id = c.id(row.paper);
        if row.giant_index > row.citations || row.giant_index_all > row.citations {
            bad.push(format!("{id}: G {} > C {}", row.giant_index, row.citations));
        }
        if row.giant_index_noself > row.giant_index_all {
            bad.push(format!("{id}: G_noself {} > G {}", row.giant_index_noself, row.giant_index_all));
        }
        let injected = self_giant.get(&row.paper).copied().unwrap_or(0);
        if row.giant_index_all - row.giant_index_noself.min(row.giant_index_all) != injected {
            bad.push(format!("{id}: G - G_noself differs from {injected} self-giant citers"));
        }
        if let Some(d) = row.d {
            if !(-1.0..=1.0).contains(&d) {
                bad.push(format!("{id}: D {d}"));
            }
        }
        if let Some(dp) = row.dp {
            if !(0.0..=100.0).contains(&dp) {
                bad.push(format!("{id}: DP {dp}"));
            }
        }
        if let Some(cn) = row.c_norm {
            let p = c.paper(row.paper);
            let e = cohorts.entry((p.field.clone(), p.year)).or_default();
            e.0 += cn;
            e.1 += 1;
        }
    }
    for ((field, year), (sum, n)) in cohorts {
        let mean = sum / n as f64;
        if (mean - 1.0).abs() > 1e-12 {
            bad.push(format!("({field}, {year}): mean C_norm {mean}"));
        }
    }
    bad
}

/// Neighbors of `r` by adjusted weight descending, then index, as the vote
/// order is defined: own-reference pairs lose one co-citation when excluded.
pub fn naive_vote_list(s: &CoCitationSnapshot, r: PaperIdx, refs: &BTreeSet<PaperIdx>, exclude_own: bool) -> Vec<PaperIdx> {
    let mut v: Vec<(u32, PaperIdx)> = s
        .neighbors(r)
        .map(|(n, w)| (if exclude_own && refs.contains(&n) { w - 1 } else { w }, n))
        .filter(|&(w, _)| w > 0)
        .collect();
    v.sort_by_key(|&(w, n)| (std::cmp::Reverse(w), n));
    v.into_iter().map(|(_, n)| n).collect()
}

pub fn naive_edges(lists: &BTreeMap<PaperIdx, Vec<PaperIdx>>, refs: &BTreeSet<PaperIdx>, n: usize) -> BTreeSet<(PaperIdx, PaperIdx)> {
    let mut e = BTreeSet::new();
    for (&r, list) in lists {
        for &x in list.iter().take(n) {
            if refs.contains(&x) {
                e.insert((r.min(x), r.max(x)));
            }
        }
    }
    e
}

/// Checks one reference subnetwork. Returns the number of budgets examined.
pub fn check_percolation(s: &CoCitationSnapshot, c: &Corpus, refs: &[PaperIdx], cfg: &GiantConfig) -> Result<usize, String> {
    let set: BTreeSet<PaperIdx> = refs.iter().copied().collect();
    let lists: BTreeMap<PaperIdx, Vec<PaperIdx>> =
        set.iter().map(|&r| (r, naive_vote_list(s, r, &set, cfg.exclude_own_refs))).collect();
    let nodes = if cfg.count_isolated_refs {
        set.len()
    } else {
        lists.values().filter(|l| !l.is_empty()).count()
    };
    let max_len = lists.values().map(Vec::len).max().unwrap_or(0).max(1);
    let perc = find_percolation_n(s, refs, cfg);
    let mut prev: BTreeSet<(PaperIdx, PaperIdx)> = BTreeSet::new();
    let mut first_cross = None;
    for n in 1..=max_len + 1 {
        let sub = build_vote_subnetwork(s, refs, n as u32, cfg);
        let got: BTreeSet<(PaperIdx, PaperIdx)> = sub.edges.iter().map(|e| (e.a, e.b)).collect();
        let want = naive_edges(&lists, &set, n);
        if got != want {
            return Err(format!("n={n}: edges {got:?}, naive {want:?}"));
        }
        if !prev.is_subset(&got) {
            return Err(format!("n={n}: edges(n-1) not contained in edges(n)"));
        }
        if sub.node_count as usize != nodes {
            return Err(format!("n={n}: node count {} vs {nodes}", sub.node_count));
        }
        if sub.above_threshold() != (2 * want.len() > nodes) {
            return Err(format!("n={n}: threshold flag"));
        }
        if first_cross.is_none() && 2 * want.len() > nodes && !naive_edges(&lists, &set, 1).is_empty() {
            first_cross = Some(n);
        }
        prev = got;
    }
    let at_one = naive_edges(&lists, &set, 1);
    let res = identify_giant(PaperIdx(0), &perc, c);
    if res.giant.is_none() != at_one.is_empty() {
        return Err(format!("giant {:?} with {} edges at n=1", res.giant, at_one.len()));
    }
    let expected_n = if at_one.is_empty() {
        1
    } else {
        first_cross.unwrap_or(max_len)
    };
    if perc.subnetwork.n as usize != expected_n || perc.percolation_reached != first_cross.is_some() {
        return Err(format!(
            "stop_n {} reached {}, expected {expected_n} reached {}",
            perc.subnetwork.n,
            perc.percolation_reached,
            first_cross.is_some()
        ));
    }
    if perc.percolation_reached && perc.subnetwork.n > 1 {
        let before = build_vote_subnetwork(s, refs, perc.subnetwork.n - 1, cfg);
        if before.above_threshold() {
            return Err("threshold already crossed one budget earlier".into());
        }
    }
    Ok(max_len + 1)
}

/// Random small co-citation networks and reference subsets drawn from them.
pub struct SubnetworkInstances {
    rng: ChaCha8Rng,
}

impl SubnetworkInstances {
    pub fn new(seed: u64) -> Self {
        SubnetworkInstances {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn network(&mut self) -> Corpus {
        let rng = &mut self.rng;
        let base = rng.random_range(8..40);
        let ids: Vec<String> = (0..base).map(|i| format!("b{i:03}")).collect();
        let mut recs: Vec<PaperRecord> = ids.iter().map(|id| PaperRecord::new(id.clone(), 2000)).collect();
        let hubs: Vec<&String> = ids.iter().take(rng.random_range(1..=base.min(6))).collect();
        for k in 0..rng.random_range(5..80) {
            let m = rng.random_range(2..7);
            let mut refs: Vec<String> = Vec::new();
            while refs.len() < m {
                let pick = if rng.random::<f64>() < 0.4 {
                    (*hubs.choose(rng).unwrap()).clone()
                } else {
                    ids.choose(rng).unwrap().clone()
                };
                if !refs.contains(&pick) {
                    refs.push(pick);
                }
            }
            recs.push(PaperRecord::new(format!("c{k:03}"), 2001).with_refs(refs));
        }
        corpus(recs)
    }

    pub fn ref_set(&mut self, c: &Corpus) -> Vec<PaperIdx> {
        let base: Vec<PaperIdx> = c.indices().filter(|&p| c.year(p) == 2000).collect();
        let k = self.rng.random_range(2..=base.len().min(14));
        let mut v: Vec<PaperIdx> = base.choose_multiple(&mut self.rng, k).copied().collect();
        v.sort_unstable();
        v
    }

    pub fn config(&mut self) -> GiantConfig {
        GiantConfig {
            exclude_own_refs: self.rng.random(),
            count_isolated_refs: self.rng.random_bool(0.8),
            ..GiantConfig::default()
        }
    }
}

/// Hand-built instance: references a..f, outside papers x and y.
///
/// Vote lists (adjusted weights): a: b(3) c(2); b: a; c: a(2) d(1);
/// d: x(2) c(1) e(1); e: d; f: y. At n = 1 the edges are ab, ac, de
/// (2E = 6, not above N = 6); at n = 2 the vote c->d adds cd. Degrees are
/// then a 2, c 2, d 2 and a wins on weight, 5 against 3 and 2.
pub fn hand_toy() -> Vec<PaperRecord> {
    let mut recs: Vec<PaperRecord> = ["a", "b", "c", "d", "e", "f", "x", "y"]
        .iter()
        .map(|id| PaperRecord::new(*id, 2000))
        .collect();
    let mut k = 0;
    let mut cite = |refs: [&str; 2], times: usize, recs: &mut Vec<PaperRecord>| {
        for _ in 0..times {
            recs.push(PaperRecord::new(format!("k{k:02}"), 2001).with_refs(refs));
            k += 1;
        }
    };
    cite(["a", "b"], 3, &mut recs);
    cite(["a", "c"], 2, &mut recs);
    cite(["c", "d"], 1, &mut recs);
    cite(["d", "x"], 2, &mut recs);
    cite(["d", "e"], 1, &mut recs);
    cite(["f", "y"], 1, &mut recs);
    recs.push(PaperRecord::new("focal", 2002).with_refs(["a", "b", "c", "d", "e", "f"]));
    recs
}

/// The most cited reference is co-cited only with outside papers, while two
/// minor references are tightly co-cited with each other.
pub fn isolated_top_cited() -> Vec<PaperRecord> {
    let mut recs = vec![];
    for id in ["top", "p", "q", "u1", "u2"] {
        recs.push(PaperRecord::new(id, 2000));
    }
    for k in 0..6 {
        recs.push(PaperRecord::new(format!("z{k}"), 2000));
        recs.push(PaperRecord::new(format!("t{k}"), 2001).with_refs(["top".to_string(), format!("z{k}")]));
    }
    for k in 0..3 {
        recs.push(PaperRecord::new(format!("c{k}"), 2001).with_refs(["p", "q"]));
    }
    recs.push(PaperRecord::new("focal", 2002).with_refs(["top", "p", "q", "u1", "u2"]));
    recs
}
