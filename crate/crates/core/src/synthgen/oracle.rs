//! Brute-force reference implementation keyed by string ids.
//!
//! Everything is recomputed from the raw records with ordered maps: filtering,
//! per-year co-citation counts, explicit top-`n` lists for every budget, and
//! the citation counts. Only meant for corpora of a few thousand papers.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::corpus::{Corpus, PaperRecord, PubType};
use crate::error::{Error, Result};
use crate::giant::{GiantAssignments, GiantConfig};
use crate::metrics::MetricTable;

pub const DEFAULT_ORACLE_CAP: usize = 2000;

#[derive(Clone, Debug)]
pub struct OracleConfig {
    pub giant: GiantConfig,
    pub window: u32,
    pub cap: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            giant: GiantConfig::default(),
            window: 5,
            cap: DEFAULT_ORACLE_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleGiant {
    pub giant: Option<String>,
    pub stop_n: u32,
    pub percolation_reached: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OracleCounts {
    pub c: u32,
    pub c_window: u32,
    pub g: u32,
    pub g_window: u32,
    pub g_noself: u32,
    pub n_i: u32,
    pub n_j: u32,
    pub n_k: u32,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct OracleOutput {
    pub giants: BTreeMap<String, OracleGiant>,
    pub counts: BTreeMap<String, OracleCounts>,
}

struct Paper<'a> {
    year: i32,
    record: &'a PaperRecord,
    refs: BTreeSet<&'a str>,
    eligible: bool,
}

fn prepare(records: &[PaperRecord]) -> BTreeMap<&str, Paper<'_>> {
    let years: BTreeMap<&str, i32> = records.iter().map(|r| (r.id.as_str(), r.year)).collect();
    records
        .iter()
        .map(|r| {
            let mut listed = BTreeSet::new();
            let mut refs = BTreeSet::new();
            for x in &r.references {
                if x == &r.id {
                    continue;
                }
                match years.get(x.as_str()) {
                    Some(&y) if y > r.year => {}
                    Some(_) => {
                        listed.insert(x.as_str());
                        refs.insert(x.as_str());
                    }
                    None => {
                        listed.insert(x.as_str());
                    }
                }
            }
            let research = matches!(r.pub_type, PubType::Article | PubType::Letter);
            let paper = Paper {
                year: r.year,
                record: r,
                refs,
                eligible: research && listed.len() >= 5,
            };
            (r.id.as_str(), paper)
        })
        .collect()
}

type Weights<'a> = BTreeMap<(&'a str, &'a str), u32>;

fn weights_through<'a>(papers: &BTreeMap<&'a str, Paper<'a>>, year: i32) -> Weights<'a> {
    let mut w = Weights::new();
    for p in papers.values().filter(|p| p.year <= year) {
        let refs: Vec<&str> = p.refs.iter().copied().collect();
        for i in 0..refs.len() {
            for j in 0..refs.len() {
                if i != j {
                    *w.entry((refs[i], refs[j])).or_insert(0) += 1;
                }
            }
        }
    }
    w
}

fn oracle_giant<'a>(
    focal: &Paper<'a>,
    weights: &Weights<'a>,
    papers: &BTreeMap<&'a str, Paper<'a>>,
    config: &GiantConfig,
) -> OracleGiant {
    let refs: Vec<&str> = focal.refs.iter().copied().collect();
    let in_refs = |x: &str| focal.refs.contains(x);
    let adjusted = |a: &str, b: &str| -> u32 {
        let w = weights.get(&(a, b)).copied().unwrap_or(0);
        if config.exclude_own_refs && in_refs(a) && in_refs(b) {
            w.saturating_sub(1)
        } else {
            w
        }
    };
    // Full vote list of each reference: neighbors by weight, then older, then id.
    let lists: Vec<Vec<&str>> = refs
        .iter()
        .map(|&r| {
            let mut nb: Vec<(u32, i32, &str)> = weights
                .range((r, "")..)
                .take_while(|((a, _), _)| *a == r)
                .map(|(&(_, b), _)| (adjusted(r, b), papers[b].year, b))
                .filter(|&(w, _, _)| w > 0)
                .collect();
            nb.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(y.2)));
            nb.into_iter().map(|(_, _, b)| b).collect()
        })
        .collect();
    let nodes = if config.count_isolated_refs {
        refs.len()
    } else {
        lists.iter().filter(|l| !l.is_empty()).count()
    };
    let max_len = lists.iter().map(Vec::len).max().unwrap_or(0).max(1) as u32;

    let edges_at = |n: u32| -> BTreeSet<(usize, usize)> {
        let mut e = BTreeSet::new();
        for (i, list) in lists.iter().enumerate() {
            for &b in list.iter().take(n as usize) {
                if let Some(j) = refs.iter().position(|&x| x == b) {
                    e.insert((i.min(j), i.max(j)));
                }
            }
        }
        e
    };

    let mut n = 1;
    let mut reached = false;
    let mut edges = edges_at(1);
    if edges.is_empty() {
        return OracleGiant {
            giant: None,
            stop_n: 1,
            percolation_reached: false,
        };
    }
    loop {
        if 2 * edges.len() > nodes {
            reached = true;
            break;
        }
        if n >= max_len {
            break;
        }
        n += 1;
        edges = edges_at(n);
    }

    let mut degree = vec![0u32; refs.len()];
    let mut strength = vec![0u64; refs.len()];
    for &(i, j) in &edges {
        let w = adjusted(refs[i], refs[j]) as u64;
        for v in [i, j] {
            degree[v] += 1;
            strength[v] += w;
        }
    }
    let best = (0..refs.len())
        .max_by(|&x, &y| {
            degree[x]
                .cmp(&degree[y])
                .then(strength[x].cmp(&strength[y]))
                .then(papers[refs[y]].year.cmp(&papers[refs[x]].year))
                .then(refs[y].cmp(refs[x]))
        })
        .expect("non-empty references");
    OracleGiant {
        giant: Some(refs[best].to_string()),
        stop_n: n,
        percolation_reached: reached,
    }
}

fn author_keys(r: &PaperRecord) -> BTreeSet<(char, String)> {
    r.authors
        .iter()
        .map(|a| (a.initial.to_ascii_lowercase(), a.last_name.to_lowercase()))
        .collect()
}

/// Giants of every eligible paper plus per-paper counts.
pub fn run_oracle(records: &[PaperRecord], config: &OracleConfig) -> Result<OracleOutput> {
    if records.len() > config.cap {
        return Err(Error::OracleCap {
            papers: records.len(),
            cap: config.cap,
        });
    }
    let papers = prepare(records);
    let years: BTreeSet<i32> = papers.values().map(|p| p.year).collect();
    let mut out = OracleOutput::default();
    for &y in &years {
        if !papers.values().any(|p| p.year == y && p.eligible) {
            continue;
        }
        let weights = weights_through(&papers, y);
        for (&id, p) in papers.iter().filter(|(_, p)| p.year == y && p.eligible) {
            out.giants
                .insert(id.to_string(), oracle_giant(p, &weights, &papers, &config.giant));
        }
    }

    let window = config.window as i32;
    for (&id, p) in &papers {
        let citers: Vec<&Paper> = papers.values().filter(|q| q.refs.contains(id)).collect();
        let mut counts = OracleCounts {
            c: citers.len() as u32,
            c_window: citers.iter().filter(|q| q.year <= p.year + window).count() as u32,
            ..OracleCounts::default()
        };
        let keys = author_keys(p.record);
        for (fid, g) in &out.giants {
            if g.giant.as_deref() != Some(id) {
                continue;
            }
            let f = &papers[fid.as_str()];
            counts.g += 1;
            if f.year <= p.year + window {
                counts.g_window += 1;
            }
            if author_keys(f.record).is_disjoint(&keys) {
                counts.g_noself += 1;
            }
        }
        for (&qid, q) in &papers {
            if qid == id || q.year < p.year {
                continue;
            }
            let cites_focal = q.refs.contains(id);
            let cites_ref = q.refs.iter().any(|r| p.refs.contains(r));
            match (cites_focal, cites_ref) {
                (true, false) => counts.n_i += 1,
                (true, true) => counts.n_j += 1,
                (false, true) => counts.n_k += 1,
                (false, false) => {}
            }
        }
        out.counts.insert(id.to_string(), counts);
    }
    Ok(out)
}

/// Differences between the optimized pipeline and the oracle, human readable.
pub fn compare(
    oracle: &OracleOutput,
    corpus: &Corpus,
    assignments: &GiantAssignments,
    metrics: Option<&MetricTable>,
) -> Vec<String> {
    let mut mismatches = Vec::new();
    let fast: BTreeMap<&str, OracleGiant> = assignments
        .results()
        .iter()
        .map(|r| {
            let g = OracleGiant {
                giant: r.giant.map(|g| corpus.id(g).to_string()),
                stop_n: r.stop_n,
                percolation_reached: r.percolation_reached,
            };
            (corpus.id(r.focal), g)
        })
        .collect();
    for (id, expected) in &oracle.giants {
        match fast.get(id.as_str()) {
            None => mismatches.push(format!("{id}: missing from pipeline output")),
            Some(got) if got != expected => {
                mismatches.push(format!("{id}: pipeline {got:?}, oracle {expected:?}"))
            }
            _ => {}
        }
    }
    for id in fast.keys().filter(|id| !oracle.giants.contains_key(**id)) {
        mismatches.push(format!("{id}: not a focal paper for the oracle"));
    }
    if let Some(table) = metrics {
        for row in &table.rows {
            let id = corpus.id(row.paper);
            let Some(o) = oracle.counts.get(id) else {
                mismatches.push(format!("{id}: no oracle counts"));
                continue;
            };
            let got = OracleCounts {
                c: row.citations,
                c_window: row.citations_window,
                g: row.giant_index_all,
                g_window: if table.config.exclude_self_citations {
                    o.g_window
                } else {
                    row.giant_index_window
                },
                g_noself: row.giant_index_noself,
                n_i: row.disruption.n_i,
                n_j: row.disruption.n_j,
                n_k: row.disruption.n_k,
            };
            if &got != o {
                mismatches.push(format!("{id}: pipeline counts {got:?}, oracle {o:?}"));
            }
        }
    }
    mismatches
}
