use std::io::{BufRead, Write};

use serde::Serialize;

use super::{identify_giant, percolate, GiantConfig, GiantResult, TieBreak, VoteRanking};
use crate::cocite::CoCitationSnapshot;
use crate::corpus::{Corpus, PaperIdx};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Giant of one focal paper against the snapshot of its publication year.
pub fn compute_giant(
    snapshot: &CoCitationSnapshot,
    corpus: &Corpus,
    focal: PaperIdx,
    config: &GiantConfig,
) -> GiantResult {
    let ranking = VoteRanking::compute(snapshot, corpus.refs(focal), config.exclude_own_refs);
    identify_giant(focal, &percolate(&ranking, config), corpus)
}

/// Giant results for a set of focal papers, ordered by focal index.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GiantAssignments {
    results: Vec<GiantResult>,
}

impl GiantAssignments {
    pub fn from_results(mut results: Vec<GiantResult>) -> Self {
        results.sort_by_key(|r| r.focal);
        results.dedup_by_key(|r| r.focal);
        GiantAssignments { results }
    }

    pub fn results(&self) -> &[GiantResult] {
        &self.results
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }

    pub fn get(&self, focal: PaperIdx) -> Option<&GiantResult> {
        self.results
            .binary_search_by_key(&focal, |r| r.focal)
            .ok()
            .map(|i| &self.results[i])
    }

    pub fn giant_of(&self, focal: PaperIdx) -> Option<PaperIdx> {
        self.get(focal).and_then(|r| r.giant)
    }

    pub fn with_giant(&self) -> usize {
        self.results.iter().filter(|r| r.giant.is_some()).count()
    }

    pub fn write_tsv(&self, corpus: &Corpus, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "focal_id\tgiant_id\tstop_n\tpercolation_reached\tk_max\ttie_break_depth")?;
        for r in &self.results {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}",
                corpus.id(r.focal),
                r.giant.map_or("NONE", |g| corpus.id(g)),
                r.stop_n,
                r.percolation_reached,
                r.k_max,
                r.tie_break.map_or("NA", TieBreak::as_str)
            )?;
        }
        w.flush()
    }

    pub fn write_jsonl(&self, corpus: &Corpus, mut w: impl Write) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            focal_id: &'a str,
            giant_id: Option<&'a str>,
            stop_n: u32,
            percolation_reached: bool,
            k_max: u32,
            tie_break_depth: Option<TieBreak>,
            edges: u32,
            nodes: u32,
        }
        for r in &self.results {
            let row = Row {
                focal_id: corpus.id(r.focal),
                giant_id: r.giant.map(|g| corpus.id(g)),
                stop_n: r.stop_n,
                percolation_reached: r.percolation_reached,
                k_max: r.k_max,
                tie_break_depth: r.tie_break,
                edges: r.edge_count,
                nodes: r.node_count,
            };
            serde_json::to_writer(&mut w, &row)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    /// Reads a table written by [`write_tsv`](Self::write_tsv). Per-reference
    /// statistics are not part of the table and come back empty.
    pub fn read_tsv(corpus: &Corpus, r: impl BufRead) -> Result<Self> {
        let mut results = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            if i == 0 || line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: &str| Error::Parse {
                line: line_no,
                message: m.to_string(),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 6 {
                return Err(bad("expected 6 columns"));
            }
            let focal = corpus
                .idx_of(cols[0])
                .ok_or_else(|| Error::UnknownPaper(cols[0].to_string()))?;
            let giant = match cols[1] {
                "NONE" => None,
                g => Some(corpus.idx_of(g).ok_or_else(|| Error::UnknownPaper(g.to_string()))?),
            };
            results.push(GiantResult {
                focal,
                giant,
                stop_n: cols[2].parse().map_err(|_| bad("bad stop_n"))?,
                percolation_reached: cols[3].parse().map_err(|_| bad("bad percolation_reached"))?,
                k_max: cols[4].parse().map_err(|_| bad("bad k_max"))?,
                edge_count: 0,
                node_count: 0,
                tie_break: TieBreak::parse(cols[5]),
                refs: Vec::new(),
            });
        }
        Ok(GiantAssignments::from_results(results))
    }
}

/// Giants for every eligible focal paper published in `[from, to]`.
///
/// The snapshot is advanced one publication year at a time; within a year
/// focal papers are independent and computed through `exec`.
pub fn assign_all_giants(
    corpus: &Corpus,
    from: i32,
    to: i32,
    config: &GiantConfig,
    exec: Exec,
) -> Result<GiantAssignments> {
    let mut snapshot = CoCitationSnapshot::empty(corpus);
    let mut results = Vec::new();
    let years: Vec<i32> = corpus.years().filter(|&y| y >= from && y <= to).collect();
    for year in years {
        let focal = corpus.eligible_focal_papers(year, year);
        if focal.is_empty() {
            continue;
        }
        snapshot.advance(corpus, year, exec)?;
        let snap = &snapshot;
        results.extend(exec.map(&focal, |&f| compute_giant(snap, corpus, f, config)));
        log::debug!("{year}: {} focal papers", focal.len());
    }
    Ok(GiantAssignments { results })
}
