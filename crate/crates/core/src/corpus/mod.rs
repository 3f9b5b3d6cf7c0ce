//! Citation corpus: ingestion, validation, indexing and focal-paper eligibility.

mod cache;
mod io;
mod record;

use std::ops::Range;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

pub use io::{load_corpus, read_records, write_records, InputFormat};
pub use record::{Author, PaperIdx, PaperRecord, PubType, UNKNOWN_FIELD};

use crate::error::{Error, Result};

/// Minimum number of listed references for a focal paper.
pub const MIN_FOCAL_REFERENCES: u32 = 5;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub format: InputFormat,
    /// Inclusive `[y_min, y_max]`; papers outside it are skipped.
    pub year_range: Option<(i32, i32)>,
}

/// Counters reported by ingestion.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub papers: usize,
    pub skipped_out_of_range: usize,
    pub listed_refs: usize,
    pub resolved_refs: usize,
    pub dangling_refs: usize,
    pub future_refs_dropped: usize,
    pub self_refs_dropped: usize,
    pub duplicate_refs_collapsed: usize,
}

/// Immutable, fully indexed corpus.
///
/// Papers are sorted by `(year, id)`; every per-paper vector is indexed by
/// [`PaperIdx`]. Resolved reference lists exclude dangling ids, self
/// references and references to papers published later than the citing paper.
#[derive(Clone, Debug)]
pub struct Corpus {
    papers: Vec<PaperRecord>,
    lookup: FxHashMap<String, PaperIdx>,
    refs: Vec<Vec<PaperIdx>>,
    listed_ref_count: Vec<u32>,
    citing: Vec<Vec<PaperIdx>>,
    /// `(year, first index)` for each distinct year, ascending.
    year_starts: Vec<(i32, u32)>,
    eligible: Vec<bool>,
    stats: IngestStats,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.papers == other.papers
            && self.refs == other.refs
            && self.listed_ref_count == other.listed_ref_count
            && self.citing == other.citing
            && self.year_starts == other.year_starts
            && self.eligible == other.eligible
            && self.stats == other.stats
    }
}

impl Corpus {
    /// Builds the corpus from records in any order.
    pub fn from_records(records: Vec<PaperRecord>, config: &IngestConfig) -> Result<Self> {
        let mut stats = IngestStats::default();

        let mut papers: Vec<PaperRecord> = match config.year_range {
            Some((lo, hi)) => {
                let before = records.len();
                let kept: Vec<_> = records
                    .into_iter()
                    .filter(|p| p.year >= lo && p.year <= hi)
                    .collect();
                stats.skipped_out_of_range = before - kept.len();
                kept
            }
            None => records,
        };
        papers.sort_by(|a, b| a.year.cmp(&b.year).then_with(|| a.id.cmp(&b.id)));

        let mut lookup = FxHashMap::default();
        lookup.reserve(papers.len());
        for (i, p) in papers.iter().enumerate() {
            if lookup.insert(p.id.clone(), PaperIdx(i as u32)).is_some() {
                return Err(Error::DuplicateId {
                    id: p.id.clone(),
                    line: i + 1,
                });
            }
        }

        let mut refs = Vec::with_capacity(papers.len());
        let mut listed_ref_count = Vec::with_capacity(papers.len());
        let mut seen: FxHashSet<&str> = FxHashSet::default();
        for p in &papers {
            seen.clear();
            let mut resolved = Vec::with_capacity(p.references.len());
            let mut listed = 0u32;
            for r in &p.references {
                stats.listed_refs += 1;
                if !seen.insert(r.as_str()) {
                    stats.duplicate_refs_collapsed += 1;
                    continue;
                }
                if *r == p.id {
                    stats.self_refs_dropped += 1;
                    continue;
                }
                match lookup.get(r.as_str()) {
                    None => {
                        stats.dangling_refs += 1;
                        listed += 1;
                    }
                    Some(&j) if papers[j.get()].year > p.year => {
                        stats.future_refs_dropped += 1;
                        log::debug!("{} cites later paper {}; edge dropped", p.id, r);
                    }
                    Some(&j) => {
                        listed += 1;
                        resolved.push(j);
                    }
                }
            }
            resolved.sort_unstable();
            stats.resolved_refs += resolved.len();
            refs.push(resolved);
            listed_ref_count.push(listed);
        }
        if stats.future_refs_dropped > 0 {
            log::warn!("dropped {} references to later papers", stats.future_refs_dropped);
        }

        let mut citing = vec![Vec::new(); papers.len()];
        for (i, rs) in refs.iter().enumerate() {
            for r in rs {
                citing[r.get()].push(PaperIdx(i as u32));
            }
        }

        let mut year_starts: Vec<(i32, u32)> = Vec::new();
        for (i, p) in papers.iter().enumerate() {
            if year_starts.last().map(|&(y, _)| y) != Some(p.year) {
                year_starts.push((p.year, i as u32));
            }
        }

        let eligible = papers
            .iter()
            .zip(&listed_ref_count)
            .map(|(p, &n)| p.pub_type.is_research() && n >= MIN_FOCAL_REFERENCES)
            .collect();

        stats.papers = papers.len();
        if stats.dangling_refs > 0 {
            log::warn!(
                "{} dangling reference(s) kept for counting, excluded from co-citation",
                stats.dangling_refs
            );
        }
        if stats.future_refs_dropped > 0 {
            log::warn!(
                "{} reference(s) to later-published papers dropped",
                stats.future_refs_dropped
            );
        }

        Ok(Corpus {
            papers,
            lookup,
            refs,
            listed_ref_count,
            citing,
            year_starts,
            eligible,
            stats,
        })
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn paper(&self, idx: PaperIdx) -> &PaperRecord {
        &self.papers[idx.get()]
    }

    pub fn id(&self, idx: PaperIdx) -> &str {
        &self.papers[idx.get()].id
    }

    pub fn year(&self, idx: PaperIdx) -> i32 {
        self.papers[idx.get()].year
    }

    pub fn idx_of(&self, id: &str) -> Option<PaperIdx> {
        self.lookup.get(id).copied()
    }

    pub fn indices(&self) -> impl Iterator<Item = PaperIdx> + '_ {
        (0..self.papers.len() as u32).map(PaperIdx)
    }

    /// Resolved references, sorted by index.
    pub fn refs(&self, idx: PaperIdx) -> &[PaperIdx] {
        &self.refs[idx.get()]
    }

    /// Listed reference count used by the eligibility threshold; includes
    /// dangling references.
    pub fn listed_ref_count(&self, idx: PaperIdx) -> u32 {
        self.listed_ref_count[idx.get()]
    }

    /// Papers citing `idx`, sorted by index (hence by year).
    pub fn citing(&self, idx: PaperIdx) -> &[PaperIdx] {
        &self.citing[idx.get()]
    }

    /// Citing papers published no later than `year`.
    pub fn citing_through(&self, idx: PaperIdx, year: i32) -> &[PaperIdx] {
        let end = self.prefix_end(year);
        let c = self.citing(idx);
        &c[..c.partition_point(|p| p.get() < end)]
    }

    pub fn is_eligible(&self, idx: PaperIdx) -> bool {
        self.eligible[idx.get()]
    }

    /// `(min_year, max_year)`, or `None` for an empty corpus.
    pub fn year_bounds(&self) -> Option<(i32, i32)> {
        Some((self.papers.first()?.year, self.papers.last()?.year))
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.year_starts.iter().map(|&(y, _)| y)
    }

    /// Number of papers published in or before `year`; papers `0..prefix_end(y)`
    /// are exactly those with `year <= y`.
    pub fn prefix_end(&self, year: i32) -> usize {
        let k = self.year_starts.partition_point(|&(y, _)| y <= year);
        match self.year_starts.get(k) {
            Some(&(_, start)) => start as usize,
            None => self.papers.len(),
        }
    }

    /// Index range of papers published in `year`.
    pub fn year_range(&self, year: i32) -> Range<usize> {
        self.prefix_end(year - 1)..self.prefix_end(year)
    }

    /// Eligible focal papers with year in `[from, to]`, in `(year, id)` order.
    pub fn eligible_focal_papers(&self, from: i32, to: i32) -> Vec<PaperIdx> {
        if from > to {
            return Vec::new();
        }
        let range = self.prefix_end(from - 1)..self.prefix_end(to);
        range
            .filter(|&i| self.eligible[i])
            .map(|i| PaperIdx(i as u32))
            .collect()
    }

    pub(crate) fn from_parts(
        papers: Vec<PaperRecord>,
        refs: Vec<Vec<PaperIdx>>,
        listed_ref_count: Vec<u32>,
        citing: Vec<Vec<PaperIdx>>,
        eligible: Vec<bool>,
        stats: IngestStats,
    ) -> Result<Self> {
        let n = papers.len();
        if refs.len() != n || listed_ref_count.len() != n || citing.len() != n || eligible.len() != n {
            return Err(Error::Cache("inconsistent corpus cache section sizes".into()));
        }
        let mut lookup = FxHashMap::default();
        let mut year_starts: Vec<(i32, u32)> = Vec::new();
        for (i, p) in papers.iter().enumerate() {
            if lookup.insert(p.id.clone(), PaperIdx(i as u32)).is_some() {
                return Err(Error::Cache(format!("duplicate id {} in cache", p.id)));
            }
            match year_starts.last() {
                Some(&(y, _)) if y == p.year => {}
                Some(&(y, _)) if y > p.year => {
                    return Err(Error::Cache("papers not sorted by year".into()))
                }
                _ => year_starts.push((p.year, i as u32)),
            }
        }
        let bad_index = refs
            .iter()
            .chain(citing.iter())
            .flatten()
            .any(|r| r.get() >= n);
        if bad_index {
            return Err(Error::Cache("index out of bounds".into()));
        }
        Ok(Corpus {
            papers,
            lookup,
            refs,
            listed_ref_count,
            citing,
            year_starts,
            eligible,
            stats,
        })
    }
}
