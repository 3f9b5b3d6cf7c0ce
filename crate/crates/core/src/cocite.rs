//! Weighted co-citation network as of a given year.
//!
//! A snapshot at year `y` counts, for every unordered pair of papers, the
//! number of citing papers with `year <= y` whose resolved reference lists
//! contain both. Since the corpus is sorted by year, the contributing citers
//! are always a prefix of the paper indices, which makes yearly advancing a
//! matter of applying the next slice of citers.
//!
//! Each node keeps two views of its neighbors: sorted by neighbor index for
//! weight lookups, and sorted by the rank rule (weight descending, then older
//! paper, then smaller id) for top-n queries. Both are maintained by merging
//! per-year deltas, so a snapshot advanced year by year is identical to one
//! built from scratch.

use std::io::{Read, Write};

use crate::binio::{Reader, Writer};
use crate::corpus::{Corpus, PaperIdx};
use crate::error::{Error, Result};
use crate::exec::Exec;

const MAGIC: &[u8; 8] = b"LINSNAP\0";
pub const SNAPSHOT_CACHE_VERSION: u32 = 1;

/// Sort key implementing the neighbor rank rule; smaller is better.
///
/// Paper indices already order by `(year, id)`, so the rule reduces to
/// `(weight desc, index asc)`.
#[inline]
pub fn rank_key(weight: u32, neighbor: PaperIdx) -> u64 {
    (((u32::MAX - weight) as u64) << 32) | neighbor.0 as u64
}

#[inline]
pub fn decode_rank_key(key: u64) -> (PaperIdx, u32) {
    (PaperIdx(key as u32), u32::MAX - (key >> 32) as u32)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Adjacency {
    /// `(neighbor, weight)` sorted by neighbor.
    by_neighbor: Vec<(u32, u32)>,
    /// Rank keys of the neighbors with weight >= 2, ascending. Weight-1
    /// neighbors rank after them in neighbor order, which is `by_neighbor`
    /// order, so they need no second copy.
    heavy: Vec<u64>,
    /// Neighbor indices of `heavy`, ascending.
    heavy_ids: Vec<u32>,
}

impl Adjacency {
    fn from_neighbors(by_neighbor: Vec<(u32, u32)>) -> Self {
        let heavy_ids: Vec<u32> = by_neighbor.iter().filter(|e| e.1 >= 2).map(|e| e.0).collect();
        let mut heavy: Vec<u64> = by_neighbor
            .iter()
            .filter(|e| e.1 >= 2)
            .map(|&(n, w)| rank_key(w, PaperIdx(n)))
            .collect();
        heavy.sort_unstable();
        Adjacency {
            by_neighbor,
            heavy,
            heavy_ids,
        }
    }

    /// Neighbors whose rank key is below `key`.
    fn ahead_of(&self, key: u64) -> usize {
        let (n, w) = decode_rank_key(key);
        if w >= 2 {
            return self.heavy.partition_point(|&k| k < key);
        }
        if w == 0 {
            return self.by_neighbor.len();
        }
        let before = self.by_neighbor.partition_point(|e| e.0 < n.0);
        let heavy_before = self.heavy_ids.partition_point(|&x| x < n.0);
        self.heavy.len() + before - heavy_before
    }

    fn ranked(&self) -> impl Iterator<Item = (PaperIdx, u32)> + '_ {
        self.heavy.iter().map(|&k| decode_rank_key(k)).chain(
            self.by_neighbor
                .iter()
                .filter(|e| e.1 == 1)
                .map(|&(n, w)| (PaperIdx(n), w)),
        )
    }

    /// Adds `delta` (sorted by neighbor, counts > 0) to this adjacency.
    fn merge_delta(&mut self, delta: &[(u32, u32)]) {
        if self.by_neighbor.is_empty() {
            *self = Adjacency::from_neighbors(delta.to_vec());
            return;
        }
        let mut removed: Vec<u64> = Vec::new();
        let mut added: Vec<u64> = Vec::new();
        let mut promoted: Vec<u32> = Vec::new();
        let mut fresh: Vec<(u32, u32)> = Vec::new();
        let mut lo = 0;
        for &(n, dw) in delta {
            let pos = gallop_by(&self.by_neighbor, lo, n);
            match self.by_neighbor.get_mut(pos) {
                Some(e) if e.0 == n => {
                    if e.1 >= 2 {
                        removed.push(rank_key(e.1, PaperIdx(n)));
                    } else {
                        promoted.push(n);
                    }
                    e.1 += dw;
                    added.push(rank_key(e.1, PaperIdx(n)));
                    lo = pos + 1;
                }
                _ => {
                    fresh.push((n, dw));
                    if dw >= 2 {
                        promoted.push(n);
                        added.push(rank_key(dw, PaperIdx(n)));
                    }
                    lo = pos;
                }
            }
        }
        if !fresh.is_empty() {
            merge_back(&mut self.by_neighbor, &fresh, |e| e.0);
        }
        if !promoted.is_empty() {
            merge_back(&mut self.heavy_ids, &promoted, |&x| x);
        }
        if !added.is_empty() {
            removed.sort_unstable();
            added.sort_unstable();
            self.heavy = splice_sorted(&self.heavy, &removed, &added);
        }
    }
}

/// `old` without `removed` plus `added`; all three sorted, `removed` a
/// subset of `old`, `added` disjoint from it. Runs between edits are copied
/// wholesale.
fn splice_sorted(old: &[u64], removed: &[u64], added: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(old.len() + added.len() - removed.len());
    let mut pos = 0;
    let (mut r, mut a) = (0, 0);
    let mut rp = removed.first().map_or(old.len(), |&k| gallop(old, 0, k));
    let mut ap = added.first().map_or(old.len(), |&k| gallop(old, 0, k));
    while r < removed.len() || a < added.len() {
        if a < added.len() && ap <= rp {
            out.extend_from_slice(&old[pos..ap]);
            out.push(added[a]);
            pos = ap;
            a += 1;
            ap = added.get(a).map_or(old.len(), |&k| gallop(old, pos, k));
        } else {
            out.extend_from_slice(&old[pos..rp]);
            pos = rp + 1;
            r += 1;
            rp = removed.get(r).map_or(old.len(), |&k| gallop(old, pos, k));
            ap = ap.max(pos);
        }
    }
    out.extend_from_slice(&old[pos..]);
    out
}

fn gallop_by(v: &[(u32, u32)], from: usize, n: u32) -> usize {
    let mut step = 1;
    let mut lo = from;
    let mut hi = from;
    while hi < v.len() && v[hi].0 < n {
        lo = hi + 1;
        hi = from + step;
        step *= 2;
    }
    let hi = hi.min(v.len());
    lo + v[lo..hi].partition_point(|&(x, _)| x < n)
}

/// First index `>= from` whose element is not below `key`, by exponential
/// search forward from `from`.
fn gallop<T: Ord + Copy>(v: &[T], from: usize, key: T) -> usize {
    let mut step = 1;
    let mut lo = from;
    let mut hi = from;
    while hi < v.len() && v[hi] < key {
        lo = hi + 1;
        hi = from + step;
        step *= 2;
    }
    let hi = hi.min(v.len());
    lo + v[lo..hi].partition_point(|&x| x < key)
}

/// Merges sorted `extra` into sorted `v` in place, from the back.
fn merge_back<T: Copy, K: Ord>(v: &mut Vec<T>, extra: &[T], key: impl Fn(&T) -> K) {
    let mut i = v.len();
    v.extend_from_slice(extra);
    for j in (0..extra.len()).rev() {
        let k = key(&extra[j]);
        let p = v[..i].partition_point(|x| key(x) < k);
        v.copy_within(p..i, p + j + 1);
        v[p + j] = extra[j];
        i = p;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoCitationSnapshot {
    as_of_year: i32,
    /// Citing papers `0..citers_end` have been applied.
    citers_end: usize,
    nodes: Vec<Adjacency>,
}

impl CoCitationSnapshot {
    /// Snapshot before the corpus' first year: no co-citations.
    pub fn empty(corpus: &Corpus) -> Self {
        let as_of_year = corpus.year_bounds().map_or(i32::MIN, |(lo, _)| lo - 1);
        CoCitationSnapshot {
            as_of_year,
            citers_end: 0,
            nodes: vec![Adjacency::default(); corpus.len()],
        }
    }

    pub fn build(corpus: &Corpus, year: i32, exec: Exec) -> Result<Self> {
        let (min, max) = corpus.year_bounds().ok_or(Error::YearOutOfRange {
            year,
            min: 0,
            max: -1,
        })?;
        if year < min || year > max {
            return Err(Error::YearOutOfRange { year, min, max });
        }
        let mut s = Self::empty(corpus);
        s.advance(corpus, year, exec)?;
        Ok(s)
    }

    /// Applies citing papers published in `(as_of_year, to_year]`.
    ///
    /// Advancing beyond the corpus' last year stops at the last year.
    pub fn advance(&mut self, corpus: &Corpus, to_year: i32, exec: Exec) -> Result<()> {
        if to_year < self.as_of_year {
            return Err(Error::SnapshotRewind {
                from: self.as_of_year,
                to: to_year,
            });
        }
        if self.nodes.len() != corpus.len() {
            return Err(Error::InvalidArgument(
                "snapshot does not belong to this corpus".into(),
            ));
        }
        let target = match corpus.year_bounds() {
            Some((_, max)) => to_year.min(max.max(self.as_of_year)),
            None => to_year,
        };
        let end = corpus.prefix_end(target);
        self.apply_citers(corpus, self.citers_end..end, exec);
        self.citers_end = end;
        self.as_of_year = target;
        Ok(())
    }

    fn apply_citers(&mut self, corpus: &Corpus, citers: std::ops::Range<usize>, exec: Exec) {
        if citers.is_empty() {
            return;
        }
        let mut entries: Vec<u64> = Vec::new();
        for p in citers {
            let refs = corpus.refs(PaperIdx(p as u32));
            for &a in refs {
                for &b in refs {
                    if a != b {
                        entries.push(((a.0 as u64) << 32) | b.0 as u64);
                    }
                }
            }
        }
        exec.sort_unstable(&mut entries);

        // Group into per-node deltas: nodes[g], entries delta[offsets[g]..offsets[g+1]].
        let mut group_nodes: Vec<u32> = Vec::new();
        let mut offsets: Vec<usize> = vec![0];
        let mut delta: Vec<(u32, u32)> = Vec::new();
        let mut k = 0;
        while k < entries.len() {
            let e = entries[k];
            let mut run = 1;
            while k + run < entries.len() && entries[k + run] == e {
                run += 1;
            }
            let (src, dst) = ((e >> 32) as u32, e as u32);
            if group_nodes.last() != Some(&src) {
                if !group_nodes.is_empty() {
                    offsets.push(delta.len());
                }
                group_nodes.push(src);
            }
            delta.push((dst, run as u32));
            k += run;
        }
        offsets.push(delta.len());
        drop(entries);

        let mut work: Vec<Adjacency> = group_nodes
            .iter()
            .map(|&n| std::mem::take(&mut self.nodes[n as usize]))
            .collect();
        exec.for_each_indexed_mut(&mut work, |g, adj| {
            adj.merge_delta(&delta[offsets[g]..offsets[g + 1]])
        });
        for (adj, &n) in work.into_iter().zip(&group_nodes) {
            self.nodes[n as usize] = adj;
        }
    }

    pub fn as_of_year(&self) -> i32 {
        self.as_of_year
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Co-citation count of `a` and `b`; zero when never co-cited.
    pub fn weight(&self, a: PaperIdx, b: PaperIdx) -> u32 {
        let list = &self.nodes[a.get()].by_neighbor;
        list.binary_search_by_key(&b.0, |&(n, _)| n)
            .map_or(0, |i| list[i].1)
    }

    pub fn degree(&self, a: PaperIdx) -> usize {
        self.nodes.get(a.get()).map_or(0, |n| n.by_neighbor.len())
    }

    /// Weights from `a` to each co-cited paper in `targets` (sorted), as
    /// `(position in targets, weight)` pairs in target order.
    pub(crate) fn weights_to(&self, a: PaperIdx, targets: &[PaperIdx], out: &mut Vec<(usize, u32)>) {
        out.clear();
        let list = &self.nodes[a.get()].by_neighbor;
        if list.len() <= targets.len() * 16 {
            let (mut i, mut j) = (0, 0);
            while i < list.len() && j < targets.len() {
                match list[i].0.cmp(&targets[j].0) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        out.push((j, list[i].1));
                        i += 1;
                        j += 1;
                    }
                }
            }
        } else {
            for (j, t) in targets.iter().enumerate() {
                if let Ok(i) = list.binary_search_by_key(&t.0, |&(n, _)| n) {
                    out.push((j, list[i].1));
                }
            }
        }
    }

    /// Neighbors with weights, by neighbor index.
    pub fn neighbors(&self, a: PaperIdx) -> impl Iterator<Item = (PaperIdx, u32)> + '_ {
        self.nodes[a.get()]
            .by_neighbor
            .iter()
            .map(|&(n, w)| (PaperIdx(n), w))
    }

    /// Neighbors in rank order.
    pub fn ranked_neighbors(&self, a: PaperIdx) -> impl Iterator<Item = (PaperIdx, u32)> + '_ {
        self.nodes[a.get()].ranked()
    }

    /// Neighbors of `a` ranked strictly ahead of rank key `key`.
    pub(crate) fn rank_ahead(&self, a: PaperIdx, key: u64) -> usize {
        self.nodes[a.get()].ahead_of(key)
    }

    /// The first `min(n, degree)` neighbors in rank order. Unknown papers
    /// have no neighbors.
    pub fn top_n_neighbors(&self, a: PaperIdx, n: usize) -> Vec<(PaperIdx, u32)> {
        match self.nodes.get(a.get()) {
            Some(adj) => adj.ranked().take(n).collect(),
            None => Vec::new(),
        }
    }

    /// Number of distinct co-cited pairs.
    pub fn pair_count(&self) -> usize {
        self.nodes.iter().map(|n| n.by_neighbor.len()).sum::<usize>() / 2
    }

    /// Sum of weights over unordered pairs.
    pub fn total_weight(&self) -> u64 {
        let directed: u64 = self
            .nodes
            .iter()
            .flat_map(|n| n.by_neighbor.iter().map(|&(_, w)| w as u64))
            .sum();
        directed / 2
    }

    pub fn write_cache(&self, corpus_fingerprint: &str, w: impl Write) -> Result<()> {
        let inner = || -> std::io::Result<()> {
            let mut w = Writer::new(w);
            w.bytes(MAGIC)?;
            w.u32(SNAPSHOT_CACHE_VERSION)?;
            w.i32(self.as_of_year)?;
            w.u64(self.citers_end as u64)?;
            w.str(corpus_fingerprint)?;
            w.u32(self.nodes.len() as u32)?;
            for n in &self.nodes {
                w.u32(n.by_neighbor.len() as u32)?;
                for &(nb, wt) in &n.by_neighbor {
                    w.u32(nb)?;
                    w.u32(wt)?;
                }
            }
            w.finish()?;
            Ok(())
        };
        inner().map_err(|e| Error::Cache(e.to_string()))
    }

    /// Reads a cached snapshot, rejecting other versions and snapshots of a
    /// different corpus.
    pub fn read_cache(corpus_fingerprint: &str, r: impl Read) -> Result<Self> {
        let io = |e: std::io::Error| Error::Cache(e.to_string());
        let mut r = Reader::new(r);
        let magic: [u8; 8] = r.bytes().map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::Cache("not a snapshot cache (bad magic)".into()));
        }
        let version = r.u32().map_err(io)?;
        if version != SNAPSHOT_CACHE_VERSION {
            return Err(Error::Cache(format!(
                "snapshot cache version {version}, expected {SNAPSHOT_CACHE_VERSION}"
            )));
        }
        let as_of_year = r.i32().map_err(io)?;
        let citers_end = r.u64().map_err(io)? as usize;
        let fp = r.str().map_err(io)?;
        if fp != corpus_fingerprint {
            return Err(Error::Cache(format!(
                "snapshot built for corpus {fp}, not {corpus_fingerprint}"
            )));
        }
        let n = r.u32().map_err(io)? as usize;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let len = r.u32().map_err(io)? as usize;
            let mut by_neighbor = Vec::with_capacity(len);
            for _ in 0..len {
                let nb = r.u32().map_err(io)?;
                let wt = r.u32().map_err(io)?;
                if nb as usize >= n || wt == 0 {
                    return Err(Error::Cache("corrupt adjacency entry".into()));
                }
                by_neighbor.push((nb, wt));
            }
            nodes.push(Adjacency::from_neighbors(by_neighbor));
        }
        Ok(CoCitationSnapshot {
            as_of_year,
            citers_end,
            nodes,
        })
    }
}

/// Full build of the snapshot at `year`.
pub fn build_snapshot(corpus: &Corpus, year: i32, exec: Exec) -> Result<CoCitationSnapshot> {
    CoCitationSnapshot::build(corpus, year, exec)
}

/// Incremental update: only citers published in `(as_of_year, to_year]` are
/// processed.
pub fn advance_snapshot(
    mut snapshot: CoCitationSnapshot,
    corpus: &Corpus,
    to_year: i32,
    exec: Exec,
) -> Result<CoCitationSnapshot> {
    snapshot.advance(corpus, to_year, exec)?;
    Ok(snapshot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{IngestConfig, PaperRecord};

    fn corpus(recs: Vec<PaperRecord>) -> Corpus {
        Corpus::from_records(recs, &IngestConfig::default()).unwrap()
    }

    fn xyz() -> Corpus {
        corpus(vec![
            PaperRecord::new("A", 1990),
            PaperRecord::new("B", 1990),
            PaperRecord::new("C", 1991),
            PaperRecord::new("X", 1995).with_refs(["A", "B"]),
            PaperRecord::new("Y", 1996).with_refs(["A", "B"]),
            PaperRecord::new("Z", 1997).with_refs(["B", "C"]),
        ])
    }

    #[test]
    fn counts_co_citing_papers() {
        let c = xyz();
        let s = build_snapshot(&c, 1997, Exec::Sequential).unwrap();
        let id = |s: &str| c.idx_of(s).unwrap();
        assert_eq!(s.weight(id("A"), id("B")), 2);
        assert_eq!(s.weight(id("B"), id("A")), 2);
        assert_eq!(s.weight(id("B"), id("C")), 1);
        assert_eq!(s.weight(id("A"), id("C")), 0);
        assert_eq!(s.pair_count(), 2);
        assert_eq!(s.total_weight(), 3);
    }

    #[test]
    fn no_pairs_means_empty_adjacency() {
        let c = corpus(vec![
            PaperRecord::new("A", 1990),
            PaperRecord::new("X", 1991).with_refs(["A"]),
        ]);
        let s = build_snapshot(&c, 1991, Exec::Sequential).unwrap();
        assert_eq!(s.pair_count(), 0);
    }

    #[test]
    fn snapshot_year_is_inclusive_and_checked() {
        let c = xyz();
        let s = build_snapshot(&c, 1995, Exec::Sequential).unwrap();
        assert_eq!(s.weight(c.idx_of("A").unwrap(), c.idx_of("B").unwrap()), 1);
        assert!(matches!(
            build_snapshot(&c, 1989, Exec::Sequential),
            Err(Error::YearOutOfRange { .. })
        ));
        assert!(build_snapshot(&c, 1998, Exec::Sequential).is_err());
    }

    #[test]
    fn advance_matches_rebuild_and_rejects_rewind() {
        let c = xyz();
        let s = build_snapshot(&c, 1995, Exec::Sequential).unwrap();
        let same = advance_snapshot(s.clone(), &c, 1995, Exec::Sequential).unwrap();
        assert_eq!(same, s);
        let adv = advance_snapshot(s.clone(), &c, 1997, Exec::Sequential).unwrap();
        assert_eq!(adv, build_snapshot(&c, 1997, Exec::Sequential).unwrap());
        let past = advance_snapshot(s.clone(), &c, 2050, Exec::Sequential).unwrap();
        assert_eq!(past, build_snapshot(&c, 1997, Exec::Sequential).unwrap());
        assert!(matches!(
            advance_snapshot(adv, &c, 1994, Exec::Sequential),
            Err(Error::SnapshotRewind { .. })
        ));
    }

    #[test]
    fn top_n_tie_break_by_year_then_id() {
        // Focal neighbors: P (1990) and Q (1991) both weight 5, R weight 1.
        let mut recs = vec![
            PaperRecord::new("F", 1980),
            PaperRecord::new("Q", 1991),
            PaperRecord::new("P", 1990),
            PaperRecord::new("R", 1990),
        ];
        for i in 0..5 {
            recs.push(PaperRecord::new(format!("c{i}"), 2000).with_refs(["F", "P", "Q"]));
        }
        recs.push(PaperRecord::new("d", 2000).with_refs(["F", "R"]));
        let c = corpus(recs);
        let s = build_snapshot(&c, 2000, Exec::Sequential).unwrap();
        let f = c.idx_of("F").unwrap();
        let top: Vec<(&str, u32)> = s
            .top_n_neighbors(f, 2)
            .into_iter()
            .map(|(p, w)| (c.id(p), w))
            .collect();
        assert_eq!(top, [("P", 5), ("Q", 5)]);
        assert_eq!(s.top_n_neighbors(f, 10).len(), 3);
        assert!(s.top_n_neighbors(PaperIdx(999), 3).is_empty());
    }

    #[test]
    fn ranked_merge_matches_fresh_sort() {
        let base = Adjacency::from_neighbors((0..40).map(|n| (n * 2, 1 + n % 3)).collect());
        for delta in [
            vec![(3, 2), (4, 7), (40, 1)],
            vec![(0, 1), (1, 1), (79, 3), (200, 2)],
            (0..60).map(|n| (n, 1)).collect(),
        ] {
            let mut merged = base.clone();
            merged.merge_delta(&delta);
            let fresh = Adjacency::from_neighbors(merged.by_neighbor.clone());
            assert_eq!(merged, fresh);
            assert!(merged.by_neighbor.windows(2).all(|w| w[0].0 < w[1].0));
            let mut all: Vec<u64> = merged
                .by_neighbor
                .iter()
                .map(|&(n, w)| rank_key(w, PaperIdx(n)))
                .collect();
            all.sort_unstable();
            let listed: Vec<u64> = merged.ranked().map(|(n, w)| rank_key(w, n)).collect();
            assert_eq!(listed, all);
            for w in 0..12 {
                for n in 0..210 {
                    let key = rank_key(w, PaperIdx(n));
                    assert_eq!(merged.ahead_of(key), all.partition_point(|&k| k < key));
                }
            }
        }
        let mut merged = base.clone();
        merged.merge_delta(&[(3, 2), (4, 7), (40, 1)]);
        assert_eq!(merged.by_neighbor.len(), 41);
        assert_eq!(merged.by_neighbor[3], (4, 1 + 2 % 3 + 7));
    }

    #[test]
    fn cache_round_trip_and_guards() {
        let c = xyz();
        let s = build_snapshot(&c, 1997, Exec::Sequential).unwrap();
        let mut buf = Vec::new();
        s.write_cache("fp", &mut buf).unwrap();
        assert_eq!(CoCitationSnapshot::read_cache("fp", buf.as_slice()).unwrap(), s);
        assert!(CoCitationSnapshot::read_cache("other", buf.as_slice()).is_err());
        buf[8] ^= 0xff;
        assert!(CoCitationSnapshot::read_cache("fp", buf.as_slice()).is_err());
    }
}
