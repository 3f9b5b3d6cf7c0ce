//! Vote ranks inside a reference subnetwork.
//!
//! Each reference votes for its neighbors in the global co-citation network
//! in rank order; with budget `n` it has cast its first `n` votes. A vote
//! only forms an edge when it lands on another reference, and the edge
//! between two references appears as soon as either votes for the other.
//! Computing, for every reference pair, the budget at which its edge first
//! appears turns the whole sweep over `n` into one sort.

use crate::cocite::{rank_key, CoCitationSnapshot};
use crate::corpus::PaperIdx;

/// Undirected edge between `refs[a]` and `refs[b]` (`a < b`), present for
/// every vote budget `n >= appears_at`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CandidateEdge {
    pub a: u32,
    pub b: u32,
    pub weight: u32,
    pub appears_at: u32,
}

#[derive(Clone, Debug)]
pub struct VoteRanking {
    pub(crate) refs: Vec<PaperIdx>,
    /// Number of votes each reference can cast (its neighbor-list length).
    pub(crate) list_len: Vec<u32>,
    /// Sorted by `(appears_at, a, b)`.
    pub(crate) edges: Vec<CandidateEdge>,
}

impl VoteRanking {
    /// `refs` must be sorted and free of duplicates. With `exclude_own` the
    /// focal paper's own contribution (one co-citation for every pair of its
    /// references) is removed from the weights before ranking.
    pub fn compute(snapshot: &CoCitationSnapshot, refs: &[PaperIdx], exclude_own: bool) -> Self {
        debug_assert!(refs.windows(2).all(|w| w[0] < w[1]));
        let own = exclude_own as u32;
        let mut list_len = Vec::with_capacity(refs.len());
        let mut directed: Vec<(u32, u32, u32, u32)> = Vec::new();
        let mut inside: Vec<(usize, u32)> = Vec::new();
        let mut orig_keys: Vec<u64> = Vec::new();
        let mut adj_keys: Vec<(u64, usize)> = Vec::new();

        for (i, &r) in refs.iter().enumerate() {
            snapshot.weights_to(r, refs, &mut inside);
            orig_keys.clear();
            adj_keys.clear();
            let mut vanished = 0u32;
            for &(j, w) in &inside {
                orig_keys.push(rank_key(w, refs[j]));
                let w_adj = w.saturating_sub(own);
                if w_adj == 0 {
                    vanished += 1;
                } else {
                    adj_keys.push((rank_key(w_adj, refs[j]), j));
                }
            }
            list_len.push(snapshot.degree(r) as u32 - vanished);
            if adj_keys.is_empty() {
                continue;
            }
            orig_keys.sort_unstable();
            adj_keys.sort_unstable();
            for (pos, &(key, j)) in adj_keys.iter().enumerate() {
                // Neighbors outside the reference list keep their weights, so
                // their count ahead of `key` comes from the global ranking.
                let ahead_all = snapshot.rank_ahead(r, key);
                let ahead_inside_orig = orig_keys.partition_point(|&k| k < key);
                let rank = 1 + (ahead_all - ahead_inside_orig) + pos;
                let w_adj = u32::MAX - (key >> 32) as u32;
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                directed.push((a as u32, b as u32, rank as u32, w_adj));
            }
        }

        directed.sort_unstable();
        let mut edges: Vec<CandidateEdge> = Vec::with_capacity(directed.len() / 2 + 1);
        for (a, b, rank, weight) in directed {
            match edges.last_mut() {
                Some(e) if e.a == a && e.b == b => e.appears_at = e.appears_at.min(rank),
                _ => edges.push(CandidateEdge {
                    a,
                    b,
                    weight,
                    appears_at: rank,
                }),
            }
        }
        edges.sort_unstable_by_key(|e| (e.appears_at, e.a, e.b));
        VoteRanking {
            refs: refs.to_vec(),
            list_len,
            edges,
        }
    }

    pub fn refs(&self) -> &[PaperIdx] {
        &self.refs
    }

    pub fn edges(&self) -> &[CandidateEdge] {
        &self.edges
    }

    /// Number of edges retained with vote budget `n`.
    pub fn edge_count_at(&self, n: u32) -> usize {
        self.edges.partition_point(|e| e.appears_at <= n)
    }

    /// Budget at which every reference has exhausted its neighbor list.
    pub fn exhaustion_n(&self) -> u32 {
        self.list_len.iter().copied().max().unwrap_or(0).max(1)
    }

    /// References with at least one (adjusted) co-citation neighbor.
    pub fn voting_refs(&self) -> usize {
        self.list_len.iter().filter(|&&l| l > 0).count()
    }
}
