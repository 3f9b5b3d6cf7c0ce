//! Giant identification.
//!
//! For a focal paper, each reference casts votes for its most co-cited papers
//! in the snapshot of the focal paper's publication year; only votes landing
//! on other references of the same paper form links. The vote budget `n`
//! grows from 1 until the average degree `⟨k_n⟩ = 2E/N` of the reference
//! subnetwork exceeds 1, and the reference with the most links is the giant.
//! A paper whose references stay fully isolated at `n = 1` has no giant.

mod driver;
mod vote;

use serde::{Deserialize, Serialize};

pub use driver::{assign_all_giants, compute_giant, GiantAssignments};
pub use vote::{CandidateEdge, VoteRanking};

use crate::cocite::CoCitationSnapshot;
use crate::corpus::{Corpus, PaperIdx};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Damping {
    /// 1 for the selected giant, 0 for every other reference.
    #[default]
    Delta,
    /// Constant 1; grades every reference by degree and weight.
    Linear,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GiantConfig {
    /// Remove the focal paper's own co-citations from its snapshot.
    pub exclude_own_refs: bool,
    /// Count references without any co-citation neighbor in `N`.
    pub count_isolated_refs: bool,
    pub damping: Damping,
}

impl Default for GiantConfig {
    fn default() -> Self {
        GiantConfig {
            exclude_own_refs: true,
            count_isolated_refs: true,
            damping: Damping::Delta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VoteEdge {
    pub a: PaperIdx,
    pub b: PaperIdx,
    pub weight: u32,
}

/// The reference subnetwork at vote budget `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoteSubnetwork {
    pub refs: Vec<PaperIdx>,
    pub n: u32,
    pub edges: Vec<VoteEdge>,
    /// `k_i`, aligned with `refs`.
    pub degree: Vec<u32>,
    /// `w_i`: summed weight of retained incident edges, aligned with `refs`.
    pub weight: Vec<u64>,
    /// `N` in `⟨k_n⟩ = 2E/N`.
    pub node_count: u32,
}

impl VoteSubnetwork {
    fn from_ranking(r: &VoteRanking, n: u32, node_count: u32) -> Self {
        let m = r.edge_count_at(n);
        let mut degree = vec![0u32; r.refs.len()];
        let mut weight = vec![0u64; r.refs.len()];
        let mut edges = Vec::with_capacity(m);
        for e in &r.edges[..m] {
            for v in [e.a, e.b] {
                degree[v as usize] += 1;
                weight[v as usize] += e.weight as u64;
            }
            edges.push(VoteEdge {
                a: r.refs[e.a as usize],
                b: r.refs[e.b as usize],
                weight: e.weight,
            });
        }
        edges.sort_unstable_by_key(|e| (e.a, e.b));
        VoteSubnetwork {
            refs: r.refs.clone(),
            n,
            edges,
            degree,
            weight,
            node_count,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn avg_degree(&self) -> f64 {
        if self.node_count == 0 {
            0.0
        } else {
            2.0 * self.edges.len() as f64 / self.node_count as f64
        }
    }

    /// `⟨k_n⟩ > 1`, evaluated exactly as `2E > N`.
    pub fn above_threshold(&self) -> bool {
        2 * self.edges.len() > self.node_count as usize
    }

    pub fn k_max(&self) -> u32 {
        self.degree.iter().copied().max().unwrap_or(0)
    }
}

fn normalized_refs(refs: &[PaperIdx]) -> Vec<PaperIdx> {
    let mut r = refs.to_vec();
    r.sort_unstable();
    r.dedup();
    r
}

fn node_count(r: &VoteRanking, config: &GiantConfig) -> u32 {
    if config.count_isolated_refs {
        r.refs.len() as u32
    } else {
        r.voting_refs() as u32
    }
}

/// Subnetwork formed when every reference casts its top `n` votes.
pub fn build_vote_subnetwork(
    snapshot: &CoCitationSnapshot,
    refs: &[PaperIdx],
    n: u32,
    config: &GiantConfig,
) -> VoteSubnetwork {
    let ranking = VoteRanking::compute(snapshot, &normalized_refs(refs), config.exclude_own_refs);
    VoteSubnetwork::from_ranking(&ranking, n.max(1), node_count(&ranking, config))
}

/// Result of the percolation sweep over the vote budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Percolation {
    pub subnetwork: VoteSubnetwork,
    pub percolation_reached: bool,
}

/// Minimal `n` with `⟨k_n⟩ > 1` computed from a precomputed ranking.
pub fn percolate(ranking: &VoteRanking, config: &GiantConfig) -> Percolation {
    let nodes = node_count(ranking, config);
    if ranking.edge_count_at(1) == 0 {
        return Percolation {
            subnetwork: VoteSubnetwork::from_ranking(ranking, 1, nodes),
            percolation_reached: false,
        };
    }
    // 2E > N  <=>  E >= N/2 + 1; edges are sorted by appearance.
    let needed = nodes as usize / 2 + 1;
    match ranking.edges.get(needed - 1) {
        Some(e) => Percolation {
            subnetwork: VoteSubnetwork::from_ranking(ranking, e.appears_at, nodes),
            percolation_reached: true,
        },
        None => Percolation {
            subnetwork: VoteSubnetwork::from_ranking(ranking, ranking.exhaustion_n(), nodes),
            percolation_reached: false,
        },
    }
}

pub fn find_percolation_n(
    snapshot: &CoCitationSnapshot,
    refs: &[PaperIdx],
    config: &GiantConfig,
) -> Percolation {
    let ranking = VoteRanking::compute(snapshot, &normalized_refs(refs), config.exclude_own_refs);
    percolate(&ranking, config)
}

/// How far tie-breaking had to go to single out the giant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    Degree,
    Weight,
    Year,
    Id,
}

impl TieBreak {
    pub fn as_str(self) -> &'static str {
        match self {
            TieBreak::Degree => "degree",
            TieBreak::Weight => "weight",
            TieBreak::Year => "year",
            TieBreak::Id => "id",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "degree" => TieBreak::Degree,
            "weight" => TieBreak::Weight,
            "year" => TieBreak::Year,
            "id" => TieBreak::Id,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefStat {
    pub paper: PaperIdx,
    pub degree: u32,
    pub weight: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GiantResult {
    pub focal: PaperIdx,
    pub giant: Option<PaperIdx>,
    pub stop_n: u32,
    pub percolation_reached: bool,
    pub k_max: u32,
    pub edge_count: u32,
    pub node_count: u32,
    pub tie_break: Option<TieBreak>,
    /// Per-reference degree and weight at `stop_n`. Empty when the result was
    /// read back from a giant table.
    pub refs: Vec<RefStat>,
}

impl GiantResult {
    pub fn has_giant(&self) -> bool {
        self.giant.is_some()
    }
}

/// Picks the reference with maximal degree, then weight, then the older
/// paper, then the smaller id. No giant when the subnetwork has no links.
pub fn identify_giant(
    focal: PaperIdx,
    perc: &Percolation,
    corpus: &Corpus,
) -> GiantResult {
    let sub = &perc.subnetwork;
    let k_max = sub.k_max();
    let refs: Vec<RefStat> = sub
        .refs
        .iter()
        .zip(sub.degree.iter().zip(&sub.weight))
        .map(|(&paper, (&degree, &weight))| RefStat {
            paper,
            degree,
            weight,
        })
        .collect();
    let (giant, tie_break) = if sub.edges.is_empty() {
        (None, None)
    } else {
        let by_degree: Vec<&RefStat> = refs.iter().filter(|r| r.degree == k_max).collect();
        if by_degree.len() == 1 {
            (Some(by_degree[0].paper), Some(TieBreak::Degree))
        } else {
            let w_max = by_degree.iter().map(|r| r.weight).max().unwrap_or(0);
            let by_weight: Vec<&RefStat> =
                by_degree.into_iter().filter(|r| r.weight == w_max).collect();
            if by_weight.len() == 1 {
                (Some(by_weight[0].paper), Some(TieBreak::Weight))
            } else {
                // refs are in index order, which is (year, id) order.
                let first = by_weight[0].paper;
                let same_year = by_weight
                    .iter()
                    .filter(|r| corpus.year(r.paper) == corpus.year(first))
                    .count();
                let depth = if same_year == 1 { TieBreak::Year } else { TieBreak::Id };
                (Some(first), Some(depth))
            }
        }
    };
    GiantResult {
        focal,
        giant,
        stop_n: sub.n,
        percolation_reached: perc.percolation_reached,
        k_max,
        edge_count: sub.edges.len() as u32,
        node_count: sub.node_count,
        tie_break,
        refs,
    }
}

/// `s_i = (k_i / k_max) (w_i / w_{k_i,max}) f(i)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImportanceScore {
    pub paper: PaperIdx,
    pub score: f64,
    pub degree: u32,
    pub k_max: u32,
    pub weight: u64,
    /// Largest weight among references with the same degree.
    pub weight_max_at_degree: u64,
    pub damping: f64,
}

pub fn importance_scores(result: &GiantResult, damping: Damping) -> Result<Vec<ImportanceScore>> {
    if result.k_max == 0 || result.refs.is_empty() {
        return Err(Error::NoGiant);
    }
    let mut w_max_by_degree = std::collections::BTreeMap::<u32, u64>::new();
    for r in &result.refs {
        let e = w_max_by_degree.entry(r.degree).or_insert(0);
        *e = (*e).max(r.weight);
    }
    Ok(result
        .refs
        .iter()
        .map(|r| {
            let w_top = w_max_by_degree[&r.degree];
            let f = match damping {
                Damping::Delta => (Some(r.paper) == result.giant) as u8 as f64,
                Damping::Linear => 1.0,
            };
            let w_ratio = if w_top == 0 { 0.0 } else { r.weight as f64 / w_top as f64 };
            ImportanceScore {
                paper: r.paper,
                score: r.degree as f64 / result.k_max as f64 * w_ratio * f,
                degree: r.degree,
                k_max: result.k_max,
                weight: r.weight,
                weight_max_at_degree: w_top,
                damping: f,
            }
        })
        .collect())
}
