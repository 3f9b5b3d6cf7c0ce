use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Reference-list length distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RefDist {
    /// Every paper lists `round(mean_refs)` references.
    Fixed,
    /// `shift + Poisson(mean_refs - shift)`.
    PoissonShifted { shift: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TeamSizeDist {
    Fixed { size: u32 },
    /// `1 + Poisson(mean - 1)`, truncated at 25.
    Poisson { mean: f64 },
    Uniform { max: u32 },
}

/// Papers of `cohort_year` whose citations during the window are scheduled:
/// each cohort paper receives exactly `window_citations` citations over the
/// `window` following years and no others. Planted members are always cited
/// together with several of their fixed companion papers, which makes them
/// the giant of those citers; after the window their attachment weight is
/// multiplied by `boost`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GiantRichPlant {
    pub cohort_year: i32,
    pub cohort_size: usize,
    pub planted_fraction: f64,
    pub window: u32,
    pub window_citations: u32,
    pub companions: u32,
    pub companions_per_citation: u32,
    pub boost: f64,
}

impl Default for GiantRichPlant {
    fn default() -> Self {
        GiantRichPlant {
            cohort_year: 0,
            cohort_size: 300,
            planted_fraction: 0.3,
            window: 5,
            window_citations: 20,
            companions: 7,
            companions_per_citation: 5,
            boost: 2.0,
        }
    }
}

/// Papers drawing their references uniformly at random (ignoring
/// attachment and field), whose later citers never co-cite those references.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkipPlant {
    pub fraction: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedSignals {
    /// Probability that a paper copies one author of one of its references.
    pub self_citation_rate: f64,
    pub giant_rich: Option<GiantRichPlant>,
    pub reference_skipping: Option<SkipPlant>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_papers: usize,
    pub first_year: i32,
    pub last_year: i32,
    pub mean_refs: f64,
    pub ref_dist: RefDist,
    /// Attachment probability is proportional to `(citations + 1)^attachment`.
    pub attachment: f64,
    /// When set, attachment weight also decays as `exp(-age / aging)`, age in years.
    pub aging: Option<f64>,
    pub field_count: u32,
    /// Probability that a reference is drawn from the citing paper's field.
    pub field_affinity: f64,
    /// Probability that a reference is copied from the references of one
    /// already chosen.
    pub triadic_closure: f64,
    pub team_size: TeamSizeDist,
    pub review_fraction: f64,
    pub seed: u64,
    pub planted: PlantedSignals,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_papers: 10_000,
            first_year: 1990,
            last_year: 2014,
            mean_refs: 18.0,
            ref_dist: RefDist::PoissonShifted { shift: 3 },
            attachment: 1.0,
            aging: Some(2.0),
            field_count: 20,
            field_affinity: 0.9,
            triadic_closure: 0.3,
            team_size: TeamSizeDist::Poisson { mean: 3.5 },
            review_fraction: 0.0,
            seed: 1,
            planted: PlantedSignals::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn years(&self) -> usize {
        (self.last_year - self.first_year + 1).max(0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleConfig(m));
        if self.years() < 2 {
            return bad("need at least two publication years".into());
        }
        if !(self.mean_refs.is_finite() && self.mean_refs >= 0.0) {
            return bad(format!("mean_refs {} must be a non-negative number", self.mean_refs));
        }
        if let RefDist::PoissonShifted { shift } = self.ref_dist {
            if (shift as f64) > self.mean_refs {
                return bad(format!("shift {shift} exceeds mean_refs {}", self.mean_refs));
            }
        }
        let per_year = self.n_papers / self.years();
        if (per_year as f64) < self.mean_refs.ceil().max(1.0) {
            return bad(format!(
                "{} papers over {} years ({per_year}/year) cannot supply {} references per paper",
                self.n_papers,
                self.years(),
                self.mean_refs
            ));
        }
        if self.field_count == 0 {
            return bad("field_count must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.field_affinity)
            || !(0.0..=1.0).contains(&self.triadic_closure)
            || !(0.0..=1.0).contains(&self.review_fraction)
            || !(0.0..=1.0).contains(&self.planted.self_citation_rate)
        {
            return bad("probabilities must lie in [0, 1]".into());
        }
        if !(self.attachment.is_finite() && self.attachment >= 0.0) {
            return bad("attachment exponent must be >= 0".into());
        }
        if self.aging.is_some_and(|t| !(t.is_finite() && t > 0.0)) {
            return bad("aging time constant must be positive".into());
        }
        if let Some(g) = &self.planted.giant_rich {
            if g.cohort_year <= self.first_year || g.cohort_year + g.window as i32 > self.last_year {
                return bad("giant-rich cohort and window must fit inside the year range".into());
            }
            if g.cohort_size > per_year {
                return bad(format!("cohort of {} exceeds {per_year} papers per year", g.cohort_size));
            }
            if g.window == 0 || g.companions_per_citation > g.companions || g.boost <= 0.0 {
                return bad("giant-rich plant needs window > 0, companions_per_citation <= companions, boost > 0".into());
            }
            let per_window_year = (g.cohort_size as u64 * g.window_citations as u64).div_ceil(g.window as u64);
            if per_window_year > per_year as u64 {
                return bad(format!(
                    "{per_window_year} scheduled cohort citations per year exceed {per_year} citing papers"
                ));
            }
        }
        if let Some(s) = &self.planted.reference_skipping {
            if !(0.0..=1.0).contains(&s.fraction) {
                return bad("reference skipping fraction must lie in [0, 1]".into());
            }
        }
        Ok(())
    }

    /// Hash of the canonical JSON encoding (hex, 16 chars).
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(json)[..8])
    }
}
