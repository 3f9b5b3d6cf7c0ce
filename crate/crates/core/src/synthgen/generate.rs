use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use super::config::{GeneratorConfig, RefDist, TeamSizeDist};
use super::sampler::WeightTree;
use crate::corpus::{write_records, InputFormat};
use crate::corpus::{Author, PaperRecord, PubType};
use crate::error::{Error, Result};

const MAX_TEAM: u32 = 25;

/// Ground truth for the planted signals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantedLabels {
    pub cohort: Vec<String>,
    pub planted_giants: Vec<String>,
    pub companions: BTreeMap<String, Vec<String>>,
    pub outsiders: Vec<String>,
    /// `(citing, cited)` pairs with an injected shared author.
    pub self_citations: Vec<(String, String)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub generator_version: String,
    pub config_hash: String,
    pub config: GeneratorConfig,
    pub papers: usize,
    pub references: usize,
}

#[derive(Clone, Debug)]
pub struct GeneratedCorpus {
    pub config: GeneratorConfig,
    pub records: Vec<PaperRecord>,
    pub labels: PlantedLabels,
}

impl GeneratedCorpus {
    pub fn manifest(&self) -> Manifest {
        Manifest {
            generator_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: self.config.config_hash(),
            config: self.config.clone(),
            papers: self.records.len(),
            references: self.records.iter().map(|r| r.references.len()).sum(),
        }
    }

    /// Writes `corpus.jsonl`, `manifest.json` and `planted.json` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let corpus_path = dir.join("corpus.jsonl");
        let file = fs::File::create(&corpus_path).map_err(|e| Error::io(&corpus_path, e))?;
        let mut w = BufWriter::new(file);
        write_records(&self.records, &mut w, InputFormat::Jsonl).map_err(|e| Error::io(&corpus_path, e))?;
        w.flush().map_err(|e| Error::io(&corpus_path, e))?;
        for (name, value) in [
            ("manifest.json", serde_json::to_value(self.manifest())?),
            ("planted.json", serde_json::to_value(&self.labels)?),
        ] {
            let path = dir.join(name);
            let text = serde_json::to_string_pretty(&value)?;
            fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

pub fn paper_id(i: usize) -> String {
    format!("P{i:06}")
}

struct State {
    cites: Vec<u32>,
    multiplier: Vec<f64>,
    age_factor: Vec<f64>,
    blocked: Vec<bool>,
    field: Vec<u32>,
    field_pos: Vec<usize>,
    global: WeightTree,
    by_field: Vec<WeightTree>,
    field_members: Vec<Vec<usize>>,
    attachment: f64,
}

impl State {
    fn refresh(&mut self, j: usize, active: bool) {
        let w = if !active || self.blocked[j] {
            0.0
        } else {
            (self.cites[j] as f64 + 1.0).powf(self.attachment) * self.multiplier[j] * self.age_factor[j]
        };
        self.global.set(j, w);
        self.by_field[self.field[j] as usize].set(self.field_pos[j], w);
    }

    fn draw(&self, rng: &mut ChaCha8Rng, field: u32, affinity: f64) -> Option<usize> {
        let tree = &self.by_field[field as usize];
        if affinity > 0.0 && rng.random::<f64>() < affinity && tree.total() > 0.0 {
            let pos = tree.sample(rng.random())?;
            return Some(self.field_members[field as usize][pos]);
        }
        self.global.sample(rng.random())
    }
}

fn year_sizes(cfg: &GeneratorConfig) -> Vec<usize> {
    let years = cfg.years();
    let base = cfg.n_papers / years;
    let extra = cfg.n_papers % years;
    (0..years).map(|y| base + usize::from(y < extra)).collect()
}

fn team_size(rng: &mut ChaCha8Rng, dist: &TeamSizeDist) -> u32 {
    let m = match *dist {
        TeamSizeDist::Fixed { size } => size,
        TeamSizeDist::Poisson { mean } => {
            let lambda = mean - 1.0;
            if lambda > 0.0 {
                1 + Poisson::new(lambda).expect("positive rate").sample(rng) as u32
            } else {
                1
            }
        }
        TeamSizeDist::Uniform { max } => rng.random_range(1..=max.max(1)),
    };
    m.clamp(1, MAX_TEAM)
}

fn ref_count(rng: &mut ChaCha8Rng, cfg: &GeneratorConfig) -> usize {
    match cfg.ref_dist {
        RefDist::Fixed => cfg.mean_refs.round() as usize,
        RefDist::PoissonShifted { shift } => {
            let lambda = cfg.mean_refs - shift as f64;
            let extra = if lambda > 0.0 {
                Poisson::new(lambda).expect("positive rate").sample(rng) as usize
            } else {
                0
            };
            shift as usize + extra
        }
    }
}

fn author_name(k: usize) -> Author {
    let initial = (b'a' + (k % 26) as u8) as char;
    Author::new(initial, &format!("name{}", k / 26))
}

/// Generates a corpus deterministically from `config.seed`.
pub fn generate(config: &GeneratorConfig) -> Result<GeneratedCorpus> {
    config.validate()?;
    let cfg = config;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sizes = year_sizes(cfg);
    let n = cfg.n_papers;
    let mut year_of = Vec::with_capacity(n);
    let mut year_start = Vec::with_capacity(sizes.len() + 1);
    for (y, &s) in sizes.iter().enumerate() {
        year_start.push(year_of.len());
        year_of.extend(std::iter::repeat_n(cfg.first_year + y as i32, s));
    }
    year_start.push(n);

    let field: Vec<u32> = (0..n).map(|_| rng.random_range(0..cfg.field_count)).collect();
    let mut field_members = vec![Vec::new(); cfg.field_count as usize];
    let mut field_pos = vec![0; n];
    for (i, &f) in field.iter().enumerate() {
        field_pos[i] = field_members[f as usize].len();
        field_members[f as usize].push(i);
    }
    let mut st = State {
        cites: vec![0; n],
        multiplier: vec![1.0; n],
        age_factor: vec![1.0; n],
        blocked: vec![false; n],
        field,
        field_pos,
        global: WeightTree::new(n),
        by_field: field_members.iter().map(|m| WeightTree::new(m.len())).collect(),
        field_members,
        attachment: cfg.attachment,
    };

    let author_pool = (n / 2).max(100);
    let mut labels = PlantedLabels::default();

    // Giant-rich cohort: scheduled citers and companions.
    let year_index = |y: i32| (y - cfg.first_year) as usize;
    let mut scheduled: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut companions_of: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut cohort = Vec::new();
    let mut planted = FxHashSet::default();
    if let Some(g) = &cfg.planted.giant_rich {
        let cy = year_index(g.cohort_year);
        let pool: Vec<usize> = (year_start[cy]..year_start[cy + 1]).collect();
        cohort = pool.choose_multiple(&mut rng, g.cohort_size).copied().collect();
        cohort.sort_unstable();
        let n_planted = (g.planted_fraction * g.cohort_size as f64).round() as usize;
        let mut shuffled = cohort.clone();
        shuffled.shuffle(&mut rng);
        planted.extend(shuffled[..n_planted.min(shuffled.len())].iter().copied());
        let earlier = year_start[cy];
        for &p in cohort.iter().filter(|p| planted.contains(p)) {
            let comps: Vec<usize> = (0..earlier).collect::<Vec<_>>()
                .choose_multiple(&mut rng, g.companions as usize)
                .copied()
                .collect();
            companions_of.insert(p, comps);
        }
        // Demands per window year, spread so each year stays balanced.
        let window_years: Vec<usize> = (1..=g.window as usize).map(|d| cy + d).collect();
        let mut demands: Vec<Vec<usize>> = vec![Vec::new(); window_years.len()];
        for &p in &cohort {
            for c in 0..g.window_citations as usize {
                demands[(c + p) % window_years.len()].push(p);
            }
        }
        for (slot, mut dem) in demands.into_iter().enumerate() {
            let y = window_years[slot];
            let citers: Vec<usize> = (year_start[y]..year_start[y + 1]).collect();
            dem.sort_by_key(|&p| p);
            // Round-robin over a shuffled citer list keeps each target's
            // citers distinct within the year.
            let mut order = citers.clone();
            order.shuffle(&mut rng);
            for (k, p) in dem.into_iter().enumerate() {
                scheduled[order[k % order.len()]].push(p);
            }
        }
        for &p in &cohort {
            st.blocked[p] = true;
        }
        labels.cohort = cohort.iter().map(|&p| paper_id(p)).collect();
        let mut pl: Vec<usize> = planted.iter().copied().collect();
        pl.sort_unstable();
        labels.planted_giants = pl.iter().map(|&p| paper_id(p)).collect();
        labels.companions = companions_of
            .iter()
            .map(|(&p, c)| (paper_id(p), c.iter().map(|&x| paper_id(x)).collect()))
            .collect();
    }

    let mut outsider = vec![false; n];
    if let Some(s) = &cfg.planted.reference_skipping {
        let cohort_set: FxHashSet<usize> = cohort.iter().copied().collect();
        for (i, o) in outsider.iter_mut().enumerate().skip(year_start[1]) {
            if !cohort_set.contains(&i) && rng.random::<f64>() < s.fraction {
                *o = true;
            }
        }
        labels.outsiders = (0..n).filter(|&i| outsider[i]).map(paper_id).collect();
    }

    let mut refs_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut authors_of: Vec<Vec<Author>> = Vec::with_capacity(n);
    for yi in 0..sizes.len() {
        let year = cfg.first_year + yi as i32;
        if let Some(tau) = cfg.aging {
            for j in 0..year_start[yi] {
                st.age_factor[j] = (-((year - year_of[j]) as f64) / tau).exp();
                st.refresh(j, true);
            }
        }
        if let Some(g) = &cfg.planted.giant_rich {
            if year == g.cohort_year + g.window as i32 + 1 {
                for &p in &cohort {
                    st.blocked[p] = false;
                    if planted.contains(&p) {
                        st.multiplier[p] = g.boost;
                    }
                    st.refresh(p, true);
                }
            }
        }
        let earlier = year_start[yi];
        for i in year_start[yi]..year_start[yi + 1] {
            let mut refs: Vec<usize> = Vec::new();
            let mut seen = FxHashSet::default();
            let mut forbidden = FxHashSet::default();
            for &p in &scheduled[i] {
                if seen.insert(p) {
                    refs.push(p);
                }
                if let (Some(comps), Some(g)) = (companions_of.get(&p), &cfg.planted.giant_rich) {
                    for &c in comps.choose_multiple(&mut rng, g.companions_per_citation as usize) {
                        if seen.insert(c) {
                            refs.push(c);
                        }
                    }
                }
            }
            let target = ref_count(&mut rng, cfg).min(earlier).max(refs.len());
            if earlier > 0 {
                let mut attempts = 0;
                while refs.len() < target && attempts < 64 * target.max(1) {
                    attempts += 1;
                    let cand = if outsider[i] {
                        Some(rng.random_range(0..earlier))
                    } else if !refs.is_empty() && rng.random::<f64>() < cfg.triadic_closure {
                        let r = refs[rng.random_range(0..refs.len())];
                        match refs_of[r].choose(&mut rng) {
                            Some(&c) => Some(c),
                            None => continue,
                        }
                    } else {
                        st.draw(&mut rng, st.field[i], cfg.field_affinity)
                    };
                    let Some(c) = cand else { break };
                    if seen.contains(&c) || forbidden.contains(&c) || st.blocked[c] {
                        continue;
                    }
                    if outsider[c] && refs_of[c].iter().any(|r| seen.contains(r)) {
                        continue;
                    }
                    if outsider[c] {
                        forbidden.extend(refs_of[c].iter().copied());
                    }
                    seen.insert(c);
                    refs.push(c);
                }
            }
            for &r in &refs {
                st.cites[r] += 1;
                st.refresh(r, true);
            }

            let m = team_size(&mut rng, &cfg.team_size) as usize;
            let mut names: Vec<usize> = Vec::with_capacity(m);
            while names.len() < m {
                let k = rng.random_range(0..author_pool);
                if !names.contains(&k) {
                    names.push(k);
                }
            }
            let mut authors: Vec<Author> = names.into_iter().map(author_name).collect();
            if !refs.is_empty() && rng.random::<f64>() < cfg.planted.self_citation_rate {
                let r = *refs.choose(&mut rng).expect("non-empty");
                if let Some(a) = authors_of[r].choose(&mut rng).cloned() {
                    if !authors.contains(&a) {
                        authors[0] = a;
                    }
                    labels.self_citations.push((paper_id(i), paper_id(r)));
                }
            }
            authors_of.push(authors);
            refs.sort_unstable();
            refs_of[i] = refs;
        }
        for i in year_start[yi]..year_start[yi + 1] {
            st.refresh(i, true);
        }
    }

    let records = (0..n)
        .map(|i| {
            let pub_type = if rng.random::<f64>() < cfg.review_fraction {
                PubType::Review
            } else {
                PubType::Article
            };
            PaperRecord {
                id: paper_id(i),
                year: year_of[i],
                field: format!("f{}", st.field[i]),
                venue: None,
                pub_type,
                authors: std::mem::take(&mut authors_of[i]),
                team_size: None,
                references: refs_of[i].iter().map(|&r| paper_id(r)).collect(),
            }
        })
        .collect();
    Ok(GeneratedCorpus {
        config: cfg.clone(),
        records,
        labels,
    })
}
