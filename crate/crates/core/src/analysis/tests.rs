use super::*;
use crate::corpus::{Corpus, IngestConfig, PaperRecord};
use crate::giant::{assign_all_giants, GiantConfig};
use crate::metrics::{compute_metrics, Disruption, MetricRow, MetricTable, MetricsConfig};
use crate::Exec;

fn corpus(recs: Vec<PaperRecord>) -> Corpus {
    Corpus::from_records(recs, &IngestConfig::default()).unwrap()
}

fn refs(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn blank_row(i: usize) -> MetricRow {
    MetricRow {
        paper: PaperIdx(i as u32),
        citations: 0,
        citations_window: 0,
        giant_index: 0,
        giant_index_window: 0,
        giant_index_all: 0,
        giant_index_noself: 0,
        disruption: Disruption::default(),
        d: None,
        dp: None,
        dp_degenerate: false,
        c_norm: None,
        g_norm: None,
        team_size: None,
        focal_has_giant: None,
    }
}

fn table(rows: Vec<MetricRow>) -> MetricTable {
    MetricTable {
        config: MetricsConfig::default(),
        rows,
    }
}

fn pipeline(c: &Corpus) -> (crate::giant::GiantAssignments, MetricTable) {
    let (lo, hi) = c.year_bounds().unwrap();
    let a = assign_all_giants(c, lo, hi, &GiantConfig::default(), Exec::Sequential).unwrap();
    let m = compute_metrics(c, &a, &MetricsConfig::default(), Exec::Sequential).unwrap();
    (a, m)
}

#[test]
fn half_isolated_papers_halve_prevalence() {
    let mut recs: Vec<PaperRecord> = refs("a", 5)
        .into_iter()
        .chain(refs("b", 5))
        .map(|id| PaperRecord::new(id, 2000))
        .collect();
    recs.push(PaperRecord::new("x", 2001).with_refs(refs("a", 5)));
    recs.push(PaperRecord::new("f1", 2002).with_refs(refs("a", 5)));
    recs.push(PaperRecord::new("f2", 2002).with_refs(refs("b", 5)));
    let c = corpus(recs);
    let (a, _) = pipeline(&c);
    let rep = prevalence_by_year(&a, &c, &PaperFilter::default());
    let t = rep.table("prevalence_by_year");
    assert_eq!(t.values("year"), vec![&Cell::Int(2001), &Cell::Int(2002)]);
    assert_eq!(t.values("fraction_with_giant"), vec![&Cell::Float(0.0), &Cell::Float(0.5)]);
    assert_eq!(rep.table("prevalence_by_field_year").rows.len(), 2);
}

/// The most cited reference is co-cited only with outside papers, while two
/// minor references are tightly co-cited with each other.
pub(crate) fn isolated_top_cited() -> Vec<PaperRecord> {
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

#[test]
fn isolated_top_cited_reference_is_not_the_giant() {
    let c = corpus(isolated_top_cited());
    let (a, _) = pipeline(&c);
    let f = c.idx_of("focal").unwrap();
    let r = a.get(f).unwrap();
    assert_eq!(r.giant.map(|g| c.id(g)), Some("p"));
    assert_eq!(giant_is_most_cited(r, &c), Some(false));
    let rep = giant_vs_most_cited(&a, &c, &PaperFilter::default());
    let t = rep.table("giant_vs_most_cited");
    assert_eq!(t.rows.last().unwrap()[3], Cell::Float(1.0));
}

#[test]
fn tied_most_cited_counts_as_most_cited() {
    let mut recs: Vec<PaperRecord> = refs("a", 5).into_iter().map(|id| PaperRecord::new(id, 2000)).collect();
    recs.push(PaperRecord::new("x", 2001).with_refs(refs("a", 5)));
    recs.push(PaperRecord::new("f", 2002).with_refs(refs("a", 5)));
    let c = corpus(recs);
    let (a, _) = pipeline(&c);
    let r = a.get(c.idx_of("f").unwrap()).unwrap();
    assert!(r.has_giant());
    assert_eq!(giant_is_most_cited(r, &c), Some(true));
}

#[test]
fn conditional_bins_and_degenerate_bin() {
    let recs: Vec<PaperRecord> = (0..6).map(|i| PaperRecord::new(format!("p{i}"), 2000)).collect();
    let c = corpus(recs);
    let mut rows: Vec<MetricRow> = (0..6).map(blank_row).collect();
    for (i, (cit, g)) in [(1, 0), (1, 0), (100, 3), (105, 0), (0, 0), (1000, 1000)].into_iter().enumerate() {
        rows[i].citations = cit;
        rows[i].giant_index = g;
    }
    let rep = conditional_g_given_c(&table(rows), &c, &PaperFilter::default());
    let t = rep.table("conditional_g_given_c");
    assert_eq!(t.values("c_bin"), vec![&Cell::Int(0), &Cell::Int(20), &Cell::Int(30)]);
    assert_eq!(t.values("p_g_positive"), vec![&Cell::Float(0.0), &Cell::Float(0.5), &Cell::Float(1.0)]);
    assert_eq!(t.metadata["excluded_zero_citations"], 1);
    assert_eq!(log_bin(10), Some(10));
    assert_eq!(log_bin(9), Some(9));
    let h = rep.table("g_given_c_histogram");
    assert_eq!(h.rows.len(), 4);
}

#[test]
fn team_size_groups_partition_population() {
    let recs: Vec<PaperRecord> = (0..5).map(|i| PaperRecord::new(format!("p{i}"), 2000).with_field("f")).collect();
    let c = corpus(recs);
    let mut rows: Vec<MetricRow> = (0..5).map(blank_row).collect();
    for (i, r) in rows.iter_mut().enumerate() {
        r.focal_has_giant = Some(true);
        r.team_size = if i == 4 { None } else { Some(3) };
        r.c_norm = Some(i as f64);
    }
    let rep = team_size_curves(&table(rows), &c);
    let t = rep.table("team_size_curves");
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.values("papers"), vec![&Cell::Int(4)]);
    assert_eq!(t.values("mean_c_norm"), vec![&Cell::Float(1.5)]);
    assert_eq!(t.metadata["excluded_missing_team_size"], 1);
}

#[test]
fn uniform_percentiles_fill_bins_equally() {
    let rows: Vec<MetricRow> = (0..100)
        .map(|i| {
            let mut r = blank_row(i);
            r.focal_has_giant = Some(i % 2 == 0);
            r.dp = Some(i as f64 * 100.0 / 99.0);
            r.team_size = Some(1 + (i % 3) as u32);
            r
        })
        .collect();
    let rep = disruption_profile(&table(rows));
    let t = rep.table("disruption_g_norm");
    assert!(t.values("papers").iter().all(|c| **c == Cell::Int(10)));
    let split = rep.table("disruption_by_giant");
    let with: i64 = split.values("with_giant").iter().map(|c| c.as_i64().unwrap()).sum();
    assert_eq!(with, 50);
    let team: i64 = rep.table("no_giant_by_team_size").values("papers").iter().map(|c| c.as_i64().unwrap()).sum();
    assert_eq!(team, 100);
}

fn cohort_corpus(identical: bool) -> (Corpus, MetricTable) {
    // 40 cohort papers in 2000, each cited once a year through 2015; every
    // other one gets an extra citation per year when trajectories differ.
    let mut recs = vec![];
    for i in 0..40 {
        recs.push(PaperRecord::new(format!("k{i:02}"), 2000));
    }
    for y in 2001..=2015 {
        for i in 0..40 {
            recs.push(PaperRecord::new(format!("c{y}_{i:02}"), y).with_refs([format!("k{i:02}")]));
            if !identical && i % 2 == 0 {
                recs.push(PaperRecord::new(format!("d{y}_{i:02}"), y).with_refs([format!("k{i:02}")]));
            }
        }
    }
    let c = corpus(recs);
    let mut rows: Vec<MetricRow> = (0..c.len()).map(blank_row).collect();
    for p in c.indices() {
        let r = &mut rows[p.get()];
        r.citations = c.citing(p).len() as u32;
        r.citations_window = c.citing_through(p, c.year(p) + 5).len() as u32;
        if c.id(p).starts_with('k') {
            let i: u32 = c.id(p)[1..].parse().unwrap();
            r.giant_index_window = if i % 4 == 0 { i } else { 0 };
        }
    }
    (c, table(rows))
}

#[test]
fn identical_trajectories_coincide() {
    let (c, m) = cohort_corpus(true);
    let spec = CohortSpec {
        year: Some(2000),
        band: CitationBand::Absolute { lo: 5, hi: 5 },
        ..CohortSpec::default()
    };
    let rep = cohort_future_impact(&m, &c, &spec).unwrap();
    let t = rep.table("cohort_trajectories");
    let rows_at = |t_off: i64| -> Vec<f64> {
        t.rows
            .iter()
            .filter(|r| r[1] == Cell::Int(t_off))
            .map(|r| r[3].as_f64().unwrap())
            .collect()
    };
    for off in 0..=15 {
        let v = rows_at(off);
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|&x| x == off as f64));
    }
    let s = rep.table("cohort_groups");
    assert_eq!(s.metadata["cohort_size"], 40);
    assert_eq!(s.values("papers"), vec![&Cell::Int(1), &Cell::Int(1), &Cell::Int(31)]);
}

#[test]
fn cohort_band_is_inclusive_and_size_checked() {
    let (c, m) = cohort_corpus(false);
    // C_5 is 5 for odd and 10 for even cohort papers.
    let spec = |lo, hi| CohortSpec {
        year: Some(2000),
        band: CitationBand::Absolute { lo, hi },
        min_cohort: 20,
        ..CohortSpec::default()
    };
    let rep = cohort_future_impact(&m, &c, &spec(5, 10)).unwrap();
    assert_eq!(rep.table("cohort_groups").metadata["cohort_size"], 40);
    let rep = cohort_future_impact(&m, &c, &spec(10, 10)).unwrap();
    assert_eq!(rep.table("cohort_groups").metadata["cohort_size"], 20);
    assert!(matches!(
        cohort_future_impact(&m, &c, &spec(6, 9)),
        Err(crate::Error::CohortTooSmall { size: 0, .. })
    ));
    assert!(cohort_future_impact(&m, &c, &spec(9, 6)).is_err());
    let rel = CitationBand::Relative { center: 100, fraction: 0.2 };
    assert_eq!(rel.bounds().unwrap(), (80, 120));
}

#[test]
fn matched_sets_respect_constraints() {
    let mut recs = vec![];
    let fields = ["f0", "f1"];
    for i in 0..60 {
        recs.push(PaperRecord::new(format!("p{i:02}"), 2000 + (i % 2) as i32).with_field(fields[(i / 2) % 2]));
    }
    let c = corpus(recs);
    let mut rows: Vec<MetricRow> = (0..c.len()).map(blank_row).collect();
    for p in c.indices() {
        let i: u32 = c.id(p)[1..].parse().unwrap();
        rows[p.get()].citations = 50 + i;
        rows[p.get()].giant_index = i % 7;
    }
    let m = table(rows);
    let targets: Vec<PaperIdx> = ["p10", "p31", "p59"].iter().map(|id| c.idx_of(id).unwrap()).collect();
    let matched = match_controls(&targets, &m, &c, 0.2).unwrap();
    for mt in &matched {
        let (t, tc) = (c.paper(mt.target), m.row(mt.target).citations as f64);
        assert!(!mt.controls.is_empty());
        for &x in &mt.controls {
            assert_ne!(x, mt.target);
            assert_eq!(c.paper(x).year, t.year);
            assert_eq!(c.paper(x).field, t.field);
            assert!((m.row(x).citations as f64 - tc).abs() <= 0.2 * tc);
        }
    }
    let rep = matched_cohort_compare(&targets, &m, &c, &MatchConfig::default()).unwrap();
    assert_eq!(rep.table("matched_summary").values("matched_targets"), vec![&Cell::Int(3)]);
}

#[test]
fn target_above_all_controls_counts_as_higher() {
    let recs: Vec<PaperRecord> = (0..6).map(|i| PaperRecord::new(format!("p{i}"), 2000).with_field("f")).collect();
    let c = corpus(recs);
    let mut rows: Vec<MetricRow> = (0..6).map(blank_row).collect();
    for (i, r) in rows.iter_mut().enumerate() {
        r.citations = 100;
        r.giant_index = if i == 0 { 40 } else { i as u32 };
    }
    rows[5].citations = 10;
    let m = table(rows);
    let t = c.idx_of("p0").unwrap();
    let lonely = c.idx_of("p5").unwrap();
    let rep = matched_cohort_compare(&[t, lonely], &m, &c, &MatchConfig::default()).unwrap();
    let s = rep.table("matched_summary");
    assert_eq!(s.values("fraction_higher"), vec![&Cell::Float(1.0)]);
    assert_eq!(s.values("flagged_no_controls"), vec![&Cell::Int(1)]);
    assert_eq!(s.values("median_ratio"), vec![&Cell::Float(40.0 / 2.5)]);
    let per = rep.table("matched_targets");
    assert_eq!(per.values("comparison"), vec![&Cell::from("higher"), &Cell::from("no_controls")]);
}

#[test]
fn tables_are_deterministic_on_generated_data() {
    let cfg = crate::synthgen::GeneratorConfig {
        n_papers: 1500,
        first_year: 2000,
        last_year: 2011,
        seed: 3,
        ..Default::default()
    };
    let g = crate::synthgen::generate(&cfg).unwrap();
    let render = |exec| {
        let c = corpus(g.records.clone());
        let a = assign_all_giants(&c, 2000, 2011, &GiantConfig::default(), exec).unwrap();
        let m = compute_metrics(&c, &a, &MetricsConfig::default(), exec).unwrap();
        let mut out = Vec::new();
        for rep in [
            prevalence_by_year(&a, &c, &PaperFilter::default()),
            conditional_g_given_c(&m, &c, &PaperFilter::default()),
            team_size_curves(&m, &c),
            disruption_profile(&m),
        ] {
            for t in rep.tables {
                t.write_tsv(&mut out).unwrap();
            }
        }
        out
    };
    assert_eq!(render(Exec::Sequential), render(Exec::default()));
}
