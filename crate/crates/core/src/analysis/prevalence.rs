use std::collections::BTreeMap;

use super::{fraction, AnalysisReport, AnalysisTable, Cell, PaperFilter};
use crate::corpus::Corpus;
use crate::giant::{GiantAssignments, GiantResult};

/// Share of focal papers with a giant, per year and per field and year.
pub fn prevalence_by_year(
    assignments: &GiantAssignments,
    corpus: &Corpus,
    filter: &PaperFilter,
) -> AnalysisReport {
    let filter = filter.resolve(corpus);
    let mut by_year: BTreeMap<i32, (usize, usize)> = BTreeMap::new();
    let mut by_field: BTreeMap<(&str, i32), (usize, usize)> = BTreeMap::new();
    for r in assignments.results().iter().filter(|r| filter.accepts(corpus, r.focal)) {
        let p = corpus.paper(r.focal);
        for acc in [
            by_year.entry(p.year).or_default(),
            by_field.entry((p.field.as_str(), p.year)).or_default(),
        ] {
            acc.0 += 1;
            acc.1 += r.has_giant() as usize;
        }
    }
    let mut years = AnalysisTable::new(
        "prevalence_by_year",
        &["year", "focal_papers", "with_giant", "fraction_with_giant"],
    );
    for (&y, &(n, g)) in &by_year {
        years.push(vec![y.into(), n.into(), g.into(), fraction(g, n).into()]);
    }
    years.note(
        "reference_fraction_with_giant",
        serde_json::json!({"1955": 0.916, "2014": 0.958}),
    );
    years.note("filter", &filter);
    let mut fields = AnalysisTable::new(
        "prevalence_by_field_year",
        &["field", "year", "focal_papers", "with_giant", "fraction_with_giant"],
    );
    for (&(f, y), &(n, g)) in &by_field {
        fields.push(vec![f.into(), y.into(), n.into(), g.into(), fraction(g, n).into()]);
    }
    vec![years, fields].into()
}

/// Whether the giant is among the most cited references, counting citations
/// received through the focal paper's publication year. `None` without a giant.
pub fn giant_is_most_cited(result: &GiantResult, corpus: &Corpus) -> Option<bool> {
    let giant = result.giant?;
    let year = corpus.year(result.focal);
    let cites = |p| corpus.citing_through(p, year).len();
    let top = corpus.refs(result.focal).iter().map(|&r| cites(r)).max()?;
    Some(cites(giant) == top)
}

/// Per year: share of giant-having papers whose giant is not the most cited
/// of their references at publication time.
pub fn giant_vs_most_cited(
    assignments: &GiantAssignments,
    corpus: &Corpus,
    filter: &PaperFilter,
) -> AnalysisReport {
    let filter = filter.resolve(corpus);
    let mut by_year: BTreeMap<i32, (usize, usize)> = BTreeMap::new();
    for r in assignments.results().iter().filter(|r| filter.accepts(corpus, r.focal)) {
        if let Some(most) = giant_is_most_cited(r, corpus) {
            let acc = by_year.entry(corpus.year(r.focal)).or_default();
            acc.0 += 1;
            acc.1 += (!most) as usize;
        }
    }
    let mut t = AnalysisTable::new(
        "giant_vs_most_cited",
        &["year", "giant_papers", "giant_not_most_cited", "fraction_not_most_cited"],
    );
    let (mut total, mut not_most) = (0, 0);
    for (&y, &(n, k)) in &by_year {
        total += n;
        not_most += k;
        t.push(vec![y.into(), n.into(), k.into(), fraction(k, n).into()]);
    }
    t.push(vec![Cell::from("all"), total.into(), not_most.into(), fraction(not_most, total).into()]);
    t.note("reference_fraction_not_most_cited", 0.725);
    t.note(
        "reference_fraction_giant_is_most_cited",
        serde_json::json!({"1955": 0.44, "2014": 0.26}),
    );
    t.note("filter", &filter);
    vec![t].into()
}
