mod common;

use common::*;
use lineage_core::cocite::CoCitationSnapshot;
use lineage_core::corpus::PaperIdx;
use lineage_core::giant::GiantConfig;
use lineage_core::metrics::MetricsConfig;
use lineage_core::synthgen::{GeneratorConfig, PlantedSignals, SkipPlant};
use lineage_core::Exec;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn percolation_matches_naive_sweep(seed in any::<u64>()) {
        let mut gen = SubnetworkInstances::new(seed);
        let c = gen.network();
        let s = CoCitationSnapshot::build(&c, 2001, Exec::Sequential).unwrap();
        for _ in 0..20 {
            let refs = gen.ref_set(&c);
            let cfg = gen.config();
            if let Err(e) = check_percolation(&s, &c, &refs, &cfg) {
                prop_assert!(false, "{}", e);
            }
        }
    }

    #[test]
    fn snapshots_symmetric_monotone_and_incremental(seed in 0u64..1000, alpha in 0.0f64..2.0) {
        let cfg = GeneratorConfig {
            n_papers: 300,
            first_year: 2000,
            last_year: 2005,
            mean_refs: 6.0,
            attachment: alpha,
            seed,
            ..GeneratorConfig::default()
        };
        let (_, c) = synthetic(&cfg);
        let mut inc = CoCitationSnapshot::empty(&c);
        let mut prev: Option<CoCitationSnapshot> = None;
        for y in 2000..=2005 {
            inc.advance(&c, y, Exec::default()).unwrap();
            let batch = CoCitationSnapshot::build(&c, y, Exec::Sequential).unwrap();
            prop_assert!(inc == batch, "year {}", y);
            for a in c.indices() {
                for (b, w) in batch.neighbors(a) {
                    prop_assert_eq!(batch.weight(b, a), w);
                    prop_assert!(a != b);
                }
                if let Some(p) = &prev {
                    for (b, w) in p.neighbors(a) {
                        prop_assert!(batch.weight(a, b) >= w);
                    }
                }
            }
            prev = Some(batch);
        }
    }
}

#[test]
fn giant_index_conserves_assignments() {
    for seed in 0..4 {
        let cfg = GeneratorConfig {
            n_papers: 2000,
            first_year: 1990,
            last_year: 1999,
            seed,
            planted: PlantedSignals {
                self_citation_rate: 0.2,
                reference_skipping: Some(SkipPlant { fraction: 0.2 }),
                ..PlantedSignals::default()
            },
            ..GeneratorConfig::default()
        };
        let (_, c) = synthetic(&cfg);
        let (a, m) = pipeline(&c, &GiantConfig::default(), &MetricsConfig::default(), Exec::default());
        let g_total: u64 = m.rows.iter().map(|r| r.giant_index_all as u64).sum();
        assert_eq!(g_total, a.with_giant() as u64);
        assert!(metric_violations(&c, &a, &m).is_empty());
        assert!(a.results().iter().any(|r| r.giant.is_none()));
    }
}

#[test]
fn parallel_and_sequential_agree() {
    let cfg = GeneratorConfig {
        n_papers: 3000,
        seed: 9,
        ..GeneratorConfig::default()
    };
    let (_, c) = synthetic(&cfg);
    let (a1, m1) = pipeline(&c, &GiantConfig::default(), &MetricsConfig::default(), Exec::Sequential);
    let (a2, m2) = lineage_core::exec::with_workers(3, || {
        pipeline(&c, &GiantConfig::default(), &MetricsConfig::default(), Exec::default())
    });
    assert_eq!(a1.results(), a2.results());
    assert_eq!(m1.rows, m2.rows);
    let focal = c.idx_of(c.id(PaperIdx(c.len() as u32 - 1))).unwrap();
    assert_eq!(a1.get(focal), a2.get(focal));
}
