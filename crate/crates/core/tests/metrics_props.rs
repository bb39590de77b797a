use std::collections::BTreeMap;

use crashcast::bev::InstanceMap;
use crashcast::geometry::{GridSpec, Vec2};
use crashcast::metrics::{apa, instance_masks, match_accident, miou, vpq, AccidentReport, Counts, MatchCounts};
use proptest::prelude::*;

const STEPS: usize = 3;

fn grid() -> GridSpec {
    GridSpec::new(0.0, 3.0, 0.0, 3.0, 0.5).unwrap()
}

fn imap() -> impl Strategy<Value = InstanceMap> {
    let n = grid().len();
    prop::collection::vec(prop::collection::vec(prop_oneof![3 => Just(0u32), 1 => 1..5u32], n), STEPS).prop_map(
        |steps| {
            let mut m = InstanceMap::empty(grid(), STEPS);
            for (s, ids) in steps.into_iter().enumerate() {
                m.ids_mut(s).copy_from_slice(&ids);
            }
            m
        },
    )
}

/// One id bijection (with 0 fixed) that maps `a` onto `b` at every step.
fn equal_up_to_relabel(a: &InstanceMap, b: &InstanceMap) -> bool {
    let mut fwd: BTreeMap<u32, u32> = BTreeMap::new();
    let mut back: BTreeMap<u32, u32> = BTreeMap::new();
    for s in 0..a.steps() {
        for (&x, &y) in a.ids(s).iter().zip(b.ids(s)) {
            if (x == 0) != (y == 0) {
                return false;
            }
            if *fwd.entry(x).or_insert(y) != y || *back.entry(y).or_insert(x) != x {
                return false;
            }
        }
    }
    true
}

fn counts() -> impl Strategy<Value = MatchCounts> {
    prop::array::uniform3((0..50u64, 0..50u64, 0..50u64))
        .prop_map(|c| MatchCounts { per_threshold: c.map(|(tp, fp, fn_)| Counts { tp, fp, fn_ }) })
}

fn report() -> impl Strategy<Value = AccidentReport> {
    prop_oneof![
        Just(AccidentReport::none()),
        (1..6u32, 1..6u32, -30.0..30.0f64, -30.0..30.0f64, -30.0..30.0f64, -30.0..30.0f64, 0.0..2.0f64)
            .prop_filter("distinct ids", |t| t.0 != t.1)
            .prop_map(|(a, b, x0, y0, x1, y1, t)| {
                AccidentReport::collision([a, b], [Vec2::new(x0, y0), Vec2::new(x1, y1)], t, 0.5)
            }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn apa_scale_invariant(c in counts(), k in 1..20u64) {
        let mut scaled = c;
        for t in scaled.per_threshold.iter_mut() {
            *t = Counts { tp: t.tp * k, fp: t.fp * k, fn_: t.fn_ * k };
        }
        prop_assert!((apa(&c) - apa(&scaled)).abs() <= 1e-12);
    }

    #[test]
    fn apa_monotone_in_each_count(c in counts(), i in 0..3usize, which in 0..3usize) {
        let mut more = c;
        let t = &mut more.per_threshold[i];
        match which {
            0 => t.tp += 1,
            1 => t.fp += 1,
            _ => t.fn_ += 1,
        }
        let (before, after) = (apa(&c), apa(&more));
        if which == 0 {
            prop_assert!(after >= before);
        } else {
            prop_assert!(after <= before);
        }
    }

    #[test]
    fn tp_nested_across_thresholds(pairs in prop::collection::vec((report(), report()), 1..20),
                                   d1 in 0.1..20.0f64, gap in 0.0..20.0f64) {
        let d2 = d1 + gap;
        for (p, g) in &pairs {
            prop_assert!(match_accident(p, g, d1).tp <= match_accident(p, g, d2).tp);
        }
    }

    #[test]
    fn motion_metrics_in_unit_range(a in imap(), b in imap()) {
        let v = vpq(&a, &b).unwrap();
        let m = miou(&instance_masks(&a), &instance_masks(&b)).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!((0.0..=1.0).contains(&m));
    }

    #[test]
    fn vpq_one_iff_relabelled_copy(a in imap(), perm in Just([1u32, 2, 3, 4]).prop_shuffle(),
                                   flip in prop::option::of((0..STEPS, 0..36usize, 0..5u32))) {
        let mut b = a.clone();
        b.relabel(|id| if id == 0 { 0 } else { perm[id as usize - 1] + 10 });
        if let Some((s, cell, id)) = flip {
            b.ids_mut(s)[cell] = id;
        }
        let v = vpq(&b, &a).unwrap();
        prop_assert_eq!(v == 1.0, equal_up_to_relabel(&a, &b), "vpq {}", v);
    }
}
