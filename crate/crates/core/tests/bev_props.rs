use std::collections::BTreeMap;

use crashcast::bev::field::{FLOW_X, FLOW_Y, OFFSET_X, OFFSET_Y, SEG};
use crashcast::bev::{decode_instances, encode_placed, DecodeParams, PlacedAgent};
use crashcast::geometry::{GridSpec, Pose2, Vec2};
use proptest::prelude::*;

fn grid() -> GridSpec {
    GridSpec::new(-10.0, 10.0, -10.0, 10.0, 0.5).unwrap()
}

/// Up to four agents with a start pose and a constant per-step velocity, over four steps.
fn scene() -> impl Strategy<Value = Vec<Vec<PlacedAgent>>> {
    prop::collection::vec(
        (-9.0..9.0f64, -9.0..9.0f64, -3.2..3.2f64, -2.0..2.0f64, -2.0..2.0f64, 0.5..5.0f64, 0.5..2.2f64),
        1..5,
    )
    .prop_map(|agents| {
        (0..4)
            .map(|tau| {
                agents
                    .iter()
                    .enumerate()
                    .map(|(i, &(x, y, yaw, vx, vy, l, w))| PlacedAgent {
                        id: i as u32 + 1,
                        pose: Pose2::new(x + vx * tau as f64, y + vy * tau as f64, yaw),
                        length: l.max(w),
                        width: l.min(w),
                    })
                    .collect()
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn offsets_and_flow_are_exact(slots in scene()) {
        let g = grid();
        let (field, imap) = encode_placed(&g, 1, &slots);
        for (tau, agents) in slots.iter().enumerate() {
            let centers: BTreeMap<u32, Vec2> = agents.iter().map(|a| (a.id, a.pose.position())).collect();
            let ids = imap.ids(tau);
            for (idx, &id) in ids.iter().enumerate() {
                if id == 0 {
                    prop_assert_eq!(field.channel(tau, SEG)[idx], 0.0);
                    continue;
                }
                prop_assert_eq!(field.channel(tau, SEG)[idx], 1.0);
                let off = Vec2::new(
                    f64::from(field.channel(tau, OFFSET_X)[idx]),
                    f64::from(field.channel(tau, OFFSET_Y)[idx]),
                );
                prop_assert!((g.center_of(idx) + off).distance(centers[&id]) <= 1e-6);
                let expected = slots
                    .get(tau + 1)
                    .and_then(|next| next.iter().find(|a| a.id == id))
                    .map_or(Vec2::ZERO, |a| a.pose.position() - centers[&id]);
                prop_assert_eq!(field.channel(tau, FLOW_X)[idx], expected.x as f32);
                prop_assert_eq!(field.channel(tau, FLOW_Y)[idx], expected.y as f32);
            }
        }
    }

    #[test]
    fn decoded_instances_stay_inside_foreground(slots in scene()) {
        let (field, imap) = encode_placed(&grid(), 1, &slots);
        let decoded = decode_instances(&field, &DecodeParams::default());
        for tau in 0..imap.steps() {
            for (&d, &t) in decoded.ids(tau).iter().zip(imap.ids(tau)) {
                prop_assert!(d == 0 || t != 0);
            }
        }
    }
}
