//! Generator contracts: determinism, validity, sizes, planted optimality.

use proptest::prelude::*;
use reasonbench::eval::verify;
use reasonbench::gen::{generate, generate_batch, DifficultyTable, GenError, GenSpec, DEFAULT_MAX_REGEN};
use reasonbench::oracle::enumerate_all;
use reasonbench::task::{Payload, TaskKind, Verdict};

fn any_kind() -> impl Strategy<Value = TaskKind> {
    prop::sample::select(TaskKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn same_spec_same_instance(kind in any_kind(), level in 1u32..=10, seed in any::<u64>()) {
        let spec = GenSpec::new(kind, level, seed);
        let a = generate(&spec).unwrap();
        prop_assert_eq!(&a, &generate(&spec).unwrap());
        prop_assert_eq!(a.kind, kind);
        prop_assert_eq!(a.level, level);
        prop_assert!(a.validate().is_ok(), "{:?}", a.validate());
        prop_assert_eq!(verify(&a, &a.ground_truth).unwrap(), Verdict::Success);
    }

    #[test]
    fn sizes_follow_the_table(kind in any_kind(), level in 1u32..=10, seed in any::<u64>()) {
        let table = DifficultyTable::default();
        let row = table.row(level).unwrap();
        let inst = generate(&GenSpec::new(kind, level, seed)).unwrap();
        match &inst.payload {
            Payload::TripPlanning(p) => {
                prop_assert_eq!(p.cities.len() as u32, row.trip_cities);
                prop_assert_eq!(p.total_days, row.trip_days);
            }
            Payload::VertexCover(p) => prop_assert_eq!(p.vertex_count, row.cover_vertices),
            Payload::ThreeDM(p) => {
                prop_assert_eq!(p.n, row.matching_n);
                prop_assert_eq!(p.triples.len() as u32, row.matching_triples);
            }
            Payload::MeetingPlanning(p) => {
                prop_assert_eq!(p.friends.len() as u32, row.meeting_friends);
                prop_assert_eq!(p.locations.len() as u32, row.meeting_locations);
            }
        }
    }
}

/// Small instances checked against exhaustive enumeration: trips have a
/// unique plan, and every ground truth attains the enumerated optimum.
#[test]
fn ground_truth_is_unique_or_optimal_on_small_levels() {
    for kind in TaskKind::ALL {
        // largest levels still inside the enumeration guards
        let top = match kind {
            TaskKind::TripPlanning => 8,
            TaskKind::VertexCover => 6,
            TaskKind::ThreeDM => 4,
            TaskKind::MeetingPlanning => 7,
        };
        for level in 1..=top {
            for seed in 0..8 {
                let inst = generate(&GenSpec::new(kind, level, seed)).unwrap();
                let all = enumerate_all(&inst).unwrap();
                assert!(all.contains(&inst.ground_truth), "{}: ground truth not enumerated", inst.id);
                if kind == TaskKind::TripPlanning {
                    assert_eq!(all.len(), 1, "{}: trip plan is not unique", inst.id);
                }
            }
        }
    }
}

#[test]
fn batches_are_distinct_and_reproducible() {
    let table = DifficultyTable::default();
    for kind in TaskKind::ALL {
        let a = generate_batch(&table, kind, 6, 77, 12, DEFAULT_MAX_REGEN).unwrap();
        let b = generate_batch(&table, kind, 6, 77, 12, DEFAULT_MAX_REGEN).unwrap();
        assert_eq!(a, b);
        let ids: std::collections::BTreeSet<_> = a.iter().map(|i| &i.id).collect();
        assert_eq!(ids.len(), 12, "{kind:?}: duplicate ids");
        let payloads: std::collections::BTreeSet<String> =
            a.iter().map(|i| serde_json::to_string(&i.payload).unwrap()).collect();
        assert_eq!(payloads.len(), 12, "{kind:?}: duplicate payloads");
    }
}

#[test]
fn bad_specs_are_reported() {
    assert!(matches!(generate(&GenSpec::new(TaskKind::ThreeDM, 13, 0)), Err(GenError::UnsupportedLevel { .. })));
    let zero = GenSpec { max_regen: 0, ..GenSpec::new(TaskKind::VertexCover, 3, 0) };
    assert!(generate(&zero).is_err());
}

#[test]
fn table_deserialises_strictly() {
    let table = DifficultyTable::default();
    let text = serde_json::to_string(&table).unwrap();
    assert_eq!(serde_json::from_str::<DifficultyTable>(&text).unwrap(), table);
    let extra = text.replacen("\"level\":1,", "\"level\":1,\"bogus\":3,", 1);
    assert!(serde_json::from_str::<DifficultyTable>(&extra).is_err());
}
