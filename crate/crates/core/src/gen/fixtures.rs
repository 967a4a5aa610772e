//! Hand-encoded instances.

use std::collections::BTreeSet;

use crate::oracle::trip::solutions;
use crate::task::{DayWindow, Payload, ProblemInstance, TaskKind, TripPayload};

use super::GenError;

pub const FIXTURE_NAMES: &[&str] = &["appendixB-task1"];

pub fn load_fixture(name: &str) -> Result<ProblemInstance, GenError> {
    match name {
        "appendixB-task1" => Ok(six_city_trip(name)),
        _ => Err(GenError::UnknownFixture(name.to_string())),
    }
}

/// Six cities over 16 days with a wedding, a family visit and a workshop.
fn six_city_trip(id: &str) -> ProblemInstance {
    let stays = [("Riga", 3), ("Edinburgh", 4), ("Milan", 2), ("Copenhagen", 4), ("Vilnius", 5), ("Brussels", 3)];
    let window = |first, last, label: &str| DayWindow { first, last, label: label.to_string() };
    let both = [
        ("Edinburgh", "Copenhagen"),
        ("Vilnius", "Brussels"),
        ("Copenhagen", "Riga"),
        ("Milan", "Vilnius"),
        ("Milan", "Brussels"),
        ("Edinburgh", "Milan"),
        ("Edinburgh", "Riga"),
        ("Edinburgh", "Brussels"),
        ("Milan", "Copenhagen"),
        ("Copenhagen", "Brussels"),
        ("Copenhagen", "Vilnius"),
        ("Milan", "Riga"),
        ("Riga", "Brussels"),
    ];
    let mut flights: BTreeSet<(String, String)> = both
        .iter()
        .flat_map(|&(a, b)| [(a.to_string(), b.to_string()), (b.to_string(), a.to_string())])
        .collect();
    flights.insert(("Riga".into(), "Vilnius".into()));
    let payload = TripPayload {
        cities: stays.iter().map(|(c, _)| c.to_string()).collect(),
        total_days: 16,
        stays: stays.iter().map(|&(c, s)| (c.to_string(), s)).collect(),
        windows: [
            ("Milan".to_string(), window(4, 5, "wedding")),
            ("Copenhagen".to_string(), window(5, 8, "visit relatives")),
            ("Vilnius".to_string(), window(10, 14, "workshop")),
        ]
        .into(),
        flights,
    };
    let ground_truth = solutions(&payload, 1).pop().expect("fixture is solvable");
    ProblemInstance {
        id: id.to_string(),
        kind: TaskKind::TripPlanning,
        level: 6,
        seed: 0,
        payload: Payload::TripPlanning(payload),
        ground_truth,
    }
}
