use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::trip::solutions;
use crate::task::{DayWindow, Payload, Solution, TripPayload};

use super::names::{CITIES, EVENTS};
use super::LevelRow;

const DISTRACTOR_DENSITY: f64 = 0.4;
/// Probability that a listed flight also runs the other way.
const RETURN_FLIGHT: f64 = 0.8;

/// One draw: a hidden city order with stays, 2-3 windows pinned to its
/// calendar and a flight network around it. Rejected unless the hidden
/// order is the only valid plan.
pub(super) fn draw(row: &LevelRow, seed: u64) -> Option<(Payload, Solution)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = row.trip_cities as usize;
    let mut order: Vec<&str> = CITIES.choose_multiple(&mut rng, n).copied().collect();
    order.shuffle(&mut rng);

    let mut stays = vec![2u32; n];
    let mut spare = row.trip_days + row.trip_cities - 1 - 2 * row.trip_cities;
    while spare > 0 {
        let i = rng.gen_range(0..n);
        if stays[i] < 5 {
            stays[i] += 1;
            spare -= 1;
        }
    }

    let mut starts = Vec::with_capacity(n);
    let mut day = 1;
    for &s in &stays {
        starts.push(day);
        day += s - 1;
    }

    let pinned = rng.gen_range(2..=3).min(n);
    let mut windows = BTreeMap::new();
    let events: Vec<&str> = EVENTS.choose_multiple(&mut rng, pinned).copied().collect();
    let mut chosen: Vec<usize> = (0..n).collect();
    chosen.shuffle(&mut rng);
    for (&i, label) in chosen.iter().take(pinned).zip(events) {
        windows.insert(
            order[i].to_string(),
            DayWindow { first: starts[i], last: starts[i] + stays[i] - 1, label: label.to_string() },
        );
    }

    let mut flights = BTreeSet::new();
    let add = |flights: &mut BTreeSet<(String, String)>, a: &str, b: &str, rng: &mut ChaCha8Rng| {
        flights.insert((a.to_string(), b.to_string()));
        if rng.gen_bool(RETURN_FLIGHT) {
            flights.insert((b.to_string(), a.to_string()));
        }
    };
    for w in order.windows(2) {
        add(&mut flights, w[0], w[1], &mut rng);
    }
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || !rng.gen_bool(DISTRACTOR_DENSITY) {
                continue;
            }
            let (a, b) = if rng.gen_bool(0.5) { (order[i], order[j]) } else { (order[j], order[i]) };
            add(&mut flights, a, b, &mut rng);
        }
    }

    // list cities in a fresh random order so position leaks nothing
    let mut cities: Vec<String> = order.iter().map(|c| c.to_string()).collect();
    cities.shuffle(&mut rng);
    let payload = TripPayload {
        cities,
        total_days: row.trip_days,
        stays: order.iter().zip(&stays).map(|(c, &s)| (c.to_string(), s)).collect(),
        windows,
        flights,
    };
    let found = solutions(&payload, 2);
    if found.len() != 1 {
        return None;
    }
    let truth = Solution::trip_from_order(&order, &payload).ok()?;
    debug_assert_eq!(found[0], truth);
    Some((Payload::TripPlanning(payload), truth))
}
