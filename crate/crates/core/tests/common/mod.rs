//! Random instance builders independent of the library generator. They
//! draw raw payloads, solvable or not, so oracle checks see both outcomes.
#![allow(dead_code)]

pub mod contracts;
pub mod equivalence;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reasonbench::task::{
    DayWindow, Friend, MeetingPayload, Payload, ProblemInstance, Solution, TaskKind, ThreeDMPayload, Travel,
    TripPayload, VertexCoverPayload,
};

const CITIES: [&str; 8] = ["Oslo", "Porto", "Lyon", "Graz", "Bergen", "Split", "Gdansk", "Turin"];
const FRIENDS: [&str; 7] = ["Ann", "Bo", "Cy", "Dee", "Eli", "Fay", "Gus"];
const PLACES: [&str; 5] = ["Pier", "Park", "Mall", "Dock", "Hill"];

pub fn rng(salt: u64, seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(salt.wrapping_mul(0x1000_0000_01B3) ^ seed)
}

/// Wraps a payload; the ground truth is a placeholder of the right kind
/// since only oracle and verifier inputs matter here.
pub fn instance(payload: Payload) -> ProblemInstance {
    let ground_truth = match &payload {
        Payload::TripPlanning(_) => Solution::TripPlan(Vec::new()),
        Payload::VertexCover(_) => Solution::CoverSet(BTreeSet::new()),
        Payload::ThreeDM(_) => Solution::Matching(BTreeSet::new()),
        Payload::MeetingPlanning(_) => Solution::MeetingSchedule(Vec::new()),
    };
    ProblemInstance { id: "random".into(), kind: payload.kind(), level: 1, seed: 0, payload, ground_truth }
}

/// Trip with 3-6 cities. Two thirds of draws plant a feasible order and
/// derive windows and flights from it; the rest are unconstrained noise.
pub fn trip(r: &mut impl Rng) -> TripPayload {
    let n = r.gen_range(3..=6);
    let mut cities: Vec<String> = CITIES.choose_multiple(r, n).map(|s| s.to_string()).collect();
    let stays: BTreeMap<String, u32> = cities.iter().map(|c| (c.clone(), r.gen_range(2..=5))).collect();
    let total_days = stays.values().sum::<u32>() - (n as u32 - 1);
    let mut flights = BTreeSet::new();
    let mut windows = BTreeMap::new();
    if r.gen_ratio(2, 3) {
        let mut order = cities.clone();
        order.shuffle(r);
        let mut day = 1;
        for (i, c) in order.iter().enumerate() {
            let end = day + stays[c] - 1;
            if r.gen_bool(0.5) {
                windows.insert(c.clone(), DayWindow { first: day, last: end, label: "event".into() });
            }
            if i + 1 < n {
                flights.insert((c.clone(), order[i + 1].clone()));
                if r.gen_bool(0.5) {
                    flights.insert((order[i + 1].clone(), c.clone()));
                }
            }
            day = end;
        }
    }
    for a in &cities {
        for b in &cities {
            if a != b && r.gen_bool(0.3) {
                flights.insert((a.clone(), b.clone()));
            }
        }
        if r.gen_bool(0.15) {
            let len = r.gen_range(1..=stays[a]);
            let first = r.gen_range(1..=total_days + 1 - len);
            windows.insert(a.clone(), DayWindow { first, last: first + len - 1, label: "show".into() });
        }
    }
    cities.shuffle(r);
    TripPayload { cities, total_days, stays, windows, flights }
}

pub fn cover(r: &mut impl Rng) -> VertexCoverPayload {
    let n = r.gen_range(3..=12u32);
    let density = r.gen_range(0.15..0.6);
    let mut edges = BTreeSet::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.gen_bool(density) {
                edges.insert((u, v));
            }
        }
    }
    if edges.is_empty() {
        edges.insert((0, 1));
    }
    VertexCoverPayload { vertex_count: n, edges, target_size: r.gen_range(1..n) }
}

pub fn matching(r: &mut impl Rng) -> ThreeDMPayload {
    let n = r.gen_range(2..=5u32);
    let mut triples = BTreeSet::new();
    if r.gen_bool(0.5) {
        let mut ys: Vec<u32> = (0..n).collect();
        let mut zs: Vec<u32> = (0..n).collect();
        ys.shuffle(r);
        zs.shuffle(r);
        for x in 0..n {
            triples.insert((x, ys[x as usize], zs[x as usize]));
        }
    }
    let target = (triples.len() as u32 + r.gen_range(n..=3 * n)).min(n * n * n);
    while (triples.len() as u32) < target {
        triples.insert((r.gen_range(0..n), r.gen_range(0..n), r.gen_range(0..n)));
    }
    ThreeDMPayload { n, triples }
}

pub fn meeting(r: &mut impl Rng) -> MeetingPayload {
    let locs = r.gen_range(2..=5);
    let locations: Vec<String> = PLACES[..locs].iter().map(|s| s.to_string()).collect();
    let mut travel_minutes = Vec::new();
    for i in 0..locs {
        for j in i + 1..locs {
            travel_minutes.push(Travel { a: locations[i].clone(), b: locations[j].clone(), minutes: r.gen_range(5..=40) });
        }
    }
    let day_start = 9 * 60;
    let friends = FRIENDS[..r.gen_range(1..=6)]
        .iter()
        .map(|name| {
            let from = day_start + r.gen_range(0..10) * 30;
            let len = r.gen_range(2..=8) * 30;
            Friend {
                name: name.to_string(),
                location: locations[r.gen_range(1..locs)].clone(),
                available_from: from,
                available_until: from + len,
                min_minutes: r.gen_range(1..=len / 15) * 15,
            }
        })
        .collect();
    MeetingPayload { locations: locations.clone(), travel_minutes, friends, start_location: locations[0].clone(), day_start }
}

pub fn random_instance(kind: TaskKind, seed: u64) -> ProblemInstance {
    let mut r = rng(kind as u64 + 1, seed);
    instance(match kind {
        TaskKind::TripPlanning => Payload::TripPlanning(trip(&mut r)),
        TaskKind::VertexCover => Payload::VertexCover(cover(&mut r)),
        TaskKind::ThreeDM => Payload::ThreeDM(matching(&mut r)),
        TaskKind::MeetingPlanning => Payload::MeetingPlanning(meeting(&mut r)),
    })
}
