use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::meeting::{exact, optimum_count};
use crate::task::{Friend, MeetingPayload, Payload, Solution, Travel};

use super::names::{FRIENDS, PLACES};
use super::LevelRow;

const DAY_START: u32 = 9 * 60;
const LATEST_END: u32 = 21 * 60;

/// Friends scattered over random locations with quarter-hour windows.
/// Draws where nobody can be met are rejected.
pub(super) fn draw(row: &LevelRow, seed: u64) -> Option<(Payload, Solution)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut locations: Vec<String> = PLACES
        .choose_multiple(&mut rng, row.meeting_locations as usize)
        .map(|s| s.to_string())
        .collect();
    locations.shuffle(&mut rng);
    let mut travel_minutes = Vec::new();
    for (i, a) in locations.iter().enumerate() {
        for b in &locations[i + 1..] {
            travel_minutes.push(Travel { a: a.clone(), b: b.clone(), minutes: rng.gen_range(5..=30) });
        }
    }
    let mut names: Vec<&str> = FRIENDS.choose_multiple(&mut rng, row.meeting_friends as usize).copied().collect();
    names.shuffle(&mut rng);
    let friends = names
        .into_iter()
        .map(|name| {
            let location = locations[rng.gen_range(1..locations.len())].clone();
            let length = 15 * rng.gen_range(4..=16u32);
            let from = DAY_START + 15 * rng.gen_range(0..=(LATEST_END - DAY_START - length) / 15);
            let min_minutes = 15 * rng.gen_range(1..=(length / 15).min(8));
            Friend {
                name: name.to_string(),
                location,
                available_from: from,
                available_until: from + length,
                min_minutes,
            }
        })
        .collect();
    let payload = MeetingPayload {
        start_location: locations[0].clone(),
        locations,
        travel_minutes,
        friends,
        day_start: DAY_START,
    };
    if optimum_count(&payload) == 0 {
        return None;
    }
    let truth = exact(&payload)?;
    Some((Payload::MeetingPlanning(payload), truth))
}
