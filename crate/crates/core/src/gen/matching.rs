use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::matching::exact;
use crate::task::{Payload, Solution, ThreeDMPayload};

use super::LevelRow;

/// A planted perfect matching plus random distractor triples. The ground
/// truth is the matching the search finds, which need not be the planted one.
pub(super) fn draw(row: &LevelRow, seed: u64) -> Option<(Payload, Solution)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = row.matching_n;
    let mut ys: Vec<u32> = (0..n).collect();
    let mut zs: Vec<u32> = (0..n).collect();
    ys.shuffle(&mut rng);
    zs.shuffle(&mut rng);
    let mut triples: BTreeSet<(u32, u32, u32)> = (0..n).map(|x| (x, ys[x as usize], zs[x as usize])).collect();
    while (triples.len() as u32) < row.matching_triples {
        triples.insert((rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)));
    }
    let payload = ThreeDMPayload { n, triples };
    let truth = exact(&payload)?;
    Some((Payload::ThreeDM(payload), truth))
}
