use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::cover::{exact, minimum_size};
use crate::task::{Payload, Solution, VertexCoverPayload};

use super::LevelRow;

/// Erdos-Renyi graph at the row's density; the target is the minimum cover
/// size. Edgeless draws are rejected.
pub(super) fn draw(row: &LevelRow, seed: u64) -> Option<(Payload, Solution)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = row.cover_vertices;
    let mut edges = BTreeSet::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(row.cover_density) {
                edges.insert((u, v));
            }
        }
    }
    if edges.is_empty() {
        return None;
    }
    let target_size = minimum_size(n, &edges);
    let payload = VertexCoverPayload { vertex_count: n, edges, target_size };
    let truth = exact(&payload)?;
    Some((Payload::VertexCover(payload), truth))
}
