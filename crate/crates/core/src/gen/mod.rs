//! Seeded instance generation. Every instance is a pure function of its
//! [`GenSpec`]; a rejected draw is retried with a sub-seed derived from the
//! spec seed and the attempt number.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::task::{ProblemInstance, TaskKind};

mod cover;
mod fixtures;
mod matching;
mod meeting;
mod names;
mod trip;

pub use fixtures::{load_fixture, FIXTURE_NAMES};

/// Attempts allowed by default before a spec is declared unsatisfiable.
pub const DEFAULT_MAX_REGEN: u32 = 2000;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("no acceptable {kind} instance at level {level} for seed {seed} within {attempts} attempts")]
    RegenBudgetExhausted { kind: TaskKind, level: u32, seed: u64, attempts: u32 },
    #[error("level {level} is not in the difficulty table for {kind}")]
    UnsupportedLevel { kind: TaskKind, level: u32 },
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("invalid generation spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: TaskKind,
    pub level: u32,
    pub seed: u64,
    pub max_regen: u32,
}

impl GenSpec {
    pub fn new(kind: TaskKind, level: u32, seed: u64) -> Self {
        GenSpec { kind, level, seed, max_regen: DEFAULT_MAX_REGEN }
    }
}

/// Instance sizes for one difficulty level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelRow {
    pub level: u32,
    pub trip_cities: u32,
    pub trip_days: u32,
    pub meeting_friends: u32,
    pub meeting_locations: u32,
    pub cover_vertices: u32,
    pub cover_density: f64,
    pub matching_n: u32,
    pub matching_triples: u32,
}

/// Level to size mapping. A config file may substitute its own table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DifficultyTable {
    pub rows: Vec<LevelRow>,
}

const TRIP_DAYS: [u32; 12] = [3, 5, 7, 10, 13, 16, 18, 20, 23, 25, 28, 30];

impl Default for DifficultyTable {
    fn default() -> Self {
        let rows = (1..=12u32)
            .map(|l| LevelRow {
                level: l,
                trip_cities: l,
                trip_days: TRIP_DAYS[l as usize - 1],
                meeting_friends: l,
                meeting_locations: l + 1,
                cover_vertices: 4 + 2 * l,
                cover_density: 0.35,
                matching_n: 2 + l,
                matching_triples: 3 * (2 + l),
            })
            .collect();
        DifficultyTable { rows }
    }
}

impl DifficultyTable {
    pub fn row(&self, level: u32) -> Option<&LevelRow> {
        self.rows.iter().find(|r| r.level == level)
    }

    /// Checks that levels and every size column strictly increase and that
    /// each row admits an instance.
    pub fn validate(&self) -> Result<(), String> {
        for r in &self.rows {
            let stays = r.trip_days + r.trip_cities.saturating_sub(1);
            if r.trip_cities == 0 || stays < 2 * r.trip_cities || stays > 5 * r.trip_cities {
                return Err(format!("level {}: {} days cannot be split into {} stays of 2-5 days", r.level, r.trip_days, r.trip_cities));
            }
            if r.meeting_locations < 2 || r.meeting_friends as usize > crate::oracle::meeting::DP_LIMIT {
                return Err(format!("level {}: meeting sizes out of range", r.level));
            }
            if r.matching_triples < r.matching_n || r.matching_triples > r.matching_n.pow(3) {
                return Err(format!("level {}: {} triples cannot hold n = {}", r.level, r.matching_triples, r.matching_n));
            }
            if !(0.0..=1.0).contains(&r.cover_density) || r.cover_vertices < 2 {
                return Err(format!("level {}: vertex cover sizes out of range", r.level));
            }
        }
        for w in self.rows.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let increasing = b.level > a.level
                && b.trip_cities > a.trip_cities
                && b.trip_days > a.trip_days
                && b.meeting_friends > a.meeting_friends
                && b.meeting_locations > a.meeting_locations
                && b.cover_vertices > a.cover_vertices
                && b.matching_n > a.matching_n
                && b.matching_triples > a.matching_triples;
            if !increasing {
                return Err(format!("row for level {} does not grow over level {}", b.level, a.level));
            }
        }
        Ok(())
    }
}

/// splitmix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for regeneration attempt `attempt` of `seed`.
pub fn sub_seed(seed: u64, attempt: u32) -> u64 {
    mix(seed ^ mix(u64::from(attempt).wrapping_add(0x5EED)))
}

pub fn instance_id(kind: TaskKind, level: u32, seed: u64) -> String {
    format!("{}-L{level}-{seed:016x}", kind.slug())
}

pub fn generate(spec: &GenSpec) -> Result<ProblemInstance, GenError> {
    generate_with(&DifficultyTable::default(), spec)
}

pub fn generate_with(table: &DifficultyTable, spec: &GenSpec) -> Result<ProblemInstance, GenError> {
    if spec.level == 0 || spec.max_regen == 0 {
        return Err(GenError::InvalidSpec("level and max_regen must be at least 1".into()));
    }
    let row = table
        .row(spec.level)
        .ok_or(GenError::UnsupportedLevel { kind: spec.kind, level: spec.level })?;
    for attempt in 0..spec.max_regen {
        let s = sub_seed(spec.seed, attempt);
        let drawn = match spec.kind {
            TaskKind::TripPlanning => trip::draw(row, s),
            TaskKind::VertexCover => cover::draw(row, s),
            TaskKind::ThreeDM => matching::draw(row, s),
            TaskKind::MeetingPlanning => meeting::draw(row, s),
        };
        if let Some((payload, ground_truth)) = drawn {
            let inst = ProblemInstance {
                id: instance_id(spec.kind, spec.level, spec.seed),
                kind: spec.kind,
                level: spec.level,
                seed: spec.seed,
                payload,
                ground_truth,
            };
            debug_assert!(inst.validate().is_ok());
            log::debug!("{} accepted on attempt {attempt}", inst.id);
            return Ok(inst);
        }
    }
    Err(GenError::RegenBudgetExhausted {
        kind: spec.kind,
        level: spec.level,
        seed: spec.seed,
        attempts: spec.max_regen,
    })
}

/// `count` instances with seeds `base_seed, base_seed + 1, ...`.
pub fn generate_batch(
    table: &DifficultyTable,
    kind: TaskKind,
    level: u32,
    base_seed: u64,
    count: usize,
    max_regen: u32,
) -> Result<Vec<ProblemInstance>, GenError> {
    (0..count as u64)
        .map(|i| {
            generate_with(table, &GenSpec { kind, level, seed: base_seed.wrapping_add(i), max_regen })
        })
        .collect()
}
