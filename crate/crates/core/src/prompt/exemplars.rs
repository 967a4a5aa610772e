use crate::gen::{generate_with, load_fixture, DifficultyTable, GenSpec, DEFAULT_MAX_REGEN};
use crate::oracle::{solve, SearchMode, SearchTrace};
use crate::task::{ProblemInstance, TaskKind};

use super::{PromptError, PromptMode};

/// Worked examples are always drawn at this level, whatever the target level.
pub const EXEMPLAR_LEVEL: u32 = 6;
pub const DIRECT_SHOTS: usize = 5;
const EXEMPLAR_SEED: u64 = 0xE8E3_0000;
/// Candidates examined before giving up on a greedy trace that succeeds.
const MAX_CANDIDATES: u64 = 64;

/// Exemplars for `target`: the bundled six-city trip first (for trips),
/// then generated instances at [`EXEMPLAR_LEVEL`]. Direct prompting takes
/// [`DIRECT_SHOTS`] of them, CoT and AoT one with a successful trace of the
/// matching search mode. The target itself is never chosen.
pub fn select_exemplars(
    target: &ProblemInstance,
    mode: PromptMode,
    table: &DifficultyTable,
) -> Result<Vec<(ProblemInstance, SearchTrace)>, PromptError> {
    let wanted = if mode == PromptMode::Direct { DIRECT_SHOTS } else { 1 };
    let search = mode.search_mode().unwrap_or(SearchMode::Dfs);
    let fixture = (target.kind == TaskKind::TripPlanning)
        .then(|| load_fixture("appendixB-task1"))
        .transpose()?;
    let generated = (0..MAX_CANDIDATES).map(|i| {
        generate_with(
            table,
            &GenSpec {
                kind: target.kind,
                level: EXEMPLAR_LEVEL,
                seed: EXEMPLAR_SEED + i,
                max_regen: DEFAULT_MAX_REGEN,
            },
        )
    });
    let mut out = Vec::with_capacity(wanted);
    for candidate in fixture.into_iter().map(Ok).chain(generated) {
        let inst = candidate?;
        if inst.id == target.id {
            continue;
        }
        let trace = solve(&inst, search);
        if !trace.succeeded() {
            continue;
        }
        out.push((inst, trace));
        if out.len() == wanted {
            return Ok(out);
        }
    }
    Err(PromptError::ExemplarCount { mode, expected: wanted.to_string(), found: out.len() })
}
