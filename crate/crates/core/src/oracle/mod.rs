//! Exact solvers that double as verification oracles and as the source of
//! worked search traces for prompt exemplars.
//!
//! Every task has three entry points: a traced depth-first search, a traced
//! greedy pass (locally best child, never backtracks), and a brute-force
//! enumerator used only as a test oracle. The depth-first search is also
//! available untraced through [`exact_solution`], which shares the same child
//! ordering so traced and untraced runs agree on the solution they return.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::task::{Payload, ProblemInstance, Solution, Triple};

pub mod cover;
pub mod matching;
pub mod meeting;
pub mod trip;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SearchMode {
    Greedy,
    Dfs,
}

impl FromStr for SearchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "greedy" => Ok(SearchMode::Greedy),
            "dfs" => Ok(SearchMode::Dfs),
            other => Err(format!("unknown search mode `{other}` (expected greedy|dfs)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PruneReason {
    Window,
    Flight,
    Visited,
    Budget,
    Coverage,
}

impl PruneReason {
    pub const ALL: [PruneReason; 5] = [
        PruneReason::Window,
        PruneReason::Flight,
        PruneReason::Visited,
        PruneReason::Budget,
        PruneReason::Coverage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PruneReason::Window => "window",
            PruneReason::Flight => "flight",
            PruneReason::Visited => "visited",
            PruneReason::Budget => "budget",
            PruneReason::Coverage => "coverage",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Initialization,
    Expansion,
    Evaluation,
    Prune(PruneReason),
    Backtrack,
    Success,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Initialization => f.write_str("Initialization"),
            Action::Expansion => f.write_str("Expansion"),
            Action::Evaluation => f.write_str("Evaluation"),
            Action::Prune(r) => write!(f, "Prune({})", r.as_str()),
            Action::Backtrack => f.write_str("Backtrack"),
            Action::Success => f.write_str("Success"),
        }
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Initialization" => Ok(Action::Initialization),
            "Expansion" => Ok(Action::Expansion),
            "Evaluation" => Ok(Action::Evaluation),
            "Backtrack" => Ok(Action::Backtrack),
            "Success" => Ok(Action::Success),
            _ => {
                let reason = s
                    .strip_prefix("Prune(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| format!("unknown action `{s}`"))?;
                PruneReason::ALL
                    .into_iter()
                    .find(|p| p.as_str() == reason)
                    .map(Action::Prune)
                    .ok_or_else(|| format!("unknown prune reason `{reason}`"))
            }
        }
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The decision a trace step applies to the search state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Choice {
    City(String),
    Cover(Vec<u32>),
    Triple(Triple),
    Friend(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step_label: String,
    pub action: Action,
    /// Depth of the node this step creates or tests; 0 for start nodes.
    pub depth: usize,
    /// Display text of the transition tried, empty for bookkeeping events.
    pub transition: String,
    pub state_summary: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choice: Option<Choice>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub mode: SearchMode,
    pub events: Vec<TraceEvent>,
    pub solution: Option<Solution>,
    /// Number of nodes kept and expanded.
    pub explored_count: usize,
}

impl SearchTrace {
    pub fn succeeded(&self) -> bool {
        self.solution.is_some()
    }

    /// Number of events, the trace length used for context budgeting.
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn prune_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.action, Action::Prune(_)))
            .count()
    }

    pub fn backtrack_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.action == Action::Backtrack)
            .count()
    }

    /// Choices on the accepting path, replayed from the kept expansions.
    pub fn kept_path(&self) -> Vec<&Choice> {
        let mut stack: Vec<&Choice> = Vec::new();
        for ev in &self.events {
            match ev.action {
                Action::Expansion | Action::Success => {
                    if let Some(c) = &ev.choice {
                        stack.push(c);
                    }
                }
                Action::Backtrack => {
                    stack.pop();
                }
                _ => {}
            }
        }
        stack
    }
}

/// Run the traced solver for `instance`.
pub fn solve(instance: &ProblemInstance, mode: SearchMode) -> SearchTrace {
    match (&instance.payload, mode) {
        (Payload::TripPlanning(p), SearchMode::Dfs) => trip::dfs(p),
        (Payload::TripPlanning(p), SearchMode::Greedy) => trip::greedy(p),
        (Payload::VertexCover(p), SearchMode::Dfs) => cover::dfs(p),
        (Payload::VertexCover(p), SearchMode::Greedy) => cover::greedy(p),
        (Payload::ThreeDM(p), SearchMode::Dfs) => matching::dfs(p),
        (Payload::ThreeDM(p), SearchMode::Greedy) => matching::greedy(p),
        (Payload::MeetingPlanning(p), SearchMode::Dfs) => meeting::dfs(p),
        (Payload::MeetingPlanning(p), SearchMode::Greedy) => meeting::greedy(p),
    }
}

/// The depth-first solution without recording a trace. Agrees with
/// `solve(_, Dfs).solution`.
pub fn exact_solution(payload: &Payload) -> Option<Solution> {
    match payload {
        Payload::TripPlanning(p) => trip::solutions(p, 1).into_iter().next(),
        Payload::VertexCover(p) => cover::exact(p),
        Payload::ThreeDM(p) => matching::exact(p),
        Payload::MeetingPlanning(p) => meeting::exact(p),
    }
}

/// Every valid solution by brute force. For vertex cover these are the
/// covers of exactly the target size; for meeting planning the earliest
/// realisation of every feasible ordering that meets the maximum number of
/// friends.
pub fn enumerate_all(instance: &ProblemInstance) -> Result<Vec<Solution>, OracleError> {
    match &instance.payload {
        Payload::TripPlanning(p) => trip::enumerate(p),
        Payload::VertexCover(p) => cover::enumerate(p),
        Payload::ThreeDM(p) => matching::enumerate(p),
        Payload::MeetingPlanning(p) => meeting::enumerate(p),
    }
}

/// Rebuild the solution a trace commits to by replaying its kept
/// expansions and undoing each backtrack.
pub fn replay(instance: &ProblemInstance, trace: &SearchTrace) -> Option<Solution> {
    if trace.events.last().map(|e| e.action) != Some(Action::Success) {
        return None;
    }
    let path = trace.kept_path();
    match &instance.payload {
        Payload::TripPlanning(p) => {
            let order: Vec<&str> = path
                .iter()
                .filter_map(|c| match c {
                    Choice::City(name) => Some(name.as_str()),
                    _ => None,
                })
                .collect();
            Solution::trip_from_order(&order, p).ok()
        }
        Payload::VertexCover(_) => Some(Solution::CoverSet(
            path.iter()
                .flat_map(|c| match c {
                    Choice::Cover(vs) => vs.clone(),
                    _ => Vec::new(),
                })
                .collect(),
        )),
        Payload::ThreeDM(_) => Some(Solution::Matching(
            path.iter()
                .filter_map(|c| match c {
                    Choice::Triple(t) => Some(*t),
                    _ => None,
                })
                .collect(),
        )),
        Payload::MeetingPlanning(p) => {
            let order: Vec<&str> = path
                .iter()
                .filter_map(|c| match c {
                    Choice::Friend(name) => Some(name.as_str()),
                    _ => None,
                })
                .collect();
            meeting::earliest_schedule(p, &order).map(Solution::MeetingSchedule)
        }
    }
}

/// Collects events when enabled; a disabled recorder skips formatting.
pub(crate) struct Recorder {
    enabled: bool,
    events: Vec<TraceEvent>,
    explored: usize,
}

impl Recorder {
    pub(crate) fn new(enabled: bool) -> Self {
        Recorder { enabled, events: Vec::new(), explored: 0 }
    }

    pub(crate) fn push(&mut self, make: impl FnOnce() -> TraceEvent) {
        if self.enabled {
            let ev = make();
            if matches!(ev.action, Action::Expansion | Action::Success) {
                self.explored += 1;
            }
            self.events.push(ev);
        }
    }

    pub(crate) fn finish(self, mode: SearchMode, solution: Option<Solution>) -> SearchTrace {
        SearchTrace { mode, events: self.events, solution, explored_count: self.explored }
    }
}

pub(crate) fn event(
    step_label: impl Into<String>,
    action: Action,
    depth: usize,
    transition: impl Into<String>,
    state_summary: impl Into<String>,
    detail: impl Into<String>,
    choice: Option<Choice>,
) -> TraceEvent {
    TraceEvent {
        step_label: step_label.into(),
        action,
        depth,
        transition: transition.into(),
        state_summary: state_summary.into(),
        detail: detail.into(),
        choice,
    }
}

fn letters(mut idx: usize, base: u8) -> String {
    // bijective base-26: a..z, aa, ab, ...
    let mut out = Vec::new();
    loop {
        out.push(base + (idx % 26) as u8);
        if idx < 26 {
            break;
        }
        idx = idx / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// Step label for the `idx`-th child at `depth` under `parent`: depth 1
/// uses capital letters, then digits and lower-case letters alternate
/// (A, C4, C4c, C4c1, ...).
pub(crate) fn child_label(parent: &str, depth: usize, idx: usize) -> String {
    match depth {
        0 => format!("S{idx}"),
        1 => letters(idx, b'A'),
        d if d % 2 == 0 => format!("{parent}{}", idx + 1),
        _ => format!("{parent}{}", letters(idx, b'a')),
    }
}
