//! Canonical domain types shared by every stage of the pipeline.
//!
//! Everything here is an immutable value once constructed. Instances are
//! serialized one JSON record per line (see [`read_instances`] and
//! [`write_instances`]).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("city `{0}` has no stay entry")]
    UnknownCity(String),
    #[error("empty input")]
    EmptyInput,
    #[error("unknown task kind `{0}`")]
    UnknownKind(String),
    #[error("invalid instance {id}: {reason}")]
    InvalidInstance { id: String, reason: String },
    #[error("{path}:{line}: {source}")]
    Decode {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKind {
    VertexCover,
    ThreeDM,
    TripPlanning,
    MeetingPlanning,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::VertexCover,
        TaskKind::ThreeDM,
        TaskKind::TripPlanning,
        TaskKind::MeetingPlanning,
    ];

    /// Short identifier used in file names, ids and on the command line.
    pub fn slug(self) -> &'static str {
        match self {
            TaskKind::VertexCover => "vertex-cover",
            TaskKind::ThreeDM => "3dm",
            TaskKind::TripPlanning => "trip-planning",
            TaskKind::MeetingPlanning => "meeting-planning",
        }
    }

    /// Human-readable title used in report headings.
    pub fn title(self) -> &'static str {
        match self {
            TaskKind::VertexCover => "Vertex Cover",
            TaskKind::ThreeDM => "3-Dimensional Matching (3DM)",
            TaskKind::TripPlanning => "Trip Planning",
            TaskKind::MeetingPlanning => "Meeting Planning",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for TaskKind {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match norm.as_str() {
            "vertexcover" | "vc" => Ok(TaskKind::VertexCover),
            "3dm" | "threedm" | "3dimensionalmatching" => Ok(TaskKind::ThreeDM),
            "tripplanning" | "trip" => Ok(TaskKind::TripPlanning),
            "meetingplanning" | "meeting" => Ok(TaskKind::MeetingPlanning),
            _ => Err(TaskError::UnknownKind(s.to_string())),
        }
    }
}

/// Inclusive day range `[first, last]` a city's stay must cover.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DayWindow {
    pub first: u32,
    pub last: u32,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripPayload {
    /// Cities in the order the problem statement declares them.
    pub cities: Vec<String>,
    pub total_days: u32,
    pub stays: BTreeMap<String, u32>,
    #[serde(default)]
    pub windows: BTreeMap<String, DayWindow>,
    /// Directed `(from, to)` pairs.
    pub flights: BTreeSet<(String, String)>,
}

impl TripPayload {
    pub fn has_flight(&self, from: &str, to: &str) -> bool {
        self.flights.contains(&(from.to_string(), to.to_string()))
    }

    pub fn stay(&self, city: &str) -> Option<u32> {
        self.stays.get(city).copied()
    }

    /// Outgoing flight targets of `city`, in lexicographic order.
    pub fn destinations<'a>(&'a self, city: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.flights
            .range((city.to_string(), String::new())..)
            .take_while(move |(from, _)| from == city)
            .map(|(_, to)| to.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexCoverPayload {
    pub vertex_count: u32,
    /// Unordered edges stored as `(low, high)`.
    pub edges: BTreeSet<(u32, u32)>,
    pub target_size: u32,
}

pub type Triple = (u32, u32, u32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeDMPayload {
    pub n: u32,
    pub triples: BTreeSet<Triple>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Travel {
    pub a: String,
    pub b: String,
    pub minutes: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Friend {
    pub name: String,
    pub location: String,
    /// Minutes of day, inclusive start.
    pub available_from: u32,
    /// Minutes of day, exclusive end.
    pub available_until: u32,
    pub min_minutes: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeetingPayload {
    pub locations: Vec<String>,
    /// One entry per unordered location pair; travel is symmetric.
    pub travel_minutes: Vec<Travel>,
    pub friends: Vec<Friend>,
    pub start_location: String,
    pub day_start: u32,
}

impl MeetingPayload {
    pub fn travel(&self, from: &str, to: &str) -> Option<u32> {
        if from == to {
            return Some(0);
        }
        self.travel_minutes
            .iter()
            .find(|t| (t.a == from && t.b == to) || (t.a == to && t.b == from))
            .map(|t| t.minutes)
    }

    pub fn friend(&self, name: &str) -> Option<&Friend> {
        self.friends.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Payload {
    VertexCover(VertexCoverPayload),
    ThreeDM(ThreeDMPayload),
    TripPlanning(TripPayload),
    MeetingPlanning(MeetingPayload),
}

impl Payload {
    pub fn kind(&self) -> TaskKind {
        match self {
            Payload::VertexCover(_) => TaskKind::VertexCover,
            Payload::ThreeDM(_) => TaskKind::ThreeDM,
            Payload::TripPlanning(_) => TaskKind::TripPlanning,
            Payload::MeetingPlanning(_) => TaskKind::MeetingPlanning,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TripLeg {
    pub city: String,
    pub day_from: u32,
    pub day_to: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Meeting {
    pub friend: String,
    pub location: String,
    pub start: u32,
    pub end: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Solution {
    TripPlan(Vec<TripLeg>),
    CoverSet(BTreeSet<u32>),
    Matching(BTreeSet<Triple>),
    MeetingSchedule(Vec<Meeting>),
}

impl Solution {
    pub fn kind(&self) -> TaskKind {
        match self {
            Solution::TripPlan(_) => TaskKind::TripPlanning,
            Solution::CoverSet(_) => TaskKind::VertexCover,
            Solution::Matching(_) => TaskKind::ThreeDM,
            Solution::MeetingSchedule(_) => TaskKind::MeetingPlanning,
        }
    }

    /// Builds a trip plan from a city order using single-day overlaps
    /// starting on day 1.
    pub fn trip_from_order<S: AsRef<str>>(
        order: &[S],
        payload: &TripPayload,
    ) -> Result<Solution, TaskError> {
        let mut legs = Vec::with_capacity(order.len());
        let mut day = 1;
        for city in order {
            let city = city.as_ref();
            let stay = payload
                .stay(city)
                .ok_or_else(|| TaskError::UnknownCity(city.to_string()))?;
            legs.push(TripLeg {
                city: city.to_string(),
                day_from: day,
                day_to: day + stay - 1,
            });
            day += stay - 1;
        }
        Ok(Solution::TripPlan(legs))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason")]
pub enum Verdict {
    Success,
    WrongAnswer(String),
    ConstraintViolation(String),
    ParseFailure(String),
    BackendError(String),
}

impl Verdict {
    pub fn is_success(&self) -> bool {
        matches!(self, Verdict::Success)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Success => "Success",
            Verdict::WrongAnswer(_) => "WrongAnswer",
            Verdict::ConstraintViolation(_) => "ConstraintViolation",
            Verdict::ParseFailure(_) => "ParseFailure",
            Verdict::BackendError(_) => "BackendError",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Success => f.write_str("Success"),
            Verdict::WrongAnswer(r)
            | Verdict::ConstraintViolation(r)
            | Verdict::ParseFailure(r)
            | Verdict::BackendError(r) => write!(f, "{}({})", self.label(), r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub id: String,
    pub kind: TaskKind,
    pub level: u32,
    pub seed: u64,
    pub payload: Payload,
    pub ground_truth: Solution,
}

impl ProblemInstance {
    pub fn trip(&self) -> Option<&TripPayload> {
        match &self.payload {
            Payload::TripPlanning(p) => Some(p),
            _ => None,
        }
    }

    pub fn cover(&self) -> Option<&VertexCoverPayload> {
        match &self.payload {
            Payload::VertexCover(p) => Some(p),
            _ => None,
        }
    }

    pub fn matching(&self) -> Option<&ThreeDMPayload> {
        match &self.payload {
            Payload::ThreeDM(p) => Some(p),
            _ => None,
        }
    }

    pub fn meeting(&self) -> Option<&MeetingPayload> {
        match &self.payload {
            Payload::MeetingPlanning(p) => Some(p),
            _ => None,
        }
    }

    /// Checks the structural invariants of the payload. Does not run the
    /// verifier against `ground_truth`; see `eval::verify` for that.
    pub fn validate(&self) -> Result<(), TaskError> {
        let fail = |reason: String| TaskError::InvalidInstance {
            id: self.id.clone(),
            reason,
        };
        if self.payload.kind() != self.kind {
            return Err(fail("payload kind does not match instance kind".into()));
        }
        if self.ground_truth.kind() != self.kind {
            return Err(fail("ground truth kind does not match instance kind".into()));
        }
        if self.level == 0 {
            return Err(fail("level must be positive".into()));
        }
        match &self.payload {
            Payload::TripPlanning(p) => validate_trip(p).map_err(fail),
            Payload::VertexCover(p) => validate_cover(p).map_err(fail),
            Payload::ThreeDM(p) => validate_matching(p).map_err(fail),
            Payload::MeetingPlanning(p) => validate_meeting(p).map_err(fail),
        }
    }
}

fn validate_trip(p: &TripPayload) -> Result<(), String> {
    let declared: BTreeSet<&String> = p.cities.iter().collect();
    if declared.len() != p.cities.len() {
        return Err("duplicate city".into());
    }
    if p.stays.len() != p.cities.len() || p.stays.keys().any(|c| !declared.contains(c)) {
        return Err("stays must list exactly the declared cities".into());
    }
    if p.stays.values().any(|&s| s == 0) {
        return Err("stay lengths must be positive".into());
    }
    let sum: u32 = p.stays.values().sum();
    if sum + 1 != p.total_days + p.cities.len() as u32 {
        return Err(format!(
            "stays sum to {sum} but total_days {} with {} cities",
            p.total_days,
            p.cities.len()
        ));
    }
    for (city, w) in &p.windows {
        if !declared.contains(city) {
            return Err(format!("window for undeclared city {city}"));
        }
        if w.first < 1 || w.first > w.last || w.last > p.total_days {
            return Err(format!("window {}-{} for {city} out of range", w.first, w.last));
        }
    }
    for (a, b) in &p.flights {
        if !declared.contains(a) || !declared.contains(b) || a == b {
            return Err(format!("bad flight {a} -> {b}"));
        }
    }
    Ok(())
}

fn validate_cover(p: &VertexCoverPayload) -> Result<(), String> {
    for &(u, v) in &p.edges {
        if u >= v {
            return Err(format!("edge ({u}, {v}) must be stored low-high without self-loops"));
        }
        if v >= p.vertex_count {
            return Err(format!("edge ({u}, {v}) out of range"));
        }
    }
    if p.target_size > p.vertex_count {
        return Err("target size exceeds vertex count".into());
    }
    Ok(())
}

fn validate_matching(p: &ThreeDMPayload) -> Result<(), String> {
    if p.triples.iter().any(|&(x, y, z)| x >= p.n || y >= p.n || z >= p.n) {
        return Err("triple coordinate out of range".into());
    }
    Ok(())
}

fn validate_meeting(p: &MeetingPayload) -> Result<(), String> {
    let locs: BTreeSet<&String> = p.locations.iter().collect();
    if !locs.contains(&p.start_location) {
        return Err("start location is not a listed location".into());
    }
    for (i, a) in p.locations.iter().enumerate() {
        for b in &p.locations[i + 1..] {
            match p.travel(a, b) {
                Some(0) | None => return Err(format!("missing or zero travel time {a} - {b}")),
                Some(_) => {}
            }
        }
    }
    for f in &p.friends {
        if !locs.contains(&f.location) {
            return Err(format!("friend {} at unknown location", f.name));
        }
        if f.available_from >= f.available_until
            || f.min_minutes > f.available_until - f.available_from
        {
            return Err(format!("friend {} has an infeasible window", f.name));
        }
    }
    Ok(())
}

/// Renders minutes of day as a 12-hour clock, e.g. `9:05AM`, `12:30PM`.
pub fn format_clock(minutes: u32) -> String {
    let h24 = (minutes / 60) % 24;
    let m = minutes % 60;
    let (h12, suffix) = match h24 {
        0 => (12, "AM"),
        1..=11 => (h24, "AM"),
        12 => (12, "PM"),
        _ => (h24 - 12, "PM"),
    };
    format!("{h12}:{m:02}{suffix}")
}

/// Parses `H:MM` with an optional `AM`/`PM` suffix (24-hour without one).
pub fn parse_clock(text: &str) -> Option<u32> {
    let t = text.trim().to_ascii_uppercase();
    let (body, suffix) = if let Some(b) = t.strip_suffix("AM") {
        (b.trim_end(), Some(false))
    } else if let Some(b) = t.strip_suffix("PM") {
        (b.trim_end(), Some(true))
    } else {
        (t.as_str(), None)
    };
    let (h, m) = body.split_once(':')?;
    let h: u32 = h.trim().parse().ok()?;
    let m: u32 = m.trim().parse().ok()?;
    if m >= 60 {
        return None;
    }
    let h24 = match suffix {
        None if h < 24 => h,
        Some(pm) if (1..=12).contains(&h) => (h % 12) + if pm { 12 } else { 0 },
        _ => return None,
    };
    Some(h24 * 60 + m)
}

/// Total independent days of a plan: the stay lengths of its cities minus
/// one overlap day per flight taken.
pub fn independent_days(plan: &[TripLeg], payload: &TripPayload) -> Result<u32, TaskError> {
    let mut total = 0;
    for leg in plan {
        total += payload
            .stay(&leg.city)
            .ok_or_else(|| TaskError::UnknownCity(leg.city.clone()))?;
    }
    let flights = plan.len().saturating_sub(1) as u32;
    Ok(total.saturating_sub(flights))
}

/// Fraction of verdicts that are `Success`.
pub fn success_rate(verdicts: &[Verdict]) -> Result<f64, TaskError> {
    if verdicts.is_empty() {
        return Err(TaskError::EmptyInput);
    }
    let hits = verdicts.iter().filter(|v| v.is_success()).count();
    Ok(hits as f64 / verdicts.len() as f64)
}

pub fn read_instances(path: &Path) -> Result<Vec<ProblemInstance>, TaskError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: ProblemInstance =
            serde_json::from_str(&line).map_err(|source| TaskError::Decode {
                path: path.display().to_string(),
                line: i + 1,
                source,
            })?;
        inst.validate()?;
        out.push(inst);
    }
    Ok(out)
}

pub fn write_instances(path: &Path, instances: &[ProblemInstance]) -> Result<(), TaskError> {
    let mut w = BufWriter::new(File::create(path)?);
    for inst in instances {
        serde_json::to_writer(&mut w, inst)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
