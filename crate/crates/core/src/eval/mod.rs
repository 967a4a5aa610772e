//! Turning model output into a verdict: parse free text into a candidate
//! solution, then check it against the instance.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::oracle::meeting;
use crate::task::{
    format_clock, Meeting, MeetingPayload, ProblemInstance, Solution, TaskKind, ThreeDMPayload,
    Triple, TripLeg, TripPayload, Verdict, VertexCoverPayload,
};

mod parse;
mod render;

pub use parse::{parse_answer, ParseReport};
pub use render::render_answer;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("candidate is a {found} solution but the instance is {expected}")]
    KindMismatch { expected: TaskKind, found: TaskKind },
}

/// Checks `candidate` against the constraints of `instance`, then against
/// its optimum. The first failing check names the verdict.
pub fn verify(instance: &ProblemInstance, candidate: &Solution) -> Result<Verdict, EvalError> {
    if candidate.kind() != instance.kind {
        return Err(EvalError::KindMismatch { expected: instance.kind, found: candidate.kind() });
    }
    let verdict = match (&instance.payload, candidate) {
        (crate::task::Payload::TripPlanning(p), Solution::TripPlan(legs)) => match check_trip(p, legs) {
            Err(e) => Verdict::ConstraintViolation(e),
            Ok(()) if candidate != &instance.ground_truth => {
                Verdict::WrongAnswer("plan differs from the reference plan".into())
            }
            Ok(()) => Verdict::Success,
        },
        (crate::task::Payload::VertexCover(p), Solution::CoverSet(c)) => match check_cover(p, c) {
            Err(e) => Verdict::ConstraintViolation(e),
            Ok(()) => Verdict::Success,
        },
        (crate::task::Payload::ThreeDM(p), Solution::Matching(m)) => match check_matching(p, m) {
            Err(e) => Verdict::ConstraintViolation(e),
            Ok(()) => Verdict::Success,
        },
        (crate::task::Payload::MeetingPlanning(p), Solution::MeetingSchedule(s)) => {
            match check_meeting(p, s) {
                Err(e) => Verdict::ConstraintViolation(e),
                Ok(()) => {
                    let best = meeting::optimum_count(p) as usize;
                    if s.len() < best {
                        Verdict::WrongAnswer(format!("suboptimal: met {} of {best} possible friends", s.len()))
                    } else {
                        Verdict::Success
                    }
                }
            }
        }
        _ => unreachable!("kinds checked above"),
    };
    Ok(verdict)
}

/// Parses and verifies raw model output in one go.
pub fn score(instance: &ProblemInstance, text: &str) -> Verdict {
    let report = parse_answer(instance, text);
    match report.candidate {
        Some(c) => verify(instance, &c).unwrap_or_else(|e| Verdict::ParseFailure(e.to_string())),
        None => Verdict::ParseFailure(report.failure_reason.unwrap_or_default()),
    }
}

/// All trip constraints, in a fixed order; errors read `reason: detail`.
pub fn check_trip(p: &TripPayload, legs: &[TripLeg]) -> Result<(), String> {
    if legs.is_empty() {
        return Err("empty: no legs".into());
    }
    for leg in legs {
        if p.stay(&leg.city).is_none() {
            return Err(format!("unknown city: {}", leg.city));
        }
    }
    let mut seen = BTreeSet::new();
    for leg in legs {
        if !seen.insert(leg.city.as_str()) {
            return Err(format!("duplicate: {} visited twice", leg.city));
        }
    }
    if let Some(missing) = p.cities.iter().find(|c| !seen.contains(c.as_str())) {
        return Err(format!("coverage: {missing} not visited"));
    }
    if legs[0].day_from != 1 {
        return Err(format!("start: plan starts on day {}", legs[0].day_from));
    }
    for pair in legs.windows(2) {
        if pair[1].day_from != pair[0].day_to {
            return Err(format!(
                "contiguity: {} ends on day {} but {} starts on day {}",
                pair[0].city, pair[0].day_to, pair[1].city, pair[1].day_from
            ));
        }
    }
    for leg in legs {
        let stay = p.stay(&leg.city).unwrap_or_default();
        if leg.day_to < leg.day_from || leg.day_to - leg.day_from + 1 != stay {
            return Err(format!(
                "stay: {} Day {}-{} is not {stay} days",
                leg.city, leg.day_from, leg.day_to
            ));
        }
    }
    let last = legs[legs.len() - 1].day_to;
    if last != p.total_days {
        return Err(format!("end: plan ends on day {last}, not day {}", p.total_days));
    }
    for leg in legs {
        if let Some(w) = p.windows.get(&leg.city) {
            if leg.day_from > w.first || leg.day_to < w.last {
                return Err(format!("window: {} Day {}-{}", w.label, w.first, w.last));
            }
        }
    }
    for pair in legs.windows(2) {
        if !p.has_flight(&pair[0].city, &pair[1].city) {
            return Err(format!("flight: no direct flight {} to {}", pair[0].city, pair[1].city));
        }
    }
    Ok(())
}

pub fn check_cover(p: &VertexCoverPayload, cover: &BTreeSet<u32>) -> Result<(), String> {
    if let Some(v) = cover.iter().find(|&&v| v >= p.vertex_count) {
        return Err(format!("unknown vertex: V{v}"));
    }
    if p.edges.iter().any(|(u, v)| !cover.contains(u) && !cover.contains(v)) {
        return Err("edge uncovered".into());
    }
    if cover.len() as u32 != p.target_size {
        return Err(format!("size: {} vertices, expected {}", cover.len(), p.target_size));
    }
    Ok(())
}

pub fn check_matching(p: &ThreeDMPayload, m: &BTreeSet<Triple>) -> Result<(), String> {
    if let Some(t) = m.iter().find(|t| !p.triples.contains(t)) {
        return Err(format!("unknown triple: ({}, {}, {})", t.0, t.1, t.2));
    }
    let (mut xs, mut ys, mut zs) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
    for t in m {
        if !xs.insert(t.0) {
            return Err(format!("overlap: x{} used twice", t.0));
        }
        if !ys.insert(t.1) {
            return Err(format!("overlap: y{} used twice", t.1));
        }
        if !zs.insert(t.2) {
            return Err(format!("overlap: z{} used twice", t.2));
        }
    }
    if m.len() as u32 != p.n {
        return Err(format!("size: {} triples, expected {}", m.len(), p.n));
    }
    Ok(())
}

pub fn check_meeting(p: &MeetingPayload, schedule: &[Meeting]) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    let mut at = p.start_location.as_str();
    let mut free = p.day_start;
    for m in schedule {
        let f = p.friend(&m.friend).ok_or_else(|| format!("unknown friend: {}", m.friend))?;
        if !seen.insert(f.name.as_str()) {
            return Err(format!("duplicate: {} met twice", f.name));
        }
        if m.location != f.location {
            return Err(format!("location: {} is at {}, not {}", f.name, f.location, m.location));
        }
        if m.start < f.available_from || m.end > f.available_until {
            return Err(format!(
                "window: {} available {}-{}",
                f.name,
                format_clock(f.available_from),
                format_clock(f.available_until)
            ));
        }
        if m.end < m.start || m.end - m.start < f.min_minutes {
            return Err(format!("duration: {} needs {} minutes", f.name, f.min_minutes));
        }
        let travel = p.travel(at, &f.location).ok_or_else(|| format!("unknown location: {}", f.location))?;
        if m.start < free + travel {
            return Err(format!(
                "travel: cannot reach {} from {at} by {}",
                f.location,
                format_clock(m.start)
            ));
        }
        at = &f.location;
        free = m.end;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::{Friend, Travel};

    fn meeting_payload() -> MeetingPayload {
        MeetingPayload {
            locations: vec!["Home".into(), "Park".into()],
            travel_minutes: vec![Travel { a: "Home".into(), b: "Park".into(), minutes: 20 }],
            friends: vec![Friend {
                name: "Ann".into(),
                location: "Park".into(),
                available_from: 9 * 60,
                available_until: 10 * 60,
                min_minutes: 30,
            }],
            start_location: "Home".into(),
            day_start: 9 * 60,
        }
    }

    fn ann(start: u32, end: u32) -> Meeting {
        Meeting { friend: "Ann".into(), location: "Park".into(), start, end }
    }

    #[test]
    fn meeting_checks_travel_window_and_duration() {
        let p = meeting_payload();
        assert!(check_meeting(&p, &[ann(560, 590)]).is_ok());
        assert!(check_meeting(&p, &[ann(550, 590)]).unwrap_err().starts_with("travel"));
        assert!(check_meeting(&p, &[ann(580, 601)]).unwrap_err().starts_with("window"));
        assert!(check_meeting(&p, &[ann(560, 580)]).unwrap_err().starts_with("duration"));
        assert!(check_meeting(&p, &[ann(560, 590), ann(590, 600)]).unwrap_err().starts_with("duplicate"));
    }

    #[test]
    fn matching_rejects_overlap_and_foreign_triples() {
        let p = ThreeDMPayload { n: 2, triples: [(0, 0, 0), (1, 1, 1), (0, 1, 1)].into() };
        assert!(check_matching(&p, &[(0, 0, 0), (1, 1, 1)].into()).is_ok());
        assert!(check_matching(&p, &[(0, 0, 0), (0, 1, 1)].into()).unwrap_err().starts_with("overlap"));
        assert!(check_matching(&p, &[(1, 0, 1)].into()).unwrap_err().starts_with("unknown"));
        assert!(check_matching(&p, &[(0, 0, 0)].into()).unwrap_err().starts_with("size"));
    }

    #[test]
    fn cover_checks_edges_before_size() {
        let p = VertexCoverPayload { vertex_count: 3, edges: [(0, 1), (1, 2)].into(), target_size: 1 };
        assert_eq!(check_cover(&p, &BTreeSet::new()).unwrap_err(), "edge uncovered");
        assert!(check_cover(&p, &[1].into()).is_ok());
        assert!(check_cover(&p, &[0, 2].into()).unwrap_err().starts_with("size"));
        assert!(check_cover(&p, &[7].into()).unwrap_err().starts_with("unknown vertex"));
    }
}
