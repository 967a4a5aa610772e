use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::task::{parse_clock, Meeting, Payload, ProblemInstance, Solution, Triple, TripLeg};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub candidate: Option<Solution>,
    /// 1-based line numbers with what was read from them.
    pub matched_lines: Vec<(usize, String)>,
    pub failure_reason: Option<String>,
}

impl ParseReport {
    fn found(candidate: Solution, matched_lines: Vec<(usize, String)>) -> Self {
        ParseReport { candidate: Some(candidate), matched_lines, failure_reason: None }
    }

    fn failed(reason: &str) -> Self {
        ParseReport { candidate: None, matched_lines: Vec::new(), failure_reason: Some(reason.into()) }
    }
}

static DAY_RANGE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\bdays?\s*(\d+)\s*(?:-|–|—|to)\s*(\d+)").expect("valid regex")
});
static BRACKET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[([^\[\]]*)\]").expect("valid regex"));
static VERTEX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^v?(\d+)$").expect("valid regex"));
static VERTEX_RUN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bV\d+\b(?:\s*,\s*V\d+\b)*").expect("valid regex"));
static TRIPLE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)").expect("valid regex")
});
static START: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\byou\s+start\b").expect("valid regex"));
static MEET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bmeet\b").expect("valid regex"));
static CLOCK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(\d{1,2}:\d{2})\s*([ap]m)?").expect("valid regex"));

/// Case-insensitive whole-word matcher over a vocabulary, longest names first.
struct Vocabulary<'a> {
    names: Vec<&'a str>,
    re: Regex,
}

impl<'a> Vocabulary<'a> {
    fn new(names: impl IntoIterator<Item = &'a str>) -> Self {
        let mut names: Vec<&str> = names.into_iter().collect();
        names.sort_by_key(|n| std::cmp::Reverse(n.len()));
        let alts: Vec<String> = names
            .iter()
            .map(|n| n.split_whitespace().map(regex::escape).collect::<Vec<_>>().join(r"\s+"))
            .collect();
        let re = Regex::new(&format!(r"(?i)\b(?:{})\b", alts.join("|"))).expect("escaped vocabulary");
        Vocabulary { names, re }
    }

    /// The first vocabulary entry in `text` and the byte offset after it.
    fn first(&self, text: &str) -> Option<(&'a str, usize)> {
        let m = self.re.find(text)?;
        let seen = collapse(m.as_str()).to_lowercase();
        let name = self.names.iter().find(|n| collapse(n).to_lowercase() == seen)?;
        Some((name, m.end()))
    }
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Extracts a candidate solution from model output. Later answer blocks
/// replace earlier ones, so restated or corrected answers win.
pub fn parse_answer(instance: &ProblemInstance, text: &str) -> ParseReport {
    match &instance.payload {
        Payload::TripPlanning(p) => parse_trip(p.cities.iter().map(String::as_str), text),
        Payload::VertexCover(_) => parse_cover(text),
        Payload::ThreeDM(_) => parse_matching(text),
        Payload::MeetingPlanning(p) => parse_meeting(p, text),
    }
}

fn parse_trip<'a>(cities: impl IntoIterator<Item = &'a str>, text: &str) -> ParseReport {
    let vocab = Vocabulary::new(cities);
    let mut blocks: Vec<Vec<(usize, TripLeg)>> = Vec::new();
    let mut current: Vec<(usize, TripLeg)> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let ranges: Vec<_> = DAY_RANGE.captures_iter(line).collect();
        for (i, caps) in ranges.iter().enumerate() {
            let whole = caps.get(0).expect("match");
            let tail_end = ranges.get(i + 1).map_or(line.len(), |c| c.get(0).expect("match").start());
            let Some((city, _)) = vocab.first(&line[whole.end()..tail_end]) else {
                continue;
            };
            let (Ok(from), Ok(to)) = (caps[1].parse::<u32>(), caps[2].parse::<u32>()) else {
                continue;
            };
            if current.last().is_some_and(|(_, l)| from <= l.day_from) {
                blocks.push(std::mem::take(&mut current));
            }
            current.push((no + 1, TripLeg { city: city.to_string(), day_from: from, day_to: to }));
        }
    }
    blocks.push(current);
    let block = blocks.pop().unwrap_or_default();
    if block.is_empty() {
        return ParseReport::failed("no plan lines found");
    }
    let lines = block
        .iter()
        .map(|(no, l)| (*no, format!("{} Day {}-{}", l.city, l.day_from, l.day_to)))
        .collect();
    ParseReport::found(Solution::TripPlan(block.into_iter().map(|(_, l)| l).collect()), lines)
}

fn vertex_list(body: &str) -> Option<BTreeSet<u32>> {
    if body.trim().is_empty() {
        return Some(BTreeSet::new());
    }
    body.split(',')
        .map(|tok| VERTEX.captures(tok.trim()).and_then(|c| c[1].parse().ok()))
        .collect()
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset].matches('\n').count() + 1
}

fn parse_cover(text: &str) -> ParseReport {
    let bracketed = BRACKET
        .captures_iter(text)
        .filter_map(|c| {
            let m = c.get(0).expect("match");
            vertex_list(&c[1]).map(|set| (m.start(), set))
        })
        .last();
    let found = bracketed.or_else(|| {
        VERTEX_RUN
            .find_iter(text)
            .last()
            .and_then(|m| vertex_list(m.as_str()).map(|set| (m.start(), set)))
    });
    match found {
        Some((offset, set)) => {
            let shown = set.iter().map(|v| format!("V{v}")).collect::<Vec<_>>().join(", ");
            ParseReport::found(Solution::CoverSet(set), vec![(line_of(text, offset), format!("cover [{shown}]"))])
        }
        None => ParseReport::failed("no vertex list found"),
    }
}

fn parse_matching(text: &str) -> ParseReport {
    let mut blocks: Vec<Vec<(usize, Triple)>> = Vec::new();
    let mut current: Vec<(usize, Triple)> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let triples: Vec<Triple> = TRIPLE
            .captures_iter(line)
            .filter_map(|c| Some((c[1].parse().ok()?, c[2].parse().ok()?, c[3].parse().ok()?)))
            .collect();
        if triples.is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        current.extend(triples.into_iter().map(|t| (no + 1, t)));
    }
    blocks.push(current);
    let block = blocks.into_iter().rev().find(|b| !b.is_empty()).unwrap_or_default();
    if block.is_empty() {
        return ParseReport::failed("no triples found");
    }
    let lines = block.iter().map(|(no, t)| (*no, format!("triple ({}, {}, {})", t.0, t.1, t.2))).collect();
    ParseReport::found(Solution::Matching(block.into_iter().map(|(_, t)| t).collect()), lines)
}

fn parse_meeting(p: &crate::task::MeetingPayload, text: &str) -> ParseReport {
    let friends = Vocabulary::new(p.friends.iter().map(|f| f.name.as_str()));
    let places = Vocabulary::new(p.locations.iter().map(String::as_str));
    let mut blocks: Vec<Vec<(usize, Meeting)>> = Vec::new();
    let mut current: Vec<(usize, Meeting)> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        // a declared starting point opens a fresh schedule
        if START.is_match(line) && !current.is_empty() {
            blocks.push(std::mem::take(&mut current));
        }
        let Some(m) = MEET.find(line) else {
            continue;
        };
        let rest = &line[m.end()..];
        let Some((name, after)) = friends.first(rest) else {
            continue;
        };
        let rest = &rest[after..];
        let times: Vec<u32> = CLOCK
            .captures_iter(rest)
            .filter_map(|c| {
                let suffix = c.get(2).map_or("", |s| s.as_str());
                parse_clock(&format!("{}{suffix}", &c[1]))
            })
            .take(2)
            .collect();
        let [start, end] = times[..] else {
            continue;
        };
        let location = match places.first(rest) {
            Some((loc, _)) => loc.to_string(),
            None => p.friend(name).map(|f| f.location.clone()).unwrap_or_default(),
        };
        let restart = current
            .last()
            .is_some_and(|(_, prev)| start < prev.start || current.iter().any(|(_, m)| m.friend == name));
        if restart {
            blocks.push(std::mem::take(&mut current));
        }
        current.push((no + 1, Meeting { friend: name.to_string(), location, start, end }));
    }
    blocks.push(current);
    let block = blocks.pop().unwrap_or_default();
    if block.is_empty() {
        return ParseReport::failed("no meeting lines found");
    }
    let lines = block
        .iter()
        .map(|(no, m)| (*no, format!("meet {} at {} {}-{}", m.friend, m.location, m.start, m.end)))
        .collect();
    ParseReport::found(Solution::MeetingSchedule(block.into_iter().map(|(_, m)| m).collect()), lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trip_last_block_wins() {
        let text = "Draft: Day 1-3: Riga, Day 3-5 Milan\nFinal:\n**Day 1-2:** Milan\n**Day 2:** Fly from Milan to Riga.\n**Day 2-4:** riga";
        let r = parse_trip(["Riga", "Milan"], text);
        let Some(Solution::TripPlan(legs)) = r.candidate else { panic!("{r:?}") };
        assert_eq!(legs.len(), 2);
        assert_eq!((legs[1].city.as_str(), legs[1].day_from, legs[1].day_to), ("Riga", 2, 4));
        assert_eq!(r.matched_lines[0].0, 3);
    }

    #[test]
    fn empty_text_fails_for_every_task() {
        assert_eq!(parse_trip(["Riga"], "").failure_reason.as_deref(), Some("no plan lines found"));
        assert!(parse_cover("").candidate.is_none());
        assert!(parse_matching("").candidate.is_none());
    }

    #[test]
    fn cover_prefers_last_list() {
        let r = parse_cover("maybe [V1, V2] but finally [v0,3]");
        assert_eq!(r.candidate, Some(Solution::CoverSet([0, 3].into())));
        let r = parse_cover("The cover is V4, V5.");
        assert_eq!(r.candidate, Some(Solution::CoverSet([4, 5].into())));
        assert_eq!(parse_cover("[]").candidate, Some(Solution::CoverSet(BTreeSet::new())));
    }

    #[test]
    fn matching_uses_final_block() {
        let r = parse_matching("try (0, 0, 0)\nno.\nAnswer:\n[(0, 1, 2),\n (1, 0, 0)]");
        assert_eq!(r.candidate, Some(Solution::Matching([(0, 1, 2), (1, 0, 0)].into())));
    }
}
