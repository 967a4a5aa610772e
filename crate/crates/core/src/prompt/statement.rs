//! Task statements and the per-task constraint summaries used in worked
//! exemplars.

use crate::oracle::cover::vname;
use crate::oracle::matching::triple_text;
use crate::task::{
    format_clock, MeetingPayload, Payload, TaskKind, ThreeDMPayload, TripPayload, VertexCoverPayload,
};

/// The opening sentence of the problem description; doubles as the system
/// prompt.
pub fn role_line(kind: TaskKind) -> &'static str {
    match kind {
        TaskKind::TripPlanning => "You are an expert at planning trips.",
        TaskKind::MeetingPlanning => "You are an expert at scheduling meetings.",
        TaskKind::VertexCover => "You are an expert at solving graph problems.",
        TaskKind::ThreeDM => "You are an expert at solving combinatorial matching problems.",
    }
}

pub fn role_paragraph(kind: TaskKind) -> String {
    let rest = match kind {
        TaskKind::TripPlanning => "You are given a few constraints regarding the cities to visit and the durations of staying at each city. You are also given the flight information between the cities.",
        TaskKind::MeetingPlanning => "You are given a few constraints regarding the friends to meet, where they will be and when they are available. You are also given the travel times between the locations.",
        TaskKind::VertexCover => "You are given an undirected graph and a target size, and you must choose that many vertices so that every edge touches a chosen vertex.",
        TaskKind::ThreeDM => "You are given three sets X, Y and Z of equal size and a list of allowed triples, and you must choose triples that use every element exactly once.",
    };
    format!("{} {rest}", role_line(kind))
}

pub(crate) fn number_word(n: usize) -> String {
    const WORDS: [&str; 21] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
        "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
        "nineteen", "twenty",
    ];
    WORDS.get(n).map_or_else(|| n.to_string(), |w| w.to_string())
}

/// The natural-language question for an instance.
pub fn statement(payload: &Payload) -> String {
    match payload {
        Payload::TripPlanning(p) => trip_statement(p),
        Payload::VertexCover(p) => cover_statement(p),
        Payload::ThreeDM(p) => matching_statement(p),
        Payload::MeetingPlanning(p) => meeting_statement(p),
    }
}

fn window_sentence(city: &str, label: &str, first: u32, last: u32) -> String {
    let when = format!("between day {first} and day {last}");
    match label {
        "wedding" => format!("You are going to attend a wedding in {city} {when}."),
        "visit relatives" => format!("You plan to visit relatives in {city} {when}."),
        "workshop" => format!("You have to attend a workshop in {city} {when}."),
        "conference" => format!("You have to attend a conference in {city} {when}."),
        "meet a friend" => format!("You would like to meet your friends at {city} {when} to tour together."),
        other => format!("You want to attend the {other} in {city} {when}."),
    }
}

/// Listed flight pairs: `A and B` when both directions exist, otherwise
/// `from A to B`.
pub(crate) fn flight_phrases(p: &TripPayload) -> Vec<String> {
    let mut out = Vec::new();
    for (a, b) in &p.flights {
        let back = p.has_flight(b, a);
        if back && a > b {
            continue;
        }
        out.push(if back { format!("{a} and {b}") } else { format!("from {a} to {b}") });
    }
    out
}

fn trip_statement(p: &TripPayload) -> String {
    let mut s = format!(
        "You plan to visit {} European cities for {} days in total. You only take direct flights to commute between cities.",
        p.cities.len(),
        p.total_days
    );
    for city in &p.cities {
        let stay = p.stay(city).unwrap_or_default();
        s.push_str(&format!(" You plan to stay in {city} for {stay} days."));
        if let Some(w) = p.windows.get(city) {
            s.push(' ');
            s.push_str(&window_sentence(city, &w.label, w.first, w.last));
        }
    }
    s.push_str("\n\nHere are the cities that have direct flights:\n");
    s.push_str(&flight_phrases(p).join(", "));
    s.push_str(&format!(
        ".\n\nFind a trip plan of visiting the cities for {} days by taking direct flights to commute between them.",
        p.total_days
    ));
    s
}

pub(crate) fn edge_list(p: &VertexCoverPayload) -> String {
    p.edges.iter().map(|&(u, v)| format!("{}-{}", vname(u), vname(v))).collect::<Vec<_>>().join(", ")
}

fn cover_statement(p: &VertexCoverPayload) -> String {
    format!(
        "Find a vertex cover of exactly {k} vertices in an undirected graph with {n} vertices V0 to V{last}. \
A vertex cover is a set of vertices such that every edge has at least one endpoint in the set.\n\n\
The edges are:\n{edges}.\n\n\
Give the cover as a bracketed list of vertex names, for example [V0, V2].",
        k = p.target_size,
        n = p.vertex_count,
        last = p.vertex_count.saturating_sub(1),
        edges = edge_list(p)
    )
}

pub(crate) fn triple_list(p: &ThreeDMPayload) -> String {
    p.triples.iter().map(|&t| triple_text(t)).collect::<Vec<_>>().join(", ")
}

fn matching_statement(p: &ThreeDMPayload) -> String {
    format!(
        "The sets X, Y and Z each contain the elements 0 to {last}. Choose {n} triples from the list below so that \
every element of X, Y and Z appears in exactly one chosen triple. A triple (x, y, z) takes x from X, y from Y and z from Z.\n\n\
The allowed triples are:\n{triples}.\n\n\
Give the chosen triples as a bracketed list, for example [(0, 1, 2), (1, 0, 0)].",
        last = p.n.saturating_sub(1),
        n = p.n,
        triples = triple_list(p)
    )
}

pub(crate) fn travel_lines(p: &MeetingPayload) -> Vec<String> {
    p.travel_minutes.iter().map(|t| format!("{} to {}: {} minutes.", t.a, t.b, t.minutes)).collect()
}

fn meeting_statement(p: &MeetingPayload) -> String {
    let mut s = format!(
        "You are visiting the city for the day and want to meet as many friends as possible. You arrive at {} at {}.\n\n\
Travel distances (in minutes, the same in both directions):\n{}\n\nCONSTRAINTS:",
        p.start_location,
        format_clock(p.day_start),
        travel_lines(p).join("\n")
    );
    for f in &p.friends {
        s.push_str(&format!(
            " {name} will be at {loc} from {from} to {until}. You'd like to meet {name} for a minimum of {min} minutes.",
            name = f.name,
            loc = f.location,
            from = format_clock(f.available_from),
            until = format_clock(f.available_until),
            min = f.min_minutes
        ));
    }
    s.push_str(
        "\n\nFind the schedule that meets the most friends. Give one line per meeting, for example: \
You meet Alice at Nob Hill for 30 minutes from 10:00AM to 10:30AM.",
    );
    s
}

/// The Objective and Constraints sections of a worked exemplar.
pub(crate) fn objective_and_constraints(payload: &Payload) -> String {
    match payload {
        Payload::TripPlanning(p) => trip_constraints(p),
        Payload::VertexCover(p) => format!(
            "### Objective ###\n\nChoose **{k}** of the **{n}** vertices V0 to V{last} so that every edge has a chosen endpoint.\n\n\
### Constraints ###\n\n\
1. **Coverage** Every edge below needs at least one endpoint in the cover:\n{edges}\n\n\
2. **Size** The cover holds exactly **{k}** vertices.\n",
            k = p.target_size,
            n = p.vertex_count,
            last = p.vertex_count.saturating_sub(1),
            edges = edge_list(p)
        ),
        Payload::ThreeDM(p) => format!(
            "### Objective ###\n\nChoose **{n}** triples that use every element of X, Y and Z (each 0 to {last}) exactly once.\n\n\
### Constraints ###\n\n\
1. **Allowed triples** Only these triples (x, y, z) may be chosen:\n{triples}\n\n\
2. **Disjointness** No two chosen triples share an element of X, Y or Z.\n\n\
3. **Size** Exactly **{n}** triples are chosen.\n",
            n = p.n,
            last = p.n.saturating_sub(1),
            triples = triple_list(p)
        ),
        Payload::MeetingPlanning(p) => {
            let mut s = format!(
                "### Objective ###\n\nStarting at {} at {}, meet as many of the **{}** friends below as possible.\n\n### Constraints ###\n\n\
1. **Availability & minimum duration**\n",
                p.start_location,
                format_clock(p.day_start),
                number_word(p.friends.len())
            );
            for f in &p.friends {
                s.push_str(&format!(
                    "\nFriend: {}\nLocation: {}\nAvailable: {}-{}\nMinimum meeting: {} minutes\n",
                    f.name,
                    f.location,
                    format_clock(f.available_from),
                    format_clock(f.available_until),
                    f.min_minutes
                ));
            }
            s.push_str(&format!(
                "\n2. **Travel** Moving between locations takes the listed minutes; a meeting starts only after you arrive:\n{}\n",
                travel_lines(p).join("\n")
            ));
            s
        }
    }
}

fn trip_constraints(p: &TripPayload) -> String {
    let mut s = format!(
        "### Objective ###\n\nPlan a **{}-day** trip that visits the **{}** European cities below, using only the direct flights provided.\n\n\
### Constraints ###\n\n\
1. **Adjacency overlap** The last day of city *i* is also the first day of city *i + 1*.\n\n\
2. **Stay-length & fixed-window requirements**\n",
        p.total_days,
        number_word(p.cities.len())
    );
    for city in &p.cities {
        let window = match p.windows.get(city) {
            Some(w) => format!("**must cover Day {}-{}** ({})", w.first, w.last, w.label),
            None => "--".to_string(),
        };
        s.push_str(&format!(
            "\nCity: {city}\nRequired stay: {} days\nFixed-day window: {window}\n",
            p.stay(city).unwrap_or_default()
        ));
    }
    s.push_str(&format!(
        "\nThe sum of **independent days** (\u{3a3} stay - overlaps) must equal **{}** exactly.\n\n\
3. **Flights requirements** A direct flight exists **only** when explicitly listed:\n",
        p.total_days
    ));
    for city in &p.cities {
        let mut dests: Vec<&str> = p.destinations(city).collect();
        dests.sort_unstable();
        if dests.is_empty() {
            continue;
        }
        let line: Vec<String> = dests.iter().map(|d| format!("{city}\u{2192}{d}")).collect();
        s.push_str(&line.join("  "));
        s.push('\n');
    }
    s
}
