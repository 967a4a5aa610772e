//! Serialises a search trace into the numbered "Solution Thinking Process"
//! section of a worked exemplar.

use std::collections::BTreeSet;

use crate::eval::render_answer;
use crate::oracle::cover::vlist;
use crate::oracle::matching::triple_text;
use crate::oracle::{Action, Choice, SearchMode, SearchTrace};
use crate::task::{ProblemInstance, TaskKind};

/// For every event, how many steps it lies off the accepting path: 0 on the
/// path (and for bookkeeping events), 1 for a sibling of a path node, and so on.
pub(crate) fn path_distance(trace: &SearchTrace) -> Vec<usize> {
    let events = &trace.events;
    let mut stack = Vec::new();
    for (i, e) in events.iter().enumerate() {
        match e.action {
            Action::Expansion | Action::Success => stack.push(i),
            Action::Backtrack => {
                stack.pop();
            }
            _ => {}
        }
    }
    let on: BTreeSet<usize> = if trace.succeeded() { stack.into_iter().collect() } else { BTreeSet::new() };
    let mut dist = vec![0; events.len()];
    let mut open: Vec<usize> = Vec::new();
    for (i, e) in events.iter().enumerate() {
        dist[i] = match e.action {
            Action::Initialization | Action::Evaluation => 0,
            Action::Backtrack => open.pop().map_or(0, |node| dist[node]),
            Action::Expansion | Action::Success | Action::Prune(_) => {
                let off = open.iter().filter(|j| !on.contains(j)).count();
                off + usize::from(!on.contains(&i))
            }
        };
        if e.action == Action::Expansion {
            open.push(i);
        }
    }
    dist
}

fn preview_label(kind: TaskKind) -> &'static str {
    match kind {
        TaskKind::TripPlanning => "Calendar preview & test",
        TaskKind::MeetingPlanning => "Schedule preview & test",
        TaskKind::VertexCover | TaskKind::ThreeDM => "Preview & test",
    }
}

fn choice_text(c: &Choice) -> String {
    match c {
        Choice::City(name) | Choice::Friend(name) => name.clone(),
        Choice::Cover(vs) => format!("{{{}}}", vlist(vs.iter().copied())),
        Choice::Triple(t) => triple_text(*t),
    }
}

fn letter(i: usize) -> char {
    (b'A' + (i % 26) as u8) as char
}

/// Renders the thinking-process section. Events whose `keep` flag is false
/// collapse into omission markers.
pub(crate) fn render_thinking(exemplar: &ProblemInstance, trace: &SearchTrace, keep: &[bool]) -> String {
    let kind = exemplar.kind;
    let mut out = String::from("### Solution Thinking Process ###\n\n");
    let search_title = match trace.mode {
        SearchMode::Greedy => "Greedy Search",
        SearchMode::Dfs => "Depth-First Search with pruning",
    };
    let mut roots = 0;
    let mut omitted = 0;
    let flush = |out: &mut String, omitted: &mut usize| {
        if *omitted > 0 {
            out.push_str(&format!("(... {omitted} off-path steps omitted ...)\n\n"));
            *omitted = 0;
        }
    };
    for (i, e) in trace.events.iter().enumerate() {
        if !keep.get(i).copied().unwrap_or(true) {
            omitted += 1;
            continue;
        }
        flush(&mut out, &mut omitted);
        match e.action {
            Action::Initialization => {
                out.push_str("1. State definition\n");
                for line in e.state_summary.lines() {
                    let (name, meaning) = line.split_once(": ").unwrap_or((line, ""));
                    out.push_str(&format!("{name}  {meaning}\n"));
                }
                out.push_str(&format!("\n2. Initialization\n{}\n\n3. {search_title}\n\n", e.detail));
            }
            Action::Backtrack | Action::Evaluation => {
                out.push_str(&e.detail);
                out.push_str("\n\n");
            }
            Action::Expansion | Action::Success | Action::Prune(_) => {
                if e.depth == 0 && trace.mode == SearchMode::Dfs {
                    let root = e.choice.as_ref().map(choice_text).unwrap_or_default();
                    out.push_str(&format!("3-{}. {root}-rooted search\n", letter(roots)));
                    roots += 1;
                }
                let outcome = match e.action {
                    Action::Expansion => format!("keep  {}", e.state_summary),
                    Action::Success => format!("**Success**  {}", e.state_summary),
                    Action::Prune(r) => format!("**Prune ({})**", r.as_str()),
                    _ => unreachable!(),
                };
                out.push_str(&format!(
                    "Step: {}\nTransition tried: {}\n{}: {}\nOutcome: {}\n\n",
                    e.step_label,
                    e.transition,
                    preview_label(kind),
                    e.detail,
                    outcome.trim_end()
                ));
            }
        }
    }
    flush(&mut out, &mut omitted);
    let heading = if kind == TaskKind::TripPlanning { "Unique solution path found" } else { "Solution path found" };
    let path: Vec<String> = trace.kept_path().into_iter().map(choice_text).collect();
    out.push_str(&format!("4. {heading}\n{}\n\n", path.join(" \u{2192} ")));
    let answer = trace
        .solution
        .as_ref()
        .map(|s| render_answer(&exemplar.payload, s))
        .unwrap_or_default();
    out.push_str(&format!("5. Output Format\n{answer}\n"));
    out
}

/// Thinking-process header for a search mode, e.g. `**Depth-First Search Thinking Process:**`.
pub(crate) fn thinking_header(mode: SearchMode) -> &'static str {
    match mode {
        SearchMode::Greedy => "**Greedy Search Thinking Process:**",
        SearchMode::Dfs => "**Depth-First Search Thinking Process:**",
    }
}
