//! Brute-force objectives computed from scratch, and a sweep comparing
//! the traced depth-first solver against them and against enumeration.

use std::collections::BTreeSet;

use reasonbench::oracle::{enumerate_all, solve, SearchMode};
use reasonbench::task::{MeetingPayload, Payload, Solution, TaskKind, ThreeDMPayload, Triple, VertexCoverPayload};

pub fn min_cover(p: &VertexCoverPayload) -> u32 {
    (0u32..1 << p.vertex_count)
        .filter(|m| p.edges.iter().all(|&(u, v)| m & (1 << u) != 0 || m & (1 << v) != 0))
        .map(u32::count_ones)
        .min()
        .expect("the full vertex set is a cover")
}

pub fn has_perfect_matching(p: &ThreeDMPayload) -> bool {
    fn go(all: &[Triple], x: u32, n: u32, ys: &mut BTreeSet<u32>, zs: &mut BTreeSet<u32>) -> bool {
        if x == n {
            return true;
        }
        for &(_, b, c) in all.iter().filter(|t| t.0 == x) {
            if !ys.contains(&b) && !zs.contains(&c) {
                ys.insert(b);
                zs.insert(c);
                let ok = go(all, x + 1, n, ys, zs);
                ys.remove(&b);
                zs.remove(&c);
                if ok {
                    return true;
                }
            }
        }
        false
    }
    let all: Vec<Triple> = p.triples.iter().copied().collect();
    go(&all, 0, p.n, &mut BTreeSet::new(), &mut BTreeSet::new())
}

/// Largest number of friends met, trying every order of every subset and
/// meeting each friend as early as direct travel allows.
pub fn max_friends(p: &MeetingPayload) -> usize {
    fn go(p: &MeetingPayload, at: &str, time: u32, used: &mut Vec<bool>) -> usize {
        let mut best = 0;
        for (i, f) in p.friends.iter().enumerate() {
            if used[i] {
                continue;
            }
            let start = (time + p.travel(at, &f.location).unwrap()).max(f.available_from);
            let end = start + f.min_minutes;
            if end <= f.available_until {
                used[i] = true;
                best = best.max(1 + go(p, &f.location, end, used));
                used[i] = false;
            }
        }
        best
    }
    go(p, &p.start_location, p.day_start, &mut vec![false; p.friends.len()])
}

/// Solvable draws per task, or every mismatch found over `cases` seeds
/// per task.
pub fn sweep(cases: u64) -> Result<Vec<(TaskKind, usize)>, Vec<String>> {
    let mut mismatches = Vec::new();
    let mut counts = Vec::new();
    for kind in TaskKind::ALL {
        let mut solvable = 0;
        for seed in 0..cases {
            let inst = super::random_instance(kind, seed);
            let trace = solve(&inst, SearchMode::Dfs);
            let all = enumerate_all(&inst).map_err(|e| vec![format!("{kind:?} seed {seed}: {e}")])?;
            let found = trace.solution.clone();
            let mut check = |ok: bool, what: &str| {
                if !ok {
                    mismatches.push(format!("{kind:?} seed {seed}: {what}"));
                }
            };
            check(found.is_some() == !all.is_empty(), "solvability differs from enumeration");
            check(trace.succeeded() == found.is_some(), "trace outcome disagrees with its solution");
            if let Some(s) = &found {
                check(all.contains(s), "solution is not among the enumerated ones");
            }
            match (&inst.payload, &found) {
                (Payload::VertexCover(p), _) => {
                    check(found.is_some() == (min_cover(p) <= p.target_size), "cover decision differs from brute force");
                    if let Some(Solution::CoverSet(c)) = &found {
                        check(c.len() as u32 == p.target_size, "cover has the wrong size");
                    }
                }
                (Payload::ThreeDM(p), _) => {
                    check(found.is_some() == has_perfect_matching(p), "matching decision differs from brute force");
                }
                (Payload::MeetingPlanning(p), Some(Solution::MeetingSchedule(s))) => {
                    let best = max_friends(p);
                    check(s.len() == best, "schedule is not optimal");
                    check(all.iter().all(|a| matches!(a, Solution::MeetingSchedule(x) if x.len() == best)),
                        "enumeration optimum differs from brute force");
                }
                (Payload::MeetingPlanning(_), _) => check(false, "meeting instances always have a schedule"),
                (Payload::TripPlanning(_), _) => {}
            }
            solvable += usize::from(found.is_some());
        }
        counts.push((kind, solvable));
    }
    if mismatches.is_empty() {
        Ok(counts)
    } else {
        Err(mismatches)
    }
}
