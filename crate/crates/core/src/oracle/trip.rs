//! Trip planning: order the cities so that consecutive cities share a
//! direct flight, every stay has its required length, and each fixed-day
//! window falls inside its city's stay.

use crate::eval::check_trip;
use crate::task::{DayWindow, Solution, TripPayload};

use super::{child_label, event, Action, Choice, OracleError, PruneReason, Recorder, SearchMode, SearchTrace};

/// Cities above this count are refused by [`enumerate`].
pub const ENUMERATION_LIMIT: usize = 8;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Strength {
    /// Own window plus a simple look-ahead on pending windows; the checks
    /// rendered in traces.
    Explain,
    /// Adds a subset-sum test that each pending window can still be reached.
    Strong,
}

struct Net<'a> {
    names: Vec<&'a str>,
    stay: Vec<u32>,
    window: Vec<Option<&'a DayWindow>>,
    adj: Vec<Vec<bool>>,
    /// Outgoing destinations of each city, ordered by name.
    out: Vec<Vec<usize>>,
    total: u32,
}

type Reject = (PruneReason, String);

impl<'a> Net<'a> {
    fn new(p: &'a TripPayload) -> Self {
        let names: Vec<&str> = p.cities.iter().map(String::as_str).collect();
        let idx = |c: &str| names.iter().position(|n| *n == c);
        let n = names.len();
        let mut adj = vec![vec![false; n]; n];
        for (a, b) in &p.flights {
            if let (Some(i), Some(j)) = (idx(a), idx(b)) {
                adj[i][j] = true;
            }
        }
        let mut by_name: Vec<usize> = (0..n).collect();
        by_name.sort_by_key(|&i| names[i]);
        let out = (0..n)
            .map(|i| by_name.iter().copied().filter(|&j| adj[i][j]).collect())
            .collect();
        Net {
            stay: names.iter().map(|c| p.stay(c).unwrap_or(0)).collect(),
            window: names.iter().map(|c| p.windows.get(*c)).collect(),
            names,
            adj,
            out,
            total: p.total_days,
        }
    }

    fn n(&self) -> usize {
        self.names.len()
    }

    fn span(&self, city: usize, start: u32) -> String {
        format!("{} Day {}-{}", self.names[city], start, start + self.stay[city] - 1)
    }

    /// Tests placing `cand` next, starting on `start`. Returns its last day.
    fn test(&self, visited: &[bool], cand: usize, start: u32, strength: Strength) -> Result<u32, Reject> {
        if visited[cand] {
            return Err((PruneReason::Visited, "revisit city".to_string()));
        }
        let end = start + self.stay[cand] - 1;
        let span = self.span(cand, start);
        if end > self.total {
            return Err((PruneReason::Budget, format!("{span} runs past Day {}", self.total)));
        }
        if let Some(w) = self.window[cand] {
            if start > w.first || end < w.last {
                return Err((
                    PruneReason::Window,
                    format!("{span} ({} Day {}-{} not covered)", w.label, w.first, w.last),
                ));
            }
        }
        let placed = visited.iter().filter(|&&v| v).count() + 1;
        if placed == self.n() && end != self.total {
            return Err((
                PruneReason::Budget,
                format!("{span}; trip ends on Day {end}, not Day {}", self.total),
            ));
        }
        for d in 0..self.n() {
            if visited[d] || d == cand {
                continue;
            }
            let Some(w) = self.window[d] else { continue };
            if w.first < end {
                return Err((
                    PruneReason::Window,
                    format!(
                        "{span}; {} can no longer cover Day {}-{} ({})",
                        self.names[d], w.first, w.last, w.label
                    ),
                ));
            }
            if strength == Strength::Strong && !self.window_reachable(visited, cand, d, w, end) {
                return Err((
                    PruneReason::Window,
                    format!(
                        "{span}; no remaining stays bring {} onto Day {}-{} ({})",
                        self.names[d], w.first, w.last, w.label
                    ),
                ));
            }
        }
        Ok(end)
    }

    /// Whether some subset of the other unplaced cities fills the gap
    /// between `end` and a start day of `d` that covers its window.
    fn window_reachable(&self, visited: &[bool], cand: usize, d: usize, w: &DayWindow, end: u32) -> bool {
        let lo = end.max((w.last + 1).saturating_sub(self.stay[d]));
        let hi = w.first;
        if lo > hi {
            return false;
        }
        let max_gap = (hi - end) as usize;
        let mut sums = vec![false; max_gap + 1];
        sums[0] = true;
        for u in 0..self.n() {
            if visited[u] || u == cand || u == d {
                continue;
            }
            let step = (self.stay[u] - 1) as usize;
            if step == 0 {
                continue;
            }
            for s in (step..=max_gap).rev() {
                if sums[s - step] {
                    sums[s] = true;
                }
            }
        }
        (lo..=hi).any(|s| sums[(s - end) as usize])
    }

    fn window_note(&self, city: usize) -> String {
        match self.window[city] {
            Some(w) => format!(" covers {} (Day {}-{})", w.label, w.first, w.last),
            None => " (no window)".to_string(),
        }
    }

    /// Days the partial plan has consumed after placing a city ending on `end`.
    fn ud(end: u32) -> String {
        format!("UD = {end}")
    }
}

struct Search<'a, 'r> {
    net: &'a Net<'a>,
    rec: &'r mut Recorder,
    strength: Strength,
    limit: usize,
    found: Vec<Vec<usize>>,
}

impl Search<'_, '_> {
    /// Expands the node at the end of `path`. Returns true when the search
    /// should stop because `limit` solutions were found.
    fn expand(&mut self, path: &mut Vec<usize>, visited: &mut [bool], end: u32, depth: usize, label: &str) -> bool {
        let net = self.net;
        let last = *path.last().expect("non-empty path");
        for (i, &next) in net.out[last].iter().enumerate() {
            let lbl = child_label(label, depth + 1, i);
            let transition = format!("{}\u{2192}**{}**", net.names[last], net.names[next]);
            match net.test(visited, next, end, self.strength) {
                Err((reason, detail)) => self.rec.push(|| {
                    event(&lbl, Action::Prune(reason), depth + 1, transition, Net::ud(end), detail, None)
                }),
                Ok(new_end) => {
                    path.push(next);
                    visited[next] = true;
                    let choice = Some(Choice::City(net.names[next].to_string()));
                    if path.len() == net.n() {
                        self.rec.push(|| {
                            event(
                                &lbl,
                                Action::Success,
                                depth + 1,
                                transition,
                                Net::ud(new_end),
                                format!(
                                    "{}; all {} cities placed, UD = {} (check)",
                                    net.span(next, end),
                                    net.n(),
                                    new_end
                                ),
                                choice,
                            )
                        });
                        self.found.push(path.clone());
                        if self.found.len() >= self.limit {
                            return true;
                        }
                    } else {
                        self.rec.push(|| {
                            event(
                                &lbl,
                                Action::Expansion,
                                depth + 1,
                                transition,
                                Net::ud(new_end),
                                format!("{}{}", net.span(next, end), net.window_note(next)),
                                choice,
                            )
                        });
                        if self.expand(path, visited, new_end, depth + 1, &lbl) {
                            return true;
                        }
                        self.rec.push(|| {
                            event(
                                &lbl,
                                Action::Backtrack,
                                depth + 1,
                                "",
                                Net::ud(end),
                                format!(
                                    "No extension of {} survives; back-track to {}.",
                                    net.names[next], net.names[last]
                                ),
                                None,
                            )
                        });
                    }
                    path.pop();
                    visited[next] = false;
                }
            }
        }
        false
    }

    fn run(&mut self) {
        let net = self.net;
        let n = net.n();
        let mut visited = vec![false; n];
        for root in 0..n {
            let lbl = child_label("", 0, root);
            let transition = format!("**Start {}**", net.names[root]);
            match net.test(&visited, root, 1, self.strength) {
                Err((reason, detail)) => self.rec.push(|| {
                    event(&lbl, Action::Prune(reason), 0, transition, "UD = 0", detail, None)
                }),
                Ok(end) => {
                    visited[root] = true;
                    let choice = Some(Choice::City(net.names[root].to_string()));
                    let detail = format!("{}{}", net.span(root, 1), net.window_note(root));
                    if n == 1 {
                        self.rec.push(|| event(&lbl, Action::Success, 0, transition, Net::ud(end), detail, choice));
                        self.found.push(vec![root]);
                        return;
                    }
                    self.rec.push(|| event(&lbl, Action::Expansion, 0, transition, Net::ud(end), detail, choice));
                    let before = self.rec.events.len();
                    let mut path = vec![root];
                    if self.expand(&mut path, &mut visited, end, 0, &lbl) {
                        return;
                    }
                    let all_pruned = self.rec.events[before..]
                        .iter()
                        .all(|e| matches!(e.action, Action::Prune(_)));
                    self.rec.push(|| {
                        let lead = if all_pruned {
                            format!("No child of the {} root survives", net.names[root])
                        } else {
                            format!("The {}-rooted subtree is exhausted", net.names[root])
                        };
                        event(
                            &lbl,
                            Action::Backtrack,
                            0,
                            "",
                            "UD = 0",
                            format!("{lead}, so the algorithm back-tracks to choose a new start city."),
                            None,
                        )
                    });
                    visited[root] = false;
                }
            }
        }
    }
}

fn initial_state(net: &Net, root: usize) -> String {
    let stay = net.stay[root];
    format!(
        "(path=[{c}], UD={stay}, start=1) # {c} spans Day 1-{stay}",
        c = net.names[root]
    )
}

fn state_definition() -> String {
    [
        "path: ordered list of visited cities",
        "UD: current independent-day total",
        "start: calendar start-day of the last city",
        "used: set of visited cities",
    ]
    .join("\n")
}

pub fn dfs(p: &TripPayload) -> SearchTrace {
    let net = Net::new(p);
    let mut rec = Recorder::new(true);
    if net.n() == 0 {
        rec.push(|| event("", Action::Initialization, 0, "", "", "No cities to visit.", None));
        return rec.finish(SearchMode::Dfs, None);
    }
    rec.push(|| {
        event(
            "",
            Action::Initialization,
            0,
            "",
            state_definition(),
            format!("Pick an initial state: {}", initial_state(&net, 0)),
            None,
        )
    });
    let mut search = Search { net: &net, rec: &mut rec, strength: Strength::Explain, limit: 1, found: Vec::new() };
    search.run();
    let solution = search.found.first().map(|order| to_solution(&net, order, p));
    if solution.is_none() {
        rec.push(|| event("", Action::Evaluation, 0, "", "", "Every start city is exhausted; no valid plan exists.", None));
    }
    rec.finish(SearchMode::Dfs, solution)
}

/// All plans found by the depth-first search with strong pruning, up to
/// `limit`.
pub fn solutions(p: &TripPayload, limit: usize) -> Vec<Solution> {
    let net = Net::new(p);
    if net.n() == 0 {
        return Vec::new();
    }
    let mut rec = Recorder::new(false);
    let mut search = Search { net: &net, rec: &mut rec, strength: Strength::Strong, limit, found: Vec::new() };
    search.run();
    search.found.iter().map(|o| to_solution(&net, o, p)).collect()
}

fn to_solution(net: &Net, order: &[usize], p: &TripPayload) -> Solution {
    let names: Vec<&str> = order.iter().map(|&i| net.names[i]).collect();
    Solution::trip_from_order(&names, p).expect("cities come from the payload")
}

/// Ranking used by the greedy pass: earliest window deadline first, then the
/// city with the fewest remaining ways to fly into it, then name.
fn greedy_key<'a>(net: &'a Net, visited: &[bool], cand: usize) -> (u32, usize, &'a str) {
    let deadline = net.window[cand].map_or(u32::MAX, |w| w.last);
    let indegree = (0..net.n())
        .filter(|&u| !visited[u] && u != cand && net.adj[u][cand])
        .count();
    (deadline, indegree, net.names[cand])
}

pub fn greedy(p: &TripPayload) -> SearchTrace {
    let net = Net::new(p);
    let n = net.n();
    let mut rec = Recorder::new(true);
    let mut visited = vec![false; n];
    let best = |visited: &[bool], cands: &mut dyn Iterator<Item = usize>, start: u32| {
        cands
            .filter_map(|c| net.test(visited, c, start, Strength::Strong).ok().map(|end| (c, end)))
            .min_by_key(|&(c, _)| greedy_key(&net, visited, c))
    };
    let Some((root, mut end)) = best(&visited, &mut (0..n), 1) else {
        rec.push(|| event("", Action::Initialization, 0, "", state_definition(), "No start city satisfies the fixed-day windows.", None));
        rec.push(|| event("", Action::Evaluation, 0, "", "", "Greedy pass stops without a plan.", None));
        return rec.finish(SearchMode::Greedy, None);
    };
    rec.push(|| event("", Action::Initialization, 0, "", state_definition(), format!("Initial state: {}", initial_state(&net, root)), None));
    visited[root] = true;
    let mut path = vec![root];
    let push_step = |rec: &mut Recorder, step: usize, city: usize, start: u32, end: u32, transition: String, done: bool| {
        let action = if done { Action::Success } else { Action::Expansion };
        let detail = if done {
            format!("{} (all constraints now met)", net.span(city, start))
        } else {
            format!("{}{}", net.span(city, start), net.window_note(city))
        };
        rec.push(|| event(format!("G{step}"), action, step, transition, Net::ud(end), detail, Some(Choice::City(net.names[city].to_string()))));
    };
    push_step(&mut rec, 0, root, 1, end, format!("**Start {}**", net.names[root]), n == 1);
    while path.len() < n {
        let last = *path.last().expect("non-empty");
        let mut cands = net.out[last].iter().copied().filter(|&c| !visited[c]);
        let Some((next, new_end)) = best(&visited, &mut cands, end) else {
            rec.push(|| {
                event(
                    "",
                    Action::Evaluation,
                    path.len(),
                    "",
                    Net::ud(end),
                    format!("No feasible flight out of {}; the greedy pass stops.", net.names[last]),
                    None,
                )
            });
            return rec.finish(SearchMode::Greedy, None);
        };
        visited[next] = true;
        path.push(next);
        let transition = format!("{}\u{2192}**{}**", net.names[last], net.names[next]);
        push_step(&mut rec, path.len() - 1, next, end, new_end, transition, path.len() == n);
        end = new_end;
    }
    let solution = to_solution(&net, &path, p);
    rec.finish(SearchMode::Greedy, Some(solution))
}

/// Whether the explained depth-first search would keep the move `order`
/// makes last. Used to check that greedy steps lie on the search tree.
pub fn dfs_keeps(p: &TripPayload, order: &[String]) -> bool {
    let net = Net::new(p);
    let mut visited = vec![false; net.n()];
    let mut start = 1;
    for (k, city) in order.iter().enumerate() {
        let Some(c) = net.names.iter().position(|n| n == city) else { return false };
        if k > 0 {
            let prev = net.names.iter().position(|n| *n == order[k - 1]).expect("checked");
            if !net.adj[prev][c] {
                return false;
            }
        }
        match net.test(&visited, c, start, Strength::Explain) {
            Ok(end) => start = end,
            Err(_) => return false,
        }
        visited[c] = true;
    }
    true
}

pub fn enumerate(p: &TripPayload) -> Result<Vec<Solution>, OracleError> {
    let n = p.cities.len();
    if n > ENUMERATION_LIMIT {
        return Err(OracleError::TooLarge(format!("{n} cities > {ENUMERATION_LIMIT}")));
    }
    let mut out = Vec::new();
    let mut order: Vec<&str> = p.cities.iter().map(String::as_str).collect();
    permute(&mut order, 0, &mut |perm| {
        if let Ok(Solution::TripPlan(legs)) = Solution::trip_from_order(perm, p) {
            if check_trip(p, &legs).is_ok() {
                out.push(Solution::TripPlan(legs));
            }
        }
    });
    Ok(out)
}

pub(crate) fn permute<T: Copy>(items: &mut [T], k: usize, visit: &mut dyn FnMut(&[T])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}
