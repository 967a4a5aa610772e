//! Meeting planning: meet as many friends as possible, each for at least
//! their minimum duration inside their availability window.
//!
//! A fixed visiting order is always best realised by meeting each friend as
//! early as possible, so the search runs over orders only. A dynamic
//! programme over (met set, last friend) first fixes the optimum count and
//! its earliest finishing time; the traced search then looks for the first
//! order, in name order, that attains both.

use crate::task::{format_clock, Meeting, MeetingPayload, Solution};

use super::{child_label, event, Action, Choice, OracleError, PruneReason, Recorder, SearchMode, SearchTrace};

pub const ENUMERATION_LIMIT: usize = 7;
/// Friends beyond this make the subset programme too large.
pub const DP_LIMIT: usize = 16;

pub(crate) struct Net<'a> {
    p: &'a MeetingPayload,
    /// Friend indices sorted by name.
    order: Vec<usize>,
    /// locs[i] is the location index of friend i; the start location is `start`.
    locs: Vec<usize>,
    start: usize,
    direct: Vec<Vec<u32>>,
    shortest: Vec<Vec<u32>>,
}

impl<'a> Net<'a> {
    pub(crate) fn new(p: &'a MeetingPayload) -> Self {
        let idx = |name: &str| p.locations.iter().position(|l| l == name).expect("validated location");
        let m = p.locations.len();
        let mut direct = vec![vec![0; m]; m];
        for i in 0..m {
            for j in 0..m {
                direct[i][j] = p.travel(&p.locations[i], &p.locations[j]).unwrap_or(u32::MAX / 4);
            }
        }
        let mut shortest = direct.clone();
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    let via = shortest[i][k] + shortest[k][j];
                    if via < shortest[i][j] {
                        shortest[i][j] = via;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..p.friends.len()).collect();
        order.sort_by(|&a, &b| p.friends[a].name.cmp(&p.friends[b].name));
        Net {
            p,
            order,
            locs: p.friends.iter().map(|f| idx(&f.location)).collect(),
            start: idx(&p.start_location),
            direct,
            shortest,
        }
    }

    /// Earliest meeting with friend `f` when leaving location `at` at `time`,
    /// as (arrival, start, end).
    fn meet(&self, at: usize, time: u32, f: usize) -> (u32, u32, u32) {
        let fr = &self.p.friends[f];
        let arrival = time + self.direct[at][self.locs[f]];
        let start = arrival.max(fr.available_from);
        (arrival, start, start + fr.min_minutes)
    }

    fn fits(&self, f: usize, end: u32) -> bool {
        end <= self.p.friends[f].available_until
    }

    /// Friends outside `met` that could still be reached after finishing at
    /// `loc` at `time`, using shortest-path travel as a lower bound.
    fn reachable(&self, met: u32, loc: usize, time: u32) -> u32 {
        (0..self.p.friends.len())
            .filter(|&g| met & (1 << g) == 0)
            .filter(|&g| {
                let fr = &self.p.friends[g];
                let start = (time + self.shortest[loc][self.locs[g]]).max(fr.available_from);
                start + fr.min_minutes <= fr.available_until
            })
            .count() as u32
    }

    /// (maximum count, earliest finish among schedules reaching it).
    pub(crate) fn optimum(&self) -> (u32, u32) {
        let n = self.p.friends.len();
        assert!(n <= DP_LIMIT, "too many friends for the subset programme");
        let inf = u32::MAX;
        let mut best = vec![inf; (1usize << n) * n.max(1)];
        let mut result = (0, self.p.day_start);
        for f in 0..n {
            let (_, _, end) = self.meet(self.start, self.p.day_start, f);
            if self.fits(f, end) {
                best[(1 << f) * n + f] = end;
            }
        }
        for mask in 1usize..(1 << n) {
            for last in 0..n {
                let end = best[mask * n + last];
                if end == inf {
                    continue;
                }
                let count = mask.count_ones();
                if count > result.0 || (count == result.0 && end < result.1) {
                    result = (count, end);
                }
                for g in 0..n {
                    if mask & (1 << g) != 0 {
                        continue;
                    }
                    let (_, _, e) = self.meet(self.locs[last], end, g);
                    let slot = &mut best[(mask | 1 << g) * n + g];
                    if self.fits(g, e) && e < *slot {
                        *slot = e;
                    }
                }
            }
        }
        result
    }

    fn name(&self, f: usize) -> &str {
        &self.p.friends[f].name
    }

    fn loc_name(&self, l: usize) -> &str {
        &self.p.locations[l]
    }
}

#[derive(Clone)]
struct State {
    met: u32,
    loc: usize,
    time: u32,
    schedule: Vec<Meeting>,
}

fn summary(net: &Net, s: &State) -> String {
    let names: Vec<&str> = s.schedule.iter().map(|m| m.friend.as_str()).collect();
    format!(
        "met=[{}], at={}, time={}",
        names.join(", "),
        net.loc_name(s.loc),
        format_clock(s.time)
    )
}

struct Search<'a> {
    net: Net<'a>,
    rec: Recorder,
    target: u32,
    best_end: u32,
}

impl Search<'_> {
    fn expand(&mut self, s: &mut State, depth: usize, label: &str) -> bool {
        let order = self.net.order.clone();
        let mut idx = 0;
        for f in order {
            if s.met & (1 << f) != 0 {
                continue;
            }
            let lbl = child_label(label, depth + 1, idx);
            idx += 1;
            let net = &self.net;
            let fr = &net.p.friends[f];
            let (arrival, start, end) = net.meet(s.loc, s.time, f);
            let transition = format!(
                "{} \u{2192} **{}** at {}",
                net.loc_name(s.loc),
                fr.name,
                fr.location
            );
            let timing = format!(
                "arrive {}, meet {}-{} (available {}-{}, needs {} min)",
                format_clock(arrival),
                format_clock(start),
                format_clock(end),
                format_clock(fr.available_from),
                format_clock(fr.available_until),
                fr.min_minutes
            );
            let state = summary(net, s);
            if !net.fits(f, end) {
                let until = fr.available_until;
                self.rec.push(|| {
                    event(&lbl, Action::Prune(PruneReason::Window), depth + 1, transition, state,
                        format!("{timing}; ends after {}", format_clock(until)), None)
                });
                continue;
            }
            if end > self.best_end {
                let best = self.best_end;
                self.rec.push(|| {
                    event(&lbl, Action::Prune(PruneReason::Budget), depth + 1, transition, state,
                        format!("{timing}; later than the best finish {}", format_clock(best)), None)
                });
                continue;
            }
            let count = s.schedule.len() as u32 + 1;
            let met = s.met | 1 << f;
            let loc = net.locs[f];
            let bound = count + net.reachable(met, loc, end);
            if bound < self.target {
                let target = self.target;
                self.rec.push(|| {
                    event(&lbl, Action::Prune(PruneReason::Coverage), depth + 1, transition, state,
                        format!("{timing}; at most {bound} friends reachable, need {target}"), None)
                });
                continue;
            }
            let meeting = Meeting {
                friend: fr.name.clone(),
                location: fr.location.clone(),
                start,
                end,
            };
            let prev = (s.met, s.loc, s.time);
            s.met = met;
            s.loc = loc;
            s.time = end;
            s.schedule.push(meeting);
            let choice = Some(Choice::Friend(self.net.name(f).to_string()));
            let state = summary(&self.net, s);
            if count == self.target {
                self.rec.push(|| {
                    event(&lbl, Action::Success, depth + 1, transition, state,
                        format!("{timing}; {count} friends met, the maximum"), choice)
                });
                return true;
            }
            self.rec.push(|| {
                event(&lbl, Action::Expansion, depth + 1, transition, state,
                    format!("{timing}; up to {bound} friends still reachable"), choice)
            });
            if self.expand(s, depth + 1, &lbl) {
                return true;
            }
            s.schedule.pop();
            (s.met, s.loc, s.time) = prev;
            let state = summary(&self.net, s);
            self.rec.push(|| {
                event(&lbl, Action::Backtrack, depth + 1, "", state,
                    format!("No extension of {lbl} survives; back-track."), None)
            });
        }
        false
    }
}

fn state_definition() -> String {
    [
        "met: friends met so far, in order",
        "at: current location",
        "time: clock time when the last meeting ends",
    ]
    .join("\n")
}

fn initial(net: &Net) -> State {
    State { met: 0, loc: net.start, time: net.p.day_start, schedule: Vec::new() }
}

fn run(p: &MeetingPayload, traced: bool) -> (Option<Vec<Meeting>>, Recorder) {
    let net = Net::new(p);
    let (target, best_end) = net.optimum();
    let mut s = initial(&net);
    let mut rec = Recorder::new(traced);
    let start_summary = summary(&net, &s);
    rec.push(|| {
        event("", Action::Initialization, 0, "", state_definition(),
            format!("Initial state: ({start_summary}); at most {target} friends can be met, earliest finish {}",
                format_clock(best_end)), None)
    });
    let mut search = Search { net, rec, target, best_end };
    if target == 0 {
        search.rec.push(|| {
            event("A", Action::Success, 1, "stay at the start", start_summary.clone(),
                "No friend can be met in time; the empty schedule is optimal.", None)
        });
        return (Some(Vec::new()), search.rec);
    }
    let found = search.expand(&mut s, 0, "");
    (found.then_some(s.schedule), search.rec)
}

pub fn dfs(p: &MeetingPayload) -> SearchTrace {
    let (found, rec) = run(p, true);
    rec.finish(SearchMode::Dfs, found.map(Solution::MeetingSchedule))
}

pub fn exact(p: &MeetingPayload) -> Option<Solution> {
    run(p, false).0.map(Solution::MeetingSchedule)
}

/// Maximum number of friends that can be met.
pub fn optimum_count(p: &MeetingPayload) -> u32 {
    Net::new(p).optimum().0
}

pub fn greedy(p: &MeetingPayload) -> SearchTrace {
    let net = Net::new(p);
    let (target, _) = net.optimum();
    let mut rec = Recorder::new(true);
    let mut s = initial(&net);
    let start_summary = summary(&net, &s);
    rec.push(|| {
        event("", Action::Initialization, 0, "", state_definition(),
            format!("Initial state: ({start_summary})"), None)
    });
    let mut step = 0usize;
    loop {
        if s.schedule.len() as u32 == target {
            if target == 0 {
                rec.push(|| {
                    event("G0", Action::Success, 1, "stay at the start", start_summary.clone(),
                        "No friend can be met in time; the empty schedule is optimal.", None)
                });
            }
            return rec.finish(SearchMode::Greedy, Some(Solution::MeetingSchedule(s.schedule)));
        }
        let pick = net
            .order
            .iter()
            .copied()
            .filter(|&f| s.met & (1 << f) == 0)
            .filter(|&f| net.fits(f, net.meet(s.loc, s.time, f).2))
            .min_by(|&a, &b| {
                let (fa, fb) = (&p.friends[a], &p.friends[b]);
                (fa.available_until, &fa.name).cmp(&(fb.available_until, &fb.name))
            });
        let Some(f) = pick else {
            let state = summary(&net, &s);
            let count = s.schedule.len();
            rec.push(|| {
                event("", Action::Evaluation, step, "", state,
                    format!("No remaining friend can be reached in time; {count} of {target} met, the greedy pass stops."), None)
            });
            return rec.finish(SearchMode::Greedy, None);
        };
        let fr = &p.friends[f];
        let (arrival, start, end) = net.meet(s.loc, s.time, f);
        let transition = format!("{} \u{2192} **{}** at {}", net.loc_name(s.loc), fr.name, fr.location);
        s.met |= 1 << f;
        s.loc = net.locs[f];
        s.time = end;
        s.schedule.push(Meeting { friend: fr.name.clone(), location: fr.location.clone(), start, end });
        let label = format!("G{step}");
        step += 1;
        let state = summary(&net, &s);
        let action = if s.schedule.len() as u32 == target { Action::Success } else { Action::Expansion };
        rec.push(|| {
            event(label, action, step, transition, state,
                format!("arrive {}, meet {}-{}; {} leaves earliest ({}) among reachable friends",
                    format_clock(arrival), format_clock(start), format_clock(end), fr.name,
                    format_clock(fr.available_until)),
                Some(Choice::Friend(fr.name.clone())))
        });
    }
}

/// The earliest realisation of visiting `order`, or None if some friend
/// cannot be met in time.
pub fn earliest_schedule<S: AsRef<str>>(p: &MeetingPayload, order: &[S]) -> Option<Vec<Meeting>> {
    let net = Net::new(p);
    let mut loc = net.start;
    let mut time = p.day_start;
    let mut out = Vec::with_capacity(order.len());
    let mut met = 0u32;
    for name in order {
        let f = p.friends.iter().position(|fr| fr.name == name.as_ref())?;
        if met & (1 << f) != 0 {
            return None;
        }
        met |= 1 << f;
        let (_, start, end) = net.meet(loc, time, f);
        if !net.fits(f, end) {
            return None;
        }
        let fr = &p.friends[f];
        out.push(Meeting { friend: fr.name.clone(), location: fr.location.clone(), start, end });
        loc = net.locs[f];
        time = end;
    }
    Some(out)
}

/// Friends the depth-first search tries from a partial schedule, in order.
pub fn dfs_children(p: &MeetingPayload, met: &[String]) -> Vec<String> {
    let net = Net::new(p);
    net.order
        .iter()
        .map(|&f| p.friends[f].name.clone())
        .filter(|n| !met.contains(n))
        .collect()
}

pub fn enumerate(p: &MeetingPayload) -> Result<Vec<Solution>, OracleError> {
    let n = p.friends.len();
    if n > ENUMERATION_LIMIT {
        return Err(OracleError::TooLarge(format!("{n} friends > {ENUMERATION_LIMIT}")));
    }
    let names: Vec<&str> = p.friends.iter().map(|f| f.name.as_str()).collect();
    let mut feasible: Vec<Vec<Meeting>> = Vec::new();
    let mut seq: Vec<&str> = Vec::new();
    extend(p, &names, &mut seq, &mut feasible);
    let max = feasible.iter().map(Vec::len).max().unwrap_or(0);
    Ok(feasible
        .into_iter()
        .filter(|s| s.len() == max)
        .map(Solution::MeetingSchedule)
        .collect())
}

fn extend<'a>(p: &MeetingPayload, names: &[&'a str], seq: &mut Vec<&'a str>, out: &mut Vec<Vec<Meeting>>) {
    let Some(schedule) = earliest_schedule(p, seq) else {
        return;
    };
    out.push(schedule);
    for &n in names {
        if !seq.contains(&n) {
            seq.push(n);
            extend(p, names, seq, out);
            seq.pop();
        }
    }
}
