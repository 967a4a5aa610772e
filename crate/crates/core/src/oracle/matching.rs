//! Perfect three-dimensional matching. The search always extends the
//! uncovered element with the fewest compatible triples.

use std::collections::BTreeSet;

use crate::task::{Solution, ThreeDMPayload, Triple};

use super::{child_label, event, Action, Choice, OracleError, PruneReason, Recorder, SearchMode, SearchTrace};

pub const ENUMERATION_LIMIT: u32 = 6;

pub(crate) fn triple_text(t: Triple) -> String {
    format!("({}, {}, {})", t.0, t.1, t.2)
}

#[derive(Clone)]
struct Used {
    x: Vec<bool>,
    y: Vec<bool>,
    z: Vec<bool>,
}

impl Used {
    fn new(n: u32) -> Self {
        let v = vec![false; n as usize];
        Used { x: v.clone(), y: v.clone(), z: v }
    }

    fn free(&self, t: Triple) -> bool {
        !self.x[t.0 as usize] && !self.y[t.1 as usize] && !self.z[t.2 as usize]
    }

    fn set(&mut self, t: Triple, on: bool) {
        self.x[t.0 as usize] = on;
        self.y[t.1 as usize] = on;
        self.z[t.2 as usize] = on;
    }

    /// The first element of `t` that is already covered.
    fn clash(&self, t: Triple) -> Option<String> {
        if self.x[t.0 as usize] {
            Some(format!("x{}", t.0))
        } else if self.y[t.1 as usize] {
            Some(format!("y{}", t.1))
        } else if self.z[t.2 as usize] {
            Some(format!("z{}", t.2))
        } else {
            None
        }
    }
}

/// An element as (axis, index) with axis 0 = X, 1 = Y, 2 = Z.
type Element = (u8, u32);

fn element_name(e: Element) -> String {
    format!("{}{}", ["x", "y", "z"][e.0 as usize], e.1)
}

fn touches(t: Triple, e: Element) -> bool {
    match e.0 {
        0 => t.0 == e.1,
        1 => t.1 == e.1,
        _ => t.2 == e.1,
    }
}

struct Net<'a> {
    n: u32,
    triples: &'a BTreeSet<Triple>,
}

impl Net<'_> {
    fn uncovered(&self, used: &Used) -> Vec<Element> {
        let mut out = Vec::new();
        for (axis, flags) in [&used.x, &used.y, &used.z].into_iter().enumerate() {
            for i in 0..self.n {
                if !flags[i as usize] {
                    out.push((axis as u8, i));
                }
            }
        }
        out
    }

    fn options(&self, used: &Used, e: Element) -> usize {
        self.triples.iter().filter(|&&t| touches(t, e) && used.free(t)).count()
    }

    /// Most constrained uncovered element; ties go to X before Y before Z,
    /// then the lower index.
    fn pick(&self, used: &Used) -> Option<(Element, usize)> {
        let mut best: Option<(Element, usize)> = None;
        for e in self.uncovered(used) {
            let c = self.options(used, e);
            if best.is_none_or(|(_, bc)| c < bc) {
                best = Some((e, c));
            }
        }
        best
    }

    fn children(&self, e: Element) -> Vec<Triple> {
        self.triples.iter().copied().filter(|&t| touches(t, e)).collect()
    }

    /// An uncovered element left without any compatible triple.
    fn stranded(&self, used: &Used) -> Option<Element> {
        self.uncovered(used).into_iter().find(|&e| self.options(used, e) == 0)
    }
}

fn summary(chosen: &[Triple], n: u32) -> String {
    format!(
        "matching=[{}], remaining={}",
        chosen.iter().map(|&t| triple_text(t)).collect::<Vec<_>>().join(", "),
        n as usize - chosen.len()
    )
}

struct Search<'a> {
    net: Net<'a>,
    rec: Recorder,
}

impl Search<'_> {
    fn expand(&mut self, used: &mut Used, chosen: &mut Vec<Triple>, depth: usize, label: &str) -> bool {
        let Some((e, _)) = self.net.pick(used) else {
            return true;
        };
        let n = self.net.n;
        for (i, t) in self.net.children(e).into_iter().enumerate() {
            let lbl = child_label(label, depth + 1, i);
            let transition = format!("cover {} with **{}**", element_name(e), triple_text(t));
            if let Some(c) = used.clash(t) {
                let state = summary(chosen, n);
                self.rec.push(|| {
                    event(&lbl, Action::Prune(PruneReason::Visited), depth + 1, transition, state,
                        format!("{c} is already covered"), None)
                });
                continue;
            }
            used.set(t, true);
            chosen.push(t);
            let state = summary(chosen, n);
            if chosen.len() == n as usize {
                self.rec.push(|| {
                    event(&lbl, Action::Success, depth + 1, transition, state,
                        format!("all {} elements covered exactly once", 3 * n), Some(Choice::Triple(t)))
                });
                return true;
            }
            if let Some(s) = self.net.stranded(used) {
                self.rec.push(|| {
                    event(&lbl, Action::Prune(PruneReason::Coverage), depth + 1, transition, state,
                        format!("{} has no compatible triple left", element_name(s)), None)
                });
            } else {
                self.rec.push(|| {
                    event(&lbl, Action::Expansion, depth + 1, transition, state,
                        format!("{} uncovered elements all keep a compatible triple", 3 * (n as usize - chosen.len())),
                        Some(Choice::Triple(t)))
                });
                if self.expand(used, chosen, depth + 1, &lbl) {
                    return true;
                }
                let state = summary(&chosen[..chosen.len() - 1], n);
                self.rec.push(|| {
                    event(&lbl, Action::Backtrack, depth + 1, "", state,
                        format!("No extension of {lbl} survives; back-track."), None)
                });
            }
            chosen.pop();
            used.set(t, false);
        }
        false
    }
}

fn state_definition() -> String {
    [
        "matching: chosen triples, pairwise disjoint",
        "remaining: triples still needed for a perfect matching",
    ]
    .join("\n")
}

fn run(p: &ThreeDMPayload, traced: bool) -> (Option<Vec<Triple>>, Recorder) {
    let mut search = Search { net: Net { n: p.n, triples: &p.triples }, rec: Recorder::new(traced) };
    let n = p.n;
    search.rec.push(|| {
        event("", Action::Initialization, 0, "", state_definition(),
            format!("Initial state: (matching=[], remaining={n})"), None)
    });
    let mut used = Used::new(p.n);
    let mut chosen = Vec::new();
    let found = search.expand(&mut used, &mut chosen, 0, "");
    if !found {
        search.rec.push(|| {
            event("", Action::Evaluation, 0, "", "", "Search space exhausted; no perfect matching exists.", None)
        });
    }
    (found.then_some(chosen), search.rec)
}

fn to_solution(chosen: Vec<Triple>) -> Solution {
    Solution::Matching(chosen.into_iter().collect())
}

pub fn dfs(p: &ThreeDMPayload) -> SearchTrace {
    let (found, rec) = run(p, true);
    rec.finish(SearchMode::Dfs, found.map(to_solution))
}

pub fn exact(p: &ThreeDMPayload) -> Option<Solution> {
    run(p, false).0.map(to_solution)
}

pub fn greedy(p: &ThreeDMPayload) -> SearchTrace {
    let net = Net { n: p.n, triples: &p.triples };
    let mut rec = Recorder::new(true);
    let n = p.n;
    rec.push(|| {
        event("", Action::Initialization, 0, "", state_definition(),
            format!("Initial state: (matching=[], remaining={n})"), None)
    });
    let mut used = Used::new(n);
    let mut chosen = Vec::new();
    let mut step = 0usize;
    while let Some((e, count)) = net.pick(&used) {
        let Some(t) = net.children(e).into_iter().find(|&t| used.free(t)) else {
            let state = summary(&chosen, n);
            rec.push(|| {
                event("", Action::Evaluation, step, "", state,
                    format!("{} has no compatible triple left; the greedy pass stops.", element_name(e)), None)
            });
            return rec.finish(SearchMode::Greedy, None);
        };
        used.set(t, true);
        chosen.push(t);
        let label = format!("G{step}");
        step += 1;
        let transition = format!("cover {} with **{}**", element_name(e), triple_text(t));
        let state = summary(&chosen, n);
        if chosen.len() == n as usize {
            rec.push(|| {
                event(label, Action::Success, step, transition, state,
                    format!("all {} elements covered exactly once", 3 * n), Some(Choice::Triple(t)))
            });
            return rec.finish(SearchMode::Greedy, Some(to_solution(chosen)));
        }
        rec.push(|| {
            event(label, Action::Expansion, step, transition, state,
                format!("{} is the most constrained element ({count} options); take its first compatible triple",
                    element_name(e)), Some(Choice::Triple(t)))
        });
    }
    // n == 0
    rec.finish(SearchMode::Greedy, Some(to_solution(chosen)))
}

/// Triples the depth-first search tries from the state `chosen`.
pub fn dfs_branches(p: &ThreeDMPayload, chosen: &[Triple]) -> Vec<Triple> {
    let net = Net { n: p.n, triples: &p.triples };
    let mut used = Used::new(p.n);
    for &t in chosen {
        used.set(t, true);
    }
    net.pick(&used).map(|(e, _)| net.children(e)).unwrap_or_default()
}

pub fn enumerate(p: &ThreeDMPayload) -> Result<Vec<Solution>, OracleError> {
    if p.n > ENUMERATION_LIMIT {
        return Err(OracleError::TooLarge(format!("n = {} > {ENUMERATION_LIMIT}", p.n)));
    }
    let all: Vec<Triple> = p.triples.iter().copied().collect();
    let mut out = Vec::new();
    let mut pick = Vec::new();
    subsets(&all, 0, p.n as usize, &mut pick, &mut |s| {
        let mut used = Used::new(p.n);
        for &t in s {
            if !used.free(t) {
                return;
            }
            used.set(t, true);
        }
        out.push(Solution::Matching(s.iter().copied().collect()));
    });
    Ok(out)
}

fn subsets(all: &[Triple], from: usize, k: usize, pick: &mut Vec<Triple>, visit: &mut dyn FnMut(&[Triple])) {
    if pick.len() == k {
        visit(pick);
        return;
    }
    for i in from..all.len() {
        pick.push(all[i]);
        subsets(all, i + 1, k, pick, visit);
        pick.pop();
    }
}
