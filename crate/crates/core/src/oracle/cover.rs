//! Vertex cover of a stated size. The depth-first search branches on the
//! highest-degree vertex of the residual graph: either it joins the cover,
//! or all of its residual neighbours do.

use std::collections::BTreeSet;

use crate::task::{Solution, VertexCoverPayload};

use super::{child_label, event, Action, Choice, OracleError, PruneReason, Recorder, SearchMode, SearchTrace};

pub const ENUMERATION_LIMIT: u32 = 16;

pub(crate) fn vname(v: u32) -> String {
    format!("V{v}")
}

pub(crate) fn vlist(vs: impl IntoIterator<Item = u32>) -> String {
    vs.into_iter().map(vname).collect::<Vec<_>>().join(", ")
}

struct Graph {
    adj: Vec<Vec<u32>>,
}

impl Graph {
    fn new(vertex_count: u32, edges: &BTreeSet<(u32, u32)>) -> Self {
        let mut adj = vec![Vec::new(); vertex_count as usize];
        for &(u, v) in edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph { adj }
    }

    fn residual(&self, cover: &[bool], v: u32) -> impl Iterator<Item = u32> + '_ {
        let cover = cover.to_vec();
        self.adj[v as usize].iter().copied().filter(move |&u| !cover[u as usize])
    }

    fn degree(&self, cover: &[bool], v: u32) -> usize {
        if cover[v as usize] {
            0
        } else {
            self.adj[v as usize].iter().filter(|&&u| !cover[u as usize]).count()
        }
    }

    fn uncovered(&self, cover: &[bool]) -> usize {
        (0..self.adj.len() as u32).map(|v| self.degree(cover, v)).sum::<usize>() / 2
    }

    /// Highest residual degree, lowest id on ties. None when every edge is covered.
    fn pick(&self, cover: &[bool]) -> Option<u32> {
        let mut best: Option<(usize, u32)> = None;
        for v in 0..self.adj.len() as u32 {
            let d = self.degree(cover, v);
            if d > 0 && best.is_none_or(|(bd, _)| d > bd) {
                best = Some((d, v));
            }
        }
        best.map(|(_, v)| v)
    }

    /// Size of a greedy maximal matching on the residual graph; every cover
    /// needs at least this many more vertices.
    fn matching_bound(&self, cover: &[bool]) -> usize {
        let mut used = cover.to_vec();
        let mut size = 0;
        for u in 0..self.adj.len() {
            if used[u] {
                continue;
            }
            if let Some(&v) = self.adj[u].iter().find(|&&v| !used[v as usize]) {
                used[u] = true;
                used[v as usize] = true;
                size += 1;
            }
        }
        size
    }

    /// The two children of a node: include `w`, or include its residual
    /// neighbours.
    fn branches(&self, cover: &[bool], w: u32) -> [Vec<u32>; 2] {
        [vec![w], self.residual(cover, w).collect()]
    }
}

fn summary(cover: &[bool], k: u32, uncovered: usize) -> String {
    let chosen: Vec<u32> = (0..cover.len() as u32).filter(|&v| cover[v as usize]).collect();
    let size = chosen.len() as u32;
    format!(
        "cover=[{}], budget={}, uncovered={}",
        vlist(chosen),
        k.saturating_sub(size),
        uncovered
    )
}

/// Lowest-id vertices outside `cover` added until it has `k` members.
fn padding(cover: &[bool], k: u32) -> Vec<u32> {
    let size = cover.iter().filter(|&&c| c).count() as u32;
    (0..cover.len() as u32)
        .filter(|&v| !cover[v as usize])
        .take(k.saturating_sub(size) as usize)
        .collect()
}

struct Search<'a> {
    g: &'a Graph,
    k: u32,
    rec: Recorder,
}

impl Search<'_> {
    fn expand(&mut self, cover: &mut Vec<bool>, size: u32, depth: usize, label: &str) -> Option<Vec<u32>> {
        let w = self.g.pick(cover)?;
        let branches = self.g.branches(cover, w);
        for (i, add) in branches.into_iter().enumerate() {
            let lbl = child_label(label, depth + 1, i);
            let transition = if i == 0 {
                format!("include **{}**", vname(w))
            } else {
                format!("exclude {} \u{2192} include **{}**", vname(w), vlist(add.iter().copied()))
            };
            let new_size = size + add.len() as u32;
            if new_size > self.k {
                let state = summary(cover, self.k, self.g.uncovered(cover));
                self.rec.push(|| {
                    event(&lbl, Action::Prune(PruneReason::Budget), depth + 1, transition, state,
                        format!("cover would reach {new_size} vertices, more than {}", self.k), None)
                });
                continue;
            }
            for &v in &add {
                cover[v as usize] = true;
            }
            let left = self.g.uncovered(cover);
            let outcome = if left == 0 {
                let pad = padding(cover, self.k);
                let mut chosen = add.clone();
                chosen.extend(&pad);
                let state = summary(cover, self.k, 0);
                self.rec.push(|| {
                    let note = if pad.is_empty() {
                        String::new()
                    } else {
                        format!("; pad with {} to reach {}", vlist(pad.iter().copied()), self.k)
                    };
                    event(&lbl, Action::Success, depth + 1, transition, state,
                        format!("every edge covered with {new_size} vertices{note}"), Some(Choice::Cover(chosen)))
                });
                for &v in &pad {
                    cover[v as usize] = true;
                }
                let all: Vec<u32> = (0..cover.len() as u32).filter(|&v| cover[v as usize]).collect();
                return Some(all);
            } else {
                let bound = self.g.matching_bound(cover);
                let budget = self.k - new_size;
                let state = summary(cover, self.k, left);
                if bound as u32 > budget {
                    self.rec.push(|| {
                        event(&lbl, Action::Prune(PruneReason::Coverage), depth + 1, transition, state,
                            format!("{left} uncovered edges contain {bound} disjoint edges, budget is {budget}"), None)
                    });
                    None
                } else {
                    self.rec.push(|| {
                        event(&lbl, Action::Expansion, depth + 1, transition, state,
                            format!("{left} edges left, at least {bound} more vertices needed"), Some(Choice::Cover(add.clone())))
                    });
                    let found = self.expand(cover, new_size, depth + 1, &lbl);
                    if found.is_none() {
                        let state = summary(cover, self.k, left);
                        self.rec.push(|| {
                            event(&lbl, Action::Backtrack, depth + 1, "", state,
                                format!("No extension of {lbl} survives; back-track."), None)
                        });
                    }
                    found
                }
            };
            if outcome.is_some() {
                return outcome;
            }
            for &v in &add {
                cover[v as usize] = false;
            }
        }
        None
    }
}

fn state_definition() -> String {
    [
        "cover: set of chosen vertices",
        "budget: vertices still allowed (k - |cover|)",
        "uncovered: edges with no endpoint in cover",
    ]
    .join("\n")
}

fn run(p: &VertexCoverPayload, k: u32, traced: bool) -> (Option<BTreeSet<u32>>, Recorder) {
    let g = Graph::new(p.vertex_count, &p.edges);
    let mut search = Search { g: &g, k, rec: Recorder::new(traced) };
    let mut cover = vec![false; p.vertex_count as usize];
    let edges = p.edges.len();
    search.rec.push(|| {
        event("", Action::Initialization, 0, "", state_definition(),
            format!("Initial state: (cover=[], budget={k}, uncovered={edges})"), None)
    });
    let found = if edges == 0 {
        let pad = padding(&cover, k);
        search.rec.push(|| {
            event("A", Action::Success, 1, format!("include **{}**", vlist(pad.iter().copied())),
                summary(&cover, k, 0), "the graph has no edges", Some(Choice::Cover(pad.clone())))
        });
        Some(pad)
    } else {
        search.expand(&mut cover, 0, 0, "")
    };
    if found.is_none() {
        search.rec.push(|| {
            event("", Action::Evaluation, 0, "", "", format!("Search space exhausted; no cover of {k} vertices exists."), None)
        });
    }
    (found.map(|v| v.into_iter().collect()), search.rec)
}

pub fn dfs(p: &VertexCoverPayload) -> SearchTrace {
    let (found, rec) = run(p, p.target_size, true);
    rec.finish(SearchMode::Dfs, found.map(Solution::CoverSet))
}

pub fn exact(p: &VertexCoverPayload) -> Option<Solution> {
    run(p, p.target_size, false).0.map(Solution::CoverSet)
}

/// Minimum cover size, by running the decision search for growing budgets.
pub fn minimum_size(vertex_count: u32, edges: &BTreeSet<(u32, u32)>) -> u32 {
    let g = Graph::new(vertex_count, edges);
    let lower = g.matching_bound(&vec![false; vertex_count as usize]) as u32;
    let probe = |k| VertexCoverPayload { vertex_count, edges: edges.clone(), target_size: k };
    (lower..=vertex_count)
        .find(|&k| run(&probe(k), k, false).0.is_some())
        .unwrap_or(vertex_count)
}

pub fn greedy(p: &VertexCoverPayload) -> SearchTrace {
    let g = Graph::new(p.vertex_count, &p.edges);
    let k = p.target_size;
    let mut rec = Recorder::new(true);
    let mut cover = vec![false; p.vertex_count as usize];
    rec.push(|| {
        event("", Action::Initialization, 0, "", state_definition(),
            format!("Initial state: (cover=[], budget={k}, uncovered={})", p.edges.len()), None)
    });
    let mut size = 0;
    let mut step = 0;
    loop {
        let Some(w) = g.pick(&cover) else {
            // no edges at all
            let pad = padding(&cover, k);
            rec.push(|| {
                event("G0", Action::Success, 1, format!("include **{}**", vlist(pad.iter().copied())),
                    summary(&cover, k, 0), "the graph has no edges", Some(Choice::Cover(pad.clone())))
            });
            for &v in &pad {
                cover[v as usize] = true;
            }
            break;
        };
        if size + 1 > k {
            let left = g.uncovered(&cover);
            rec.push(|| {
                event("", Action::Evaluation, step, "", summary(&cover, k, left),
                    format!("Budget exhausted with {left} edges uncovered; the greedy pass stops."), None)
            });
            return rec.finish(SearchMode::Greedy, None);
        }
        let degree = g.degree(&cover, w);
        cover[w as usize] = true;
        size += 1;
        let left = g.uncovered(&cover);
        let label = format!("G{step}");
        step += 1;
        if left == 0 {
            let pad = padding(&cover, k);
            let mut chosen = vec![w];
            chosen.extend(&pad);
            rec.push(|| {
                let note = if pad.is_empty() { String::new() } else { format!("; pad with {}", vlist(pad.iter().copied())) };
                event(label, Action::Success, step, format!("include **{}**", vname(w)), summary(&cover, k, 0),
                    format!("{} had residual degree {degree}; every edge covered{note}", vname(w)), Some(Choice::Cover(chosen)))
            });
            for &v in &pad {
                cover[v as usize] = true;
            }
            break;
        }
        rec.push(|| {
            event(label, Action::Expansion, step, format!("include **{}**", vname(w)), summary(&cover, k, left),
                format!("{} has the highest residual degree ({degree})", vname(w)), Some(Choice::Cover(vec![w])))
        });
    }
    let set: BTreeSet<u32> = (0..p.vertex_count).filter(|&v| cover[v as usize]).collect();
    rec.finish(SearchMode::Greedy, Some(Solution::CoverSet(set)))
}

/// The vertex sets the depth-first search may add from state `cover`.
pub fn dfs_branches(p: &VertexCoverPayload, cover: &BTreeSet<u32>) -> Vec<Vec<u32>> {
    let g = Graph::new(p.vertex_count, &p.edges);
    let mask: Vec<bool> = (0..p.vertex_count).map(|v| cover.contains(&v)).collect();
    match g.pick(&mask) {
        Some(w) => g.branches(&mask, w).to_vec(),
        None => Vec::new(),
    }
}

pub fn enumerate(p: &VertexCoverPayload) -> Result<Vec<Solution>, OracleError> {
    if p.vertex_count > ENUMERATION_LIMIT {
        return Err(OracleError::TooLarge(format!("{} vertices > {ENUMERATION_LIMIT}", p.vertex_count)));
    }
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << p.vertex_count) {
        if mask.count_ones() != p.target_size {
            continue;
        }
        let inside = |v: u32| mask & (1 << v) != 0;
        if p.edges.iter().all(|&(u, v)| inside(u) || inside(v)) {
            out.push(Solution::CoverSet((0..p.vertex_count).filter(|&v| inside(v)).collect()));
        }
    }
    Ok(out)
}
