//! The temporal landmarks graph: landmark occurrences annotated with
//! generation, validity and necessity intervals, connected by ordering edges
//! that carry minimal temporal distances.
//!
//! A node stands for one block of time during which its proposition holds:
//! the first block unless it was created by splitting. `g` is the time the
//! block starts and `e` the time it ends. The intervals bound these:
//! `min_g <= g <= max_g`, `min_v <= g` and `e <= max_v`. Edges are difference
//! constraints `g(to) - g(from) >= dist`. For mutex pairs ordered by the graph
//! the earlier block must end before the later one starts, separated by a
//! relaxed travel time.

mod build;
mod export;
mod mutex;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::PropId;
use crate::time::Time;

pub use build::{build_tlg, compute_distance, init_tlg, orderings_of, BuildOptions, BuildOutcome, TlgBuilder};
pub use crate::landmarks::Residual;
pub use export::{from_json, to_dot, to_dot_with, to_json, to_text_with};
pub use mutex::{compute_mutex, MutexRelation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Time,
    pub hi: Time,
}

impl Interval {
    pub fn new(lo: Time, hi: Time) -> Interval {
        Interval { lo, hi }
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalLandmark {
    pub prop: PropId,
    pub label: String,
    pub occurrence: u32,
    pub gen: Interval,
    pub val: Interval,
    pub nec: Interval,
    /// The block must still hold at this time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<Time>,
    /// The block must have started by this time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ceiling: Option<Time>,
    /// The block lasts until the end of the plan.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub to_end: bool,
}

impl TemporalLandmark {
    pub fn new(prop: PropId, label: impl Into<String>, min_g: Time, horizon: Time) -> TemporalLandmark {
        TemporalLandmark {
            prop,
            label: label.into(),
            occurrence: 0,
            gen: Interval::new(min_g, horizon),
            val: Interval::new(min_g, horizon),
            nec: Interval::new(min_g, horizon),
            floor: None,
            ceiling: None,
            to_end: false,
        }
    }

    /// `(at t0 d3)` for the first occurrence, `(at t0 d3)'` for the second.
    pub fn name(&self) -> String {
        format!("{}{}", self.label, "'".repeat(self.occurrence as usize))
    }

    fn key(&self) -> (&str, u32) {
        (&self.label, self.occurrence)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    /// The achiever of the target needs the source as a condition.
    Necessary,
    /// The source precedes the target through a chain of actions.
    Dependency,
    /// A difference constraint from a trajectory constraint, not an ordering.
    Constraint,
}

impl EdgeKind {
    pub fn letter(&self) -> &'static str {
        match self {
            EdgeKind::Necessary => "n",
            EdgeKind::Dependency => "d",
            EdgeKind::Constraint => "c",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    pub dist: Time,
}

/// Two mutex landmarks with the least time between one ending and the other
/// starting, in each direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MutexPair {
    pub a: usize,
    pub b: usize,
    pub sep_ab: Time,
    pub sep_ba: Time,
}

/// Bounds on the end of the plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanEnd {
    pub lo: Time,
    pub hi: Time,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tlg {
    pub nodes: Vec<TemporalLandmark>,
    pub edges: Vec<Edge>,
    pub mutexes: Vec<MutexPair>,
    /// Time origin: nothing new happens before it.
    pub origin: Time,
    pub horizon: Time,
}

/// Which endpoint an inconsistency or a derivation step refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    MinG,
    MaxG,
    MinV,
    MaxV,
    MinN,
    MaxN,
}

impl Endpoint {
    pub fn name(&self) -> &'static str {
        match self {
            Endpoint::MinG => "min_g",
            Endpoint::MaxG => "max_g",
            Endpoint::MinV => "min_v",
            Endpoint::MaxV => "max_v",
            Endpoint::MinN => "min_n",
            Endpoint::MaxN => "max_n",
        }
    }
}

/// Why an inconsistent graph has no solution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub landmark: String,
    /// E.g. `min_v > max_g`.
    pub relation: String,
    pub lhs: Time,
    pub rhs: Time,
    /// Derivation steps that produced the offending endpoint values.
    pub chain: Vec<String>,
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {} ({} > {})", self.landmark, self.relation, self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Consistency {
    Consistent,
    Inconsistent(Witness),
}

impl Consistency {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Consistency::Consistent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TlgError {
    #[error("landmark {landmark} is infeasible: min_g = {min_g} > max_g = {max_g}")]
    InfeasibleLandmark { landmark: String, min_g: Time, max_g: Time },
    #[error("no action links {from} to {to}")]
    NoCausalWitness { from: String, to: String },
    #[error("at-most-once forbids a second occurrence of {0}")]
    AtMostOnceViolation(String),
    #[error("split_occurrence needs a node whose necessity outlives its validity")]
    NoConflict,
}

/// Which rule last moved an endpoint; used to explain inconsistencies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Cause {
    Init,
    Nesting,
    Ceiling,
    Edge(usize),
    Mutex(usize, bool),
}

#[derive(Clone, Debug)]
struct Trace {
    min_v: Vec<Cause>,
    max_g: Vec<Cause>,
    max_v: Vec<Cause>,
}

/// Which rule families to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Rules {
    causal: bool,
    mutex: bool,
}

impl Tlg {
    pub fn new(origin: Time, horizon: Time) -> Tlg {
        Tlg {
            nodes: Vec::new(),
            edges: Vec::new(),
            mutexes: Vec::new(),
            origin,
            horizon,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn add_node(&mut self, node: TemporalLandmark) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// Adds an edge unless an identical or stronger one exists.
    pub fn add_edge(&mut self, from: usize, to: usize, kind: EdgeKind, dist: Time) {
        if let Some(e) = self.edges.iter_mut().find(|e| e.from == from && e.to == to && e.kind == kind) {
            e.dist = e.dist.max(dist);
            return;
        }
        self.edges.push(Edge { from, to, kind, dist });
    }

    /// First node of `label` with the given occurrence index.
    pub fn find(&self, label: &str, occurrence: u32) -> Option<usize> {
        self.nodes.iter().position(|n| n.label == label && n.occurrence == occurrence)
    }

    pub fn find_prop(&self, p: PropId) -> Option<usize> {
        self.nodes.iter().position(|n| n.prop == p && n.occurrence == 0)
    }

    pub fn node(&self, label: &str) -> Option<&TemporalLandmark> {
        self.find(label, 0).map(|i| &self.nodes[i])
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    pub fn are_mutex(&self, a: usize, b: usize) -> bool {
        self.mutexes.iter().any(|m| (m.a == a && m.b == b) || (m.a == b && m.b == a))
    }

    /// Ordering successors (constraint edges excluded).
    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |e| e.from == i && e.kind != EdgeKind::Constraint)
            .map(|e| e.to)
    }

    /// `reach[i][j]` is true when an ordering path leads from `i` to `j`.
    pub fn reachability(&self) -> Vec<Vec<bool>> {
        let n = self.nodes.len();
        let mut reach = vec![vec![false; n]; n];
        for e in self.edges.iter().filter(|e| e.kind != EdgeKind::Constraint) {
            reach[e.from][e.to] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    let via = reach[k].clone();
                    for (r, v) in reach[i].iter_mut().zip(via) {
                        *r |= v;
                    }
                }
            }
        }
        reach
    }

    pub fn is_acyclic(&self) -> bool {
        let reach = self.reachability();
        (0..self.nodes.len()).all(|i| !reach[i][i])
    }

    /// Mutex pairs `(earlier, later, separation)` whose order the graph fixes.
    fn ordered_mutexes(&self) -> Vec<(usize, usize, Time, usize)> {
        let reach = self.reachability();
        let mut out = Vec::new();
        for (k, m) in self.mutexes.iter().enumerate() {
            if reach[m.a][m.b] {
                out.push((m.a, m.b, m.sep_ab, k));
            }
            if reach[m.b][m.a] {
                out.push((m.b, m.a, m.sep_ba, k));
            }
        }
        out
    }

    /// Lower bound on the plan end: every landmark must have started.
    pub fn plan_end(&self) -> PlanEnd {
        let lo = self.nodes.iter().map(|n| n.val.lo).fold(self.origin, Time::max);
        PlanEnd { lo, hi: self.horizon }
    }

    /// Largest and smallest values an endpoint can be pushed to. Only reached
    /// when positive cycles make the graph inconsistent anyway; keeps the
    /// fixpoint finite. Built from values propagation never changes, so a
    /// second run stops where the first did.
    fn caps(&self) -> (Time, Time) {
        let spread = self
            .edges
            .iter()
            .map(|e| e.dist.max(-e.dist))
            .chain(self.mutexes.iter().flat_map(|m| [m.sep_ab.max(-m.sep_ab), m.sep_ba.max(-m.sep_ba)]))
            .fold(Time::from_int(1), |a, b| a + b);
        let top = self.nodes.iter().map(|n| n.gen.lo).fold(self.horizon, Time::max);
        (self.origin - self.horizon.max(-self.horizon) - spread, top + spread)
    }

    fn run(&mut self, rules: Rules) -> Trace {
        let n = self.nodes.len();
        let mut trace = Trace {
            min_v: vec![Cause::Init; n],
            max_g: vec![Cause::Init; n],
            max_v: vec![Cause::Init; n],
        };
        let (lo_cap, hi_cap) = self.caps();
        let ordered = if rules.mutex { self.ordered_mutexes() } else { Vec::new() };
        let raise = |slot: &mut Time, v: Time| -> bool {
            let v = v.min(hi_cap);
            if v > *slot {
                *slot = v;
                true
            } else {
                false
            }
        };
        let lower = |slot: &mut Time, v: Time| -> bool {
            let v = v.max(lo_cap);
            if v < *slot {
                *slot = v;
                true
            } else {
                false
            }
        };
        // Sweep until nothing moves. All rules are monotone, so the result is
        // the same for any processing order.
        loop {
            let mut changed = false;
            for i in 0..n {
                let node = &mut self.nodes[i];
                if raise(&mut node.val.lo, node.gen.lo) {
                    trace.min_v[i] = Cause::Nesting;
                    changed = true;
                }
                if lower(&mut node.gen.hi, node.val.hi) {
                    trace.max_g[i] = Cause::Nesting;
                    changed = true;
                }
                if let Some(c) = node.ceiling {
                    if lower(&mut node.gen.hi, c) {
                        trace.max_g[i] = Cause::Ceiling;
                        changed = true;
                    }
                }
            }
            if rules.causal {
                for (k, e) in self.edges.iter().enumerate() {
                    let from_min = self.nodes[e.from].val.lo;
                    if raise(&mut self.nodes[e.to].val.lo, from_min + e.dist) {
                        trace.min_v[e.to] = Cause::Edge(k);
                        changed = true;
                    }
                    let to_max = self.nodes[e.to].gen.hi;
                    if lower(&mut self.nodes[e.from].gen.hi, to_max - e.dist) {
                        trace.max_g[e.from] = Cause::Edge(k);
                        changed = true;
                    }
                }
            }
            for &(a, b, sep, k) in &ordered {
                let forward = a < b;
                let later_max = self.nodes[b].gen.hi;
                if lower(&mut self.nodes[a].val.hi, later_max - sep) {
                    trace.max_v[a] = Cause::Mutex(k, forward);
                    changed = true;
                }
                let own_max_v = self.nodes[a].val.hi;
                if lower(&mut self.nodes[a].gen.hi, own_max_v) {
                    trace.max_g[a] = Cause::Nesting;
                    changed = true;
                }
                let earlier = &self.nodes[a];
                let start = earlier.floor.map_or(earlier.val.lo, |f| f.max(earlier.val.lo));
                if raise(&mut self.nodes[b].val.lo, start + sep) {
                    trace.min_v[b] = Cause::Mutex(k, forward);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for node in &mut self.nodes {
            node.nec.lo = node.nec.lo.max(node.val.lo);
            node.nec.hi = node.nec.hi.min(node.val.hi);
        }
        trace
    }

    /// Applies the causal rules along every edge until nothing changes.
    pub fn propagate_causal(&mut self) {
        self.run(Rules {
            causal: true,
            mutex: false,
        });
    }

    /// Applies the mutex rules for every ordered mutex pair until nothing
    /// changes.
    pub fn propagate_mutex(&mut self) {
        self.run(Rules {
            causal: false,
            mutex: true,
        });
    }

    /// Joint fixpoint of the causal and mutex rules.
    pub fn propagate(&mut self) {
        self.run(Rules {
            causal: true,
            mutex: true,
        });
    }

    /// Propagates and checks in one go, explaining any inconsistency.
    pub fn propagate_and_check(&mut self) -> Consistency {
        let trace = self.run(Rules {
            causal: true,
            mutex: true,
        });
        self.check_with(Some(&trace))
    }

    pub fn check_consistency(&self) -> Consistency {
        self.check_with(None)
    }

    fn check_with(&self, trace: Option<&Trace>) -> Consistency {
        if !self.is_acyclic() {
            let reach = self.reachability();
            let i = (0..self.nodes.len())
                .filter(|&i| reach[i][i])
                .min_by(|&a, &b| self.nodes[a].key().cmp(&self.nodes[b].key()))
                .unwrap_or(0);
            return Consistency::Inconsistent(Witness {
                landmark: self.nodes[i].name(),
                relation: "ordering cycle".into(),
                lhs: Time::ZERO,
                rhs: Time::ZERO,
                chain: vec![],
            });
        }
        let end = self.plan_end();
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| self.nodes[a].key().cmp(&self.nodes[b].key()));
        for i in order {
            let n = &self.nodes[i];
            let checks: [(bool, &str, Time, Time, Option<Endpoint>); 8] = [
                (n.gen.lo > n.gen.hi, "min_g > max_g", n.gen.lo, n.gen.hi, Some(Endpoint::MaxG)),
                (n.val.lo > n.gen.hi, "min_v > max_g", n.val.lo, n.gen.hi, Some(Endpoint::MinV)),
                (n.val.lo > n.val.hi, "min_v > max_v", n.val.lo, n.val.hi, Some(Endpoint::MaxV)),
                (n.nec.lo > n.nec.hi, "min_n > max_n", n.nec.lo, n.nec.hi, None),
                (n.gen.lo < self.origin && n.occurrence > 0, "min_g < origin", self.origin, n.gen.lo, None),
                (
                    n.floor.is_some_and(|f| f > n.val.hi),
                    "floor > max_v",
                    n.floor.unwrap_or(Time::ZERO),
                    n.val.hi,
                    Some(Endpoint::MaxV),
                ),
                (
                    n.ceiling.is_some_and(|c| n.val.lo > c),
                    "min_v > ceiling",
                    n.val.lo,
                    n.ceiling.unwrap_or(Time::ZERO),
                    Some(Endpoint::MinV),
                ),
                (n.to_end && end.lo > n.val.hi, "plan end > max_v", end.lo, n.val.hi, Some(Endpoint::MaxV)),
            ];
            if let Some(&(_, rel, lhs, rhs, ep)) = checks.iter().find(|c| c.0) {
                let chain = match (trace, ep) {
                    (Some(t), Some(ep)) => self.explain(t, i, ep),
                    _ => vec![],
                };
                return Consistency::Inconsistent(Witness {
                    landmark: n.name(),
                    relation: rel.into(),
                    lhs,
                    rhs,
                    chain,
                });
            }
            if n.to_end {
                let reach = self.reachability();
                if let Some(m) = self.mutexes.iter().find_map(|m| {
                    let other = if m.a == i { m.b } else if m.b == i { m.a } else { return None };
                    reach[i][other].then_some(other)
                }) {
                    return Consistency::Inconsistent(Witness {
                        landmark: n.name(),
                        relation: format!("holds to the end but precedes mutex {}", self.nodes[m].name()),
                        lhs: Time::ZERO,
                        rhs: Time::ZERO,
                        chain: vec![],
                    });
                }
            }
        }
        Consistency::Consistent
    }

    /// Walks back the rules that produced an endpoint value.
    fn explain(&self, trace: &Trace, start: usize, ep: Endpoint) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut cur = Some((start, ep));
        while let Some((i, ep)) = cur {
            if !seen.insert((i, ep as u8)) || out.len() > self.nodes.len() * 3 {
                break;
            }
            let n = &self.nodes[i];
            let (cause, value) = match ep {
                Endpoint::MinV => (trace.min_v[i], n.val.lo),
                Endpoint::MaxG => (trace.max_g[i], n.gen.hi),
                Endpoint::MaxV => (trace.max_v[i], n.val.hi),
                _ => (Cause::Init, Time::ZERO),
            };
            cur = match cause {
                Cause::Init => {
                    out.push(format!("{}({}) = {} initially", ep.name(), n.name(), value));
                    None
                }
                Cause::Nesting => {
                    out.push(format!("{}({}) = {} by interval nesting", ep.name(), n.name(), value));
                    match ep {
                        Endpoint::MaxG => Some((i, Endpoint::MaxV)),
                        _ => None,
                    }
                }
                Cause::Ceiling => {
                    out.push(format!("{}({}) = {} by a constraint ceiling", ep.name(), n.name(), value));
                    None
                }
                Cause::Edge(k) => {
                    let e = self.edges[k];
                    let arrow = format!("{} <{}({})> {}", self.nodes[e.from].name(), e.kind.letter(), e.dist, self.nodes[e.to].name());
                    out.push(format!("{}({}) = {} via {}", ep.name(), n.name(), value, arrow));
                    match ep {
                        Endpoint::MinV => Some((e.from, Endpoint::MinV)),
                        _ => Some((e.to, Endpoint::MaxG)),
                    }
                }
                Cause::Mutex(k, _) => {
                    let m = self.mutexes[k];
                    let other = if m.a == i { m.b } else { m.a };
                    out.push(format!("{}({}) = {} via mutex with {}", ep.name(), n.name(), value, self.nodes[other].name()));
                    match ep {
                        Endpoint::MinV => Some((other, Endpoint::MinV)),
                        _ => Some((other, Endpoint::MaxG)),
                    }
                }
            };
        }
        out
    }

    /// Removes ordering edges implied by a two-step path at least as long.
    pub fn transitive_reduction(&mut self) {
        let mut drop = vec![false; self.edges.len()];
        for (k, e) in self.edges.iter().enumerate() {
            if e.kind == EdgeKind::Constraint {
                continue;
            }
            let implied = self.edges.iter().enumerate().any(|(k1, e1)| {
                k1 != k
                    && !drop[k1]
                    && e1.from == e.from
                    && e1.kind != EdgeKind::Constraint
                    && self.edges.iter().enumerate().any(|(k2, e2)| {
                        k2 != k && !drop[k2] && e2.from == e1.to && e2.to == e.to && e2.kind != EdgeKind::Constraint && e1.dist + e2.dist >= e.dist
                    })
            });
            if implied {
                drop[k] = true;
            }
        }
        let mut k = 0;
        self.edges.retain(|_| {
            k += 1;
            !drop[k - 1]
        });
    }

    /// Adds occurrence `l'` for a node whose block is required to last
    /// longer than it can. Every mutex landmark ordered after `l` is ordered
    /// before `l'`, and the floor moves to `l'`.
    pub fn split_occurrence(&mut self, l: usize, min_g: Time, at_most_once: bool) -> Result<usize, TlgError> {
        let reach = self.reachability();
        let node = &self.nodes[l];
        let late: Vec<(usize, Time)> = self
            .mutexes
            .iter()
            .filter_map(|m| {
                if m.a == l && reach[l][m.b] {
                    Some((m.b, m.sep_ba))
                } else if m.b == l && reach[l][m.a] {
                    Some((m.a, m.sep_ab))
                } else {
                    None
                }
            })
            .collect();
        let conflict = node.floor.is_some_and(|f| f > node.val.hi) || (node.to_end && !late.is_empty());
        if !conflict {
            return Err(TlgError::NoConflict);
        }
        if at_most_once {
            return Err(TlgError::AtMostOnceViolation(node.label.clone()));
        }
        Ok(self.add_last_block(l, min_g))
    }

    /// Adds a later occurrence of `l` that takes over its floor and its
    /// end-of-plan requirement. Mutex landmarks that must end before the new
    /// block starts are ordered before it: those ordered after `l`, and all
    /// of them when the block lasts until the end.
    pub fn add_last_block(&mut self, l: usize, min_g: Time) -> usize {
        let reach = self.reachability();
        let node = self.nodes[l].clone();
        let occurrence = self.nodes.iter().filter(|n| n.prop == node.prop).map(|n| n.occurrence).max().unwrap_or(0) + 1;
        let mut fresh = TemporalLandmark::new(node.prop, node.label.clone(), min_g, self.horizon);
        fresh.occurrence = occurrence;
        fresh.floor = node.floor;
        fresh.to_end = node.to_end;
        let partners: Vec<MutexPair> = self.mutexes.iter().filter(|m| m.a == l || m.b == l).copied().collect();
        let old = &mut self.nodes[l];
        old.floor = None;
        old.to_end = false;
        let id = self.add_node(fresh);
        for m in partners {
            let (other, sep_other_to_l, sep_l_to_other) = if m.a == l { (m.b, m.sep_ba, m.sep_ab) } else { (m.a, m.sep_ab, m.sep_ba) };
            self.mutexes.push(MutexPair {
                a: other,
                b: id,
                sep_ab: sep_other_to_l,
                sep_ba: sep_l_to_other,
            });
            if self.nodes[id].to_end || reach[l][other] {
                self.add_edge(other, id, EdgeKind::Dependency, sep_other_to_l);
            }
        }
        self.add_edge(l, id, EdgeKind::Dependency, Time::ZERO);
        id
    }

    /// Nodes sorted by (label, occurrence), edges by endpoints. Gives every
    /// graph a canonical layout.
    pub fn canonicalize(&mut self) {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| self.nodes[a].key().cmp(&self.nodes[b].key()));
        let mut pos = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            pos[old] = new;
        }
        self.nodes = order.iter().map(|&i| self.nodes[i].clone()).collect();
        for e in &mut self.edges {
            e.from = pos[e.from];
            e.to = pos[e.to];
        }
        self.edges.sort_by_key(|a| (a.from, a.to, a.kind));
        for m in &mut self.mutexes {
            let (a, b) = (pos[m.a], pos[m.b]);
            if a <= b {
                m.a = a;
                m.b = b;
            } else {
                *m = MutexPair {
                    a: b,
                    b: a,
                    sep_ab: m.sep_ba,
                    sep_ba: m.sep_ab,
                };
            }
        }
        self.mutexes.sort_by_key(|m| (m.a, m.b));
        self.mutexes.dedup_by_key(|m| (m.a, m.b));
    }
}
