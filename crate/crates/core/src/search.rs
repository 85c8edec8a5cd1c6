//! Uniform-cost forward search over partial plans.
//!
//! A node sits at a decision epoch `t`: the end events and timed literals at
//! `t` have been applied, and some actions may already have been chosen to
//! start at `t`. A node either starts one more action at `t` (in increasing
//! action order, so each set of starts is generated once) or closes the
//! happening and moves to the next epoch. Epochs are action ends, timed
//! literal times and the window bounds of hold-during constraints; nothing
//! else can make waiting useful.
//!
//! Every generated node gets its own landmark graph built for the rest of
//! the plan, and is discarded when that graph is inconsistent or a
//! constraint monitor reports a violation that no completion can repair.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::execution::{apply_end_phase, apply_start_phase, check_invariants};
use crate::landmarks::Residual;
use crate::model::{ActionId, GroundedTask, PlanStep, PropSet, TemporalPlan};
use crate::time::Time;
use crate::tlg::{BuildOptions, BuildOutcome, Consistency, TlgBuilder, Witness};
use crate::trajectory::{Modality, MonitorSet, PruneReason, ValidationReport};

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Stop after expanding this many nodes.
    pub max_nodes: Option<usize>,
    pub max_time: Option<Duration>,
    /// Worker threads used to evaluate the children of a node.
    pub jobs: usize,
    /// Build and check a landmark graph for every node.
    pub landmarks: bool,
    /// Prune with the constraint monitors.
    pub monitors: bool,
    /// Keep at most this many pruned-node records.
    pub log_limit: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_nodes: None,
            max_time: None,
            jobs: 1,
            landmarks: true,
            monitors: true,
            log_limit: 10_000,
        }
    }
}

/// A discarded node: its plan so far, its epoch and why it was dropped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrunedNode {
    pub plan: String,
    pub time: Time,
    pub reason: PruneReason,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SearchStats {
    pub expanded: usize,
    pub generated: usize,
    pub pruned_total: usize,
    pub pruned: Vec<PrunedNode>,
    /// Largest makespan bound popped from the queue.
    pub frontier_bound: Time,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Limit {
    Nodes,
    Time,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Solved(TemporalPlan),
    /// With a witness when the landmark graph of the task is inconsistent.
    Unsolvable(Option<Witness>),
    ResourceLimit(Limit),
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub outcome: Outcome,
    pub stats: SearchStats,
    pub root: BuildOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Key {
    t: Time,
    pre: PropSet,
    cur: PropSet,
    starts: Vec<ActionId>,
    running: Vec<(ActionId, Time)>,
    monitors: MonitorSet,
    happening: bool,
}

#[derive(Clone, Debug)]
struct Node {
    key: Key,
    steps: Vec<PlanStep>,
    /// Every action has ended here and the plan is worth validating.
    candidate: bool,
}

impl Node {
    fn bound(&self, task: &GroundedTask) -> Time {
        self.key
            .running
            .iter()
            .map(|&(a, s)| s + task.action(a).dur)
            .fold(self.key.t, Time::max)
    }

    fn plan(&self, task: &GroundedTask) -> TemporalPlan {
        TemporalPlan::new(task, self.steps.clone())
    }

    fn order(&self) -> Vec<(Time, ActionId)> {
        self.steps.iter().map(|s| (s.start, s.action)).collect()
    }
}

/// Queue entry: smallest makespan bound first, then fewest steps, then the
/// lexicographically smallest plan, finished plans before open nodes.
#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Entry {
    bound: Time,
    steps: usize,
    plan: Vec<(Time, ActionId)>,
    open: bool,
    seq: usize,
}

enum Child {
    Keep(Node),
    Pruned(PrunedNode),
    Invalid,
}

struct Search<'a> {
    task: &'a GroundedTask,
    config: &'a SearchConfig,
    builder: TlgBuilder<'a>,
    waits: Vec<Time>,
}

impl<'a> Search<'a> {
    fn residual(&self, node: &Node) -> Residual {
        let task = self.task;
        let k = &node.key;
        let ob = k.monitors.obligations(task, k.t);
        let mut timed: Vec<(Time, crate::model::PropId)> = Vec::new();
        for &(a, s) in &k.running {
            let act = task.action(a);
            timed.extend(act.e_add.iter().map(|&p| (s + act.dur, p)));
        }
        for til in task.tils.iter().filter(|x| x.positive && x.time > k.t) {
            timed.push((til.time, til.prop));
        }
        Residual {
            origin: k.t,
            state: k.cur.clone(),
            timed,
            targets: ob.targets,
            deadlines: ob.deadlines,
            constraints: ob.constraints,
            horizon: task.upper_bound,
        }
    }

    fn log(&self, node: &Node, reason: PruneReason) -> Child {
        Child::Pruned(PrunedNode {
            plan: node.plan(self.task).to_ipc(self.task),
            time: node.key.t,
            reason,
        })
    }

    /// Landmark and at-most-once checks shared by all children.
    fn evaluate(&self, node: Node) -> Child {
        if !self.config.landmarks {
            return Child::Keep(node);
        }
        let out = self.builder.build(&self.residual(&node));
        if let Consistency::Inconsistent(w) = &out.consistency {
            return self.log(&node, PruneReason::Inconsistent(w.to_string()));
        }
        if self.config.monitors {
            for (p, name) in node.key.monitors.closed_once(self.task) {
                if out.is_visible(p) {
                    return self.log(&node, PruneReason::AtMostOnce(name));
                }
            }
        }
        Child::Keep(node)
    }

    fn start_child(&self, node: &Node, a: ActionId) -> Child {
        let task = self.task;
        let k = &node.key;
        let act = task.action(a);
        if k.t + act.dur > task.upper_bound || !act.s_cond.iter().all(|&p| k.pre.contains(p)) {
            return Child::Invalid;
        }
        let mut starts = k.starts.clone();
        starts.push(a);
        let mut cur = k.pre.clone();
        if apply_start_phase(task, k.t, &mut cur, &starts).is_err() {
            return Child::Invalid;
        }
        let deleted: Vec<_> = k.pre.iter().filter(|&p| !cur.contains(p)).collect();
        // Deleted facts cannot come back at this time point.
        for &(b, s) in &k.running {
            if s < k.t && task.action(b).inv.iter().any(|p| deleted.contains(p)) {
                return Child::Invalid;
            }
        }
        let mut running = k.running.clone();
        running.push((a, k.t));
        running.sort();
        let mut steps = node.steps.clone();
        steps.push(PlanStep { action: a, start: k.t });
        let child = Node {
            key: Key {
                t: k.t,
                pre: k.pre.clone(),
                cur,
                starts,
                running,
                monitors: k.monitors.clone(),
                happening: k.happening,
            },
            steps,
            candidate: false,
        };
        if self.config.monitors {
            if let Err(r) = k.monitors.check_deletes(task, k.t, &deleted) {
                return self.log(&child, r);
            }
        }
        self.evaluate(child)
    }

    fn advance_child(&self, node: &Node) -> Option<Child> {
        let task = self.task;
        let k = &node.key;
        let next_end = k.running.iter().map(|&(a, s)| s + task.action(a).dur).min();
        let next_wait = self.waits.iter().copied().find(|&w| w > k.t);
        let next = match (next_end, next_wait) {
            (Some(e), Some(w)) => e.min(w),
            (Some(e), None) => e,
            (None, Some(w)) => w,
            (None, None) => return None,
        };
        if next > task.upper_bound {
            return None;
        }
        let mut monitors = k.monitors.clone();
        let pending = Node {
            key: Key { t: next, ..k.clone() },
            ..node.clone()
        };
        if k.happening || !k.starts.is_empty() {
            if check_invariants(task, k.t, &k.cur, &k.running).is_err() {
                return Some(Child::Invalid);
            }
            // Monitor state is part of the duplicate-detection key, so it is
            // tracked even when monitors do not prune. Its violations are
            // final either way.
            if let Err(r) = monitors.observe(task, k.t, &k.cur) {
                return Some(if self.config.monitors { self.log(node, r) } else { Child::Invalid });
            }
        }
        if self.config.monitors {
            if let Err(r) = monitors.check_advance(task, next) {
                return Some(self.log(&pending, r));
            }
        }
        let (ending, running): (Vec<_>, Vec<_>) = k.running.iter().partition(|&&(a, s)| s + task.action(a).dur == next);
        let mut state = k.cur.clone();
        if apply_end_phase(task, next, &mut state, &ending).is_err() {
            return Some(Child::Invalid);
        }
        let happening = !ending.is_empty() || task.tils.iter().any(|x| x.time == next);
        let child = Node {
            key: Key {
                t: next,
                pre: state.clone(),
                cur: state,
                starts: Vec::new(),
                running,
                monitors,
                happening,
            },
            steps: node.steps.clone(),
            candidate: false,
        };
        let candidate = !ending.is_empty() && child.key.running.is_empty();
        Some(self.evaluate(Node { candidate, ..child }))
    }
}

impl<'a> Search<'a> {
    fn expand(&self, node: &Node) -> Vec<Child> {
        let mut work: Vec<Option<ActionId>> = Vec::new();
        let after = node.key.starts.last().copied();
        for a in self.task.action_ids() {
            if after.is_none_or(|b| a > b) {
                work.push(Some(a));
            }
        }
        work.push(None);
        let run = |w: &Option<ActionId>| match w {
            Some(a) => Some(self.start_child(node, *a)),
            None => self.advance_child(node),
        };
        let jobs = self.config.jobs.max(1);
        let results: Vec<Option<Child>> = if jobs == 1 || work.len() < 2 {
            work.iter().map(run).collect()
        } else {
            let chunk = work.len().div_ceil(jobs);
            std::thread::scope(|scope| {
                let handles: Vec<_> = work
                    .chunks(chunk)
                    .map(|part| scope.spawn(move || part.iter().map(run).collect::<Vec<_>>()))
                    .collect();
                handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
            })
        };
        results.into_iter().flatten().collect()
    }
}

/// Times at which waiting can matter: timed literals and hold-during
/// window bounds.
fn wait_points(task: &GroundedTask) -> Vec<Time> {
    let mut w: BTreeSet<Time> = task.tils.iter().map(|x| x.time).collect();
    for c in &task.constraints {
        if let Modality::HoldDuring(u1, u2) = c.op {
            w.insert(u1);
            w.insert(u2);
        }
    }
    w.into_iter().filter(|&t| t > Time::ZERO && t <= task.upper_bound).collect()
}

fn root_node(task: &GroundedTask) -> Node {
    let mut state = task.init.clone();
    for til in task.tils.iter().filter(|x| x.time < Time::ZERO) {
        if til.positive {
            state.insert(til.prop);
        } else {
            state.remove(til.prop);
        }
    }
    // Timed literals at 0 cannot clash: they carry no conditions.
    let _ = apply_end_phase(task, Time::ZERO, &mut state, &[]);
    Node {
        key: Key {
            t: Time::ZERO,
            pre: state.clone(),
            cur: state,
            starts: Vec::new(),
            running: Vec::new(),
            monitors: MonitorSet::new(task),
            happening: true,
        },
        steps: Vec::new(),
        candidate: true,
    }
}

/// Replays `prefix` through the search transitions and builds the landmark
/// graph of the node reached at time `at`, once every step of the prefix
/// that starts at `at` has been started. Errors name the step or time at
/// which the replay left the search space.
pub fn node_graph(task: &GroundedTask, prefix: &[PlanStep], at: Time) -> Result<BuildOutcome, String> {
    let config = SearchConfig::default();
    let search = Search {
        task,
        config: &config,
        builder: TlgBuilder::new(task).with_options(BuildOptions { probe: false }),
        waits: wait_points(task),
    };
    let mut steps: Vec<PlanStep> = prefix.to_vec();
    steps.sort_by_key(|s| (s.start, s.action));
    let mut node = root_node(task);
    loop {
        let t = node.key.t;
        for s in steps.iter().filter(|s| s.start == t) {
            node = match search.start_child(&node, s.action) {
                Child::Keep(n) => n,
                Child::Pruned(p) => return Err(format!("{} at {t} pruned: {}", task.action(s.action).label(), p.reason)),
                Child::Invalid => return Err(format!("{} cannot start at {t}", task.action(s.action).label())),
            };
        }
        if t >= at {
            break;
        }
        node = match search.advance_child(&node) {
            Some(Child::Keep(n)) => n,
            Some(Child::Pruned(p)) => return Err(format!("advancing from {t} pruned: {}", p.reason)),
            Some(Child::Invalid) => return Err(format!("advancing from {t} is invalid")),
            None => return Err(format!("no time point after {t}")),
        };
    }
    if node.key.t != at {
        return Err(format!("{at} is not a decision epoch"));
    }
    Ok(search.builder.build(&search.residual(&node)))
}

/// Builds the landmark graph of the task and, if it is consistent, searches
/// for the plan of least makespan (ties broken by the lexicographically
/// smallest plan) within the task's upper bound.
pub fn solve(task: &GroundedTask, config: &SearchConfig) -> SolveResult {
    let clock = Instant::now();
    let builder = TlgBuilder::new(task);
    let root = builder.build(&Residual::root(task));
    let mut stats = SearchStats::default();
    if let Consistency::Inconsistent(w) = &root.consistency {
        if config.landmarks {
            return SolveResult {
                outcome: Outcome::Unsolvable(Some(w.clone())),
                stats,
                root,
            };
        }
    }
    let search = Search {
        task,
        config,
        builder: builder.with_options(BuildOptions { probe: false }),
        waits: wait_points(task),
    };

    let mut nodes: Vec<Node> = Vec::new();
    let mut goals: Vec<TemporalPlan> = Vec::new();
    let mut heap: BinaryHeap<Reverse<Entry>> = BinaryHeap::new();
    let mut closed: HashSet<Key> = HashSet::new();
    let push = |heap: &mut BinaryHeap<Reverse<Entry>>, nodes: &mut Vec<Node>, goals: &mut Vec<TemporalPlan>, node: Node| {
        if node.candidate {
            let plan = node.plan(task);
            if ValidationReport::build(task, &plan).valid {
                let order = node.order();
                heap.push(Reverse(Entry {
                    bound: plan.makespan(task),
                    steps: order.len(),
                    plan: order,
                    open: false,
                    seq: goals.len(),
                }));
                goals.push(plan);
            }
        }
        let order = node.order();
        heap.push(Reverse(Entry {
            bound: node.bound(task),
            steps: order.len(),
            plan: order,
            open: true,
            seq: nodes.len(),
        }));
        nodes.push(node);
    };
    push(&mut heap, &mut nodes, &mut goals, root_node(task));

    while let Some(Reverse(entry)) = heap.pop() {
        if !entry.open {
            return SolveResult {
                outcome: Outcome::Solved(goals[entry.seq].clone()),
                stats,
                root,
            };
        }
        let node = std::mem::replace(
            &mut nodes[entry.seq],
            Node {
                key: Key {
                    t: Time::ZERO,
                    pre: PropSet::default(),
                    cur: PropSet::default(),
                    starts: Vec::new(),
                    running: Vec::new(),
                    monitors: MonitorSet::new(task),
                    happening: false,
                },
                steps: Vec::new(),
                candidate: false,
            },
        );
        if !closed.insert(node.key.clone()) {
            continue;
        }
        if config.max_nodes.is_some_and(|m| stats.expanded >= m) {
            return SolveResult {
                outcome: Outcome::ResourceLimit(Limit::Nodes),
                stats,
                root,
            };
        }
        if config.max_time.is_some_and(|m| clock.elapsed() >= m) {
            return SolveResult {
                outcome: Outcome::ResourceLimit(Limit::Time),
                stats,
                root,
            };
        }
        stats.expanded += 1;
        stats.frontier_bound = stats.frontier_bound.max(entry.bound);
        for child in search.expand(&node) {
            match child {
                Child::Keep(n) => {
                    if closed.contains(&n.key) {
                        continue;
                    }
                    stats.generated += 1;
                    push(&mut heap, &mut nodes, &mut goals, n);
                }
                Child::Pruned(p) => {
                    stats.generated += 1;
                    stats.pruned_total += 1;
                    if stats.pruned.len() < config.log_limit {
                        stats.pruned.push(p);
                    }
                }
                Child::Invalid => {}
            }
        }
    }
    SolveResult {
        outcome: Outcome::Unsolvable(None),
        stats,
        root,
    }
}
