//! Causal landmarks and their orderings, found by relaxed ban tests.
//!
//! A proposition `p` is a landmark when removing it from the relaxed task
//! makes some known landmark unreachable, or reachable only after its latest
//! admissible generation time. The same test orders `p` before the affected
//! landmark. Iterating with tightened bounds is what forces route landmarks:
//! with a deadline of 25 the detour through D1 arrives too late, so D3 has to
//! be visited.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::model::{ActionId, GroundedTask, PropId, PropSet};
use crate::time::Time;
use crate::trajectory::TrajectoryConstraint;
use crate::trpg::{RelaxedStart, TemporalRPG};

/// What remains to be done from some point of a partial plan: the state at
/// `origin`, facts that will appear later, and the obligations still open.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Residual {
    pub origin: Time,
    pub state: PropSet,
    /// Positive facts that appear at a later time whatever the plan does.
    pub timed: Vec<(Time, PropId)>,
    /// Propositions that must be achieved at some point from `origin` on.
    pub targets: Vec<PropId>,
    /// Propositions that must be achieved no later than the given time.
    pub deadlines: Vec<(PropId, Time)>,
    /// Constraints whose remaining obligations the graph should reflect.
    pub constraints: Vec<TrajectoryConstraint>,
    pub horizon: Time,
}

impl Residual {
    /// The whole task, seen from time 0.
    pub fn root(task: &GroundedTask) -> Residual {
        let mut state = task.init.clone();
        let mut timed = Vec::new();
        for til in &task.tils {
            if til.time <= Time::ZERO {
                if til.positive {
                    state.insert(til.prop);
                } else {
                    state.remove(til.prop);
                }
            } else if til.positive {
                timed.push((til.time, til.prop));
            }
        }
        Residual {
            origin: Time::ZERO,
            state,
            timed,
            targets: task.goals.clone(),
            deadlines: task.deadlines.iter().map(|d| (d.prop, d.time)).collect(),
            constraints: task.constraints.clone(),
            horizon: task.upper_bound,
        }
    }

    pub fn relaxed_start(&self, task: &GroundedTask) -> RelaxedStart {
        let mut facts: Vec<(PropId, Time)> = self.state.iter().map(|p| (p, self.origin)).collect();
        facts.extend(self.timed.iter().map(|&(t, p)| (p, t)));
        RelaxedStart {
            t0: self.origin,
            facts,
            banned: task.empty_set(),
            disabled: Vec::new(),
        }
    }

    /// Latest admissible generation time of `p` from deadlines alone.
    pub fn deadline_of(&self, p: PropId) -> Option<Time> {
        self.deadlines.iter().filter(|d| d.0 == p).map(|d| d.1).min()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingKind {
    Necessary,
    Dependency,
}

/// `from` is generated at least `dist` before `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ordering {
    pub from: PropId,
    pub to: PropId,
    pub kind: OrderingKind,
    pub dist: Time,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LandmarkSet {
    /// Sorted, without duplicates.
    pub landmarks: Vec<PropId>,
    pub orderings: Vec<Ordering>,
}

impl LandmarkSet {
    pub fn contains(&self, p: PropId) -> bool {
        self.landmarks.binary_search(&p).is_ok()
    }

    pub fn insert(&mut self, p: PropId) -> bool {
        match self.landmarks.binary_search(&p) {
            Ok(_) => false,
            Err(i) => {
                self.landmarks.insert(i, p);
                true
            }
        }
    }

    pub fn ordering(&self, from: PropId, to: PropId) -> Option<&Ordering> {
        self.orderings.iter().find(|o| o.from == from && o.to == to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LandmarkError {
    #[error("goal {0} is unreachable")]
    GoalUnreachable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{action} does not link {from} to {to}")]
pub struct NoCausalWitness {
    pub action: String,
    pub from: String,
    pub to: String,
}

/// Least separation between the generation of `from` and of `to` when `a`
/// needs `from` and produces `to`.
///
/// Start or invariant condition to end effect: `dur`. Start or invariant
/// condition to start effect: 0. End condition to end effect: `epsilon`. End
/// condition to start effect: `-dur`. With several matching cases the
/// largest applies.
pub fn compute_distance(task: &GroundedTask, a: ActionId, from: PropId, to: PropId) -> Result<Time, NoCausalWitness> {
    let act = task.action(a);
    let at_start = act.s_cond.contains(&from) || act.inv.contains(&from);
    let at_end = act.e_cond.contains(&from);
    let rules: [(bool, Time); 2] = if act.s_add.contains(&to) {
        [(at_start, Time::ZERO), (at_end, -act.dur)]
    } else if act.e_add.contains(&to) {
        [(at_start, act.dur), (at_end, task.epsilon)]
    } else {
        [(false, Time::ZERO); 2]
    };
    rules
        .iter()
        .filter(|r| r.0)
        .map(|r| r.1)
        .max()
        .ok_or_else(|| NoCausalWitness {
            action: act.label(),
            from: task.show(from),
            to: task.show(to),
        })
}

/// Bound used to place "long available" facts far in the past.
fn far_past(task: &GroundedTask, start: &RelaxedStart) -> Time {
    let mut big = task.actions.iter().map(|a| a.dur).fold(Time::from_int(1), |a, b| a + b);
    for &(_, t) in &start.facts {
        big = big + t.max(-t);
    }
    big + task.upper_bound.max(-task.upper_bound) + start.t0.max(-start.t0)
}

/// Ban tests and distance computations over one relaxed start.
pub struct LandmarkEngine<'a> {
    task: &'a GroundedTask,
    start: RelaxedStart,
    base: TemporalRPG,
    banned: HashMap<PropId, TemporalRPG>,
    chains: HashMap<(PropId, PropId), Time>,
    pub set: LandmarkSet,
    /// Raw ordering pairs, before classification.
    pairs: BTreeSet<(PropId, PropId)>,
}

impl<'a> LandmarkEngine<'a> {
    pub fn new(task: &'a GroundedTask, start: RelaxedStart) -> LandmarkEngine<'a> {
        let base = TemporalRPG::build_from(task, &start);
        LandmarkEngine {
            task,
            start,
            base,
            banned: HashMap::new(),
            chains: HashMap::new(),
            set: LandmarkSet::default(),
            pairs: BTreeSet::new(),
        }
    }

    pub fn base(&self) -> &TemporalRPG {
        &self.base
    }

    fn in_state(&self, p: PropId) -> bool {
        self.start.facts.iter().any(|&(q, t)| q == p && t <= self.start.t0)
    }

    fn banned_graph(&mut self, p: PropId) -> &TemporalRPG {
        let (task, start) = (self.task, &self.start);
        self.banned
            .entry(p)
            .or_insert_with(|| TemporalRPG::build_from(task, &start.clone().without(p)))
    }

    /// One round of ban tests against the current landmarks. `max_g` gives
    /// the latest admissible generation time of each landmark. Returns true
    /// if a landmark or an ordering was added.
    pub fn grow(&mut self, max_g: &dyn Fn(PropId) -> Option<Time>) -> bool {
        let targets: Vec<PropId> = self.set.landmarks.iter().copied().filter(|&l| !self.in_state(l)).collect();
        let candidates: Vec<PropId> = (0..self.task.num_props() as u32)
            .map(PropId)
            .filter(|&p| self.base.reachable(p) && !self.task.consumers(p).is_empty())
            .collect();
        // Banning a fact outside the derivation of every target leaves the
        // targets where they are, so only those facts need testing.
        let mut relevant = self.task.empty_set();
        let mut all = false;
        for &l in &targets {
            let late = match (self.base.earliest_time(l), max_g(l)) {
                (Some(t), Some(bound)) => t > bound,
                _ => false,
            };
            match self.base.support_closure(self.task, l) {
                Some(ps) if !late => ps.into_iter().for_each(|p| {
                    relevant.insert(p);
                }),
                _ => all = true,
            }
        }
        let candidates: Vec<PropId> = candidates.into_iter().filter(|&p| all || relevant.contains(p)).collect();
        let mut changed = false;
        for p in candidates {
            let g = self.banned_graph(p);
            let affected: Vec<PropId> = targets
                .iter()
                .copied()
                .filter(|&l| l != p)
                .filter(|&l| match (g.earliest_time(l), max_g(l)) {
                    (None, _) => true,
                    (Some(t), Some(bound)) => t > bound,
                    (Some(_), None) => false,
                })
                .collect();
            if affected.is_empty() {
                continue;
            }
            changed |= self.set.insert(p);
            for l in affected {
                changed |= self.pairs.insert((p, l));
            }
        }
        changed
    }

    /// Relaxed distance from `from` to `to` along chains of actions: every
    /// fact reachable without `from` is available long before, `from`
    /// appears at 0, and the result is when `to` appears. Zero if `to` does
    /// not depend on `from` at all.
    pub fn chain_distance(&mut self, from: PropId, to: PropId) -> Time {
        if let Some(&d) = self.chains.get(&(from, to)) {
            return d;
        }
        let task = self.task;
        let past = -far_past(task, &self.start);
        let without = self.banned_graph(from);
        let d = if without.reachable(to) {
            Time::ZERO
        } else {
            let mut facts: Vec<(PropId, Time)> = (0..task.num_props() as u32)
                .map(PropId)
                .filter(|&q| without.reachable(q))
                .map(|q| (q, past))
                .collect();
            facts.push((from, Time::ZERO));
            let g = TemporalRPG::build_from(
                self.task,
                &RelaxedStart {
                    t0: past,
                    facts,
                    banned: self.task.empty_set(),
                    disabled: Vec::new(),
                },
            );
            g.earliest_time(to).unwrap_or(Time::ZERO).max(Time::ZERO)
        };
        self.chains.insert((from, to), d);
        d
    }

    /// Achievers of `l` that could produce it no later than `bound`.
    pub fn feasible_achievers(&self, l: PropId, bound: Option<Time>) -> Vec<ActionId> {
        self.task
            .achievers(l)
            .iter()
            .copied()
            .filter(|&a| {
                let at = if self.task.action(a).s_add.contains(&l) {
                    self.base.earliest_start(a)
                } else {
                    self.base.earliest_end(self.task, a)
                };
                let Some(at) = at else { return false };
                bound.is_none_or(|b| at <= b)
            })
            .collect()
    }

    /// Classifies every ordering found so far under the given bounds.
    pub fn orderings(&mut self, max_g: &dyn Fn(PropId) -> Option<Time>) -> Vec<Ordering> {
        let pairs: Vec<(PropId, PropId)> = self.pairs.iter().copied().collect();
        let mut out = Vec::with_capacity(pairs.len());
        for (from, to) in pairs {
            let chain = self.chain_distance(from, to);
            let feasible = self.feasible_achievers(to, max_g(to));
            let necessary = !feasible.is_empty() && feasible.iter().all(|&a| self.task.action(a).requirements().any(|c| c == from));
            let (kind, dist) = if necessary {
                let single = feasible
                    .iter()
                    .filter_map(|&a| compute_distance(self.task, a, from, to).ok())
                    .min()
                    .unwrap_or(Time::ZERO);
                (OrderingKind::Necessary, chain.max(single))
            } else {
                (OrderingKind::Dependency, chain)
            };
            out.push(Ordering { from, to, kind, dist });
        }
        out
    }

    /// Adds `p` as a landmark, failing if it cannot be reached at all.
    pub fn require(&mut self, p: PropId) -> Result<bool, LandmarkError> {
        if !self.base.reachable(p) {
            return Err(LandmarkError::GoalUnreachable(self.task.show(p)));
        }
        Ok(self.set.insert(p))
    }
}

/// Landmarks of the delete relaxation with their orderings, ignoring time
/// bounds: every initial fact and goal, plus everything without which some
/// landmark becomes unreachable.
pub fn extract_causal_landmarks(task: &GroundedTask) -> Result<LandmarkSet, LandmarkError> {
    let res = Residual::root(task);
    let mut engine = LandmarkEngine::new(task, res.relaxed_start(task));
    for p in res.state.iter() {
        engine.set.insert(p);
    }
    for &g in &task.goals {
        engine.require(g)?;
    }
    let unbounded = |_: PropId| None;
    while engine.grow(&unbounded) {}
    let orderings = engine.orderings(&unbounded);
    Ok(LandmarkSet {
        landmarks: engine.set.landmarks.clone(),
        orderings,
    })
}

/// Landmarks a trajectory constraint creates outright, and the pair
/// `(l_i, l_j)` for operators where `l_j` is a landmark once `l_i` is.
pub fn constraint_landmarks(c: &TrajectoryConstraint) -> (Vec<PropId>, Option<(PropId, PropId)>) {
    use crate::trajectory::Modality::*;
    match c.op {
        AtEnd | Always | Sometime | Within(_) | HoldDuring(..) | HoldAfter(_) | Persistence(_) => (vec![c.phi], None),
        AtMostOnce | WithinFromEnd(_) => (vec![], None),
        AlwaysWithin(_) | SometimeAfter | SometimeBefore => (vec![], c.psi.map(|psi| (c.phi, psi))),
        AllenOverlaps | AllenDuring => (std::iter::once(c.phi).chain(c.psi).collect(), None),
    }
}

/// Adds the landmarks that the task's trajectory constraints create, then
/// the route landmarks forced by deadlines: a proposition becomes a
/// landmark when every way around it misses some landmark's latest
/// generation time after propagation.
pub fn derive_temporal_landmarks(task: &GroundedTask, lms: &LandmarkSet) -> LandmarkSet {
    let builder = crate::tlg::TlgBuilder::new(task);
    let mut res = Residual::root(task);
    res.targets.extend(lms.landmarks.iter().copied().filter(|&p| !res.state.contains(p)));
    let out = builder.build(&res);
    let mut set = out.landmarks;
    for o in &lms.orderings {
        if set.ordering(o.from, o.to).is_none() {
            set.orderings.push(*o);
        }
    }
    let mut uniq: BTreeMap<(PropId, PropId), Ordering> = BTreeMap::new();
    for o in set.orderings {
        uniq.entry((o.from, o.to)).or_insert(o);
    }
    set.orderings = uniq.into_values().collect();
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActionSpec, Proposition, TaskSpec};

    fn p(s: &str) -> Proposition {
        Proposition::parse(s).unwrap()
    }

    /// Two roads from a to c: a fast one through b and a slow direct one.
    fn roads() -> GroundedTask {
        let mv = |from: &str, to: &str, d: i64| ActionSpec {
            name: "go".into(),
            params: vec![from.into(), to.into()],
            dur: Time::from_int(d),
            s_cond: vec![p(&format!("(at {from})"))],
            s_del: vec![p(&format!("(at {from})"))],
            e_add: vec![p(&format!("(at {to})"))],
            ..Default::default()
        };
        GroundedTask::new(TaskSpec {
            actions: vec![mv("a", "b", 2), mv("b", "c", 2), mv("a", "c", 9)],
            init: vec![p("(at a)")],
            goals: vec![p("(at c)")],
            deadlines: vec![(p("(at c)"), Time::from_int(5))],
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn distance_rules() {
        let task = roads();
        let ab = task.find_action("go", &["a", "b"]).unwrap();
        let (a, b) = (task.lookup("(at a)").unwrap(), task.lookup("(at b)").unwrap());
        assert_eq!(compute_distance(&task, ab, a, b), Ok(Time::from_int(2)));
        assert!(compute_distance(&task, ab, b, a).is_err());
    }

    #[test]
    fn detour_is_not_a_causal_landmark() {
        let task = roads();
        let lms = extract_causal_landmarks(&task).unwrap();
        let id = |s: &str| task.lookup(s).unwrap();
        assert!(lms.contains(id("(at a)")) && lms.contains(id("(at c)")));
        assert!(!lms.contains(id("(at b)")));
        let o = lms.ordering(id("(at a)"), id("(at c)")).unwrap();
        assert_eq!(o.dist, Time::from_int(4));
    }

    #[test]
    fn deadline_forces_the_fast_road() {
        let task = roads();
        let lms = derive_temporal_landmarks(&task, &extract_causal_landmarks(&task).unwrap());
        let b = task.lookup("(at b)").unwrap();
        assert!(lms.contains(b));
        let o = lms.ordering(b, task.lookup("(at c)").unwrap()).unwrap();
        assert_eq!(o.kind, OrderingKind::Necessary);
        assert_eq!(o.dist, Time::from_int(2));
    }

    #[test]
    fn unreachable_goal_is_reported() {
        let mut spec = TaskSpec {
            goals: vec![p("(at z)")],
            init: vec![p("(at a)")],
            upper_bound: Some(Time::from_int(3)),
            ..Default::default()
        };
        spec.actions.push(ActionSpec {
            name: "noop".into(),
            dur: Time::from_int(1),
            s_cond: vec![p("(at a)")],
            ..Default::default()
        });
        let task = GroundedTask::new(spec).unwrap();
        assert_eq!(
            extract_causal_landmarks(&task),
            Err(LandmarkError::GoalUnreachable("(at z)".into()))
        );
    }
}
