//! Temporal relaxed planning graph: earliest achievement times under the
//! delete relaxation.
//!
//! An action may start at `max(t0, latest start/invariant condition, latest
//! end condition - dur)`. Its start adds appear at the start time and its end
//! adds at `start + dur`. Timed literals contribute their positive facts at
//! their times. The result is a lower bound on the time any plan can first
//! achieve each proposition.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::model::{ActionId, GroundedTask, PropId, PropSet};
use crate::time::Time;

/// Where relaxed exploration starts from.
#[derive(Clone, Debug)]
pub struct RelaxedStart {
    /// No action starts before this time.
    pub t0: Time,
    /// Facts available from the given time onwards.
    pub facts: Vec<(PropId, Time)>,
    /// Propositions that are never available, whatever achieves them.
    pub banned: PropSet,
    /// Actions excluded from the graph; empty means none.
    pub disabled: Vec<bool>,
}

impl RelaxedStart {
    /// The initial state at time 0 plus the positive timed literals.
    pub fn from_task(task: &GroundedTask) -> RelaxedStart {
        let mut facts: Vec<(PropId, Time)> = task.init.iter().map(|p| (p, Time::ZERO)).collect();
        for til in task.tils.iter().filter(|t| t.positive) {
            facts.push((til.prop, til.time.max(Time::ZERO)));
        }
        RelaxedStart {
            t0: Time::ZERO,
            facts,
            banned: task.empty_set(),
            disabled: Vec::new(),
        }
    }

    pub fn without(mut self, p: PropId) -> RelaxedStart {
        self.banned.insert(p);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemporalRPG {
    prop_levels: Vec<Option<Time>>,
    /// Earliest start with the start conditions met.
    start_levels: Vec<Option<Time>>,
    /// Earliest start with every requirement met, end conditions included.
    act_levels: Vec<Option<Time>>,
    /// Action that last lowered each proposition and whether it did so with
    /// a start effect; `None` for given facts.
    support: Vec<Option<(ActionId, bool)>>,
    pub horizon: Time,
}

fn improve(slot: &mut Option<Time>, t: Time) -> bool {
    match slot {
        Some(old) if *old <= t => false,
        _ => {
            *slot = Some(t);
            true
        }
    }
}

type Queue = BinaryHeap<Reverse<(Time, PropId)>>;

struct Levels {
    props: Vec<Option<Time>>,
    starts: Vec<Option<Time>>,
    acts: Vec<Option<Time>>,
    support: Vec<Option<(ActionId, bool)>>,
    queue: Queue,
}

impl Levels {
    fn offer(&mut self, start: &RelaxedStart, p: PropId, t: Time, by: Option<(ActionId, bool)>) {
        if !start.banned.contains(p) && improve(&mut self.props[p.index()], t) {
            self.support[p.index()] = by;
            self.queue.push(Reverse((t, p)));
        }
    }

    fn level(&self, p: PropId) -> Time {
        self.props[p.index()].expect("all conditions reached")
    }

    /// Start effects need the start conditions only; end effects need
    /// everything. An end condition can let the action start before it
    /// holds, so levels may improve after a fact was popped.
    fn fire(&mut self, task: &GroundedTask, start: &RelaxedStart, a: ActionId, all: bool) {
        let act = task.action(a);
        let st = act.s_cond.iter().map(|&p| self.level(p)).fold(start.t0, Time::max);
        if improve(&mut self.starts[a.index()], st) {
            for &p in &act.s_add {
                self.offer(start, p, st, Some((a, true)));
            }
        }
        if !all {
            return;
        }
        let external = |p: &&PropId| !act.s_add.contains(p);
        let st = act.inv.iter().filter(external).map(|&p| self.level(p)).fold(st, Time::max);
        let st = act.e_cond.iter().filter(external).map(|&p| self.level(p) - act.dur).fold(st, Time::max);
        if improve(&mut self.acts[a.index()], st) {
            for &p in &act.e_add {
                self.offer(start, p, st + act.dur, Some((a, false)));
            }
        }
    }
}

impl TemporalRPG {
    pub fn build_from(task: &GroundedTask, start: &RelaxedStart) -> TemporalRPG {
        let mut lv = Levels {
            props: vec![None; task.num_props()],
            starts: vec![None; task.actions.len()],
            acts: vec![None; task.actions.len()],
            support: vec![None; task.num_props()],
            queue: BinaryHeap::new(),
        };
        let mut missing: Vec<(u32, u32)> = task.action_ids().map(|a| task.condition_count(a)).collect();
        let disabled = |a: ActionId| start.disabled.get(a.index()).copied().unwrap_or(false);
        for &(p, t) in &start.facts {
            lv.offer(start, p, t.max(start.t0), None);
        }
        for a in task.action_ids() {
            if missing[a.index()].0 == 0 && !disabled(a) {
                lv.fire(task, start, a, missing[a.index()].1 == 0);
            }
        }
        let mut seen = vec![false; task.num_props()];
        while let Some(Reverse((t, p))) = lv.queue.pop() {
            if lv.props[p.index()] != Some(t) {
                continue;
            }
            let first = !std::mem::replace(&mut seen[p.index()], true);
            for &a in task.consumers(p) {
                let m = &mut missing[a.index()];
                if first {
                    m.1 -= 1;
                    if task.action(a).s_cond.contains(&p) {
                        m.0 -= 1;
                    }
                }
                if m.0 == 0 && !disabled(a) {
                    let all = m.1 == 0;
                    lv.fire(task, start, a, all);
                }
            }
        }
        TemporalRPG {
            prop_levels: lv.props,
            start_levels: lv.starts,
            act_levels: lv.acts,
            support: lv.support,
            horizon: task.upper_bound,
        }
    }

    /// Earliest time of `p`; `None` means unreachable (+∞).
    pub fn earliest_time(&self, p: PropId) -> Option<Time> {
        self.prop_levels[p.index()]
    }

    /// Earliest start of `a` counting only its start conditions.
    pub fn earliest_start(&self, a: ActionId) -> Option<Time> {
        self.start_levels[a.index()]
    }

    /// Propositions used by the recorded derivation of `p`, including `p`.
    /// `None` if the derivation is cyclic or `p` is unreachable.
    pub fn support_closure(&self, task: &GroundedTask, p: PropId) -> Option<Vec<PropId>> {
        self.reachable(p).then_some(())?;
        // 0 unvisited, 1 on the stack, 2 done.
        let mut mark = vec![0u8; self.prop_levels.len()];
        let mut out = Vec::new();
        let mut stack = vec![(p, false)];
        while let Some((q, leaving)) = stack.pop() {
            if leaving {
                mark[q.index()] = 2;
                continue;
            }
            match mark[q.index()] {
                1 => return None,
                2 => continue,
                _ => {}
            }
            mark[q.index()] = 1;
            out.push(q);
            stack.push((q, true));
            if let Some((a, at_start)) = self.support[q.index()] {
                let act = task.action(a);
                let reqs: Vec<PropId> = if at_start { act.s_cond.clone() } else { act.requirements().collect() };
                for c in reqs {
                    match mark[c.index()] {
                        1 => return None,
                        2 => {}
                        _ => stack.push((c, false)),
                    }
                }
            }
        }
        Some(out)
    }

    pub fn reachable(&self, p: PropId) -> bool {
        self.prop_levels[p.index()].is_some()
    }

    /// Earliest end of `a` with all its conditions met.
    pub fn earliest_end(&self, task: &GroundedTask, a: ActionId) -> Option<Time> {
        self.act_levels[a.index()].map(|t| t + task.action(a).dur)
    }
}

/// Builds the graph from the task's initial state.
pub fn build_trpg(task: &GroundedTask) -> TemporalRPG {
    TemporalRPG::build_from(task, &RelaxedStart::from_task(task))
}

pub fn earliest_time(trpg: &TemporalRPG, p: PropId) -> Option<Time> {
    trpg.earliest_time(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActionSpec, Proposition, TaskSpec};

    fn p(s: &str) -> Proposition {
        Proposition::parse(s).unwrap()
    }

    fn chain() -> GroundedTask {
        GroundedTask::new(TaskSpec {
            actions: vec![
                ActionSpec {
                    name: "a".into(),
                    dur: Time::from_int(3),
                    s_cond: vec![p("(x)")],
                    s_add: vec![p("(s)")],
                    e_add: vec![p("(y)")],
                    ..Default::default()
                },
                ActionSpec {
                    name: "b".into(),
                    dur: Time::from_int(5),
                    e_cond: vec![p("(y)")],
                    e_add: vec![p("(z)")],
                    ..Default::default()
                },
                ActionSpec {
                    name: "c".into(),
                    dur: Time::from_int(1),
                    s_cond: vec![p("(never)")],
                    e_add: vec![p("(w)")],
                    ..Default::default()
                },
            ],
            init: vec![p("(x)")],
            tils: vec![(Time::from_int(7), true, p("(late)"))],
            upper_bound: Some(Time::from_int(10)),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn earliest_times() {
        let task = chain();
        let g = build_trpg(&task);
        let t = |s: &str| g.earliest_time(task.lookup(s).unwrap());
        assert_eq!(t("(x)"), Some(Time::ZERO));
        assert_eq!(t("(s)"), Some(Time::ZERO));
        assert_eq!(t("(y)"), Some(Time::from_int(3)));
        // b may start before y holds, since y is only needed at its end.
        assert_eq!(t("(z)"), Some(Time::from_int(5)));
        assert_eq!(t("(w)"), None);
        assert_eq!(t("(never)"), None);
        assert_eq!(t("(late)"), Some(Time::from_int(7)));
    }

    #[test]
    fn banning_a_fact_cuts_its_consumers() {
        let task = chain();
        let y = task.lookup("(y)").unwrap();
        let g = TemporalRPG::build_from(&task, &RelaxedStart::from_task(&task).without(y));
        assert_eq!(g.earliest_time(y), None);
        assert_eq!(g.earliest_time(task.lookup("(z)").unwrap()), None);
    }

    #[test]
    fn later_start_clamps_everything() {
        let task = chain();
        let mut start = RelaxedStart::from_task(&task);
        start.t0 = Time::from_int(4);
        let g = TemporalRPG::build_from(&task, &start);
        assert_eq!(g.earliest_time(task.lookup("(y)").unwrap()), Some(Time::from_int(7)));
        assert_eq!(g.earliest_time(task.lookup("(x)").unwrap()), Some(Time::from_int(4)));
    }
}
