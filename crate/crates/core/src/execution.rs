//! Plan execution: turns a temporal plan into the sequence of happenings it
//! produces, checking conditions along the way.
//!
//! At each happening time the events are processed in two phases. First the
//! end points of actions finishing at that time and the timed initial
//! literals; then the start points of actions beginning at that time. Within a
//! phase all conditions are checked against the state before the phase,
//! deletes are applied before adds, and no action may delete a condition or
//! an add of another action in the same phase.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::model::{ActionId, GroundedTask, PropId, PropSet, TemporalPlan};
use crate::time::Time;

/// One `(S_i, t_i)` pair of a trajectory.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Happening {
    pub time: Time,
    pub state: PropSet,
}

/// The sequence `<(S_0, 0), (S_1, t_1), ..., (S_n, t_n)>` with strictly
/// increasing times.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StateTrajectory {
    pub happenings: Vec<Happening>,
}

impl StateTrajectory {
    pub fn new(happenings: Vec<Happening>) -> StateTrajectory {
        debug_assert!(happenings.windows(2).all(|w| w[0].time < w[1].time));
        StateTrajectory { happenings }
    }

    pub fn len(&self) -> usize {
        self.happenings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.happenings.is_empty()
    }

    pub fn final_state(&self) -> &PropSet {
        &self.happenings.last().expect("non-empty trajectory").state
    }

    pub fn end_time(&self) -> Time {
        self.happenings.last().map(|h| h.time).unwrap_or(Time::ZERO)
    }

    pub fn holds(&self, i: usize, p: PropId) -> bool {
        self.happenings[i].state.contains(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConditionKind {
    Start,
    End,
    Invariant,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecutionError {
    #[error("{kind:?} condition {prop} of {action} does not hold at {time}")]
    ConditionViolation {
        action: String,
        time: Time,
        prop: String,
        kind: ConditionKind,
    },
    #[error("{first} and {second} interfere on {prop} at {time}")]
    MutexOverlap {
        first: String,
        second: String,
        prop: String,
        time: Time,
    },
}

/// One endpoint event of a phase.
struct Event<'a> {
    label: String,
    conds: &'a [PropId],
    adds: Vec<PropId>,
    dels: Vec<PropId>,
}

fn run_phase(task: &GroundedTask, time: Time, state: &mut PropSet, events: &[Event<'_>], kind: ConditionKind) -> Result<(), ExecutionError> {
    for e in events {
        if let Some(&p) = e.conds.iter().find(|&&p| !state.contains(p)) {
            return Err(ExecutionError::ConditionViolation {
                action: e.label.clone(),
                time,
                prop: task.show(p),
                kind,
            });
        }
    }
    for (i, a) in events.iter().enumerate() {
        for (j, b) in events.iter().enumerate() {
            if i == j {
                continue;
            }
            let clash = a.conds.iter().chain(&a.adds).find(|p| b.dels.contains(p));
            if let Some(&p) = clash {
                return Err(ExecutionError::MutexOverlap {
                    first: a.label.clone(),
                    second: b.label.clone(),
                    prop: task.show(p),
                    time,
                });
            }
        }
    }
    for e in events {
        for &p in &e.dels {
            state.remove(p);
        }
    }
    for e in events {
        for &p in &e.adds {
            state.insert(p);
        }
    }
    Ok(())
}

/// Executes `plan` from the task's initial state.
///
/// The first happening is always at time 0 and already includes every event
/// scheduled at time 0.
pub fn reconstruct_trajectory(task: &GroundedTask, plan: &TemporalPlan) -> Result<StateTrajectory, ExecutionError> {
    let steps = plan.steps();
    let mut times: BTreeSet<Time> = BTreeSet::new();
    times.insert(Time::ZERO);
    for s in steps {
        times.insert(s.start);
        times.insert(s.start + task.action(s.action).dur);
    }
    for til in &task.tils {
        times.insert(til.time);
    }

    let mut state = task.init.clone();
    // TILs strictly before time 0 are folded into the initial state.
    for til in task.tils.iter().filter(|t| t.time < Time::ZERO) {
        if til.positive {
            state.insert(til.prop);
        } else {
            state.remove(til.prop);
        }
    }

    let mut happenings = Vec::with_capacity(times.len());
    for &time in times.iter().filter(|t| **t >= Time::ZERO) {
        let mut ends: Vec<Event> = Vec::new();
        for (i, s) in steps.iter().enumerate() {
            let a = task.action(s.action);
            if s.start + a.dur == time {
                ends.push(Event {
                    label: step_label(task, i, s.action, s.start),
                    conds: &a.e_cond,
                    adds: a.e_add.clone(),
                    dels: a.e_del.clone(),
                });
            }
        }
        for til in task.tils.iter().filter(|t| t.time == time) {
            ends.push(Event {
                label: format!("til {} {}{}", time, if til.positive { "" } else { "not " }, task.show(til.prop)),
                conds: &[],
                adds: if til.positive { vec![til.prop] } else { vec![] },
                dels: if til.positive { vec![] } else { vec![til.prop] },
            });
        }
        run_phase(task, time, &mut state, &ends, ConditionKind::End)?;

        let starts: Vec<Event> = steps
            .iter()
            .enumerate()
            .filter(|(_, s)| s.start == time)
            .map(|(i, s)| {
                let a = task.action(s.action);
                Event {
                    label: step_label(task, i, s.action, s.start),
                    conds: &a.s_cond,
                    adds: a.s_add.clone(),
                    dels: a.s_del.clone(),
                }
            })
            .collect();
        run_phase(task, time, &mut state, &starts, ConditionKind::Start)?;

        for (i, s) in steps.iter().enumerate() {
            let a = task.action(s.action);
            if s.start <= time && time < s.start + a.dur {
                if let Some(&p) = a.inv.iter().find(|&&p| !state.contains(p)) {
                    return Err(ExecutionError::ConditionViolation {
                        action: step_label(task, i, s.action, s.start),
                        time,
                        prop: task.show(p),
                        kind: ConditionKind::Invariant,
                    });
                }
            }
        }
        happenings.push(Happening {
            time,
            state: state.clone(),
        });
    }
    Ok(StateTrajectory::new(happenings))
}

/// End phase at `time`: actions of `ending` finish and the timed literals
/// at `time` fire.
pub fn apply_end_phase(task: &GroundedTask, time: Time, state: &mut PropSet, ending: &[(ActionId, Time)]) -> Result<(), ExecutionError> {
    let mut events: Vec<Event> = ending
        .iter()
        .map(|&(id, start)| {
            let a = task.action(id);
            Event {
                label: step_label(task, 0, id, start),
                conds: &a.e_cond,
                adds: a.e_add.clone(),
                dels: a.e_del.clone(),
            }
        })
        .collect();
    for til in task.tils.iter().filter(|t| t.time == time) {
        events.push(Event {
            label: format!("til {} {}{}", time, if til.positive { "" } else { "not " }, task.show(til.prop)),
            conds: &[],
            adds: if til.positive { vec![til.prop] } else { vec![] },
            dels: if til.positive { vec![] } else { vec![til.prop] },
        });
    }
    run_phase(task, time, state, &events, ConditionKind::End)
}

/// Start phase at `time` for the actions of `starting`.
pub fn apply_start_phase(task: &GroundedTask, time: Time, state: &mut PropSet, starting: &[ActionId]) -> Result<(), ExecutionError> {
    let events: Vec<Event> = starting
        .iter()
        .map(|&id| {
            let a = task.action(id);
            Event {
                label: step_label(task, 0, id, time),
                conds: &a.s_cond,
                adds: a.s_add.clone(),
                dels: a.s_del.clone(),
            }
        })
        .collect();
    run_phase(task, time, state, &events, ConditionKind::Start)
}

/// First invariant of an action running at `time` that `state` violates.
pub fn check_invariants(task: &GroundedTask, time: Time, state: &PropSet, running: &[(ActionId, Time)]) -> Result<(), ExecutionError> {
    for &(id, start) in running {
        let a = task.action(id);
        if start <= time && time < start + a.dur {
            if let Some(&p) = a.inv.iter().find(|&&p| !state.contains(p)) {
                return Err(ExecutionError::ConditionViolation {
                    action: step_label(task, 0, id, start),
                    time,
                    prop: task.show(p),
                    kind: ConditionKind::Invariant,
                });
            }
        }
    }
    Ok(())
}

fn step_label(task: &GroundedTask, _index: usize, action: ActionId, start: Time) -> String {
    format!("{}@{}", task.action(action).label(), start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActionSpec, PlanStep, Proposition, TaskSpec};

    fn p(s: &str) -> Proposition {
        Proposition::parse(s).unwrap()
    }

    fn shuttle() -> GroundedTask {
        let mv = |from: &str, to: &str, d: i64| ActionSpec {
            name: "move".into(),
            params: vec![from.into(), to.into()],
            dur: Time::from_int(d),
            s_cond: vec![p(&format!("(at {from})"))],
            s_del: vec![p(&format!("(at {from})"))],
            e_add: vec![p(&format!("(at {to})"))],
            ..Default::default()
        };
        GroundedTask::new(TaskSpec {
            actions: vec![
                mv("a", "b", 4),
                mv("b", "c", 2),
                ActionSpec {
                    name: "stay".into(),
                    params: vec!["b".into()],
                    dur: Time::from_int(3),
                    inv: vec![p("(at b)")],
                    e_add: vec![p("(rested)")],
                    ..Default::default()
                },
            ],
            init: vec![p("(at a)")],
            goals: vec![p("(at c)")],
            upper_bound: Some(Time::from_int(20)),
            ..Default::default()
        })
        .unwrap()
    }

    fn plan(task: &GroundedTask, steps: &[(&str, &[&str], i64)]) -> TemporalPlan {
        TemporalPlan::new(
            task,
            steps
                .iter()
                .map(|(n, a, t)| PlanStep {
                    action: task.find_action(n, a).unwrap(),
                    start: Time::from_int(*t),
                })
                .collect(),
        )
    }

    #[test]
    fn empty_plan_gives_initial_happening() {
        let task = shuttle();
        let traj = reconstruct_trajectory(&task, &TemporalPlan::default()).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.happenings[0].time, Time::ZERO);
        assert_eq!(traj.happenings[0].state, task.init);
    }

    #[test]
    fn back_to_back_actions_share_a_happening() {
        let task = shuttle();
        let pl = plan(&task, &[("move", &["a", "b"], 0), ("move", &["b", "c"], 4)]);
        let traj = reconstruct_trajectory(&task, &pl).unwrap();
        let times: Vec<Time> = traj.happenings.iter().map(|h| h.time).collect();
        assert_eq!(times, vec![Time::ZERO, Time::from_int(4), Time::from_int(6)]);
        assert!(traj.happenings[0].state.is_empty());
        assert!(traj.holds(2, task.lookup("(at c)").unwrap()));
    }

    #[test]
    fn start_condition_violation_is_reported() {
        let task = shuttle();
        let pl = plan(&task, &[("move", &["b", "c"], 0)]);
        let err = reconstruct_trajectory(&task, &pl).unwrap_err();
        assert!(matches!(err, ExecutionError::ConditionViolation { kind: ConditionKind::Start, .. }));
    }

    #[test]
    fn invariant_checked_inside_execution_window() {
        let task = shuttle();
        let pl = plan(&task, &[("move", &["a", "b"], 0), ("stay", &["b"], 4), ("move", &["b", "c"], 5)]);
        let err = reconstruct_trajectory(&task, &pl).unwrap_err();
        assert!(matches!(err, ExecutionError::ConditionViolation { kind: ConditionKind::Invariant, .. }));
        let ok = plan(&task, &[("move", &["a", "b"], 0), ("stay", &["b"], 4), ("move", &["b", "c"], 7)]);
        assert!(reconstruct_trajectory(&task, &ok).is_ok());
    }

    #[test]
    fn simultaneous_self_overlap_interferes() {
        let task = shuttle();
        let pl = plan(&task, &[("move", &["a", "b"], 0), ("move", &["a", "b"], 0)]);
        assert!(matches!(reconstruct_trajectory(&task, &pl), Err(ExecutionError::MutexOverlap { .. })));
    }

    #[test]
    fn timed_literals_are_happenings() {
        let task = GroundedTask::new(TaskSpec {
            tils: vec![(Time::from_int(5), true, p("(open)")), (Time::from_int(9), false, p("(open)"))],
            upper_bound: Some(Time::from_int(10)),
            ..Default::default()
        })
        .unwrap();
        let traj = reconstruct_trajectory(&task, &TemporalPlan::default()).unwrap();
        assert_eq!(traj.len(), 3);
        let open = task.lookup("(open)").unwrap();
        assert!(!traj.holds(0, open) && traj.holds(1, open) && !traj.holds(2, open));
    }
}
