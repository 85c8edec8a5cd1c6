//! Exhaustive plan enumeration for tiny tasks.
//!
//! Actions may start at time 0, at the end of an action already in the plan,
//! at a timed literal, or at a hold-during window bound. Every set of starts
//! over those time points is executed with its own simulator and checked
//! against the goals and the literal constraint formulas.

use std::collections::BTreeSet;

use tlplan::model::{ActionId, PlanStep, PropSet};
use tlplan::trajectory::Modality;
use tlplan::{GroundedTask, PropId, Time};

use super::oracle::{literal_holds, Traj};

pub struct Brute {
    /// Least makespan of a valid plan and one such plan.
    pub best: Option<(Time, Vec<PlanStep>)>,
    /// Search nodes visited; enumeration stops at the cap.
    pub visited: usize,
    pub exhausted: bool,
}

struct Ctx<'a> {
    task: &'a GroundedTask,
    waits: Vec<Time>,
    cap: usize,
    visited: usize,
    best: Option<(Time, Vec<PlanStep>)>,
}

/// One event of a phase: conditions, adds, deletes.
type Ev<'a> = (&'a [PropId], &'a [PropId], &'a [PropId]);

fn phase(state: &mut PropSet, events: &[Ev]) -> bool {
    if events.iter().any(|(c, _, _)| c.iter().any(|&p| !state.contains(p))) {
        return false;
    }
    for (i, a) in events.iter().enumerate() {
        for (j, b) in events.iter().enumerate() {
            if i != j && a.0.iter().chain(a.1).any(|p| b.2.contains(p)) {
                return false;
            }
        }
    }
    for e in events {
        e.2.iter().for_each(|&p| {
            state.remove(p);
        });
    }
    for e in events {
        e.1.iter().for_each(|&p| {
            state.insert(p);
        });
    }
    true
}

impl Ctx<'_> {
    fn end_of(&self, a: ActionId, start: Time) -> Time {
        start + self.task.action(a).dur
    }

    fn finish(&mut self, steps: &[PlanStep], times: &[Time], states: &[PropSet]) {
        let task = self.task;
        let last = states.last().unwrap();
        if !task.goals.iter().all(|&g| last.contains(g)) {
            return;
        }
        let sat = |i: usize, p: PropId| states[i].contains(p);
        let tr = Traj { times, sat: &sat };
        if !task.constraints.iter().all(|c| literal_holds(&tr, c)) {
            return;
        }
        let makespan = steps.iter().map(|s| self.end_of(s.action, s.start)).fold(Time::ZERO, Time::max);
        if self.best.as_ref().is_none_or(|(m, _)| makespan < *m) {
            self.best = Some((makespan, steps.to_vec()));
        }
    }

    /// Visits time point `t` with `state` holding before its end phase.
    fn visit(&mut self, t: Time, state: &PropSet, steps: &mut Vec<PlanStep>, times: &mut Vec<Time>, states: &mut Vec<PropSet>) {
        self.visited += 1;
        if self.visited > self.cap {
            return;
        }
        let task = self.task;
        let mut after_end = state.clone();
        let ending: Vec<&PlanStep> = steps.iter().filter(|s| self.end_of(s.action, s.start) == t).collect();
        let mut events: Vec<Ev> = ending
            .iter()
            .map(|s| {
                let a = task.action(s.action);
                (&a.e_cond[..], &a.e_add[..], &a.e_del[..])
            })
            .collect();
        let til_adds: Vec<Vec<PropId>> = task.tils.iter().filter(|x| x.time == t).map(|x| if x.positive { vec![x.prop] } else { vec![] }).collect();
        let til_dels: Vec<Vec<PropId>> = task.tils.iter().filter(|x| x.time == t).map(|x| if x.positive { vec![] } else { vec![x.prop] }).collect();
        for (add, del) in til_adds.iter().zip(&til_dels) {
            events.push((&[], add, del));
        }
        let ended = !events.is_empty();
        if !phase(&mut after_end, &events) {
            return;
        }
        // Actions that could start here, in id order.
        let bound = self.best.as_ref().map(|(m, _)| *m);
        let options: Vec<ActionId> = task
            .action_ids()
            .filter(|&a| {
                let act = task.action(a);
                let end = t + act.dur;
                end <= task.upper_bound && bound.is_none_or(|m| end < m) && act.s_cond.iter().all(|&p| after_end.contains(p))
            })
            .collect();
        for mask in 0u32..(1 << options.len()) {
            let chosen: Vec<ActionId> = (0..options.len()).filter(|&i| mask >> i & 1 == 1).map(|i| options[i]).collect();
            let mut cur = after_end.clone();
            let starts: Vec<Ev> = chosen
                .iter()
                .map(|&a| {
                    let act = task.action(a);
                    (&act.s_cond[..], &act.s_add[..], &act.s_del[..])
                })
                .collect();
            if !phase(&mut cur, &starts) {
                continue;
            }
            let before = steps.len();
            steps.extend(chosen.iter().map(|&a| PlanStep { action: a, start: t }));
            let inv_ok = steps.iter().all(|s| {
                let act = task.action(s.action);
                !(s.start <= t && t < s.start + act.dur) || act.inv.iter().all(|&p| cur.contains(p))
            });
            if inv_ok {
                let happening = t == Time::ZERO || ended || !chosen.is_empty();
                if happening {
                    times.push(t);
                    states.push(cur.clone());
                }
                let next = steps
                    .iter()
                    .map(|s| self.end_of(s.action, s.start))
                    .chain(self.waits.iter().copied())
                    .filter(|&x| x > t)
                    .min();
                match next {
                    Some(nt) => self.visit(nt, &cur, steps, times, states),
                    None => self.finish(steps, times, states),
                }
                if happening {
                    times.pop();
                    states.pop();
                }
            }
            steps.truncate(before);
        }
    }
}

pub fn enumerate(task: &GroundedTask, cap: usize) -> Brute {
    let mut waits: BTreeSet<Time> = task.tils.iter().map(|x| x.time).collect();
    for c in &task.constraints {
        if let Modality::HoldDuring(u1, u2) = c.op {
            waits.insert(u1);
            waits.insert(u2);
        }
    }
    let mut ctx = Ctx {
        task,
        waits: waits.into_iter().filter(|&w| w > Time::ZERO && w <= task.upper_bound).collect(),
        cap,
        visited: 0,
        best: None,
    };
    let mut state = task.init.clone();
    for til in task.tils.iter().filter(|x| x.time < Time::ZERO) {
        if til.positive {
            state.insert(til.prop);
        } else {
            state.remove(til.prop);
        }
    }
    ctx.visit(Time::ZERO, &state, &mut Vec::new(), &mut Vec::new(), &mut Vec::new());
    Brute {
        exhausted: ctx.visited <= ctx.cap,
        best: ctx.best,
        visited: ctx.visited,
    }
}
