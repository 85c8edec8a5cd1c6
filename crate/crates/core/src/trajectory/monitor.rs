//! Incremental constraint tracking over the happenings of a partial plan.
//!
//! A monitor sees each happening once it is final (no further events can be
//! added at that time). It reports a violation only when no completion of the
//! partial plan can satisfy the constraint, and it lists what remains to be
//! achieved so that the landmark graph of the node can reflect it.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Modality, TrajectoryConstraint};
use crate::model::{GroundedTask, PropId, PropSet};
use crate::time::Time;

/// Why a partial plan was discarded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PruneReason {
    Always(String),
    AtMostOnce(String),
    Within(String),
    AlwaysWithin(String),
    SometimeBefore(String),
    HoldDuring(String),
    /// The landmark graph of the node has no solution.
    Inconsistent(String),
}

impl PruneReason {
    /// Short tag, e.g. `Always-violation`.
    pub fn tag(&self) -> &'static str {
        match self {
            PruneReason::Always(_) => "Always-violation",
            PruneReason::AtMostOnce(_) => "AtMostOnce-violation",
            PruneReason::Within(_) => "Within-violation",
            PruneReason::AlwaysWithin(_) => "AlwaysWithin-violation",
            PruneReason::SometimeBefore(_) => "SometimeBefore-violation",
            PruneReason::HoldDuring(_) => "HoldDuring-violation",
            PruneReason::Inconsistent(_) => "TLG-inconsistent",
        }
    }

    pub fn detail(&self) -> &str {
        match self {
            PruneReason::Always(s)
            | PruneReason::AtMostOnce(s)
            | PruneReason::Within(s)
            | PruneReason::AlwaysWithin(s)
            | PruneReason::SometimeBefore(s)
            | PruneReason::HoldDuring(s)
            | PruneReason::Inconsistent(s) => s,
        }
    }
}

impl fmt::Display for PruneReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.tag(), self.detail())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Track {
    /// Nothing to remember between happenings.
    Stateless,
    AtMostOnce { blocks: u8, inside: bool },
    Seen(bool),
    AlwaysWithin { pending: Option<Time> },
    SometimeAfter { pending: bool },
    SometimeBefore { seen_psi: bool },
    HoldDuring { at_u1: bool, passed: bool },
}

/// What the rest of a plan still has to achieve.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Obligations {
    pub targets: Vec<PropId>,
    pub deadlines: Vec<(PropId, Time)>,
    pub constraints: Vec<TrajectoryConstraint>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MonitorSet {
    tracks: Vec<Track>,
    /// Some happening has been observed.
    started: bool,
}

impl MonitorSet {
    pub fn new(task: &GroundedTask) -> MonitorSet {
        let tracks = task
            .constraints
            .iter()
            .map(|c| match c.op {
                Modality::AtMostOnce => Track::AtMostOnce { blocks: 0, inside: false },
                Modality::Sometime | Modality::Within(_) | Modality::HoldAfter(_) => Track::Seen(false),
                Modality::AlwaysWithin(_) => Track::AlwaysWithin { pending: None },
                Modality::SometimeAfter => Track::SometimeAfter { pending: false },
                Modality::SometimeBefore => Track::SometimeBefore { seen_psi: false },
                Modality::HoldDuring(..) => Track::HoldDuring {
                    at_u1: false,
                    passed: false,
                },
                _ => Track::Stateless,
            })
            .collect();
        MonitorSet { tracks, started: false }
    }

    /// Records the final state of the happening at `t`.
    pub fn observe(&mut self, task: &GroundedTask, t: Time, state: &PropSet) -> Result<(), PruneReason> {
        self.started = true;
        for (c, track) in task.constraints.iter().zip(&mut self.tracks) {
            let phi = state.contains(c.phi);
            let psi = c.psi.is_some_and(|q| state.contains(q));
            let name = || c.display(task).to_string();
            match (c.op, track) {
                (Modality::Always, _) if !phi => return Err(PruneReason::Always(name())),
                (Modality::AtMostOnce, Track::AtMostOnce { blocks, inside }) => {
                    if phi && !*inside {
                        *blocks += 1;
                        if *blocks > 1 {
                            return Err(PruneReason::AtMostOnce(name()));
                        }
                    }
                    *inside = phi;
                }
                (Modality::Sometime, Track::Seen(seen)) => *seen |= phi,
                (Modality::Within(d), Track::Seen(seen)) => *seen |= phi && t <= d,
                (Modality::HoldAfter(d), Track::Seen(seen)) => *seen |= phi && t > d,
                (Modality::AlwaysWithin(_), Track::AlwaysWithin { pending }) => {
                    if psi {
                        *pending = None;
                    } else if phi && pending.is_none() {
                        *pending = Some(t);
                    }
                }
                (Modality::SometimeAfter, Track::SometimeAfter { pending }) => {
                    if psi {
                        *pending = false;
                    } else if phi {
                        *pending = true;
                    }
                }
                (Modality::SometimeBefore, Track::SometimeBefore { seen_psi }) => {
                    if phi && !*seen_psi {
                        return Err(PruneReason::SometimeBefore(name()));
                    }
                    *seen_psi |= psi;
                }
                (Modality::HoldDuring(u1, u2), Track::HoldDuring { at_u1, passed }) => {
                    if t <= u1 {
                        *at_u1 = phi;
                    } else if !*passed {
                        // The state current at u1 is the last one at or before it.
                        if !*at_u1 {
                            return Err(PruneReason::HoldDuring(name()));
                        }
                        *passed = true;
                    }
                    if u1 <= t && t < u2 && !phi {
                        return Err(PruneReason::HoldDuring(name()));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Start events at `t` delete `deleted`; the happening at `t` will lack
    /// them whatever else starts there.
    pub fn check_deletes(&self, task: &GroundedTask, t: Time, deleted: &[PropId]) -> Result<(), PruneReason> {
        for c in &task.constraints {
            if !deleted.contains(&c.phi) {
                continue;
            }
            match c.op {
                Modality::Always => return Err(PruneReason::Always(c.display(task).to_string())),
                Modality::HoldDuring(u1, u2) if u1 <= t && t < u2 => {
                    return Err(PruneReason::HoldDuring(c.display(task).to_string()))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// The next happening, if any, is at `next` or later.
    pub fn check_advance(&self, task: &GroundedTask, next: Time) -> Result<(), PruneReason> {
        for (c, track) in task.constraints.iter().zip(&self.tracks) {
            match (c.op, track) {
                (Modality::Within(d), Track::Seen(false)) if next > d => {
                    return Err(PruneReason::Within(c.display(task).to_string()))
                }
                (Modality::AlwaysWithin(d), Track::AlwaysWithin { pending: Some(x) }) if next > *x + d => {
                    return Err(PruneReason::AlwaysWithin(c.display(task).to_string()))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Propositions whose blocks have ended under an at-most-once
    /// constraint: another visible occurrence would violate it.
    pub fn closed_once(&self, task: &GroundedTask) -> Vec<(PropId, String)> {
        task.constraints
            .iter()
            .zip(&self.tracks)
            .filter_map(|(c, track)| match track {
                Track::AtMostOnce { blocks: 1, inside: false } => Some((c.phi, c.display(task).to_string())),
                _ => None,
            })
            .collect()
    }

    /// Remaining obligations for a plan continuing from `origin`.
    pub fn obligations(&self, task: &GroundedTask, origin: Time) -> Obligations {
        let mut out = Obligations {
            targets: task.goals.clone(),
            ..Default::default()
        };
        for (c, track) in task.constraints.iter().zip(&self.tracks) {
            let keep = match (c.op, track) {
                (Modality::Within(d), Track::Seen(seen)) => {
                    if !seen {
                        out.deadlines.push((c.phi, d));
                    }
                    !seen
                }
                (Modality::Sometime | Modality::HoldAfter(_), Track::Seen(seen)) => !seen,
                (Modality::AlwaysWithin(d), Track::AlwaysWithin { pending }) => {
                    if let (Some(x), Some(psi)) = (pending, c.psi) {
                        out.deadlines.push((psi, *x + d));
                    }
                    true
                }
                (Modality::SometimeAfter, Track::SometimeAfter { pending }) => {
                    if *pending {
                        out.targets.extend(c.psi);
                    }
                    true
                }
                (Modality::SometimeBefore, Track::SometimeBefore { seen_psi }) => !seen_psi,
                (Modality::HoldDuring(u1, _), _) => origin <= u1,
                (op, _) if op.is_extension() => !self.started,
                _ => true,
            };
            if keep {
                out.constraints.push(c.clone());
            }
        }
        out.targets.sort();
        out.targets.dedup();
        out.deadlines.sort();
        out.deadlines.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Proposition, TaskSpec};
    use crate::trajectory::ConstraintSpec;

    fn task(constraints: Vec<ConstraintSpec>) -> GroundedTask {
        GroundedTask::new(TaskSpec {
            init: vec![Proposition::parse("(p)").unwrap()],
            constraints,
            upper_bound: Some(Time::from_int(10)),
            ..Default::default()
        })
        .unwrap()
    }

    fn spec(op: Modality, phi: &str, psi: Option<&str>) -> ConstraintSpec {
        let p = |s: &str| Proposition::parse(s).unwrap();
        match psi {
            Some(q) => ConstraintSpec::binary(op, p(phi), p(q)),
            None => ConstraintSpec::unary(op, p(phi)),
        }
    }

    fn t(v: i64) -> Time {
        Time::from_int(v)
    }

    #[test]
    fn at_most_once_counts_blocks() {
        let task = task(vec![spec(Modality::AtMostOnce, "(p)", None)]);
        let p = task.lookup("(p)").unwrap();
        let with = PropSet::from_ids(task.num_props(), [p]);
        let without = task.empty_set();
        let mut m = MonitorSet::new(&task);
        m.observe(&task, t(0), &with).unwrap();
        m.observe(&task, t(1), &with).unwrap();
        m.observe(&task, t(2), &without).unwrap();
        assert_eq!(m.closed_once(&task).len(), 1);
        let err = m.observe(&task, t(3), &with).unwrap_err();
        assert_eq!(err.tag(), "AtMostOnce-violation");
    }

    #[test]
    fn always_within_expires() {
        let task = task(vec![spec(Modality::AlwaysWithin(t(3)), "(p)", Some("(q)"))]);
        let p = task.lookup("(p)").unwrap();
        let q = task.lookup("(q)").unwrap();
        let mut m = MonitorSet::new(&task);
        m.observe(&task, t(1), &PropSet::from_ids(task.num_props(), [p])).unwrap();
        assert_eq!(m.obligations(&task, t(1)).deadlines, vec![(q, t(4))]);
        assert!(m.check_advance(&task, t(4)).is_ok());
        assert!(m.check_advance(&task, t(5)).is_err());
        m.observe(&task, t(2), &PropSet::from_ids(task.num_props(), [q])).unwrap();
        assert!(m.check_advance(&task, t(9)).is_ok());
    }

    #[test]
    fn hold_during_uses_the_state_current_at_the_window_start() {
        let task = task(vec![spec(Modality::HoldDuring(t(2), t(6)), "(p)", None)]);
        let p = task.lookup("(p)").unwrap();
        let with = PropSet::from_ids(task.num_props(), [p]);
        let mut m = MonitorSet::new(&task);
        m.observe(&task, t(0), &task.empty_set()).unwrap();
        m.observe(&task, t(1), &with).unwrap();
        m.observe(&task, t(4), &with).unwrap();
        assert!(m.observe(&task, t(5), &task.empty_set()).is_err());
        assert!(m.check_deletes(&task, t(5), &[p]).is_err());
        assert!(m.check_deletes(&task, t(6), &[p]).is_ok());

        let mut late = MonitorSet::new(&task);
        late.observe(&task, t(0), &task.empty_set()).unwrap();
        assert!(late.observe(&task, t(3), &with).is_err());
    }

    #[test]
    fn sometime_before_needs_an_earlier_psi() {
        let task = task(vec![spec(Modality::SometimeBefore, "(r)", Some("(q)"))]);
        let r = task.lookup("(r)").unwrap();
        let q = task.lookup("(q)").unwrap();
        let mut m = MonitorSet::new(&task);
        assert!(m.clone().observe(&task, t(0), &PropSet::from_ids(task.num_props(), [q, r])).is_err());
        m.observe(&task, t(0), &PropSet::from_ids(task.num_props(), [q])).unwrap();
        m.observe(&task, t(1), &PropSet::from_ids(task.num_props(), [r])).unwrap();
    }
}
