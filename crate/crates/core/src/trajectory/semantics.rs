//! Truth of trajectory constraints over finished trajectories.

use serde::{Deserialize, Serialize};

use super::{Modality, TrajectoryConstraint};
use crate::execution::{reconstruct_trajectory, StateTrajectory};
use crate::model::{GroundedTask, PropId, TemporalPlan};

/// Outcome of one constraint with the happening indices that witness it:
/// the satisfying happenings for existential operators, the first violating
/// happening(s) otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub holds: bool,
    pub witness: Vec<usize>,
}

impl Verdict {
    fn ok(witness: Vec<usize>) -> Verdict {
        Verdict { holds: true, witness }
    }

    fn fail(witness: Vec<usize>) -> Verdict {
        Verdict { holds: false, witness }
    }
}

pub fn holds_semantics(traj: &StateTrajectory, c: &TrajectoryConstraint) -> bool {
    evaluate(traj, c).holds
}

/// Maximal runs `[first, last]` of consecutive happenings where `p` holds.
fn blocks(traj: &StateTrajectory, p: PropId) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut open: Option<usize> = None;
    for i in 0..traj.len() {
        match (traj.holds(i, p), open) {
            (true, None) => open = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        out.push((s, traj.len() - 1));
    }
    out
}

pub fn evaluate(traj: &StateTrajectory, c: &TrajectoryConstraint) -> Verdict {
    let n = traj.len() - 1;
    let phi = c.phi;
    let t = |i: usize| traj.happenings[i].time;
    let sat = |i: usize, p: PropId| traj.holds(i, p);
    match c.op {
        Modality::AtEnd => {
            if sat(n, phi) {
                Verdict::ok(vec![n])
            } else {
                Verdict::fail(vec![n])
            }
        }
        Modality::Always => match (0..=n).find(|&i| !sat(i, phi)) {
            Some(i) => Verdict::fail(vec![i]),
            None => Verdict::ok(vec![]),
        },
        Modality::AtMostOnce => {
            let b = blocks(traj, phi);
            if b.len() <= 1 {
                Verdict::ok(b.iter().map(|x| x.0).collect())
            } else {
                Verdict::fail(vec![b[0].0, b[1].0])
            }
        }
        Modality::Sometime => match (0..=n).find(|&i| sat(i, phi)) {
            Some(i) => Verdict::ok(vec![i]),
            None => Verdict::fail(vec![]),
        },
        Modality::Within(d) => match (0..=n).find(|&i| sat(i, phi) && t(i) <= d) {
            Some(i) => Verdict::ok(vec![i]),
            None => Verdict::fail(vec![]),
        },
        Modality::AlwaysWithin(d) => {
            let psi = c.psi.expect("binary");
            for i in (0..=n).filter(|&i| sat(i, phi)) {
                if !(i..=n).any(|j| sat(j, psi) && t(j) - t(i) <= d) {
                    return Verdict::fail(vec![i]);
                }
            }
            Verdict::ok(vec![])
        }
        Modality::SometimeAfter => {
            let psi = c.psi.expect("binary");
            for i in (0..=n).filter(|&i| sat(i, phi)) {
                if !(i..=n).any(|j| sat(j, psi)) {
                    return Verdict::fail(vec![i]);
                }
            }
            Verdict::ok(vec![])
        }
        Modality::SometimeBefore => {
            let psi = c.psi.expect("binary");
            let mut seen_psi = false;
            for i in 0..=n {
                if sat(i, phi) && !seen_psi {
                    return Verdict::fail(vec![i]);
                }
                seen_psi |= sat(i, psi);
            }
            Verdict::ok(vec![])
        }
        Modality::HoldDuring(u1, u2) => {
            if t(n) > u1 {
                if let Some(i) = (0..=n).find(|&i| u1 <= t(i) && t(i) < u2 && !sat(i, phi)) {
                    return Verdict::fail(vec![i]);
                }
                if let Some(j) = (0..n).find(|&j| t(j) <= u1 && u1 < t(j + 1) && !sat(j, phi)) {
                    return Verdict::fail(vec![j]);
                }
                Verdict::ok(vec![])
            } else if sat(n, phi) {
                Verdict::ok(vec![n])
            } else {
                Verdict::fail(vec![n])
            }
        }
        Modality::HoldAfter(d) => {
            if t(n) > d {
                match (0..=n).find(|&i| sat(i, phi) && t(i) > d) {
                    Some(i) => Verdict::ok(vec![i]),
                    None => Verdict::fail(vec![]),
                }
            } else if sat(n, phi) {
                Verdict::ok(vec![n])
            } else {
                Verdict::fail(vec![n])
            }
        }
        Modality::Persistence(d) => {
            // Some occurrence of phi stays true for d time units, or to the end.
            for (s, e) in blocks(traj, phi) {
                let lasts = e == n || t(e + 1) - t(s) >= d;
                if lasts {
                    return Verdict::ok(vec![s]);
                }
            }
            Verdict::fail(vec![])
        }
        Modality::WithinFromEnd(d) => {
            let psi = c.psi.expect("binary");
            for (_, e) in blocks(traj, phi) {
                if e == n {
                    continue;
                }
                let end = e + 1;
                if !(end..=n).any(|j| sat(j, psi) && t(j) - t(end) <= d) {
                    return Verdict::fail(vec![end]);
                }
            }
            Verdict::ok(vec![])
        }
        Modality::AllenOverlaps => {
            // phi starts first, psi starts while phi holds, phi ends first.
            let psi = c.psi.expect("binary");
            let end = |e: usize| if e == n { n + 1 } else { e + 1 };
            for (ps, pe) in blocks(traj, phi) {
                for (qs, qe) in blocks(traj, psi) {
                    if ps < qs && qs <= pe && end(pe) < end(qe) {
                        return Verdict::ok(vec![ps, qs]);
                    }
                }
            }
            Verdict::fail(vec![])
        }
        Modality::AllenDuring => {
            let psi = c.psi.expect("binary");
            let end = |e: usize| if e == n { n + 1 } else { e + 1 };
            for (ps, pe) in blocks(traj, phi) {
                for (qs, qe) in blocks(traj, psi) {
                    if qs < ps && end(pe) < end(qe) {
                        return Verdict::ok(vec![ps, qs]);
                    }
                }
            }
            Verdict::fail(vec![])
        }
    }
}

/// Per-constraint verdict in a validation report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintVerdict {
    pub constraint: String,
    pub holds: bool,
    pub witness: Vec<usize>,
}

/// Result of validating a finished plan against a task.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub makespan: Option<String>,
    pub execution_error: Option<String>,
    pub unmet_goals: Vec<String>,
    pub constraints: Vec<ConstraintVerdict>,
}

impl ValidationReport {
    /// Executes the plan, then checks goals and every trajectory constraint.
    pub fn build(task: &GroundedTask, plan: &TemporalPlan) -> ValidationReport {
        let traj = match reconstruct_trajectory(task, plan) {
            Ok(t) => t,
            Err(e) => {
                return ValidationReport {
                    valid: false,
                    makespan: Some(plan.makespan(task).to_string()),
                    execution_error: Some(e.to_string()),
                    unmet_goals: vec![],
                    constraints: vec![],
                }
            }
        };
        let unmet_goals: Vec<String> = task
            .goals
            .iter()
            .filter(|&&g| !traj.final_state().contains(g))
            .map(|&g| task.show(g))
            .collect();
        let constraints: Vec<ConstraintVerdict> = task
            .constraints
            .iter()
            .map(|c| {
                let v = evaluate(&traj, c);
                ConstraintVerdict {
                    constraint: c.display(task).to_string(),
                    holds: v.holds,
                    witness: v.witness,
                }
            })
            .collect();
        ValidationReport {
            valid: unmet_goals.is_empty() && constraints.iter().all(|c| c.holds),
            makespan: Some(plan.makespan(task).to_string()),
            execution_error: None,
            unmet_goals,
            constraints,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(if self.valid { "plan valid\n" } else { "plan INVALID\n" });
        if let Some(m) = &self.makespan {
            out.push_str(&format!("makespan {m}\n"));
        }
        if let Some(e) = &self.execution_error {
            out.push_str(&format!("execution error: {e}\n"));
        }
        for g in &self.unmet_goals {
            out.push_str(&format!("unmet goal {g}\n"));
        }
        for c in &self.constraints {
            out.push_str(&format!(
                "{} {} witness {:?}\n",
                if c.holds { "ok  " } else { "FAIL" },
                c.constraint,
                c.witness
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::execution::Happening;
    use crate::model::PropSet;
    use crate::time::Time;
    use crate::trajectory::Constraint;

    const P: PropId = PropId(0);
    const Q: PropId = PropId(1);

    fn traj(rows: &[(i64, &[PropId])]) -> StateTrajectory {
        StateTrajectory::new(
            rows.iter()
                .map(|(t, s)| Happening {
                    time: Time::from_int(*t),
                    state: PropSet::from_ids(2, s.iter().copied()),
                })
                .collect(),
        )
    }

    #[test]
    fn sometime_fails_when_never_true() {
        let tr = traj(&[(0, &[]), (3, &[Q])]);
        assert!(!holds_semantics(&tr, &Constraint::unary(Modality::Sometime, P)));
    }

    #[test]
    fn sometime_after_is_vacuous_without_phi() {
        let tr = traj(&[(0, &[]), (3, &[])]);
        assert!(holds_semantics(&tr, &Constraint::binary(Modality::SometimeAfter, P, Q)));
    }

    #[test]
    fn at_most_once_counts_blocks() {
        let once = traj(&[(0, &[P]), (1, &[P]), (2, &[])]);
        let twice = traj(&[(0, &[P]), (1, &[]), (2, &[P])]);
        let c = Constraint::unary(Modality::AtMostOnce, P);
        assert!(holds_semantics(&once, &c));
        let v = evaluate(&twice, &c);
        assert!(!v.holds);
        assert_eq!(v.witness, vec![0, 2]);
    }

    #[test]
    fn hold_during_uses_state_current_at_u1() {
        let c = Constraint::unary(Modality::HoldDuring(Time::from_int(2), Time::from_int(6)), P);
        // State S_0 holds over [0, 3) and so covers u1 = 2.
        assert!(!holds_semantics(&traj(&[(0, &[]), (3, &[P]), (8, &[])]), &c));
        assert!(holds_semantics(&traj(&[(0, &[P]), (3, &[P]), (6, &[])]), &c));
        // Plan ends before u1: only the last state matters.
        assert!(holds_semantics(&traj(&[(0, &[]), (1, &[P])]), &c));
    }

    #[test]
    fn hold_after_branches_on_plan_end() {
        let c = Constraint::unary(Modality::HoldAfter(Time::from_int(4)), P);
        assert!(!holds_semantics(&traj(&[(0, &[P]), (5, &[])]), &c));
        assert!(holds_semantics(&traj(&[(0, &[]), (5, &[P])]), &c));
        assert!(holds_semantics(&traj(&[(0, &[]), (4, &[P])]), &c));
    }

    #[test]
    fn extension_operators() {
        let tr = traj(&[(0, &[P]), (2, &[P, Q]), (5, &[Q]), (9, &[])]);
        assert!(holds_semantics(&tr, &Constraint::binary(Modality::AllenOverlaps, P, Q)));
        assert!(!holds_semantics(&tr, &Constraint::binary(Modality::AllenDuring, P, Q)));
        assert!(holds_semantics(&tr, &Constraint::unary(Modality::Persistence(Time::from_int(5)), P)));
        assert!(!holds_semantics(&tr, &Constraint::unary(Modality::Persistence(Time::from_int(6)), P)));
        assert!(holds_semantics(&tr, &Constraint::binary(Modality::WithinFromEnd(Time::ZERO), P, Q)));
        assert!(!holds_semantics(&tr, &Constraint::binary(Modality::WithinFromEnd(Time::from_int(10)), Q, P)));
        let inner = traj(&[(0, &[Q]), (2, &[P, Q]), (5, &[Q]), (9, &[])]);
        assert!(holds_semantics(&inner, &Constraint::binary(Modality::AllenDuring, P, Q)));
    }
}
