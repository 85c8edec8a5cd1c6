//! Symbolic interval relations of each operator and how a partial plan can be
//! pruned by it.
//!
//! Every relation is recorded. Only some are imposed on the graph: a fact
//! can be added and deleted at the same instant, so bounds that assume a
//! proposition stays visible for its whole block are not sound in general.
//! The `enforced` flag tells which relations the graph builder applies.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Modality, TrajectoryConstraint};
use crate::model::PropId;
use crate::time::Time;
use crate::tlg::Endpoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arg {
    Phi,
    Psi,
}

/// `endpoint(arg) + offset`, or just `offset` when there is no endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub endpoint: Option<(Endpoint, Arg)>,
    pub offset: Time,
}

impl Term {
    fn at(e: Endpoint, a: Arg) -> Term {
        Term {
            endpoint: Some((e, a)),
            offset: Time::ZERO,
        }
    }

    fn plus(e: Endpoint, a: Arg, offset: Time) -> Term {
        Term {
            endpoint: Some((e, a)),
            offset,
        }
    }

    fn constant(t: Time) -> Term {
        Term { endpoint: None, offset: t }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.endpoint {
            None => write!(f, "{}", self.offset),
            Some((e, a)) => {
                let arg = if a == Arg::Phi { "phi" } else { "psi" };
                write!(f, "{}({arg})", e.name())?;
                if self.offset.is_negative() {
                    write!(f, " - {}", -self.offset)
                } else if !self.offset.is_zero() {
                    write!(f, " + {}", self.offset)
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rel {
    Le,
    Lt,
    Eq,
    Ge,
    Gt,
}

impl Rel {
    fn symbol(&self) -> &'static str {
        match self {
            Rel::Le => "<=",
            Rel::Lt => "<",
            Rel::Eq => "=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointRelation {
    pub lhs: Term,
    pub rel: Rel,
    pub rhs: Term,
    /// Applied by the graph builder (possibly in a stronger form).
    pub enforced: bool,
}

impl fmt::Display for EndpointRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.rel.symbol(), self.rhs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PruneClass {
    /// Checked at every happening of a partial plan.
    AlwaysCheckable,
    /// Checked once the plan moves past the given time.
    DeadlineCheckable(Time),
    /// Only finished plans can be judged.
    FinishedPlanOnly,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledConstraint {
    pub constraint: TrajectoryConstraint,
    /// Propositions that become landmarks.
    pub new_landmarks: Vec<PropId>,
    /// `(phi, psi)`: if phi is a landmark, so is psi.
    pub conditional: Option<(PropId, PropId)>,
    pub relations: Vec<EndpointRelation>,
    pub prune_class: PruneClass,
}

/// Relations of `c` when the plan ends at `t_n`.
pub fn compile(c: &TrajectoryConstraint, t_n: Time) -> CompiledConstraint {
    use Arg::{Phi, Psi};
    use Endpoint::*;
    let r = |lhs: Term, rel: Rel, rhs: Term, enforced: bool| EndpointRelation { lhs, rel, rhs, enforced };
    let at = Term::at;
    let k = Term::constant;
    let (new_landmarks, conditional) = crate::landmarks::constraint_landmarks(c);
    let (relations, prune_class) = match c.op {
        Modality::AtEnd => (
            vec![r(at(MaxN, Phi), Rel::Eq, k(t_n), false), r(at(MaxV, Phi), Rel::Eq, k(t_n), true)],
            PruneClass::FinishedPlanOnly,
        ),
        Modality::Always => (
            vec![
                r(at(MinN, Phi), Rel::Eq, k(Time::ZERO), false),
                r(at(MinV, Phi), Rel::Eq, k(Time::ZERO), true),
                r(at(MaxN, Phi), Rel::Eq, k(t_n), false),
                r(at(MaxV, Phi), Rel::Eq, k(t_n), false),
            ],
            PruneClass::AlwaysCheckable,
        ),
        Modality::AtMostOnce => (vec![r(at(MaxG, Phi), Rel::Le, k(t_n), true)], PruneClass::AlwaysCheckable),
        Modality::Sometime => (vec![r(at(MaxG, Phi), Rel::Le, k(t_n), true)], PruneClass::FinishedPlanOnly),
        Modality::Within(t) => (vec![r(at(MaxG, Phi), Rel::Le, k(t), true)], PruneClass::DeadlineCheckable(t)),
        Modality::AlwaysWithin(t) => (
            vec![r(at(MaxG, Psi), Rel::Le, Term::plus(MaxG, Phi, t), false)],
            PruneClass::DeadlineCheckable(t),
        ),
        Modality::SometimeBefore => (vec![r(at(MaxG, Psi), Rel::Le, at(MaxG, Phi), false)], PruneClass::AlwaysCheckable),
        Modality::SometimeAfter => (vec![r(at(MaxV, Psi), Rel::Ge, at(MaxG, Phi), false)], PruneClass::FinishedPlanOnly),
        Modality::HoldDuring(u1, u2) => {
            let rows = if u2 <= t_n {
                vec![r(at(MinN, Phi), Rel::Le, k(u1), true), r(at(MaxN, Phi), Rel::Gt, k(u2), false)]
            } else if u1 < t_n {
                vec![r(at(MinN, Phi), Rel::Le, k(u1), true), r(at(MaxN, Phi), Rel::Eq, k(t_n), false)]
            } else {
                vec![r(at(MinN, Phi), Rel::Eq, k(t_n), false), r(at(MaxN, Phi), Rel::Eq, k(t_n), false)]
            };
            (rows, PruneClass::AlwaysCheckable)
        }
        Modality::HoldAfter(t) => (vec![r(at(MaxV, Phi), Rel::Ge, k(t), false)], PruneClass::FinishedPlanOnly),
        Modality::Persistence(t) => (
            vec![r(at(MaxN, Phi), Rel::Ge, Term::plus(MaxG, Phi, t), false)],
            PruneClass::FinishedPlanOnly,
        ),
        Modality::WithinFromEnd(t) => (
            vec![r(at(MaxG, Psi), Rel::Le, Term::plus(MaxV, Phi, t), false)],
            PruneClass::FinishedPlanOnly,
        ),
        Modality::AllenOverlaps => (vec![r(at(MaxV, Phi), Rel::Ge, at(MaxG, Psi), false)], PruneClass::FinishedPlanOnly),
        Modality::AllenDuring => (
            vec![
                r(at(MaxG, Phi), Rel::Ge, at(MaxG, Psi), false),
                r(at(MaxV, Phi), Rel::Le, at(MaxV, Psi), false),
            ],
            PruneClass::FinishedPlanOnly,
        ),
    };
    CompiledConstraint {
        constraint: c.clone(),
        new_landmarks,
        conditional,
        relations,
        prune_class,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Constraint;

    fn t(v: i64) -> Time {
        Time::from_int(v)
    }

    #[test]
    fn every_operator_compiles() {
        let (p, q) = (PropId(0), PropId(1));
        for op in Modality::all_with(t(5), t(2), t(8)) {
            let c = if op.is_binary() { Constraint::binary(op, p, q) } else { Constraint::unary(op, p) };
            let cc = compile(&c, t(40));
            assert!(!cc.relations.is_empty(), "{op:?}");
            if op.is_binary() && !matches!(op, Modality::AllenOverlaps | Modality::AllenDuring) {
                assert!(cc.conditional.is_some() || matches!(op, Modality::WithinFromEnd(_)), "{op:?}");
            }
        }
    }

    #[test]
    fn hold_during_cases_follow_the_plan_end() {
        let c = Constraint::unary(Modality::HoldDuring(t(0), t(10)), PropId(0));
        let shown = |t_n: i64| compile(&c, t(t_n)).relations.iter().map(|r| r.to_string()).collect::<Vec<_>>();
        assert_eq!(shown(40), ["min_n(phi) <= 0", "max_n(phi) > 10"]);
        assert_eq!(shown(5), ["min_n(phi) <= 0", "max_n(phi) = 5"]);
        assert_eq!(shown(0), ["min_n(phi) = 0", "max_n(phi) = 0"]);
    }

    #[test]
    fn always_within_relates_the_two_generations() {
        let c = Constraint::binary(Modality::AlwaysWithin(t(22)), PropId(0), PropId(1));
        let cc = compile(&c, t(40));
        assert_eq!(cc.relations[0].to_string(), "max_g(psi) <= max_g(phi) + 22");
        assert_eq!(cc.prune_class, PruneClass::DeadlineCheckable(t(22)));
        assert_eq!(cc.conditional, Some((PropId(0), PropId(1))));
    }
}
