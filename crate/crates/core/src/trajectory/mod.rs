//! PDDL3 state-trajectory constraints: representation, formal semantics,
//! compilation into landmark interval constraints, and incremental monitors
//! used to prune partial plans.

mod compile;
mod monitor;
mod semantics;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Deadline, GroundedTask, PropId, Proposition, TaskError};
use crate::time::Time;

pub use compile::{compile, Arg, CompiledConstraint, EndpointRelation, PruneClass, Rel, Term};
pub use monitor::{MonitorSet, Obligations, PruneReason};
pub use semantics::{evaluate, holds_semantics, ConstraintVerdict, ValidationReport, Verdict};

/// The modal operator of a trajectory constraint together with its numeric
/// arguments. The last four are extensions beyond standard PDDL3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modality {
    AtEnd,
    Always,
    AtMostOnce,
    Sometime,
    Within(Time),
    AlwaysWithin(Time),
    SometimeAfter,
    SometimeBefore,
    HoldDuring(Time, Time),
    HoldAfter(Time),
    Persistence(Time),
    WithinFromEnd(Time),
    AllenOverlaps,
    AllenDuring,
}

impl Modality {
    /// All fourteen operators, with representative arguments.
    pub fn all_with(t: Time, u1: Time, u2: Time) -> [Modality; 14] {
        [
            Modality::AtEnd,
            Modality::Always,
            Modality::AtMostOnce,
            Modality::Sometime,
            Modality::Within(t),
            Modality::AlwaysWithin(t),
            Modality::SometimeAfter,
            Modality::SometimeBefore,
            Modality::HoldDuring(u1, u2),
            Modality::HoldAfter(t),
            Modality::Persistence(t),
            Modality::WithinFromEnd(t),
            Modality::AllenOverlaps,
            Modality::AllenDuring,
        ]
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Modality::AtEnd => "at end",
            Modality::Always => "always",
            Modality::AtMostOnce => "at-most-once",
            Modality::Sometime => "sometime",
            Modality::Within(_) => "within",
            Modality::AlwaysWithin(_) => "always-within",
            Modality::SometimeAfter => "sometime-after",
            Modality::SometimeBefore => "sometime-before",
            Modality::HoldDuring(..) => "hold-during",
            Modality::HoldAfter(_) => "hold-after",
            Modality::Persistence(_) => "persistence",
            Modality::WithinFromEnd(_) => "within-from-end",
            Modality::AllenOverlaps => "overlaps",
            Modality::AllenDuring => "during",
        }
    }

    /// True for operators over two goal descriptors.
    pub fn is_binary(&self) -> bool {
        matches!(
            self,
            Modality::AlwaysWithin(_)
                | Modality::SometimeAfter
                | Modality::SometimeBefore
                | Modality::WithinFromEnd(_)
                | Modality::AllenOverlaps
                | Modality::AllenDuring
        )
    }

    pub fn is_extension(&self) -> bool {
        matches!(
            self,
            Modality::Persistence(_) | Modality::WithinFromEnd(_) | Modality::AllenOverlaps | Modality::AllenDuring
        )
    }

    fn numbers(&self) -> Vec<Time> {
        match *self {
            Modality::Within(t)
            | Modality::AlwaysWithin(t)
            | Modality::HoldAfter(t)
            | Modality::Persistence(t)
            | Modality::WithinFromEnd(t) => vec![t],
            Modality::HoldDuring(a, b) => vec![a, b],
            _ => vec![],
        }
    }
}

/// A trajectory constraint over propositions of type `P`.
///
/// `psi` is present exactly for binary operators.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Constraint<P> {
    pub op: Modality,
    pub phi: P,
    pub psi: Option<P>,
}

/// A constraint as parsed, before proposition interning.
pub type ConstraintSpec = Constraint<Proposition>;

/// A constraint over the propositions of a grounded task.
pub type TrajectoryConstraint = Constraint<PropId>;

impl<P> Constraint<P> {
    pub fn unary(op: Modality, phi: P) -> Constraint<P> {
        Constraint { op, phi, psi: None }
    }

    pub fn binary(op: Modality, phi: P, psi: P) -> Constraint<P> {
        Constraint { op, phi, psi: Some(psi) }
    }

    pub fn props(&self) -> impl Iterator<Item = &P> {
        std::iter::once(&self.phi).chain(self.psi.as_ref())
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.op.is_binary() != self.psi.is_some() {
            return Err(format!("{} takes {} goal descriptors", self.op.keyword(), if self.op.is_binary() { 2 } else { 1 }));
        }
        if self.op.numbers().iter().any(|t| t.is_negative()) {
            return Err(format!("{} requires non-negative times", self.op.keyword()));
        }
        if let Modality::HoldDuring(u1, u2) = self.op {
            if u1 >= u2 {
                return Err("hold-during requires u1 < u2".into());
            }
        }
        Ok(())
    }

    pub fn map<Q>(&self, mut f: impl FnMut(&P) -> Q) -> Constraint<Q> {
        Constraint {
            op: self.op,
            phi: f(&self.phi),
            psi: self.psi.as_ref().map(f),
        }
    }
}

impl ConstraintSpec {
    pub(crate) fn resolve(&self, index: &HashMap<Proposition, PropId>) -> Result<TrajectoryConstraint, TaskError> {
        self.validate().map_err(TaskError::InvalidConstraint)?;
        Ok(self.map(|p| index[p]))
    }
}

impl TrajectoryConstraint {
    /// `within` constraints double as deadlines.
    pub fn deadline(&self) -> Option<Deadline> {
        match self.op {
            Modality::Within(t) => Some(Deadline { prop: self.phi, time: t }),
            _ => None,
        }
    }

    pub fn display<'a>(&'a self, task: &'a GroundedTask) -> impl fmt::Display + 'a {
        DisplayConstraint { c: self.map(|p| task.prop(*p).clone()) }
    }
}

struct DisplayConstraint {
    c: ConstraintSpec,
}

impl fmt::Display for DisplayConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.c, f)
    }
}

impl fmt::Display for ConstraintSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.op.keyword())?;
        for n in self.op.numbers() {
            write!(f, " {n}")?;
        }
        write!(f, " {}", self.phi)?;
        if let Some(psi) = &self.psi {
            write!(f, " {psi}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rules() {
        let p = Proposition::new("p", &[] as &[&str]);
        let bad_order = Constraint::unary(Modality::HoldDuring(Time::from_int(5), Time::from_int(5)), p.clone());
        assert!(bad_order.validate().is_err());
        let negative = Constraint::unary(Modality::Within(Time::from_int(-1)), p.clone());
        assert!(negative.validate().is_err());
        let missing_psi = Constraint::unary(Modality::SometimeBefore, p.clone());
        assert!(missing_psi.validate().is_err());
        let ok = Constraint::binary(Modality::AlwaysWithin(Time::from_int(3)), p.clone(), p);
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn display_matches_pddl_syntax() {
        let c = Constraint::unary(
            Modality::HoldDuring(Time::ZERO, Time::from_int(10)),
            Proposition::new("at", &["t0", "d0"]),
        );
        assert_eq!(c.to_string(), "(hold-during 0 10 (at t0 d0))");
    }
}
