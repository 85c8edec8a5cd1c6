//! Reader for the durative-action subset of PDDL 2.1, timed initial literals
//! and strong PDDL3 trajectory constraints, plus grounding.

mod ground;
mod parse;
mod print;
pub mod sexpr;

pub use ground::{ground, GroundOptions};
pub use parse::{parse_domain, parse_problem};

use crate::model::TaskError;
use crate::time::Time;
use crate::trajectory::Modality;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PddlError {
    #[error("syntax error on line {line}: expected {expected}")]
    Syntax { line: usize, expected: String },
    #[error("unsupported feature `{0}`")]
    UnsupportedFeature(String),
    #[error("unknown modal operator `{0}`")]
    UnknownModalOperator(String),
    #[error("nested modal operator inside `{0}`")]
    NestedModality(String),
    #[error("undeclared {kind} `{name}`")]
    Undeclared { kind: &'static str, name: String },
    #[error("type error: {0}")]
    Type(String),
    #[error(transparent)]
    Task(#[from] TaskError),
}

impl PddlError {
    pub(crate) fn syntax(line: usize, expected: &str) -> PddlError {
        PddlError::Syntax {
            line,
            expected: expected.to_string(),
        }
    }
}

/// A parameter or constant argument of a lifted atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    fn parse(text: &str) -> Term {
        match text.strip_prefix('?') {
            Some(v) => Term::Var(v.to_string()),
            None => Term::Const(text.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

/// A name with its declared type (`object` when untyped).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Typed {
    pub name: String,
    pub ty: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<Typed>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CondTime {
    AtStart,
    AtEnd,
    OverAll,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EffTime {
    AtStart,
    AtEnd,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DurationExpr {
    Const(Time),
    Function { name: String, args: Vec<Term> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condition {
    pub when: CondTime,
    pub atom: Atom,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Effect {
    pub when: EffTime,
    pub positive: bool,
    pub atom: Atom,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<Typed>,
    pub duration: DurationExpr,
    pub conditions: Vec<Condition>,
    pub effects: Vec<Effect>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ParsedDomain {
    pub name: String,
    pub requirements: Vec<String>,
    /// `(type, parent)` pairs; every type other than `object` has a parent.
    pub types: Vec<(String, String)>,
    pub constants: Vec<Typed>,
    pub predicates: Vec<PredicateDecl>,
    pub functions: Vec<PredicateDecl>,
    pub actions: Vec<ActionSchema>,
}

/// A ground atom in a problem file.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub predicate: String,
    pub args: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionValue {
    pub name: String,
    pub args: Vec<String>,
    pub value: Time,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedLiteral {
    pub time: Time,
    pub positive: bool,
    pub fact: Fact,
}

/// A parsed trajectory constraint over ground facts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedConstraint {
    pub op: Modality,
    pub phi: Fact,
    pub psi: Option<Fact>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ParsedProblem {
    pub name: String,
    pub domain: String,
    pub objects: Vec<Typed>,
    pub init: Vec<Fact>,
    pub tils: Vec<TimedLiteral>,
    pub functions: Vec<FunctionValue>,
    /// Plain goals, implicitly required at the end of the plan.
    pub goals: Vec<Fact>,
    /// Modal operators written inside `:goal`.
    pub goal_constraints: Vec<ParsedConstraint>,
    pub constraints: Vec<ParsedConstraint>,
}

impl ParsedDomain {
    pub fn to_pddl(&self) -> String {
        print::domain(self)
    }
}

impl ParsedProblem {
    pub fn to_pddl(&self) -> String {
        print::problem(self)
    }

    /// Every trajectory constraint, from `:goal` and `:constraints` alike.
    pub fn all_constraints(&self) -> impl Iterator<Item = &ParsedConstraint> {
        self.goal_constraints.iter().chain(&self.constraints)
    }
}
