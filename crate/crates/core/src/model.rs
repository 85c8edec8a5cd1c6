//! Propositions, durative actions, grounded tasks and temporal plans.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::time::Time;
use crate::trajectory::TrajectoryConstraint;

/// A ground atom such as `(at t0 d0)`. Symbols are stored lower-case.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Proposition {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Proposition {
    pub fn new<S: AsRef<str>>(predicate: &str, args: &[S]) -> Proposition {
        Proposition {
            predicate: predicate.to_ascii_lowercase(),
            args: args.iter().map(|a| a.as_ref().to_ascii_lowercase()).collect(),
        }
    }

    /// Parses the `(pred arg ...)` rendering produced by `Display`.
    pub fn parse(text: &str) -> Option<Proposition> {
        let inner = text.trim().strip_prefix('(')?.strip_suffix(')')?;
        let mut words = inner.split_whitespace();
        let predicate = words.next()?;
        let args: Vec<&str> = words.collect();
        Some(Proposition::new(predicate, &args))
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Index of a proposition inside a [`GroundedTask`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct PropId(pub u32);

impl PropId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Index of a ground action inside a [`GroundedTask`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct ActionId(pub u32);

impl ActionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A fixed-universe set of propositions.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PropSet {
    words: Vec<u64>,
}

impl PropSet {
    pub fn new(universe: usize) -> PropSet {
        PropSet {
            words: vec![0; universe.div_ceil(64)],
        }
    }

    pub fn from_ids(universe: usize, ids: impl IntoIterator<Item = PropId>) -> PropSet {
        let mut s = PropSet::new(universe);
        for p in ids {
            s.insert(p);
        }
        s
    }

    pub fn contains(&self, p: PropId) -> bool {
        let i = p.index();
        self.words
            .get(i / 64)
            .is_some_and(|w| w & (1u64 << (i % 64)) != 0)
    }

    pub fn insert(&mut self, p: PropId) -> bool {
        let i = p.index();
        if i / 64 >= self.words.len() {
            self.words.resize(i / 64 + 1, 0);
        }
        let had = self.contains(p);
        self.words[i / 64] |= 1u64 << (i % 64);
        !had
    }

    pub fn remove(&mut self, p: PropId) -> bool {
        let i = p.index();
        let had = self.contains(p);
        if had {
            self.words[i / 64] &= !(1u64 << (i % 64));
        }
        had
    }

    pub fn contains_all(&self, ids: &[PropId]) -> bool {
        ids.iter().all(|&p| self.contains(p))
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = PropId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64)
                .filter(move |b| w & (1u64 << b) != 0)
                .map(move |b| PropId((wi * 64 + b) as u32))
        })
    }
}

impl fmt::Debug for PropSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|p| p.0)).finish()
    }
}

/// A ground durative action with classified conditions and effects.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DurativeAction {
    pub name: String,
    pub params: Vec<String>,
    pub dur: Time,
    pub s_cond: Vec<PropId>,
    pub e_cond: Vec<PropId>,
    pub inv: Vec<PropId>,
    pub s_add: Vec<PropId>,
    pub s_del: Vec<PropId>,
    pub e_add: Vec<PropId>,
    pub e_del: Vec<PropId>,
}

impl DurativeAction {
    /// All conditions regardless of when they are checked.
    pub fn conditions(&self) -> impl Iterator<Item = PropId> + '_ {
        self.s_cond.iter().chain(&self.inv).chain(&self.e_cond).copied()
    }

    /// Conditions the action cannot supply itself: invariants and end
    /// conditions that its own start effects add are left out.
    pub fn requirements(&self) -> impl Iterator<Item = PropId> + '_ {
        self.s_cond.iter().copied().chain(self.late_requirements())
    }

    /// Invariants and end conditions among the requirements. Only the end
    /// effects wait for them: other actions starting at the same time may
    /// supply the invariants.
    pub fn late_requirements(&self) -> impl Iterator<Item = PropId> + '_ {
        let external = |p: &&PropId| !self.s_add.contains(p);
        self.inv.iter().chain(&self.e_cond).filter(external).copied()
    }

    pub fn adds(&self) -> impl Iterator<Item = PropId> + '_ {
        self.s_add.iter().chain(&self.e_add).copied()
    }

    pub fn deletes(&self) -> impl Iterator<Item = PropId> + '_ {
        self.s_del.iter().chain(&self.e_del).copied()
    }

    pub fn achieves(&self, p: PropId) -> bool {
        self.s_add.contains(&p) || self.e_add.contains(&p)
    }

    pub fn label(&self) -> String {
        let mut s = format!("({}", self.name);
        for p in &self.params {
            s.push(' ');
            s.push_str(p);
        }
        s.push(')');
        s
    }
}

/// A timed initial literal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Til {
    pub time: Time,
    pub positive: bool,
    pub prop: PropId,
}

/// A deadline `(p, t)`: `p` must be achieved no later than `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Deadline {
    pub prop: PropId,
    pub time: Time,
}

/// Default separation constant between causally linked end points.
pub fn default_epsilon() -> Time {
    Time::new(1, 1000)
}

/// A fully grounded temporal planning task.
#[derive(Clone, Debug)]
pub struct GroundedTask {
    pub props: Vec<Proposition>,
    pub actions: Vec<DurativeAction>,
    pub init: PropSet,
    pub tils: Vec<Til>,
    pub goals: Vec<PropId>,
    pub deadlines: Vec<Deadline>,
    pub constraints: Vec<TrajectoryConstraint>,
    pub upper_bound: Time,
    pub epsilon: Time,
    index: HashMap<Proposition, PropId>,
    achievers: Vec<Vec<ActionId>>,
    consumers: Vec<Vec<ActionId>>,
    /// Distinct conditions per action.
    cond_counts: Vec<(u32, u32)>,
}

impl PartialEq for GroundedTask {
    fn eq(&self, other: &Self) -> bool {
        self.props == other.props
            && self.actions == other.actions
            && self.init == other.init
            && self.tils == other.tils
            && self.goals == other.goals
            && self.deadlines == other.deadlines
            && self.constraints == other.constraints
            && self.upper_bound == other.upper_bound
            && self.epsilon == other.epsilon
    }
}

/// Builder input for [`GroundedTask::new`], keyed by proposition values.
#[derive(Clone, Debug, Default)]
pub struct TaskSpec {
    pub actions: Vec<ActionSpec>,
    pub init: Vec<Proposition>,
    pub tils: Vec<(Time, bool, Proposition)>,
    pub goals: Vec<Proposition>,
    pub deadlines: Vec<(Proposition, Time)>,
    pub constraints: Vec<crate::trajectory::ConstraintSpec>,
    pub upper_bound: Option<Time>,
    pub epsilon: Option<Time>,
}

#[derive(Clone, Debug, Default)]
pub struct ActionSpec {
    pub name: String,
    pub params: Vec<String>,
    pub dur: Time,
    pub s_cond: Vec<Proposition>,
    pub e_cond: Vec<Proposition>,
    pub inv: Vec<Proposition>,
    pub s_add: Vec<Proposition>,
    pub s_del: Vec<Proposition>,
    pub e_add: Vec<Proposition>,
    pub e_del: Vec<Proposition>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaskError {
    #[error("action {0} has non-positive duration")]
    NonPositiveDuration(String),
    #[error("action {action} both adds and deletes {prop} at the same end point")]
    ContradictoryEffects { action: String, prop: String },
    #[error("no upper bound: the task has no deadlines and no override was given")]
    NoUpperBound,
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
}

impl GroundedTask {
    /// Interns every proposition mentioned in `spec` and builds the task.
    ///
    /// Propositions and actions are sorted, so the result does not depend on
    /// the order of the input lists.
    pub fn new(spec: TaskSpec) -> Result<GroundedTask, TaskError> {
        let mut all: Vec<Proposition> = Vec::new();
        for a in &spec.actions {
            for list in [&a.s_cond, &a.e_cond, &a.inv, &a.s_add, &a.s_del, &a.e_add, &a.e_del] {
                all.extend(list.iter().cloned());
            }
        }
        all.extend(spec.init.iter().cloned());
        all.extend(spec.tils.iter().map(|t| t.2.clone()));
        all.extend(spec.goals.iter().cloned());
        all.extend(spec.deadlines.iter().map(|d| d.0.clone()));
        for c in &spec.constraints {
            all.extend(c.props().cloned());
        }
        all.sort();
        all.dedup();
        let index: HashMap<Proposition, PropId> = all
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), PropId(i as u32)))
            .collect();
        let ids = |list: &[Proposition]| -> Vec<PropId> {
            let mut v: Vec<PropId> = list.iter().map(|p| index[p]).collect();
            v.sort();
            v.dedup();
            v
        };

        let mut actions = Vec::with_capacity(spec.actions.len());
        for a in &spec.actions {
            if a.dur <= Time::ZERO {
                return Err(TaskError::NonPositiveDuration(a.name.clone()));
            }
            let act = DurativeAction {
                name: a.name.to_ascii_lowercase(),
                params: a.params.iter().map(|p| p.to_ascii_lowercase()).collect(),
                dur: a.dur,
                s_cond: ids(&a.s_cond),
                e_cond: ids(&a.e_cond),
                inv: ids(&a.inv),
                s_add: ids(&a.s_add),
                s_del: ids(&a.s_del),
                e_add: ids(&a.e_add),
                e_del: ids(&a.e_del),
            };
            for (adds, dels) in [(&act.s_add, &act.s_del), (&act.e_add, &act.e_del)] {
                if let Some(p) = adds.iter().find(|p| dels.contains(p)) {
                    return Err(TaskError::ContradictoryEffects {
                        action: act.label(),
                        prop: all[p.index()].to_string(),
                    });
                }
            }
            actions.push(act);
        }
        actions.sort_by(|a, b| (&a.name, &a.params).cmp(&(&b.name, &b.params)));
        actions.dedup_by(|a, b| a.name == b.name && a.params == b.params);

        let n = all.len();
        let init = PropSet::from_ids(n, spec.init.iter().map(|p| index[p]));
        let mut tils: Vec<Til> = spec
            .tils
            .iter()
            .map(|(t, pos, p)| Til {
                time: *t,
                positive: *pos,
                prop: index[p],
            })
            .collect();
        tils.sort_by_key(|a| (a.time, a.prop, a.positive));
        let goals = ids(&spec.goals);
        let mut deadlines: Vec<Deadline> = spec
            .deadlines
            .iter()
            .map(|(p, t)| Deadline {
                prop: index[p],
                time: *t,
            })
            .collect();
        let mut constraints = Vec::new();
        for c in &spec.constraints {
            let c = c.resolve(&index)?;
            if let Some(d) = c.deadline() {
                deadlines.push(d);
            }
            constraints.push(c);
        }
        // Given deadlines are checked like the within constraints they stand for.
        for d in &deadlines {
            let c = crate::trajectory::Constraint::unary(crate::trajectory::Modality::Within(d.time), d.prop);
            if !constraints.contains(&c) {
                constraints.push(c);
            }
        }
        deadlines.sort();
        deadlines.dedup();

        let upper_bound = match spec.upper_bound {
            Some(t) => t,
            None => deadlines
                .iter()
                .map(|d| d.time)
                .max()
                .ok_or(TaskError::NoUpperBound)?,
        };

        let mut achievers = vec![Vec::new(); n];
        for (i, a) in actions.iter().enumerate() {
            for p in a.adds() {
                if !achievers[p.index()].contains(&ActionId(i as u32)) {
                    achievers[p.index()].push(ActionId(i as u32));
                }
            }
        }

        let mut consumers: Vec<Vec<ActionId>> = vec![Vec::new(); all.len()];
        let mut cond_counts = vec![(0u32, 0u32); actions.len()];
        for (i, a) in actions.iter().enumerate() {
            for p in a.requirements() {
                if consumers[p.index()].last() != Some(&ActionId(i as u32)) {
                    consumers[p.index()].push(ActionId(i as u32));
                    cond_counts[i].1 += 1;
                }
            }
            let mut start = a.s_cond.clone();
            start.sort();
            start.dedup();
            cond_counts[i].0 = start.len() as u32;
        }

        Ok(GroundedTask {
            props: all,
            actions,
            init,
            tils,
            goals,
            deadlines,
            constraints,
            upper_bound,
            epsilon: spec.epsilon.unwrap_or_else(default_epsilon),
            index,
            achievers,
            consumers,
            cond_counts,
        })
    }

    pub fn num_props(&self) -> usize {
        self.props.len()
    }

    pub fn prop(&self, id: PropId) -> &Proposition {
        &self.props[id.index()]
    }

    pub fn prop_id(&self, p: &Proposition) -> Option<PropId> {
        self.index.get(p).copied()
    }

    /// Looks up a proposition written as `(pred arg ...)`.
    pub fn lookup(&self, text: &str) -> Option<PropId> {
        self.prop_id(&Proposition::parse(text)?)
    }

    pub fn action(&self, id: ActionId) -> &DurativeAction {
        &self.actions[id.index()]
    }

    pub fn action_ids(&self) -> impl Iterator<Item = ActionId> {
        (0..self.actions.len() as u32).map(ActionId)
    }

    pub fn find_action(&self, name: &str, params: &[&str]) -> Option<ActionId> {
        let name = name.to_ascii_lowercase();
        self.actions
            .iter()
            .position(|a| {
                a.name == name
                    && a.params.len() == params.len()
                    && a.params.iter().zip(params).all(|(x, y)| x.eq_ignore_ascii_case(y))
            })
            .map(|i| ActionId(i as u32))
    }

    /// Actions that add `p` at their start or end.
    pub fn achievers(&self, p: PropId) -> &[ActionId] {
        &self.achievers[p.index()]
    }

    /// Actions with `p` among their start, invariant or end conditions.
    pub fn consumers(&self, p: PropId) -> &[ActionId] {
        &self.consumers[p.index()]
    }

    /// Distinct start conditions and distinct requirements of `a`.
    pub(crate) fn condition_count(&self, a: ActionId) -> (u32, u32) {
        self.cond_counts[a.index()]
    }

    pub fn deadline_of(&self, p: PropId) -> Option<Time> {
        self.deadlines.iter().filter(|d| d.prop == p).map(|d| d.time).min()
    }

    pub fn empty_set(&self) -> PropSet {
        PropSet::new(self.num_props())
    }

    pub fn show(&self, p: PropId) -> String {
        self.prop(p).to_string()
    }

    /// Returns a copy with a different plan-horizon bound.
    pub fn with_upper_bound(&self, bound: Time) -> GroundedTask {
        GroundedTask {
            upper_bound: bound,
            ..self.clone()
        }
    }
}

/// One `(a, t)` pair of a temporal plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanStep {
    pub action: ActionId,
    pub start: Time,
}

/// A temporal plan: ground actions with start times.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TemporalPlan {
    steps: Vec<PlanStep>,
}

impl TemporalPlan {
    /// Sorts by start time, then by action name and arguments.
    pub fn new(task: &GroundedTask, mut steps: Vec<PlanStep>) -> TemporalPlan {
        steps.sort_by(|a, b| {
            let (x, y) = (task.action(a.action), task.action(b.action));
            (a.start, &x.name, &x.params).cmp(&(b.start, &y.name, &y.params))
        });
        TemporalPlan { steps }
    }

    pub fn steps(&self) -> &[PlanStep] {
        &self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    /// `max (t + dur(a))` over all steps; zero for the empty plan.
    pub fn makespan(&self, task: &GroundedTask) -> Time {
        self.steps
            .iter()
            .map(|s| s.start + task.action(s.action).dur)
            .max()
            .unwrap_or(Time::ZERO)
    }

    /// IPC plan format: `t: (action args) [duration]`, one step per line.
    pub fn to_ipc(&self, task: &GroundedTask) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let a = task.action(s.action);
            out.push_str(&format!("{}: {} [{}]\n", s.start, a.label(), a.dur));
        }
        out
    }

    /// Parses the IPC plan format. Blank lines and `;` comments are skipped.
    pub fn parse_ipc(task: &GroundedTask, text: &str) -> Result<TemporalPlan, PlanParseError> {
        let mut steps = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split(';').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| PlanParseError {
                line: lineno + 1,
                message: msg.to_string(),
            };
            let (time, rest) = line.split_once(':').ok_or_else(|| err("expected `time:`"))?;
            let start: Time = time.trim().parse().map_err(|_| err("bad start time"))?;
            let open = rest.find('(').ok_or_else(|| err("expected `(`"))?;
            let close = rest.find(')').ok_or_else(|| err("expected `)`"))?;
            let words: Vec<&str> = rest[open + 1..close].split_whitespace().collect();
            let (name, params) = words.split_first().ok_or_else(|| err("empty action"))?;
            let id = task
                .find_action(name, params)
                .ok_or_else(|| err(&format!("unknown action {}", &rest[open..=close])))?;
            if let Some(b) = rest[close..].find('[') {
                let tail = &rest[close + b + 1..];
                let end = tail.find(']').ok_or_else(|| err("expected `]`"))?;
                let dur: Time = tail[..end].trim().parse().map_err(|_| err("bad duration"))?;
                if dur != task.action(id).dur {
                    return Err(err("duration does not match the action"));
                }
            }
            steps.push(PlanStep { action: id, start });
        }
        Ok(TemporalPlan::new(task, steps))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("plan line {line}: {message}")]
pub struct PlanParseError {
    pub line: usize,
    pub message: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Proposition {
        Proposition::parse(s).unwrap()
    }

    fn tiny() -> GroundedTask {
        GroundedTask::new(TaskSpec {
            actions: vec![ActionSpec {
                name: "move".into(),
                params: vec!["a".into(), "b".into()],
                dur: Time::from_int(3),
                s_cond: vec![p("(at a)")],
                s_del: vec![p("(at a)")],
                e_add: vec![p("(at b)")],
                ..Default::default()
            }],
            init: vec![p("(at a)")],
            goals: vec![p("(at b)")],
            upper_bound: Some(Time::from_int(10)),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn propset_basics() {
        let mut s = PropSet::new(70);
        assert!(s.insert(PropId(3)));
        assert!(!s.insert(PropId(3)));
        assert!(s.insert(PropId(65)));
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![PropId(3), PropId(65)]);
        assert!(s.remove(PropId(3)));
        assert_eq!(s.len(), 1);
        assert!(!s.contains(PropId(200)));
    }

    #[test]
    fn proposition_round_trips_through_display() {
        let q = Proposition::new("AT", &["T0", "D3"]);
        assert_eq!(q.to_string(), "(at t0 d3)");
        assert_eq!(Proposition::parse(&q.to_string()), Some(q));
    }

    #[test]
    fn rejects_zero_duration_and_contradictions() {
        let mut spec = TaskSpec {
            actions: vec![ActionSpec {
                name: "x".into(),
                dur: Time::ZERO,
                ..Default::default()
            }],
            upper_bound: Some(Time::from_int(1)),
            ..Default::default()
        };
        assert!(matches!(GroundedTask::new(spec.clone()), Err(TaskError::NonPositiveDuration(_))));
        spec.actions[0].dur = Time::from_int(1);
        spec.actions[0].e_add = vec![p("(q)")];
        spec.actions[0].e_del = vec![p("(q)")];
        assert!(matches!(GroundedTask::new(spec), Err(TaskError::ContradictoryEffects { .. })));
    }

    #[test]
    fn upper_bound_needs_deadline_or_override() {
        let spec = TaskSpec {
            goals: vec![p("(g)")],
            ..Default::default()
        };
        assert_eq!(GroundedTask::new(spec).unwrap_err(), TaskError::NoUpperBound);
    }

    #[test]
    fn ipc_plan_round_trip() {
        let task = tiny();
        let plan = TemporalPlan::new(
            &task,
            vec![PlanStep {
                action: ActionId(0),
                start: Time::new(1, 2),
            }],
        );
        let text = plan.to_ipc(&task);
        assert_eq!(text, "1/2: (move a b) [3]\n");
        assert_eq!(TemporalPlan::parse_ipc(&task, &text).unwrap(), plan);
        assert_eq!(plan.makespan(&task), Time::new(7, 2));
        assert!(TemporalPlan::parse_ipc(&task, "0: (fly a b)").is_err());
        assert!(TemporalPlan::parse_ipc(&task, "0: (move a b) [4]").is_err());
    }
}
