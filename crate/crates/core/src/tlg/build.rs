//! Building a propagated landmark graph for a task or for the remainder of a
//! partial plan.

use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;

use super::*;
use crate::landmarks::{constraint_landmarks, LandmarkEngine, LandmarkSet, Ordering, OrderingKind, Residual};
use crate::model::{GroundedTask, PropId};
use crate::trajectory::Modality;
use crate::trpg::{RelaxedStart, TemporalRPG};

pub use crate::landmarks::compute_distance;

/// Result of [`TlgBuilder::build`].
#[derive(Clone, Debug)]
pub struct BuildOutcome {
    pub landmarks: LandmarkSet,
    /// Final structure with freshly initialised intervals.
    pub initial: Tlg,
    /// The same graph after propagation.
    pub tlg: Tlg,
    pub consistency: Consistency,
    /// Landmarks that must hold in some happening state, not just for an
    /// instant between the two phases of a time point.
    pub visible: Vec<PropId>,
}

impl BuildOutcome {
    fn failed(landmarks: LandmarkSet, tlg: Tlg, witness: Witness) -> BuildOutcome {
        BuildOutcome {
            landmarks,
            initial: tlg.clone(),
            tlg,
            consistency: Consistency::Inconsistent(witness),
            visible: Vec::new(),
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.consistency.is_consistent()
    }

    pub fn is_visible(&self, p: PropId) -> bool {
        self.visible.contains(&p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    /// Try both orders of unordered mutex landmarks and keep the only
    /// consistent one.
    pub probe: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { probe: true }
    }
}

/// Shared per-task data: the mutex relation and a cache of separations.
pub struct TlgBuilder<'a> {
    task: &'a GroundedTask,
    pub mutex: MutexRelation,
    seps: Mutex<HashMap<(PropId, PropId), Option<Time>>>,
    pub options: BuildOptions,
    /// Position of each proposition in label order.
    rank: Vec<u32>,
}

/// Initial intervals for the landmarks of the whole task.
pub fn init_tlg(task: &GroundedTask, lms: &LandmarkSet, trpg: &TemporalRPG) -> Result<Tlg, TlgError> {
    let res = Residual::root(task);
    let mut g = Tlg::new(res.origin, res.horizon);
    for &p in &lms.landmarks {
        g.add_node(init_node(task, &res, trpg, p)?);
    }
    for o in &lms.orderings {
        if let (Some(a), Some(b)) = (g.find_prop(o.from), g.find_prop(o.to)) {
            g.add_edge(a, b, edge_kind(o.kind), o.dist);
        }
    }
    Ok(g)
}

fn edge_kind(k: OrderingKind) -> EdgeKind {
    match k {
        OrderingKind::Necessary => EdgeKind::Necessary,
        OrderingKind::Dependency => EdgeKind::Dependency,
    }
}

fn init_node(task: &GroundedTask, res: &Residual, trpg: &TemporalRPG, p: PropId) -> Result<TemporalLandmark, TlgError> {
    let label = task.show(p);
    let max_g = res.deadline_of(p).map_or(res.horizon, |d| d.min(res.horizon));
    let Some(min_g) = trpg.earliest_time(p) else {
        return Err(TlgError::InfeasibleLandmark {
            landmark: label,
            min_g: res.horizon + Time::from_int(1),
            max_g,
        });
    };
    if min_g > max_g {
        return Err(TlgError::InfeasibleLandmark { landmark: label, min_g, max_g });
    }
    let mut n = TemporalLandmark::new(p, label, min_g, res.horizon);
    n.gen.hi = max_g;
    Ok(n)
}

fn witness_of(e: TlgError) -> Witness {
    match e {
        TlgError::InfeasibleLandmark { landmark, min_g, max_g } => Witness {
            landmark,
            relation: "min_g > max_g".into(),
            lhs: min_g,
            rhs: max_g,
            chain: vec![],
        },
        other => Witness {
            landmark: String::new(),
            relation: other.to_string(),
            lhs: Time::ZERO,
            rhs: Time::ZERO,
            chain: vec![],
        },
    }
}

impl<'a> TlgBuilder<'a> {
    pub fn new(task: &'a GroundedTask) -> TlgBuilder<'a> {
        let mut by_label: Vec<PropId> = (0..task.num_props() as u32).map(PropId).collect();
        by_label.sort_by_cached_key(|&p| task.show(p));
        let mut rank = vec![0; by_label.len()];
        for (i, p) in by_label.into_iter().enumerate() {
            rank[p.index()] = i as u32;
        }
        TlgBuilder {
            task,
            mutex: compute_mutex(task),
            seps: Mutex::new(HashMap::new()),
            options: BuildOptions::default(),
            rank,
        }
    }

    pub fn with_options(mut self, options: BuildOptions) -> TlgBuilder<'a> {
        self.options = options;
        self
    }

    pub fn task(&self) -> &GroundedTask {
        self.task
    }

    /// Least time between the end of a block of `from` and the start of a
    /// later block of the mutex proposition `to`. `None` if `to` can never
    /// follow `from`.
    pub fn separation(&self, from: PropId, to: PropId) -> Option<Time> {
        if let Some(&d) = self.seps.lock().unwrap().get(&(from, to)) {
            return d;
        }
        let task = self.task;
        // Everything that can coexist with `from` may already hold, and any
        // action that can run alongside it may be about to finish.
        let mut facts: Vec<(PropId, Time)> = (0..task.num_props() as u32)
            .map(PropId)
            .filter(|&q| !self.mutex.are_mutex(from, q))
            .map(|q| (q, Time::ZERO))
            .collect();
        facts.extend(task.tils.iter().filter(|t| t.positive).map(|t| (t.prop, Time::ZERO)));
        for a in task.action_ids() {
            if !self.mutex.running_mutex(a, from) {
                facts.extend(task.action(a).e_add.iter().map(|&q| (q, Time::ZERO)));
            }
        }
        let g = TemporalRPG::build_from(
            task,
            &RelaxedStart {
                t0: Time::ZERO,
                facts,
                banned: task.empty_set(),
                disabled: Vec::new(),
            },
        );
        let d = g.earliest_time(to);
        self.seps.lock().unwrap().insert((from, to), d);
        d
    }

    /// Separation used in the graph: unreachable means "later than any plan
    /// could tolerate".
    fn sep(&self, res: &Residual, from: PropId, to: PropId) -> Time {
        self.separation(from, to)
            .unwrap_or_else(|| res.horizon - res.origin + Time::from_int(1))
    }

    fn assemble(&self, res: &Residual, trpg: &TemporalRPG, lms: &LandmarkSet, extra: &[(PropId, PropId, Time)]) -> Result<Tlg, TlgError> {
        let mut g = Tlg::new(res.origin, res.horizon);
        let mut props = lms.landmarks.clone();
        props.sort_by_key(|&p| self.rank[p.index()]);
        for &p in &props {
            g.add_node(init_node(self.task, res, trpg, p)?);
        }
        for o in &lms.orderings {
            if let (Some(a), Some(b)) = (g.find_prop(o.from), g.find_prop(o.to)) {
                g.add_edge(a, b, edge_kind(o.kind), o.dist);
            }
        }
        for &(from, to, d) in extra {
            if let (Some(a), Some(b)) = (g.find_prop(from), g.find_prop(to)) {
                g.add_edge(a, b, EdgeKind::Dependency, d);
            }
        }
        for i in 0..g.nodes.len() {
            for j in (i + 1)..g.nodes.len() {
                let (p, q) = (g.nodes[i].prop, g.nodes[j].prop);
                if self.mutex.are_mutex(p, q) {
                    g.mutexes.push(MutexPair {
                        a: i,
                        b: j,
                        sep_ab: self.sep(res, p, q),
                        sep_ba: self.sep(res, q, p),
                    });
                }
            }
        }
        Ok(g)
    }

    /// Landmarks that some plan could hold only transiently are not
    /// visible. `p` is visible if it is a target that constraints observe in
    /// happening states, or if without the actions that need `p` over their
    /// whole execution some landmark is lost.
    fn visible(&self, engine: &LandmarkEngine, res: &Residual, observed: &BTreeSet<PropId>, bounds: &HashMap<PropId, Time>, p: PropId) -> bool {
        if observed.contains(&p) {
            return true;
        }
        let mut start = res.relaxed_start(self.task);
        start.disabled = self.task.actions.iter().map(|a| a.inv.contains(&p)).collect();
        let g = TemporalRPG::build_from(self.task, &start);
        engine
            .set
            .landmarks
            .iter()
            .filter(|&&l| !res.state.contains(l))
            .any(|&l| match (g.earliest_time(l), bounds.get(&l)) {
                (None, _) => true,
                (Some(t), Some(&b)) => t > b,
                _ => false,
            })
    }

    /// Builds, propagates and checks the graph for `res`.
    pub fn build(&self, res: &Residual) -> BuildOutcome {
        let task = self.task;
        let mut engine = LandmarkEngine::new(task, res.relaxed_start(task));
        let trpg = engine.base().clone();
        let empty = Tlg::new(res.origin, res.horizon);

        let mut observed: BTreeSet<PropId> = BTreeSet::new();
        let mut conditionals: Vec<(PropId, PropId)> = Vec::new();
        let mut watch: BTreeSet<PropId> = BTreeSet::new();
        let mut required: Vec<PropId> = res.targets.clone();
        required.extend(res.deadlines.iter().map(|d| d.0));
        for c in &res.constraints {
            let (new, cond) = constraint_landmarks(c);
            required.extend(&new);
            observed.extend(new);
            if let Some(pair) = cond {
                conditionals.push(pair);
                watch.insert(pair.0);
            }
            if c.op == Modality::AtMostOnce {
                watch.insert(c.phi);
            }
        }
        observed.extend(res.targets.iter().copied());
        observed.extend(res.deadlines.iter().map(|d| d.0));
        for p in res.state.iter() {
            engine.set.insert(p);
        }
        for &p in &required {
            if engine.require(p).is_err() {
                return BuildOutcome::failed(engine.set.clone(), empty, unreachable_witness(task, res, p));
            }
        }

        let mut bounds: HashMap<PropId, Time> = HashMap::new();
        let mut extra: Vec<(PropId, PropId, Time)> = Vec::new();
        let mut rounds = 0;
        let (lms, mut tlg) = loop {
            rounds += 1;
            let bound = |p: PropId| bounds.get(&p).copied();
            let lms = LandmarkSet {
                landmarks: engine.set.landmarks.clone(),
                orderings: engine.orderings(&bound),
            };
            let mut g = match self.assemble(res, &trpg, &lms, &extra) {
                Ok(g) => g,
                Err(e) => return BuildOutcome::failed(lms, empty, witness_of(e)),
            };
            if let Consistency::Inconsistent(w) = g.propagate_and_check() {
                return BuildOutcome::failed(lms, g, w);
            }
            let new_bounds: HashMap<PropId, Time> = g.nodes.iter().map(|n| (n.prop, n.gen.hi)).collect();
            let mut changed = new_bounds != bounds;
            bounds = new_bounds;
            let bound = |p: PropId| bounds.get(&p).copied();
            changed |= engine.grow(&bound);
            for &(phi, psi) in &conditionals {
                if engine.set.contains(phi) && !engine.set.contains(psi) && self.visible(&engine, res, &observed, &bounds, phi) {
                    if engine.require(psi).is_err() {
                        return BuildOutcome::failed(lms, g, unreachable_witness(task, res, psi));
                    }
                    observed.insert(psi);
                    changed = true;
                }
            }
            if changed && rounds < 4 * task.num_props() + 8 {
                continue;
            }
            if self.options.probe {
                match self.probe(&mut g) {
                    Err(w) => return BuildOutcome::failed(lms, g, w),
                    Ok(commits) if !commits.is_empty() && rounds < 4 * task.num_props() + 8 => {
                        for (a, b, d) in commits {
                            extra.push((g.nodes[a].prop, g.nodes[b].prop, d));
                        }
                        continue;
                    }
                    Ok(_) => {}
                }
            }
            break (lms, g);
        };

        // Rebuild from fresh intervals with the constraint structure.
        let mut g = match self.assemble(res, &trpg, &lms, &extra) {
            Ok(g) => g,
            Err(e) => return BuildOutcome::failed(lms, tlg, witness_of(e)),
        };
        self.compile_into(&mut g, res, &trpg);
        g.transitive_reduction();
        g.canonicalize();
        let initial = g.clone();
        let consistency = g.propagate_and_check();
        tlg = g;
        let visible = watch
            .into_iter()
            .filter(|&p| lms.contains(p) && self.visible(&engine, res, &observed, &bounds, p))
            .collect();
        BuildOutcome {
            landmarks: lms,
            initial,
            tlg,
            consistency,
            visible,
        }
    }

    /// Orders unordered mutex landmark pairs when only one order is
    /// consistent. Returns the committed edges, or the first witness when
    /// neither order works.
    fn probe(&self, g: &mut Tlg) -> Result<Vec<(usize, usize, Time)>, Witness> {
        let mut commits = Vec::new();
        let mut pairs: Vec<MutexPair> = g.mutexes.clone();
        pairs.sort_by(|x, y| {
            let kx = (&g.nodes[x.a].label, &g.nodes[x.b].label);
            let ky = (&g.nodes[y.a].label, &g.nodes[y.b].label);
            kx.cmp(&ky)
        });
        for m in pairs {
            let reach = g.reachability();
            if reach[m.a][m.b] || reach[m.b][m.a] {
                continue;
            }
            let attempt = |from: usize, to: usize, d: Time| {
                let mut h = g.clone();
                h.add_edge(from, to, EdgeKind::Dependency, d);
                h.propagate_and_check()
            };
            let ab = attempt(m.a, m.b, m.sep_ab);
            let ba = attempt(m.b, m.a, m.sep_ba);
            match (ab, ba) {
                (Consistency::Inconsistent(w), Consistency::Inconsistent(_)) => return Err(w),
                (Consistency::Inconsistent(_), Consistency::Consistent) => {
                    g.add_edge(m.b, m.a, EdgeKind::Dependency, m.sep_ba);
                    commits.push((m.b, m.a, m.sep_ba));
                    g.propagate();
                }
                (Consistency::Consistent, Consistency::Inconsistent(_)) => {
                    g.add_edge(m.a, m.b, EdgeKind::Dependency, m.sep_ab);
                    commits.push((m.a, m.b, m.sep_ab));
                    g.propagate();
                }
                _ => {}
            }
        }
        Ok(commits)
    }

    /// Applies the interval relations of the open constraints that hold for
    /// every plan, whatever happens between the phases of a time point.
    fn compile_into(&self, g: &mut Tlg, res: &Residual, trpg: &TemporalRPG) {
        for c in &res.constraints {
            let Some(l0) = g.find_prop(c.phi) else { continue };
            match c.op {
                Modality::AtEnd => {
                    if g.nodes.iter().any(|n| n.prop == c.phi && n.to_end) {
                        continue;
                    }
                    let has_partner = g.mutexes.iter().any(|m| m.a == l0 || m.b == l0);
                    g.nodes[l0].to_end = true;
                    if has_partner {
                        let min_g = trpg.earliest_time(c.phi).unwrap_or(res.origin);
                        g.add_last_block(l0, min_g);
                    }
                }
                Modality::Always => tighten_ceiling(&mut g.nodes[l0], res.origin),
                Modality::HoldDuring(u1, _) if res.origin <= u1 => tighten_ceiling(&mut g.nodes[l0], u1),
                _ => {}
            }
        }
    }
}

fn tighten_ceiling(n: &mut TemporalLandmark, c: Time) {
    n.ceiling = Some(n.ceiling.map_or(c, |old| old.min(c)));
}

fn unreachable_witness(task: &GroundedTask, res: &Residual, p: PropId) -> Witness {
    Witness {
        landmark: task.show(p),
        relation: "unreachable".into(),
        lhs: res.horizon,
        rhs: res.horizon,
        chain: vec![],
    }
}

/// Builds the propagated graph of a whole task.
pub fn build_tlg(task: &GroundedTask) -> BuildOutcome {
    TlgBuilder::new(task).build(&Residual::root(task))
}

/// Ordering records of a graph, by proposition.
pub fn orderings_of(g: &Tlg) -> Vec<Ordering> {
    g.edges
        .iter()
        .filter(|e| e.kind != EdgeKind::Constraint && g.nodes[e.from].occurrence == 0 && g.nodes[e.to].occurrence == 0)
        .map(|e| Ordering {
            from: g.nodes[e.from].prop,
            to: g.nodes[e.to].prop,
            kind: if e.kind == EdgeKind::Necessary {
                OrderingKind::Necessary
            } else {
                OrderingKind::Dependency
            },
            dist: e.dist,
        })
        .collect()
}
