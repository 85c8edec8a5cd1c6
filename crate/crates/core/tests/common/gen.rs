//! Seeded random generators for trajectories, graphs and small tasks.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tlplan::execution::{Happening, StateTrajectory};
use tlplan::model::{ActionSpec, PropSet, TaskSpec};
use tlplan::tlg::{EdgeKind, MutexPair, TemporalLandmark, Tlg};
use tlplan::trajectory::{Constraint, ConstraintSpec, Modality, TrajectoryConstraint};
use tlplan::{GroundedTask, PropId, Proposition, Time};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Integers most of the time, halves now and then.
fn time(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Time {
    let whole = rng.gen_range(lo..=hi);
    if rng.gen_bool(0.2) && whole < hi {
        Time::new(2 * whole + 1, 2)
    } else {
        Time::from_int(whole)
    }
}

/// A trajectory of 1 to 4 happenings over `props` propositions.
pub fn trajectory(rng: &mut ChaCha8Rng, props: usize) -> StateTrajectory {
    let n = rng.gen_range(1..=4);
    let mut t = Time::ZERO;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            t = t + time(rng, 0, 4).max(Time::new(1, 2));
        }
        let state = PropSet::from_ids(props, (0..props as u32).filter(|_| rng.gen_bool(0.5)).map(PropId));
        out.push(Happening { time: t, state });
    }
    StateTrajectory::new(out)
}

/// The ten standard operators with arguments near typical happening times.
pub fn standard_ops(rng: &mut ChaCha8Rng) -> [Modality; 10] {
    let d = time(rng, 0, 10);
    let u1 = time(rng, 0, 8);
    let u2 = u1 + time(rng, 0, 6).max(Time::new(1, 2));
    let h = time(rng, 0, 10);
    [
        Modality::AtEnd,
        Modality::Always,
        Modality::AtMostOnce,
        Modality::Sometime,
        Modality::Within(d),
        Modality::AlwaysWithin(d),
        Modality::SometimeAfter,
        Modality::SometimeBefore,
        Modality::HoldDuring(u1, u2),
        Modality::HoldAfter(h),
    ]
}

pub fn constraint_over(rng: &mut ChaCha8Rng, op: Modality, props: usize) -> TrajectoryConstraint {
    let phi = PropId(rng.gen_range(0..props as u32));
    if op.is_binary() {
        Constraint::binary(op, phi, PropId(rng.gen_range(0..props as u32)))
    } else {
        Constraint::unary(op, phi)
    }
}

/// A graph with up to 20 landmarks, 40 edges and a few mutex pairs. Edges
/// usually follow a random topological order; some graphs get a back edge.
pub fn tlg(rng: &mut ChaCha8Rng) -> Tlg {
    let horizon = Time::from_int(rng.gen_range(10..=40));
    let mut g = Tlg::new(Time::ZERO, horizon);
    let n = rng.gen_range(1..=20);
    for i in 0..n {
        let min_g = time(rng, 0, 12);
        let mut node = TemporalLandmark::new(PropId(i as u32), format!("(l{i})"), min_g, horizon);
        if rng.gen_bool(0.2) {
            node.gen.hi = time(rng, 0, 40).min(horizon);
        }
        if rng.gen_bool(0.1) {
            node.ceiling = Some(time(rng, 0, 30));
        }
        g.add_node(node);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let edges = if n > 1 { rng.gen_range(0..=40) } else { 0 };
    for _ in 0..edges {
        let (x, y) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if x == y {
            continue;
        }
        let (a, b) = if rng.gen_bool(0.05) { (order[x.max(y)], order[x.min(y)]) } else { (order[x.min(y)], order[x.max(y)]) };
        if g.has_edge(a, b) {
            continue;
        }
        let kind = [EdgeKind::Necessary, EdgeKind::Dependency, EdgeKind::Constraint][rng.gen_range(0..3)];
        let dist = time(rng, 0, 12);
        g.add_edge(a, b, kind, dist);
    }
    let pairs = if n > 1 { rng.gen_range(0..=4) } else { 0 };
    for _ in 0..pairs {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a == b || g.are_mutex(a, b) {
            continue;
        }
        let (a, b) = (a.min(b), a.max(b));
        g.mutexes.push(MutexPair {
            a,
            b,
            sep_ab: time(rng, 0, 10),
            sep_ba: time(rng, 0, 10),
        });
    }
    g
}

/// Renumbers the nodes of `g` by `perm` (old index `i` becomes `perm[i]`)
/// and shuffles the edge and mutex lists.
pub fn permuted(g: &Tlg, perm: &[usize], rng: &mut ChaCha8Rng) -> Tlg {
    let mut out = Tlg::new(g.origin, g.horizon);
    let mut nodes: Vec<Option<TemporalLandmark>> = vec![None; g.nodes.len()];
    for (i, n) in g.nodes.iter().enumerate() {
        nodes[perm[i]] = Some(n.clone());
    }
    out.nodes = nodes.into_iter().map(|n| n.unwrap()).collect();
    let mut edges = g.edges.clone();
    for e in &mut edges {
        e.from = perm[e.from];
        e.to = perm[e.to];
    }
    edges.shuffle(rng);
    out.edges = edges;
    let mut mutexes = g.mutexes.clone();
    for m in &mut mutexes {
        let (a, b) = (perm[m.a], perm[m.b]);
        *m = if a < b {
            MutexPair { a, b, ..*m }
        } else {
            MutexPair {
                a: b,
                b: a,
                sep_ab: m.sep_ba,
                sep_ba: m.sep_ab,
            }
        };
    }
    mutexes.shuffle(rng);
    out.mutexes = mutexes;
    out
}

fn prop(i: usize) -> Proposition {
    // Three object "types" with up to three objects each keep names short.
    Proposition::new(["at", "free", "done"][i % 3], &[format!("o{}", i / 3)])
}

/// Between `lo` and `hi` distinct indices below `n`.
fn pick(rng: &mut ChaCha8Rng, n: usize, lo: usize, hi: usize) -> Vec<usize> {
    let k = rng.gen_range(lo..=hi);
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    all.truncate(k);
    all
}

/// A random task with at most 5 propositions, 5 actions, one timed literal,
/// two goals, one deadline, two standard constraints and a horizon of at
/// most 16.
pub fn task(rng: &mut ChaCha8Rng) -> GroundedTask {
    loop {
        let n = rng.gen_range(3..=5);
        let props = |ids: Vec<usize>| ids.into_iter().map(prop).collect::<Vec<_>>();
        let mut actions = Vec::new();
        for k in 0..rng.gen_range(2..=5) {
            let s_cond = pick(rng, n, 1, 2);
            let inv = pick(rng, n, 0, 1);
            let e_cond = if rng.gen_bool(0.25) { pick(rng, n, 1, 1) } else { vec![] };
            let s_del: Vec<usize> = s_cond.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
            let s_add: Vec<usize> = pick(rng, n, 0, 1).into_iter().filter(|p| !s_del.contains(p)).collect();
            let e_add = pick(rng, n, 1, 2);
            let e_del: Vec<usize> = pick(rng, n, 0, 1).into_iter().filter(|p| !e_add.contains(p)).collect();
            actions.push(ActionSpec {
                name: format!("act{k}"),
                params: vec![],
                dur: time(rng, 1, 5),
                s_cond: props(s_cond),
                e_cond: props(e_cond),
                inv: props(inv),
                s_add: props(s_add),
                s_del: props(s_del),
                e_add: props(e_add),
                e_del: props(e_del),
            });
        }
        let horizon = Time::from_int(rng.gen_range(6..=16));
        let init = props(pick(rng, n, 1, 2));
        let mut tils = Vec::new();
        if rng.gen_bool(0.3) {
            tils.push((Time::from_int(rng.gen_range(1..=horizon.numer())), rng.gen_bool(0.6), prop(rng.gen_range(0..n))));
        }
        let goals = props(pick(rng, n, 1, 2));
        let mut deadlines = Vec::new();
        if rng.gen_bool(0.2) {
            deadlines.push((goals[0].clone(), time(rng, 1, horizon.numer())));
        }
        let mut constraints: Vec<ConstraintSpec> = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            let ops = standard_ops(rng);
            let op = ops[rng.gen_range(0..ops.len())];
            let c = constraint_over(rng, op, n);
            constraints.push(c.map(|p| prop(p.index())));
        }
        let spec = TaskSpec {
            actions,
            init,
            tils,
            goals,
            deadlines,
            constraints,
            upper_bound: Some(horizon),
            epsilon: None,
        };
        if let Ok(t) = GroundedTask::new(spec) {
            if t.upper_bound <= horizon {
                return t;
            }
        }
    }
}
