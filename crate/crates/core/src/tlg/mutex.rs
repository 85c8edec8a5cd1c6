//! Static binary mutexes.
//!
//! Each durative action is split into a start and an end snap action linked by
//! a private "running" token. Pair reachability is then computed to a
//! fixpoint in the style of planning-graph mutexes: a pair is reachable if
//! some snap action can produce it from reachable pairs. Propositions whose
//! pair is never reached are mutex. Timed literals are treated as snap
//! actions with no conditions, which only adds reachable pairs.
//!
//! If an action could start again while already running, its token is not
//! deleted at the end, so overlapping instances stay over-approximated.

use serde::{Deserialize, Serialize};

use crate::model::{ActionId, GroundedTask, PropId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutexRelation {
    n: usize,
    words: usize,
    bits: Vec<u64>,
    /// Row per action: propositions that cannot hold while it runs.
    running: Vec<u64>,
}

impl MutexRelation {
    /// The relation in which nothing is mutex.
    pub fn empty(n: usize) -> MutexRelation {
        let words = n.div_ceil(64).max(1);
        MutexRelation {
            n,
            words,
            bits: vec![0; n * words],
            running: Vec::new(),
        }
    }

    /// True if `p` can never hold while an instance of `action` executes.
    pub fn running_mutex(&self, action: ActionId, p: PropId) -> bool {
        let (a, p) = (action.index(), p.index());
        p < self.n && (a + 1) * self.words <= self.running.len() && self.running[a * self.words + p / 64] >> (p % 64) & 1 == 1
    }

    pub fn are_mutex(&self, p: PropId, q: PropId) -> bool {
        let (p, q) = (p.index(), q.index());
        p < self.n && q < self.n && self.bits[p * self.words + q / 64] >> (q % 64) & 1 == 1
    }

    pub fn set(&mut self, p: PropId, q: PropId) {
        if p == q {
            return;
        }
        for (a, b) in [(p.index(), q.index()), (q.index(), p.index())] {
            self.bits[a * self.words + b / 64] |= 1 << (b % 64);
        }
    }

    /// All mutex partners of `p`.
    pub fn partners(&self, p: PropId) -> impl Iterator<Item = PropId> + '_ {
        (0..self.n as u32).map(PropId).filter(move |&q| self.are_mutex(p, q))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

struct Snap {
    pre: Vec<usize>,
    add: Vec<usize>,
    del: Vec<usize>,
}

struct Pairs {
    words: usize,
    rows: Vec<u64>,
}

impl Pairs {
    fn has(&self, a: usize, b: usize) -> bool {
        self.rows[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    fn add(&mut self, a: usize, b: usize) -> bool {
        if self.has(a, b) {
            return false;
        }
        self.rows[a * self.words + b / 64] |= 1 << (b % 64);
        self.rows[b * self.words + a / 64] |= 1 << (a % 64);
        true
    }

    fn all_with(&self, a: usize, set: &[usize]) -> bool {
        set.iter().all(|&b| self.has(a, b))
    }
}

/// Computes the mutex relation over the task's propositions.
pub fn compute_mutex(task: &GroundedTask) -> MutexRelation {
    let n = task.num_props();
    let m = task.actions.len();
    let total = n + m;
    let words = total.div_ceil(64).max(1);
    let mut r = Pairs {
        words,
        rows: vec![0; total * words],
    };

    let mut snaps: Vec<Snap> = Vec::new();
    for (i, a) in task.actions.iter().enumerate() {
        let token = n + i;
        let idx = |v: &[PropId]| v.iter().map(|p| p.index()).collect::<Vec<_>>();
        let mut add = idx(&a.s_add);
        add.push(token);
        snaps.push(Snap {
            pre: idx(&a.s_cond),
            add,
            del: idx(&a.s_del),
        });
        let mut pre = idx(&a.e_cond);
        pre.push(token);
        let mut del = idx(&a.e_del);
        del.push(token);
        snaps.push(Snap {
            pre,
            add: idx(&a.e_add),
            del,
        });
    }
    for til in &task.tils {
        let p = til.prop.index();
        snaps.push(if til.positive {
            Snap {
                pre: vec![],
                add: vec![p],
                del: vec![],
            }
        } else {
            Snap {
                pre: vec![],
                add: vec![],
                del: vec![p],
            }
        });
    }

    let init: Vec<usize> = task.init.iter().map(|p| p.index()).collect();
    for &a in &init {
        for &b in &init {
            r.add(a, b);
        }
    }

    let mut overlapping = vec![false; m];
    loop {
        let mut changed = false;
        for (k, s) in snaps.iter().enumerate() {
            if !s.pre.iter().all(|&p| r.all_with(p, &s.pre)) {
                continue;
            }
            // Start snaps have even index below 2m; detect re-entry.
            if k < 2 * m && k % 2 == 0 {
                let i = k / 2;
                if !overlapping[i] && r.has(n + i, n + i) && r.all_with(n + i, &s.pre) {
                    overlapping[i] = true;
                    changed = true;
                }
            }
            let keeps_token = k < 2 * m && k % 2 == 1 && overlapping[k / 2];
            for &p in &s.add {
                for &q in &s.add {
                    changed |= r.add(p, q);
                }
                for q in 0..total {
                    let deleted = s.del.contains(&q) && !(keeps_token && q == n + k / 2);
                    if deleted || s.add.contains(&q) || !r.has(q, q) {
                        continue;
                    }
                    if r.all_with(q, &s.pre) {
                        changed |= r.add(p, q);
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut out = MutexRelation::empty(n);
    for p in 0..n {
        for q in (p + 1)..n {
            if r.has(p, p) && r.has(q, q) && !r.has(p, q) {
                out.set(PropId(p as u32), PropId(q as u32));
            }
        }
    }
    out.running = vec![0; m * out.words];
    for i in 0..m {
        let token = n + i;
        for p in 0..n {
            if r.has(token, token) && r.has(p, p) && !r.has(token, p) {
                out.running[i * out.words + p / 64] |= 1 << (p % 64);
            }
        }
    }
    out
}
