//! Direct transcription of the trajectory-constraint formulas, written
//! without reference to the library's evaluator.

use tlplan::trajectory::{Modality, TrajectoryConstraint};
use tlplan::{PropId, Time};

/// A trajectory as happening times plus a truth function `sat(i, p)`.
pub struct Traj<'a> {
    pub times: &'a [Time],
    pub sat: &'a dyn Fn(usize, PropId) -> bool,
}

impl Traj<'_> {
    fn n(&self) -> usize {
        self.times.len() - 1
    }
}

pub fn literal_holds(tr: &Traj, c: &TrajectoryConstraint) -> bool {
    let n = tr.n();
    let t = tr.times;
    let s = tr.sat;
    let phi = c.phi;
    let psi = c.psi.unwrap_or(c.phi);
    let all = |lo: usize, hi: usize, f: &dyn Fn(usize) -> bool| (lo..=hi).all(f);
    let any = |lo: usize, hi: usize, f: &dyn Fn(usize) -> bool| (lo..=hi).any(f);
    match c.op {
        Modality::AtEnd => s(n, phi),
        Modality::Always => all(0, n, &|i| s(i, phi)),
        Modality::AtMostOnce => all(0, n, &|i| {
            !s(i, phi)
                || any(i, n, &|j| all(i, j, &|k| s(k, phi)) && (j + 1..=n).all(|k| !s(k, phi)))
        }),
        Modality::Sometime => any(0, n, &|i| s(i, phi)),
        Modality::Within(d) => any(0, n, &|i| s(i, phi) && t[i] <= d),
        Modality::AlwaysWithin(d) => all(0, n, &|i| !s(i, phi) || any(i, n, &|j| s(j, psi) && t[j] - t[i] <= d)),
        Modality::SometimeAfter => all(0, n, &|i| !s(i, phi) || any(i, n, &|j| s(j, psi))),
        Modality::SometimeBefore => all(0, n, &|i| !s(i, phi) || (0..i).any(|j| s(j, psi))),
        Modality::HoldDuring(u1, u2) => {
            let mut ok = true;
            if t[n] > u1 {
                ok &= all(0, n, &|i| !(u1 <= t[i] && t[i] < u2) || s(i, phi));
                ok &= (0..n).all(|j| !(t[j] <= u1 && u1 < t[j + 1]) || s(j, phi));
            }
            if t[n] <= u1 {
                ok &= s(n, phi);
            }
            ok
        }
        Modality::HoldAfter(d) => {
            let mut ok = true;
            if t[n] > d {
                ok &= any(0, n, &|i| s(i, phi) && t[i] > d);
            }
            if t[n] <= d {
                ok &= s(n, phi);
            }
            ok
        }
        other => panic!("no transcription for {other:?}"),
    }
}
