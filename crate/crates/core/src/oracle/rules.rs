//! Brute-force re-derivations of the classification rules, written against
//! plain `(uid, value, health)` observations.

use crate::domain::{IsolationStatus, MiscompStatus, SignalHealth, UnitId};

/// One unit in one cycle as the oracle sees it.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Obs {
    pub uid: UnitId,
    pub val: u64,
    pub good: bool,
    /// Not isolated before this cycle.
    pub was_active: bool,
}

/// `|a - b| > bound`, computed in wide signed arithmetic.
pub(crate) fn apart(a: u64, b: u64, bound: u64) -> bool {
    let d = a as i128 - b as i128;
    d.abs() > bound as i128
}

/// Deviation fault or self-reported bad health relative to `truth`.
pub(crate) fn faulty(o: &Obs, truth: u64, delta: u64) -> bool {
    !o.good || apart(o.val, truth, delta)
}

pub(crate) fn healthy(health: SignalHealth, iso: IsolationStatus, m: MiscompStatus) -> bool {
    health == SignalHealth::Good && iso == IsolationStatus::NotIsolated && m == MiscompStatus::NotMiscomparing
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Class {
    Miscomparing,
    NotMiscomparing,
    Maybe,
}

/// Expected classification of one cycle.
#[derive(Debug, Clone)]
pub(crate) struct Expected {
    /// Active units with good health: `(uid, value, class)`.
    pub pool: Vec<(UnitId, u64, Class)>,
    pub mis_flt_lmt: usize,
}

impl Expected {
    /// Minimum surviving units assumption for this cycle.
    pub fn survivors_suffice(&self) -> bool {
        self.pool.len() > 2 * self.mis_flt_lmt
    }
}

fn count_others(pool: &[(UnitId, u64)], uid: UnitId, val: u64, bound: u64, disagree: bool) -> usize {
    let mut n = 0;
    for (u, v) in pool {
        if *u != uid && apart(*v, val, bound) == disagree {
            n += 1;
        }
    }
    n
}

pub(crate) fn expected_classes(obs: &[Obs], max_simul_fault: usize, delta: u64) -> Expected {
    let bound = 2 * delta as u128;
    let bound = bound.min(u64::MAX as u128) as u64;
    let pool: Vec<(UnitId, u64)> = obs.iter().filter(|o| o.was_active && o.good).map(|o| (o.uid, o.val)).collect();
    let bad_active = obs.iter().filter(|o| o.was_active && !o.good).count();
    let mis = max_simul_fault.saturating_sub(bad_active);

    let flagged: Vec<bool> = pool
        .iter()
        .map(|(u, v)| count_others(&pool, *u, *v, bound, true) > mis)
        .collect();
    let n_flagged = flagged.iter().filter(|x| **x).count();
    let rem = mis.saturating_sub(n_flagged);
    let rest: Vec<(UnitId, u64)> = pool
        .iter()
        .zip(&flagged)
        .filter(|(_, f)| !**f)
        .map(|(p, _)| *p)
        .collect();

    let classes = pool
        .iter()
        .zip(&flagged)
        .map(|((u, v), f)| {
            let class = if *f {
                Class::Miscomparing
            } else if count_others(&rest, *u, *v, bound, false) >= rem {
                Class::NotMiscomparing
            } else {
                Class::Maybe
            };
            (*u, *v, class)
        })
        .collect();
    Expected { pool: classes, mis_flt_lmt: mis }
}
