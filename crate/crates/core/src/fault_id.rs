//! Per-cycle deviation-fault classification.
//!
//! Only units that were not isolated in the previous cycle and report good
//! health this cycle take part. A unit is `miscomparing` when it miscompares
//! with at least `mis_flt_lmt + 1` other participants. Among the rest, a unit
//! is `maybe_miscomparing` unless it agrees (within `2 * delta`) with at least
//! `rem_mis_flt_lmt` of the other remaining participants.

use std::collections::BTreeSet;

use crate::config::VoterConfig;
use crate::domain::{miscompares, SignalHealth, UnitId, UnitOutput, UnitStatus};
use crate::error::VoterError;

/// Result of classifying one cycle of outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleClassification {
    /// Non-isolated, good-health outputs in uid order.
    pub good_non_iso: Vec<UnitOutput>,
    /// Deviation-fault budget left after bad-health units are accounted for.
    pub mis_flt_lmt: usize,
    pub miscomparing_ids: BTreeSet<UnitId>,
    pub maybe_ids: BTreeSet<UnitId>,
    pub rem_mis_flt_lmt: usize,
}

impl CycleClassification {
    /// Whether the minimum surviving units condition `|good_non_iso| >= 2*mis_flt_lmt + 1` holds.
    pub fn has_minimum_survivors(&self) -> bool {
        self.good_non_iso.len() > 2 * self.mis_flt_lmt
    }
}

/// Pairs each previous status with this cycle's output for the same uid.
///
/// Outputs may arrive in any order, but the uid sets must match exactly.
pub(crate) fn align<'a>(
    prev_statuses: &[(UnitId, UnitStatus)],
    outputs: &'a [UnitOutput],
) -> Result<Vec<&'a UnitOutput>, VoterError> {
    if let Some(dup) = duplicate_uid(outputs) {
        return Err(VoterError::DuplicateUnit(dup));
    }
    let mut aligned = Vec::with_capacity(prev_statuses.len());
    for (uid, _) in prev_statuses {
        // Fast path: outputs already in configured order.
        let hit = outputs
            .get(aligned.len())
            .filter(|o| o.uid == *uid)
            .or_else(|| outputs.iter().find(|o| o.uid == *uid));
        aligned.push(hit.ok_or(VoterError::MissingUnit(*uid))?);
    }
    if outputs.len() != prev_statuses.len() {
        let extra = outputs
            .iter()
            .find(|o| !prev_statuses.iter().any(|(u, _)| *u == o.uid))
            .map(|o| o.uid)
            .unwrap_or(UnitId(0));
        return Err(VoterError::UnexpectedUnit(extra));
    }
    Ok(aligned)
}

fn duplicate_uid(outputs: &[UnitOutput]) -> Option<UnitId> {
    outputs
        .iter()
        .enumerate()
        .find(|(i, o)| outputs[..*i].iter().any(|p| p.uid == o.uid))
        .map(|(_, o)| o.uid)
}

/// Outputs of units that were not isolated before this cycle and now report good health.
pub fn good_non_isolated(
    prev_statuses: &[(UnitId, UnitStatus)],
    outputs: &[UnitOutput],
) -> Result<Vec<UnitOutput>, VoterError> {
    let aligned = align(prev_statuses, outputs)?;
    Ok(prev_statuses
        .iter()
        .zip(aligned)
        .filter(|((_, s), o)| !s.is_isolated() && o.reading.hw_hlth == SignalHealth::Good)
        .map(|(_, o)| *o)
        .collect())
}

/// `max_simul_fault - k`, saturating at zero.
pub fn compute_mis_flt_lmt(config: &VoterConfig, bad_non_isolated: usize) -> usize {
    config.max_simul_fault().saturating_sub(bad_non_isolated)
}

/// Whether `z` miscompares with at least `limit + 1` other members of `pool`.
pub fn miscomparing_many_check(pool: &[UnitOutput], limit: usize, z: &UnitOutput, delta: u64) -> bool {
    pool.iter()
        .filter(|w| w.uid != z.uid && miscompares(&w.reading, &z.reading, delta))
        .count()
        > limit
}

/// Whether `z` is within `2 * delta` of at least `limit` other members of `pool`.
pub fn agreeing_many_check(pool: &[UnitOutput], limit: usize, z: &UnitOutput, delta: u64) -> bool {
    pool.iter()
        .filter(|w| w.uid != z.uid && !miscompares(&w.reading, &z.reading, delta))
        .count()
        >= limit
}

/// Classifies this cycle's outputs against the previous isolation statuses.
pub fn classify_cycle(
    prev_statuses: &[(UnitId, UnitStatus)],
    outputs: &[UnitOutput],
    config: &VoterConfig,
) -> Result<CycleClassification, VoterError> {
    let delta = config.delta();
    let good_non_iso = good_non_isolated(prev_statuses, outputs)?;
    let non_isolated = prev_statuses.iter().filter(|(_, s)| !s.is_isolated()).count();
    let mis_flt_lmt = compute_mis_flt_lmt(config, non_isolated - good_non_iso.len());

    let miscomparing_ids: BTreeSet<UnitId> = good_non_iso
        .iter()
        .filter(|z| miscomparing_many_check(&good_non_iso, mis_flt_lmt, z, delta))
        .map(|z| z.uid)
        .collect();
    let negb_mis: Vec<UnitOutput> = good_non_iso
        .iter()
        .filter(|z| !miscomparing_ids.contains(&z.uid))
        .copied()
        .collect();
    let rem_mis_flt_lmt = mis_flt_lmt.saturating_sub(miscomparing_ids.len());
    let maybe_ids = negb_mis
        .iter()
        .filter(|z| !agreeing_many_check(&negb_mis, rem_mis_flt_lmt, z, delta))
        .map(|z| z.uid)
        .collect();

    Ok(CycleClassification {
        good_non_iso,
        mis_flt_lmt,
        miscomparing_ids,
        maybe_ids,
        rem_mis_flt_lmt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{IsolationStatus, MiscompStatus, Reading};
    use proptest::prelude::*;

    fn fresh(n: u32) -> Vec<(UnitId, UnitStatus)> {
        (1..=n).map(|i| (UnitId(i), UnitStatus::fresh())).collect()
    }

    fn isolated() -> UnitStatus {
        UnitStatus::new(IsolationStatus::Isolated, MiscompStatus::Miscomparing, 3, 3).unwrap()
    }

    fn good(vals: &[u64]) -> Vec<UnitOutput> {
        vals.iter()
            .enumerate()
            .map(|(i, v)| UnitOutput::new(i as u32 + 1, Reading::good(*v)))
            .collect()
    }

    fn ids(v: &[u32]) -> BTreeSet<UnitId> {
        v.iter().copied().map(UnitId).collect()
    }

    // Independent pairwise counter used to freeze the expected values below.
    fn brute_counts(vals: &[u64], delta: u64, z: usize) -> (usize, usize) {
        let mut mis = 0;
        let mut agree = 0;
        for (j, v) in vals.iter().enumerate() {
            if j == z {
                continue;
            }
            let d = if *v > vals[z] { v - vals[z] } else { vals[z] - v };
            if d > 2 * delta {
                mis += 1;
            } else {
                agree += 1;
            }
        }
        (mis, agree)
    }

    #[test]
    fn brute_force_oracle_matches_frozen_counts() {
        assert_eq!(brute_counts(&[50, 50, 50, 50, 90], 5, 4), (4, 0));
        assert_eq!(brute_counts(&[50, 50, 50, 50, 90], 5, 0), (1, 3));
        assert_eq!(brute_counts(&[50, 55, 60], 5, 1), (0, 2));
        assert_eq!(brute_counts(&[100, 100, 200, 200], 10, 0), (2, 1));
    }

    #[test]
    fn good_non_isolated_filters() {
        let mut outs = good(&[1, 2, 3, 4]);
        outs[2].reading.hw_hlth = SignalHealth::Bad;
        let got: Vec<u32> = good_non_isolated(&fresh(4), &outs).unwrap().iter().map(|o| o.uid.0).collect();
        assert_eq!(got, vec![1, 2, 4]);

        let mut prev = fresh(4);
        prev[1].1 = isolated();
        let got: Vec<u32> = good_non_isolated(&prev, &good(&[1, 2, 3, 4])).unwrap().iter().map(|o| o.uid.0).collect();
        assert_eq!(got, vec![1, 3, 4]);

        let all_iso: Vec<_> = (1..=4).map(|i| (UnitId(i), isolated())).collect();
        assert!(good_non_isolated(&all_iso, &good(&[1, 2, 3, 4])).unwrap().is_empty());
    }

    #[test]
    fn uid_mismatch_is_reported() {
        let outs = good(&[1, 2, 3]);
        assert_eq!(good_non_isolated(&fresh(4), &outs), Err(VoterError::MissingUnit(UnitId(4))));
        assert_eq!(
            good_non_isolated(&fresh(2), &outs),
            Err(VoterError::UnexpectedUnit(UnitId(3)))
        );
        let mut dup = good(&[1, 2, 3]);
        dup[2].uid = UnitId(1);
        assert_eq!(good_non_isolated(&fresh(3), &dup), Err(VoterError::DuplicateUnit(UnitId(1))));
        let mut shuffled = good(&[10, 20, 30]);
        shuffled.reverse();
        let got = good_non_isolated(&fresh(3), &shuffled).unwrap();
        assert_eq!(got.iter().map(|o| o.reading.val).collect::<Vec<_>>(), vec![10, 20, 30]);
    }

    #[test]
    fn mis_flt_lmt_saturates() {
        let c2 = VoterConfig::new(5, 1, 2, 2, None).unwrap();
        let c1 = VoterConfig::new(5, 1, 2, 1, None).unwrap();
        assert_eq!(compute_mis_flt_lmt(&c2, 1), 1);
        assert_eq!(compute_mis_flt_lmt(&c2, 0), 2);
        assert_eq!(compute_mis_flt_lmt(&c1, 3), 0);
    }

    #[test]
    fn pairwise_checks() {
        let pool = good(&[50, 50, 50, 50, 90]);
        assert!(miscomparing_many_check(&pool, 1, &pool[4], 5));
        assert!(!miscomparing_many_check(&pool, 1, &pool[0], 5));
        let single = good(&[7]);
        assert!(!miscomparing_many_check(&single, 0, &single[0], 0));

        assert!(agreeing_many_check(&pool, 0, &pool[4], 5));
        let pairs = good(&[100, 100, 200, 200]);
        assert!(!agreeing_many_check(&pairs, 2, &pairs[0], 10));
        let close = good(&[50, 55, 60]);
        assert!(agreeing_many_check(&close, 2, &close[1], 5));
    }

    #[test]
    fn exact_two_delta_spread_is_not_a_fault() {
        let cfg = VoterConfig::new(4, 10, 3, 1, None).unwrap();
        let cls = classify_cycle(&fresh(4), &good(&[40, 20, 20, 20]), &cfg).unwrap();
        assert!(cls.miscomparing_ids.is_empty());
        assert!(cls.maybe_ids.is_empty());
        assert_eq!(cls.mis_flt_lmt, 1);
        assert!(cls.has_minimum_survivors());
    }

    #[test]
    fn two_equal_pairs_are_unidentifiable() {
        // Fifth unit is already isolated, so four good units face a budget of two.
        let cfg = VoterConfig::new(5, 10, 3, 2, None).unwrap();
        let outs = good(&[100, 100, 200, 200, 150]);
        let mut prev = fresh(5);
        prev[4].1 = isolated();
        let cls = classify_cycle(&prev, &outs, &cfg).unwrap();
        assert_eq!(cls.mis_flt_lmt, 2);
        assert!(cls.miscomparing_ids.is_empty());
        assert_eq!(cls.rem_mis_flt_lmt, 2);
        assert_eq!(cls.maybe_ids, ids(&[1, 2, 3, 4]));
        assert!(!cls.has_minimum_survivors());
    }

    #[test]
    fn single_outlier_is_miscomparing() {
        let cfg = VoterConfig::new(5, 5, 2, 1, None).unwrap();
        let cls = classify_cycle(&fresh(5), &good(&[50, 50, 50, 50, 90]), &cfg).unwrap();
        assert_eq!(cls.miscomparing_ids, ids(&[5]));
        assert_eq!(cls.rem_mis_flt_lmt, 0);
        assert!(cls.maybe_ids.is_empty());
    }

    #[test]
    fn bad_health_shrinks_the_budget() {
        let cfg = VoterConfig::new(5, 5, 2, 2, None).unwrap();
        let mut outs = good(&[50, 50, 50, 50, 90]);
        outs[0].reading.hw_hlth = SignalHealth::Bad;
        let cls = classify_cycle(&fresh(5), &outs, &cfg).unwrap();
        assert_eq!(cls.mis_flt_lmt, 1);
        assert_eq!(cls.good_non_iso.len(), 4);
        assert_eq!(cls.miscomparing_ids, ids(&[5]));
    }

    proptest! {
        #[test]
        fn classification_sets_are_disjoint_and_scoped(
            vals in proptest::collection::vec(0u64..60, 5),
            healths in proptest::collection::vec(any::<bool>(), 5),
            isolated_mask in proptest::collection::vec(any::<bool>(), 5),
            delta in 0u64..12,
        ) {
            let cfg = VoterConfig::new(5, delta, 3, 2, None).unwrap();
            let prev: Vec<_> = (1..=5u32)
                .map(|i| (UnitId(i), if isolated_mask[i as usize - 1] { isolated() } else { UnitStatus::fresh() }))
                .collect();
            let outs: Vec<_> = vals.iter().zip(&healths).enumerate().map(|(i, (v, g))| {
                UnitOutput::new(i as u32 + 1, if *g { Reading::good(*v) } else { Reading::bad(*v) })
            }).collect();
            let cls = classify_cycle(&prev, &outs, &cfg).unwrap();
            let pool: BTreeSet<UnitId> = cls.good_non_iso.iter().map(|o| o.uid).collect();
            prop_assert!(cls.miscomparing_ids.is_disjoint(&cls.maybe_ids));
            prop_assert!(cls.miscomparing_ids.is_subset(&pool));
            prop_assert!(cls.maybe_ids.is_subset(&pool));
            prop_assert_eq!(cls.rem_mis_flt_lmt, cls.mis_flt_lmt.saturating_sub(cls.miscomparing_ids.len()));
            if cls.has_minimum_survivors() {
                prop_assert!(cls.maybe_ids.is_empty());
            }
            // Order independence.
            let mut rev = outs.clone();
            rev.reverse();
            prop_assert_eq!(classify_cycle(&prev, &rev, &cfg).unwrap(), cls);
        }
    }
}
