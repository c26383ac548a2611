//! Builds the updated unit-data list for a cycle: classification, risky-count
//! bookkeeping and isolation at `persistence_lmt`.

use crate::config::VoterConfig;
use crate::domain::{
    IsolationStatus, MiscompStatus, SignalHealth, UnitData, UnitId, UnitOutput, UnitStatus,
};
use crate::error::VoterError;
use crate::fault_id::{align, classify_cycle, CycleClassification};

/// New status of one unit given its previous status and this cycle's output.
pub(crate) fn next_status(
    prev: &UnitStatus,
    now: &UnitOutput,
    cls: &CycleClassification,
    config: &VoterConfig,
) -> Result<UnitStatus, VoterError> {
    if prev.is_isolated() {
        return Ok(*prev);
    }
    let miscomp = if now.reading.hw_hlth == SignalHealth::Bad {
        MiscompStatus::MaybeMiscomparing
    } else if cls.miscomparing_ids.contains(&now.uid) {
        MiscompStatus::Miscomparing
    } else if cls.maybe_ids.contains(&now.uid) {
        MiscompStatus::MaybeMiscomparing
    } else {
        MiscompStatus::NotMiscomparing
    };
    let risky = if miscomp == MiscompStatus::NotMiscomparing {
        0
    } else {
        prev.risky_count() + 1
    };
    let iso = if risky == config.persistence_lmt() {
        IsolationStatus::Isolated
    } else {
        IsolationStatus::NotIsolated
    };
    Ok(UnitStatus::new(iso, miscomp, risky, config.persistence_lmt())?)
}

/// Applies one cycle's classification to a single unit.
pub fn update_unit(
    prev: &UnitData,
    now: &UnitOutput,
    cls: &CycleClassification,
    config: &VoterConfig,
) -> Result<UnitData, VoterError> {
    if prev.uid() != now.uid {
        return Err(VoterError::UidMismatch { expected: prev.uid(), got: now.uid });
    }
    let status = next_status(prev.u_status(), now, cls, config)?;
    Ok(UnitData::new(*now, status)?)
}

pub(crate) fn statuses_of(list: &[UnitData]) -> Vec<(UnitId, UnitStatus)> {
    list.iter().map(|d| (d.uid(), *d.u_status())).collect()
}

/// Classifies against `prev` statuses and returns the updated list in the same uid order.
pub(crate) fn update_from_statuses(
    prev: &[(UnitId, UnitStatus)],
    outputs: &[UnitOutput],
    config: &VoterConfig,
) -> Result<Vec<UnitData>, VoterError> {
    let cls = classify_cycle(prev, outputs, config)?;
    let aligned = align(prev, outputs)?;
    prev.iter()
        .zip(aligned)
        .map(|((_, status), now)| {
            let next = next_status(status, now, &cls, config)?;
            Ok(UnitData::new(*now, next)?)
        })
        .collect()
}

/// Element-wise [`update_unit`] over the whole list.
pub fn build_updated_list(
    prev_list: &[UnitData],
    outputs: &[UnitOutput],
    config: &VoterConfig,
) -> Result<Vec<UnitData>, VoterError> {
    update_from_statuses(&statuses_of(prev_list), outputs, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{is_healthy_data, Reading};
    use proptest::prelude::*;

    fn data(uid: u32, reading: Reading, iso: IsolationStatus, m: MiscompStatus, risky: u32, p: u32) -> UnitData {
        UnitData::new(UnitOutput::new(uid, reading), UnitStatus::new(iso, m, risky, p).unwrap()).unwrap()
    }

    fn empty_cls() -> CycleClassification {
        CycleClassification {
            good_non_iso: vec![],
            mis_flt_lmt: 1,
            miscomparing_ids: Default::default(),
            maybe_ids: Default::default(),
            rem_mis_flt_lmt: 1,
        }
    }

    fn good_list(vals: &[u64], p: u32) -> Vec<UnitData> {
        vals.iter()
            .enumerate()
            .map(|(i, v)| data(i as u32 + 1, Reading::good(*v), IsolationStatus::NotIsolated, MiscompStatus::NotMiscomparing, 0, p))
            .collect()
    }

    fn outs(vals: &[u64]) -> Vec<UnitOutput> {
        vals.iter().enumerate().map(|(i, v)| UnitOutput::new(i as u32 + 1, Reading::good(*v))).collect()
    }

    #[test]
    fn healthy_unit_stays_at_zero() {
        let cfg = VoterConfig::new(3, 10, 3, 1, None).unwrap();
        let prev = good_list(&[5], 3).remove(0);
        let got = update_unit(&prev, &UnitOutput::new(1, Reading::good(6)), &empty_cls(), &cfg).unwrap();
        assert_eq!(got.u_status().risky_count(), 0);
        assert_eq!(got.u_status().miscomp_status(), MiscompStatus::NotMiscomparing);
        assert!(!got.u_status().is_isolated());
        assert_eq!(got.u_output().reading.val, 6);
    }

    #[test]
    fn bad_health_increments_and_marks_maybe() {
        let cfg = VoterConfig::new(3, 10, 3, 1, None).unwrap();
        let prev = data(1, Reading::bad(5), IsolationStatus::NotIsolated, MiscompStatus::MaybeMiscomparing, 1, 3);
        let got = update_unit(&prev, &UnitOutput::new(1, Reading::bad(5)), &empty_cls(), &cfg).unwrap();
        assert_eq!(got.u_status().risky_count(), 2);
        assert!(!got.u_status().is_isolated());
        assert_eq!(got.u_status().miscomp_status(), MiscompStatus::MaybeMiscomparing);
    }

    #[test]
    fn reaching_the_limit_isolates() {
        let cfg = VoterConfig::new(3, 10, 3, 1, None).unwrap();
        let prev = data(2, Reading::good(5), IsolationStatus::NotIsolated, MiscompStatus::MaybeMiscomparing, 2, 3);
        let mut cls = empty_cls();
        cls.maybe_ids.insert(UnitId(2));
        let got = update_unit(&prev, &UnitOutput::new(2, Reading::good(5)), &cls, &cfg).unwrap();
        assert_eq!(got.u_status().risky_count(), 3);
        assert!(got.u_status().is_isolated());
    }

    #[test]
    fn uid_mismatch() {
        let cfg = VoterConfig::new(3, 10, 3, 1, None).unwrap();
        let prev = good_list(&[5], 3).remove(0);
        assert_eq!(
            update_unit(&prev, &UnitOutput::new(2, Reading::good(5)), &empty_cls(), &cfg),
            Err(VoterError::UidMismatch { expected: UnitId(1), got: UnitId(2) })
        );
    }

    #[test]
    fn agreeing_units_stay_healthy() {
        let cfg = VoterConfig::new(4, 10, 3, 1, None).unwrap();
        let list = build_updated_list(&good_list(&[1, 1, 1, 1], 3), &outs(&[100, 120, 110, 101]), &cfg).unwrap();
        assert!(list.iter().all(|d| d.u_status().risky_count() == 0 && is_healthy_data(d)));
    }

    #[test]
    fn isolation_is_permanent() {
        let cfg = VoterConfig::new(4, 10, 3, 1, None).unwrap();
        let mut prev = good_list(&[1, 1, 1, 1], 3);
        prev[1] = data(2, Reading::good(1), IsolationStatus::Isolated, MiscompStatus::Miscomparing, 3, 3);
        let list = build_updated_list(&prev, &outs(&[100, 100, 100, 100]), &cfg).unwrap();
        assert!(list[1].u_status().is_isolated());
        assert_eq!(list[1].u_status(), prev[1].u_status());
        assert_eq!(list[1].u_output().reading.val, 100);
    }

    #[test]
    fn outlier_accumulates_risk() {
        let cfg = VoterConfig::new(5, 5, 2, 1, None).unwrap();
        let list = build_updated_list(&good_list(&[50; 5], 2), &outs(&[50, 50, 50, 50, 90]), &cfg).unwrap();
        let risky: Vec<u32> = list.iter().map(|d| d.u_status().risky_count()).collect();
        assert_eq!(risky, vec![0, 0, 0, 0, 1]);
        assert_eq!(list[4].u_status().miscomp_status(), MiscompStatus::Miscomparing);
        assert!(!list[4].u_status().is_isolated());
    }

    #[test]
    fn missing_unit() {
        let cfg = VoterConfig::new(3, 5, 2, 1, None).unwrap();
        assert_eq!(
            build_updated_list(&good_list(&[1, 1, 1], 2), &outs(&[1, 1]), &cfg),
            Err(VoterError::MissingUnit(UnitId(3)))
        );
    }

    proptest! {
        #[test]
        fn update_rules_hold_over_random_histories(
            cycles in proptest::collection::vec(
                proptest::collection::vec((0u64..80, any::<bool>()), 5), 1..12),
            delta in 0u64..15,
            p in 2u32..5,
        ) {
            let cfg = VoterConfig::new(5, delta, p, 2, None).unwrap();
            let mut prev = good_list(&[0; 5], p);
            for cycle in cycles {
                let o: Vec<UnitOutput> = cycle.iter().enumerate().map(|(i, (v, g))| {
                    UnitOutput::new(i as u32 + 1, if *g { Reading::good(*v) } else { Reading::bad(*v) })
                }).collect();
                let next = build_updated_list(&prev, &o, &cfg).unwrap();
                prop_assert_eq!(next.iter().map(|d| d.uid()).collect::<Vec<_>>(),
                                prev.iter().map(|d| d.uid()).collect::<Vec<_>>());
                for (a, b) in prev.iter().zip(&next) {
                    let (sa, sb) = (a.u_status(), b.u_status());
                    if sa.is_isolated() {
                        prop_assert!(sb.is_isolated());
                        continue;
                    }
                    let r = sb.risky_count();
                    prop_assert!(r == 0 || r == sa.risky_count() + 1);
                    let flagged = b.u_output().reading.hw_hlth == SignalHealth::Bad
                        || sb.miscomp_status() != MiscompStatus::NotMiscomparing;
                    prop_assert_eq!(r == sa.risky_count() + 1, flagged);
                    prop_assert_eq!(sb.is_isolated(), r == p);
                }
                prev = next;
            }
        }
    }
}
