//! Readings, per-unit status records and their record invariants.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

/// Port-derived identifier of an input unit, `1..=num_units`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitId(pub u32);

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{}", self.0)
    }
}

/// Self-identified health reported alongside each measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalHealth {
    Good,
    Bad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Reading {
    pub val: u64,
    pub hw_hlth: SignalHealth,
}

impl Reading {
    pub fn good(val: u64) -> Self {
        Reading { val, hw_hlth: SignalHealth::Good }
    }

    pub fn bad(val: u64) -> Self {
        Reading { val, hw_hlth: SignalHealth::Bad }
    }
}

/// A reading tagged with the unit it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitOutput {
    pub uid: UnitId,
    pub reading: Reading,
}

impl UnitOutput {
    pub fn new(uid: u32, reading: Reading) -> Self {
        UnitOutput { uid: UnitId(uid), reading }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiscompStatus {
    Miscomparing,
    NotMiscomparing,
    MaybeMiscomparing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsolationStatus {
    Isolated,
    NotIsolated,
}

/// Accumulated fault status of one unit.
///
/// Invariants: `risky_count <= persistence_lmt`, and the unit is isolated
/// exactly when `risky_count == persistence_lmt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnitStatus {
    iso_status: IsolationStatus,
    miscomp_status: MiscompStatus,
    risky_count: u32,
}

impl UnitStatus {
    pub fn new(
        iso_status: IsolationStatus,
        miscomp_status: MiscompStatus,
        risky_count: u32,
        persistence_lmt: u32,
    ) -> Result<Self, DomainError> {
        if risky_count > persistence_lmt {
            return Err(DomainError::RiskyCountOverLimit { risky_count, persistence_lmt });
        }
        if (risky_count == persistence_lmt) != (iso_status == IsolationStatus::Isolated) {
            return Err(DomainError::IsolationMismatch);
        }
        Ok(UnitStatus { iso_status, miscomp_status, risky_count })
    }

    /// Status of a unit before any evidence: not isolated, not miscomparing, zero risk.
    pub fn fresh() -> Self {
        UnitStatus {
            iso_status: IsolationStatus::NotIsolated,
            miscomp_status: MiscompStatus::NotMiscomparing,
            risky_count: 0,
        }
    }

    pub fn iso_status(&self) -> IsolationStatus {
        self.iso_status
    }

    pub fn miscomp_status(&self) -> MiscompStatus {
        self.miscomp_status
    }

    pub fn risky_count(&self) -> u32 {
        self.risky_count
    }

    pub fn is_isolated(&self) -> bool {
        self.iso_status == IsolationStatus::Isolated
    }
}

/// Current output of a unit together with its accumulated status.
///
/// Invariant: `risky_count == 0` iff the reading is good, the unit is not
/// isolated and it is `not_miscomparing`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnitData {
    u_output: UnitOutput,
    u_status: UnitStatus,
}

impl UnitData {
    pub fn new(u_output: UnitOutput, u_status: UnitStatus) -> Result<Self, DomainError> {
        let healthy = u_output.reading.hw_hlth == SignalHealth::Good
            && u_status.iso_status == IsolationStatus::NotIsolated
            && u_status.miscomp_status == MiscompStatus::NotMiscomparing;
        if (u_status.risky_count == 0) != healthy {
            return Err(DomainError::HealthyMismatch);
        }
        Ok(UnitData { u_output, u_status })
    }

    pub fn u_output(&self) -> &UnitOutput {
        &self.u_output
    }

    pub fn u_status(&self) -> &UnitStatus {
        &self.u_status
    }

    pub fn uid(&self) -> UnitId {
        self.u_output.uid
    }

    /// Test and fixture hook: pairs fields without checking the record invariants.
    #[doc(hidden)]
    pub fn from_raw_parts(u_output: UnitOutput, u_status: UnitStatus) -> Self {
        UnitData { u_output, u_status }
    }
}

impl UnitStatus {
    /// Test and fixture hook: builds a status without checking its invariants.
    #[doc(hidden)]
    pub fn from_raw_parts(
        iso_status: IsolationStatus,
        miscomp_status: MiscompStatus,
        risky_count: u32,
    ) -> Self {
        UnitStatus { iso_status, miscomp_status, risky_count }
    }
}

/// Reliability grade of the voter output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidityStatus {
    Valid,
    UnId,
    NotValid,
}

impl fmt::Display for ValidityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValidityStatus::Valid => "valid",
            ValidityStatus::UnId => "un_id",
            ValidityStatus::NotValid => "not_valid",
        })
    }
}

/// Absolute difference `|a - b|`.
pub fn adiff(a: u64, b: u64) -> u64 {
    a.abs_diff(b)
}

/// Two same-cycle readings miscompare when they differ by more than `2 * delta`.
pub fn miscompares(a: &Reading, b: &Reading, delta: u64) -> bool {
    adiff(a.val, b.val) > delta.saturating_mul(2)
}

/// Good health, not isolated and `not_miscomparing`.
pub fn is_healthy_data(d: &UnitData) -> bool {
    d.u_output.reading.hw_hlth == SignalHealth::Good
        && d.u_status.iso_status == IsolationStatus::NotIsolated
        && d.u_status.miscomp_status == MiscompStatus::NotMiscomparing
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn adiff_examples() {
        assert_eq!(adiff(7, 7), 0);
        assert_eq!(adiff(3, 10), 7);
        assert_eq!(adiff(10, 3), 7);
        assert_eq!(adiff(100, 40), 60);
    }

    #[test]
    fn miscomparison_is_strictly_beyond_two_delta() {
        assert!(!miscompares(&Reading::good(40), &Reading::good(20), 10));
        assert!(miscompares(&Reading::good(41), &Reading::good(20), 10));
        assert!(!miscompares(&Reading::good(77), &Reading::bad(77), 0));
    }

    #[test]
    fn healthy_data_examples() {
        let p = 3;
        let ok = UnitData::new(
            UnitOutput::new(1, Reading::good(5)),
            UnitStatus::new(IsolationStatus::NotIsolated, MiscompStatus::NotMiscomparing, 0, p)
                .unwrap(),
        )
        .unwrap();
        assert!(is_healthy_data(&ok));

        let sick = UnitData::new(
            UnitOutput::new(1, Reading::bad(5)),
            UnitStatus::new(IsolationStatus::NotIsolated, MiscompStatus::MaybeMiscomparing, 2, p)
                .unwrap(),
        )
        .unwrap();
        assert!(!is_healthy_data(&sick));
    }

    #[test]
    fn constructors_reject_broken_records() {
        assert_eq!(
            UnitStatus::new(IsolationStatus::NotIsolated, MiscompStatus::Miscomparing, 4, 3),
            Err(DomainError::RiskyCountOverLimit { risky_count: 4, persistence_lmt: 3 })
        );
        assert_eq!(
            UnitStatus::new(IsolationStatus::Isolated, MiscompStatus::Miscomparing, 2, 3),
            Err(DomainError::IsolationMismatch)
        );
        assert_eq!(
            UnitStatus::new(IsolationStatus::NotIsolated, MiscompStatus::Miscomparing, 3, 3),
            Err(DomainError::IsolationMismatch)
        );
        let status =
            UnitStatus::new(IsolationStatus::NotIsolated, MiscompStatus::NotMiscomparing, 1, 3)
                .unwrap();
        assert_eq!(
            UnitData::new(UnitOutput::new(2, Reading::good(1)), status),
            Err(DomainError::HealthyMismatch)
        );
    }

    fn iso() -> impl Strategy<Value = IsolationStatus> {
        prop_oneof![Just(IsolationStatus::Isolated), Just(IsolationStatus::NotIsolated)]
    }

    fn mis() -> impl Strategy<Value = MiscompStatus> {
        prop_oneof![
            Just(MiscompStatus::Miscomparing),
            Just(MiscompStatus::NotMiscomparing),
            Just(MiscompStatus::MaybeMiscomparing)
        ]
    }

    fn health() -> impl Strategy<Value = SignalHealth> {
        prop_oneof![Just(SignalHealth::Good), Just(SignalHealth::Bad)]
    }

    proptest! {
        #[test]
        fn constructors_accept_exactly_the_invariant_combinations(
            i in iso(), m in mis(), h in health(), risky in 0u32..6, p in 2u32..5, val in 0u64..100,
        ) {
            let status = UnitStatus::new(i, m, risky, p);
            let status_ok = risky <= p && ((risky == p) == (i == IsolationStatus::Isolated));
            prop_assert_eq!(status.is_ok(), status_ok);
            if let Ok(s) = status {
                let out = UnitOutput::new(1, Reading { val, hw_hlth: h });
                let healthy = h == SignalHealth::Good
                    && i == IsolationStatus::NotIsolated
                    && m == MiscompStatus::NotMiscomparing;
                let data = UnitData::new(out, s);
                prop_assert_eq!(data.is_ok(), (risky == 0) == healthy);
                if let Ok(d) = data {
                    prop_assert_eq!(is_healthy_data(&d), d.u_status().risky_count() == 0);
                }
            }
        }
    }
}
