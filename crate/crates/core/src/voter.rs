//! Voter state and the per-cycle transition.
//!
//! Each step first rebuilds the unit-data list (classification, risky counts,
//! isolation) and then derives output, validity and age from it:
//!
//! 1. fewer than `min_required` non-isolated units: `not_valid`, output frozen,
//!    age pinned at `2 * persistence_lmt`;
//! 2. previous prime isolated: switch to the first healthy unit (`valid`, age 0)
//!    or, if none, keep the old output as `un_id` and age it;
//! 3. otherwise `valid`: refresh from the prime if it is healthy, else age the
//!    retained output.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::VoterConfig;
use crate::domain::{
    is_healthy_data, UnitData, UnitId, UnitOutput, UnitStatus, ValidityStatus,
};
use crate::error::VoterError;
use crate::unit_update::{statuses_of, update_from_statuses};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VoterState {
    u_data_lst: Vec<UnitData>,
    voter_output: UnitOutput,
    voter_validity: ValidityStatus,
    output_age: u32,
    presrvd_data: UnitData,
}

/// Coarse view of a [`VoterState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AbstractState {
    /// Valid, current output, nothing isolated.
    S0,
    /// Valid, retained output (prime has a transient fault).
    S1,
    /// Valid, current output, some unit isolated.
    S2,
    /// Unidentifiable: prime isolated and no healthy replacement.
    S3,
    /// Not valid: too few non-isolated units.
    S4,
}

impl fmt::Display for AbstractState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl VoterState {
    /// First cycle: classify against an all-fresh pre-state and pick the
    /// lowest-uid healthy unit as prime.
    pub fn init(config: &VoterConfig, first_outputs: &[UnitOutput]) -> Result<Self, VoterError> {
        let pre: Vec<(UnitId, UnitStatus)> =
            config.unit_ids().map(|u| (u, UnitStatus::fresh())).collect();
        let list = update_from_statuses(&pre, first_outputs, config)?;
        let prime = *list.iter().find(|d| is_healthy_data(d)).ok_or(VoterError::NoHealthyUnit)?;
        let (voter_validity, output_age) = if non_isolated(&list) < config.min_required() {
            (ValidityStatus::NotValid, config.not_valid_age())
        } else {
            (ValidityStatus::Valid, 0)
        };
        Ok(VoterState {
            u_data_lst: list,
            voter_output: *prime.u_output(),
            voter_validity,
            output_age,
            presrvd_data: prime,
        })
    }

    /// Advances the voter by one cycle.
    pub fn step(&self, config: &VoterConfig, outputs: &[UnitOutput]) -> Result<Self, VoterError> {
        let list = update_from_statuses(&statuses_of(&self.u_data_lst), outputs, config)?;
        let prime_uid = self.voter_output.uid;
        let keep = |validity, age| VoterState {
            u_data_lst: list.clone(),
            voter_output: self.voter_output,
            voter_validity: validity,
            output_age: age,
            presrvd_data: self.presrvd_data,
        };
        let refresh = |d: &UnitData| VoterState {
            u_data_lst: list.clone(),
            voter_output: *d.u_output(),
            voter_validity: ValidityStatus::Valid,
            output_age: 0,
            presrvd_data: *d,
        };

        if non_isolated(&list) < config.min_required() {
            return Ok(keep(ValidityStatus::NotValid, config.not_valid_age()));
        }
        let prime = list
            .iter()
            .find(|d| d.uid() == prime_uid)
            .ok_or(VoterError::MissingUnit(prime_uid))?;
        let next = if prime.u_status().is_isolated() {
            match list.iter().find(|d| is_healthy_data(d)) {
                Some(fresh) => refresh(fresh),
                None => keep(ValidityStatus::UnId, self.output_age + 1),
            }
        } else if is_healthy_data(prime) {
            refresh(prime)
        } else {
            keep(ValidityStatus::Valid, self.output_age + 1)
        };
        Ok(next)
    }

    pub fn u_data_lst(&self) -> &[UnitData] {
        &self.u_data_lst
    }

    pub fn voter_output(&self) -> &UnitOutput {
        &self.voter_output
    }

    pub fn prime(&self) -> UnitId {
        self.voter_output.uid
    }

    pub fn voter_validity(&self) -> ValidityStatus {
        self.voter_validity
    }

    pub fn output_age(&self) -> u32 {
        self.output_age
    }

    pub fn presrvd_data(&self) -> &UnitData {
        &self.presrvd_data
    }

    pub fn non_isolated_count(&self) -> usize {
        non_isolated(&self.u_data_lst)
    }

    pub fn isolated_count(&self) -> usize {
        self.u_data_lst.len() - self.non_isolated_count()
    }

    pub fn unit(&self, uid: UnitId) -> Option<&UnitData> {
        self.u_data_lst.iter().find(|d| d.uid() == uid)
    }

    pub fn abstract_state(&self) -> AbstractState {
        match self.voter_validity {
            ValidityStatus::NotValid => AbstractState::S4,
            ValidityStatus::UnId => AbstractState::S3,
            ValidityStatus::Valid if self.output_age > 0 => AbstractState::S1,
            ValidityStatus::Valid if self.isolated_count() > 0 => AbstractState::S2,
            ValidityStatus::Valid => AbstractState::S0,
        }
    }

    /// Assembles a state without checking any invariant. Used to build
    /// deliberately broken fixtures for the oracle.
    #[doc(hidden)]
    pub fn from_raw_parts(
        u_data_lst: Vec<UnitData>,
        voter_output: UnitOutput,
        voter_validity: ValidityStatus,
        output_age: u32,
        presrvd_data: UnitData,
    ) -> Self {
        VoterState { u_data_lst, voter_output, voter_validity, output_age, presrvd_data }
    }
}

fn non_isolated(list: &[UnitData]) -> usize {
    list.iter().filter(|d| !d.u_status().is_isolated()).count()
}
