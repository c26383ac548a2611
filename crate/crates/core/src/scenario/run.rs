use std::fmt;

use serde::{Deserialize, Serialize};

use super::{readings_of, Scenario};
use crate::domain::{IsolationStatus, MiscompStatus, SignalHealth, UnitId};
use crate::error::VoterError;
use crate::voter::VoterState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitTrace {
    pub uid: UnitId,
    pub val: u64,
    pub health: SignalHealth,
    pub miscomp_status: MiscompStatus,
    pub iso_status: IsolationStatus,
    pub risky_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoterTrace {
    pub prime_uid: UnitId,
    pub output_val: u64,
    pub output_age: u32,
    pub validity: crate::domain::ValidityStatus,
}

/// Snapshot of one cycle: the inputs, every unit's status and the voter output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub cycle: usize,
    pub ground_truth: u64,
    pub units: Vec<UnitTrace>,
    pub voter: VoterTrace,
    pub prime_switched: bool,
}

impl TraceRecord {
    pub fn from_state(cycle: usize, ground_truth: u64, vs: &VoterState, prev_prime: Option<UnitId>) -> Self {
        let units = vs
            .u_data_lst()
            .iter()
            .map(|d| UnitTrace {
                uid: d.uid(),
                val: d.u_output().reading.val,
                health: d.u_output().reading.hw_hlth,
                miscomp_status: d.u_status().miscomp_status(),
                iso_status: d.u_status().iso_status(),
                risky_count: d.u_status().risky_count(),
            })
            .collect();
        TraceRecord {
            cycle,
            ground_truth,
            units,
            voter: VoterTrace {
                prime_uid: vs.prime(),
                output_val: vs.voter_output().reading.val,
                output_age: vs.output_age(),
                validity: vs.voter_validity(),
            },
            prime_switched: prev_prime.is_some_and(|p| p != vs.prime()),
        }
    }

    pub fn unit(&self, uid: UnitId) -> Option<&UnitTrace> {
        self.units.iter().find(|u| u.uid == uid)
    }
}

/// Voter states for every cycle of the scenario. `init` consumes cycle 0.
pub fn simulate(scenario: &Scenario) -> Result<Vec<VoterState>, VoterError> {
    let config = &scenario.config;
    let mut outputs = scenario.cycles.iter().map(readings_of);
    let Some(first) = outputs.next() else {
        return Ok(Vec::new());
    };
    let mut states = vec![VoterState::init(config, &first)?];
    for o in outputs {
        let next = states.last().expect("nonempty").step(config, &o)?;
        states.push(next);
    }
    Ok(states)
}

pub fn run(scenario: &Scenario) -> Result<Vec<TraceRecord>, VoterError> {
    let states = simulate(scenario)?;
    let mut prev = None;
    Ok(states
        .iter()
        .zip(&scenario.cycles)
        .enumerate()
        .map(|(t, (vs, c))| {
            let r = TraceRecord::from_state(t, c.ground_truth, vs, prev);
            prev = Some(vs.prime());
            r
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub cycles: usize,
    pub switches: usize,
    pub isolations: usize,
    pub final_validity: Option<crate::domain::ValidityStatus>,
    pub max_age: u32,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cycles={} switches={} isolations={} final={} max_age={}",
            self.cycles,
            self.switches,
            self.isolations,
            self.final_validity.map_or_else(|| "none".to_string(), |v| v.to_string()),
            self.max_age
        )
    }
}

/// Counts prime switches, units isolated by the end, the final validity and
/// the largest output age.
pub fn summarize(trace: &[TraceRecord]) -> RunSummary {
    RunSummary {
        cycles: trace.len(),
        switches: trace.iter().filter(|r| r.prime_switched).count(),
        isolations: trace.last().map_or(0, |r| {
            r.units.iter().filter(|u| u.iso_status == IsolationStatus::Isolated).count()
        }),
        final_validity: trace.last().map(|r| r.voter.validity),
        max_age: trace.iter().map(|r| r.voter.output_age).max().unwrap_or(0),
    }
}
