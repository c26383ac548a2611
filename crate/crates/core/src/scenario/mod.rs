//! Ground-truth-aware fault-injection scenarios.
//!
//! A [`Scenario`] is a configuration plus one [`CycleInput`] per cycle. Each
//! cycle carries the (simulator-only) ground truth and, for every unit, the
//! injected behaviour and the resolved reading value. Scenario files are
//! pretty-printed JSON; traces are JSON Lines with one [`TraceRecord`] each.

mod generate;
mod hypothesis;
mod run;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::VoterConfig;
use crate::domain::{adiff, Reading, SignalHealth, UnitId, UnitOutput};

pub use generate::{generate_scenario, Profile};
pub use hypothesis::{check_simul_fault_hypothesis, FaultHistory};
pub use run::{run, simulate, summarize, RunSummary, TraceRecord, UnitTrace, VoterTrace};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid profile: {0}")]
    Profile(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("deviant offset {offset} must exceed delta {delta} in magnitude")]
    DeviantTooSmall { offset: i64, delta: u64 },
    #[error("noise {noise} for unit {uid} is outside [-delta, +delta]")]
    NoiseOutOfRange { uid: UnitId, noise: i64 },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Injected behaviour of one unit in one cycle, as used by the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitBehavior {
    Nominal,
    /// Good health, reading offset from the ground truth by more than `delta`.
    Deviant { offset: i64 },
    /// Self-reported bad health; the value itself is nominal.
    BadHealth,
}

impl UnitBehavior {
    pub fn deviant(offset: i64, delta: u64) -> Result<Self, ScenarioError> {
        if offset.unsigned_abs() <= delta {
            return Err(ScenarioError::DeviantTooSmall { offset, delta });
        }
        Ok(UnitBehavior::Deviant { offset })
    }

    pub fn label(&self) -> Behavior {
        match self {
            UnitBehavior::Nominal => Behavior::Nominal,
            UnitBehavior::Deviant { .. } => Behavior::Deviant,
            UnitBehavior::BadHealth => Behavior::BadHealth,
        }
    }
}

/// Behaviour label as stored in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Nominal,
    Deviant,
    BadHealth,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitInput {
    pub uid: UnitId,
    pub behavior: Behavior,
    pub value: u64,
}

impl UnitInput {
    pub fn health(&self) -> SignalHealth {
        match self.behavior {
            Behavior::BadHealth => SignalHealth::Bad,
            _ => SignalHealth::Good,
        }
    }

    /// Faulty behaviour: bad health, or a value more than `delta` from the truth.
    pub fn is_faulty(&self, ground_truth: u64, delta: u64) -> bool {
        self.health() == SignalHealth::Bad || adiff(self.value, ground_truth) > delta
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleInput {
    pub ground_truth: u64,
    pub units: Vec<UnitInput>,
}

fn offset_value(ground_truth: u64, offset: i64) -> u64 {
    (ground_truth as i128 + offset as i128).clamp(0, u64::MAX as i128) as u64
}

impl CycleInput {
    /// Resolves behaviours and noise terms into concrete reading values.
    ///
    /// Nominal and bad-health readings are `ground_truth + noise`; deviant
    /// readings are `ground_truth + offset`. Values clamp at zero.
    pub fn resolve(
        ground_truth: u64,
        behaviors: &[(UnitId, UnitBehavior)],
        noise: &[(UnitId, i64)],
        delta: u64,
    ) -> Result<Self, ScenarioError> {
        if behaviors.len() != noise.len() {
            return Err(ScenarioError::Invalid(
                "one behaviour and one noise term per unit required".into(),
            ));
        }
        let units = behaviors
            .iter()
            .map(|(uid, b)| {
                let n = noise
                    .iter()
                    .find(|(u, _)| u == uid)
                    .map(|(_, n)| *n)
                    .ok_or_else(|| ScenarioError::Invalid(format!("no noise term for unit {uid}")))?;
                if n.unsigned_abs() > delta {
                    return Err(ScenarioError::NoiseOutOfRange { uid: *uid, noise: n });
                }
                let value = match b {
                    UnitBehavior::Deviant { offset } => {
                        UnitBehavior::deviant(*offset, delta)?;
                        offset_value(ground_truth, *offset)
                    }
                    UnitBehavior::Nominal | UnitBehavior::BadHealth => {
                        offset_value(ground_truth, n)
                    }
                };
                Ok(UnitInput { uid: *uid, behavior: b.label(), value })
            })
            .collect::<Result<_, ScenarioError>>()?;
        Ok(CycleInput { ground_truth, units })
    }
}

/// Unit outputs the voter sees for one cycle.
pub fn readings_of(c: &CycleInput) -> Vec<UnitOutput> {
    c.units
        .iter()
        .map(|u| UnitOutput {
            uid: u.uid,
            reading: Reading { val: u.value, hw_hlth: u.health() },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: VoterConfig,
    pub seed: u64,
    pub declared_hypothesis_ok: bool,
    pub cycles: Vec<CycleInput>,
}

impl Scenario {
    /// Structural checks: at least one cycle, every cycle lists the
    /// configured uids in order, and behaviour labels agree with the values.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.cycles.is_empty() {
            return Err(ScenarioError::Invalid("scenario has no cycles".into()));
        }
        let delta = self.config.delta();
        for (t, c) in self.cycles.iter().enumerate() {
            let uids: Vec<UnitId> = c.units.iter().map(|u| u.uid).collect();
            if !uids.iter().copied().eq(self.config.unit_ids()) {
                return Err(ScenarioError::Invalid(format!(
                    "cycle {t}: expected units 1..={} in order",
                    self.config.num_units()
                )));
            }
            for u in &c.units {
                let far = adiff(u.value, c.ground_truth) > delta;
                let consistent = match u.behavior {
                    Behavior::Deviant => far,
                    Behavior::Nominal | Behavior::BadHealth => !far,
                };
                if !consistent {
                    return Err(ScenarioError::Invalid(format!(
                        "cycle {t}: unit {} labelled {:?} but value {} vs ground truth {}",
                        u.uid, u.behavior, u.value, c.ground_truth
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }
}

pub fn write_trace<W: Write>(mut out: W, trace: &[TraceRecord]) -> Result<(), ScenarioError> {
    for r in trace {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<TraceRecord>, ScenarioError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| ScenarioError::Parse { line: i + 1, source })?,
        );
    }
    Ok(out)
}
