//! Hand-made trace corruptions, one per requirement, used to show that the
//! trace checker notices each kind of violation.

use std::fmt;
use std::str::FromStr;

use crate::config::VoterConfig;
use crate::domain::{IsolationStatus, UnitId, ValidityStatus};
use crate::scenario::{Behavior, CycleInput, Scenario, TraceRecord, UnitInput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mutation {
    /// Risky count jumps by two.
    R1,
    /// A unit is marked isolated below the persistence limit.
    R6,
    /// An isolated unit comes back.
    R7,
    /// The prime changes while the old prime is still active.
    R9,
    /// The output age skips a cycle.
    R14,
    /// A retained output is reported with age zero.
    R15,
    /// A valid output is reported at age `persistence_lmt`.
    R16,
}

impl Mutation {
    pub const ALL: [Mutation; 7] =
        [Mutation::R1, Mutation::R6, Mutation::R7, Mutation::R9, Mutation::R14, Mutation::R15, Mutation::R16];

    /// Check id the oracle is expected to report.
    pub fn check_id(&self) -> &'static str {
        match self {
            Mutation::R1 => "R1",
            Mutation::R6 => "R6",
            Mutation::R7 => "R7",
            Mutation::R9 => "R9",
            Mutation::R14 => "R14",
            Mutation::R15 => "R15",
            Mutation::R16 => "R16",
        }
    }

    /// Corrupts a copy of `trace`, or returns `None` if the trace has no
    /// record the mutation applies to.
    pub fn apply(&self, trace: &[TraceRecord], config: &VoterConfig) -> Option<Vec<TraceRecord>> {
        let mut out = trace.to_vec();
        let p = config.persistence_lmt();
        let iso = |r: &TraceRecord, i: usize| r.units[i].iso_status == IsolationStatus::Isolated;
        match self {
            Mutation::R1 => {
                let (t, i) = (0..out.len()).find_map(|t| {
                    (0..out[t].units.len())
                        .find(|&i| t == 0 || !iso(&out[t - 1], i))
                        .map(|i| (t, i))
                })?;
                let before = if t == 0 { 0 } else { out[t - 1].units[i].risky_count };
                out[t].units[i].risky_count = before + 2;
            }
            Mutation::R6 => {
                let r = out.last_mut()?;
                let u = r.units.iter_mut().find(|u| u.iso_status == IsolationStatus::NotIsolated && u.risky_count < p)?;
                u.iso_status = IsolationStatus::Isolated;
            }
            Mutation::R7 => {
                let (t, i) = (1..out.len()).find_map(|t| {
                    (0..out[t].units.len()).find(|&i| iso(&out[t - 1], i) && iso(&out[t], i)).map(|i| (t, i))
                })?;
                out[t].units[i].iso_status = IsolationStatus::NotIsolated;
            }
            Mutation::R9 => {
                let t = (1..out.len()).find(|&t| !out[t].prime_switched)?;
                let cur = out[t].voter.prime_uid;
                let other = out[t]
                    .units
                    .iter()
                    .find(|u| u.uid != cur && u.iso_status == IsolationStatus::NotIsolated)?
                    .uid;
                out[t].voter.prime_uid = other;
            }
            Mutation::R14 => {
                let t = (1..out.len()).find(|&t| {
                    out[t].voter.validity != ValidityStatus::NotValid
                        && out[t - 1].voter.validity != ValidityStatus::NotValid
                })?;
                out[t].voter.output_age = out[t - 1].voter.output_age + 2;
            }
            Mutation::R15 => {
                let r = out.iter_mut().find(|r| r.voter.validity != ValidityStatus::NotValid && r.voter.output_age > 0)?;
                r.voter.output_age = 0;
            }
            Mutation::R16 => {
                let r = out.iter_mut().find(|r| r.voter.validity == ValidityStatus::Valid)?;
                r.voter.output_age = p;
            }
        }
        Some(out)
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.check_id())
    }
}

impl FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mutation::ALL
            .into_iter()
            .find(|m| m.check_id().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown mutation `{s}`"))
    }
}

/// A short scenario that visits S0, S1 and S2 and isolates the initial
/// prime, so that every mutation in [`Mutation::ALL`] applies to its trace.
pub fn mutation_fixture() -> Scenario {
    use Behavior::{BadHealth as B, Deviant as D, Nominal as N};
    let config = VoterConfig::new(4, 10, 3, 1, None).expect("fixture config is valid");
    let rows: [[Behavior; 4]; 9] = [
        [N, N, N, N],
        [B, N, N, N],
        [N, N, N, N],
        [D, N, N, N],
        [D, N, N, N],
        [D, N, N, N],
        [N, N, N, N],
        [N, B, N, N],
        [N, N, N, N],
    ];
    let gt = 100;
    let cycles = rows
        .iter()
        .map(|row| CycleInput {
            ground_truth: gt,
            units: row
                .iter()
                .enumerate()
                .map(|(i, b)| UnitInput {
                    uid: UnitId(i as u32 + 1),
                    behavior: *b,
                    value: if *b == D { gt + 50 } else { gt + i as u64 },
                })
                .collect(),
        })
        .collect();
    Scenario { config, seed: 0, declared_hypothesis_ok: true, cycles }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::check_trace;
    use crate::scenario::run;

    #[test]
    fn fixture_is_clean() {
        let s = mutation_fixture();
        s.validate().unwrap();
        let trace = run(&s).unwrap();
        let v = check_trace(&trace, &s).unwrap();
        assert!(v.pass, "{v}");
        assert!(trace[5].prime_switched);
    }

    #[test]
    fn every_mutation_is_detected_with_its_id() {
        let s = mutation_fixture();
        let trace = run(&s).unwrap();
        for m in Mutation::ALL {
            let bad = m.apply(&trace, &s.config).unwrap_or_else(|| panic!("{m} does not apply"));
            assert_ne!(bad, trace);
            let v = check_trace(&bad, &s).unwrap();
            assert!(v.has(m.check_id()), "{m}: {v}");
        }
    }

    #[test]
    fn parse_round_trip() {
        for m in Mutation::ALL {
            assert_eq!(m.to_string().parse::<Mutation>(), Ok(m));
        }
        assert_eq!("r9".parse::<Mutation>(), Ok(Mutation::R9));
        assert!("R2".parse::<Mutation>().is_err());
    }

    #[test]
    fn inapplicable_mutations_return_none() {
        let s = mutation_fixture();
        let trace = run(&s).unwrap();
        assert!(Mutation::R7.apply(&trace[..2], &s.config).is_none());
        assert!(Mutation::R9.apply(&trace[..1], &s.config).is_none());
    }
}
