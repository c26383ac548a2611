//! Independent requirements checker.
//!
//! Every predicate here is re-derived from trace data or raw state fields
//! without calling into the voter's classification or update code, so that
//! agreement between the two is evidence rather than tautology.
//!
//! Check ids used in findings:
//!
//! | id | meaning |
//! |----|---------|
//! | `R1` | risky count is reset or incremented, and incremented exactly when flagged |
//! | `R4`, `R5` | classification rules for `miscomparing` / `not_miscomparing` |
//! | `R6` | isolated exactly at `risky_count == persistence_lmt` |
//! | `R7` | isolation is permanent |
//! | `R8` | output is healthy data and is retained while aging |
//! | `R9` | prime changes only when the old prime was isolated |
//! | `R10`, `R11`, `R13` | validity grading |
//! | `R12` | valid under the minimum surviving units assumption |
//! | `R14` | age step and age equal to the prime's risky count |
//! | `R15` | age zero exactly for a fresh valid output |
//! | `R16` | age bands per validity |
//! | `R2`, `CompA`, `CompB` | completeness under the minimum surviving units assumption |
//! | `SoundA`, `SoundB` | soundness against the ground truth |
//! | `Claim5`, `Prop2`, `Prop3` | age/risky relation, prime stability, age bound |
//! | `Fig3`, `S4` | abstract-state arrows, absorbing not-valid state |
//! | `Init`, `PrimeChoice` | initial prime and replacement prime selection |
//! | `pf_*`, `Trace` | record shape and trace/scenario consistency |

mod enumerate;
mod mutate;
mod rules;
mod state;
mod trace;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::UnitId;

pub use enumerate::{enumerate_and_check, trace_count, EnumStats, EnumerationReport, TRACE_BUDGET};
pub use mutate::{mutation_fixture, Mutation};
pub use state::check_state_invariants;
pub use trace::{check_trace, TraceChecker};

/// Upper bound on findings kept in one verdict; the rest are only counted.
pub const MAX_FINDINGS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("trace has {trace} records but the scenario has {scenario} cycles")]
    TraceMismatch { trace: usize, scenario: usize },
    #[error("enumeration of {requested} traces exceeds the budget of {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },
    #[error("value and health domains must be nonempty and the horizon at least 1")]
    EmptyDomain,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Finding {
    pub cycle: Option<usize>,
    pub check: String,
    pub uid: Option<UnitId>,
    pub detail: String,
}

impl Finding {
    pub fn new(cycle: Option<usize>, check: &str, uid: Option<UnitId>, detail: impl Into<String>) -> Self {
        Finding { cycle, check: check.to_string(), uid, detail: detail.into() }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.check)?;
        if let Some(c) = self.cycle {
            write!(f, " cycle {c}")?;
        }
        if let Some(u) = self.uid {
            write!(f, " {u}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Outcome of a check. `pass` holds exactly when no finding was raised.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub findings: Vec<Finding>,
    /// Findings beyond [`MAX_FINDINGS`] that were counted but not kept.
    pub dropped: usize,
    /// Informational counters that do not affect `pass`.
    pub notes: BTreeMap<String, u64>,
}

impl Verdict {
    pub fn new() -> Self {
        Verdict { pass: true, ..Default::default() }
    }

    pub fn push(&mut self, f: Finding) {
        self.pass = false;
        if self.findings.len() < MAX_FINDINGS {
            self.findings.push(f);
        } else {
            self.dropped += 1;
        }
    }

    pub fn note(&mut self, key: &str) {
        *self.notes.entry(key.to_string()).or_default() += 1;
    }

    pub fn total_findings(&self) -> usize {
        self.findings.len() + self.dropped
    }

    /// Whether some finding carries the given check id.
    pub fn has(&self, check: &str) -> bool {
        self.findings.iter().any(|f| f.check == check)
    }

    /// Associative, order-independent combination: findings are sorted and
    /// the smallest [`MAX_FINDINGS`] kept.
    pub fn merge(mut self, other: Verdict) -> Verdict {
        let total = self.total_findings() + other.total_findings();
        self.findings.extend(other.findings);
        self.findings.sort();
        self.findings.truncate(MAX_FINDINGS);
        self.dropped = total - self.findings.len();
        self.pass = total == 0;
        for (k, v) in other.notes {
            *self.notes.entry(k).or_default() += v;
        }
        self
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        if self.dropped > 0 {
            writeln!(f, "... and {} more findings", self.dropped)?;
        }
        for (k, v) in &self.notes {
            writeln!(f, "note {k}: {v}")?;
        }
        write!(f, "{}", if self.pass { "PASS" } else { "FAIL" })?;
        if !self.pass {
            write!(f, " ({} findings)", self.total_findings())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(c: usize, id: &str) -> Finding {
        Finding::new(Some(c), id, None, "x")
    }

    #[test]
    fn pass_tracks_findings() {
        let mut v = Verdict::new();
        assert!(v.pass);
        v.note("info");
        assert!(v.pass);
        v.push(f(0, "R9"));
        assert!(!v.pass && v.has("R9") && !v.has("R1"));
    }

    #[test]
    fn merge_is_order_independent() {
        let mk = |ids: &[(usize, &str)]| {
            let mut v = Verdict::new();
            for (c, id) in ids {
                v.push(f(*c, id));
            }
            v.note("n");
            v
        };
        let a = mk(&[(3, "R1"), (1, "R9")]);
        let b = mk(&[(2, "R7")]);
        let c = mk(&[]);
        let ab_c = a.clone().merge(b.clone()).merge(c.clone());
        let c_ba = c.clone().merge(b.clone().merge(a.clone()));
        assert_eq!(ab_c, c_ba);
        assert_eq!(ab_c.notes["n"], 3);
        assert!(Verdict::new().merge(Verdict::new()).pass);
    }

    #[test]
    fn merge_caps_findings() {
        let mut a = Verdict::new();
        let mut b = Verdict::new();
        for i in 0..MAX_FINDINGS {
            a.push(f(i, "A"));
            b.push(f(i, "B"));
        }
        b.push(f(0, "C"));
        assert_eq!(b.dropped, 1);
        let m = a.merge(b);
        assert_eq!(m.findings.len(), MAX_FINDINGS);
        assert_eq!(m.total_findings(), 2 * MAX_FINDINGS + 1);
    }
}
