use std::collections::BTreeSet;

use super::rules::{apart, expected_classes, faulty, healthy, Class, Obs};
use super::{Finding, OracleError, Verdict};
use crate::config::VoterConfig;
use crate::domain::{IsolationStatus, MiscompStatus, SignalHealth, UnitId, ValidityStatus};
use crate::scenario::{check_simul_fault_hypothesis, Scenario, TraceRecord, UnitTrace};
use crate::voter::AbstractState;

/// Abstract state of a trace record, derived from its fields alone.
fn abstract_of(r: &TraceRecord) -> AbstractState {
    match r.voter.validity {
        ValidityStatus::NotValid => AbstractState::S4,
        ValidityStatus::UnId => AbstractState::S3,
        ValidityStatus::Valid if r.voter.output_age > 0 => AbstractState::S1,
        ValidityStatus::Valid if r.units.iter().any(|u| u.iso_status == IsolationStatus::Isolated) => AbstractState::S2,
        ValidityStatus::Valid => AbstractState::S0,
    }
}

/// Arrows of the abstract state machine. `S0 -> S4` is not among them but
/// is reachable when a single isolation drops the unit count below
/// `min_required`; it is reported as a note rather than a finding.
fn arrow_allowed(from: AbstractState, to: AbstractState) -> bool {
    use AbstractState::*;
    matches!(
        (from, to),
        (S0, S0 | S1 | S2) | (S1, S0 | S1 | S2 | S3 | S4) | (S2, S1 | S2 | S4) | (S3, S2 | S3 | S4) | (S4, S4)
    )
}

fn unit_healthy(u: &UnitTrace) -> bool {
    healthy(u.health, u.iso_status, u.miscomp_status)
}

/// Incremental trace checker. Feed records in order with [`observe`](Self::observe).
///
/// Cloning a checker forks it, which lets an enumerator share prefixes.
#[derive(Debug, Clone)]
pub struct TraceChecker {
    config: VoterConfig,
    index: usize,
    prev: Option<TraceRecord>,
    last_switch: Option<usize>,
}

impl TraceChecker {
    pub fn new(config: VoterConfig) -> Self {
        TraceChecker { config, index: 0, prev: None, last_switch: None }
    }

    /// Checks the next record.
    ///
    /// `truths` lists the ground-truth candidates under which the fault
    /// hypothesis held on every cycle up to and including this one. The
    /// conditioned checks run once per candidate that also satisfies the
    /// per-cycle premise (at most `max_simul_fault` faulty non-isolated units,
    /// at least `min_required` non-isolated units before the cycle).
    pub fn observe(&mut self, rec: &TraceRecord, truths: &[u64], v: &mut Verdict) {
        let t = self.index;
        self.index += 1;
        let cfg = self.config;
        let p = cfg.persistence_lmt();
        let at = |check: &str, uid: Option<UnitId>, detail: String| Finding::new(Some(t), check, uid, detail);

        if rec.cycle != t {
            v.push(at("Trace", None, format!("record carries cycle {}", rec.cycle)));
        }
        let uids: Vec<u32> = rec.units.iter().map(|u| u.uid.0).collect();
        if !uids.iter().copied().eq(1..=cfg.num_units() as u32) {
            v.push(at("pf_ud_lst", None, format!("unit list {uids:?}")));
            self.prev = Some(rec.clone());
            return;
        }
        let prev = self.prev.take();
        let before = |uid: UnitId| -> (IsolationStatus, MiscompStatus, u32) {
            prev.as_ref()
                .and_then(|r| r.unit(uid))
                .map(|u| (u.iso_status, u.miscomp_status, u.risky_count))
                .unwrap_or((IsolationStatus::NotIsolated, MiscompStatus::NotMiscomparing, 0))
        };

        // Per-unit bookkeeping.
        for u in &rec.units {
            let r = u.risky_count;
            if r > p || (u.iso_status == IsolationStatus::Isolated) != (r == p) {
                v.push(at("R6", Some(u.uid), format!("{:?} with risky_count {r}", u.iso_status)));
            }
            if (r == 0) != unit_healthy(u) {
                v.push(at("pf_healthy", Some(u.uid), format!("risky_count {r}, healthy = {}", unit_healthy(u))));
            }
            let (piso, pm, pr) = before(u.uid);
            if piso == IsolationStatus::Isolated {
                if u.iso_status != IsolationStatus::Isolated || u.risky_count != pr || u.miscomp_status != pm {
                    v.push(at("R7", Some(u.uid), "isolated unit changed status".into()));
                }
                continue;
            }
            let flagged = u.health == SignalHealth::Bad || u.miscomp_status != MiscompStatus::NotMiscomparing;
            if !(r == 0 || r == pr + 1) || (r == pr + 1) != flagged {
                v.push(at("R1", Some(u.uid), format!("risky_count {pr} -> {r}, flagged = {flagged}")));
            }
            if u.health == SignalHealth::Bad && u.miscomp_status != MiscompStatus::MaybeMiscomparing {
                v.push(at("BadHealth", Some(u.uid), format!("bad health recorded as {:?}", u.miscomp_status)));
            }
        }

        // Classification rules, re-derived from values and previous isolation.
        let obs: Vec<Obs> = rec
            .units
            .iter()
            .map(|u| Obs {
                uid: u.uid,
                val: u.val,
                good: u.health == SignalHealth::Good,
                was_active: before(u.uid).0 == IsolationStatus::NotIsolated,
            })
            .collect();
        let expected = expected_classes(&obs, cfg.max_simul_fault(), cfg.delta());
        for (uid, _, class) in &expected.pool {
            let got = rec.unit(*uid).expect("uid checked").miscomp_status;
            let (id, want) = match class {
                Class::Miscomparing => ("R4", MiscompStatus::Miscomparing),
                Class::NotMiscomparing => ("R5", MiscompStatus::NotMiscomparing),
                Class::Maybe => ("R5", MiscompStatus::MaybeMiscomparing),
            };
            if got != want {
                v.push(at(id, Some(*uid), format!("expected {want:?}, recorded {got:?}")));
            }
        }

        self.check_output(t, rec, prev.as_ref(), v);

        // Conditioned checks.
        let active_before = obs.iter().filter(|o| o.was_active).count();
        if active_before >= cfg.min_required() && !truths.is_empty() {
            let mut ran = false;
            let mut seen = BTreeSet::new();
            for &g in truths {
                let faults = obs.iter().filter(|o| o.was_active && faulty(o, g, cfg.delta())).count();
                if faults > cfg.max_simul_fault() {
                    continue;
                }
                ran = true;
                self.conditioned(t, rec, &obs, &expected, g, &mut seen, v);
            }
            v.note(if ran { "conditioned_checked" } else { "conditioned_skipped" });
        } else {
            v.note("conditioned_skipped");
        }

        self.prev = Some(rec.clone());
    }

    fn check_output(&mut self, t: usize, rec: &TraceRecord, prev: Option<&TraceRecord>, v: &mut Verdict) {
        let cfg = self.config;
        let p = cfg.persistence_lmt();
        let at = |check: &str, uid: Option<UnitId>, detail: String| Finding::new(Some(t), check, uid, detail);
        let voter = &rec.voter;
        let (age, validity) = (voter.output_age, voter.validity);

        let Some(prime) = rec.unit(voter.prime_uid) else {
            v.push(at("pf_v_output", Some(voter.prime_uid), "prime is not a configured unit".into()));
            return;
        };
        let active = rec.units.iter().filter(|u| u.iso_status == IsolationStatus::NotIsolated).count();
        let enough = active >= cfg.min_required();
        let prime_iso = prime.iso_status == IsolationStatus::Isolated;
        let first_healthy = rec.units.iter().find(|u| unit_healthy(u)).map(|u| u.uid);

        if (validity == ValidityStatus::NotValid) == enough {
            v.push(at("R10", None, format!("{validity} with {active} non-isolated units")));
        }
        if (validity == ValidityStatus::UnId) != (enough && prime_iso) {
            v.push(at("R11", None, format!("{validity} with prime isolated = {prime_iso}")));
        }
        if validity == ValidityStatus::UnId && first_healthy.is_some() {
            v.push(at("R11", None, "un_id although a unit provides healthy data".into()));
        }
        if enough && first_healthy.is_some() && validity != ValidityStatus::Valid {
            v.push(at("R13", None, format!("{validity} although a unit provides healthy data")));
        }
        if validity == ValidityStatus::Valid {
            if prime_iso {
                v.push(at("pf_out_not_isolated", Some(prime.uid), "valid output from an isolated prime".into()));
            }
            if age != prime.risky_count {
                v.push(at("R14", Some(prime.uid), format!("age {age} differs from prime risky_count {}", prime.risky_count)));
            }
        }
        if (age == 0) != (validity == ValidityStatus::Valid && unit_healthy(prime)) {
            v.push(at("R15", None, format!("age {age}, {validity}, prime healthy = {}", unit_healthy(prime))));
        }
        if (age < p) != (validity == ValidityStatus::Valid) || (age >= 2 * p) != (validity == ValidityStatus::NotValid) {
            v.push(at("R16", None, format!("age {age} with validity {validity}")));
        }
        if validity != ValidityStatus::NotValid {
            for u in rec.units.iter().filter(|u| u.iso_status == IsolationStatus::NotIsolated) {
                if age >= u.risky_count + p {
                    v.push(at("Claim5", Some(u.uid), format!("age {age} vs risky_count {}", u.risky_count)));
                }
            }
            if age > 2 * (p - 1) {
                v.push(at("Prop3", None, format!("age {age} above {}", 2 * (p - 1))));
            }
        } else if age != cfg.not_valid_age() {
            v.push(at("S4", None, format!("not_valid with age {age}")));
        }

        let Some(prev) = prev else {
            if validity != ValidityStatus::Valid || age != 0 || Some(prime.uid) != first_healthy {
                v.push(at("Init", Some(prime.uid), format!("initial output {validity} age {age}, first healthy {first_healthy:?}")));
            }
            if rec.prime_switched {
                v.push(at("Trace", None, "first record marked as a switch".into()));
            }
            if voter.output_val != prime.val || !unit_healthy(prime) {
                v.push(at("R8", Some(prime.uid), "initial output is not the prime's healthy reading".into()));
            }
            return;
        };

        if age == 0 {
            if voter.output_val != prime.val || !unit_healthy(prime) {
                v.push(at("R8", Some(prime.uid), "fresh output is not the prime's healthy reading".into()));
            }
        } else if voter.output_val != prev.voter.output_val || voter.prime_uid != prev.voter.prime_uid {
            v.push(at("R8", Some(prime.uid), "aged output differs from the retained one".into()));
        }

        let switched = voter.prime_uid != prev.voter.prime_uid;
        if rec.prime_switched != switched {
            v.push(at("Trace", None, format!("prime_switched = {} but prime changed = {switched}", rec.prime_switched)));
        }
        if switched {
            let old_iso = rec.unit(prev.voter.prime_uid).is_some_and(|u| u.iso_status == IsolationStatus::Isolated);
            if !old_iso {
                v.push(at("R9", Some(prev.voter.prime_uid), format!("prime changed to {} without isolation", voter.prime_uid)));
            }
            if Some(voter.prime_uid) != first_healthy {
                v.push(at("PrimeChoice", Some(voter.prime_uid), format!("first healthy unit is {first_healthy:?}")));
            }
            if let Some(s) = self.last_switch {
                if t - s < p as usize {
                    v.push(at("Prop2", Some(voter.prime_uid), format!("switches at cycles {s} and {t}")));
                }
            }
            self.last_switch = Some(t);
        }
        if validity != ValidityStatus::NotValid && age != 0 && age != prev.voter.output_age + 1 {
            v.push(at("R14", None, format!("age {} -> {age}", prev.voter.output_age)));
        }
        if prev.voter.validity == ValidityStatus::NotValid && validity != ValidityStatus::NotValid {
            v.push(at("S4", None, format!("left not_valid for {validity}")));
        }
        let (from, to) = (abstract_of(prev), abstract_of(rec));
        if !arrow_allowed(from, to) {
            if (from, to) == (AbstractState::S0, AbstractState::S4) {
                v.note("Fig3_S0_S4");
            } else {
                v.push(at("Fig3", None, format!("{from} -> {to}")));
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn conditioned(
        &self,
        t: usize,
        rec: &TraceRecord,
        obs: &[Obs],
        expected: &super::rules::Expected,
        g: u64,
        seen: &mut BTreeSet<(&'static str, Option<UnitId>)>,
        v: &mut Verdict,
    ) {
        let delta = self.config.delta();
        let mut fail = |check: &'static str, uid: Option<UnitId>, detail: String| {
            if seen.insert((check, uid)) {
                v.push(Finding::new(Some(t), check, uid, format!("{detail} (ground truth {g})")));
            }
        };
        let wide = 3u128 * delta as u128;
        let wide = wide.min(u64::MAX as u128) as u64;
        for o in obs.iter().filter(|o| o.was_active) {
            let u = rec.unit(o.uid).expect("uid checked");
            if u.miscomp_status == MiscompStatus::Miscomparing && !apart(o.val, g, delta) {
                fail("SoundA", Some(o.uid), format!("miscomparing at value {}", o.val));
            }
            if o.good && u.miscomp_status == MiscompStatus::NotMiscomparing && apart(o.val, g, wide) {
                fail("SoundB", Some(o.uid), format!("not_miscomparing at value {}", o.val));
            }
        }
        if !expected.survivors_suffice() {
            return;
        }
        let mut broad = 0;
        for o in obs.iter().filter(|o| o.was_active) {
            let u = rec.unit(o.uid).expect("uid checked");
            if !o.good {
                if u.miscomp_status == MiscompStatus::MaybeMiscomparing {
                    broad += 1;
                }
                continue;
            }
            if u.miscomp_status == MiscompStatus::MaybeMiscomparing {
                fail("R2", Some(o.uid), "maybe_miscomparing with enough survivors".into());
            }
            if apart(o.val, g, wide) && u.miscomp_status != MiscompStatus::Miscomparing {
                fail("CompA", Some(o.uid), format!("{:?} at value {}", u.miscomp_status, o.val));
            }
            if !apart(o.val, g, delta) && u.miscomp_status != MiscompStatus::NotMiscomparing {
                fail("CompB", Some(o.uid), format!("{:?} at value {}", u.miscomp_status, o.val));
            }
        }
        let active = rec.units.iter().filter(|u| u.iso_status == IsolationStatus::NotIsolated).count();
        if active >= self.config.min_required() && rec.voter.validity != ValidityStatus::Valid {
            fail("R12", None, format!("{} with enough survivors", rec.voter.validity));
        }
        for _ in 0..broad {
            v.note("R2_broad");
        }
    }
}

/// Checks a trace against the scenario it was produced from.
pub fn check_trace(trace: &[TraceRecord], scenario: &Scenario) -> Result<Verdict, OracleError> {
    if trace.len() != scenario.cycles.len() {
        return Err(OracleError::TraceMismatch { trace: trace.len(), scenario: scenario.cycles.len() });
    }
    let hypothesis = check_simul_fault_hypothesis(scenario);
    let mut v = Verdict::new();
    let mut checker = TraceChecker::new(scenario.config);
    let mut prefix_ok = true;
    for (t, (rec, cycle)) in trace.iter().zip(&scenario.cycles).enumerate() {
        prefix_ok &= hypothesis[t];
        if rec.ground_truth != cycle.ground_truth {
            v.push(Finding::new(Some(t), "Trace", None, "ground truth differs from the scenario"));
        }
        for (u, input) in rec.units.iter().zip(&cycle.units) {
            if u.uid != input.uid || u.val != input.value || u.health != input.health() {
                v.push(Finding::new(Some(t), "Trace", Some(u.uid), "reading differs from the scenario"));
            }
        }
        let truths: &[u64] = if prefix_ok { std::slice::from_ref(&cycle.ground_truth) } else { &[] };
        checker.observe(rec, truths, &mut v);
    }
    Ok(v)
}
