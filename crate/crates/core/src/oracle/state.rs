use super::rules::healthy;
use super::{Finding, Verdict};
use crate::config::VoterConfig;
use crate::domain::{IsolationStatus, UnitData, ValidityStatus};
use crate::voter::VoterState;

fn data_healthy(d: &UnitData) -> bool {
    healthy(d.u_output().reading.hw_hlth, d.u_status().iso_status(), d.u_status().miscomp_status())
}

/// Checks every single-state invariant of a voter state. Findings carry no
/// cycle index; callers that know it may patch it in.
pub fn check_state_invariants(vs: &VoterState, config: &VoterConfig) -> Verdict {
    let mut v = Verdict::new();
    check_into(vs, config, None, &mut v);
    v
}

pub(crate) fn check_into(vs: &VoterState, config: &VoterConfig, cycle: Option<usize>, v: &mut Verdict) {
    let mut fail = |check: &str, uid, detail: String| v.push(Finding::new(cycle, check, uid, detail));
    let p = config.persistence_lmt();
    let list = vs.u_data_lst();

    let uids: Vec<u32> = list.iter().map(|d| d.uid().0).collect();
    let want: Vec<u32> = (1..=config.num_units() as u32).collect();
    if uids != want {
        fail("pf_ud_lst", None, format!("unit list {uids:?}, expected {want:?}"));
    }

    for d in list {
        let s = d.u_status();
        let r = s.risky_count();
        if r > p {
            fail("R6", Some(d.uid()), format!("risky_count {r} above persistence_lmt {p}"));
        }
        if (s.iso_status() == IsolationStatus::Isolated) != (r == p) {
            fail("R6", Some(d.uid()), format!("iso_status {:?} with risky_count {r}", s.iso_status()));
        }
        if (r == 0) != data_healthy(d) {
            fail("pf_healthy", Some(d.uid()), format!("risky_count {r} but healthy = {}", data_healthy(d)));
        }
    }

    let out = vs.voter_output();
    let prime = list.iter().find(|d| d.uid() == out.uid);
    if prime.is_none() {
        fail("pf_v_output", Some(out.uid), "prime is not in the unit list".into());
    }

    let kept = vs.presrvd_data();
    if kept.u_output() != out || !data_healthy(kept) {
        fail("R8", Some(out.uid), "preserved data does not match the output or is not healthy".into());
    }

    let validity = vs.voter_validity();
    let age = vs.output_age();
    let in_list = list.iter().any(|d| d == kept);
    if (age == 0) != (validity == ValidityStatus::Valid && in_list) {
        fail("R15", None, format!("age {age}, validity {validity}, preserved data current = {in_list}"));
    }

    let active = list.iter().filter(|d| d.u_status().iso_status() == IsolationStatus::NotIsolated).count();
    let enough = active >= config.min_required();
    if (validity == ValidityStatus::NotValid) == enough {
        fail("R10", None, format!("{validity} with {active} non-isolated units"));
    }

    let prime_iso = prime.is_some_and(|d| d.u_status().iso_status() == IsolationStatus::Isolated);
    let any_healthy = list.iter().any(data_healthy);
    if (validity == ValidityStatus::UnId) != (enough && prime_iso) {
        fail("R11", None, format!("{validity} with prime isolated = {prime_iso}"));
    }
    if validity == ValidityStatus::UnId && any_healthy {
        fail("R11", None, "un_id although a unit provides healthy data".into());
    }
    if enough && any_healthy && validity != ValidityStatus::Valid {
        fail("R13", None, format!("{validity} although a unit provides healthy data"));
    }

    if validity == ValidityStatus::Valid {
        if prime_iso {
            fail("pf_out_not_isolated", Some(out.uid), "valid output from an isolated prime".into());
        }
        if let Some(d) = prime {
            if age != d.u_status().risky_count() {
                fail("R14", Some(out.uid), format!("age {age} differs from prime risky_count {}", d.u_status().risky_count()));
            }
        }
    }

    if validity != ValidityStatus::NotValid {
        for d in list.iter().filter(|d| d.u_status().iso_status() == IsolationStatus::NotIsolated) {
            if age >= d.u_status().risky_count() + p {
                fail("Claim5", Some(d.uid()), format!("age {age} vs risky_count {}", d.u_status().risky_count()));
            }
        }
    }

    if (age < p) != (validity == ValidityStatus::Valid) || (age >= 2 * p) != (validity == ValidityStatus::NotValid) {
        fail("R16", None, format!("age {age} with validity {validity}"));
    }
}
