use nmr_voter::oracle::enumerate_and_check;
use nmr_voter::{AbstractState, SignalHealth, VoterConfig};

#[test]
fn four_units_three_values_three_cycles() {
    let cfg = VoterConfig::new(4, 10, 2, 1, Some(2)).unwrap();
    let r = enumerate_and_check(&cfg, &[0, 15, 40], &[SignalHealth::Good], 3).unwrap();
    assert!(r.verdict.pass, "{}", r.verdict);
    assert_eq!(r.stats.traces, 531_441);
    assert_eq!(r.verdict.total_findings(), 0);
    println!("{:?} {:?}", r.stats.transitions, r.verdict.notes);
    println!("states={} init_rejected={} admissible={}", r.stats.states_visited, r.stats.init_rejected, r.stats.admissible_traces);
    assert!(r.stats.transitions.contains(&(AbstractState::S0, AbstractState::S0)));
}

#[test]
fn three_units_with_bad_health() {
    let cfg = VoterConfig::new(3, 10, 2, 1, None).unwrap();
    let r = enumerate_and_check(&cfg, &[0, 40], &[SignalHealth::Good, SignalHealth::Bad], 2).unwrap();
    assert!(r.verdict.pass, "{}", r.verdict);
    assert_eq!(r.stats.traces, 4096);
}
