use nmr_voter::oracle::{check_state_invariants, check_trace};
use nmr_voter::scenario::{generate_scenario, read_trace, run, simulate, write_trace, Profile};
use nmr_voter::{IsolationStatus, UnitId, ValidityStatus, VoterConfig};
use proptest::prelude::*;

fn config() -> impl Strategy<Value = VoterConfig> {
    (4usize..=7, 1u64..30, 2u32..=4).prop_flat_map(|(n, delta, p)| {
        (1..=(n - 1) / 2).prop_map(move |f| VoterConfig::new(n, delta, p, f, None).unwrap())
    })
}

fn profile(n: usize) -> impl Strategy<Value = Profile> {
    (0.0f64..0.4, proptest::collection::btree_set(1u32..=n as u32, 0..=2), 0u64..12).prop_map(
        |(fault_rate, targets, max_increment)| Profile {
            horizon: 60,
            fault_rate,
            permanent_targets: targets.into_iter().map(UnitId).collect(),
            max_increment,
            violate_hypothesis: false,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generated_runs_satisfy_the_oracle(
        (cfg, prof) in config().prop_flat_map(|c| (Just(c), profile(c.num_units()))),
        seed in any::<u64>(),
    ) {
        let s = generate_scenario(&cfg, seed, &prof).unwrap();
        prop_assert!(s.declared_hypothesis_ok);
        let states = simulate(&s).unwrap();
        for (t, vs) in states.iter().enumerate() {
            let v = check_state_invariants(vs, &cfg);
            prop_assert!(v.pass, "cycle {t}: {v}");
        }
        let trace = run(&s).unwrap();
        let v = check_trace(&trace, &s).unwrap();
        prop_assert!(v.pass, "{v}");

        // Isolation is permanent and the output never reports an isolated unit.
        for w in trace.windows(2) {
            for (a, b) in w[0].units.iter().zip(&w[1].units) {
                if a.iso_status == IsolationStatus::Isolated {
                    prop_assert_eq!(b.iso_status, IsolationStatus::Isolated);
                }
            }
        }
        for r in &trace {
            if r.voter.validity == ValidityStatus::Valid {
                let prime = r.unit(r.voter.prime_uid).unwrap();
                prop_assert_eq!(prime.iso_status, IsolationStatus::NotIsolated);
            }
        }
    }

    #[test]
    fn trace_serialization_round_trips(cfg in config(), seed in any::<u64>()) {
        let s = generate_scenario(&cfg, seed, &Profile::nominal(20)).unwrap();
        let trace = run(&s).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        let back = read_trace(buf.as_slice()).unwrap();
        prop_assert_eq!(back, trace);
    }
}

#[test]
fn hypothesis_violations_do_not_produce_findings() {
    let cfg = VoterConfig::new(5, 10, 3, 2, None).unwrap();
    let mut seen_violation = false;
    for seed in 0..200 {
        let prof = Profile { horizon: 40, fault_rate: 0.2, permanent_targets: vec![], max_increment: 4, violate_hypothesis: true };
        let s = generate_scenario(&cfg, seed, &prof).unwrap();
        seen_violation |= !s.declared_hypothesis_ok;
        let trace = match run(&s) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let v = check_trace(&trace, &s).unwrap();
        assert!(v.pass, "seed {seed}: {v}");
    }
    assert!(seen_violation);
}
