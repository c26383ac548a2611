//! Input fixtures shared by the criterion benchmarks.

use nmr_voter::{Reading, SignalHealth, UnitOutput, VoterConfig, VoterState};

/// Eight units, one simultaneous fault, `persistence_lmt` 3.
pub fn config_n8() -> VoterConfig {
    VoterConfig::new(8, 10, 3, 1, None).expect("valid benchmark config")
}

/// One cycle of readings around `base`; unit `deviant` (if any) reads far off.
pub fn cycle(config: &VoterConfig, base: u64, deviant: Option<u32>) -> Vec<UnitOutput> {
    config
        .unit_ids()
        .map(|uid| {
            let val = if Some(uid.0) == deviant { base + 100 * config.delta() } else { base + uid.0 as u64 };
            UnitOutput { uid, reading: Reading { val, hw_hlth: SignalHealth::Good } }
        })
        .collect()
}

/// A state after one nominal cycle.
pub fn warm_state(config: &VoterConfig) -> VoterState {
    VoterState::init(config, &cycle(config, 1000, None)).expect("nominal cycle has a healthy unit")
}
