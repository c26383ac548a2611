use super::Scenario;

/// Per-unit run lengths of faulty behaviour, used to tell transient from
/// permanent faults the way the fault model defines them: a unit that has
/// behaved faultily in each of the last `persistence_lmt` cycles has a
/// permanent fault from then on.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FaultHistory {
    persistence_lmt: u32,
    consecutive: Vec<u32>,
    permanent: Vec<bool>,
}

impl FaultHistory {
    pub fn new(num_units: usize, persistence_lmt: u32) -> Self {
        FaultHistory {
            persistence_lmt,
            consecutive: vec![0; num_units],
            permanent: vec![false; num_units],
        }
    }

    /// Whether unit `idx` (0-based) is permanently faulty before the next cycle.
    pub fn is_permanent(&self, idx: usize) -> bool {
        self.permanent[idx]
    }

    pub fn consecutive(&self, idx: usize) -> u32 {
        self.consecutive[idx]
    }

    /// Faulty units this cycle that were not permanent before it.
    pub fn new_fault_count(&self, faulty: &[bool]) -> usize {
        faulty
            .iter()
            .enumerate()
            .filter(|(i, f)| **f && !self.permanent[*i])
            .count()
    }

    pub fn record(&mut self, faulty: &[bool]) {
        for (i, f) in faulty.iter().enumerate() {
            self.consecutive[i] = if *f { self.consecutive[i] + 1 } else { 0 };
            if self.consecutive[i] >= self.persistence_lmt {
                self.permanent[i] = true;
            }
        }
    }
}

/// For each cycle, whether at most `max_simul_fault` units that were not yet
/// permanently faulty behaved faultily.
pub fn check_simul_fault_hypothesis(scenario: &Scenario) -> Vec<bool> {
    let cfg = &scenario.config;
    let mut history = FaultHistory::new(cfg.num_units(), cfg.persistence_lmt());
    scenario
        .cycles
        .iter()
        .map(|c| {
            let faulty: Vec<bool> = c
                .units
                .iter()
                .map(|u| u.is_faulty(c.ground_truth, cfg.delta()))
                .collect();
            let ok = history.new_fault_count(&faulty) <= cfg.max_simul_fault();
            history.record(&faulty);
            ok
        })
        .collect()
}
