use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_simul_fault_hypothesis, CycleInput, FaultHistory, Scenario, ScenarioError, UnitBehavior};
use crate::config::VoterConfig;
use crate::domain::UnitId;

/// Knobs for [`generate_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    /// Number of cycles.
    pub horizon: usize,
    /// Per-cycle probability that a healthy unit starts a transient fault.
    pub fault_rate: f64,
    /// Units that develop a permanent fault at some point in the run.
    pub permanent_targets: Vec<UnitId>,
    /// Largest ground-truth change between consecutive cycles.
    pub max_increment: u64,
    /// Inject one cycle with `max_simul_fault + 1` new faults.
    pub violate_hypothesis: bool,
}

impl Profile {
    pub fn nominal(horizon: usize) -> Self {
        Profile {
            horizon,
            fault_rate: 0.0,
            permanent_targets: Vec::new(),
            max_increment: 0,
            violate_hypothesis: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Fault {
    Bad,
    Deviate { lo: u64, hi: u64 },
}

#[derive(Debug, Clone, Copy)]
struct Active {
    kind: Fault,
    /// Cycles left for a transient; `None` for a permanent fault.
    remaining: Option<u32>,
}

struct Planned {
    idx: usize,
    start: usize,
    kind: Fault,
}

/// Generates a seeded scenario.
///
/// The ground truth starts at least `4 * delta` above zero and moves by at
/// most `max_increment` per cycle. Faults are injected so that no more than
/// `max_simul_fault` not-yet-permanent units misbehave in any cycle, unless
/// the profile asks for a violation. Permanent faults use bad health or an
/// offset beyond `3 * delta`; transient deviations range over `(delta, 4*delta]`
/// and last fewer than `persistence_lmt` cycles.
pub fn generate_scenario(config: &VoterConfig, seed: u64, profile: &Profile) -> Result<Scenario, ScenarioError> {
    let n = config.num_units();
    let p = config.persistence_lmt();
    let delta = config.delta();
    let f = config.max_simul_fault();
    if profile.horizon == 0 {
        return Err(ScenarioError::Profile("horizon must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&profile.fault_rate) {
        return Err(ScenarioError::Profile(format!(
            "fault_rate {} is not a probability",
            profile.fault_rate
        )));
    }
    if profile.permanent_targets.len() > n {
        return Err(ScenarioError::Profile(format!(
            "{} permanent targets but only {n} units",
            profile.permanent_targets.len()
        )));
    }
    for (i, t) in profile.permanent_targets.iter().enumerate() {
        if t.0 == 0 || t.0 as usize > n {
            return Err(ScenarioError::Profile(format!("permanent target {t} is not a configured unit")));
        }
        if profile.permanent_targets[..i].contains(t) {
            return Err(ScenarioError::Profile(format!("permanent target {t} listed twice")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floor = delta.saturating_mul(4);
    let mut truth = floor + rng.gen_range(0..=1000u64);
    let transient_dev = Fault::Deviate { lo: delta + 1, hi: floor.max(delta + 1) };
    let permanent_dev = Fault::Deviate {
        lo: 3 * delta + 1,
        hi: floor.max(3 * delta + 1),
    };

    let last_start = profile.horizon.saturating_sub(p as usize);
    let mut planned: Vec<Planned> = profile
        .permanent_targets
        .iter()
        .map(|t| Planned {
            idx: t.0 as usize - 1,
            start: rng.gen_range(0..=last_start),
            kind: if rng.gen_bool(0.5) { Fault::Bad } else { permanent_dev },
        })
        .collect();
    planned.sort_by_key(|pl| (pl.start, pl.idx));
    let is_target: Vec<bool> = (0..n).map(|i| planned.iter().any(|pl| pl.idx == i)).collect();
    let violation_cycle = profile
        .violate_hypothesis
        .then(|| rng.gen_range(0..profile.horizon));

    let mut history = FaultHistory::new(n, p);
    let mut active: Vec<Option<Active>> = vec![None; n];
    let mut cycles = Vec::with_capacity(profile.horizon);

    for t in 0..profile.horizon {
        if t > 0 && profile.max_increment > 0 {
            let step = rng.gen_range(0..=2 * profile.max_increment) as i128 - profile.max_increment as i128;
            truth = (truth as i128 + step).max(floor as i128) as u64;
        }

        let mut budget = f;
        let mut faulty = vec![false; n];
        // Permanent (in the fault-model sense) units keep misbehaving for free.
        for i in 0..n {
            if history.is_permanent(i) && active[i].is_some() {
                faulty[i] = true;
            }
        }
        // Permanent faults in progress claim budget first.
        for i in 0..n {
            if let Some(a) = active[i] {
                if a.remaining.is_none() && !history.is_permanent(i) {
                    faulty[i] = true;
                    budget -= 1;
                }
            }
        }
        for pl in planned.iter().filter(|pl| pl.start <= t) {
            if active[pl.idx].map_or(true, |a| a.remaining.is_some()) && !faulty[pl.idx] && budget > 0
                && history.consecutive(pl.idx) == 0
            {
                active[pl.idx] = Some(Active { kind: pl.kind, remaining: None });
                faulty[pl.idx] = true;
                budget -= 1;
            }
        }
        // Ongoing transients continue while budget lasts.
        for i in 0..n {
            if let Some(Active { remaining: Some(left), kind }) = active[i] {
                if faulty[i] {
                    continue;
                }
                if left > 0 && budget > 0 {
                    faulty[i] = true;
                    budget -= 1;
                    active[i] = Some(Active { kind, remaining: Some(left - 1) });
                } else {
                    active[i] = None;
                }
            }
        }
        // New transients only on units that were nominal last cycle.
        for i in 0..n {
            if faulty[i] || active[i].is_some() || is_target[i] && planned_started(&active, i) {
                continue;
            }
            if budget > 0 && history.consecutive(i) == 0 && rng.gen_bool(profile.fault_rate) {
                let duration = rng.gen_range(1..p);
                let kind = if rng.gen_bool(0.5) { Fault::Bad } else { transient_dev };
                active[i] = Some(Active { kind, remaining: Some(duration - 1) });
                faulty[i] = true;
                budget -= 1;
            }
        }

        let mut behaviors = Vec::with_capacity(n);
        let mut noise = Vec::with_capacity(n);
        for i in 0..n {
            let uid = UnitId(i as u32 + 1);
            let b = match (faulty[i], active[i]) {
                (true, Some(a)) => draw(&mut rng, a.kind),
                _ => UnitBehavior::Nominal,
            };
            behaviors.push((uid, b));
            noise.push((uid, rng.gen_range(-(delta as i64)..=delta as i64)));
        }
        if violation_cycle == Some(t) {
            let mut extra = f + 1 - history.new_fault_count(&faulty).min(f + 1);
            for i in 0..n {
                if extra == 0 {
                    break;
                }
                if !faulty[i] && !history.is_permanent(i) {
                    behaviors[i].1 = draw(&mut rng, transient_dev);
                    faulty[i] = true;
                    extra -= 1;
                }
            }
        }
        history.record(&faulty);
        cycles.push(CycleInput::resolve(truth, &behaviors, &noise, delta)?);
    }

    let mut scenario = Scenario { config: *config, seed, declared_hypothesis_ok: true, cycles };
    let ok = check_simul_fault_hypothesis(&scenario).into_iter().all(|x| x);
    debug_assert!(ok || profile.violate_hypothesis, "generator broke the fault hypothesis");
    scenario.declared_hypothesis_ok = ok;
    Ok(scenario)
}

fn planned_started(active: &[Option<Active>], i: usize) -> bool {
    matches!(active[i], Some(Active { remaining: None, .. }))
}

fn draw(rng: &mut ChaCha8Rng, kind: Fault) -> UnitBehavior {
    match kind {
        Fault::Bad => UnitBehavior::BadHealth,
        Fault::Deviate { lo, hi } => {
            let mag = rng.gen_range(lo..=hi) as i64;
            UnitBehavior::Deviant { offset: if rng.gen_bool(0.5) { mag } else { -mag } }
        }
    }
}
