use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rules::{apart, expected_classes, Class, Obs};
use super::state::check_into;
use super::{Finding, OracleError, TraceChecker, Verdict};
use crate::config::VoterConfig;
use crate::domain::{Reading, SignalHealth, UnitId, UnitOutput};
use crate::error::VoterError;
use crate::scenario::{FaultHistory, TraceRecord};
use crate::voter::{AbstractState, VoterState};

/// Largest number of traces [`enumerate_and_check`] will attempt.
pub const TRACE_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumStats {
    /// Complete input sequences covered, including those rejected at init.
    pub traces: u64,
    /// Voter states produced (shared prefixes counted once).
    pub states_visited: u64,
    /// Sequences whose first cycle has no healthy unit.
    pub init_rejected: u64,
    /// Sequences for which some ground-truth assignment satisfies the fault
    /// hypothesis on every cycle.
    pub admissible_traces: u64,
    /// Abstract-state arrows observed.
    pub transitions: BTreeSet<(AbstractState, AbstractState)>,
}

impl EnumStats {
    fn merge(mut self, other: EnumStats) -> EnumStats {
        self.traces += other.traces;
        self.states_visited += other.states_visited;
        self.init_rejected += other.init_rejected;
        self.admissible_traces += other.admissible_traces;
        self.transitions.extend(other.transitions);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationReport {
    pub verdict: Verdict,
    pub stats: EnumStats,
}

/// `(|values| * |healths|)^(num_units * horizon)`, saturating.
pub fn trace_count(num_units: usize, values: usize, healths: usize, horizon: usize) -> u128 {
    let base = (values as u128).saturating_mul(healths as u128);
    let exp = num_units.saturating_mul(horizon);
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
        if acc > TRACE_BUDGET * 1000 {
            return u128::MAX;
        }
    }
    acc
}

struct Ctx<'a> {
    config: VoterConfig,
    vectors: &'a [Vec<UnitOutput>],
    values: &'a [u64],
    horizon: usize,
}

#[derive(Clone)]
struct Node {
    state: Option<VoterState>,
    checker: TraceChecker,
    histories: Vec<FaultHistory>,
}

/// Runs the voter on every reading sequence over the given domains and
/// checks every state and every trace prefix.
///
/// Conditioned checks at a cycle use the ground-truth candidates from
/// `values` for which some assignment of earlier truths keeps the fault
/// hypothesis intact up to that cycle.
pub fn enumerate_and_check(
    config: &VoterConfig,
    values: &[u64],
    healths: &[SignalHealth],
    horizon: usize,
) -> Result<EnumerationReport, OracleError> {
    if values.is_empty() || healths.is_empty() || horizon == 0 {
        return Err(OracleError::EmptyDomain);
    }
    let requested = trace_count(config.num_units(), values.len(), healths.len(), horizon);
    if requested > TRACE_BUDGET {
        return Err(OracleError::BudgetExceeded { requested, budget: TRACE_BUDGET });
    }
    let readings: Vec<Reading> = values
        .iter()
        .flat_map(|v| healths.iter().map(move |h| Reading { val: *v, hw_hlth: *h }))
        .collect();
    let vectors = all_vectors(&readings, config.num_units());
    let mut truths: Vec<u64> = values.to_vec();
    truths.sort_unstable();
    truths.dedup();
    let ctx = Ctx { config: *config, vectors: &vectors, values: &truths, horizon };
    let root = Node {
        state: None,
        checker: TraceChecker::new(*config),
        histories: vec![FaultHistory::new(config.num_units(), config.persistence_lmt())],
    };

    let (verdict, stats) = vectors
        .par_iter()
        .map(|x| {
            let mut v = Verdict::new();
            let mut s = EnumStats::default();
            visit(&ctx, &root, x, 0, &mut v, &mut s);
            (v, s)
        })
        .reduce(
            || (Verdict::new(), EnumStats::default()),
            |(va, sa), (vb, sb)| (va.merge(vb), sa.merge(sb)),
        );
    Ok(EnumerationReport { verdict, stats })
}

fn all_vectors(readings: &[Reading], n: usize) -> Vec<Vec<UnitOutput>> {
    let mut out = vec![Vec::with_capacity(n)];
    for i in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                readings.iter().map(move |r| {
                    let mut v = prefix.clone();
                    v.push(UnitOutput { uid: UnitId(i as u32 + 1), reading: *r });
                    v
                })
            })
            .collect();
    }
    out
}

fn visit(ctx: &Ctx, parent: &Node, x: &[UnitOutput], depth: usize, v: &mut Verdict, s: &mut EnumStats) {
    let cfg = &ctx.config;
    let remaining = ctx.horizon - depth - 1;
    let subtree = (ctx.vectors.len() as u64).pow(remaining as u32);

    // Fault-model bookkeeping over all admissible ground-truth histories.
    let mut admissible = BTreeSet::new();
    let mut histories: Vec<FaultHistory> = Vec::new();
    for h in &parent.histories {
        for &g in ctx.values {
            let faulty: Vec<bool> = x
                .iter()
                .map(|o| o.reading.hw_hlth == SignalHealth::Bad || apart(o.reading.val, g, cfg.delta()))
                .collect();
            if h.new_fault_count(&faulty) <= cfg.max_simul_fault() {
                admissible.insert(g);
                let mut next = h.clone();
                next.record(&faulty);
                if !histories.contains(&next) {
                    histories.push(next);
                }
            }
        }
    }
    let truths: Vec<u64> = admissible.into_iter().collect();

    let result = match &parent.state {
        None => VoterState::init(cfg, x),
        Some(prev) => prev.step(cfg, x),
    };
    let state = match result {
        Ok(vs) => vs,
        Err(VoterError::NoHealthyUnit) if depth == 0 => {
            confirm_no_healthy_unit(cfg, x, v);
            s.traces += subtree;
            s.init_rejected += subtree;
            return;
        }
        Err(e) => {
            v.push(Finding::new(Some(depth), "Total", None, format!("voter failed: {e}")));
            s.traces += subtree;
            return;
        }
    };
    s.states_visited += 1;
    check_into(&state, cfg, Some(depth), v);
    if let Some(prev) = &parent.state {
        s.transitions.insert((prev.abstract_state(), state.abstract_state()));
    }

    let rec = TraceRecord::from_state(depth, 0, &state, parent.state.as_ref().map(|p| p.prime()));
    let mut checker = parent.checker.clone();
    checker.observe(&rec, &truths, v);

    if remaining == 0 {
        s.traces += 1;
        if !histories.is_empty() {
            s.admissible_traces += 1;
        }
        return;
    }
    let node = Node { state: Some(state), checker, histories };
    for y in ctx.vectors {
        visit(ctx, &node, y, depth + 1, v, s);
    }
}

/// Init rejected the first cycle: the oracle must agree that no unit
/// provides healthy data.
fn confirm_no_healthy_unit(cfg: &VoterConfig, x: &[UnitOutput], v: &mut Verdict) {
    let obs: Vec<Obs> = x
        .iter()
        .map(|o| Obs { uid: o.uid, val: o.reading.val, good: o.reading.hw_hlth == SignalHealth::Good, was_active: true })
        .collect();
    let e = expected_classes(&obs, cfg.max_simul_fault(), cfg.delta());
    if let Some((uid, _, _)) = e.pool.iter().find(|(_, _, c)| *c == Class::NotMiscomparing) {
        v.push(Finding::new(Some(0), "Init", Some(*uid), "init rejected although this unit is healthy"));
    }
}
