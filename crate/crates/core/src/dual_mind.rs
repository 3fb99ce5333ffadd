//! Dual-mind scheduler.
//!
//! The slow mind enumerates the constraint-feasible size-K schedules, imagines an
//! H-step arrival-free drain of the queues under each one, and keeps the schedule with
//! the highest imagined reward. When no schedule is feasible the fast mind takes over
//! with a deadline-weighted longest-queue rule.

use crate::icn::enumerate_feasible;
use crate::scenario::{RolloutRewardMode, ScenarioConfig};
use crate::twin::{imagined_next, Observation};
use crate::types::{ConflictGraph, Deadline, NodeSet, Provenance, ScheduleAction};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RolloutResult {
    pub schedule: NodeSet,
    pub reward: u32,
    /// `horizon + 1` queue vectors, starting with the input state.
    pub trajectory: Vec<Vec<usize>>,
}

/// Imagines `horizon` slots of serving `schedule` and scores the trajectory.
///
/// The reward at step `tau` is read from the state *before* that step's drain, so
/// `trajectory[horizon]` never contributes.
pub fn rollout(q: &[usize], schedule: &NodeSet, horizon: usize, mode: RolloutRewardMode) -> RolloutResult {
    let mut trajectory = Vec::with_capacity(horizon + 1);
    trajectory.push(q.to_vec());
    let mut reward = 0u32;
    for tau in 0..horizon {
        let state = &trajectory[tau];
        reward += match mode {
            RolloutRewardMode::PaperLiteral => state.iter().filter(|&&len| len > 0).count(),
            RolloutRewardMode::ServedTransmissions => schedule.iter().filter(|&i| state[i] > 0).count(),
        } as u32;
        let next = imagined_next(state, schedule);
        trajectory.push(next);
    }
    RolloutResult {
        schedule: schedule.clone(),
        reward,
        trajectory,
    }
}

/// Rollout-optimal schedule among `feasible`; the first maximizer wins ties.
pub fn slow_mind_select(
    feasible: &[NodeSet],
    q: &[usize],
    horizon: usize,
    mode: RolloutRewardMode,
) -> Option<RolloutResult> {
    let mut best: Option<RolloutResult> = None;
    for s in feasible {
        let r = rollout(q, s, horizon, mode);
        if best.as_ref().is_none_or(|b| r.reward > b.reward) {
            best = Some(r);
        }
    }
    best
}

/// Urgency `q_i`, doubled for nodes with a finite deadline.
pub fn urgency(q: &[usize], deadlines: &[Deadline]) -> Vec<usize> {
    q.iter()
        .zip(deadlines)
        .map(|(&len, d)| if d.is_finite() { 2 * len } else { len })
        .collect()
}

/// Node ids sorted by descending weight, ties by ascending id.
pub(crate) fn rank_desc<W: PartialOrd + Copy>(weights: &[W]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .partial_cmp(&weights[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Fallback schedule.
///
/// Literal mode takes the `k` most urgent nodes. Conflict-aware mode walks the same
/// order greedily, skipping idle nodes and nodes that conflict with one already chosen,
/// and may return fewer than `k`.
pub fn fast_mind_select(
    q: &[usize],
    deadlines: &[Deadline],
    k: usize,
    conflicts: &ConflictGraph,
    conflict_aware: bool,
) -> NodeSet {
    let u = urgency(q, deadlines);
    let order = rank_desc(&u);
    if !conflict_aware {
        return order.into_iter().take(k).collect();
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for i in order {
        if chosen.len() == k {
            break;
        }
        if u[i] == 0 || chosen.iter().any(|&j| conflicts.contains(i, j)) {
            continue;
        }
        chosen.push(i);
    }
    chosen.into_iter().collect()
}

/// One scheduling decision plus what the planner saw when making it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanDecision {
    pub action: ScheduleAction,
    pub feasible_count: usize,
    /// Imagined reward of the chosen schedule; `None` on the fast path.
    pub best_reward: Option<u32>,
}

pub fn dmwm_decide(obs: &Observation, cfg: &ScenarioConfig) -> PlanDecision {
    let feasible = enumerate_feasible(
        cfg.n_nodes,
        cfg.max_scheduled,
        &obs.queue_lengths,
        &obs.oldest_age,
        &cfg.deadlines,
        &cfg.conflict_graph,
    );
    match slow_mind_select(&feasible, &obs.queue_lengths, cfg.horizon, cfg.rollout_reward_mode) {
        Some(best) => PlanDecision {
            action: ScheduleAction::new(best.schedule, Provenance::SlowMind),
            feasible_count: feasible.len(),
            best_reward: Some(best.reward),
        },
        None => PlanDecision {
            action: ScheduleAction::new(
                fast_mind_select(
                    &obs.queue_lengths,
                    &cfg.deadlines,
                    cfg.max_scheduled,
                    &cfg.conflict_graph,
                    cfg.fallback_conflict_aware,
                ),
                Provenance::FastMind,
            ),
            feasible_count: 0,
            best_reward: None,
        },
    }
}
