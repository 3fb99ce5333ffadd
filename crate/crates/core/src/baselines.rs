//! Comparison policies and the common [`Policy`] interface.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::dual_mind::{dmwm_decide, rank_desc, PlanDecision};
use crate::icn::k_subsets;
use crate::scenario::ScenarioConfig;
use crate::traffic::Rng;
use crate::twin::Observation;
use crate::types::{Deadline, NodeSet, Provenance, ScheduleAction, Slot};

pub const Q_ALPHA: f64 = 0.1;
pub const Q_GAMMA: f64 = 0.95;
pub const Q_EPSILON: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Dmwm,
    Random,
    Lqf,
    DeadlinePriority,
    FairRoundRobin,
    QLearning,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Dmwm,
        PolicyKind::Random,
        PolicyKind::Lqf,
        PolicyKind::DeadlinePriority,
        PolicyKind::FairRoundRobin,
        PolicyKind::QLearning,
    ];

    pub const NAMES: &'static str = "dmwm|random|lqf|deadline|rr|qlearn";

    /// Short name used on the command line and in output files.
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Dmwm => "dmwm",
            PolicyKind::Random => "random",
            PolicyKind::Lqf => "lqf",
            PolicyKind::DeadlinePriority => "deadline",
            PolicyKind::FairRoundRobin => "rr",
            PolicyKind::QLearning => "qlearn",
        }
    }

    pub fn ordinal(self) -> u64 {
        PolicyKind::ALL.iter().position(|&k| k == self).unwrap() as u64
    }

    pub fn build(self, cfg: &ScenarioConfig) -> Box<dyn Policy> {
        match self {
            PolicyKind::Dmwm => Box::new(DmwmPolicy::new(cfg.clone())),
            PolicyKind::Random => Box::new(RandomPolicy { n: cfg.n_nodes, k: cfg.max_scheduled }),
            PolicyKind::Lqf => Box::new(LqfPolicy { k: cfg.max_scheduled }),
            PolicyKind::DeadlinePriority => Box::new(DeadlinePriorityPolicy {
                k: cfg.max_scheduled,
                deadlines: cfg.deadlines.clone(),
            }),
            PolicyKind::FairRoundRobin => Box::new(FairRoundRobinPolicy {
                k: cfg.max_scheduled,
                memory: RoundRobinMemory::new(cfg.n_nodes),
            }),
            PolicyKind::QLearning => Box::new(QLearningPolicy::new(cfg.n_nodes, cfg.max_scheduled)),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown policy `{s}` (expected one of {})", PolicyKind::NAMES))
    }
}

/// A per-run scheduling policy. Instances hold mutable per-run memory and are never shared.
pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;

    fn decide(&mut self, obs: &Observation, rng: &mut Rng) -> ScheduleAction;

    /// Feedback after the chosen action was executed.
    fn learn(&mut self, _before: &Observation, _action: &ScheduleAction, _reward: u32, _after: &Observation) {}

    /// Planner details behind the last decision, for policies that plan.
    fn last_plan(&self) -> Option<&PlanDecision> {
        None
    }
}

pub struct DmwmPolicy {
    cfg: ScenarioConfig,
    last: Option<PlanDecision>,
}

impl DmwmPolicy {
    pub fn new(cfg: ScenarioConfig) -> Self {
        Self { cfg, last: None }
    }
}

impl Policy for DmwmPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Dmwm
    }

    fn decide(&mut self, obs: &Observation, _rng: &mut Rng) -> ScheduleAction {
        let plan = dmwm_decide(obs, &self.cfg);
        let action = plan.action.clone();
        self.last = Some(plan);
        action
    }

    fn last_plan(&self) -> Option<&PlanDecision> {
        self.last.as_ref()
    }
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Uniform over all size-`k` subsets.
pub fn random_select(n: usize, k: usize, rng: &mut Rng) -> NodeSet {
    let idx = rng.below(binomial(n, k)) as usize;
    k_subsets(n, k).nth(idx).expect("index below subset count").into()
}

struct RandomPolicy {
    n: usize,
    k: usize,
}

impl Policy for RandomPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Random
    }

    fn decide(&mut self, _obs: &Observation, rng: &mut Rng) -> ScheduleAction {
        ScheduleAction::new(random_select(self.n, self.k, rng), Provenance::Baseline)
    }
}

/// The `k` longest queues, ties by smaller id.
pub fn lqf_select(q: &[usize], k: usize) -> NodeSet {
    rank_desc(q).into_iter().take(k).collect()
}

struct LqfPolicy {
    k: usize,
}

impl Policy for LqfPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Lqf
    }

    fn decide(&mut self, obs: &Observation, _rng: &mut Rng) -> ScheduleAction {
        ScheduleAction::new(lqf_select(&obs.queue_lengths, self.k), Provenance::Baseline)
    }
}

/// Top-`k` by `q_i * (1 + 1/(slack_i + 1))`, where slack is the head packet's remaining
/// time before its deadline. Nodes without a deadline (or idle) weigh `q_i`.
pub fn deadline_priority_select(
    q: &[usize],
    oldest_age: &[Option<u32>],
    deadlines: &[Deadline],
    k: usize,
) -> NodeSet {
    let weights: Vec<f64> = q
        .iter()
        .zip(oldest_age.iter().zip(deadlines))
        .map(|(&len, (age, d))| match (d.slots(), age) {
            (Some(d), Some(age)) if len > 0 => {
                let slack = d.saturating_sub(*age) as f64;
                len as f64 * (1.0 + 1.0 / (slack + 1.0))
            }
            _ => len as f64,
        })
        .collect();
    rank_desc(&weights).into_iter().take(k).collect()
}

struct DeadlinePriorityPolicy {
    k: usize,
    deadlines: Vec<Deadline>,
}

impl Policy for DeadlinePriorityPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::DeadlinePriority
    }

    fn decide(&mut self, obs: &Observation, _rng: &mut Rng) -> ScheduleAction {
        let s = deadline_priority_select(&obs.queue_lengths, &obs.oldest_age, &self.deadlines, self.k);
        ScheduleAction::new(s, Provenance::Baseline)
    }
}

/// Slot of each node's most recent service, `-1` if never served.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRobinMemory {
    pub last_served: Vec<i64>,
}

impl RoundRobinMemory {
    pub fn new(n: usize) -> Self {
        Self { last_served: vec![-1; n] }
    }
}

/// Least-recently-served backlogged nodes first, padded with least-recently-served idle ones.
pub fn fair_rr_select(q: &[usize], memory: &mut RoundRobinMemory, k: usize, t: Slot) -> NodeSet {
    let by_staleness = |backlogged: bool| {
        let mut ids: Vec<usize> = (0..q.len()).filter(|&i| (q[i] > 0) == backlogged).collect();
        ids.sort_by_key(|&i| (memory.last_served[i], i));
        ids
    };
    let chosen: Vec<usize> = by_staleness(true)
        .into_iter()
        .chain(by_staleness(false))
        .take(k)
        .collect();
    for &i in &chosen {
        memory.last_served[i] = t as i64;
    }
    chosen.into_iter().collect()
}

struct FairRoundRobinPolicy {
    k: usize,
    memory: RoundRobinMemory,
}

impl Policy for FairRoundRobinPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::FairRoundRobin
    }

    fn decide(&mut self, obs: &Observation, _rng: &mut Rng) -> ScheduleAction {
        let s = fair_rr_select(&obs.queue_lengths, &mut self.memory, self.k, obs.t);
        ScheduleAction::new(s, Provenance::Baseline)
    }
}

/// Per-node congestion bucket: 0 idle, 1 for 1..=5, 2 for 6..=20, 3 above.
pub fn q_state_key(q: &[usize]) -> Vec<u8> {
    q.iter()
        .map(|&len| match len {
            0 => 0,
            1..=5 => 1,
            6..=20 => 2,
            _ => 3,
        })
        .collect()
}

/// Tabular action values; unseen states read as all zeros.
#[derive(Debug, Clone)]
pub struct QTable {
    pub n_actions: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    entries: HashMap<Vec<u8>, Vec<f64>>,
}

impl QTable {
    pub fn new(n_actions: usize, alpha: f64, gamma: f64, epsilon: f64) -> Self {
        Self {
            n_actions,
            alpha,
            gamma,
            epsilon,
            entries: HashMap::new(),
        }
    }

    pub fn values(&self, key: &[u8]) -> Option<&[f64]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn value(&self, key: &[u8], action: usize) -> f64 {
        self.values(key).map_or(0.0, |v| v[action])
    }

    pub fn max_value(&self, key: &[u8]) -> f64 {
        self.values(key)
            .map_or(0.0, |v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn set_values(&mut self, key: Vec<u8>, values: Vec<f64>) {
        assert_eq!(values.len(), self.n_actions);
        self.entries.insert(key, values);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Epsilon-greedy. The exploration coin is always drawn first.
    pub fn q_select(&self, key: &[u8], rng: &mut Rng) -> usize {
        if rng.next_f64() < self.epsilon {
            return rng.below(self.n_actions as u64) as usize;
        }
        let Some(values) = self.values(key) else {
            return 0;
        };
        let mut best = 0;
        for (a, &v) in values.iter().enumerate() {
            if v > values[best] {
                best = a;
            }
        }
        best
    }

    /// One-step Q-learning backup.
    pub fn q_update(&mut self, key: &[u8], action: usize, reward: f64, next_key: &[u8]) {
        let target = reward + self.gamma * self.max_value(next_key);
        let n = self.n_actions;
        let values = self.entries.entry(key.to_vec()).or_insert_with(|| vec![0.0; n]);
        values[action] += self.alpha * (target - values[action]);
    }
}

struct QLearningPolicy {
    table: QTable,
    actions: Vec<NodeSet>,
    pending: Option<(Vec<u8>, usize)>,
}

impl QLearningPolicy {
    fn new(n: usize, k: usize) -> Self {
        let actions: Vec<NodeSet> = k_subsets(n, k).map(NodeSet::from).collect();
        Self {
            table: QTable::new(actions.len(), Q_ALPHA, Q_GAMMA, Q_EPSILON),
            actions,
            pending: None,
        }
    }
}

impl Policy for QLearningPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::QLearning
    }

    fn decide(&mut self, obs: &Observation, rng: &mut Rng) -> ScheduleAction {
        let key = q_state_key(&obs.queue_lengths);
        let a = self.table.q_select(&key, rng);
        self.pending = Some((key, a));
        ScheduleAction::new(self.actions[a].clone(), Provenance::Baseline)
    }

    fn learn(&mut self, _before: &Observation, _action: &ScheduleAction, reward: u32, after: &Observation) {
        if let Some((key, a)) = self.pending.take() {
            self.table.q_update(&key, a, reward as f64, &q_state_key(&after.queue_lengths));
        }
    }
}
