//! Scenario configuration, validation and the four built-in scenarios.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{ConflictGraph, Deadline, NodeState};

pub const DEFAULT_NODES: usize = 5;
pub const DEFAULT_MAX_SCHEDULED: usize = 3;
pub const DEFAULT_BUFFER: usize = 50;
pub const DEFAULT_STEPS: u32 = 200;
pub const DEFAULT_HORIZON: usize = 3;
pub const DEFAULT_BASE_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("unknown scenario `{0}` (expected one of: default, bursty, deadline, interference)")]
    UnknownScenario(String),
    #[error("malformed scenario JSON: {0}")]
    Json(String),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidConfig {
        field,
        reason: reason.into(),
    }
}

/// How the slow mind scores an imagined trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RolloutRewardMode {
    /// Counts backlogged nodes across the whole network at every imagined step.
    PaperLiteral,
    /// Counts backlogged *scheduled* nodes at every imagined step, i.e. imagined deliveries.
    #[default]
    ServedTransmissions,
}

impl FromStr for RolloutRewardMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal" | "paper_literal" => Ok(Self::PaperLiteral),
            "served" | "served_transmissions" => Ok(Self::ServedTransmissions),
            other => Err(format!("unknown rollout reward mode `{other}` (expected literal|served)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinScenario {
    Default,
    Bursty,
    Deadline,
    Interference,
}

impl BuiltinScenario {
    pub const ALL: [BuiltinScenario; 4] = [
        BuiltinScenario::Default,
        BuiltinScenario::Bursty,
        BuiltinScenario::Deadline,
        BuiltinScenario::Interference,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinScenario::Default => "default",
            BuiltinScenario::Bursty => "bursty",
            BuiltinScenario::Deadline => "deadline",
            BuiltinScenario::Interference => "interference",
        }
    }
}

impl fmt::Display for BuiltinScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinScenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BuiltinScenario::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| ConfigError::UnknownScenario(s.to_owned()))
    }
}

fn default_burst_probability() -> f64 {
    0.05
}

fn default_burst_amplitude() -> [f64; 2] {
    [2.0, 5.0]
}

fn default_base_seed() -> u64 {
    DEFAULT_BASE_SEED
}

/// Everything needed to instantiate one simulation run.
///
/// Field names double as the JSON scenario-file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub n_nodes: usize,
    pub max_scheduled: usize,
    pub buffer: usize,
    pub steps: u32,
    pub horizon: usize,
    #[serde(default)]
    pub conflict_graph: ConflictGraph,
    pub deadlines: Vec<Deadline>,
    pub lambda_base: Vec<f64>,
    #[serde(default)]
    pub burst_nodes: BTreeSet<usize>,
    #[serde(default = "default_burst_probability")]
    pub burst_probability: f64,
    #[serde(default = "default_burst_amplitude")]
    pub burst_amplitude_range: [f64; 2],
    #[serde(default)]
    pub rollout_reward_mode: RolloutRewardMode,
    #[serde(default)]
    pub fallback_conflict_aware: bool,
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
}

impl ScenarioConfig {
    /// Five nodes, K=3, B=50, T=200, H=3, smooth traffic, no conflicts and no deadlines.
    pub fn standard(name: &str) -> Self {
        let n = DEFAULT_NODES;
        Self {
            name: name.to_owned(),
            n_nodes: n,
            max_scheduled: DEFAULT_MAX_SCHEDULED,
            buffer: DEFAULT_BUFFER,
            steps: DEFAULT_STEPS,
            horizon: DEFAULT_HORIZON,
            conflict_graph: ConflictGraph::new(),
            deadlines: vec![Deadline::Unbounded; n],
            lambda_base: spread_rates(n, 0.5, 1.0),
            burst_nodes: BTreeSet::new(),
            burst_probability: default_burst_probability(),
            burst_amplitude_range: default_burst_amplitude(),
            rollout_reward_mode: RolloutRewardMode::default(),
            fallback_conflict_aware: false,
            base_seed: DEFAULT_BASE_SEED,
        }
    }

    pub fn builtin(which: BuiltinScenario) -> Self {
        let mut cfg = Self::standard(which.name());
        let n = cfg.n_nodes;
        match which {
            BuiltinScenario::Default => {
                cfg.conflict_graph = ConflictGraph::from_pairs([(0, 1), (2, 3)]);
                cfg.deadlines = (0..n)
                    .map(|i| if i % 2 == 0 { Deadline::Finite(10) } else { Deadline::Unbounded })
                    .collect();
            }
            BuiltinScenario::Bursty => {
                cfg.burst_nodes = [1, 3].into_iter().collect();
                cfg.burst_probability = 0.15;
                cfg.burst_amplitude_range = [3.0, 6.0];
            }
            BuiltinScenario::Deadline => {
                cfg.conflict_graph = ConflictGraph::from_pairs([(0, 1), (2, 3)]);
                cfg.deadlines = (0..n)
                    .map(|i| Deadline::Finite(if i % 2 == 0 { 5 } else { 15 }))
                    .collect();
            }
            BuiltinScenario::Interference => {
                cfg.conflict_graph = ConflictGraph::ring(n);
                // No size-K independent set exists on a 5-ring with K=3, so every slot
                // goes through the fallback; the literal top-K fallback would collide.
                cfg.fallback_conflict_aware = true;
            }
        }
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fresh, empty per-node state for a run.
    pub fn initial_nodes(&self) -> Vec<NodeState> {
        (0..self.n_nodes)
            .map(|i| {
                NodeState::new(
                    i,
                    self.lambda_base[i],
                    self.deadlines[i],
                    self.burst_nodes.contains(&i),
                )
            })
            .collect()
    }

    pub fn validate(self) -> Result<Self, ConfigError> {
        validate_config(self)
    }
}

/// `n` rates evenly spaced over `[lo, hi]`.
fn spread_rates(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

pub fn builtin_scenario(name: &str) -> Result<ScenarioConfig, ConfigError> {
    Ok(ScenarioConfig::builtin(name.parse()?))
}

/// Returns the config unchanged when every invariant holds.
pub fn validate_config(cfg: ScenarioConfig) -> Result<ScenarioConfig, ConfigError> {
    let n = cfg.n_nodes;
    if n == 0 {
        return Err(invalid("N", "must be positive"));
    }
    if cfg.max_scheduled == 0 {
        return Err(invalid("K", "must be positive"));
    }
    if cfg.max_scheduled > n {
        return Err(invalid("K", "K>N"));
    }
    if cfg.buffer == 0 {
        return Err(invalid("B", "must be positive"));
    }
    if cfg.steps == 0 {
        return Err(invalid("T", "must be positive"));
    }
    if cfg.horizon == 0 {
        return Err(invalid("H", "must be positive"));
    }
    for (i, j) in cfg.conflict_graph.pairs() {
        if i == j {
            return Err(invalid("conflict_graph", "self pair"));
        }
        if j >= n {
            return Err(invalid("conflict_graph", format!("node id {j} >= N")));
        }
    }
    if cfg.deadlines.len() != n {
        return Err(invalid("deadlines", format!("expected {n} entries, got {}", cfg.deadlines.len())));
    }
    if cfg.deadlines.contains(&Deadline::Finite(0)) {
        return Err(invalid("deadlines", "finite deadlines must be positive"));
    }
    if cfg.lambda_base.len() != n {
        return Err(invalid(
            "lambda_base",
            format!("expected {n} entries, got {}", cfg.lambda_base.len()),
        ));
    }
    if cfg.lambda_base.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
        return Err(invalid("lambda_base", "rates must be finite and > 0"));
    }
    if let Some(&b) = cfg.burst_nodes.iter().find(|&&b| b >= n) {
        return Err(invalid("burst_nodes", format!("node id {b} >= N")));
    }
    if !(0.0..=1.0).contains(&cfg.burst_probability) {
        return Err(invalid("burst_probability", "must lie in [0, 1]"));
    }
    let [lo, hi] = cfg.burst_amplitude_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(invalid("burst_amplitude_range", "expected finite [lo, hi] with lo <= hi"));
    }
    Ok(cfg)
}
