//! Slotted wireless access scheduling on a network digital twin.
//!
//! The twin ([`twin`]) simulates bounded FIFO queues fed by seeded, time-varying Poisson
//! traffic ([`traffic`]) under interference and deadline constraints ([`scenario`]).
//! The dual-mind scheduler ([`dual_mind`]) plans over constraint-feasible schedules
//! ([`icn`]) by imagining short arrival-free rollouts, and falls back to an urgency
//! heuristic when nothing is feasible. [`baselines`] holds the comparison policies and
//! [`harness`] runs seeded campaigns over all of them.

pub mod baselines;
pub mod dual_mind;
pub mod harness;
pub mod icn;
pub mod report;
pub mod scenario;
pub mod traffic;
pub mod twin;
pub mod types;

pub use baselines::{Policy, PolicyKind};
pub use dual_mind::{dmwm_decide, fast_mind_select, rollout, slow_mind_select, PlanDecision, RolloutResult};
pub use harness::{run_episode, run_experiment, Episode, EpisodeResult, Experiment, MetricsReport, TrafficPairing};
pub use icn::{enumerate_feasible, icn_check};
pub use scenario::{builtin_scenario, validate_config, BuiltinScenario, ConfigError, RolloutRewardMode, ScenarioConfig};
pub use traffic::{generate_arrivals, sample_poisson, Rng};
pub use twin::{imagined_next, Observation, RunMetrics, StepOutcome, TwinError, TwinState};
pub use types::{ConflictGraph, Deadline, NodeSet, NodeState, Packet, Provenance, ScheduleAction};
