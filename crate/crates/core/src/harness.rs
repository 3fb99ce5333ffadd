//! Seeded episodes and (scenario x policy x run) campaigns.
//!
//! Run `r` of a campaign uses seed `base_seed + r`. Traffic streams depend only on that
//! seed, so under [`TrafficPairing::Paired`] every policy faces the same arrivals.

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{Policy, PolicyKind};
use crate::scenario::ScenarioConfig;
use crate::traffic::{Rng, TrafficStreams, STREAM_POLICY};
use crate::twin::{imagined_next, RunMetrics, StepOutcome, TwinError, TwinState};
use crate::types::{NodeSet, Provenance, Slot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrafficPairing {
    /// All policies see identical arrivals for a given run index.
    #[default]
    Paired,
    /// Each policy draws its own arrivals.
    Independent,
}

pub fn run_seed(base_seed: u64, run_index: u32) -> u64 {
    base_seed.wrapping_add(run_index as u64)
}

/// One row of the decision trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionRecord {
    pub slot: Slot,
    pub provenance: Provenance,
    pub nodes: NodeSet,
    pub feasible_count: Option<usize>,
    pub best_reward: Option<u32>,
    pub reward: u32,
}

/// A single run in progress: twin, traffic, policy and their random streams.
pub struct Episode {
    pub twin: TwinState,
    traffic: TrafficStreams,
    policy_rng: Rng,
    policy: Box<dyn Policy>,
    pub trace: Vec<DecisionRecord>,
    run_index: u32,
}

impl Episode {
    pub fn new(cfg: &ScenarioConfig, kind: PolicyKind, run_index: u32, pairing: TrafficPairing) -> Self {
        let seed = run_seed(cfg.base_seed, run_index);
        let traffic = match pairing {
            TrafficPairing::Paired => TrafficStreams::new(seed),
            TrafficPairing::Independent => TrafficStreams::with_offset(seed, kind.ordinal() + 1),
        };
        Self {
            twin: TwinState::reset(cfg),
            traffic,
            policy_rng: Rng::new(seed, STREAM_POLICY),
            policy: kind.build(cfg),
            trace: Vec::with_capacity(cfg.steps as usize),
            run_index,
        }
    }

    pub fn policy_kind(&self) -> PolicyKind {
        self.policy.kind()
    }

    pub fn is_finished(&self) -> bool {
        self.twin.is_finished()
    }

    /// observe, decide, imagine, step, record model error, learn.
    pub fn step(&mut self) -> Result<StepOutcome, TwinError> {
        let before = self.twin.observe();
        let action = self.policy.decide(&before, &mut self.policy_rng);
        let imagined = imagined_next(&before.queue_lengths, &action.nodes);
        let outcome = self.twin.step(&action, &mut self.traffic)?;
        let after = self.twin.observe();
        self.twin.record_model_error(outcome.slot, &imagined, &after.queue_lengths)?;
        self.policy.learn(&before, &action, outcome.reward, &after);

        let plan = self.policy.last_plan();
        self.trace.push(DecisionRecord {
            slot: outcome.slot,
            provenance: action.provenance,
            nodes: action.nodes,
            feasible_count: plan.map(|p| p.feasible_count),
            best_reward: plan.and_then(|p| p.best_reward),
            reward: outcome.reward,
        });
        Ok(outcome)
    }

    pub fn run(mut self) -> EpisodeResult {
        while !self.is_finished() {
            self.step().expect("validated config cannot fail mid-run");
        }
        self.finish()
    }

    pub fn finish(self) -> EpisodeResult {
        EpisodeResult {
            run_index: self.run_index,
            policy: self.policy.kind(),
            metrics: self.twin.metrics(),
            twin: self.twin,
            trace: self.trace,
        }
    }
}

pub struct EpisodeResult {
    pub run_index: u32,
    pub policy: PolicyKind,
    pub metrics: RunMetrics,
    pub twin: TwinState,
    pub trace: Vec<DecisionRecord>,
}

pub fn run_episode(cfg: &ScenarioConfig, kind: PolicyKind, run_index: u32, pairing: TrafficPairing) -> EpisodeResult {
    Episode::new(cfg, kind, run_index, pairing).run()
}

/// Mean and sample standard deviation (`n - 1`; zero for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Stat { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_index: u32,
    pub metrics: RunMetrics,
}

/// Aggregated results of one (scenario, policy) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub scenario: String,
    pub policy: PolicyKind,
    pub runs: u32,
    pub steps: Slot,
    pub base_seed: u64,
    pub records: Vec<RunRecord>,
    pub throughput: Stat,
    pub queue: Stat,
    pub delay: Stat,
    pub violations: Stat,
    pub drops: Stat,
}

impl MetricsReport {
    pub fn from_records(cfg: &ScenarioConfig, policy: PolicyKind, records: Vec<RunRecord>) -> Self {
        let col = |f: fn(&RunMetrics) -> f64| Stat::of(&records.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>());
        Self {
            scenario: cfg.name.clone(),
            policy,
            runs: records.len() as u32,
            steps: cfg.steps,
            base_seed: cfg.base_seed,
            throughput: col(|m| m.throughput),
            queue: col(|m| m.avg_queue),
            delay: col(|m| m.avg_delay),
            violations: col(|m| m.violations as f64),
            drops: col(|m| m.drops as f64),
            records,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub scenarios: Vec<ScenarioConfig>,
    pub policies: Vec<PolicyKind>,
    pub runs: u32,
    pub pairing: TrafficPairing,
}

/// Runs every (scenario, policy, run) in parallel. Reports come back ordered by
/// scenario, then policy, with records ordered by run index.
pub fn run_experiment(exp: &Experiment) -> Vec<MetricsReport> {
    let jobs: Vec<(usize, PolicyKind, u32)> = (0..exp.scenarios.len())
        .flat_map(|s| exp.policies.iter().flat_map(move |&p| (0..exp.runs).map(move |r| (s, p, r))))
        .collect();
    let records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(s, p, r)| {
            let res = run_episode(&exp.scenarios[s], p, r, exp.pairing);
            RunRecord { run_index: r, metrics: res.metrics }
        })
        .collect();

    let mut it = records.into_iter();
    let mut reports = Vec::with_capacity(exp.scenarios.len() * exp.policies.len());
    for cfg in &exp.scenarios {
        for &p in &exp.policies {
            let chunk: Vec<RunRecord> = it.by_ref().take(exp.runs as usize).collect();
            reports.push(MetricsReport::from_records(cfg, p, chunk));
        }
    }
    reports
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin_scenario;

    #[test]
    fn stat_sample_convention() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(Stat::of(&[7.0]).std, 0.0);
    }

    #[test]
    fn episode_is_deterministic() {
        let cfg = builtin_scenario("default").unwrap();
        for kind in PolicyKind::ALL {
            let a = run_episode(&cfg, kind, 3, TrafficPairing::Paired);
            let b = run_episode(&cfg, kind, 3, TrafficPairing::Paired);
            assert_eq!(a.metrics, b.metrics, "{kind}");
            assert_eq!(a.trace, b.trace);
        }
    }

    #[test]
    fn paired_runs_share_arrivals() {
        let cfg = builtin_scenario("bursty").unwrap();
        let a = run_episode(&cfg, PolicyKind::Random, 0, TrafficPairing::Paired);
        let b = run_episode(&cfg, PolicyKind::Lqf, 0, TrafficPairing::Paired);
        assert_eq!(a.metrics.arrivals, b.metrics.arrivals);
        let c = run_episode(&cfg, PolicyKind::Lqf, 0, TrafficPairing::Independent);
        assert_ne!(b.metrics.arrivals, c.metrics.arrivals);
    }

    #[test]
    fn zero_traffic_zero_metrics() {
        let mut cfg = builtin_scenario("default").unwrap();
        // Validation forbids zero rates; the twin itself accepts them.
        cfg.lambda_base = vec![0.0; 5];
        for kind in PolicyKind::ALL {
            let m = run_episode(&cfg, kind, 0, TrafficPairing::Paired).metrics;
            assert_eq!((m.throughput, m.avg_queue, m.avg_delay), (0.0, 0.0, 0.0));
            assert_eq!((m.violations, m.drops, m.arrivals), (0, 0, 0));
        }
    }

    #[test]
    fn experiment_layout() {
        let exp = Experiment {
            scenarios: vec![builtin_scenario("default").unwrap(), builtin_scenario("bursty").unwrap()],
            policies: vec![PolicyKind::Dmwm, PolicyKind::Random],
            runs: 3,
            pairing: TrafficPairing::Paired,
        };
        let reports = run_experiment(&exp);
        assert_eq!(reports.len(), 4);
        assert_eq!((reports[1].scenario.as_str(), reports[1].policy), ("default", PolicyKind::Random));
        assert_eq!((reports[2].scenario.as_str(), reports[2].policy), ("bursty", PolicyKind::Dmwm));
        for r in &reports {
            assert_eq!(r.runs, 3);
            let idx: Vec<u32> = r.records.iter().map(|x| x.run_index).collect();
            assert_eq!(idx, vec![0, 1, 2]);
            let mean = r.records.iter().map(|x| x.metrics.throughput).sum::<f64>() / 3.0;
            assert_eq!(r.throughput.mean, mean);
        }
    }
}
