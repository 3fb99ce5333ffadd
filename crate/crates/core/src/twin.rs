//! The slotted network digital twin.
//!
//! One call to [`TwinState::step`] executes a slot in a fixed order:
//!
//! 1. expiry purge (packets older than their node's deadline are dropped and counted as violations),
//! 2. transmission (one packet per scheduled, backlogged, collision-free node),
//! 3. arrivals (admitted up to the buffer bound, the rest counted as drops),
//! 4. accounting (queue lengths and the schedule row are recorded, then `t` advances).
//!
//! Two scheduled nodes that form a conflict pair and both hold packets collide: neither
//! delivers and both keep their head packet.

use thiserror::Error;

use crate::scenario::ScenarioConfig;
use crate::traffic::{generate_arrivals, ArrivalBatch, TrafficStreams};
use crate::types::{NodeSet, NodeState, Packet, ScheduleAction, Slot};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TwinError {
    #[error("simulation ended: slot {t} is past the horizon of {steps} slots")]
    SimulationEnded { t: Slot, steps: Slot },
    #[error("invalid action {nodes}: at most {k} nodes with ids below {n}")]
    InvalidAction { nodes: String, k: usize, n: usize },
    #[error("vector length {got} does not match {n} nodes")]
    LengthMismatch { got: usize, n: usize },
}

/// What the scheduler sees at the start of a slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub t: Slot,
    pub queue_lengths: Vec<usize>,
    pub oldest_age: Vec<Option<u32>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub arrivals: u64,
    pub delivered: u64,
    pub total_delay: u64,
    pub deadline_violations: u64,
    pub drops: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub slot: Slot,
    /// Nodes that delivered a packet.
    pub served: NodeSet,
    /// Backlogged scheduled nodes that lost the slot to a conflicting transmission.
    pub collided: NodeSet,
    pub delivered_delays: Vec<u32>,
    pub new_violations: u64,
    pub new_drops: u64,
    pub arrivals: ArrivalBatch,
    pub reward: u32,
}

/// Per-run summary computed from the counters and the queue time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub throughput: f64,
    pub avg_queue: f64,
    pub avg_delay: f64,
    pub violations: u64,
    pub drops: u64,
    pub arrivals: u64,
    pub delivered: u64,
    pub final_backlog: u64,
}

#[derive(Debug, Clone)]
pub struct TwinState {
    cfg: ScenarioConfig,
    pub t: Slot,
    pub nodes: Vec<NodeState>,
    pub counters: Counters,
    /// `[slot][node]` queue length after the slot's arrivals.
    pub queue_length_timeseries: Vec<Vec<u32>>,
    /// `[slot][node]` whether the node was scheduled.
    pub schedule_matrix: Vec<Vec<bool>>,
    /// `[slot][node]` absolute gap between the imagined and actual next queue length.
    pub model_error_matrix: Vec<Vec<u32>>,
}

impl TwinState {
    /// Empty queues, zeroed counters, `T x N` matrices. `cfg` must already be validated.
    pub fn reset(cfg: &ScenarioConfig) -> Self {
        let (rows, n) = (cfg.steps as usize, cfg.n_nodes);
        Self {
            nodes: cfg.initial_nodes(),
            cfg: cfg.clone(),
            t: 0,
            counters: Counters::default(),
            queue_length_timeseries: vec![vec![0; n]; rows],
            schedule_matrix: vec![vec![false; n]; rows],
            model_error_matrix: vec![vec![0; n]; rows],
        }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn is_finished(&self) -> bool {
        self.t >= self.cfg.steps
    }

    pub fn queue_lengths(&self) -> Vec<usize> {
        self.nodes.iter().map(NodeState::len).collect()
    }

    pub fn observe(&self) -> Observation {
        Observation {
            t: self.t,
            queue_lengths: self.queue_lengths(),
            oldest_age: self.nodes.iter().map(|n| n.oldest_age(self.t)).collect(),
        }
    }

    pub fn step(
        &mut self,
        action: &ScheduleAction,
        traffic: &mut TrafficStreams,
    ) -> Result<StepOutcome, TwinError> {
        let arrivals = if self.is_finished() {
            ArrivalBatch(Vec::new())
        } else {
            generate_arrivals(&self.cfg, &self.nodes, self.t, traffic)
        };
        self.step_with_arrivals(action, arrivals)
    }

    /// Same as [`step`](Self::step) with externally supplied arrivals.
    pub fn step_with_arrivals(
        &mut self,
        action: &ScheduleAction,
        arrivals: ArrivalBatch,
    ) -> Result<StepOutcome, TwinError> {
        let (n, k, t) = (self.cfg.n_nodes, self.cfg.max_scheduled, self.t);
        if self.is_finished() {
            return Err(TwinError::SimulationEnded { t, steps: self.cfg.steps });
        }
        if !action.is_valid_for(n, k) {
            return Err(TwinError::InvalidAction { nodes: action.nodes.to_string(), k, n });
        }
        if arrivals.0.len() != n {
            return Err(TwinError::LengthMismatch { got: arrivals.0.len(), n });
        }

        // 1) expiry purge
        let mut new_violations = 0;
        for node in &mut self.nodes {
            if let Some(d) = node.deadline.slots() {
                let before = node.queue.len();
                node.queue.retain(|p| t - p.arrival_slot <= d);
                new_violations += (before - node.queue.len()) as u64;
            }
        }

        // 2) transmission
        let transmitting: Vec<usize> = action.nodes.iter().filter(|&i| !self.nodes[i].is_empty()).collect();
        let collided: NodeSet = transmitting
            .iter()
            .copied()
            .filter(|&i| transmitting.iter().any(|&j| j != i && self.cfg.conflict_graph.contains(i, j)))
            .collect();
        let served: NodeSet = transmitting.iter().copied().filter(|&i| !collided.contains(i)).collect();
        let mut delivered_delays = Vec::with_capacity(served.len());
        for i in served.iter() {
            let p = self.nodes[i].queue.pop_front().expect("served node is backlogged");
            delivered_delays.push(t - p.arrival_slot);
        }

        // 3) arrivals
        let mut new_drops = 0;
        for (node, &count) in self.nodes.iter_mut().zip(&arrivals.0) {
            let room = self.cfg.buffer.saturating_sub(node.queue.len());
            let admitted = (count as usize).min(room);
            node.queue.extend(std::iter::repeat_n(Packet { arrival_slot: t }, admitted));
            new_drops += (count as usize - admitted) as u64;
        }

        // 4) accounting
        let c = &mut self.counters;
        c.arrivals += arrivals.total();
        c.delivered += served.len() as u64;
        c.total_delay += delivered_delays.iter().map(|&d| d as u64).sum::<u64>();
        c.deadline_violations += new_violations;
        c.drops += new_drops;
        let row = t as usize;
        for (i, node) in self.nodes.iter().enumerate() {
            self.queue_length_timeseries[row][i] = node.len() as u32;
            self.schedule_matrix[row][i] = action.nodes.contains(i);
        }
        self.t += 1;

        Ok(StepOutcome {
            slot: t,
            reward: served.len() as u32,
            served,
            collided,
            delivered_delays,
            new_violations,
            new_drops,
            arrivals,
        })
    }

    /// Stores `|imagined - actual_next|` as the model-error row of `slot`.
    pub fn record_model_error(
        &mut self,
        slot: Slot,
        imagined: &[usize],
        actual_next: &[usize],
    ) -> Result<(), TwinError> {
        let n = self.cfg.n_nodes;
        for v in [imagined, actual_next] {
            if v.len() != n {
                return Err(TwinError::LengthMismatch { got: v.len(), n });
            }
        }
        if slot >= self.cfg.steps {
            return Err(TwinError::SimulationEnded { t: slot, steps: self.cfg.steps });
        }
        let row = &mut self.model_error_matrix[slot as usize];
        for (cell, (&a, &b)) in row.iter_mut().zip(imagined.iter().zip(actual_next)) {
            *cell = a.abs_diff(b) as u32;
        }
        Ok(())
    }

    pub fn final_backlog(&self) -> u64 {
        self.nodes.iter().map(|n| n.len() as u64).sum()
    }

    /// Summary over the slots executed so far (the whole run once finished).
    pub fn metrics(&self) -> RunMetrics {
        let slots = self.t.max(1) as f64;
        let c = self.counters;
        let executed = &self.queue_length_timeseries[..self.t as usize];
        let cells = (executed.len() * self.cfg.n_nodes).max(1) as f64;
        let queue_sum: u64 = executed.iter().flatten().map(|&q| q as u64).sum();
        RunMetrics {
            throughput: c.delivered as f64 / slots,
            avg_queue: queue_sum as f64 / cells,
            avg_delay: if c.delivered == 0 { 0.0 } else { c.total_delay as f64 / c.delivered as f64 },
            violations: c.deadline_violations,
            drops: c.drops,
            arrivals: c.arrivals,
            delivered: c.delivered,
            final_backlog: self.final_backlog(),
        }
    }
}

/// Arrival-free one-step queue prediction: scheduled nodes drain by one, floored at zero.
pub fn imagined_next(q: &[usize], action: &NodeSet) -> Vec<usize> {
    q.iter()
        .enumerate()
        .map(|(i, &len)| if action.contains(i) { len.saturating_sub(1) } else { len })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ConflictGraph, Deadline, Provenance};

    fn cfg() -> ScenarioConfig {
        ScenarioConfig::standard("t").validate().unwrap()
    }

    fn act(nodes: &[usize]) -> ScheduleAction {
        ScheduleAction::new(nodes.to_vec().into(), Provenance::Baseline)
    }

    fn none(n: usize) -> ArrivalBatch {
        ArrivalBatch(vec![0; n])
    }

    fn push(tw: &mut TwinState, node: usize, arrival_slot: Slot, count: usize) {
        for _ in 0..count {
            tw.nodes[node].queue.push_back(Packet { arrival_slot });
        }
    }

    #[test]
    fn reset_is_empty() {
        let tw = TwinState::reset(&cfg());
        assert_eq!(tw.t, 0);
        assert_eq!(tw.queue_lengths(), vec![0; 5]);
        assert_eq!(tw.counters, Counters::default());
        assert_eq!((tw.schedule_matrix.len(), tw.schedule_matrix[0].len()), (200, 5));
        assert_eq!((tw.model_error_matrix.len(), tw.model_error_matrix[0].len()), (200, 5));
        assert_eq!(tw.queue_length_timeseries.len(), 200);
    }

    #[test]
    fn observe_reports_age() {
        let mut tw = TwinState::reset(&cfg());
        push(&mut tw, 1, 3, 1);
        tw.t = 9;
        let obs = tw.observe();
        assert_eq!(obs.queue_lengths[0], 0);
        assert_eq!(obs.oldest_age[0], None);
        assert_eq!(obs.oldest_age[1], Some(6));
    }

    #[test]
    fn single_dequeue() {
        let mut tw = TwinState::reset(&cfg());
        push(&mut tw, 0, 0, 1);
        let out = tw.step_with_arrivals(&act(&[0]), none(5)).unwrap();
        assert_eq!(out.reward, 1);
        assert_eq!(tw.counters.delivered, 1);
        assert_eq!(tw.queue_lengths()[0], 0);
    }

    #[test]
    fn empty_scheduled_node_earns_nothing() {
        let mut tw = TwinState::reset(&cfg());
        let out = tw.step_with_arrivals(&act(&[1]), none(5)).unwrap();
        assert_eq!(out.reward, 0);
        assert!(out.served.is_empty());
        assert_eq!(tw.counters.delivered, 0);
    }

    #[test]
    fn full_buffer_drops_overflow() {
        let mut tw = TwinState::reset(&cfg());
        push(&mut tw, 2, 0, 50);
        let out = tw.step_with_arrivals(&act(&[]), ArrivalBatch(vec![0, 0, 2, 0, 0])).unwrap();
        assert_eq!(out.new_drops, 2);
        assert_eq!(tw.counters.drops, 2);
        assert_eq!(tw.queue_lengths()[2], 50);
    }

    #[test]
    fn packet_cannot_be_served_in_its_arrival_slot() {
        let mut tw = TwinState::reset(&cfg());
        let out = tw.step_with_arrivals(&act(&[0]), ArrivalBatch(vec![1, 0, 0, 0, 0])).unwrap();
        assert_eq!(out.reward, 0);
        assert_eq!(tw.queue_lengths()[0], 1);
        let out = tw.step_with_arrivals(&act(&[0]), none(5)).unwrap();
        assert_eq!(out.reward, 1);
        assert_eq!(out.delivered_delays, vec![1]);
    }

    #[test]
    fn delay_is_departure_minus_arrival() {
        let mut tw = TwinState::reset(&cfg());
        for t in 0..5 {
            let a = if t == 2 { ArrivalBatch(vec![1, 0, 0, 0, 0]) } else { none(5) };
            tw.step_with_arrivals(&act(&[]), a).unwrap();
        }
        let out = tw.step_with_arrivals(&act(&[0]), none(5)).unwrap();
        assert_eq!(out.slot, 5);
        assert_eq!(out.delivered_delays, vec![3]);
        assert_eq!(tw.metrics().avg_delay, 3.0);
    }

    #[test]
    fn expired_packets_are_purged_before_service() {
        let mut c = cfg();
        c.deadlines[3] = Deadline::Finite(5);
        let mut tw = TwinState::reset(&c);
        push(&mut tw, 3, 0, 2);
        push(&mut tw, 3, 2, 1);
        tw.t = 6;
        let out = tw.step_with_arrivals(&act(&[3]), none(5)).unwrap();
        assert_eq!(out.new_violations, 2);
        assert_eq!(out.delivered_delays, vec![4]);
        assert_eq!(tw.queue_lengths()[3], 0);
    }

    #[test]
    fn conflicting_transmissions_collide() {
        let mut c = cfg();
        c.conflict_graph = ConflictGraph::from_pairs([(0, 1)]);
        let mut tw = TwinState::reset(&c);
        push(&mut tw, 0, 0, 1);
        push(&mut tw, 1, 0, 1);
        push(&mut tw, 2, 0, 1);
        let out = tw.step_with_arrivals(&act(&[0, 1, 2]), none(5)).unwrap();
        assert_eq!(out.collided.as_slice(), &[0, 1]);
        assert_eq!(out.served.as_slice(), &[2]);
        assert_eq!(out.reward, 1);
        assert_eq!(tw.queue_lengths(), vec![1, 1, 0, 0, 0]);
    }

    #[test]
    fn conflict_with_an_idle_partner_is_harmless() {
        let mut c = cfg();
        c.conflict_graph = ConflictGraph::from_pairs([(0, 1)]);
        let mut tw = TwinState::reset(&c);
        push(&mut tw, 0, 0, 1);
        let out = tw.step_with_arrivals(&act(&[0, 1]), none(5)).unwrap();
        assert_eq!(out.served.as_slice(), &[0]);
    }

    #[test]
    fn step_past_end_errors() {
        let mut c = cfg();
        c.steps = 1;
        let mut tw = TwinState::reset(&c);
        tw.step_with_arrivals(&act(&[]), none(5)).unwrap();
        assert_eq!(
            tw.step_with_arrivals(&act(&[]), none(5)),
            Err(TwinError::SimulationEnded { t: 1, steps: 1 })
        );
    }

    #[test]
    fn oversized_action_rejected() {
        let mut tw = TwinState::reset(&cfg());
        assert!(matches!(
            tw.step_with_arrivals(&act(&[0, 1, 2, 3]), none(5)),
            Err(TwinError::InvalidAction { .. })
        ));
    }

    #[test]
    fn imagined_next_examples() {
        assert_eq!(imagined_next(&[3, 1, 0], &[0, 2].into()), vec![2, 1, 0]);
        assert_eq!(imagined_next(&[3, 1, 0], &NodeSet::empty()), vec![3, 1, 0]);
        assert_eq!(imagined_next(&[0, 0], &[0, 1].into()), vec![0, 0]);
    }

    #[test]
    fn model_error_is_absolute_difference() {
        let mut c = cfg();
        c.n_nodes = 2;
        c.max_scheduled = 2;
        c.deadlines.truncate(2);
        c.lambda_base.truncate(2);
        let mut tw = TwinState::reset(&c);
        tw.record_model_error(0, &[2, 1], &[2, 1]).unwrap();
        assert_eq!(tw.model_error_matrix[0], vec![0, 0]);
        tw.record_model_error(1, &[2, 1], &[4, 1]).unwrap();
        assert_eq!(tw.model_error_matrix[1], vec![2, 0]);
        assert!(tw.record_model_error(2, &[1], &[1, 1]).is_err());
    }

    #[test]
    fn metrics_arithmetic() {
        let mut tw = TwinState::reset(&cfg());
        tw.t = 200;
        tw.counters.delivered = 300;
        tw.counters.total_delay = 600;
        let m = tw.metrics();
        assert_eq!(m.throughput, 1.5);
        assert_eq!(m.avg_delay, 2.0);
    }

    #[test]
    fn no_traffic_metrics_are_zero() {
        let mut tw = TwinState::reset(&cfg());
        while !tw.is_finished() {
            tw.step_with_arrivals(&act(&[0, 1, 2]), none(5)).unwrap();
        }
        let m = tw.metrics();
        assert_eq!((m.throughput, m.avg_delay, m.avg_queue), (0.0, 0.0, 0.0));
    }
}
