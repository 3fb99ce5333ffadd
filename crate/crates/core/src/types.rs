//! Domain types shared by the simulator, the planners and the baselines.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Slot index.
pub type Slot = u32;

/// A queued packet. Only its arrival slot matters for age, delay and deadline accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub arrival_slot: Slot,
}

/// Per-node deadline in slots. Serialized as a positive integer, or `null` for no deadline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Deadline {
    Finite(u32),
    Unbounded,
}

impl Deadline {
    pub fn is_finite(self) -> bool {
        matches!(self, Deadline::Finite(_))
    }

    pub fn slots(self) -> Option<u32> {
        match self {
            Deadline::Finite(d) => Some(d),
            Deadline::Unbounded => None,
        }
    }
}

/// A node's bounded FIFO and its traffic / deadline parameters.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub node_id: usize,
    pub queue: VecDeque<Packet>,
    pub lambda_base: f64,
    pub deadline: Deadline,
    pub is_burst_node: bool,
}

impl NodeState {
    pub fn new(node_id: usize, lambda_base: f64, deadline: Deadline, is_burst_node: bool) -> Self {
        Self {
            node_id,
            queue: VecDeque::new(),
            lambda_base,
            deadline,
            is_burst_node,
        }
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Age of the head-of-line packet at slot `now`.
    pub fn oldest_age(&self, now: Slot) -> Option<u32> {
        self.queue.front().map(|p| now - p.arrival_slot)
    }
}

/// Unordered interference pairs. Stored normalized as `(min, max)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConflictGraph {
    pairs: BTreeSet<(usize, usize)>,
}

impl ConflictGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from arbitrary pairs; `(i, j)` and `(j, i)` collapse to one edge.
    /// Self pairs are kept so that validation can reject them.
    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Self {
        let mut g = Self::new();
        for (i, j) in pairs {
            g.insert(i, j);
        }
        g
    }

    /// Ring `{(i, (i+1) mod n)}`.
    pub fn ring(n: usize) -> Self {
        if n < 2 {
            return Self::new();
        }
        Self::from_pairs((0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        self.pairs.insert((i.min(j), i.max(j)));
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs.contains(&(i.min(j), i.max(j)))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// True if any two distinct members of `nodes` form a conflict pair.
    pub fn has_conflict_within(&self, nodes: &[usize]) -> bool {
        nodes
            .iter()
            .enumerate()
            .any(|(a, &i)| nodes[a + 1..].iter().any(|&j| self.contains(i, j)))
    }
}

impl Serialize for ConflictGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.pairs.iter().map(|&(i, j)| [i, j]))
    }
}

impl<'de> Deserialize<'de> for ConflictGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: Vec<[usize; 2]> = Vec::deserialize(d)?;
        Ok(Self::from_pairs(raw.into_iter().map(|[i, j]| (i, j))))
    }
}

/// Sorted, duplicate-free set of node ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }
}

impl From<Vec<usize>> for NodeSet {
    fn from(v: Vec<usize>) -> Self {
        v.into_iter().collect()
    }
}

impl<const M: usize> From<[usize; M]> for NodeSet {
    fn from(v: [usize; M]) -> Self {
        v.into_iter().collect()
    }
}

impl fmt::Display for NodeSet {
    /// `;`-separated ids, e.g. `0;2;4`. Keeps the set a single CSV field.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, id) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(";")?;
            }
            write!(f, "{id}")?;
        }
        Ok(())
    }
}

/// Which decision path produced a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Rollout-optimal schedule drawn from the constraint-feasible set.
    SlowMind,
    /// Urgency fallback, used when the feasible set is empty.
    FastMind,
    /// Produced by one of the comparison policies.
    Baseline,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::SlowMind => "slow_mind",
            Provenance::FastMind => "fast_mind",
            Provenance::Baseline => "baseline",
        }
    }
}

/// The set of nodes allowed to transmit in one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleAction {
    pub nodes: NodeSet,
    pub provenance: Provenance,
}

impl ScheduleAction {
    pub fn new(nodes: NodeSet, provenance: Provenance) -> Self {
        Self { nodes, provenance }
    }

    /// Checks `|nodes| <= k` and every id `< n`. Duplicates are impossible by construction.
    pub fn is_valid_for(&self, n: usize, k: usize) -> bool {
        self.nodes.len() <= k && self.nodes.iter().all(|i| i < n)
    }
}
