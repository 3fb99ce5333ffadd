//! Informed constraint navigation: the boolean feasibility filter applied to candidate schedules.

use itertools::Itertools;

use crate::types::{ConflictGraph, Deadline, NodeSet};

/// True iff every member is backlogged, no member's head packet is past its deadline,
/// and no two members form a conflict pair.
pub fn icn_check(
    schedule: &[usize],
    q: &[usize],
    oldest_age: &[Option<u32>],
    deadlines: &[Deadline],
    conflicts: &ConflictGraph,
) -> bool {
    for &i in schedule {
        if q[i] == 0 {
            return false;
        }
        if let (Some(d), Some(age)) = (deadlines[i].slots(), oldest_age[i]) {
            if age > d {
                return false;
            }
        }
    }
    !conflicts.has_conflict_within(schedule)
}

/// Every size-`k` subset of `0..n` in lexicographic order of sorted members.
pub fn k_subsets(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..n).combinations(k)
}

/// All size-`k` schedules passing [`icn_check`], lexicographically ordered.
pub fn enumerate_feasible(
    n: usize,
    k: usize,
    q: &[usize],
    oldest_age: &[Option<u32>],
    deadlines: &[Deadline],
    conflicts: &ConflictGraph,
) -> Vec<NodeSet> {
    k_subsets(n, k)
        .filter(|s| icn_check(s, q, oldest_age, deadlines, conflicts))
        .map(NodeSet::from)
        .collect()
}
