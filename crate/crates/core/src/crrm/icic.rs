//! Centralized muting: co-channel cells that couple above a threshold are
//! 2-coloured and each colour transmits on alternate TTIs.

use std::collections::{BTreeMap, BTreeSet};

use crate::spectrum::ChannelId;

/// Colour per muted (cell index, channel). Pairs absent from the plan are
/// never muted.
pub type MutePlan = BTreeMap<(usize, ChannelId), u8>;

/// `assigned[i]` is cell i's carrier set; `strong(i, j)` says whether i and j
/// interfere enough to coordinate.
pub fn plan_muting(assigned: &[BTreeSet<ChannelId>], strong: &dyn Fn(usize, usize) -> bool) -> MutePlan {
    let channels: BTreeSet<ChannelId> = assigned.iter().flatten().copied().collect();
    let mut plan = MutePlan::new();
    for ch in channels {
        let users: Vec<usize> = (0..assigned.len()).filter(|i| assigned[*i].contains(&ch)).collect();
        for (pos, &i) in users.iter().enumerate() {
            let neighbours: Vec<usize> = users
                .iter()
                .copied()
                .filter(|&j| j != i && (strong(i, j) || strong(j, i)))
                .collect();
            if neighbours.is_empty() {
                continue;
            }
            let taken: BTreeSet<u8> = users[..pos]
                .iter()
                .filter(|j| neighbours.contains(j))
                .filter_map(|j| plan.get(&(*j, ch)).copied())
                .collect();
            let colour = if taken.contains(&0) && !taken.contains(&1) {
                1
            } else {
                0
            };
            plan.insert((i, ch), colour);
        }
    }
    plan
}

pub fn is_muted(plan: &MutePlan, cell: usize, ch: ChannelId, tti: u64) -> bool {
    plan.get(&(cell, ch)).is_some_and(|c| u64::from(*c) != tti % 2)
}
