//! Offline deferred acceptance with either side proposing.
//!
//! Both engines keep tentative holds: a receiver re-evaluates its choice over
//! everything currently offered to it each step, and the run stops at the
//! first step without a rejection.

use alloc::vec;
use alloc::vec::Vec;

use crate::market::MarketSpec;
use crate::matching::Matching;
use crate::set::IndexSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ProposingSide {
    Players,
    Arms,
}

/// One simultaneous round of proposals and rejections.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DaStep {
    /// Indexed by proposer: the receivers it proposed to.
    pub proposals: Vec<IndexSet>,
    /// Indexed by receiver: the proposers it rejected.
    pub rejections: Vec<IndexSet>,
}

impl DaStep {
    pub fn rejection_count(&self) -> usize {
        self.rejections.iter().map(|r| r.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DaTrace {
    pub side: ProposingSide,
    pub steps: Vec<DaStep>,
    pub matching: Matching,
    pub step_count: usize,
    pub rejection_count: usize,
    /// Players left without an arm. With players proposing these have been
    /// rejected by every arm.
    pub unmatched: IndexSet,
}

/// Player-proposing DA; yields the player-optimal stable matching.
pub fn da_player_proposing(spec: &MarketSpec) -> DaTrace {
    let n = spec.n_players();
    let k = spec.n_arms();
    let orders: Vec<Vec<usize>> = (0..n).map(|i| spec.preference_order(i)).collect();
    let mut pointer = vec![0usize; n];
    let mut steps = Vec::new();
    let mut rejection_count = 0;
    loop {
        let mut proposals = vec![IndexSet::EMPTY; n];
        let mut offered = vec![IndexSet::EMPTY; k];
        for i in 0..n {
            if let Some(&j) = orders[i].get(pointer[i]) {
                proposals[i].insert(j);
                offered[j].insert(i);
            }
        }
        let mut rejections = vec![IndexSet::EMPTY; k];
        for j in 0..k {
            let kept = spec.arm(j).choose(offered[j]);
            rejections[j] = offered[j].difference(kept);
            for i in rejections[j] {
                pointer[i] += 1;
            }
        }
        let step = DaStep { proposals, rejections };
        let rejected = step.rejection_count();
        rejection_count += rejected;
        steps.push(step);
        if rejected == 0 {
            break;
        }
    }
    let assignment: Vec<Option<usize>> =
        (0..n).map(|i| orders[i].get(pointer[i]).copied()).collect();
    finish(ProposingSide::Players, steps, rejection_count, Matching::new(assignment, k))
}

/// Arm-proposing DA; yields the player-pessimal stable matching.
pub fn da_arm_proposing(spec: &MarketSpec) -> DaTrace {
    let n = spec.n_players();
    let k = spec.n_arms();
    let mut available = vec![spec.all_players(); k];
    let mut held: Vec<Option<usize>> = vec![None; n];
    let mut steps = Vec::new();
    let mut rejection_count = 0;
    loop {
        let proposals: Vec<IndexSet> = (0..k).map(|j| spec.arm(j).choose(available[j])).collect();
        let mut rejections = vec![IndexSet::EMPTY; n];
        for i in 0..n {
            let suitors: IndexSet = (0..k).filter(|&j| proposals[j].contains(i)).collect();
            let best = suitors.iter().max_by(|&a, &b| spec.mu(i, a).total_cmp(&spec.mu(i, b)));
            held[i] = best;
            if let Some(b) = best {
                rejections[i] = suitors.without(b);
                for j in rejections[i] {
                    available[j].remove(i);
                }
            }
        }
        let step = DaStep { proposals, rejections };
        let rejected = step.rejection_count();
        rejection_count += rejected;
        steps.push(step);
        if rejected == 0 {
            break;
        }
    }
    finish(ProposingSide::Arms, steps, rejection_count, Matching::new(held, k))
}

fn finish(side: ProposingSide, steps: Vec<DaStep>, rejection_count: usize, matching: Matching) -> DaTrace {
    let unmatched = (0..matching.n_players()).filter(|&i| matching.arm_of(i).is_none()).collect();
    DaTrace { side, step_count: steps.len(), steps, matching, rejection_count, unmatched }
}
