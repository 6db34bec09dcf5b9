//! Regret targets: each player's best and worst stable arm.
//!
//! Small markets are refereed by brute-force enumeration and cross-checked
//! against both DA engines; larger ones fall back to DA alone.

use alloc::vec::Vec;

use crate::da::{da_arm_proposing, da_player_proposing, DaTrace};
use crate::market::MarketSpec;
use crate::matching::{enumerate_stable_matchings, StableSet, ENUMERATION_MAX_ARMS, ENUMERATION_MAX_PLAYERS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RefereeSource {
    Enumeration,
    DeferredAcceptance,
}

/// A disagreement between the DA engines and the enumeration oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Disagreement {
    /// Player-proposing DA did not give this player its best stable arm.
    NotPlayerOptimal { player: usize },
    /// Arm-proposing DA did not give this player its worst stable arm.
    NotPlayerPessimal { player: usize },
    /// A DA output is missing from the enumerated stable set.
    DaUnstable { arms_proposing: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTargets {
    pub optimal_arm: Vec<Option<usize>>,
    pub pessimal_arm: Vec<Option<usize>>,
    /// `mu` at the optimal arm, 0 when the player is never stably matched.
    pub optimal_value: Vec<f64>,
    pub pessimal_value: Vec<f64>,
}

impl RegretTargets {
    pub fn from_arms(spec: &MarketSpec, optimal_arm: Vec<Option<usize>>, pessimal_arm: Vec<Option<usize>>) -> Self {
        let value = |arms: &[Option<usize>]| -> Vec<f64> {
            arms.iter().enumerate().map(|(i, a)| spec.value(i, *a)).collect()
        };
        RegretTargets {
            optimal_value: value(&optimal_arm),
            pessimal_value: value(&pessimal_arm),
            optimal_arm,
            pessimal_arm,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Referee {
    pub source: RefereeSource,
    pub targets: RegretTargets,
    pub player_proposing: DaTrace,
    pub arm_proposing: DaTrace,
    pub stable_set: Option<StableSet>,
    pub disagreements: Vec<Disagreement>,
}

impl Referee {
    pub fn new(spec: &MarketSpec) -> Self {
        let player_proposing = da_player_proposing(spec);
        let arm_proposing = da_arm_proposing(spec);
        let small = spec.n_players() <= ENUMERATION_MAX_PLAYERS && spec.n_arms() <= ENUMERATION_MAX_ARMS;
        let stable_set = if small { enumerate_stable_matchings(spec).ok() } else { None };
        let mut disagreements = Vec::new();
        let targets = match &stable_set {
            Some(set) => {
                for (trace, arms_proposing) in [(&player_proposing, false), (&arm_proposing, true)] {
                    if !set.contains(&trace.matching) {
                        disagreements.push(Disagreement::DaUnstable { arms_proposing });
                    }
                }
                for i in 0..spec.n_players() {
                    if spec.value(i, player_proposing.matching.arm_of(i)) != spec.value(i, set.best[i]) {
                        disagreements.push(Disagreement::NotPlayerOptimal { player: i });
                    }
                    if spec.value(i, arm_proposing.matching.arm_of(i)) != spec.value(i, set.worst[i]) {
                        disagreements.push(Disagreement::NotPlayerPessimal { player: i });
                    }
                }
                RegretTargets::from_arms(spec, set.best.clone(), set.worst.clone())
            }
            None => RegretTargets::from_arms(
                spec,
                player_proposing.matching.assignment().to_vec(),
                arm_proposing.matching.assignment().to_vec(),
            ),
        };
        Referee {
            source: if stable_set.is_some() { RefereeSource::Enumeration } else { RefereeSource::DeferredAcceptance },
            targets,
            player_proposing,
            arm_proposing,
            stable_set,
            disagreements,
        }
    }

    pub fn agrees(&self) -> bool {
        self.disagreements.is_empty()
    }
}
