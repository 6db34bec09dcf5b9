//! Matchings, stability, and the brute-force stable-matching oracle.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::MarketError;
use crate::market::MarketSpec;
use crate::set::IndexSet;

/// Largest market the brute-force enumeration accepts.
pub const ENUMERATION_MAX_PLAYERS: usize = 8;
pub const ENUMERATION_MAX_ARMS: usize = 5;

/// Each player's arm (or `None` when unmatched).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matching {
    assignment: Vec<Option<usize>>,
    n_arms: usize,
}

impl Matching {
    pub fn new(assignment: Vec<Option<usize>>, n_arms: usize) -> Self {
        debug_assert!(assignment.iter().flatten().all(|&j| j < n_arms));
        Matching { assignment, n_arms }
    }

    pub fn unmatched(n_players: usize, n_arms: usize) -> Self {
        Matching { assignment: vec![None; n_players], n_arms }
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn arm_of(&self, player: usize) -> Option<usize> {
        self.assignment[player]
    }

    pub fn n_players(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    /// Players assigned to `arm`.
    pub fn arm_set(&self, arm: usize) -> IndexSet {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, a)| **a == Some(arm))
            .map(|(i, _)| i)
            .collect()
    }

    /// Per-arm accepted sets, the inverse of the assignment.
    pub fn arm_sets(&self) -> Vec<IndexSet> {
        let mut sets = vec![IndexSet::EMPTY; self.n_arms];
        for (i, a) in self.assignment.iter().enumerate() {
            if let Some(j) = a {
                sets[*j].insert(i);
            }
        }
        sets
    }
}

/// Why a matching is not stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityViolation {
    /// The arm would not keep all of its current players.
    ArmImproves { arm: usize },
    /// The player prefers the arm, which would accept it alongside its current players.
    BlockingPair { player: usize, arm: usize },
}

/// First violation found, checking arms before player-arm pairs.
pub fn stability_violation(m: &Matching, spec: &MarketSpec) -> Option<StabilityViolation> {
    let sets = m.arm_sets();
    for (arm, &held) in sets.iter().enumerate() {
        if spec.arm(arm).choose(held) != held {
            return Some(StabilityViolation::ArmImproves { arm });
        }
    }
    for player in 0..m.n_players() {
        let current = spec.value(player, m.arm_of(player));
        for (arm, &held) in sets.iter().enumerate() {
            if m.arm_of(player) == Some(arm) || spec.mu(player, arm) <= current {
                continue;
            }
            if spec.arm(arm).accepts(player, held.with(player)) {
                return Some(StabilityViolation::BlockingPair { player, arm });
            }
        }
    }
    None
}

pub fn is_stable(m: &Matching, spec: &MarketSpec) -> bool {
    stability_violation(m, spec).is_none()
}

/// All stable matchings of a small market plus each player's best and worst
/// stable arm.
#[derive(Debug, Clone, PartialEq)]
pub struct StableSet {
    pub matchings: Vec<Matching>,
    /// Highest-value arm each player holds in some stable matching.
    pub best: Vec<Option<usize>>,
    /// Lowest-value arm (`None` if the player is unmatched in some stable matching).
    pub worst: Vec<Option<usize>>,
}

impl StableSet {
    pub fn contains(&self, m: &Matching) -> bool {
        self.matchings.contains(m)
    }

    /// Players unmatched in every stable matching.
    pub fn never_matched(&self) -> IndexSet {
        self.best.iter().enumerate().filter(|(_, b)| b.is_none()).map(|(i, _)| i).collect()
    }
}

/// Enumerates all `(K + 1)^N` assignments and keeps the stable ones.
pub fn enumerate_stable_matchings(spec: &MarketSpec) -> Result<StableSet, MarketError> {
    let n = spec.n_players();
    let k = spec.n_arms();
    if n > ENUMERATION_MAX_PLAYERS {
        return Err(MarketError::EnumerationBound {
            what: "stable-matching enumeration",
            limit: ENUMERATION_MAX_PLAYERS,
            got: n,
        });
    }
    if k > ENUMERATION_MAX_ARMS {
        return Err(MarketError::ArmEnumerationBound {
            what: "stable-matching enumeration",
            limit: ENUMERATION_MAX_ARMS,
            got: k,
        });
    }
    // odometer over digits in 0..=k, digit k meaning unmatched
    let mut digits = vec![0usize; n];
    let mut matchings = Vec::new();
    loop {
        let assignment: Vec<Option<usize>> =
            digits.iter().map(|&d| (d < k).then_some(d)).collect();
        let m = Matching::new(assignment, k);
        if is_stable(&m, spec) {
            matchings.push(m);
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return summarize(spec, matchings);
            }
            digits[pos] += 1;
            if digits[pos] <= k {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

fn summarize(spec: &MarketSpec, matchings: Vec<Matching>) -> Result<StableSet, MarketError> {
    if matchings.is_empty() {
        return Err(MarketError::NoStableMatching);
    }
    let n = spec.n_players();
    let mut best = vec![None; n];
    let mut worst = vec![None; n];
    for i in 0..n {
        let arms = matchings.iter().map(|m| m.arm_of(i));
        best[i] = arms.clone().max_by(|a, b| spec.value(i, *a).total_cmp(&spec.value(i, *b))).flatten();
        worst[i] = arms.min_by(|a, b| spec.value(i, *a).total_cmp(&spec.value(i, *b))).flatten();
    }
    Ok(StableSet { matchings, best, worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::ChoiceFunction;
    use crate::market::RewardModel;

    pub(crate) fn example_market() -> MarketSpec {
        let s = |v: &[usize]| v.iter().copied().collect::<IndexSet>();
        let a1 = ChoiceFunction::general(vec![
            s(&[0, 1]),
            s(&[0, 2]),
            s(&[1, 2]),
            s(&[2]),
            s(&[1]),
            s(&[0]),
        ]);
        let a2 = ChoiceFunction::general(vec![s(&[2]), IndexSet::EMPTY]);
        MarketSpec::new(
            vec![vec![0.9, 0.1], vec![0.8, 0.2], vec![0.4, 0.7]],
            vec![a1, a2],
            100,
            RewardModel::Bernoulli,
        )
        .unwrap()
    }

    fn two_by_two() -> MarketSpec {
        MarketSpec::new(
            vec![vec![0.9, 0.5], vec![0.8, 0.6]],
            vec![
                ChoiceFunction::responsive(vec![0, 1], 1),
                ChoiceFunction::responsive(vec![0, 1], 1),
            ],
            100,
            RewardModel::Bernoulli,
        )
        .unwrap()
    }

    fn single() -> MarketSpec {
        MarketSpec::new(
            vec![vec![0.9]],
            vec![ChoiceFunction::responsive(vec![0], 1)],
            10,
            RewardModel::Bernoulli,
        )
        .unwrap()
    }

    /// Stability straight from the two conditions, written independently of
    /// `stability_violation`.
    fn stable_by_definition(m: &Matching, spec: &MarketSpec) -> bool {
        let k = spec.n_arms();
        for j in 0..k {
            let held = m.arm_set(j);
            if spec.arm(j).choose(held) != held {
                return false;
            }
        }
        for i in 0..spec.n_players() {
            let cur = m.arm_of(i).map_or(0.0, |j| spec.mu(i, j));
            for j in 0..k {
                if spec.mu(i, j) > cur && spec.arm(j).choose(m.arm_set(j).with(i)).contains(i) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn example_matching_is_stable() {
        let spec = example_market();
        let m = Matching::new(vec![Some(0), Some(0), Some(1)], 2);
        assert!(stable_by_definition(&m, &spec));
        assert!(is_stable(&m, &spec));
        assert_eq!(m.arm_sets(), vec![[0, 1].into_iter().collect(), IndexSet::singleton(2)]);
    }

    #[test]
    fn single_pair_stability() {
        let spec = single();
        assert!(is_stable(&Matching::new(vec![Some(0)], 1), &spec));
        assert_eq!(
            stability_violation(&Matching::unmatched(1, 1), &spec),
            Some(StabilityViolation::BlockingPair { player: 0, arm: 0 })
        );
    }

    #[test]
    fn arm_improvement_detected() {
        let spec = two_by_two();
        let m = Matching::new(vec![Some(0), Some(0)], 2);
        assert_eq!(stability_violation(&m, &spec), Some(StabilityViolation::ArmImproves { arm: 0 }));
    }

    #[test]
    fn enumeration_two_by_two_unique() {
        let spec = two_by_two();
        // all 9 assignments checked by the definition
        let mut by_def = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                let m = Matching::new(vec![(a < 2).then_some(a), (b < 2).then_some(b)], 2);
                if stable_by_definition(&m, &spec) {
                    by_def.push(m);
                }
            }
        }
        assert_eq!(by_def, vec![Matching::new(vec![Some(0), Some(1)], 2)]);
        let set = enumerate_stable_matchings(&spec).unwrap();
        assert_eq!(set.matchings, by_def);
        assert_eq!(set.best, set.worst);
        assert_eq!(set.best, vec![Some(0), Some(1)]);
    }

    #[test]
    fn enumeration_single_and_example() {
        let set = enumerate_stable_matchings(&single()).unwrap();
        assert_eq!(set.matchings, vec![Matching::new(vec![Some(0)], 1)]);
        let spec = example_market();
        let set = enumerate_stable_matchings(&spec).unwrap();
        assert!(set.contains(&Matching::new(vec![Some(0), Some(0), Some(1)], 2)));
        for m in &set.matchings {
            assert!(stable_by_definition(m, &spec));
        }
        assert!(set.never_matched().is_empty());
    }

    #[test]
    fn enumeration_bounds() {
        let n = 9;
        let spec = MarketSpec::new(
            (0..n).map(|_| vec![0.5]).collect(),
            vec![ChoiceFunction::responsive((0..n).collect(), n)],
            1,
            RewardModel::Bernoulli,
        )
        .unwrap();
        assert!(matches!(
            enumerate_stable_matchings(&spec),
            Err(MarketError::EnumerationBound { limit: 8, .. })
        ));
    }
}
