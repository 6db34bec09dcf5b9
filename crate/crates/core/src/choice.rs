//! Arm choice functions: responsive (ranking plus capacity) and general
//! (a strict ranking over player subsets).

use alloc::vec::Vec;

use crate::error::MarketError;
use crate::set::IndexSet;

/// Largest player count accepted by [`ChoiceFunction::check_substitutable`].
pub const SUBSTITUTABILITY_MAX_PLAYERS: usize = 20;

/// An arm's map from an offered player set to the subset it accepts.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ChoiceFunction {
    /// Accept the `capacity` highest-ranked players on offer.
    Responsive { ranking: Vec<usize>, capacity: usize },
    /// Accept the highest-ranked listed subset contained in the offer.
    /// The empty set is implicitly ranked last.
    General { ranked_subsets: Vec<IndexSet> },
}

/// Counterexample to substitutability: `kept` is chosen from `offer` but is
/// dropped once `removed` leaves the offer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubstitutabilityWitness {
    pub offer: IndexSet,
    pub kept: usize,
    pub removed: usize,
}

/// The `capacity` players of `offered` that rank highest.
pub fn responsive_choice(ranking: &[usize], capacity: usize, offered: IndexSet) -> IndexSet {
    if offered.len() <= capacity {
        return offered;
    }
    let mut chosen = IndexSet::EMPTY;
    let mut left = capacity;
    for &p in ranking {
        if left == 0 {
            break;
        }
        if offered.contains(p) {
            chosen.insert(p);
            left -= 1;
        }
    }
    chosen
}

/// The first subset of `ranked_subsets` contained in `offered`, or the empty set.
pub fn general_choice(ranked_subsets: &[IndexSet], offered: IndexSet) -> IndexSet {
    ranked_subsets
        .iter()
        .copied()
        .find(|s| s.is_subset_of(offered))
        .unwrap_or(IndexSet::EMPTY)
}

impl ChoiceFunction {
    pub fn responsive(ranking: Vec<usize>, capacity: usize) -> Self {
        ChoiceFunction::Responsive { ranking, capacity }
    }

    pub fn general(ranked_subsets: Vec<IndexSet>) -> Self {
        ChoiceFunction::General { ranked_subsets }
    }

    pub fn choose(&self, offered: IndexSet) -> IndexSet {
        match self {
            ChoiceFunction::Responsive { ranking, capacity } => {
                responsive_choice(ranking, *capacity, offered)
            }
            ChoiceFunction::General { ranked_subsets } => general_choice(ranked_subsets, offered),
        }
    }

    /// Whether `player` is in the choice from `offered`.
    pub fn accepts(&self, player: usize, offered: IndexSet) -> bool {
        self.choose(offered).contains(player)
    }

    pub fn capacity(&self) -> Option<usize> {
        match self {
            ChoiceFunction::Responsive { capacity, .. } => Some(*capacity),
            ChoiceFunction::General { .. } => None,
        }
    }

    pub fn is_responsive(&self) -> bool {
        matches!(self, ChoiceFunction::Responsive { .. })
    }

    /// Structural checks against a market of `n_players`; `arm` labels errors.
    pub fn validate(&self, arm: usize, n_players: usize) -> Result<(), MarketError> {
        match self {
            ChoiceFunction::Responsive { ranking, capacity } => {
                if *capacity == 0 {
                    return Err(MarketError::ZeroCapacity { arm });
                }
                let seen: IndexSet = ranking.iter().copied().filter(|&p| p < n_players).collect();
                if ranking.len() != n_players || seen.len() != n_players {
                    return Err(MarketError::BadRanking { arm, players: n_players });
                }
            }
            ChoiceFunction::General { ranked_subsets } => {
                let everyone = IndexSet::full(n_players);
                for (index, s) in ranked_subsets.iter().enumerate() {
                    if !s.is_subset_of(everyone) {
                        return Err(MarketError::SubsetOutOfRange { arm, index });
                    }
                    if let Some(first) = ranked_subsets[..index].iter().position(|t| t == s) {
                        return Err(MarketError::DuplicateSubset { arm, first, second: index });
                    }
                }
            }
        }
        Ok(())
    }

    /// Exhaustive substitutability test over every offer `P` of `n_players`.
    ///
    /// Returns `Ok(None)` when substitutable, `Ok(Some(witness))` otherwise.
    /// Offers are scanned in increasing bitmask order, so the witness is the
    /// first violation in that order.
    pub fn check_substitutable(
        &self,
        n_players: usize,
    ) -> Result<Option<SubstitutabilityWitness>, MarketError> {
        if n_players > SUBSTITUTABILITY_MAX_PLAYERS {
            return Err(MarketError::EnumerationBound {
                what: "substitutability check",
                limit: SUBSTITUTABILITY_MAX_PLAYERS,
                got: n_players,
            });
        }
        let mut reduced = [IndexSet::EMPTY; SUBSTITUTABILITY_MAX_PLAYERS];
        for bits in 1u64..(1u64 << n_players) {
            let offer = IndexSet::from_bits(bits);
            let chosen = self.choose(offer);
            if chosen.is_empty() || offer.len() < 2 {
                continue;
            }
            for removed in offer {
                reduced[removed] = self.choose(offer.without(removed));
            }
            for kept in chosen {
                for removed in offer.without(kept) {
                    if !reduced[removed].contains(kept) {
                        return Ok(Some(SubstitutabilityWitness { offer, kept, removed }));
                    }
                }
            }
        }
        Ok(None)
    }
}
