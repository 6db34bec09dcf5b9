//! The ground-truth market: players' preference values, arms' choice
//! functions, horizon and reward model.

use alloc::vec::Vec;

use crate::choice::ChoiceFunction;
use crate::error::MarketError;
use crate::set::{IndexSet, MAX_AGENTS};

/// Distribution of a successful match's reward around its mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RewardModel {
    #[default]
    Bernoulli,
    GaussianUnitVariance,
}

/// Which algorithms a market admits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preconditions {
    /// Every arm is responsive.
    pub responsive: bool,
    /// `N <= C` (responsive only).
    pub aetda: bool,
    /// `N <= K * C_min` (responsive only).
    pub etda: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketSpec {
    n_players: usize,
    n_arms: usize,
    mu: Vec<f64>,
    arms: Vec<ChoiceFunction>,
    horizon: u64,
    reward_model: RewardModel,
}

impl MarketSpec {
    /// Validates and builds a market from per-player preference rows.
    pub fn new(
        mu: Vec<Vec<f64>>,
        arms: Vec<ChoiceFunction>,
        horizon: u64,
        reward_model: RewardModel,
    ) -> Result<Self, MarketError> {
        let n_players = mu.len();
        let n_arms = arms.len();
        if n_players == 0 || n_arms == 0 {
            return Err(MarketError::Empty);
        }
        if n_players > MAX_AGENTS || n_arms > MAX_AGENTS {
            return Err(MarketError::TooLarge { players: n_players, arms: n_arms });
        }
        if horizon == 0 {
            return Err(MarketError::ZeroHorizon);
        }
        for (player, row) in mu.iter().enumerate() {
            if row.len() != n_arms {
                return Err(MarketError::RowLength { player, got: row.len(), expected: n_arms });
            }
            for (arm, &value) in row.iter().enumerate() {
                if !(value > 0.0 && value <= 1.0) {
                    return Err(MarketError::OutOfRange { player, arm, value });
                }
            }
        }
        GapProfile::from_rows(&mu)?;
        for (arm, ch) in arms.iter().enumerate() {
            ch.validate(arm, n_players)?;
        }
        Ok(MarketSpec {
            n_players,
            n_arms,
            mu: mu.into_iter().flatten().collect(),
            arms,
            horizon,
            reward_model,
        })
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn reward_model(&self) -> RewardModel {
        self.reward_model
    }

    pub fn arms(&self) -> &[ChoiceFunction] {
        &self.arms
    }

    pub fn arm(&self, j: usize) -> &ChoiceFunction {
        &self.arms[j]
    }

    pub fn mu(&self, player: usize, arm: usize) -> f64 {
        self.mu[player * self.n_arms + arm]
    }

    /// Value of an assignment; being unmatched is worth 0.
    pub fn value(&self, player: usize, arm: Option<usize>) -> f64 {
        arm.map_or(0.0, |j| self.mu(player, j))
    }

    pub fn mu_row(&self, player: usize) -> &[f64] {
        &self.mu[player * self.n_arms..(player + 1) * self.n_arms]
    }

    pub fn mu_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.mu.chunks(self.n_arms)
    }

    pub fn mu_max(&self) -> f64 {
        self.mu.iter().copied().fold(0.0, f64::max)
    }

    /// Arms sorted from most to least preferred by `player`.
    pub fn preference_order(&self, player: usize) -> Vec<usize> {
        let row = self.mu_row(player);
        let mut order: Vec<usize> = (0..self.n_arms).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
        order
    }

    /// Copy of the market with another horizon.
    pub fn with_horizon(&self, horizon: u64) -> Result<Self, MarketError> {
        if horizon == 0 {
            return Err(MarketError::ZeroHorizon);
        }
        Ok(MarketSpec { horizon, ..self.clone() })
    }

    pub fn with_reward_model(&self, reward_model: RewardModel) -> Self {
        MarketSpec { reward_model, ..self.clone() }
    }

    pub fn all_players(&self) -> IndexSet {
        IndexSet::full(self.n_players)
    }

    pub fn is_responsive(&self) -> bool {
        self.arms.iter().all(ChoiceFunction::is_responsive)
    }

    /// `C`, the sum of capacities, when every arm is responsive.
    pub fn total_capacity(&self) -> Option<usize> {
        self.arms.iter().map(ChoiceFunction::capacity).sum()
    }

    /// `(j_min, C_min)`: the first arm of minimum capacity.
    pub fn min_capacity(&self) -> Option<(usize, usize)> {
        let caps: Option<Vec<usize>> = self.arms.iter().map(ChoiceFunction::capacity).collect();
        let caps = caps?;
        let c_min = *caps.iter().min()?;
        Some((caps.iter().position(|&c| c == c_min)?, c_min))
    }

    pub fn preconditions(&self) -> Preconditions {
        let n = self.n_players;
        Preconditions {
            responsive: self.is_responsive(),
            aetda: self.total_capacity().is_some_and(|c| n <= c),
            etda: self.min_capacity().is_some_and(|(_, c)| n <= self.n_arms * c),
        }
    }

    pub fn gap_profile(&self) -> GapProfile {
        let rows: Vec<Vec<f64>> = self.mu_rows().map(<[f64]>::to_vec).collect();
        GapProfile::from_rows(&rows).expect("validated at construction")
    }
}

/// Pairwise preference gaps `|mu[i][j] - mu[i][j']|` and their minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    n_arms: usize,
    pairwise: Vec<f64>,
    /// Minimum over all players and distinct arm pairs; `+inf` with one arm.
    pub min_gap: f64,
}

impl GapProfile {
    /// Fails when some row repeats a value.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MarketError> {
        let n_arms = rows.first().map_or(0, Vec::len);
        let mut pairwise = Vec::with_capacity(rows.len() * n_arms * n_arms);
        let mut min_gap = f64::INFINITY;
        for (player, row) in rows.iter().enumerate() {
            if row.len() != n_arms {
                return Err(MarketError::RowLength { player, got: row.len(), expected: n_arms });
            }
            for (arm, &a) in row.iter().enumerate() {
                for (other, &b) in row.iter().enumerate() {
                    let gap = libm::fabs(a - b);
                    pairwise.push(gap);
                    if arm != other {
                        if gap == 0.0 {
                            return Err(MarketError::DuplicatePreference {
                                player,
                                arm: arm.min(other),
                                other: arm.max(other),
                            });
                        }
                        min_gap = min_gap.min(gap);
                    }
                }
            }
        }
        Ok(GapProfile { n_arms, pairwise, min_gap })
    }

    pub fn gap(&self, player: usize, arm: usize, other: usize) -> f64 {
        self.pairwise[(player * self.n_arms + arm) * self.n_arms + other]
    }
}

/// Minimum preference gap of a preference matrix.
pub fn min_gap(rows: &[Vec<f64>]) -> Result<GapProfile, MarketError> {
    GapProfile::from_rows(rows)
}
