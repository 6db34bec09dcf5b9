use thiserror::Error;

/// Rejections raised while building or querying a market.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    #[error("market needs at least one player and one arm")]
    Empty,
    #[error("at most {max} players and {max} arms are supported, got {players} players and {arms} arms", max = crate::set::MAX_AGENTS)]
    TooLarge { players: usize, arms: usize },
    #[error("preference row {player} has {got} entries, expected {expected}")]
    RowLength { player: usize, got: usize, expected: usize },
    #[error("preference value mu[{player}][{arm}] = {value} is outside (0, 1]")]
    OutOfRange { player: usize, arm: usize, value: f64 },
    #[error("player {player} values arms {arm} and {other} equally")]
    DuplicatePreference { player: usize, arm: usize, other: usize },
    #[error("expected {expected} choice functions, got {got}")]
    ArmCount { got: usize, expected: usize },
    #[error("arm {arm}: ranking is not a permutation of the {players} players")]
    BadRanking { arm: usize, players: usize },
    #[error("arm {arm}: capacity must be at least 1")]
    ZeroCapacity { arm: usize },
    #[error("arm {arm}: ranked subset {index} names a player outside the market")]
    SubsetOutOfRange { arm: usize, index: usize },
    #[error("arm {arm}: ranked subsets {first} and {second} are identical")]
    DuplicateSubset { arm: usize, first: usize, second: usize },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("{what} needs at most {limit} players (got {got})")]
    EnumerationBound { what: &'static str, limit: usize, got: usize },
    #[error("{what} needs at most {limit} arms (got {got})")]
    ArmEnumerationBound { what: &'static str, limit: usize, got: usize },
    #[error("no stable matching exists")]
    NoStableMatching,
}

/// An algorithm's precondition does not hold for a market.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GateError {
    #[error("{algorithm} requires responsive arm preferences")]
    NotResponsive { algorithm: &'static str },
    #[error("ETDA requires N <= K * C_min (N = {players}, K = {arms}, C_min = {min_capacity})")]
    EtdaCapacity { players: usize, arms: usize, min_capacity: usize },
    #[error("AETDA requires N <= C (N = {players}, C = {total_capacity})")]
    AetdaCapacity { players: usize, total_capacity: usize },
    #[error("ODA requires substitutable choice functions; arm {arm} fails with offer {offer:?}, player {kept} dropped when {removed} leaves")]
    NotSubstitutable { arm: usize, offer: crate::IndexSet, kept: usize, removed: usize },
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("deviant player {player} is outside the market")]
    BadDeviant { player: usize },
    #[error("deviation arm {arm} is outside the market")]
    BadDeviationArm { arm: usize },
}
