use core::fmt;

/// Protocol events recorded alongside a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EventKind {
    /// ETDA index assigned during the first N rounds.
    IndexAssigned(u32),
    /// ETDA: the player computed a separated ranking at a communication round.
    Resolved,
    /// ETDA: all players observed fully matched and entered the DA phase.
    EnterDa,
    /// ETDA: the DA pointer ran past the last arm.
    DaExhausted,
    /// AETDA detection removed the arm from the available set.
    ArmRemoved(usize),
    /// AETDA exploration flag changed to the given value.
    Exploring(bool),
    /// AETDA reported optimum changed (`None` is the `-1` report).
    OptReported(Option<usize>),
    /// AETDA decentralized phase boundary (phase number).
    PhaseBoundary(u32),
    /// ODA pruned a dominated arm from the plausible set.
    Pruned(usize),
    /// ODA synchronized update removed `player` from arm's available set.
    SyncRemoved { player: usize, arm: usize },
    /// ODA deviant probed an arm outside its plausible set.
    Probe(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Event {
    /// Owning player; `None` for market-wide events.
    pub player: Option<usize>,
    pub kind: EventKind,
}

impl Event {
    pub fn player(player: usize, kind: EventKind) -> Self {
        Event { player: Some(player), kind }
    }

    pub fn global(kind: EventKind) -> Self {
        Event { player: None, kind }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::IndexAssigned(i) => write!(f, "index={i}"),
            EventKind::Resolved => f.write_str("resolved"),
            EventKind::EnterDa => f.write_str("enter_da"),
            EventKind::DaExhausted => f.write_str("da_exhausted"),
            EventKind::ArmRemoved(j) => write!(f, "remove={j}"),
            EventKind::Exploring(e) => write!(f, "explore={e}"),
            EventKind::OptReported(Some(j)) => write!(f, "opt={j}"),
            EventKind::OptReported(None) => f.write_str("opt=-1"),
            EventKind::PhaseBoundary(p) => write!(f, "phase={p}"),
            EventKind::Pruned(j) => write!(f, "prune={j}"),
            EventKind::SyncRemoved { player, arm } => write!(f, "sync={player}@{arm}"),
            EventKind::Probe(j) => write!(f, "probe={j}"),
        }
    }
}
