//! Experiment configuration files.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use matchbandit_core::aetda::{AetdaDeviation, AetdaMode};
use matchbandit_core::etda::EtdaDeviation;
use matchbandit_core::oda::BeyondSetProbe;
use matchbandit_core::MarketSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::generator::{GeneratorParams, LadderParams};
use crate::specfile::SpecFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Etda,
    AetdaCentral,
    AetdaDecentral,
    Oda,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Etda, Algorithm::AetdaCentral, Algorithm::AetdaDecentral, Algorithm::Oda];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Etda => "etda",
            Algorithm::AetdaCentral => "aetda_central",
            Algorithm::AetdaDecentral => "aetda_decentral",
            Algorithm::Oda => "oda",
        }
    }

    pub fn aetda_mode(self) -> Option<AetdaMode> {
        match self {
            Algorithm::AetdaCentral => Some(AetdaMode::Centralized),
            Algorithm::AetdaDecentral => Some(AetdaMode::Decentralized),
            _ => None,
        }
    }

    /// ODA targets the player-pessimal matching, the others the optimal one.
    pub fn targets_pessimal(self) -> bool {
        self == Algorithm::Oda
    }
}

impl FromStr for Algorithm {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| anyhow!("unknown algorithm {s:?} (expected etda, aetda_central, aetda_decentral or oda)"))
    }
}

/// What the deviant player does instead of following the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum DeviationPolicy {
    Honest,
    /// AETDA: always report `-1`.
    AlwaysMinusOne,
    /// AETDA: claim this arm while it is available.
    FixedWrongArm { arm: usize },
    /// ETDA: never report a resolved ranking.
    NeverResolve,
    /// ODA: propose this arm every `period` rounds while outside the plausible set.
    BeyondSet { arm: usize, period: u64 },
}

impl DeviationPolicy {
    pub fn applies_to(self, algorithm: Algorithm) -> bool {
        match self {
            DeviationPolicy::Honest => true,
            DeviationPolicy::AlwaysMinusOne | DeviationPolicy::FixedWrongArm { .. } => algorithm.aetda_mode().is_some(),
            DeviationPolicy::NeverResolve => algorithm == Algorithm::Etda,
            DeviationPolicy::BeyondSet { .. } => algorithm == Algorithm::Oda,
        }
    }

    pub fn etda(self) -> Option<EtdaDeviation> {
        matches!(self, DeviationPolicy::NeverResolve).then_some(EtdaDeviation::NeverResolve)
    }

    pub fn aetda(self) -> Option<AetdaDeviation> {
        match self {
            DeviationPolicy::AlwaysMinusOne => Some(AetdaDeviation::AlwaysMinusOne),
            DeviationPolicy::FixedWrongArm { arm } => Some(AetdaDeviation::FixedWrongArm(arm)),
            _ => None,
        }
    }

    pub fn oda(self) -> Option<BeyondSetProbe> {
        match self {
            DeviationPolicy::BeyondSet { arm, period } => Some(BeyondSetProbe { arm, period }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deviation {
    pub player: usize,
    #[serde(flatten)]
    pub policy: DeviationPolicy,
}

impl FromStr for Deviation {
    type Err = anyhow::Error;

    /// `player:policy` with policy one of `honest`, `minus-one`,
    /// `wrong-arm=J`, `never-resolve`, `probe=J` or `probe=J/PERIOD`.
    fn from_str(s: &str) -> Result<Self> {
        let (player, policy) = s.split_once(':').ok_or_else(|| anyhow!("expected player:policy, got {s:?}"))?;
        let player = player.parse().with_context(|| format!("bad deviant player {player:?}"))?;
        let (name, arg) = match policy.split_once('=') {
            Some((n, a)) => (n, Some(a)),
            None => (policy, None),
        };
        let policy = match (name, arg) {
            ("honest", None) => DeviationPolicy::Honest,
            ("minus-one", None) => DeviationPolicy::AlwaysMinusOne,
            ("never-resolve", None) => DeviationPolicy::NeverResolve,
            ("wrong-arm", Some(a)) => DeviationPolicy::FixedWrongArm { arm: a.parse()? },
            ("probe", Some(a)) => match a.split_once('/') {
                Some((arm, period)) => DeviationPolicy::BeyondSet { arm: arm.parse()?, period: period.parse()? },
                None => DeviationPolicy::BeyondSet { arm: a.parse()?, period: 1 },
            },
            _ => bail!("unknown deviation policy {policy:?}"),
        };
        Ok(Deviation { player, policy })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarketSource {
    /// Path to a spec file, relative to the config file.
    File(PathBuf),
    Generate(GeneratorParams),
    Ladder(LadderParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub market: MarketSource,
    pub algorithm: Algorithm,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub deviation: Option<Deviation>,
    /// Overrides the market's horizon.
    #[serde(default)]
    pub horizon: Option<u64>,
    /// Regret checkpoints per run.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    /// Write a per-round CSV trace for each seed.
    #[serde(default)]
    pub trace: bool,
}

fn default_seeds() -> Vec<u64> {
    (0..30).collect()
}

fn default_checkpoints() -> usize {
    100
}

impl ExperimentConfig {
    pub fn new(market: MarketSource, algorithm: Algorithm) -> Self {
        ExperimentConfig {
            market,
            algorithm,
            seeds: default_seeds(),
            deviation: None,
            horizon: None,
            checkpoints: default_checkpoints(),
            trace: false,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let MarketSource::File(p) = &mut config.market {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    /// Builds the market this config runs on.
    pub fn market(&self) -> Result<MarketSpec> {
        let spec = match &self.market {
            MarketSource::File(p) => SpecFile::load(p)?.to_market()?,
            MarketSource::Generate(g) => g.generate()?,
            MarketSource::Ladder(l) => l.generate()?,
        };
        Ok(match self.horizon {
            Some(h) => spec.with_horizon(h)?,
            None => spec,
        })
    }

    /// Hex SHA-256 of the config's JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
