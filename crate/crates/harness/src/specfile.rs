//! Market spec files.
//!
//! A spec file is a JSON document with fields `players`, `arms`, `mu`
//! (row-major, six decimals), `choice` (one entry per arm, either
//! `{"capacity", "ranking"}` or `{"subsets"}`), `horizon`, `reward_model` and
//! `seed`. Player and arm indices are 0-based. [`SpecFile::to_canonical`]
//! emits a fixed layout, so `parse(to_canonical(x)) == x` and canonical text
//! re-emits byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use matchbandit_core::{ChoiceFunction, IndexSet, MarketSpec, RewardModel};
use serde::{Deserialize, Serialize};

const MICRO: f64 = 1_000_000.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ChoiceEntry {
    Responsive { capacity: usize, ranking: Vec<usize> },
    General { subsets: Vec<Vec<usize>> },
}

/// A market spec with preference values held as integer millionths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecFile {
    pub players: usize,
    pub arms: usize,
    pub mu_micro: Vec<Vec<u32>>,
    pub choice: Vec<ChoiceEntry>,
    pub horizon: u64,
    pub reward_model: RewardModel,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    players: usize,
    arms: usize,
    mu: Vec<Vec<f64>>,
    choice: Vec<ChoiceEntry>,
    horizon: u64,
    #[serde(default)]
    reward_model: RewardModel,
    #[serde(default)]
    seed: u64,
}

/// Rounds a preference value to millionths, rejecting finer values.
pub fn to_micro(value: f64) -> Result<u32> {
    let scaled = value * MICRO;
    let micro = scaled.round();
    ensure!(
        (scaled - micro).abs() < 1e-3 && (0.0..=MICRO).contains(&micro),
        "preference value {value} is not a six-decimal number in [0, 1]"
    );
    Ok(micro as u32)
}

pub fn from_micro(micro: u32) -> f64 {
    micro as f64 / MICRO
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawSpec = serde_json::from_str(text).context("malformed spec file")?;
        ensure!(raw.mu.len() == raw.players, "mu has {} rows for {} players", raw.mu.len(), raw.players);
        ensure!(raw.choice.len() == raw.arms, "choice has {} entries for {} arms", raw.choice.len(), raw.arms);
        let mu_micro = raw
            .mu
            .iter()
            .map(|row| row.iter().map(|&v| to_micro(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let file = SpecFile {
            players: raw.players,
            arms: raw.arms,
            mu_micro,
            choice: raw.choice,
            horizon: raw.horizon,
            reward_model: raw.reward_model,
            seed: raw.seed,
        };
        file.to_market().context("invalid market")?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Captures a market; preference values must already be six-decimal.
    pub fn from_market(spec: &MarketSpec, seed: u64) -> Result<Self> {
        let mu_micro = spec
            .mu_rows()
            .map(|row| row.iter().map(|&v| to_micro(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let choice = spec
            .arms()
            .iter()
            .map(|arm| match arm {
                ChoiceFunction::Responsive { ranking, capacity } => {
                    ChoiceEntry::Responsive { capacity: *capacity, ranking: ranking.clone() }
                }
                ChoiceFunction::General { ranked_subsets } => ChoiceEntry::General {
                    subsets: ranked_subsets.iter().map(|s| s.iter().collect()).collect(),
                },
            })
            .collect();
        Ok(SpecFile {
            players: spec.n_players(),
            arms: spec.n_arms(),
            mu_micro,
            choice,
            horizon: spec.horizon(),
            reward_model: spec.reward_model(),
            seed,
        })
    }

    pub fn to_market(&self) -> Result<MarketSpec> {
        let mu = self.mu_micro.iter().map(|row| row.iter().map(|&m| from_micro(m)).collect()).collect();
        let arms = self
            .choice
            .iter()
            .map(|c| match c {
                ChoiceEntry::Responsive { capacity, ranking } => ChoiceFunction::responsive(ranking.clone(), *capacity),
                ChoiceEntry::General { subsets } => {
                    ChoiceFunction::general(subsets.iter().map(|s| s.iter().copied().collect::<IndexSet>()).collect())
                }
            })
            .collect();
        let spec = MarketSpec::new(mu, arms, self.horizon, self.reward_model)?;
        if spec.n_arms() != self.arms {
            bail!("declared {} arms but found {}", self.arms, spec.n_arms());
        }
        Ok(spec)
    }

    pub fn to_canonical(&self) -> String {
        let list = |v: &[usize]| {
            let items: Vec<String> = v.iter().map(usize::to_string).collect();
            format!("[{}]", items.join(", "))
        };
        let mut out = String::from("{\n");
        writeln!(out, "  \"players\": {},", self.players).unwrap();
        writeln!(out, "  \"arms\": {},", self.arms).unwrap();
        out.push_str("  \"mu\": [\n");
        for (i, row) in self.mu_micro.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|&m| format!("{}.{:06}", m / 1_000_000, m % 1_000_000)).collect();
            let sep = if i + 1 < self.mu_micro.len() { "," } else { "" };
            writeln!(out, "    [{}]{sep}", cells.join(", ")).unwrap();
        }
        out.push_str("  ],\n  \"choice\": [\n");
        for (j, c) in self.choice.iter().enumerate() {
            let body = match c {
                ChoiceEntry::Responsive { capacity, ranking } => {
                    format!("{{\"capacity\": {capacity}, \"ranking\": {}}}", list(ranking))
                }
                ChoiceEntry::General { subsets } => {
                    let s: Vec<String> = subsets.iter().map(|s| list(s)).collect();
                    format!("{{\"subsets\": [{}]}}", s.join(", "))
                }
            };
            let sep = if j + 1 < self.choice.len() { "," } else { "" };
            writeln!(out, "    {body}{sep}").unwrap();
        }
        out.push_str("  ],\n");
        writeln!(out, "  \"horizon\": {},", self.horizon).unwrap();
        let model = serde_json::to_string(&self.reward_model).expect("enum serializes");
        writeln!(out, "  \"reward_model\": {model},").unwrap();
        writeln!(out, "  \"seed\": {}", self.seed).unwrap();
        out.push_str("}\n");
        out
    }
}
