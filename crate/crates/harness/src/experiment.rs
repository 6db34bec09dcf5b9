//! Single runs and seeded experiments.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use matchbandit_core::aetda::Aetda;
use matchbandit_core::env::RoundOutcome;
use matchbandit_core::etda::Etda;
use matchbandit_core::event::{Event, EventKind};
use matchbandit_core::oda::{Oda, ProbeReport};
use matchbandit_core::referee::{Referee, RefereeSource};
use matchbandit_core::sim::{simulate, SimOptions};
use matchbandit_core::{MarketSpec, Policy, RunSummary};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, Deviation, ExperimentConfig};
use crate::report::{regret_curves, write_curves};

/// A policy of any of the supported algorithms.
pub enum AnyPolicy<'a> {
    Etda(Etda<'a>),
    Aetda(Aetda<'a>),
    Oda(Oda<'a>),
}

impl<'a> AnyPolicy<'a> {
    /// Checks the algorithm's preconditions and builds its policy.
    pub fn build(spec: &'a MarketSpec, algorithm: Algorithm, deviation: Option<Deviation>) -> Result<Self> {
        if let Some(d) = deviation {
            if !d.policy.applies_to(algorithm) {
                return Err(anyhow!("deviation {:?} does not apply to {}", d.policy, algorithm.name()));
            }
        }
        let player = deviation.map(|d| d.player);
        let policy = deviation.map(|d| d.policy);
        Ok(match algorithm {
            Algorithm::Etda => AnyPolicy::Etda(Etda::new(spec, player.zip(policy.and_then(|p| p.etda())))?),
            Algorithm::AetdaCentral | Algorithm::AetdaDecentral => {
                let mode = algorithm.aetda_mode().expect("aetda variant");
                AnyPolicy::Aetda(Aetda::new(spec, mode, player.zip(policy.and_then(|p| p.aetda())))?)
            }
            Algorithm::Oda => AnyPolicy::Oda(Oda::new(spec, player.zip(policy.and_then(|p| p.oda())))?),
        })
    }

    pub fn as_policy_mut(&mut self) -> &mut dyn Policy {
        match self {
            AnyPolicy::Etda(p) => p,
            AnyPolicy::Aetda(p) => p,
            AnyPolicy::Oda(p) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub deviation: Option<Deviation>,
    pub summary: RunSummary,
    /// The matching the algorithm aims for: player-optimal, or
    /// player-pessimal for ODA.
    pub target_matching: Vec<Option<usize>>,
    pub reached_target: bool,
    pub referee: RefereeSource,
    /// ETDA: whether the DA phase was entered.
    pub entered_da: Option<bool>,
    /// AETDA decentralized: status exchanges performed.
    pub phase_count: Option<u32>,
    /// ODA: synchronized updates that changed the available sets.
    pub sync_updates: Option<u64>,
    pub probe: Option<ProbeReport>,
    pub invariant_violations: Vec<String>,
}

/// A market with its referee, shared by every seed.
pub struct Prepared {
    pub spec: MarketSpec,
    pub referee: Referee,
    pub algorithm: Algorithm,
    pub deviation: Option<Deviation>,
    pub checkpoints: usize,
}

impl Prepared {
    pub fn new(spec: MarketSpec, algorithm: Algorithm, deviation: Option<Deviation>) -> Result<Self> {
        let referee = Referee::new(&spec);
        let prepared = Prepared { spec, referee, algorithm, deviation, checkpoints: 100 };
        // surface gate failures before any seed runs
        AnyPolicy::build(&prepared.spec, algorithm, deviation)?;
        Ok(prepared)
    }

    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        let mut prepared = Prepared::new(config.market()?, config.algorithm, config.deviation)?;
        prepared.checkpoints = config.checkpoints;
        Ok(prepared)
    }

    pub fn with_deviation(&self, deviation: Option<Deviation>) -> Result<Self> {
        AnyPolicy::build(&self.spec, self.algorithm, deviation)?;
        Ok(Prepared {
            spec: self.spec.clone(),
            referee: self.referee.clone(),
            algorithm: self.algorithm,
            deviation,
            checkpoints: self.checkpoints,
        })
    }

    pub fn target_matching(&self) -> &[Option<usize>] {
        if self.algorithm.targets_pessimal() {
            self.referee.arm_proposing.matching.assignment()
        } else {
            self.referee.player_proposing.matching.assignment()
        }
    }

    /// Runs one seed, optionally streaming a per-round CSV trace.
    pub fn run(&self, seed: u64, trace: Option<&mut dyn Write>) -> Result<RunRecord> {
        let mut policy = AnyPolicy::build(&self.spec, self.algorithm, self.deviation)?;
        let honest_oda = self.algorithm == Algorithm::Oda && self.deviation.and_then(|d| d.policy.oda()).is_none();
        let mut violations: Vec<String> =
            self.referee.disagreements.iter().map(|d| format!("referee disagreement: {d:?}")).collect();
        let mut writer = trace.map(|w| TraceWriter::new(w, &self.referee.targets.optimal_arm));
        let mut io_error = None;
        let mut observer = |t: u64, out: &RoundOutcome, events: &[Event], policy: &dyn Policy| {
            if honest_oda && out.rejected().next().is_some() {
                violations.push(format!("round {t}: honest ODA proposal rejected"));
            }
            if let Some(w) = writer.as_mut() {
                if let Err(e) = w.round(t, out, events, policy) {
                    io_error.get_or_insert(e);
                }
            }
        };
        let options = SimOptions { seed, checkpoints: self.checkpoints };
        let summary = simulate(&self.spec, policy.as_policy_mut(), &self.referee.targets, options, &mut observer)?;
        if let Some(e) = io_error {
            return Err(e).context("writing trace");
        }
        if let Some(w) = writer {
            w.finish()?;
        }
        let target = self.target_matching().to_vec();
        let (mut entered_da, mut phase_count, mut sync_updates, mut probe) = (None, None, None, None);
        match &policy {
            AnyPolicy::Etda(p) => entered_da = Some(p.in_da()),
            AnyPolicy::Aetda(p) => {
                phase_count = (self.algorithm == Algorithm::AetdaDecentral).then(|| p.phase_count())
            }
            AnyPolicy::Oda(p) => {
                sync_updates = Some(p.sync_updates());
                probe = self.deviation.and_then(|d| d.policy.oda()).map(|_| p.probe_report());
            }
        }
        if let Some(n) = sync_updates {
            let bound = (self.spec.n_players() * self.spec.n_arms()) as u64;
            if honest_oda && n > bound {
                violations.push(format!("{n} synchronized updates exceed N*K = {bound}"));
            }
        }
        Ok(RunRecord {
            seed,
            deviation: self.deviation,
            reached_target: summary.final_matching == target,
            target_matching: target,
            summary,
            referee: self.referee.source,
            entered_da,
            phase_count,
            sync_updates,
            probe,
            invariant_violations: violations,
        })
    }

    /// Runs every seed in parallel; results come back in seed order.
    pub fn run_seeds(&self, seeds: &[u64]) -> Result<Vec<RunRecord>> {
        seeds.par_iter().map(|&s| self.run(s, None)).collect()
    }
}

/// Per-round CSV rows: `round, player, proposed_arm, matched_arm, reward,
/// ucb_opt, event_flags`. `ucb_opt` is the UCB of the player's optimal
/// stable arm; market-wide events are attached to every row of the round.
pub struct TraceWriter<'w> {
    csv: csv::Writer<&'w mut dyn Write>,
    optimal_arm: Vec<Option<usize>>,
    flags: Vec<Vec<String>>,
}

impl<'w> TraceWriter<'w> {
    pub fn new(out: &'w mut dyn Write, optimal_arm: &[Option<usize>]) -> Self {
        TraceWriter {
            csv: csv::Writer::from_writer(out),
            optimal_arm: optimal_arm.to_vec(),
            flags: vec![Vec::new(); optimal_arm.len()],
        }
    }

    fn round(&mut self, t: u64, out: &RoundOutcome, events: &[Event], policy: &dyn Policy) -> Result<()> {
        if t == 1 {
            self.csv.write_record(["round", "player", "proposed_arm", "matched_arm", "reward", "ucb_opt", "event_flags"])?;
        }
        self.flags.iter_mut().for_each(Vec::clear);
        for e in events {
            match (e.player, e.kind) {
                (Some(i), kind) | (None, kind @ EventKind::SyncRemoved { player: i, .. }) => {
                    self.flags[i].push(kind.to_string())
                }
                (None, kind) => self.flags.iter_mut().for_each(|f| f.push(kind.to_string())),
            }
        }
        let arm = |a: Option<usize>| a.map_or_else(String::new, |j| j.to_string());
        for i in 0..out.proposals.len() {
            let ucb = self.optimal_arm[i].map_or_else(String::new, |j| policy.stats(i).ucb(j).to_string());
            self.csv.write_record([
                t.to_string(),
                i.to_string(),
                arm(out.proposals[i]),
                arm(out.matched[i]),
                out.rewards[i].to_string(),
                ucb,
                self.flags[i].join(";"),
            ])?;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.csv.flush()?;
        Ok(())
    }
}

/// The summary JSON written for every run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunDocument {
    pub config_hash: String,
    pub algorithm: Algorithm,
    pub record: RunRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub files: Vec<String>,
    pub invariant_violations: usize,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("manifest.json"), self)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Runs every seed of a config, writing one summary per seed, optional
/// traces, a regret-curve CSV and a manifest into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<(Vec<RunRecord>, Manifest)> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let prepared = Prepared::from_config(config)?;
    let hash = config.hash();
    let records: Vec<RunRecord> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            if config.trace {
                let path = out_dir.join(format!("trace_{seed}.csv"));
                let mut file = BufWriter::new(File::create(&path)?);
                let record = prepared.run(seed, Some(&mut file))?;
                file.flush()?;
                Ok(record)
            } else {
                prepared.run(seed, None)
            }
        })
        .collect::<Result<_>>()?;
    let mut files = vec!["config.json".to_string()];
    write_json(&out_dir.join("config.json"), config)?;
    for r in &records {
        let name = format!("run_{}.json", r.seed);
        write_json(
            &out_dir.join(&name),
            &RunDocument { config_hash: hash.clone(), algorithm: config.algorithm, record: r.clone() },
        )?;
        files.push(name);
        if config.trace {
            files.push(format!("trace_{}.csv", r.seed));
        }
    }
    write_curves(&out_dir.join("curves.csv"), &regret_curves(&records))?;
    files.push("curves.csv".into());
    let manifest = Manifest {
        command: "run".into(),
        config_hash: hash,
        files,
        invariant_violations: records.iter().map(|r| r.invariant_violations.len()).sum(),
    };
    manifest.write(out_dir)?;
    Ok((records, manifest))
}
