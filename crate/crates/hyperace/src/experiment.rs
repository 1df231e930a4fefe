//! Experiment matrices: rows of (track, ego approach, local planner,
//! opponent) raced over seeded runs.
//!
//! ```toml
//! format_version = 1
//! seed = 100
//!
//! [[rows]]
//! track = "porto-like"
//! ego = "mpc_hype"
//! planner = "pp"
//! opponent = "pp"
//! runs = 30
//! duration = 60.0
//! ```
//!
//! Run `k` of every row uses seed `seed + k`. The ego starts at station 0
//! and opponent `i` at station `i * gap`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use hyperace_core::control::VehicleState;
use hyperace_core::sim::{aggregate_safety, run_episode, ConfigError, EpisodeResult, SimConfig, CONTROLLER_IDS, PLANNER_IDS};
use hyperace_core::world::{AgentSpec, Scenario, Track};

use crate::scenario::ConfigFile;
use crate::{read_file, Error, Result, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default = "one")]
    pub format_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub config: ConfigFile,
    pub rows: Vec<RowSpec>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSpec {
    pub track: String,
    pub ego: String,
    #[serde(default = "pp")]
    pub planner: String,
    /// Controller id of the opponents, or `none`.
    pub opponent: String,
    #[serde(default = "one_usize")]
    pub opponents: usize,
    #[serde(default = "thirty")]
    pub runs: usize,
    #[serde(default = "sixty")]
    pub duration: f64,
    /// Spacing of the starting stations (m).
    #[serde(default = "three")]
    pub gap: f64,
}

fn pp() -> String {
    "pp".into()
}

fn one_usize() -> usize {
    1
}

fn thirty() -> usize {
    30
}

fn sixty() -> f64 {
    60.0
}

fn three() -> f64 {
    3.0
}

fn agent(track: &Track, s: f64, controller: &str, planner: &str) -> AgentSpec {
    let t = track.samples()[track.index_at(s)].tangent;
    let p = track.point_at(s);
    AgentSpec {
        initial: VehicleState::new(p.x, p.y, t.y.atan2(t.x), 0.0),
        controller: controller.into(),
        planner: planner.into(),
        length: 0.5,
        width: 0.3,
    }
}

fn check_id(id: &str, known: &[&str], err: fn(String) -> ConfigError) -> Result<()> {
    if known.contains(&id) {
        Ok(())
    } else {
        Err(err(id.into()).into())
    }
}

impl RowSpec {
    pub fn validate(&self) -> Result<()> {
        check_id(&self.ego, &CONTROLLER_IDS, ConfigError::UnknownController)?;
        check_id(&self.planner, &PLANNER_IDS, ConfigError::UnknownPlanner)?;
        if self.opponent != "none" {
            check_id(&self.opponent, &CONTROLLER_IDS, ConfigError::UnknownController)?;
        }
        if Track::builtin(&self.track).is_none() {
            return Err(Error::Parse(format!("unknown builtin track `{}`", self.track)));
        }
        Ok(())
    }

    pub fn scenario(&self, seed: u64) -> Result<Scenario> {
        self.validate()?;
        let track = Track::builtin(&self.track).expect("checked above");
        let mut agents = vec![agent(&track, 0.0, &self.ego, &self.planner)];
        if self.opponent != "none" {
            for i in 1..=self.opponents {
                agents.push(agent(&track, i as f64 * self.gap, &self.opponent, "pp"));
            }
        }
        let scenario = Scenario {
            track,
            static_obstacles: Vec::new(),
            agents,
            seed,
            duration: self.duration,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub format_version: u32,
    pub seed: u64,
    pub track: String,
    pub approach: String,
    pub local_planner: String,
    pub opponent: String,
    pub runs: usize,
    pub ego_efficiency: f64,
    pub opponent_efficiency: f64,
    pub race_duration: f64,
    pub safety: f64,
}

/// Per-episode line of a scenario race.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub format_version: u32,
    pub seed: u64,
    pub elapsed: f64,
    pub ego_efficiency: f64,
    pub opponent_efficiency: f64,
    pub race_duration: f64,
    pub collided: bool,
}

fn opponent_efficiency(r: &EpisodeResult) -> f64 {
    let n = r.distance.len();
    if n < 2 {
        0.0
    } else {
        (1..n).map(|i| r.efficiency(i)).sum::<f64>() / (n - 1) as f64
    }
}

impl EpisodeRow {
    pub fn from_result(r: &EpisodeResult) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            seed: r.seed,
            elapsed: r.elapsed,
            ego_efficiency: r.efficiency(0),
            opponent_efficiency: opponent_efficiency(r),
            race_duration: r.race_duration,
            collided: r.collision().is_some(),
        }
    }
}

pub fn summarize(row: &RowSpec, seed: u64, results: &[EpisodeResult]) -> SummaryRow {
    let n = results.len().max(1) as f64;
    SummaryRow {
        format_version: FORMAT_VERSION,
        seed,
        track: row.track.clone(),
        approach: row.ego.clone(),
        local_planner: row.planner.clone(),
        opponent: row.opponent.clone(),
        runs: results.len(),
        ego_efficiency: results.iter().map(|r| r.efficiency(0)).sum::<f64>() / n,
        opponent_efficiency: results.iter().map(opponent_efficiency).sum::<f64>() / n,
        race_duration: results.iter().map(|r| r.race_duration).sum::<f64>() / n,
        safety: aggregate_safety(results),
    }
}

pub fn parse_experiment(text: &str) -> Result<ExperimentFile> {
    let file: ExperimentFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported format_version {}", file.format_version)));
    }
    for r in &file.rows {
        r.validate()?;
    }
    Ok(file)
}

pub fn load_experiment(path: &Path) -> Result<ExperimentFile> {
    parse_experiment(&read_file(path)?)
}

/// Runs `seeds` episodes of one scenario, in seed order.
pub fn run_scenario(scenario: &Scenario, cfg: &SimConfig, seeds: &[u64], serial: bool) -> Result<Vec<EpisodeResult>> {
    cfg.validate()?;
    let run = |&s: &u64| run_episode(scenario, cfg, s);
    let out: std::result::Result<Vec<_>, _> = if serial {
        seeds.iter().map(run).collect()
    } else {
        seeds.par_iter().map(run).collect()
    };
    Ok(out?)
}

/// Runs every (row, seed) cell and summarizes each row.
pub fn run_matrix(exp: &ExperimentFile, base: &SimConfig, serial: bool) -> Result<Vec<SummaryRow>> {
    let mut cfg = base.clone();
    exp.config.apply(&mut cfg)?;
    let scenarios = exp
        .rows
        .iter()
        .map(|r| r.scenario(exp.seed))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, u64)> = exp
        .rows
        .iter()
        .enumerate()
        .flat_map(|(i, r)| (0..r.runs as u64).map(move |k| (i, exp.seed + k)))
        .collect();
    let run = |&(i, s): &(usize, u64)| run_episode(&scenarios[i], &cfg, s);
    let results: std::result::Result<Vec<EpisodeResult>, ConfigError> = if serial {
        cells.iter().map(run).collect()
    } else {
        cells.par_iter().map(run).collect()
    };
    let results = results?;
    let mut out = Vec::new();
    let mut at = 0;
    for r in &exp.rows {
        out.push(summarize(r, exp.seed, &results[at..at + r.runs]));
        at += r.runs;
    }
    Ok(out)
}
