//! Serialized rollouts for the goal-guessing study.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use legible_core::fixtures;
use legible_core::maze::{build_family, build_kernel, random_scenarios, Action, Cell, MazeSpec, DEFAULT_FAILURE_PROBABILITY};
use legible_core::mdp::{rollout, Policy, PolicySource};
use legible_core::{GoalQTables, LegibleProblem};

use crate::config::BenchConfig;
use crate::error::BenchError;

pub const PALETTE: [&str; 10] = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#bfef45", "#9a6324", "#800000",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalEntry {
    pub cell: [usize; 2],
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MazeEntry {
    pub rows: usize,
    pub cols: usize,
    pub walls: Vec<[usize; 2]>,
    pub goals: BTreeMap<String, GoalEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEntry {
    pub t: usize,
    pub cell: [usize; 2],
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub beta: f64,
    pub gamma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub maze: MazeEntry,
    pub start: [usize; 2],
    pub true_goal: String,
    pub policy_type: String,
    pub steps: Vec<StepEntry>,
    pub meta: EpisodeMeta,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemaError {
    #[error("maze is invalid: {0}")]
    Maze(String),
    #[error("policy_type '{0}' is neither legible nor optimal")]
    PolicyType(String),
    #[error("true goal '{0}' is not a goal of the maze")]
    UnknownGoal(String),
    #[error("goal '{label}' has malformed colour '{color}'")]
    Color { label: String, color: String },
    #[error("episode has no steps")]
    NoSteps,
    #[error("step {step}: {reason}")]
    Step { step: usize, reason: String },
}

fn cell_of(pair: [usize; 2]) -> Cell {
    Cell::new(pair[0], pair[1])
}

fn pair_of(cell: Cell) -> [usize; 2] {
    [cell.row, cell.col]
}

fn is_hex_color(text: &str) -> bool {
    text.len() == 7 && text.starts_with('#') && text[1..].chars().all(|c| c.is_ascii_hexdigit())
}

impl EpisodeRecord {
    pub fn maze_spec(&self) -> Result<MazeSpec, SchemaError> {
        let mut goals = BTreeMap::new();
        for (label, entry) in &self.maze.goals {
            let mut chars = label.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(SchemaError::Maze(format!("goal label '{label}' is not a single letter")));
            };
            if !is_hex_color(&entry.color) {
                return Err(SchemaError::Color {
                    label: label.clone(),
                    color: entry.color.clone(),
                });
            }
            goals.insert(c, cell_of(entry.cell));
        }
        let spec = MazeSpec {
            rows: self.maze.rows,
            cols: self.maze.cols,
            walls: self.maze.walls.iter().map(|&w| cell_of(w)).collect::<BTreeSet<_>>(),
            goals,
            failure_probability: DEFAULT_FAILURE_PROBABILITY,
            default_start: None,
        };
        spec.validate().map_err(|e| SchemaError::Maze(e.to_string()))?;
        Ok(spec)
    }

    /// Checks the record against its own maze: known labels and actions, a
    /// path starting at `start`, and positive probability for every move.
    pub fn validate(&self) -> Result<(), SchemaError> {
        let spec = self.maze_spec()?;
        if self.policy_type != "legible" && self.policy_type != "optimal" {
            return Err(SchemaError::PolicyType(self.policy_type.clone()));
        }
        if !self.maze.goals.contains_key(&self.true_goal) {
            return Err(SchemaError::UnknownGoal(self.true_goal.clone()));
        }
        if self.steps.is_empty() {
            return Err(SchemaError::NoSteps);
        }
        let kernel = build_kernel(&spec).map_err(|e| SchemaError::Maze(e.to_string()))?;
        let step_err = |step: usize, reason: String| SchemaError::Step { step, reason };
        let mut previous: Option<(usize, usize)> = None;
        for (i, step) in self.steps.iter().enumerate() {
            if step.t != i {
                return Err(step_err(i, format!("t = {} out of sequence", step.t)));
            }
            let cell = cell_of(step.cell);
            if !spec.in_bounds(cell) {
                return Err(step_err(i, format!("cell {:?} leaves the {}x{} grid", step.cell, spec.rows, spec.cols)));
            }
            if spec.walls.contains(&cell) {
                return Err(step_err(i, format!("cell {:?} is a wall", step.cell)));
            }
            let action = Action::from_name(&step.action)
                .ok_or_else(|| step_err(i, format!("unknown action '{}'", step.action)))?;
            let state = spec.state_of(cell);
            match previous {
                None if step.cell != self.start => {
                    return Err(step_err(i, "first step is not at the start cell".into()));
                }
                Some((prev_state, prev_action)) if kernel.probability(prev_state, prev_action, state) <= 0.0 => {
                    return Err(step_err(i, "unreachable from the previous step".into()));
                }
                _ => {}
            }
            previous = Some((state, action.index()));
        }
        Ok(())
    }
}

pub fn load_episode(path: &Path) -> Result<EpisodeRecord, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    let record: EpisodeRecord = serde_json::from_str(&text).map_err(|e| BenchError::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    record.validate()?;
    Ok(record)
}

/// All `*.json` episodes in `dir`, sorted by file name.
pub fn load_pool(dir: &Path) -> Result<Vec<(String, EpisodeRecord)>, BenchError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| BenchError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Ok((id, load_episode(&p)?))
        })
        .collect()
}

fn maze_entry(spec: &MazeSpec) -> MazeEntry {
    MazeEntry {
        rows: spec.rows,
        cols: spec.cols,
        walls: spec.walls.iter().map(|&c| pair_of(c)).collect(),
        goals: spec
            .goals
            .iter()
            .enumerate()
            .map(|(i, (label, &cell))| {
                (
                    label.to_string(),
                    GoalEntry {
                        cell: pair_of(cell),
                        color: PALETTE[i % PALETTE.len()].to_string(),
                    },
                )
            })
            .collect(),
    }
}

/// Writes `pool_size` episodes per condition under `out_dir/legible` and
/// `out_dir/optimal`. Both conditions share the same (start, goal) draws.
pub fn export_episodes(
    maze: &str,
    pool_size: usize,
    config: &BenchConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, BenchError> {
    config.validate()?;
    let spec = fixtures::load(maze)?;
    let family = build_family(&spec, config.gamma, 1.0, 0.0)?;
    let q = GoalQTables::solve(&family, config.solver_tolerance, legible_core::mdp::DEFAULT_MAX_ITERATIONS)?;
    let mut legible: Vec<Policy> = Vec::with_capacity(family.num_goals());
    for g in 0..family.num_goals() {
        legible.push(LegibleProblem::new(&family, &q, g, config.beta)?.solve(config.solver_tolerance)?.1);
    }
    let scenarios = random_scenarios(&spec, pool_size.max(1), config.seed)?;
    let horizon = 8 * (spec.rows + spec.cols);
    let entry = maze_entry(&spec);
    let mut written = Vec::new();
    for source in [PolicySource::Legible, PolicySource::Optimal] {
        let dir = out_dir.join(source.as_str());
        fs::create_dir_all(&dir).map_err(|e| BenchError::io(&dir, e))?;
        for (i, &(start, label)) in scenarios.iter().take(pool_size).enumerate() {
            let goal = spec.goal_index(label).expect("sampled goal exists");
            let optimal = q.optimal_policy(goal);
            let policy = match source {
                PolicySource::Legible => &legible[goal],
                _ => &optimal,
            };
            let seed = config.sample_seed(0, i);
            let traj = rollout(family.mdp(goal), policy, spec.state_of(start), horizon, seed);
            let mut steps: Vec<StepEntry> = traj
                .steps
                .iter()
                .map(|s| StepEntry {
                    t: s.t,
                    cell: pair_of(spec.cell_of(s.state)),
                    action: Action::from_index(s.action).expect("valid action").name().to_string(),
                })
                .collect();
            steps.push(StepEntry {
                t: steps.len(),
                cell: pair_of(spec.cell_of(traj.end_state)),
                action: Action::Noop.name().to_string(),
            });
            let record = EpisodeRecord {
                maze: entry.clone(),
                start: pair_of(start),
                true_goal: label.to_string(),
                policy_type: source.as_str().to_string(),
                steps,
                meta: EpisodeMeta {
                    beta: config.beta,
                    gamma: config.gamma,
                    seed,
                },
            };
            record.validate()?;
            let path = dir.join(format!("episode_{i:03}.json"));
            let json = serde_json::to_string_pretty(&record).map_err(|e| BenchError::Json {
                path: path.clone(),
                source: e,
            })?;
            fs::write(&path, json).map_err(|e| BenchError::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}
