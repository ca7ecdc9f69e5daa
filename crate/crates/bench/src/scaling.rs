//! Goal-count and state-count scaling benchmarks: PoL-MDP against the
//! L-MDP baseline on seeded (start, goal) samples.

use std::io::Write;
use std::time::Instant;

use legible_core::fixtures;
use legible_core::legible::LegibleError;
use legible_core::lmdp::{DistanceKind, LmdpError, LmdpPlanner, ObserverModel, UctConfig};
use legible_core::maze::{build_family, random_scenarios, Cell, GoalMdpFamily, MazeSpec};
use legible_core::mdp::{self, MdpError, PolicySource, Trajectory, DEFAULT_MAX_ITERATIONS};
use legible_core::metrics::{miura_legibility, polmdp_legibility};
use legible_core::{GoalQTables, LegibleProblem};

use crate::config::BenchConfig;
use crate::error::BenchError;
use crate::records::{format_cell, ResultRow, RowSink, GOAL_SCALING, LMDP, POLMDP, STATE_SCALING};

/// One benchmark configuration: a named maze.
#[derive(Debug, Clone)]
pub struct MazeConfig {
    pub name: String,
    pub spec: MazeSpec,
}

pub fn state_scaling_configs(names: &[&str]) -> Result<Vec<MazeConfig>, BenchError> {
    names
        .iter()
        .map(|&name| {
            Ok(MazeConfig {
                name: name.to_string(),
                spec: fixtures::load(name)?,
            })
        })
        .collect()
}

pub fn goal_scaling_configs(counts: impl IntoIterator<Item = usize>) -> Result<Vec<MazeConfig>, BenchError> {
    counts
        .into_iter()
        .map(|k| {
            Ok(MazeConfig {
                name: fixtures::GOAL_SCALING.to_string(),
                spec: fixtures::goal_scaling(k)?,
            })
        })
        .collect()
}

/// Step cap for every rollout in the scaling benchmarks.
pub fn episode_horizon(spec: &MazeSpec) -> usize {
    4 * (spec.rows + spec.cols)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Scores {
    polmdp: f64,
    miura_kl: f64,
    miura_euclid: f64,
}

fn score(
    trajectory: &Trajectory,
    family: &GoalMdpFamily,
    q: &GoalQTables,
    goal: usize,
    config: &BenchConfig,
) -> Result<Option<Scores>, BenchError> {
    if trajectory.is_empty() {
        return Ok(None);
    }
    let problem = LegibleProblem::new(family, q, goal, config.beta)?;
    let observer = ObserverModel::new(family, q, config.eta);
    Ok(Some(Scores {
        polmdp: polmdp_legibility(trajectory, &problem)?,
        miura_kl: miura_legibility(trajectory, &observer, goal, DistanceKind::Kl)?,
        miura_euclid: miura_legibility(trajectory, &observer, goal, DistanceKind::Euclidean)?,
    }))
}

struct Outcome {
    success: bool,
    seconds: f64,
    scores: Option<Scores>,
    note: String,
}

fn is_timeout(err: &LegibleError) -> bool {
    matches!(err, LegibleError::Solver(MdpError::Timeout { .. }))
}

fn run_polmdp(
    family: &GoalMdpFamily,
    start: usize,
    goal: usize,
    seed: u64,
    config: &BenchConfig,
) -> Result<Outcome, BenchError> {
    let started = Instant::now();
    let deadline = started + config.timeout;
    let tol = config.solver_tolerance;
    let solved = GoalQTables::solve_until(family, tol, DEFAULT_MAX_ITERATIONS, Some(deadline))
        .map_err(LegibleError::from)
        .and_then(|q| {
            let problem = LegibleProblem::new(family, &q, goal, config.beta)?;
            let (_, policy) = problem.solve_until(tol, DEFAULT_MAX_ITERATIONS, Some(deadline))?;
            Ok((q, policy))
        });
    let seconds = started.elapsed().as_secs_f64();
    let (q, policy) = match solved {
        Ok(v) => v,
        Err(e) if is_timeout(&e) => {
            return Ok(Outcome {
                success: false,
                seconds,
                scores: None,
                note: "outcome=timeout".into(),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let horizon = episode_horizon(&family.spec);
    let trajectory =
        mdp::rollout(family.mdp(goal), &policy, start, horizon, seed).tagged(goal, PolicySource::Legible);
    let reached = trajectory.end_state == family.goal_state(goal);
    Ok(Outcome {
        success: true,
        seconds,
        scores: score(&trajectory, family, &q, goal, config)?,
        note: format!("outcome=solved;reached={reached}"),
    })
}

fn run_lmdp(
    family: &GoalMdpFamily,
    start: usize,
    goal: usize,
    seed: u64,
    config: &BenchConfig,
) -> Result<Outcome, BenchError> {
    let started = Instant::now();
    let deadline = started + config.timeout;
    let timed_out = |seconds: f64| Outcome {
        success: false,
        seconds,
        scores: None,
        note: "outcome=timeout".into(),
    };
    let q = match GoalQTables::solve_until(family, config.solver_tolerance, DEFAULT_MAX_ITERATIONS, Some(deadline)) {
        Ok(q) => q,
        Err(MdpError::Timeout { .. }) => return Ok(timed_out(started.elapsed().as_secs_f64())),
        Err(e) => return Err(e.into()),
    };
    let observer = ObserverModel::new(family, &q, config.eta);
    let uct = UctConfig {
        rng_seed: seed,
        episode_budget: Some(deadline.saturating_duration_since(Instant::now())),
        ..config.uct.clone()
    };
    let planner = LmdpPlanner::new(family, observer, uct)?;
    let episode = match planner.rollout(start, goal, episode_horizon(&family.spec)) {
        Ok(ep) => ep,
        Err(LmdpError::Timeout { .. }) => return Ok(timed_out(started.elapsed().as_secs_f64())),
        Err(e) => return Err(e.into()),
    };
    let seconds = started.elapsed().as_secs_f64();
    let reached = episode.reached(family.goal_state(goal));
    Ok(Outcome {
        success: reached,
        seconds,
        scores: score(&episode.trajectory, family, &q, goal, config)?,
        note: if reached { "outcome=reached" } else { "outcome=horizon" }.into(),
    })
}

/// Runs both frameworks on `config.samples` seeded (start, goal) pairs of
/// every maze, writing one row per (framework, maze, sample) as it goes.
pub fn run_scaling<W: Write>(
    experiment: &str,
    mazes: &[MazeConfig],
    config: &BenchConfig,
    sink: &mut RowSink<W>,
) -> Result<Vec<ResultRow>, BenchError> {
    config.validate()?;
    let mut rows = Vec::new();
    for (ci, maze) in mazes.iter().enumerate() {
        let family = build_family(&maze.spec, config.gamma, 1.0, 0.0)?;
        let scenarios = random_scenarios(&maze.spec, config.samples, config.sample_seed(ci, usize::MAX))?;
        for (sample_id, &(start_cell, label)) in scenarios.iter().enumerate() {
            let seed = config.sample_seed(ci, sample_id);
            let start = maze.spec.state_of(start_cell);
            let goal = maze.spec.goal_index(label).expect("sampled goal exists");
            for framework in [POLMDP, LMDP] {
                let outcome = if framework == POLMDP {
                    run_polmdp(&family, start, goal, seed, config)?
                } else {
                    run_lmdp(&family, start, goal, seed, config)?
                };
                let row = make_row(experiment, framework, maze, sample_id, start_cell, label, seed, config, outcome);
                sink.write(&row)?;
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn make_row(
    experiment: &str,
    framework: &str,
    maze: &MazeConfig,
    sample_id: usize,
    start: Cell,
    goal: char,
    seed: u64,
    config: &BenchConfig,
    outcome: Outcome,
) -> ResultRow {
    ResultRow {
        experiment: experiment.to_string(),
        framework: framework.to_string(),
        maze: maze.name.clone(),
        goals: maze.spec.num_goals(),
        states: maze.spec.num_states(),
        sample_id,
        start: format_cell(start),
        goal: goal.to_string(),
        success: outcome.success,
        seconds: outcome.seconds,
        leg_polmdp: outcome.scores.map(|s| s.polmdp),
        leg_miura_kl: outcome.scores.map(|s| s.miura_kl),
        leg_miura_euclid: outcome.scores.map(|s| s.miura_euclid),
        seed,
        beta: config.beta,
        gamma: config.gamma,
        eta: config.eta,
        notes: format!(
            "{};tol={};horizon={};{}",
            outcome.note,
            config.solver_tolerance,
            episode_horizon(&maze.spec),
            config.uct.fingerprint()
        ),
    }
}

pub fn run_state_scaling<W: Write>(
    names: &[&str],
    config: &BenchConfig,
    sink: &mut RowSink<W>,
) -> Result<Vec<ResultRow>, BenchError> {
    run_scaling(STATE_SCALING, &state_scaling_configs(names)?, config, sink)
}

pub fn run_goal_scaling<W: Write>(
    counts: impl IntoIterator<Item = usize>,
    config: &BenchConfig,
    sink: &mut RowSink<W>,
) -> Result<Vec<ResultRow>, BenchError> {
    run_scaling(GOAL_SCALING, &goal_scaling_configs(counts)?, config, sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    #[test]
    fn forced_timeout_fails_every_row() {
        let config = BenchConfig {
            timeout: Duration::from_nanos(1),
            samples: 2,
            ..BenchConfig::desk()
        };
        let mut sink = RowSink::new(Vec::new()).unwrap();
        let rows = run_state_scaling(&["states_10x10"], &config, &mut sink).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| !r.success && r.leg_polmdp.is_none()));
        assert!(rows.iter().all(|r| r.notes.starts_with("outcome=timeout")));
    }

    #[test]
    fn rows_carry_the_fingerprint() {
        let config = BenchConfig {
            samples: 1,
            ..BenchConfig::desk()
        };
        let mut sink = RowSink::new(Vec::new()).unwrap();
        let rows = run_state_scaling(&["miura_5x8"], &config, &mut sink).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].framework, POLMDP);
        assert_eq!(rows[1].framework, LMDP);
        for row in &rows {
            assert_eq!((row.states, row.goals), (40, 3));
            assert_eq!(row.seed, config.sample_seed(0, 0));
            assert!(row.notes.contains(&config.uct.fingerprint()));
        }
        assert!(rows[0].success);
        let written = crate::records::read_rows(sink.into_inner().unwrap().as_slice()).unwrap();
        assert_eq!(written, rows);
    }
}
