//! Trajectory-level legibility scores. Both are higher-is-better.

use thiserror::Error;

use crate::legible::{LegibleError, LegibleProblem};
use crate::lmdp::{belief_distance_capped, BeliefState, DistanceKind, LmdpError, ObserverModel, DEFAULT_KL_CAP};
use crate::mdp::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("trajectory has no steps")]
    EmptyTrajectory,
    #[error("step {index} references state {state} / action {action} outside the model")]
    InvalidStep { index: usize, state: usize, action: usize },
    #[error(transparent)]
    Belief(#[from] LmdpError),
    #[error(transparent)]
    Problem(#[from] LegibleError),
}

fn check_steps(trajectory: &Trajectory, num_states: usize, num_actions: usize) -> Result<(), MetricsError> {
    if trajectory.is_empty() {
        return Err(MetricsError::EmptyTrajectory);
    }
    for (index, step) in trajectory.steps.iter().enumerate() {
        if step.state >= num_states || step.action >= num_actions {
            return Err(MetricsError::InvalidStep {
                index,
                state: step.state,
                action: step.action,
            });
        }
    }
    Ok(())
}

/// Mean legible reward along the trajectory, for its tagged true goal
/// (or the problem's target when untagged).
pub fn polmdp_legibility(trajectory: &Trajectory, problem: &LegibleProblem<'_>) -> Result<f64, MetricsError> {
    let family = problem.family();
    check_steps(trajectory, family.num_states(), family.num_actions())?;
    let retargeted;
    let problem = match trajectory.true_goal {
        Some(goal) if goal != problem.target() => {
            retargeted = problem.retarget(goal)?;
            &retargeted
        }
        _ => problem,
    };
    let total: f64 = trajectory
        .steps
        .iter()
        .map(|s| problem.legible_reward(s.state, s.action))
        .sum();
    Ok(total / trajectory.len() as f64)
}

/// Observer beliefs `b_0 .. b_T` along the trajectory, starting uniform.
pub fn belief_trace(trajectory: &Trajectory, observer: &ObserverModel) -> Result<Vec<BeliefState>, MetricsError> {
    let mut beliefs = vec![BeliefState::uniform(observer.num_goals())];
    for (prev, action, next) in trajectory.transitions() {
        let last = beliefs.last().expect("non-empty");
        let update = observer.update(last, prev, action, next)?;
        beliefs.push(update.belief);
    }
    Ok(beliefs)
}

/// Mean over `t >= 1` of the negated distance between the observer's belief
/// and the one-hot belief on `true_goal`.
pub fn miura_legibility(
    trajectory: &Trajectory,
    observer: &ObserverModel,
    true_goal: usize,
    kind: DistanceKind,
) -> Result<f64, MetricsError> {
    miura_legibility_capped(trajectory, observer, true_goal, kind, DEFAULT_KL_CAP)
}

pub fn miura_legibility_capped(
    trajectory: &Trajectory,
    observer: &ObserverModel,
    true_goal: usize,
    kind: DistanceKind,
    kl_cap: f64,
) -> Result<f64, MetricsError> {
    let kernel = observer.kernel();
    check_steps(trajectory, kernel.num_states(), kernel.num_actions())?;
    let beliefs = belief_trace(trajectory, observer)?;
    let target = BeliefState::one_hot(observer.num_goals(), true_goal);
    let total: f64 = beliefs[1..]
        .iter()
        .map(|b| belief_distance_capped(b, &target, kind, kl_cap))
        .sum();
    Ok(-total / (beliefs.len() - 1) as f64)
}
