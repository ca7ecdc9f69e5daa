//! Legible rewards and policies.
//!
//! The legible reward of a state-action pair for a target goal is the
//! posterior probability of that goal under a maximum-entropy action model,
//! `P(n | x, a) ∝ prior[n] * exp(beta * Q_n*(x, a))`. Solving an ordinary MDP
//! with that reward over the shared grid kernel yields the legible policy.

use std::time::Instant;

use thiserror::Error;

use crate::maze::GoalMdpFamily;
use crate::mdp::{self, greedy_policy, MdpError, Policy, SolveResult, TabularMdp};

pub const DEFAULT_BETA: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LegibleError {
    #[error("invalid legible problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Solver(#[from] MdpError),
}

/// Optimal Q-tables for every member of a goal family, in goal order.
#[derive(Debug, Clone)]
pub struct GoalQTables {
    results: Vec<SolveResult>,
}

impl GoalQTables {
    pub fn solve(family: &GoalMdpFamily, tolerance: f64, max_iterations: usize) -> Result<Self, MdpError> {
        Self::solve_until(family, tolerance, max_iterations, None)
    }

    pub fn solve_until(
        family: &GoalMdpFamily,
        tolerance: f64,
        max_iterations: usize,
        deadline: Option<Instant>,
    ) -> Result<Self, MdpError> {
        let results = family
            .mdps()
            .iter()
            .map(|m| mdp::value_iterate_until(m, tolerance, max_iterations, deadline))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { results })
    }

    pub fn from_results(results: Vec<SolveResult>) -> Self {
        Self { results }
    }

    pub fn num_goals(&self) -> usize {
        self.results.len()
    }

    pub fn num_actions(&self) -> usize {
        self.results[0].num_actions
    }

    pub fn goal(&self, goal: usize) -> &SolveResult {
        &self.results[goal]
    }

    pub fn results(&self) -> &[SolveResult] {
        &self.results
    }

    pub fn q(&self, goal: usize, state: usize, action: usize) -> f64 {
        self.results[goal].q(state, action)
    }

    pub fn optimal_policy(&self, goal: usize) -> Policy {
        greedy_policy(&self.results[goal])
    }
}

/// The legible MDP for one target goal.
#[derive(Debug, Clone)]
pub struct LegibleProblem<'a> {
    family: &'a GoalMdpFamily,
    q_tables: &'a GoalQTables,
    target: usize,
    beta: f64,
    prior: Vec<f64>,
}

impl<'a> LegibleProblem<'a> {
    /// Uniform goal prior.
    pub fn new(
        family: &'a GoalMdpFamily,
        q_tables: &'a GoalQTables,
        target: usize,
        beta: f64,
    ) -> Result<Self, LegibleError> {
        let n = family.num_goals();
        Self::with_prior(family, q_tables, target, beta, vec![1.0 / n as f64; n])
    }

    pub fn with_prior(
        family: &'a GoalMdpFamily,
        q_tables: &'a GoalQTables,
        target: usize,
        beta: f64,
        prior: Vec<f64>,
    ) -> Result<Self, LegibleError> {
        let invalid = |msg: String| Err(LegibleError::InvalidProblem(msg));
        let n = family.num_goals();
        if q_tables.num_goals() != n {
            return invalid(format!("{} Q-tables for {n} goals", q_tables.num_goals()));
        }
        if q_tables.results().iter().any(|r| r.num_states() != family.num_states()) {
            return invalid("Q-table state count does not match the family".into());
        }
        if target >= n {
            return invalid(format!("target goal {target} out of range for {n} goals"));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return invalid(format!("beta {beta} must be finite and non-negative"));
        }
        if prior.len() != n || prior.iter().any(|p| !(*p >= 0.0)) {
            return invalid("goal prior must be a non-negative vector over goals".into());
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("goal prior sums to {total}"));
        }
        Ok(Self {
            family,
            q_tables,
            target,
            beta,
            prior,
        })
    }

    pub fn family(&self) -> &'a GoalMdpFamily {
        self.family
    }

    pub fn q_tables(&self) -> &'a GoalQTables {
        self.q_tables
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// Same inputs, different target goal.
    pub fn retarget(&self, target: usize) -> Result<Self, LegibleError> {
        Self::with_prior(self.family, self.q_tables, target, self.beta, self.prior.clone())
    }

    pub fn legible_reward(&self, state: usize, action: usize) -> f64 {
        goal_posterior_at(self.q_tables, &self.prior, self.beta, state, action)[self.target]
    }

    /// Dense `r_leg` table, row-major over (state, action).
    pub fn reward_table(&self) -> Vec<f64> {
        let n = self.family.num_states();
        let na = self.family.num_actions();
        let mut table = Vec::with_capacity(n * na);
        for x in 0..n {
            for a in 0..na {
                table.push(self.legible_reward(x, a));
            }
        }
        table
    }

    pub fn legible_mdp(&self) -> Result<TabularMdp, LegibleError> {
        Ok(self.family.mdp(self.target).with_rewards(self.reward_table())?)
    }

    pub fn solve(&self, tolerance: f64) -> Result<(SolveResult, Policy), LegibleError> {
        self.solve_until(tolerance, mdp::DEFAULT_MAX_ITERATIONS, None)
    }

    pub fn solve_until(
        &self,
        tolerance: f64,
        max_iterations: usize,
        deadline: Option<Instant>,
    ) -> Result<(SolveResult, Policy), LegibleError> {
        let legible = self.legible_mdp()?;
        let result = mdp::value_iterate_until(&legible, tolerance, max_iterations, deadline)?;
        let policy = greedy_policy(&result);
        Ok((result, policy))
    }
}

/// Posterior over goals after observing `(state, action)` once.
pub fn goal_posterior_at(q_tables: &GoalQTables, prior: &[f64], beta: f64, state: usize, action: usize) -> Vec<f64> {
    let scores: Vec<f64> = (0..q_tables.num_goals())
        .map(|m| beta * q_tables.q(m, state, action))
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores
        .iter()
        .zip(prior)
        .map(|(s, p)| p * (s - max).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

pub fn legible_reward(problem: &LegibleProblem<'_>, state: usize, action: usize) -> f64 {
    problem.legible_reward(state, action)
}

pub fn solve_legible(problem: &LegibleProblem<'_>, tolerance: f64) -> Result<(SolveResult, Policy), LegibleError> {
    problem.solve(tolerance)
}
