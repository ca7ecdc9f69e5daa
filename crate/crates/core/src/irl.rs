//! Learning a teacher's goal from demonstrations.
//!
//! Goal inference treats each candidate goal's optimal Q-function as a
//! Boltzmann action model and scores demonstrated pairs by their likelihood
//! under each. [`girl_recover`] instead fits a free per-state reward to the
//! same likelihood by gradient ascent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::legible::{GoalQTables, LegibleError, LegibleProblem};
use crate::maze::GoalMdpFamily;
use crate::mdp::{self, argmax_lowest, greedy_policy, MdpError, Policy, PolicySource, TabularMdp};

pub const DEFAULT_LEARNER_ETA: f64 = 1.0;
pub const DEFAULT_DEMO_COUNT: usize = 10;
pub const DEFAULT_DEMO_HORIZON: usize = 20;
pub const DEFAULT_SAMPLE_COUNT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrlError {
    #[error("demonstration is empty")]
    EmptyDemonstration,
    #[error("pair {index} = ({state}, {action}) is outside the model")]
    InvalidPair { index: usize, state: usize, action: usize },
    #[error("invalid learner parameter: {0}")]
    InvalidParameter(String),
    #[error("log-likelihood kept decreasing after {halvings} step halvings at iteration {iteration}")]
    Divergence { iteration: usize, halvings: usize },
    #[error("no free non-goal cell to sample from")]
    NoStates,
    #[error(transparent)]
    Solver(#[from] MdpError),
    #[error(transparent)]
    Legible(#[from] LegibleError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub pairs: Vec<(usize, usize)>,
    pub source: PolicySource,
    pub true_goal: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalPosterior {
    pub log_likelihoods: Vec<f64>,
    pub posterior: Vec<f64>,
}

impl GoalPosterior {
    /// Most probable goal, lowest index on ties.
    pub fn prediction(&self) -> usize {
        let best = self.posterior.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.posterior.iter().position(|&p| p == best).unwrap_or(0)
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `ln P(action | state)` under `exp(eta * q)` normalized over actions.
fn pair_log_likelihood(q_row: &[f64], action: usize, eta: f64) -> f64 {
    eta * q_row[action] - log_sum_exp(q_row.iter().map(|q| eta * q))
}

fn posterior_from(log_likelihoods: Vec<f64>) -> GoalPosterior {
    let norm = log_sum_exp(log_likelihoods.iter().copied());
    let posterior = log_likelihoods.iter().map(|l| (l - norm).exp()).collect();
    GoalPosterior {
        log_likelihoods,
        posterior,
    }
}

/// Posterior over goals under a uniform prior after seeing `pairs`.
pub fn goal_posterior(pairs: &[(usize, usize)], q_tables: &GoalQTables, eta: f64) -> GoalPosterior {
    let log_likelihoods = q_tables
        .results()
        .iter()
        .map(|r| pairs.iter().map(|&(x, a)| pair_log_likelihood(r.q_row(x), a, eta)).sum())
        .collect();
    posterior_from(log_likelihoods)
}

/// Prediction after each revealed pair: entry `k - 1` uses the first `k` pairs.
pub fn incremental_predictions(pairs: &[(usize, usize)], q_tables: &GoalQTables, eta: f64) -> Vec<usize> {
    let mut log_likelihoods = vec![0.0; q_tables.num_goals()];
    pairs
        .iter()
        .map(|&(x, a)| {
            for (ll, r) in log_likelihoods.iter_mut().zip(q_tables.results()) {
                *ll += pair_log_likelihood(r.q_row(x), a, eta);
            }
            posterior_from(log_likelihoods.clone()).prediction()
        })
        .collect()
}

/// Greedy optimal and legible policies for every goal of a family.
#[derive(Debug, Clone)]
pub struct TeacherPolicies {
    optimal: Vec<Policy>,
    legible: Vec<Policy>,
}

impl TeacherPolicies {
    pub fn new(family: &GoalMdpFamily, q_tables: &GoalQTables, beta: f64, tolerance: f64) -> Result<Self, IrlError> {
        let optimal = (0..family.num_goals()).map(|g| q_tables.optimal_policy(g)).collect();
        let legible = (0..family.num_goals())
            .map(|g| Ok(LegibleProblem::new(family, q_tables, g, beta)?.solve(tolerance)?.1))
            .collect::<Result<Vec<_>, IrlError>>()?;
        Ok(Self { optimal, legible })
    }

    pub fn policy(&self, source: PolicySource, goal: usize) -> &Policy {
        match source {
            PolicySource::Legible => &self.legible[goal],
            _ => &self.optimal[goal],
        }
    }
}

/// `count` rollouts of the teacher's greedy policy from `start`.
#[allow(clippy::too_many_arguments)]
pub fn sample_demo_trajectories(
    family: &GoalMdpFamily,
    teachers: &TeacherPolicies,
    source: PolicySource,
    start: usize,
    goal: usize,
    count: usize,
    horizon: usize,
    rng_seed: u64,
) -> Vec<Demonstration> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let policy = teachers.policy(source, goal);
    (0..count)
        .map(|_| {
            let traj = mdp::rollout_with(family.kernel(), policy, start, horizon, &mut rng);
            Demonstration {
                pairs: traj.pairs(),
                source,
                true_goal: goal,
            }
        })
        .collect()
}

/// `count` uniformly drawn free non-goal states, each labelled with the
/// teacher's greedy action for `goal`.
pub fn sample_demo_states(
    family: &GoalMdpFamily,
    teachers: &TeacherPolicies,
    source: PolicySource,
    goal: usize,
    count: usize,
    rng_seed: u64,
) -> Result<Demonstration, IrlError> {
    let states: Vec<usize> = family
        .spec
        .start_cells()
        .into_iter()
        .map(|c| family.spec.state_of(c))
        .collect();
    if states.is_empty() {
        return Err(IrlError::NoStates);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let policy = teachers.policy(source, goal);
    let pairs = (0..count)
        .map(|_| {
            let x = states[rng.gen_range(0..states.len())];
            (x, policy.action(x).expect("teacher policies are deterministic"))
        })
        .collect();
    Ok(Demonstration {
        pairs,
        source,
        true_goal: goal,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GirlConfig {
    pub eta: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub solver_tolerance: f64,
    pub max_halvings: usize,
}

impl Default for GirlConfig {
    fn default() -> Self {
        Self {
            eta: DEFAULT_LEARNER_ETA,
            learning_rate: 1.0,
            iterations: 100,
            solver_tolerance: 1e-8,
            max_halvings: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GirlResult {
    /// One reward weight per state.
    pub reward: Vec<f64>,
    /// Mean log-likelihood of the demonstration, initial value first.
    pub log_likelihood_trace: Vec<f64>,
}

impl GirlResult {
    pub fn mdp(&self, template: &TabularMdp) -> Result<TabularMdp, IrlError> {
        Ok(template.with_rewards(state_rewards(&self.reward, template.num_actions()))?)
    }
}

fn state_rewards(weights: &[f64], num_actions: usize) -> Vec<f64> {
    weights
        .iter()
        .flat_map(|&w| std::iter::repeat(w).take(num_actions))
        .collect()
}

fn check_pairs(pairs: &[(usize, usize)], template: &TabularMdp) -> Result<(), IrlError> {
    if pairs.is_empty() {
        return Err(IrlError::EmptyDemonstration);
    }
    for (index, &(state, action)) in pairs.iter().enumerate() {
        if state >= template.num_states() || action >= template.num_actions() {
            return Err(IrlError::InvalidPair { index, state, action });
        }
    }
    Ok(())
}

/// Mean log-likelihood of the pairs and its gradient with respect to the
/// per-state reward weights.
///
/// The gradient holds the greedy policy of the re-solved MDP fixed:
/// `dV/dw = (I - gamma P_pi)^-1`, so `dQ(x,a)/dw = e_x + gamma P(.|x,a) (I - gamma P_pi)^-1`.
pub fn girl_objective(
    pairs: &[(usize, usize)],
    template: &TabularMdp,
    weights: &[f64],
    eta: f64,
    solver_tolerance: f64,
) -> Result<(f64, Vec<f64>), IrlError> {
    check_pairs(pairs, template)?;
    let n = template.num_states();
    let na = template.num_actions();
    let gamma = template.discount();
    let kernel = template.kernel();
    let mdp = template.with_rewards(state_rewards(weights, na))?;
    let solved = mdp::value_iterate(&mdp, solver_tolerance, mdp::DEFAULT_MAX_ITERATIONS)?;
    let inv_count = 1.0 / pairs.len() as f64;

    // u(y) = sum_{x,a} c(x,a) P(y|x,a), c = dL/dQ
    let mut log_likelihood = 0.0;
    let mut u = vec![0.0; n];
    for &(x, a_demo) in pairs {
        let row = solved.q_row(x);
        log_likelihood += pair_log_likelihood(row, a_demo, eta) * inv_count;
        let probs = mdp::softmax_row(row, eta);
        for (a, p) in probs.iter().enumerate() {
            let c = eta * inv_count * (f64::from(u8::from(a == a_demo)) - p);
            for &(y, py) in kernel.successors(x, a) {
                u[y] += c * py;
            }
        }
    }

    // solve (I - gamma P_pi)^T g = u by fixed-point iteration
    let policy: Vec<usize> = (0..n).map(|x| argmax_lowest(solved.q_row(x))).collect();
    let mut g = u.clone();
    for _ in 0..10_000 {
        let mut next = u.clone();
        for (y, &gy) in g.iter().enumerate() {
            if gy == 0.0 {
                continue;
            }
            for &(k, p) in kernel.successors(y, policy[y]) {
                next[k] += gamma * p * gy;
            }
        }
        let delta = next.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        g = next;
        if delta <= 1e-14 {
            break;
        }
    }
    let gradient = g.into_iter().map(|v| gamma * v).collect();
    Ok((log_likelihood, gradient))
}

/// Gradient ascent on the Boltzmann log-likelihood of `demo` over a
/// per-state reward, re-solving the MDP every iteration. Steps that lower
/// the likelihood by more than `1e-6` are halved and retried.
pub fn girl_recover(demo: &Demonstration, template: &TabularMdp, config: &GirlConfig) -> Result<GirlResult, IrlError> {
    if !(config.learning_rate > 0.0) {
        return Err(IrlError::InvalidParameter("learning_rate must be positive".into()));
    }
    if !(config.eta > 0.0) {
        return Err(IrlError::InvalidParameter("eta must be positive".into()));
    }
    let pairs = &demo.pairs;
    let mut weights = vec![0.0; template.num_states()];
    let (mut ll, mut grad) = girl_objective(pairs, template, &weights, config.eta, config.solver_tolerance)?;
    let mut trace = vec![ll];
    for iteration in 0..config.iterations {
        let mut step = config.learning_rate;
        let mut halvings = 0;
        loop {
            let candidate: Vec<f64> = weights.iter().zip(&grad).map(|(w, g)| w + step * g).collect();
            let (cand_ll, cand_grad) =
                girl_objective(pairs, template, &candidate, config.eta, config.solver_tolerance)?;
            if cand_ll >= ll - 1e-6 {
                weights = candidate;
                ll = cand_ll;
                grad = cand_grad;
                trace.push(ll);
                break;
            }
            halvings += 1;
            if halvings >= config.max_halvings {
                return Err(IrlError::Divergence { iteration, halvings });
            }
            step *= 0.5;
        }
    }
    Ok(GirlResult {
        reward: weights,
        log_likelihood_trace: trace,
    })
}

/// Greedy policy of the MDP induced by a recovered reward.
pub fn recovered_policy(result: &GirlResult, template: &TabularMdp, tolerance: f64) -> Result<Policy, IrlError> {
    let solved = mdp::value_iterate(&result.mdp(template)?, tolerance, mdp::DEFAULT_MAX_ITERATIONS)?;
    Ok(greedy_policy(&solved))
}
