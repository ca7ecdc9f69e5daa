//! Tabular MDPs and exact dynamic-programming solvers.
//!
//! Transition kernels are stored sparsely (one successor list per
//! state-action pair) and shared behind an [`Arc`] so that a family of MDPs
//! differing only in their rewards can reuse the same structure.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Default max-norm tolerance for [`value_iterate`].
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Default sweep budget for [`value_iterate`].
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;
/// Default discount used across the toolkit.
pub const DEFAULT_DISCOUNT: f64 = 0.9;

const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("solver deadline exceeded after {iterations} sweeps")]
    Timeout { iterations: usize },
}

/// Sparse transition kernel `P(y | x, a)` plus a mask of terminal states.
///
/// Terminal states are absorbing; rollouts stop when one is entered.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    num_states: usize,
    num_actions: usize,
    rows: Vec<Vec<(usize, f64)>>,
    terminal: Vec<bool>,
}

impl TransitionKernel {
    /// `rows[state * num_actions + action]` lists `(next_state, probability)`.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        rows: Vec<Vec<(usize, f64)>>,
        terminal: Vec<bool>,
    ) -> Result<Self, MdpError> {
        if num_states == 0 || num_actions == 0 {
            return Err(MdpError::InvalidModel("empty state or action space".into()));
        }
        if rows.len() != num_states * num_actions {
            return Err(MdpError::InvalidModel(format!(
                "expected {} transition rows, got {}",
                num_states * num_actions,
                rows.len()
            )));
        }
        if terminal.len() != num_states {
            return Err(MdpError::InvalidModel(format!(
                "terminal mask has length {}, expected {num_states}",
                terminal.len()
            )));
        }
        for (idx, row) in rows.iter().enumerate() {
            let (state, action) = (idx / num_actions, idx % num_actions);
            let mut sum = 0.0;
            for &(next, p) in row {
                if next >= num_states {
                    return Err(MdpError::InvalidModel(format!(
                        "row ({state}, {action}) points to state {next} >= {num_states}"
                    )));
                }
                if !(p >= 0.0) {
                    return Err(MdpError::InvalidModel(format!(
                        "row ({state}, {action}) has negative probability {p}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(MdpError::InvalidModel(format!(
                    "row ({state}, {action}) sums to {sum}"
                )));
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            rows,
            terminal,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn successors(&self, state: usize, action: usize) -> &[(usize, f64)] {
        &self.rows[state * self.num_actions + action]
    }

    /// `P(next | state, action)`, zero when `next` is not listed.
    pub fn probability(&self, state: usize, action: usize, next: usize) -> f64 {
        self.successors(state, action)
            .iter()
            .filter(|(y, _)| *y == next)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    pub fn terminal_mask(&self) -> &[bool] {
        &self.terminal
    }

    /// Draws a successor using a single uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, state: usize, action: usize, rng: &mut R) -> usize {
        let row = self.successors(state, action);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(next, p) in row {
            acc += p;
            if u < acc {
                return next;
            }
        }
        // rounding: fall back to the last successor with positive mass
        row.iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map(|(y, _)| *y)
            .unwrap_or(state)
    }
}

/// An MDP `<X, A, P, r, gamma>` with a shared sparse kernel.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    kernel: Arc<TransitionKernel>,
    rewards: Vec<f64>,
    discount: f64,
}

impl TabularMdp {
    /// `rewards[state * num_actions + action]`.
    pub fn new(kernel: Arc<TransitionKernel>, rewards: Vec<f64>, discount: f64) -> Result<Self, MdpError> {
        if rewards.len() != kernel.num_states * kernel.num_actions {
            return Err(MdpError::InvalidModel(format!(
                "reward table has {} entries, expected {}",
                rewards.len(),
                kernel.num_states * kernel.num_actions
            )));
        }
        if let Some(bad) = rewards.iter().find(|r| !r.is_finite()) {
            return Err(MdpError::InvalidModel(format!("non-finite reward {bad}")));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(MdpError::InvalidModel(format!("discount {discount} outside [0, 1)")));
        }
        Ok(Self {
            kernel,
            rewards,
            discount,
        })
    }

    pub fn kernel(&self) -> &Arc<TransitionKernel> {
        &self.kernel
    }

    pub fn num_states(&self) -> usize {
        self.kernel.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.kernel.num_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.rewards[state * self.kernel.num_actions + action]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Same kernel and discount, different reward table.
    pub fn with_rewards(&self, rewards: Vec<f64>) -> Result<Self, MdpError> {
        Self::new(Arc::clone(&self.kernel), rewards, self.discount)
    }

    /// One-step lookahead `r(x,a) + gamma * sum_y P(y|x,a) v(y)`.
    pub fn backup(&self, values: &[f64], state: usize, action: usize) -> f64 {
        let expected: f64 = self
            .kernel
            .successors(state, action)
            .iter()
            .map(|&(y, p)| p * values[y])
            .sum();
        self.reward(state, action) + self.discount * expected
    }
}

/// Optimal values and Q-table of one MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub values: Vec<f64>,
    /// Row-major `q_table[state * num_actions + action]`.
    pub q_table: Vec<f64>,
    pub num_actions: usize,
    pub iterations: usize,
    /// Max-norm change of the last Bellman sweep.
    pub residual: f64,
    /// Residual after every sweep, in order.
    pub residual_trace: Vec<f64>,
}

impl SolveResult {
    pub fn num_states(&self) -> usize {
        self.values.len()
    }

    pub fn q_row(&self, state: usize) -> &[f64] {
        &self.q_table[state * self.num_actions..(state + 1) * self.num_actions]
    }

    pub fn q(&self, state: usize, action: usize) -> f64 {
        self.q_table[state * self.num_actions + action]
    }

    pub fn converged(&self, tolerance: f64) -> bool {
        self.residual <= tolerance
    }
}

/// Jacobi value iteration to a max-norm residual of `tolerance`.
///
/// Hitting `max_iterations` is not an error; the achieved residual is
/// reported in the result.
pub fn value_iterate(mdp: &TabularMdp, tolerance: f64, max_iterations: usize) -> Result<SolveResult, MdpError> {
    value_iterate_until(mdp, tolerance, max_iterations, None)
}

/// [`value_iterate`] with a cooperative wall-clock deadline checked once per sweep.
pub fn value_iterate_until(
    mdp: &TabularMdp,
    tolerance: f64,
    max_iterations: usize,
    deadline: Option<Instant>,
) -> Result<SolveResult, MdpError> {
    if !(tolerance > 0.0) {
        return Err(MdpError::InvalidModel(format!("tolerance {tolerance} must be positive")));
    }
    if max_iterations == 0 {
        return Err(MdpError::InvalidModel("max_iterations must be at least 1".into()));
    }
    let n = mdp.num_states();
    let na = mdp.num_actions();
    let mut values = vec![0.0; n];
    let mut next_values = vec![0.0; n];
    let mut q_table = vec![0.0; n * na];
    let mut trace = Vec::new();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    while iterations < max_iterations {
        if let Some(deadline) = deadline {
            if Instant::now() >= deadline {
                return Err(MdpError::Timeout { iterations });
            }
        }
        residual = 0.0;
        for x in 0..n {
            let mut best = f64::NEG_INFINITY;
            for a in 0..na {
                let q = mdp.backup(&values, x, a);
                q_table[x * na + a] = q;
                if q > best {
                    best = q;
                }
            }
            next_values[x] = best;
            residual = f64::max(residual, (best - values[x]).abs());
        }
        std::mem::swap(&mut values, &mut next_values);
        iterations += 1;
        trace.push(residual);
        if residual <= tolerance {
            break;
        }
    }

    Ok(SolveResult {
        values,
        q_table,
        num_actions: na,
        iterations,
        residual,
        residual_trace: trace,
    })
}

/// Exact evaluation of a policy by solving `(I - gamma P_pi) v = r_pi`.
///
/// Dense Gaussian elimination; intended for small instances.
pub fn evaluate_policy(mdp: &TabularMdp, policy: &Policy) -> Vec<f64> {
    let n = mdp.num_states();
    let na = mdp.num_actions();
    let gamma = mdp.discount();
    // augmented matrix [I - gamma P_pi | r_pi]
    let mut m = vec![vec![0.0; n + 1]; n];
    for x in 0..n {
        m[x][x] += 1.0;
        for a in 0..na {
            let pa = policy.probability(x, a);
            if pa == 0.0 {
                continue;
            }
            m[x][n] += pa * mdp.reward(x, a);
            for &(y, p) in mdp.kernel().successors(x, a) {
                m[x][y] -= gamma * pa * p;
            }
        }
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("non-empty");
        m.swap(col, pivot);
        let diag = m[col][col];
        for k in col..=n {
            m[col][k] /= diag;
        }
        for row in 0..n {
            if row != col && m[row][col] != 0.0 {
                let factor = m[row][col];
                for k in col..=n {
                    m[row][k] -= factor * m[col][k];
                }
            }
        }
    }
    m.into_iter().map(|row| row[n]).collect()
}

/// A deterministic or stochastic policy over a tabular MDP.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Deterministic(Vec<usize>),
    /// Row-major `probs[state * num_actions + action]`.
    Stochastic { num_actions: usize, probs: Vec<f64> },
}

impl Policy {
    pub fn num_states(&self) -> usize {
        match self {
            Policy::Deterministic(actions) => actions.len(),
            Policy::Stochastic { num_actions, probs } => probs.len() / num_actions,
        }
    }

    pub fn probability(&self, state: usize, action: usize) -> f64 {
        match self {
            Policy::Deterministic(actions) => f64::from(u8::from(actions[state] == action)),
            Policy::Stochastic { num_actions, probs } => probs[state * num_actions + action],
        }
    }

    /// The action a deterministic policy takes; `None` for stochastic ones.
    pub fn action(&self, state: usize) -> Option<usize> {
        match self {
            Policy::Deterministic(actions) => Some(actions[state]),
            Policy::Stochastic { .. } => None,
        }
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        match self {
            Policy::Deterministic(actions) => actions[state],
            Policy::Stochastic { num_actions, probs } => {
                let row = &probs[state * num_actions..(state + 1) * num_actions];
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (a, p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return a;
                    }
                }
                row.iter().rposition(|p| *p > 0.0).unwrap_or(0)
            }
        }
    }
}

/// Index of the maximal entry, lowest index on ties.
///
/// Entries within `1e-10 * (1 + |max|)` of the maximum count as tied, so
/// that symmetric actions whose backups differ only by rounding resolve
/// the same way on every run.
pub fn argmax_lowest(row: &[f64]) -> usize {
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-10 * (1.0 + best.abs());
    row.iter().position(|&q| q >= best - slack).unwrap_or(0)
}

pub fn greedy_policy(result: &SolveResult) -> Policy {
    Policy::Deterministic((0..result.num_states()).map(|x| argmax_lowest(result.q_row(x))).collect())
}

/// Numerically stable `exp(eta * q) / sum exp(eta * q)` over one row.
pub fn softmax_row(row: &[f64], eta: f64) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = row.iter().map(|&q| (eta * (q - max)).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// `pi(a|x) ∝ exp(eta * q*(x,a))`.
pub fn boltzmann_policy(result: &SolveResult, temperature_inverse: f64) -> Policy {
    let na = result.num_actions;
    let mut probs = Vec::with_capacity(result.q_table.len());
    for x in 0..result.num_states() {
        probs.extend(softmax_row(result.q_row(x), temperature_inverse));
    }
    Policy::Stochastic { num_actions: na, probs }
}

/// Which policy generated a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicySource {
    Optimal,
    Legible,
    Lmdp,
}

impl PolicySource {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicySource::Optimal => "optimal",
            PolicySource::Legible => "legible",
            PolicySource::Lmdp => "lmdp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub t: usize,
    pub state: usize,
    pub action: usize,
}

/// State-action records in time order; `end_state` is where the last action led.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub end_state: usize,
    pub true_goal: Option<usize>,
    pub source: Option<PolicySource>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `(x_t, a_t, x_{t+1})` for every recorded step.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.steps.iter().enumerate().map(move |(i, s)| {
            let next = self.steps.get(i + 1).map_or(self.end_state, |n| n.state);
            (s.state, s.action, next)
        })
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.steps.iter().map(|s| (s.state, s.action)).collect()
    }

    pub fn tagged(mut self, true_goal: usize, source: PolicySource) -> Self {
        self.true_goal = Some(true_goal);
        self.source = Some(source);
        self
    }
}

/// Samples `horizon` steps of `policy`, stopping early on entering a terminal state.
pub fn rollout(mdp: &TabularMdp, policy: &Policy, start: usize, horizon: usize, rng_seed: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rollout_with(mdp.kernel(), policy, start, horizon, &mut rng)
}

pub fn rollout_with<R: Rng + ?Sized>(
    kernel: &TransitionKernel,
    policy: &Policy,
    start: usize,
    horizon: usize,
    rng: &mut R,
) -> Trajectory {
    let mut steps = Vec::with_capacity(horizon);
    let mut state = start;
    for t in 0..horizon {
        let action = policy.sample_action(state, rng);
        steps.push(Step { t, state, action });
        state = kernel.sample(state, action, rng);
        if kernel.is_terminal(state) {
            break;
        }
    }
    Trajectory {
        steps,
        end_state: state,
        true_goal: None,
        source: None,
    }
}
