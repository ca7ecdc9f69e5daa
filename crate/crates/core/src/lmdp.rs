//! Observer-belief legibility baseline.
//!
//! A simulated observer keeps a belief over goals and updates it by Bayes'
//! rule after every observed transition, assuming the agent acts by a
//! Boltzmann policy over each goal's optimal Q-function. The agent plans
//! online with UCT over (grid state, belief), scoring each step by task
//! reward minus a weighted distance between the belief and the one-hot
//! belief on its true goal.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::legible::GoalQTables;
use crate::maze::GoalMdpFamily;
use crate::mdp::{boltzmann_policy, Policy, PolicySource, Step, TransitionKernel, Trajectory};

pub const DEFAULT_OBSERVER_ETA: f64 = 1.0;
pub const DEFAULT_KL_CAP: f64 = 1e6;
const SIMPLEX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LmdpError {
    #[error("transition ({prev} --{action}--> {next}) has zero probability")]
    ImpossibleTransition { prev: usize, action: usize, next: usize },
    #[error("invalid belief: {0}")]
    InvalidBelief(String),
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error("episode exceeded its {budget:?} planning budget after {steps} steps")]
    Timeout { budget: Duration, steps: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    probabilities: Vec<f64>,
}

impl BeliefState {
    pub fn new(probabilities: Vec<f64>) -> Result<Self, LmdpError> {
        if probabilities.is_empty() {
            return Err(LmdpError::InvalidBelief("empty belief".into()));
        }
        if probabilities.iter().any(|p| !(*p >= 0.0)) {
            return Err(LmdpError::InvalidBelief("negative or NaN entry".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(LmdpError::InvalidBelief(format!("sums to {total}")));
        }
        Ok(Self { probabilities })
    }

    pub fn uniform(num_goals: usize) -> Self {
        Self {
            probabilities: vec![1.0 / num_goals as f64; num_goals],
        }
    }

    pub fn one_hot(num_goals: usize, goal: usize) -> Self {
        let mut probabilities = vec![0.0; num_goals];
        probabilities[goal] = 1.0;
        Self { probabilities }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn get(&self, goal: usize) -> f64 {
        self.probabilities[goal]
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    Kl,
    Euclidean,
    Tv,
}

impl DistanceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceKind::Kl => "kl",
            DistanceKind::Euclidean => "euclidean",
            DistanceKind::Tv => "tv",
        }
    }
}

/// Distance from `belief` to `target`.
///
/// `Kl` is `sum target * ln(target / belief)` with `0 ln 0 = 0`; for a
/// one-hot target that is `-ln belief[true]`, capped at `kl_cap`.
pub fn belief_distance_capped(belief: &BeliefState, target: &BeliefState, kind: DistanceKind, kl_cap: f64) -> f64 {
    let pairs = belief.probabilities.iter().zip(&target.probabilities);
    match kind {
        DistanceKind::Kl => {
            let mut total = 0.0;
            for (&b, &t) in pairs {
                if t > 0.0 {
                    if b <= 0.0 {
                        return kl_cap;
                    }
                    total += t * (t / b).ln();
                }
            }
            total.clamp(0.0, kl_cap)
        }
        DistanceKind::Euclidean => pairs.map(|(b, t)| (b - t).powi(2)).sum::<f64>().sqrt(),
        DistanceKind::Tv => 0.5 * pairs.map(|(b, t)| (b - t).abs()).sum::<f64>(),
    }
}

pub fn belief_distance(belief: &BeliefState, target: &BeliefState, kind: DistanceKind) -> f64 {
    belief_distance_capped(belief, target, kind, DEFAULT_KL_CAP)
}

/// Distance to the one-hot belief on `goal` without materializing it.
fn distance_to_goal(probs: &[f64], goal: usize, kind: DistanceKind, kl_cap: f64) -> f64 {
    match kind {
        DistanceKind::Kl => {
            let b = probs[goal];
            if b <= 0.0 {
                kl_cap
            } else {
                (-b.ln()).clamp(0.0, kl_cap)
            }
        }
        DistanceKind::Euclidean => probs
            .iter()
            .enumerate()
            .map(|(i, &b)| if i == goal { (1.0 - b).powi(2) } else { b * b })
            .sum::<f64>()
            .sqrt(),
        DistanceKind::Tv => {
            0.5 * probs
                .iter()
                .enumerate()
                .map(|(i, &b)| if i == goal { (1.0 - b).abs() } else { b })
                .sum::<f64>()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefUpdate {
    pub belief: BeliefState,
    /// Unnormalized mass underflowed; `belief` is the unchanged prior.
    pub degenerate: bool,
}

/// The observer's model: shared kernel plus a Boltzmann action model per goal.
#[derive(Debug, Clone)]
pub struct ObserverModel {
    kernel: Arc<TransitionKernel>,
    num_goals: usize,
    num_actions: usize,
    eta: f64,
    /// `action_probs[goal][state * num_actions + action]`
    action_probs: Vec<Vec<f64>>,
}

impl ObserverModel {
    pub fn new(family: &GoalMdpFamily, q_tables: &GoalQTables, eta: f64) -> Self {
        let action_probs = q_tables
            .results()
            .iter()
            .map(|r| match boltzmann_policy(r, eta) {
                Policy::Stochastic { probs, .. } => probs,
                Policy::Deterministic(_) => unreachable!("boltzmann policies are stochastic"),
            })
            .collect();
        Self {
            kernel: Arc::clone(family.kernel()),
            num_goals: q_tables.num_goals(),
            num_actions: family.num_actions(),
            eta,
            action_probs,
        }
    }

    pub fn kernel(&self) -> &Arc<TransitionKernel> {
        &self.kernel
    }

    pub fn num_goals(&self) -> usize {
        self.num_goals
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `pi_hat(action | state, goal)`.
    pub fn action_probability(&self, goal: usize, state: usize, action: usize) -> f64 {
        self.action_probs[goal][state * self.num_actions + action]
    }

    pub fn assumed_policy(&self, goal: usize) -> Policy {
        Policy::Stochastic {
            num_actions: self.num_actions,
            probs: self.action_probs[goal].clone(),
        }
    }

    pub fn update(
        &self,
        belief: &BeliefState,
        prev_state: usize,
        action: usize,
        next_state: usize,
    ) -> Result<BeliefUpdate, LmdpError> {
        let mut probs = belief.probabilities.clone();
        let degenerate = self.update_in_place(&mut probs, prev_state, action, next_state)?;
        Ok(BeliefUpdate {
            belief: BeliefState { probabilities: probs },
            degenerate,
        })
    }

    /// In-place Bayes update; returns whether the update degenerated.
    /// The goal-independent kernel term cancels and is only checked for support.
    fn update_in_place(
        &self,
        probs: &mut [f64],
        prev_state: usize,
        action: usize,
        next_state: usize,
    ) -> Result<bool, LmdpError> {
        if !(self.kernel.probability(prev_state, action, next_state) > 0.0) {
            return Err(LmdpError::ImpossibleTransition {
                prev: prev_state,
                action,
                next: next_state,
            });
        }
        Ok(self.reweight(probs, prev_state, action))
    }

    fn reweight(&self, probs: &mut [f64], state: usize, action: usize) -> bool {
        let idx = state * self.num_actions + action;
        let mut total = 0.0;
        let mut scratch = [0.0; crate::maze::MAX_GOALS];
        let weights = if probs.len() <= scratch.len() {
            &mut scratch[..probs.len()]
        } else {
            unreachable!("belief longer than the goal limit")
        };
        for (g, (w, &p)) in weights.iter_mut().zip(probs.iter()).enumerate() {
            *w = p * self.action_probs[g][idx];
            total += *w;
        }
        if !(total > 0.0) || !total.is_finite() {
            return true;
        }
        for (p, w) in probs.iter_mut().zip(weights.iter()) {
            *p = w / total;
        }
        false
    }
}

pub fn belief_update(
    belief: &BeliefState,
    prev_state: usize,
    action: usize,
    next_state: usize,
    observer: &ObserverModel,
) -> Result<BeliefUpdate, LmdpError> {
    observer.update(belief, prev_state, action, next_state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RolloutPolicy {
    Random,
    /// The observer's Boltzmann model for the true goal.
    Boltzmann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UctConfig {
    pub iterations_per_step: usize,
    pub exploration_constant: f64,
    pub rollout_horizon: usize,
    pub rollout_policy: RolloutPolicy,
    pub distance_kind: DistanceKind,
    pub legibility_weight: f64,
    pub rng_seed: u64,
    pub kl_cap: f64,
    /// Wall-clock budget for a whole episode.
    pub episode_budget: Option<Duration>,
}

impl Default for UctConfig {
    fn default() -> Self {
        Self {
            iterations_per_step: 2000,
            exploration_constant: std::f64::consts::SQRT_2,
            rollout_horizon: 25,
            rollout_policy: RolloutPolicy::Boltzmann,
            distance_kind: DistanceKind::Kl,
            legibility_weight: 1.0,
            rng_seed: 0,
            kl_cap: DEFAULT_KL_CAP,
            episode_budget: None,
        }
    }
}

impl UctConfig {
    pub fn validate(&self) -> Result<(), LmdpError> {
        let bad = |msg: &str| Err(LmdpError::InvalidConfig(msg.into()));
        if self.iterations_per_step == 0 {
            return bad("iterations_per_step must be at least 1");
        }
        if self.rollout_horizon == 0 {
            return bad("rollout_horizon must be at least 1");
        }
        if !(self.legibility_weight >= 0.0) {
            return bad("legibility_weight must be non-negative");
        }
        if !(self.exploration_constant >= 0.0) {
            return bad("exploration_constant must be non-negative");
        }
        Ok(())
    }

    /// Compact `key=value` summary used in result metadata.
    pub fn fingerprint(&self) -> String {
        format!(
            "uct_iters={};uct_c={:.6};rollout_h={};rollout={};dist={};leg_w={}",
            self.iterations_per_step,
            self.exploration_constant,
            self.rollout_horizon,
            match self.rollout_policy {
                RolloutPolicy::Random => "random",
                RolloutPolicy::Boltzmann => "boltzmann",
            },
            self.distance_kind.as_str(),
            self.legibility_weight
        )
    }
}

#[derive(Debug, Clone, Default)]
struct ActionEdge {
    visits: u32,
    value_sum: f64,
    /// (next state, child node index)
    outcomes: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
struct Node {
    state: usize,
    belief: Vec<f64>,
    visits: u32,
    edges: Vec<ActionEdge>,
}

/// Statistics of one planning step.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub action: usize,
    pub root_visits: Vec<u32>,
    pub root_values: Vec<f64>,
}

/// Online UCT planner for the observer-belief baseline.
#[derive(Debug, Clone)]
pub struct LmdpPlanner<'a> {
    family: &'a GoalMdpFamily,
    observer: ObserverModel,
    config: UctConfig,
}

fn select_action(node: &Node, exploration: f64) -> usize {
    if let Some(untried) = node.edges.iter().position(|e| e.visits == 0) {
        return untried;
    }
    let log_n = f64::from(node.visits).ln();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (a, edge) in node.edges.iter().enumerate() {
        let n = f64::from(edge.visits);
        let score = edge.value_sum / n + exploration * (log_n / n).sqrt();
        if score > best_score {
            best_score = score;
            best = a;
        }
    }
    best
}

impl<'a> LmdpPlanner<'a> {
    pub fn new(family: &'a GoalMdpFamily, observer: ObserverModel, config: UctConfig) -> Result<Self, LmdpError> {
        config.validate()?;
        if observer.num_goals != family.num_goals() {
            return Err(LmdpError::InvalidConfig("observer and family disagree on goal count".into()));
        }
        Ok(Self {
            family,
            observer,
            config,
        })
    }

    pub fn observer(&self) -> &ObserverModel {
        &self.observer
    }

    pub fn config(&self) -> &UctConfig {
        &self.config
    }

    /// Plans one step with a generator seeded from `config.rng_seed`.
    pub fn plan_step(&self, current: usize, belief: &BeliefState, true_goal: usize) -> PlanOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.rng_seed);
        self.plan_step_with(current, belief, true_goal, &mut rng, None)
            .expect("no deadline was set")
    }

    pub fn plan_step_with<R: Rng + ?Sized>(
        &self,
        current: usize,
        belief: &BeliefState,
        true_goal: usize,
        rng: &mut R,
        deadline: Option<Instant>,
    ) -> Option<PlanOutcome> {
        let na = self.family.num_actions();
        let mut nodes = vec![Node {
            state: current,
            belief: belief.probabilities.clone(),
            visits: 0,
            edges: vec![ActionEdge::default(); na],
        }];
        let mut path: Vec<(usize, usize, f64)> = Vec::with_capacity(64);
        let exploration = self.config.exploration_constant * self.return_scale(true_goal);
        for _ in 0..self.config.iterations_per_step {
            if let Some(deadline) = deadline {
                if Instant::now() >= deadline {
                    return None;
                }
            }
            path.clear();
            let mut node_idx = 0;
            let leaf_value;
            loop {
                let action = select_action(&nodes[node_idx], exploration);
                let state = nodes[node_idx].state;
                let next = self.observer.kernel.sample(state, action, rng);
                let mut next_belief = nodes[node_idx].belief.clone();
                self.observer.reweight(&mut next_belief, state, action);
                let reward = self.step_reward(state, action, &next_belief, true_goal);
                path.push((node_idx, action, reward));
                if self.observer.kernel.is_terminal(next) {
                    leaf_value = self.terminal_value(next, &next_belief, true_goal);
                    break;
                }
                let existing = nodes[node_idx].edges[action]
                    .outcomes
                    .iter()
                    .find(|(y, _)| *y == next)
                    .map(|&(_, child)| child);
                match existing {
                    Some(child) => node_idx = child,
                    None => {
                        let child = nodes.len();
                        nodes[node_idx].edges[action].outcomes.push((next, child));
                        leaf_value = self.simulate(next, &next_belief, true_goal, rng);
                        nodes.push(Node {
                            state: next,
                            belief: next_belief,
                            visits: 0,
                            edges: vec![ActionEdge::default(); na],
                        });
                        break;
                    }
                }
            }
            let gamma = self.family.discount();
            let mut ret = leaf_value;
            for &(idx, action, reward) in path.iter().rev() {
                ret = reward + gamma * ret;
                let node = &mut nodes[idx];
                node.visits += 1;
                node.edges[action].visits += 1;
                node.edges[action].value_sum += ret;
            }
        }
        let root = &nodes[0];
        let root_visits: Vec<u32> = root.edges.iter().map(|e| e.visits).collect();
        let root_values = root
            .edges
            .iter()
            .map(|e| if e.visits > 0 { e.value_sum / e.visits as f64 } else { 0.0 })
            .collect();
        let max = root_visits.iter().copied().max().unwrap_or(0);
        let action = root_visits.iter().position(|&v| v == max).unwrap_or(0);
        Some(PlanOutcome {
            action,
            root_visits,
            root_values,
        })
    }

    /// Width of the discounted return range, used to scale UCB exploration.
    fn return_scale(&self, true_goal: usize) -> f64 {
        let task = self
            .family
            .mdp(true_goal)
            .rewards()
            .iter()
            .fold(0.0f64, |m, r| m.max(r.abs()));
        let uniform = vec![1.0 / self.observer.num_goals as f64; self.observer.num_goals];
        let dist = distance_to_goal(&uniform, true_goal, self.config.distance_kind, self.config.kl_cap);
        let scale = (task + self.config.legibility_weight * dist) / (1.0 - self.family.discount());
        if scale > 0.0 {
            scale
        } else {
            1.0
        }
    }

    fn step_reward(&self, state: usize, action: usize, next_belief: &[f64], true_goal: usize) -> f64 {
        let task = self.family.mdp(true_goal).reward(state, action);
        task - self.config.legibility_weight
            * distance_to_goal(next_belief, true_goal, self.config.distance_kind, self.config.kl_cap)
    }

    /// Value of staying forever in an absorbing cell with a frozen belief.
    fn terminal_value(&self, state: usize, belief: &[f64], true_goal: usize) -> f64 {
        let task = self.family.mdp(true_goal).reward(state, 0);
        let dist = distance_to_goal(belief, true_goal, self.config.distance_kind, self.config.kl_cap);
        (task - self.config.legibility_weight * dist) / (1.0 - self.family.discount())
    }

    fn simulate<R: Rng + ?Sized>(&self, start: usize, belief: &[f64], true_goal: usize, rng: &mut R) -> f64 {
        let na = self.family.num_actions();
        let gamma = self.family.discount();
        let mut probs = belief.to_vec();
        let mut state = start;
        let mut total = 0.0;
        let mut discount = 1.0;
        for _ in 0..self.config.rollout_horizon {
            let action = match self.config.rollout_policy {
                RolloutPolicy::Random => rng.gen_range(0..na),
                RolloutPolicy::Boltzmann => {
                    let u: f64 = rng.gen();
                    let mut acc = 0.0;
                    let mut chosen = na - 1;
                    for a in 0..na {
                        acc += self.observer.action_probability(true_goal, state, a);
                        if u < acc {
                            chosen = a;
                            break;
                        }
                    }
                    chosen
                }
            };
            let next = self.observer.kernel.sample(state, action, rng);
            self.observer.reweight(&mut probs, state, action);
            total += discount * self.step_reward(state, action, &probs, true_goal);
            discount *= gamma;
            if self.observer.kernel.is_terminal(next) {
                total += discount * self.terminal_value(next, &probs, true_goal);
                break;
            }
            state = next;
        }
        total
    }

    /// Plans, acts and updates the observer belief until the agent enters a
    /// terminal cell or `horizon` steps elapse.
    pub fn rollout(&self, start: usize, true_goal: usize, horizon: usize) -> Result<LmdpEpisode, LmdpError> {
        let started = Instant::now();
        let deadline = self.config.episode_budget.map(|b| started + b);
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.rng_seed);
        let n_goals = self.family.num_goals();
        let mut belief = BeliefState::uniform(n_goals);
        let mut beliefs = vec![belief.clone()];
        let mut steps = Vec::with_capacity(horizon);
        let mut state = start;
        for t in 0..horizon {
            let outcome = self
                .plan_step_with(state, &belief, true_goal, &mut rng, deadline)
                .ok_or(LmdpError::Timeout {
                    budget: self.config.episode_budget.unwrap_or_default(),
                    steps: t,
                })?;
            let action = outcome.action;
            steps.push(Step { t, state, action });
            let next = self.observer.kernel.sample(state, action, &mut rng);
            belief = self.observer.update(&belief, state, action, next)?.belief;
            beliefs.push(belief.clone());
            state = next;
            if self.observer.kernel.is_terminal(state) {
                break;
            }
        }
        Ok(LmdpEpisode {
            trajectory: Trajectory {
                steps,
                end_state: state,
                true_goal: Some(true_goal),
                source: Some(PolicySource::Lmdp),
            },
            beliefs,
            elapsed: started.elapsed(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct LmdpEpisode {
    pub trajectory: Trajectory,
    /// Beliefs before the first step and after every step.
    pub beliefs: Vec<BeliefState>,
    pub elapsed: Duration,
}

impl LmdpEpisode {
    pub fn reached(&self, state: usize) -> bool {
        self.trajectory.end_state == state
    }
}

pub fn uct_plan_step(
    current: usize,
    belief: &BeliefState,
    true_goal: usize,
    planner: &LmdpPlanner<'_>,
) -> usize {
    planner.plan_step(current, belief, true_goal).action
}

pub fn lmdp_rollout(
    start: usize,
    true_goal: usize,
    planner: &LmdpPlanner<'_>,
    horizon: usize,
) -> Result<LmdpEpisode, LmdpError> {
    planner.rollout(start, true_goal, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::{build_family, parse_maze, Action, Cell};
    use crate::mdp::DEFAULT_TOLERANCE;

    fn corridor() -> (GoalMdpFamily, GoalQTables) {
        let mut spec = parse_maze("A.....B").unwrap();
        spec.failure_probability = 0.0;
        let family = build_family(&spec, 0.9, 1.0, 0.0).unwrap();
        let tables = GoalQTables::solve(&family, 1e-10, 10_000).unwrap();
        (family, tables)
    }

    #[test]
    fn distances_closed_form() {
        let uniform = BeliefState::uniform(2);
        let hot = BeliefState::one_hot(2, 0);
        assert!((belief_distance(&uniform, &hot, DistanceKind::Tv) - 0.5).abs() < 1e-15);
        assert!((belief_distance(&uniform, &hot, DistanceKind::Kl) - 2f64.ln()).abs() < 1e-15);
        assert!((belief_distance(&uniform, &hot, DistanceKind::Euclidean) - 2f64.sqrt() / 2.0).abs() < 1e-15);
        let six = BeliefState::uniform(6);
        let d = belief_distance(&six, &BeliefState::one_hot(6, 4), DistanceKind::Kl);
        assert!((d - 6f64.ln()).abs() < 1e-12);
        assert!((d - 1.7918).abs() < 1e-4);
        for kind in [DistanceKind::Kl, DistanceKind::Euclidean, DistanceKind::Tv] {
            assert_eq!(belief_distance(&hot, &hot, kind), 0.0);
            assert_eq!(belief_distance(&uniform, &uniform, kind), 0.0);
        }
    }

    #[test]
    fn kl_is_capped_on_zero_support() {
        let b = BeliefState::one_hot(3, 1);
        let target = BeliefState::one_hot(3, 0);
        assert_eq!(belief_distance(&b, &target, DistanceKind::Kl), DEFAULT_KL_CAP);
        assert_eq!(belief_distance_capped(&b, &target, DistanceKind::Kl, 5.0), 5.0);
    }

    #[test]
    fn goal_distance_shortcut_agrees() {
        let b = BeliefState::new(vec![0.2, 0.5, 0.3]).unwrap();
        for kind in [DistanceKind::Kl, DistanceKind::Euclidean, DistanceKind::Tv] {
            let full = belief_distance(&b, &BeliefState::one_hot(3, 1), kind);
            assert!((full - distance_to_goal(b.probabilities(), 1, kind, DEFAULT_KL_CAP)).abs() < 1e-15);
        }
    }

    #[test]
    fn hand_computed_corridor_update() {
        let (family, tables) = corridor();
        let observer = ObserverModel::new(&family, &tables, 1.0);
        let mid = 3;
        let right = Action::Right.index();
        // deterministic corridor: V_n(x) = gamma^d * 10, Q_n(x,a) = 0.9 * V_n(next)
        let v = |d: i32| 0.9f64.powi(d) * 10.0;
        let q_row = |goal_col: i32| -> Vec<f64> {
            // up and down are blocked in a single row
            let next = [mid, mid, mid - 1, mid + 1, mid];
            next.iter().map(|&c| 0.9 * v((goal_col - c as i32).abs())).collect()
        };
        let lik = |row: Vec<f64>| {
            let z: f64 = row.iter().map(|q| q.exp()).sum();
            row[right].exp() / z
        };
        let (la, lb) = (lik(q_row(0)), lik(q_row(6)));
        let expected = [la / (la + lb), lb / (la + lb)];
        let up = observer.update(&BeliefState::uniform(2), mid, right, mid + 1).unwrap();
        assert!(!up.degenerate);
        assert!((up.belief.get(0) - expected[0]).abs() < 1e-9);
        assert!((up.belief.get(1) - expected[1]).abs() < 1e-9);
        assert!(up.belief.get(1) > 0.5);
    }

    #[test]
    fn uninformative_and_absorbing_updates() {
        let (family, tables) = corridor();
        let observer = ObserverModel::new(&family, &tables, 1.0);
        // symmetric midpoint, noop is equally likely under both goals
        let up = observer.update(&BeliefState::uniform(2), 3, Action::Noop.index(), 3).unwrap();
        assert!((up.belief.get(0) - 0.5).abs() < 1e-12);
        let hot = BeliefState::one_hot(2, 1);
        let up = observer.update(&hot, 3, Action::Left.index(), 2).unwrap();
        assert_eq!(up.belief, hot);
    }

    #[test]
    fn impossible_transition_is_rejected() {
        let (family, tables) = corridor();
        let observer = ObserverModel::new(&family, &tables, 1.0);
        let err = observer.update(&BeliefState::uniform(2), 3, Action::Right.index(), 1);
        assert!(matches!(err, Err(LmdpError::ImpossibleTransition { .. })));
    }

    #[test]
    fn degenerate_update_keeps_prior() {
        let (family, tables) = corridor();
        let observer = ObserverModel::new(&family, &tables, 1e6);
        // with huge eta, stepping left has ~0 probability under goal B
        let prior = BeliefState::one_hot(2, 1);
        let up = observer.update(&prior, 3, Action::Left.index(), 2).unwrap();
        assert!(up.degenerate);
        assert_eq!(up.belief, prior);
    }

    fn planner_fixture(text: &str, fail: f64, config: UctConfig) -> (GoalMdpFamily, GoalQTables, UctConfig) {
        let mut spec = parse_maze(text).unwrap();
        spec.failure_probability = fail;
        let family = build_family(&spec, 0.9, 1.0, 0.0).unwrap();
        let tables = GoalQTables::solve(&family, DEFAULT_TOLERANCE, 10_000).unwrap();
        (family, tables, config)
    }

    #[test]
    fn root_visits_sum_to_iterations_and_are_deterministic() {
        let (family, tables, config) = planner_fixture(
            "A...\n....\n...B",
            0.15,
            UctConfig {
                iterations_per_step: 300,
                rng_seed: 11,
                ..UctConfig::default()
            },
        );
        let planner = LmdpPlanner::new(&family, ObserverModel::new(&family, &tables, 1.0), config).unwrap();
        let out = planner.plan_step(5, &BeliefState::uniform(2), 1);
        assert_eq!(out.root_visits.iter().sum::<u32>(), 300);
        assert_eq!(out, planner.plan_step(5, &BeliefState::uniform(2), 1));
    }

    #[test]
    fn weight_zero_follows_shortest_path() {
        let (family, tables, config) = planner_fixture(
            "...\n...\n..A",
            0.0,
            UctConfig {
                legibility_weight: 0.0,
                iterations_per_step: 20000,
                rng_seed: 5,
                ..UctConfig::default()
            },
        );
        let planner = LmdpPlanner::new(&family, ObserverModel::new(&family, &tables, 1.0), config).unwrap();
        let ep = planner.rollout(0, 0, 20).unwrap();
        assert_eq!(ep.trajectory.end_state, family.spec.state_of(Cell::new(2, 2)));
        assert_eq!(ep.trajectory.len(), 4);
        assert_eq!(ep.beliefs.len(), 5);
    }

    #[test]
    fn forced_move_and_single_step_horizon() {
        let (family, tables, config) = planner_fixture("A..", 0.0, UctConfig {
            iterations_per_step: 200,
            ..UctConfig::default()
        });
        let planner = LmdpPlanner::new(&family, ObserverModel::new(&family, &tables, 1.0), config).unwrap();
        let ep = planner.rollout(1, 0, 10).unwrap();
        assert_eq!(ep.trajectory.len(), 1);
        assert_eq!(ep.trajectory.end_state, 0);
        let ep = planner.rollout(2, 0, 1).unwrap();
        assert_eq!(ep.trajectory.len(), 1);
        assert_eq!(ep.beliefs.len(), 2);
    }

    #[test]
    fn zero_budget_times_out() {
        let (family, tables, config) = planner_fixture("A...B", 0.15, UctConfig {
            episode_budget: Some(Duration::ZERO),
            ..UctConfig::default()
        });
        let planner = LmdpPlanner::new(&family, ObserverModel::new(&family, &tables, 1.0), config).unwrap();
        assert!(matches!(planner.rollout(2, 0, 10), Err(LmdpError::Timeout { .. })));
    }

    #[test]
    fn config_validation() {
        let bad = UctConfig {
            iterations_per_step: 0,
            ..UctConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = UctConfig {
            legibility_weight: -1.0,
            ..UctConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
