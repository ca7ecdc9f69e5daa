use legible_core::fixtures;
use legible_core::maze::{build_family, generate_maze, parse_maze, Action, GoalMdpFamily};
use legible_core::mdp::{rollout, SolveResult};
use legible_core::metrics::polmdp_legibility;
use legible_core::{GoalQTables, LegibleProblem};
use proptest::prelude::*;

fn solved(spec_text: &str, fail: f64) -> (GoalMdpFamily, GoalQTables) {
    let mut spec = parse_maze(spec_text).unwrap();
    spec.failure_probability = fail;
    let family = build_family(&spec, 0.9, 1.0, 0.0).unwrap();
    let q = GoalQTables::solve(&family, 1e-8, 10_000).unwrap();
    (family, q)
}

fn solved_fixture(name: &str) -> (GoalMdpFamily, GoalQTables) {
    let family = build_family(&fixtures::load(name).unwrap(), 0.9, 1.0, 0.0).unwrap();
    let q = GoalQTables::solve(&family, 1e-6, 10_000).unwrap();
    (family, q)
}

/// Sparse iterative evaluation of a deterministic policy under a dense reward table.
fn discounted_value(family: &GoalMdpFamily, rewards: &[f64], actions: &[usize]) -> Vec<f64> {
    let kernel = family.kernel();
    let na = family.num_actions();
    let gamma = family.discount();
    let mut v = vec![0.0; family.num_states()];
    for _ in 0..400 {
        v = (0..v.len())
            .map(|s| {
                let a = actions[s];
                rewards[s * na + a] + gamma * kernel.successors(s, a).iter().map(|&(t, p)| p * v[t]).sum::<f64>()
            })
            .collect();
    }
    v
}

#[test]
fn rewards_sum_to_one_over_targets_on_benchmark_mazes() {
    let mut names: Vec<&str> = fixtures::STATE_SCALING.to_vec();
    names.extend([fixtures::GOAL_SCALING, fixtures::FIGURE_ONE]);
    names.extend(fixtures::IRL_MAZES);
    for name in names {
        let (family, q) = solved_fixture(name);
        let tables: Vec<Vec<f64>> = (0..family.num_goals())
            .map(|g| LegibleProblem::new(&family, &q, g, 1.0).unwrap().reward_table())
            .collect();
        for i in 0..tables[0].len() {
            let total: f64 = tables.iter().map(|t| t[i]).sum();
            assert!((total - 1.0).abs() < 1e-9, "{name} entry {i}");
        }
    }
}

#[test]
fn legible_policy_beats_optimal_on_legible_return() {
    let mut names: Vec<&str> = fixtures::STATE_SCALING.to_vec();
    names.extend([fixtures::GOAL_SCALING, fixtures::FIGURE_ONE]);
    names.extend(fixtures::IRL_MAZES);
    for name in names {
        let (family, q) = solved_fixture(name);
        for g in 0..family.num_goals() {
            let problem = LegibleProblem::new(&family, &q, g, 1.0).unwrap();
            let rewards = problem.reward_table();
            let (_, legible) = problem.solve(1e-8).unwrap();
            let optimal = q.optimal_policy(g);
            let acts = |p: &legible_core::Policy| -> Vec<usize> {
                (0..family.num_states()).map(|s| p.action(s).unwrap()).collect()
            };
            let v_leg = discounted_value(&family, &rewards, &acts(&legible));
            let v_opt = discounted_value(&family, &rewards, &acts(&optimal));
            for s in 0..family.num_states() {
                assert!(v_leg[s] >= v_opt[s] - 1e-6, "{name} goal {g} state {s}");
            }
        }
    }
}

#[test]
fn corridor_midpoint_moves_toward_target() {
    let (family, q) = solved("A.....B", 0.0);
    let mid = 3;
    let step = |x: usize, a: Action| -> usize {
        match a {
            Action::Left if x > 0 => x - 1,
            Action::Right if x < 6 => x + 1,
            _ => x,
        }
    };
    let actions = [Action::Up, Action::Down, Action::Left, Action::Right, Action::Noop];
    for (target, toward) in [(0, Action::Left), (1, Action::Right)] {
        let problem = LegibleProblem::new(&family, &q, target, 1.0).unwrap();
        let mut best = (f64::MIN, Action::Noop);
        for a0 in actions {
            for a1 in actions {
                let x1 = step(mid, a0);
                let value = problem.legible_reward(mid, a0.index()) + 0.9 * problem.legible_reward(x1, a1.index());
                if value > best.0 + 1e-12 {
                    best = (value, a0);
                }
            }
        }
        assert_eq!(best.1, toward);
        let (_, policy) = problem.solve(1e-10).unwrap();
        assert_eq!(policy.action(mid), Some(toward.index()));
    }
}

#[test]
fn figure_one_legible_trajectories_score_higher() {
    let (family, q) = solved_fixture(fixtures::FIGURE_ONE);
    let spec = &family.spec;
    let start = spec.state_of(spec.default_start.unwrap());
    // B's shortest path runs past A
    let g = spec.goal_index('B').unwrap();
    let problem = LegibleProblem::new(&family, &q, g, 1.0).unwrap();
    let (_, legible) = problem.solve(1e-8).unwrap();
    let optimal = q.optimal_policy(g);
    let mean = |policy: &legible_core::Policy| -> f64 {
        (0..100)
            .map(|seed| {
                let mut t = rollout(family.mdp(g), policy, start, 60, seed);
                t.true_goal = Some(g);
                polmdp_legibility(&t, &problem).unwrap()
            })
            .sum::<f64>()
            / 100.0
    };
    assert!(mean(&legible) > mean(&optimal));
}

fn random_family() -> impl Strategy<Value = (GoalMdpFamily, GoalQTables)> {
    (4usize..7, 4usize..7, 2usize..4, any::<u64>()).prop_map(|(rows, cols, goals, seed)| {
        let spec = generate_maze(rows, cols, goals, 0.15, seed).unwrap();
        let family = build_family(&spec, 0.9, 1.0, 0.0).unwrap();
        let q = GoalQTables::solve(&family, 1e-8, 10_000).unwrap();
        (family, q)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rewards_are_strictly_inside_unit_interval((family, q) in random_family(), beta in 0.0f64..3.0) {
        for g in 0..family.num_goals() {
            let table = LegibleProblem::new(&family, &q, g, beta).unwrap().reward_table();
            prop_assert!(table.iter().all(|&r| r > 0.0 && r < 1.0));
        }
    }

    #[test]
    fn raising_the_prior_raises_the_reward((family, q) in random_family(), bump in 0.0f64..0.9) {
        let n = family.num_goals();
        let uniform = vec![1.0 / n as f64; n];
        let mut skewed: Vec<f64> = uniform.iter().map(|p| p * (1.0 - bump)).collect();
        skewed[0] += bump;
        let base = LegibleProblem::with_prior(&family, &q, 0, 1.0, uniform).unwrap();
        let raised = LegibleProblem::with_prior(&family, &q, 0, 1.0, skewed).unwrap();
        for (b, r) in base.reward_table().iter().zip(raised.reward_table()) {
            prop_assert!(r >= b - 1e-15);
        }
    }

    #[test]
    fn per_pair_shift_leaves_rewards_unchanged((family, q) in random_family(), shifts in prop::collection::vec(-50.0f64..50.0, 125)) {
        let na = family.num_actions();
        let shifted = GoalQTables::from_results(
            q.results()
                .iter()
                .map(|r| SolveResult {
                    q_table: r.q_table.iter().enumerate().map(|(i, v)| v + shifts[i % shifts.len()]).collect(),
                    ..r.clone()
                })
                .collect(),
        );
        for g in 0..family.num_goals() {
            let a = LegibleProblem::new(&family, &q, g, 1.0).unwrap();
            let b = LegibleProblem::new(&family, &shifted, g, 1.0).unwrap();
            for s in 0..family.num_states() {
                for act in 0..na {
                    prop_assert!((a.legible_reward(s, act) - b.legible_reward(s, act)).abs() < 1e-9);
                }
            }
        }
    }
}
