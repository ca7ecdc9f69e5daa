use legible_core::fixtures;
use legible_core::lmdp::{BeliefState, DistanceKind, LmdpPlanner, ObserverModel, UctConfig};
use legible_core::maze::{build_family, generate_maze, parse_maze, random_scenarios, GoalMdpFamily};
use legible_core::mdp::{argmax_lowest, greedy_policy, rollout};
use legible_core::metrics::{miura_legibility, polmdp_legibility};
use legible_core::{GoalQTables, LegibleProblem};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn solved(text: &str) -> (GoalMdpFamily, GoalQTables) {
    let family = build_family(&parse_maze(text).unwrap(), 0.9, 1.0, 0.0).unwrap();
    let q = GoalQTables::solve(&family, 1e-10, 10_000).unwrap();
    (family, q)
}

#[test]
fn expected_true_goal_belief_never_drops() {
    let (family, q) = solved("A.....B");
    let observer = ObserverModel::new(&family, &q, 1.0);
    let truth = 1;
    let horizon = 15;
    let runs = 1000;
    let mut sums = vec![0.0; horizon + 1];
    for seed in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut belief = BeliefState::uniform(2);
        let mut state = 3;
        sums[0] += belief.get(truth);
        for slot in sums.iter_mut().skip(1) {
            if !family.kernel().is_terminal(state) {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut action = 4;
                for a in 0..5 {
                    acc += observer.action_probability(truth, state, a);
                    if u < acc {
                        action = a;
                        break;
                    }
                }
                let next = family.kernel().sample(state, action, &mut rng);
                belief = observer.update(&belief, state, action, next).unwrap().belief;
                state = next;
            }
            *slot += belief.get(truth);
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / runs as f64).collect();
    for pair in means.windows(2) {
        assert!(pair[1] >= pair[0] - 0.02, "{means:?}");
    }
    assert!(means[horizon] > 0.5);
}

#[test]
fn lmdp_episodes_raise_belief_on_the_small_maze() {
    let spec = fixtures::load("miura_5x8").unwrap();
    let family = build_family(&spec, 0.9, 1.0, 0.0).unwrap();
    let q = GoalQTables::solve(&family, 1e-6, 10_000).unwrap();
    let scenarios = random_scenarios(&spec, 50, 7).unwrap();
    let mut total = 0.0;
    for (i, (start, goal)) in scenarios.iter().enumerate() {
        let g = spec.goal_index(*goal).unwrap();
        let config = UctConfig {
            iterations_per_step: 500,
            rng_seed: i as u64,
            ..UctConfig::default()
        };
        let planner = LmdpPlanner::new(&family, ObserverModel::new(&family, &q, 1.0), config).unwrap();
        let episode = planner.rollout(spec.state_of(*start), g, 4 * (spec.rows + spec.cols)).unwrap();
        assert_eq!(episode.beliefs.len(), episode.trajectory.len() + 1);
        total += episode.beliefs.last().unwrap().get(g);
    }
    assert!(total / 50.0 > 1.0 / 3.0);
}

#[test]
fn single_goal_uct_agrees_with_greedy_on_clear_states() {
    let (family, q) = solved(".#..\n...#\n.#..\n...A");
    let greedy = greedy_policy(q.goal(0));
    let config = UctConfig {
        iterations_per_step: 5000,
        ..UctConfig::default()
    };
    let planner = LmdpPlanner::new(&family, ObserverModel::new(&family, &q, 1.0), config).unwrap();
    let belief = BeliefState::uniform(1);
    let mut checked = 0;
    for cell in family.spec.start_cells() {
        let s = family.spec.state_of(cell);
        let mut row = q.goal(0).q_row(s).to_vec();
        let best = argmax_lowest(&row);
        row[best] = f64::MIN;
        if q.goal(0).q(s, best) - row.iter().copied().fold(f64::MIN, f64::max) > 0.1 {
            assert_eq!(Some(planner.plan_step(s, &belief, 0).action), greedy.action(s), "{cell:?}");
            checked += 1;
        }
    }
    assert!(checked > 3);
}

fn random_setup() -> impl Strategy<Value = (GoalMdpFamily, GoalQTables, u64)> {
    (4usize..7, 4usize..7, 1usize..4, any::<u64>()).prop_map(|(rows, cols, goals, seed)| {
        let spec = generate_maze(rows, cols, goals, 0.15, seed).unwrap();
        let family = build_family(&spec, 0.9, 1.0, 0.0).unwrap();
        let q = GoalQTables::solve(&family, 1e-8, 10_000).unwrap();
        (family, q, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn updates_stay_on_the_simplex((family, q, seed) in random_setup(), eta in 0.0f64..50.0, weights in prop::collection::vec(0.0f64..1.0, 3)) {
        let observer = ObserverModel::new(&family, &q, eta);
        let n = family.num_goals();
        let total: f64 = weights[..n].iter().sum::<f64>() + 1e-3;
        let mut belief = BeliefState::new(weights[..n].iter().map(|w| (w + 1e-3 / n as f64) / total).collect()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let starts = family.spec.start_cells();
        let mut state = family.spec.state_of(starts[rng.gen_range(0..starts.len())]);
        for _ in 0..30 {
            let action = rng.gen_range(0..5);
            let next = family.kernel().sample(state, action, &mut rng);
            belief = observer.update(&belief, state, action, next).unwrap().belief;
            let probs = belief.probabilities();
            prop_assert!(probs.iter().all(|&p| p >= 0.0));
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            state = next;
        }
    }

    #[test]
    fn trajectory_scores_respect_their_ranges((family, q, seed) in random_setup()) {
        let observer = ObserverModel::new(&family, &q, 1.0);
        let starts = family.spec.start_cells();
        let start = family.spec.state_of(starts[seed as usize % starts.len()]);
        for g in 0..family.num_goals() {
            let problem = LegibleProblem::new(&family, &q, g, 1.0).unwrap();
            let mut t = rollout(family.mdp(g), &q.optimal_policy(g), start, 30, seed);
            t.true_goal = Some(g);
            let pol = polmdp_legibility(&t, &problem).unwrap();
            prop_assert!(pol > 0.0 && pol <= 1.0);
            prop_assert_eq!(pol == 1.0, family.num_goals() == 1);
            for kind in [DistanceKind::Kl, DistanceKind::Euclidean, DistanceKind::Tv] {
                let m = miura_legibility(&t, &observer, g, kind).unwrap();
                prop_assert!(m <= 0.0);
                prop_assert_eq!(m == 0.0, family.num_goals() == 1);
            }
        }
    }
}
