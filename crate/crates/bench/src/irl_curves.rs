//! Goal-prediction accuracy curves for optimal and legible teachers.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use legible_core::fixtures;
use legible_core::irl::{
    incremental_predictions, sample_demo_states, sample_demo_trajectories, TeacherPolicies, DEFAULT_DEMO_COUNT,
    DEFAULT_DEMO_HORIZON, DEFAULT_SAMPLE_COUNT,
};
use legible_core::maze::build_family;
use legible_core::mdp::PolicySource;
use legible_core::GoalQTables;

use crate::config::BenchConfig;
use crate::error::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// Consecutive pairs of one teacher trajectory.
    Trajectory,
    /// Independent random states labelled with the teacher's action.
    Samples,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Trajectory => "trajectory",
            Condition::Samples => "samples",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub condition: String,
    pub teacher: String,
    pub k: usize,
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Correct-prediction counts per revealed-pair count.
#[derive(Debug, Clone)]
struct Tally {
    correct: Vec<usize>,
    trials: usize,
}

impl Tally {
    fn new(max_k: usize) -> Self {
        Self {
            correct: vec![0; max_k],
            trials: 0,
        }
    }

    /// Records one trial; a short demonstration keeps its last prediction
    /// for the remaining counts.
    fn record(&mut self, predictions: &[usize], goal: usize) {
        let Some(&last) = predictions.last() else {
            return;
        };
        for (k, slot) in self.correct.iter_mut().enumerate() {
            let p = predictions.get(k).copied().unwrap_or(last);
            if p == goal {
                *slot += 1;
            }
        }
        self.trials += 1;
    }

    fn points(&self, condition: Condition, teacher: PolicySource) -> Vec<CurvePoint> {
        let n = self.trials as f64;
        self.correct
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let mean = c as f64 / n;
                let std_error = if self.trials > 1 {
                    (mean * (1.0 - mean) / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                CurvePoint {
                    condition: condition.as_str().into(),
                    teacher: teacher.as_str().into(),
                    k: k + 1,
                    mean,
                    std_error,
                    trials: self.trials,
                }
            })
            .collect()
    }
}

pub fn curve_length(condition: Condition) -> usize {
    match condition {
        Condition::Trajectory => DEFAULT_DEMO_HORIZON,
        Condition::Samples => DEFAULT_SAMPLE_COUNT,
    }
}

/// Accuracy curves for both teachers over the given mazes, with
/// `config.irl_scenarios` seeded scenarios per maze, each paired with every goal.
pub fn run_irl(condition: Condition, mazes: &[&str], config: &BenchConfig) -> Result<Vec<CurvePoint>, BenchError> {
    config.validate()?;
    let teachers_order = [PolicySource::Optimal, PolicySource::Legible];
    let max_k = curve_length(condition);
    let mut tallies = [Tally::new(max_k), Tally::new(max_k)];
    for (mi, name) in mazes.iter().enumerate() {
        let spec = fixtures::load(name)?;
        let family = build_family(&spec, config.gamma, 1.0, 0.0)?;
        let q = GoalQTables::solve(&family, config.solver_tolerance, legible_core::mdp::DEFAULT_MAX_ITERATIONS)?;
        let teachers = TeacherPolicies::new(&family, &q, config.beta, config.solver_tolerance)?;
        let starts = spec.start_cells();
        let mut rng = ChaCha8Rng::seed_from_u64(config.sample_seed(mi, usize::MAX));
        for scenario in 0..config.irl_scenarios {
            let seed = config.sample_seed(mi, scenario);
            let start = spec.state_of(starts[rng.gen_range(0..starts.len())]);
            for goal in 0..family.num_goals() {
                for (tally, &teacher) in tallies.iter_mut().zip(&teachers_order) {
                    match condition {
                        Condition::Samples => {
                            // same seed for every goal: one state set, relabelled per goal
                            let demo = sample_demo_states(&family, &teachers, teacher, goal, max_k, seed)?;
                            tally.record(&incremental_predictions(&demo.pairs, &q, config.learner_eta), goal);
                        }
                        Condition::Trajectory => {
                            let demos = sample_demo_trajectories(
                                &family,
                                &teachers,
                                teacher,
                                start,
                                goal,
                                DEFAULT_DEMO_COUNT,
                                max_k,
                                seed ^ goal as u64,
                            );
                            for demo in demos {
                                tally.record(&incremental_predictions(&demo.pairs, &q, config.learner_eta), goal);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(tallies
        .iter()
        .zip(teachers_order)
        .flat_map(|(t, teacher)| t.points(condition, teacher))
        .collect())
}

pub fn write_curve<W: Write>(points: &[CurvePoint], out: W) -> Result<(), BenchError> {
    let mut writer = csv::Writer::from_writer(out);
    for p in points {
        writer.serialize(p)?;
    }
    writer.flush().map_err(|e| BenchError::io("<curve csv>", e))
}

/// Mean accuracy of one teacher at `k` revealed pairs.
pub fn accuracy_at(points: &[CurvePoint], teacher: PolicySource, k: usize) -> Option<f64> {
    points
        .iter()
        .find(|p| p.teacher == teacher.as_str() && p.k == k)
        .map(|p| p.mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tally_carries_last_prediction_forward() {
        let mut t = Tally::new(4);
        t.record(&[1, 0], 0);
        t.record(&[0, 0, 0, 0], 0);
        let points = t.points(Condition::Trajectory, PolicySource::Legible);
        let means: Vec<f64> = points.iter().map(|p| p.mean).collect();
        assert_eq!(means, vec![0.5, 1.0, 1.0, 1.0]);
        assert_eq!(points[0].trials, 2);
        assert!((points[0].std_error - 0.5).abs() < 1e-12);
    }

    #[test]
    fn small_run_has_both_teachers() {
        let config = BenchConfig {
            irl_scenarios: 2,
            ..BenchConfig::desk()
        };
        let points = run_irl(Condition::Samples, &["irl_10x10_1"], &config).unwrap();
        assert_eq!(points.len(), 2 * DEFAULT_SAMPLE_COUNT);
        assert!(points.iter().all(|p| p.trials == 12 && (0.0..=1.0).contains(&p.mean)));
        assert_eq!(points, run_irl(Condition::Samples, &["irl_10x10_1"], &config).unwrap());
        let mut out = Vec::new();
        write_curve(&points, &mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("condition,teacher,k,mean,std_error,trials\n"));
    }
}
