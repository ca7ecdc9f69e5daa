#![allow(dead_code)]

use legible_core::maze::{Cell, MazeSpec};

pub const MOVES: [(i64, i64); 5] = [(-1, 0), (1, 0), (0, -1), (0, 1), (0, 0)];

/// Dense `P[s][a][s']` from first principles: walls and goals self-loop, moves
/// into free in-bounds cells fail in place with the spec's probability.
pub fn dense_kernel(spec: &MazeSpec) -> Vec<Vec<Vec<f64>>> {
    let n = spec.rows * spec.cols;
    let goals: Vec<Cell> = spec.goals.values().copied().collect();
    let mut p = vec![vec![vec![0.0; n]; 5]; n];
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let s = r * spec.cols + c;
            let here = Cell { row: r, col: c };
            let stuck = spec.walls.contains(&here) || goals.contains(&here);
            for (a, (dr, dc)) in MOVES.iter().enumerate() {
                let (tr, tc) = (r as i64 + dr, c as i64 + dc);
                let open = !stuck
                    && (dr, dc) != (&0, &0)
                    && tr >= 0
                    && tc >= 0
                    && (tr as usize) < spec.rows
                    && (tc as usize) < spec.cols
                    && !spec.walls.contains(&Cell {
                        row: tr as usize,
                        col: tc as usize,
                    });
                if open {
                    let t = tr as usize * spec.cols + tc as usize;
                    p[s][a][t] += 1.0 - spec.failure_probability;
                    p[s][a][s] += spec.failure_probability;
                } else {
                    p[s][a][s] = 1.0;
                }
            }
        }
    }
    p
}

/// Finite-horizon backward induction for goal `goal_cell`: reward 1 for any
/// action at the goal, 0 elsewhere.
pub fn horizon_q(spec: &MazeSpec, goal_cell: Cell, gamma: f64, horizon: usize) -> Vec<Vec<f64>> {
    let p = dense_kernel(spec);
    let n = p.len();
    let g = goal_cell.row * spec.cols + goal_cell.col;
    let reward = |s: usize| if s == g { 1.0 } else { 0.0 };
    let mut v = vec![0.0; n];
    let mut q = vec![vec![0.0; 5]; n];
    for _ in 0..horizon {
        for s in 0..n {
            for a in 0..5 {
                let future: f64 = (0..n).map(|t| p[s][a][t] * v[t]).sum();
                q[s][a] = reward(s) + gamma * future;
            }
        }
        v = q.iter().map(|row| row.iter().copied().fold(f64::MIN, f64::max)).collect();
    }
    q
}

/// Iterative policy evaluation of a deterministic policy for an arbitrary
/// state-action reward, independent of the crate's solvers.
pub fn evaluate_deterministic(
    p: &[Vec<Vec<f64>>],
    reward: impl Fn(usize, usize) -> f64,
    policy: &[usize],
    gamma: f64,
    sweeps: usize,
) -> Vec<f64> {
    let n = p.len();
    let mut v = vec![0.0; n];
    for _ in 0..sweeps {
        v = (0..n)
            .map(|s| {
                let a = policy[s];
                reward(s, a) + gamma * p[s][a].iter().zip(&v).map(|(pr, vt)| pr * vt).sum::<f64>()
            })
            .collect();
    }
    v
}
