//! Legible sequential decision making over multi-goal grid worlds.
//!
//! - [`mdp`]: tabular MDPs, value iteration, greedy and Boltzmann policies.
//! - [`maze`]: maze text format and the per-goal MDP family.
//! - [`legible`]: legible rewards and policies.
//! - [`lmdp`]: observer-belief baseline planned online with UCT.
//! - [`metrics`]: trajectory-level legibility scores.
//! - [`irl`]: goal inference and gradient reward recovery from demonstrations.
//! - [`fixtures`]: benchmark mazes shipped with the crate.



pub mod fixtures;
pub mod irl;
pub mod legible;
pub mod lmdp;

pub mod maze;
pub mod mdp;
pub mod metrics;


pub use legible::{GoalQTables, LegibleProblem};
pub use maze::{Action, Cell, GoalMdpFamily, MazeSpec};
pub use mdp::{Policy, PolicySource, SolveResult, TabularMdp, Trajectory};
