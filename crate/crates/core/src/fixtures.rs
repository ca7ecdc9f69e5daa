//! Benchmark mazes shipped with the crate.
//!
//! Procedural layouts come from [`generate_maze`] with the seeds recorded in
//! [`GENERATED`]; `figure1` and `miura_5x8` are drawn by hand.

use thiserror::Error;

use crate::maze::{parse_maze, MazeSpec, ParseError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FixtureError {
    #[error("no fixture named {0:?}")]
    Missing(String),
    #[error("fixture {name} is malformed: {source}")]
    Malformed { name: String, source: ParseError },
}

/// Layouts and the generator arguments that produced them:
/// `(name, rows, cols, goals, wall density, seed)`.
pub const GENERATED: &[(&str, usize, usize, usize, f64, u64)] = &[
    ("states_10x10", 10, 10, 6, 0.2, 10),
    ("states_25x25", 25, 25, 6, 0.2, 25),
    ("states_40x40", 40, 40, 6, 0.2, 40),
    ("states_50x50", 50, 50, 6, 0.2, 50),
    ("states_60x60", 60, 60, 6, 0.2, 60),
    ("states_75x75", 75, 75, 6, 0.2, 75),
    ("goals_25x25", 25, 25, 10, 0.2, 2525),
    ("irl_10x10_1", 10, 10, 6, 0.2, 101),
    ("irl_10x10_2", 10, 10, 6, 0.2, 102),
    ("irl_10x10_3", 10, 10, 6, 0.2, 103),
    ("irl_10x10_4", 10, 10, 6, 0.2, 104),
];

const SOURCES: &[(&str, &str)] = &[
    ("figure1", include_str!("../fixtures/figure1.maze")),
    ("miura_5x8", include_str!("../fixtures/miura_5x8.maze")),
    ("states_10x10", include_str!("../fixtures/states_10x10.maze")),
    ("states_25x25", include_str!("../fixtures/states_25x25.maze")),
    ("states_40x40", include_str!("../fixtures/states_40x40.maze")),
    ("states_50x50", include_str!("../fixtures/states_50x50.maze")),
    ("states_60x60", include_str!("../fixtures/states_60x60.maze")),
    ("states_75x75", include_str!("../fixtures/states_75x75.maze")),
    ("goals_25x25", include_str!("../fixtures/goals_25x25.maze")),
    ("irl_10x10_1", include_str!("../fixtures/irl_10x10_1.maze")),
    ("irl_10x10_2", include_str!("../fixtures/irl_10x10_2.maze")),
    ("irl_10x10_3", include_str!("../fixtures/irl_10x10_3.maze")),
    ("irl_10x10_4", include_str!("../fixtures/irl_10x10_4.maze")),
];

/// State-scaling series, smallest first.
pub const STATE_SCALING: [&str; 7] = [
    "miura_5x8",
    "states_10x10",
    "states_25x25",
    "states_40x40",
    "states_50x50",
    "states_60x60",
    "states_75x75",
];

pub const GOAL_SCALING: &str = "goals_25x25";
pub const GOAL_COUNTS: std::ops::RangeInclusive<usize> = 3..=10;
pub const IRL_MAZES: [&str; 4] = ["irl_10x10_1", "irl_10x10_2", "irl_10x10_3", "irl_10x10_4"];
pub const FIGURE_ONE: &str = "figure1";
/// 6-goal layout used for exported guessing-game episodes.
pub const STUDY: &str = "states_10x10";

pub fn names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(name, _)| *name)
}

pub fn text(name: &str) -> Result<&'static str, FixtureError> {
    SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| FixtureError::Missing(name.to_string()))
}

pub fn load(name: &str) -> Result<MazeSpec, FixtureError> {
    parse_maze(text(name)?).map_err(|source| FixtureError::Malformed {
        name: name.to_string(),
        source,
    })
}

/// The goal-scaling layout restricted to its first `goals` labels.
pub fn goal_scaling(goals: usize) -> Result<MazeSpec, FixtureError> {
    Ok(load(GOAL_SCALING)?.with_first_goals(goals))
}
