//! Grid mazes with labelled goal cells and the family of per-goal MDPs
//! built over them.
//!
//! Text format: newline-separated rows of equal width over the alphabet
//! `#` (wall), `.` (free), `S` (start) and `A`..`J` (goals). A trailing
//! newline is optional; tabs and carriage returns are rejected.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mdp::{MdpError, TabularMdp, TransitionKernel};

pub const DEFAULT_FAILURE_PROBABILITY: f64 = 0.15;
pub const DEFAULT_GOAL_REWARD: f64 = 1.0;
pub const DEFAULT_STEP_REWARD: f64 = 0.0;
pub const MAX_GOALS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// The five grid actions, in index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Noop,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::Up, Action::Down, Action::Left, Action::Right, Action::Noop];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<Action> {
        Self::ALL.get(idx).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
            Action::Noop => "noop",
        }
    }

    pub fn from_name(name: &str) -> Option<Action> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    pub fn arrow(self) -> char {
        match self {
            Action::Up => '^',
            Action::Down => 'v',
            Action::Left => '<',
            Action::Right => '>',
            Action::Noop => 'o',
        }
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
            Action::Noop => (0, 0),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("maze text is empty")]
    Empty,
    #[error("line {line} has width {width}, expected {expected}")]
    Ragged { line: usize, width: usize, expected: usize },
    #[error("illegal character {ch:?} at row {row}, column {col}")]
    IllegalCharacter { ch: char, row: usize, col: usize },
    #[error("goal label {0} appears more than once")]
    DuplicateLabel(char),
    #[error("more than one start cell")]
    DuplicateStart,
    #[error("maze has no goals")]
    NoGoals,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MazeError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid maze: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] MdpError),
    #[error("no valid (start, goal) pair exists")]
    InfeasibleSampling,
    #[error("no {rows}x{cols} layout with {goals} goals found after {attempts} attempts")]
    GenerationFailed { rows: usize, cols: usize, goals: usize, attempts: usize },
    #[error("goal {goal} is unreachable from free cell {from}")]
    Unreachable { goal: char, from: Cell },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MazeSpec {
    pub rows: usize,
    pub cols: usize,
    pub walls: BTreeSet<Cell>,
    pub goals: BTreeMap<char, Cell>,
    pub failure_probability: f64,
    pub default_start: Option<Cell>,
}

impl MazeSpec {
    pub fn validate(&self) -> Result<(), MazeError> {
        let bad = |msg: String| Err(MazeError::InvalidSpec(msg));
        if self.rows == 0 || self.cols == 0 {
            return bad("maze has no cells".into());
        }
        if self.goals.is_empty() || self.goals.len() > MAX_GOALS {
            return bad(format!("{} goals, expected 1..={MAX_GOALS}", self.goals.len()));
        }
        if !(0.0..1.0).contains(&self.failure_probability) {
            return bad(format!("failure probability {} outside [0, 1)", self.failure_probability));
        }
        for wall in &self.walls {
            if !self.in_bounds(*wall) {
                return bad(format!("wall {wall} out of bounds"));
            }
        }
        let mut seen = BTreeSet::new();
        for (&label, &cell) in &self.goals {
            if !('A'..='J').contains(&label) {
                return bad(format!("goal label {label:?} outside A..J"));
            }
            if !self.in_bounds(cell) || self.walls.contains(&cell) {
                return bad(format!("goal {label} at {cell} is not a free in-bounds cell"));
            }
            if !seen.insert(cell) {
                return bad(format!("goal {label} shares cell {cell} with another goal"));
            }
        }
        if let Some(start) = self.default_start {
            if !self.in_bounds(start) || self.walls.contains(&start) {
                return bad(format!("start {start} is not a free in-bounds cell"));
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.rows * self.cols
    }

    pub fn num_goals(&self) -> usize {
        self.goals.len()
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.in_bounds(cell) && !self.walls.contains(&cell)
    }

    pub fn state_of(&self, cell: Cell) -> usize {
        cell.row * self.cols + cell.col
    }

    pub fn cell_of(&self, state: usize) -> Cell {
        Cell::new(state / self.cols, state % self.cols)
    }

    pub fn goal_labels(&self) -> Vec<char> {
        self.goals.keys().copied().collect()
    }

    pub fn goal_cells(&self) -> Vec<Cell> {
        self.goals.values().copied().collect()
    }

    pub fn goal_index(&self, label: char) -> Option<usize> {
        self.goals.keys().position(|&l| l == label)
    }

    pub fn goal_label(&self, index: usize) -> Option<char> {
        self.goals.keys().nth(index).copied()
    }

    pub fn is_goal(&self, cell: Cell) -> bool {
        self.goals.values().any(|&g| g == cell)
    }

    /// Free cells that are not goals, in row-major order.
    pub fn start_cells(&self) -> Vec<Cell> {
        (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| Cell::new(r, c)))
            .filter(|&c| self.is_free(c) && !self.is_goal(c))
            .collect()
    }

    /// The same layout restricted to its first `k` goal labels.
    pub fn with_first_goals(&self, k: usize) -> MazeSpec {
        let mut out = self.clone();
        out.goals = self.goals.iter().take(k).map(|(&l, &c)| (l, c)).collect();
        out
    }

    /// Where `action` would move from `cell` if it succeeds.
    pub fn target_cell(&self, cell: Cell, action: Action) -> Cell {
        let (dr, dc) = action.delta();
        let row = cell.row as isize + dr;
        let col = cell.col as isize + dc;
        if row < 0 || col < 0 {
            return cell;
        }
        let target = Cell::new(row as usize, col as usize);
        if self.is_free(target) {
            target
        } else {
            cell
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.cols + 1) * self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let cell = Cell::new(r, c);
                let ch = if self.walls.contains(&cell) {
                    '#'
                } else if let Some((&label, _)) = self.goals.iter().find(|(_, &g)| g == cell) {
                    label
                } else if self.default_start == Some(cell) {
                    'S'
                } else {
                    '.'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }

    /// Every goal must be reachable from every free non-goal cell without
    /// passing through another (absorbing) goal.
    pub fn check_reachability(&self) -> Result<(), MazeError> {
        let starts = self.start_cells();
        for (&label, &goal) in &self.goals {
            let mut seen = vec![false; self.num_states()];
            let mut queue = VecDeque::from([goal]);
            seen[self.state_of(goal)] = true;
            while let Some(cell) = queue.pop_front() {
                for action in &Action::ALL[..4] {
                    let next = self.target_cell(cell, *action);
                    let idx = self.state_of(next);
                    if !seen[idx] && !self.is_goal(next) {
                        seen[idx] = true;
                        queue.push_back(next);
                    }
                }
            }
            if let Some(&from) = starts.iter().find(|c| !seen[self.state_of(**c)]) {
                return Err(MazeError::Unreachable { goal: label, from });
            }
        }
        Ok(())
    }
}

impl fmt::Display for MazeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

pub fn parse_maze(text: &str) -> Result<MazeSpec, ParseError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Err(ParseError::Empty);
    }
    let lines: Vec<&str> = body.split('\n').collect();
    let cols = lines[0].chars().count();
    let mut walls = BTreeSet::new();
    let mut goals = BTreeMap::new();
    let mut start = None;
    for (row, line) in lines.iter().enumerate() {
        let width = line.chars().count();
        if width != cols || width == 0 {
            return Err(ParseError::Ragged {
                line: row,
                width,
                expected: cols,
            });
        }
        for (col, ch) in line.chars().enumerate() {
            let cell = Cell::new(row, col);
            match ch {
                '#' => {
                    walls.insert(cell);
                }
                '.' => {}
                'S' => {
                    if start.replace(cell).is_some() {
                        return Err(ParseError::DuplicateStart);
                    }
                }
                'A'..='J' => {
                    if goals.insert(ch, cell).is_some() {
                        return Err(ParseError::DuplicateLabel(ch));
                    }
                }
                _ => return Err(ParseError::IllegalCharacter { ch, row, col }),
            }
        }
    }
    if goals.is_empty() {
        return Err(ParseError::NoGoals);
    }
    Ok(MazeSpec {
        rows: lines.len(),
        cols,
        walls,
        goals,
        failure_probability: DEFAULT_FAILURE_PROBABILITY,
        default_start: start,
    })
}

/// Transition rows for the 5-action grid dynamics. Goal cells are terminal.
pub fn build_kernel(spec: &MazeSpec) -> Result<TransitionKernel, MazeError> {
    spec.validate()?;
    let fail = spec.failure_probability;
    let n = spec.num_states();
    let mut rows = Vec::with_capacity(n * Action::COUNT);
    let mut terminal = vec![false; n];
    for state in 0..n {
        let cell = spec.cell_of(state);
        let absorbing = !spec.is_free(cell) || spec.is_goal(cell);
        terminal[state] = spec.is_goal(cell);
        for action in Action::ALL {
            let target = spec.target_cell(cell, action);
            let row = if absorbing || target == cell {
                vec![(state, 1.0)]
            } else if fail == 0.0 {
                vec![(spec.state_of(target), 1.0)]
            } else {
                vec![(spec.state_of(target), 1.0 - fail), (state, fail)]
            };
            rows.push(row);
        }
    }
    Ok(TransitionKernel::new(n, Action::COUNT, rows, terminal)?)
}

/// One MDP per goal label over a shared kernel.
#[derive(Debug, Clone)]
pub struct GoalMdpFamily {
    pub spec: MazeSpec,
    kernel: Arc<TransitionKernel>,
    mdps: Vec<TabularMdp>,
}

impl GoalMdpFamily {
    pub fn kernel(&self) -> &Arc<TransitionKernel> {
        &self.kernel
    }

    pub fn mdps(&self) -> &[TabularMdp] {
        &self.mdps
    }

    pub fn mdp(&self, goal: usize) -> &TabularMdp {
        &self.mdps[goal]
    }

    pub fn num_goals(&self) -> usize {
        self.mdps.len()
    }

    pub fn num_states(&self) -> usize {
        self.kernel.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.kernel.num_actions()
    }

    pub fn discount(&self) -> f64 {
        self.mdps[0].discount()
    }

    pub fn goal_state(&self, goal: usize) -> usize {
        self.spec.state_of(self.spec.goal_cells()[goal])
    }
}

/// Member `n` earns `goal_reward` for every action taken at its own goal
/// cell and `step_reward` everywhere else. All goal cells are absorbing.
pub fn build_family(
    spec: &MazeSpec,
    discount: f64,
    goal_reward: f64,
    step_reward: f64,
) -> Result<GoalMdpFamily, MazeError> {
    let kernel = Arc::new(build_kernel(spec)?);
    let n = spec.num_states();
    let mdps = spec
        .goal_cells()
        .into_iter()
        .map(|goal| {
            let goal_state = spec.state_of(goal);
            let rewards = (0..n)
                .flat_map(|x| {
                    let r = if x == goal_state { goal_reward } else { step_reward };
                    std::iter::repeat(r).take(Action::COUNT)
                })
                .collect();
            TabularMdp::new(Arc::clone(&kernel), rewards, discount)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GoalMdpFamily {
        spec: spec.clone(),
        kernel,
        mdps,
    })
}

/// Uniform `(start, goal)` samples with the start a free non-goal cell.
pub fn random_scenarios(spec: &MazeSpec, count: usize, rng_seed: u64) -> Result<Vec<(Cell, char)>, MazeError> {
    let starts = spec.start_cells();
    let labels = spec.goal_labels();
    if starts.is_empty() || labels.is_empty() {
        return Err(MazeError::InfeasibleSampling);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok((0..count)
        .map(|_| {
            let start = starts[rng.gen_range(0..starts.len())];
            let goal = labels[rng.gen_range(0..labels.len())];
            (start, goal)
        })
        .collect())
}

/// Seeded random maze: scattered walls, the largest open region kept, and
/// goals placed so that every goal stays reachable from every free cell.
pub fn generate_maze(
    rows: usize,
    cols: usize,
    num_goals: usize,
    wall_density: f64,
    seed: u64,
) -> Result<MazeSpec, MazeError> {
    const ATTEMPTS: usize = 1000;
    let failed = MazeError::GenerationFailed {
        rows,
        cols,
        goals: num_goals,
        attempts: ATTEMPTS,
    };
    if !(1..=MAX_GOALS).contains(&num_goals) || rows * cols < num_goals * 4 || !(0.0..1.0).contains(&wall_density) {
        return Err(failed);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..ATTEMPTS {
        let mut walls = BTreeSet::new();
        for r in 0..rows {
            for c in 0..cols {
                if rng.gen::<f64>() < wall_density {
                    walls.insert(Cell::new(r, c));
                }
            }
        }
        let mut spec = MazeSpec {
            rows,
            cols,
            walls,
            goals: BTreeMap::new(),
            failure_probability: DEFAULT_FAILURE_PROBABILITY,
            default_start: None,
        };
        let region = largest_region(&spec);
        if region.len() < num_goals * 4 {
            continue;
        }
        for r in 0..rows {
            for c in 0..cols {
                let cell = Cell::new(r, c);
                if spec.is_free(cell) && !region.contains(&cell) {
                    spec.walls.insert(cell);
                }
            }
        }
        let min_spacing = (rows + cols) / (2 * num_goals).max(4);
        let mut candidates: Vec<Cell> = region.into_iter().collect();
        candidates.shuffle(&mut rng);
        let labels = ('A'..='J').take(num_goals);
        let mut placed: Vec<Cell> = Vec::new();
        for label in labels {
            let pick = candidates.iter().copied().find(|&cand| {
                placed
                    .iter()
                    .all(|g| g.row.abs_diff(cand.row) + g.col.abs_diff(cand.col) >= min_spacing.max(2))
                    && {
                        let mut trial = spec.clone();
                        trial.goals.insert(label, cand);
                        trial.check_reachability().is_ok()
                    }
            });
            match pick {
                Some(cell) => {
                    spec.goals.insert(label, cell);
                    placed.push(cell);
                }
                None => break,
            }
        }
        if spec.goals.len() == num_goals {
            return Ok(spec);
        }
    }
    Err(failed)
}

fn largest_region(spec: &MazeSpec) -> BTreeSet<Cell> {
    let mut seen = BTreeSet::new();
    let mut best = BTreeSet::new();
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let root = Cell::new(r, c);
            if !spec.is_free(root) || seen.contains(&root) {
                continue;
            }
            let mut region = BTreeSet::from([root]);
            let mut queue = VecDeque::from([root]);
            seen.insert(root);
            while let Some(cell) = queue.pop_front() {
                for action in &Action::ALL[..4] {
                    let next = spec.target_cell(cell, *action);
                    if seen.insert(next) {
                        region.insert(next);
                        queue.push_back(next);
                    }
                }
            }
            if region.len() > best.len() {
                best = region;
            }
        }
    }
    best
}
