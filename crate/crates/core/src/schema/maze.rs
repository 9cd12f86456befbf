//! Grid maze as an object-oriented domain. The agent object has `x` and `y`
//! attributes; each move action has three effects (intended direction, slip
//! right, slip left) and a blocked effect leaves the agent in place.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::schema::domain::SchemaDomain;
use crate::schema::oomdp::{apply_updates, AttrUpdate, ObjectState};

pub const DEFAULT_MAZE: &str = include_str!("../../domains/maze.txt");

pub const STEP_REWARD: f64 = -0.01;
pub const GOAL_REWARD: f64 = 1.0;
pub const MOVE_PROBS: [f64; 3] = [0.8, 0.1, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::South, Direction::East, Direction::West];

    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::North => (0, -1),
            Direction::South => (0, 1),
            Direction::East => (1, 0),
            Direction::West => (-1, 0),
        }
    }

    pub fn right(self) -> Direction {
        match self {
            Direction::North => Direction::East,
            Direction::East => Direction::South,
            Direction::South => Direction::West,
            Direction::West => Direction::North,
        }
    }

    pub fn left(self) -> Direction {
        self.right().right().right()
    }

    pub fn letter(self) -> &'static str {
        match self {
            Direction::North => "N",
            Direction::South => "S",
            Direction::East => "E",
            Direction::West => "W",
        }
    }

    /// Effect order of the move schema.
    pub fn effects(self) -> [Direction; 3] {
        [self, self.right(), self.left()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MazeGrid {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    start: (usize, usize),
    goal: (usize, usize),
}

impl MazeGrid {
    /// `#` wall, `.` open, `S` start, `G` goal. Rows must have equal length;
    /// the border outside the grid is implicitly walled.
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().map(str::trim_end).collect();
        let last = lines.iter().rposition(|l| !l.is_empty()).map_or(0, |i| i + 1);
        let lines = &lines[..last];
        if lines.is_empty() {
            return Err(Error::parse(1, 1, "empty maze"));
        }
        let width = lines[0].chars().count();
        let mut walls = Vec::new();
        let mut start = None;
        let mut goal = None;
        for (y, line) in lines.iter().enumerate() {
            let row_len = line.chars().count();
            if row_len != width {
                return Err(Error::parse(
                    y + 1,
                    row_len.min(width) + 1,
                    format!("row has {row_len} cells, expected {width}"),
                ));
            }
            for (x, c) in line.chars().enumerate() {
                let mark = |slot: &mut Option<(usize, usize)>, what: &str| {
                    if slot.is_some() {
                        return Err(Error::parse(y + 1, x + 1, format!("second {what} cell")));
                    }
                    *slot = Some((x, y));
                    Ok(())
                };
                match c {
                    '#' => walls.push(true),
                    '.' => walls.push(false),
                    'S' => {
                        mark(&mut start, "start")?;
                        walls.push(false);
                    }
                    'G' => {
                        mark(&mut goal, "goal")?;
                        walls.push(false);
                    }
                    other => return Err(Error::parse(y + 1, x + 1, format!("unexpected character `{other}`"))),
                }
            }
        }
        let end = (lines.len(), width + 1);
        Ok(MazeGrid {
            width,
            height: lines.len(),
            walls,
            start: start.ok_or_else(|| Error::parse(end.0, end.1, "maze has no start cell `S`"))?,
            goal: goal.ok_or_else(|| Error::parse(end.0, end.1, "maze has no goal cell `G`"))?,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn start(&self) -> (usize, usize) {
        self.start
    }

    pub fn goal(&self) -> (usize, usize) {
        self.goal
    }

    pub fn is_open(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && !self.walls[y as usize * self.width + x as usize]
    }

    pub fn blocked(&self, x: i64, y: i64, dir: Direction) -> bool {
        let (dx, dy) = dir.delta();
        !self.is_open(x + dx, y + dy)
    }

    /// Set of blocked directions around a cell.
    pub fn wall_configuration(&self, x: i64, y: i64) -> BTreeSet<Direction> {
        Direction::ALL.into_iter().filter(|&d| self.blocked(x, y, d)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct MazeDomain {
    grid: MazeGrid,
}

impl MazeDomain {
    pub fn new(grid: MazeGrid) -> Self {
        MazeDomain { grid }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(Self::new(MazeGrid::parse(text)?))
    }

    pub fn grid(&self) -> &MazeGrid {
        &self.grid
    }

    pub fn state_at(x: usize, y: usize) -> ObjectState {
        ObjectState::new().with_object("agent", &[("x", x as i64), ("y", y as i64)])
    }

    pub fn position(state: &ObjectState) -> (i64, i64) {
        (
            state.get("agent", "x").expect("maze state has agent.x"),
            state.get("agent", "y").expect("maze state has agent.y"),
        )
    }
}

/// The bundled 5×5 maze.
pub fn make_maze() -> MazeDomain {
    MazeDomain::parse(DEFAULT_MAZE).expect("bundled maze is valid")
}

impl SchemaDomain for MazeDomain {
    type State = ObjectState;

    fn action_names(&self) -> Vec<String> {
        Direction::ALL.iter().map(|d| d.letter().to_string()).collect()
    }

    fn learner_of(&self, action: usize) -> usize {
        action
    }

    fn learner_dims(&self) -> Vec<usize> {
        vec![3; 4]
    }

    fn applicable(&self, _state: &ObjectState, action: usize) -> bool {
        action < 4
    }

    fn outcomes(&self, state: &ObjectState, action: usize) -> Result<Vec<ObjectState>> {
        let (x, y) = Self::position(state);
        Direction::ALL[action]
            .effects()
            .into_iter()
            .map(|dir| {
                if self.grid.blocked(x, y, dir) {
                    Ok(state.clone())
                } else {
                    let (dx, dy) = dir.delta();
                    apply_updates(state, &[AttrUpdate::add("agent", "x", dx), AttrUpdate::add("agent", "y", dy)])
                }
            })
            .collect()
    }

    fn reward(&self, _state: &ObjectState, _action: usize, next: &ObjectState) -> f64 {
        if self.is_terminal(next) {
            GOAL_REWARD
        } else {
            STEP_REWARD
        }
    }

    fn is_terminal(&self, state: &ObjectState) -> bool {
        let (x, y) = Self::position(state);
        (x as usize, y as usize) == self.grid.goal
    }

    fn effect_probs(&self, _learner: usize) -> &[f64] {
        &MOVE_PROBS
    }

    fn initial_states(&self) -> Vec<ObjectState> {
        vec![Self::state_at(self.grid.start.0, self.grid.start.1)]
    }
}
