use std::collections::VecDeque;
use std::fmt;

use rand::Rng;

use super::{GoalEnv, Step};
use crate::domain::{sparse_reward, Action, ActionSpace, EnvSpec, Interval};
use crate::error::{Error, Result};
use crate::rng::RngHandle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Up, down, left, right. Row 0 is the top row of a map file.
pub const GRID_ACTIONS: [(i64, i64); 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];

/// Four-connected grid world. States and goals are the agent cell scaled to
/// `[0, 1]` per axis; success means standing on the goal cell.
#[derive(Clone, Debug)]
pub struct GridNavEnv {
    width: usize,
    height: usize,
    free: Vec<bool>,
    free_cells: Vec<Cell>,
    start: Cell,
    agent: Cell,
    goal: Option<Vec<f64>>,
    steps: usize,
    done: bool,
    spec: EnvSpec,
}

impl GridNavEnv {
    pub fn new(
        width: usize,
        height: usize,
        walls: &[Cell],
        start: Cell,
        horizon: usize,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Map("grid must be at least 1x1".into()));
        }
        let mut free = vec![true; width * height];
        for w in walls {
            if w.x >= width || w.y >= height {
                return Err(Error::InvalidCell(w.x as i64, w.y as i64));
            }
            free[w.y * width + w.x] = false;
        }
        if start.x >= width || start.y >= height || !free[start.y * width + start.x] {
            return Err(Error::Map(format!("start cell {start} is not free")));
        }
        let free_cells: Vec<Cell> = (0..height)
            .flat_map(|y| (0..width).map(move |x| Cell::new(x, y)))
            .filter(|c| free[c.y * width + c.x])
            .collect();

        let denom = |n: usize| (n.max(2) - 1) as f64;
        let mut spacing = f64::INFINITY;
        if width > 1 {
            spacing = spacing.min(1.0 / denom(width));
        }
        if height > 1 {
            spacing = spacing.min(1.0 / denom(height));
        }
        let epsilon = if spacing.is_finite() {
            0.5 * spacing
        } else {
            0.5
        };
        let spec = EnvSpec::new(
            2,
            ActionSpace::Discrete { count: 4 },
            2,
            horizon,
            epsilon,
            vec![
                Interval {
                    low: 0.0,
                    high: 1.0
                };
                2
            ],
        )?;

        let env = Self {
            width,
            height,
            free,
            free_cells,
            start,
            agent: start,
            goal: None,
            steps: 0,
            done: true,
            spec,
        };
        let reach = env.distances_from(start)?;
        if let Some(c) = env
            .free_cells
            .iter()
            .find(|c| reach[c.y * width + c.x].is_none())
        {
            return Err(Error::Map(format!(
                "cell {c} is unreachable from the start"
            )));
        }
        Ok(env)
    }

    /// Parses a rectangular map: `#` wall, `.` free, `S` start (exactly one).
    pub fn from_map(text: &str, horizon: usize) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .collect();
        let Some(first) = rows.first() else {
            return Err(Error::Map("map is empty".into()));
        };
        let width = first.chars().count();
        let mut walls = Vec::new();
        let mut start = None;
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::Map(format!("row {y} has a different width")));
            }
            for (x, ch) in row.chars().enumerate() {
                match ch {
                    '#' => walls.push(Cell::new(x, y)),
                    '.' => {}
                    'S' => {
                        if start.replace(Cell::new(x, y)).is_some() {
                            return Err(Error::Map("more than one start cell".into()));
                        }
                    }
                    other => return Err(Error::Map(format!("unexpected character {other:?}"))),
                }
            }
        }
        let start = start.ok_or_else(|| Error::Map("no start cell".into()))?;
        Self::new(width, rows.len(), &walls, start, horizon)
    }

    /// Two rooms split by a vertical wall at `x = width / 2` with a single
    /// doorway at row `door_y`.
    pub fn two_rooms(
        width: usize,
        height: usize,
        door_y: usize,
        start: Cell,
        horizon: usize,
    ) -> Result<Self> {
        if width < 3 || door_y >= height {
            return Err(Error::Map(
                "two-room layout needs width >= 3 and a door inside the grid".into(),
            ));
        }
        let wx = width / 2;
        let walls: Vec<Cell> = (0..height)
            .filter(|&y| y != door_y)
            .map(|y| Cell::new(wx, y))
            .collect();
        Self::new(width, height, &walls, start, horizon)
    }

    /// The default navigation task: 20x20, two rooms, horizon 50.
    pub fn default_two_rooms() -> Self {
        Self::two_rooms(20, 20, 10, Cell::new(2, 10), 50).expect("default layout is valid")
    }

    /// Same layout and horizon with a different start cell.
    pub fn with_start(&self, start: Cell) -> Result<Self> {
        let walls: Vec<Cell> = (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| Cell::new(x, y)))
            .filter(|c| !self.free[c.y * self.width + c.x])
            .collect();
        Self::new(self.width, self.height, &walls, start, self.spec.horizon)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn agent(&self) -> Cell {
        self.agent
    }

    pub fn free_cells(&self) -> &[Cell] {
        &self.free_cells
    }

    pub fn is_free(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.free[y as usize * self.width + x as usize]
    }

    fn scale(&self) -> (f64, f64) {
        (
            (self.width.max(2) - 1) as f64,
            (self.height.max(2) - 1) as f64,
        )
    }

    pub fn encode(&self, cell: Cell) -> Vec<f64> {
        let (sx, sy) = self.scale();
        let x = if self.width > 1 {
            cell.x as f64 / sx
        } else {
            0.0
        };
        let y = if self.height > 1 {
            cell.y as f64 / sy
        } else {
            0.0
        };
        vec![x, y]
    }

    /// Nearest cell to an encoded state or goal; errors when off-grid or blocked.
    pub fn decode(&self, v: &[f64]) -> Result<Cell> {
        if v.len() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                got: v.len(),
            });
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidGoal(format!("{v:?} is not finite")));
        }
        let (sx, sy) = self.scale();
        let x = (v[0] * sx).round() as i64;
        let y = (v[1] * sy).round() as i64;
        if !self.is_free(x, y) {
            return Err(Error::InvalidCell(x, y));
        }
        Ok(Cell::new(x as usize, y as usize))
    }

    /// BFS distances from `from` to every cell, row-major; `None` for walls and
    /// unreachable cells.
    pub fn distances_from(&self, from: Cell) -> Result<Vec<Option<usize>>> {
        if !self.is_free(from.x as i64, from.y as i64) {
            return Err(Error::InvalidCell(from.x as i64, from.y as i64));
        }
        let mut dist = vec![None; self.width * self.height];
        let mut queue = VecDeque::new();
        dist[from.y * self.width + from.x] = Some(0);
        queue.push_back(from);
        while let Some(c) = queue.pop_front() {
            let d = dist[c.y * self.width + c.x].unwrap();
            for (dx, dy) in GRID_ACTIONS {
                let (nx, ny) = (c.x as i64 + dx, c.y as i64 + dy);
                if self.is_free(nx, ny) {
                    let idx = ny as usize * self.width + nx as usize;
                    if dist[idx].is_none() {
                        dist[idx] = Some(d + 1);
                        queue.push_back(Cell::new(nx as usize, ny as usize));
                    }
                }
            }
        }
        Ok(dist)
    }

    /// Exact shortest-path step count between two free cells.
    pub fn oracle_distance(&self, from: Cell, to: Cell) -> Result<Option<usize>> {
        if !self.is_free(to.x as i64, to.y as i64) {
            return Err(Error::InvalidCell(to.x as i64, to.y as i64));
        }
        Ok(self.distances_from(from)?[to.y * self.width + to.x])
    }

    /// Renders the layout back into map-file syntax.
    pub fn to_map(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height {
            for x in 0..self.width {
                let c = Cell::new(x, y);
                out.push(if c == self.start {
                    'S'
                } else if self.free[y * self.width + x] {
                    '.'
                } else {
                    '#'
                });
            }
            out.push('\n');
        }
        out
    }
}

impl GoalEnv for GridNavEnv {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, desired_goal: &[f64]) -> Result<Vec<f64>> {
        let goal = self.check_goal(desired_goal)?;
        self.goal = Some(goal);
        self.agent = self.start;
        self.steps = 0;
        self.done = false;
        Ok(self.encode(self.start))
    }

    fn step(&mut self, action: &Action) -> Result<Step> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let a = match action {
            Action::Discrete(a) if *a < GRID_ACTIONS.len() => *a,
            other => return Err(Error::InvalidAction(format!("{other:?}"))),
        };
        let (dx, dy) = GRID_ACTIONS[a];
        let (nx, ny) = (self.agent.x as i64 + dx, self.agent.y as i64 + dy);
        if self.is_free(nx, ny) {
            self.agent = Cell::new(nx as usize, ny as usize);
        }
        self.steps += 1;
        let next_state = self.encode(self.agent);
        let achieved_goal = next_state.clone();
        let goal = self.goal.as_ref().ok_or(Error::EpisodeFinished)?;
        let reward = sparse_reward(&achieved_goal, goal, self.spec.epsilon)?;
        self.done = reward == 0.0 || self.steps >= self.spec.horizon;
        Ok(Step {
            next_state,
            achieved_goal,
            reward,
            done: self.done,
        })
    }

    fn achieved_goal(&self, state: &[f64]) -> Vec<f64> {
        state.to_vec()
    }

    fn sample_uniform_goal(&self, rng: &mut RngHandle) -> Vec<f64> {
        let c = self.free_cells[rng.gen_range(0..self.free_cells.len())];
        self.encode(c)
    }

    fn check_goal(&self, goal: &[f64]) -> Result<Vec<f64>> {
        if !self.spec.goal_in_bounds(goal) {
            return Err(Error::InvalidGoal(format!("{goal:?} is outside the grid")));
        }
        let cell = self
            .decode(goal)
            .map_err(|_| Error::InvalidGoal(format!("{goal:?} is not a free cell")))?;
        Ok(self.encode(cell))
    }

    fn start_state(&self) -> Vec<f64> {
        self.encode(self.start)
    }

    fn steps_taken(&self) -> usize {
        self.steps
    }

    fn as_grid(&self) -> Option<&GridNavEnv> {
        Some(self)
    }
}
