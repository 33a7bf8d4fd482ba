use serde::{Deserialize, Serialize};

use super::{EnvObservation, Facts, Outcome, StepResult};
use crate::error::{Error, Result};

pub const DOWN: usize = 0;
pub const DOWN_RIGHT: usize = 1;
pub const ACTION_NAMES: [&str; 2] = ["down", "down_right"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepSeaConfig {
    /// Grid side length N.
    pub size: usize,
}

impl DeepSeaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size < 2 {
            return Err(Error::Config(format!(
                "deepsea grid size must be at least 2, got {}",
                self.size
            )));
        }
        Ok(())
    }
}

/// N×N grid: start at the top-left, every step moves one row down and
/// optionally one column right. Only the bottom-right cell pays +1; every
/// other bottom cell pays -1.
#[derive(Debug, Clone)]
pub struct DeepSea {
    config: DeepSeaConfig,
    col: usize,
    row: usize,
    done: bool,
}

impl DeepSea {
    pub fn new(config: DeepSeaConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            col: 0,
            row: 0,
            done: true,
        })
    }

    pub fn config(&self) -> &DeepSeaConfig {
        &self.config
    }

    pub fn position(&self) -> (usize, usize) {
        (self.col, self.row)
    }

    fn goal(&self) -> usize {
        self.config.size - 1
    }

    fn observe(&self) -> EnvObservation {
        let goal = self.goal();
        EnvObservation {
            numeric: vec![self.col as f64, self.row as f64, goal as f64, goal as f64],
            facts: Facts::DeepSea {
                col: self.col,
                row: self.row,
                goal_col: goal,
                goal_row: goal,
            },
        }
    }

    pub fn reset(&mut self) -> EnvObservation {
        self.col = 0;
        self.row = 0;
        self.done = false;
        self.observe()
    }

    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.done {
            return Err(Error::Usage("deepsea step after episode end".into()));
        }
        match action {
            DOWN => {}
            DOWN_RIGHT => self.col += 1,
            other => {
                return Err(Error::Usage(format!("deepsea has 2 actions, got {other}")));
            }
        }
        self.row += 1;
        let (reward, outcome) = if self.row == self.goal() {
            self.done = true;
            if self.col == self.goal() {
                (1.0, Outcome::Goal)
            } else {
                (-1.0, Outcome::Failure)
            }
        } else {
            (0.0, Outcome::Ongoing)
        };
        Ok(StepResult {
            observation: self.observe(),
            extrinsic_reward: reward,
            done: self.done,
            outcome,
        })
    }
}

/// Whether the goal can still be reached from `(col, row)`: only a pure
/// diagonal path remains, so the column and row gaps must be equal.
pub fn goal_reachable(col: usize, row: usize, goal_col: usize, goal_row: usize) -> bool {
    goal_col >= col && goal_row >= row && goal_col - col == goal_row - row
}
