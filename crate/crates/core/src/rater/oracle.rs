//! Scripted stand-ins for a language-model rater.

use rand::Rng;

use super::describe::{parse_deepsea, parse_seqchain};
use crate::envs::deepsea::goal_reachable;
use crate::error::{Error, Result};

/// `[down, down_right]`: `[0, 1]` while the goal is still reachable, else `[0, 0]`.
pub fn oracle_deepsea(text: &str) -> Result<Vec<f64>> {
    let (col, row, goal_col, goal_row) = parse_deepsea(text)?;
    Ok(if goal_reachable(col, row, goal_col, goal_row) {
        vec![0.0, 1.0]
    } else {
        vec![0.0, 0.0]
    })
}

/// 1.0 for the next pending sub-task, 0.1 for finished ones, 0 for the rest.
pub fn oracle_seqchain(text: &str, action_names: &[String]) -> Result<Vec<f64>> {
    let flags = parse_seqchain(text, action_names)?;
    let next = flags.iter().position(|&f| !f);
    Ok(flags
        .iter()
        .enumerate()
        .map(|(i, &done)| {
            if Some(i) == next {
                1.0
            } else if done {
                0.1
            } else {
                0.0
            }
        })
        .collect())
}

/// First index holding the maximum.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// With probability `epsilon`, swaps the maximal score with a uniformly chosen
/// other index. Returns the scores and whether they were corrupted.
pub fn corrupt<R: Rng + ?Sized>(mut scores: Vec<f64>, epsilon: f64, rng: &mut R) -> Result<(Vec<f64>, bool)> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Config(format!("corruption rate {epsilon} outside [0, 1]")));
    }
    if scores.len() < 2 || !rng.random_bool(epsilon) {
        return Ok((scores, false));
    }
    let best = argmax(&scores).unwrap_or(0);
    let mut other = rng.random_range(0..scores.len() - 1);
    if other >= best {
        other += 1;
    }
    scores.swap(best, other);
    Ok((scores, true))
}
