use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envs::EnvKind;
use crate::error::{Error, Result};

pub const STATE_PLACEHOLDER: &str = "{state}";
pub const ACTIONS_PLACEHOLDER: &str = "{actions}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    #[default]
    Plain,
    ChainOfThought,
}

const DEEPSEA_INITIAL: &str = "You are guiding an agent through a square grid. The agent starts in the \
top-left cell and moves down one row at every step, either straight down or diagonally down and to the \
right. The episode ends when the agent reaches the bottom row. Reaching the goal cell in the bottom-right \
corner is the only way to succeed; ending anywhere else in the bottom row is a failure.";

const SEQCHAIN_INITIAL: &str = "You are guiding a robot that must finish a laboratory clean-up task. \
The sub-tasks must be executed strictly in this order: press the emergency stop button, open the \
drawer, pick the vial, place the vial in the rack, close the drawer, pick the rack, place the rack on \
the conveyor. A sub-task attempted before its predecessors are done has no effect.";

const RECURRING: &str = "Current state: {state}\nRate each of the possible actions with a score between \
0 and 1, where 1 means the action makes the most progress towards the goal. Actions: {actions}.";

const PLAIN_FORMAT: &str = "Answer with a single JSON object that maps every action name to its score, \
and nothing else.";

const COT_FORMAT: &str = "Reason step by step about which action makes progress, then finish your answer \
with a single JSON object that maps every action name to its score.";

/// An initial (system) prompt with the goal and constraints, and a recurring
/// (user) prompt filled with the current state and the action names.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub initial: String,
    pub recurring: String,
    pub variant: PromptVariant,
}

impl PromptTemplate {
    pub fn new(initial: String, recurring: String, variant: PromptVariant) -> Result<Self> {
        for placeholder in [STATE_PLACEHOLDER, ACTIONS_PLACEHOLDER] {
            let n = recurring.matches(placeholder).count();
            if n != 1 {
                return Err(Error::Config(format!(
                    "recurring prompt must contain {placeholder} exactly once, found {n}"
                )));
            }
        }
        Ok(Self {
            initial,
            recurring,
            variant,
        })
    }

    pub fn default_for(env: EnvKind, variant: PromptVariant) -> Self {
        let initial = match env {
            EnvKind::DeepSea => DEEPSEA_INITIAL,
            EnvKind::SeqChain => SEQCHAIN_INITIAL,
        };
        Self {
            initial: initial.to_string(),
            recurring: RECURRING.to_string(),
            variant,
        }
    }

    pub fn from_files(initial: &Path, recurring: &Path, variant: PromptVariant) -> Result<Self> {
        let read = |p: &Path| fs::read_to_string(p).map_err(|e| Error::io(p, e));
        Self::new(read(initial)?.trim_end().to_string(), read(recurring)?.trim_end().to_string(), variant)
    }

    /// `(system, user)` messages for one state.
    pub fn render(&self, state: &str, action_names: &[String]) -> (String, String) {
        let format_rule = match self.variant {
            PromptVariant::Plain => PLAIN_FORMAT,
            PromptVariant::ChainOfThought => COT_FORMAT,
        };
        let system = format!("{}\n\n{format_rule}", self.initial);
        let user = self
            .recurring
            .replace(STATE_PLACEHOLDER, state)
            .replace(ACTIONS_PLACEHOLDER, &action_names.join(", "));
        (system, user)
    }
}
