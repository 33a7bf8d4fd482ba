//! Canonical text for environment states. The text doubles as the rating
//! dictionary key, so formatting must never depend on anything but the facts.

use std::fmt;

use crate::envs::{EnvObservation, Facts};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateDescription {
    pub text: String,
}

impl StateDescription {
    pub fn key(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for StateDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// SeqChain descriptions carry only the completion flags; noisy object
/// positions are left out so noise cannot split one logical state into many keys.
pub fn describe_state(obs: &EnvObservation) -> StateDescription {
    let text = match &obs.facts {
        Facts::DeepSea {
            col,
            row,
            goal_col,
            goal_row,
        } => format!("Agent at column {col}, row {row}. Goal at column {goal_col}, row {goal_row}."),
        Facts::SeqChain { flags, names } => flags
            .iter()
            .zip(names.iter())
            .map(|(&done, name)| {
                if done {
                    format!("Sub-task {name} is done.")
                } else {
                    format!("Sub-task {name} is not done yet.")
                }
            })
            .collect::<Vec<_>>()
            .join(" "),
    };
    StateDescription { text }
}

/// `(col, row, goal_col, goal_row)` from a DeepSea description.
pub fn parse_deepsea(text: &str) -> Result<(usize, usize, usize, usize)> {
    let malformed = || Error::Parse(format!("not a deepsea description: {text:?}"));
    let rest = text.strip_prefix("Agent at column ").ok_or_else(malformed)?;
    let (col, rest) = rest.split_once(", row ").ok_or_else(malformed)?;
    let (row, rest) = rest.split_once(". Goal at column ").ok_or_else(malformed)?;
    let (goal_col, rest) = rest.split_once(", row ").ok_or_else(malformed)?;
    let goal_row = rest.strip_suffix('.').ok_or_else(malformed)?;
    let num = |s: &str| s.parse::<usize>().map_err(|_| malformed());
    Ok((num(col)?, num(row)?, num(goal_col)?, num(goal_row)?))
}

/// Completion flags from a SeqChain description, in `names` order.
pub fn parse_seqchain(text: &str, names: &[String]) -> Result<Vec<bool>> {
    let mut rest = text;
    let mut flags = Vec::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        if i > 0 {
            rest = rest
                .strip_prefix(' ')
                .ok_or_else(|| Error::Parse(format!("missing separator before {name:?}")))?;
        }
        let done = format!("Sub-task {name} is done.");
        let pending = format!("Sub-task {name} is not done yet.");
        if let Some(r) = rest.strip_prefix(done.as_str()) {
            flags.push(true);
            rest = r;
        } else if let Some(r) = rest.strip_prefix(pending.as_str()) {
            flags.push(false);
            rest = r;
        } else {
            return Err(Error::Parse(format!("no clause for sub-task {name:?} in {text:?}")));
        }
    }
    if !rest.is_empty() {
        return Err(Error::Parse(format!("trailing text {rest:?} in seqchain description")));
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::seqchain::DEFAULT_MACRO_ACTIONS;
    use crate::envs::{DeepSea, DeepSeaConfig, SeqChain, SeqChainConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn names() -> Vec<String> {
        DEFAULT_MACRO_ACTIONS.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn deepsea_start_state() {
        let mut env = DeepSea::new(DeepSeaConfig { size: 8 }).unwrap();
        let desc = describe_state(&env.reset());
        assert_eq!(desc.text, "Agent at column 0, row 0. Goal at column 7, row 7.");
        assert_eq!(parse_deepsea(desc.key()).unwrap(), (0, 0, 7, 7));
    }

    #[test]
    fn seqchain_all_pending_has_one_clause_per_subtask() {
        let mut env = SeqChain::new(SeqChainConfig::new(7)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let desc = describe_state(&env.reset(&mut rng));
        assert_eq!(desc.text.matches("is not done yet.").count(), 7);
        assert!(desc.text.starts_with("Sub-task press_stop_button is not done yet. "));
        assert_eq!(parse_seqchain(&desc.text, &names()).unwrap(), vec![false; 7]);
    }

    #[test]
    fn noise_does_not_change_seqchain_text() {
        let mut cfg = SeqChainConfig::new(4);
        cfg.noise_sigma_cm = 2.0;
        let mut env = SeqChain::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = describe_state(&env.reset(&mut rng));
        let b = describe_state(&env.step(6, &mut rng).unwrap().observation);
        assert_ne!(a.text.len(), 0);
        assert_eq!(a, b);
    }

    #[test]
    fn deepsea_descriptions_are_injective() {
        for n in [2usize, 8, 64] {
            let mut seen = HashSet::new();
            for row in 0..n {
                for col in 0..=row {
                    let obs = EnvObservation {
                        numeric: vec![],
                        facts: Facts::DeepSea {
                            col,
                            row,
                            goal_col: n - 1,
                            goal_row: n - 1,
                        },
                    };
                    let text = describe_state(&obs).text;
                    assert_eq!(parse_deepsea(&text).unwrap(), (col, row, n - 1, n - 1));
                    assert!(seen.insert(text));
                }
            }
        }
    }

    #[test]
    fn seqchain_descriptions_are_injective() {
        let names: std::sync::Arc<[String]> = names().into();
        let mut seen = HashSet::new();
        for bits in 0u32..128 {
            let flags: Vec<bool> = (0..7).map(|i| bits >> i & 1 == 1).collect();
            let obs = EnvObservation {
                numeric: vec![],
                facts: Facts::SeqChain {
                    flags: flags.clone(),
                    names: names.clone(),
                },
            };
            let text = describe_state(&obs).text;
            assert_eq!(parse_seqchain(&text, &names).unwrap(), flags);
            assert!(seen.insert(text));
        }
    }

    #[test]
    fn malformed_text_is_rejected() {
        assert!(parse_deepsea("Agent at column x, row 0. Goal at column 7, row 7.").is_err());
        assert!(parse_deepsea("hello").is_err());
        assert!(parse_seqchain("Sub-task press_stop_button is done.", &names()).is_err());
    }
}
