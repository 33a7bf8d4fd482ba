use std::collections::HashMap;

use crate::envs::{EnvObservation, Facts};

/// Discretised state used as a visit-count key.
pub type StateKey = Vec<i64>;

/// DeepSea: the integer coordinates. SeqChain: the flag bits followed by
/// object positions rounded to 1 cm bins.
pub fn state_key(obs: &EnvObservation) -> StateKey {
    match &obs.facts {
        Facts::DeepSea {
            col,
            row,
            goal_col,
            goal_row,
        } => vec![*col as i64, *row as i64, *goal_col as i64, *goal_row as i64],
        Facts::SeqChain { flags, .. } => {
            let n = flags.len();
            flags
                .iter()
                .map(|&f| f as i64)
                .chain(obs.numeric[n..].iter().map(|x| (x * 100.0).round() as i64))
                .collect()
        }
    }
}

/// Visit counter N(s) behind the `1/sqrt(N(s))` bonus.
#[derive(Debug, Clone, Default)]
pub struct VisitCounts {
    counts: HashMap<StateKey, u64>,
}

impl VisitCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a visit and returns `1/sqrt(N)` with the post-increment count.
    pub fn bonus(&mut self, key: StateKey) -> f64 {
        let n = self.counts.entry(key).or_insert(0);
        *n += 1;
        1.0 / (*n as f64).sqrt()
    }

    pub fn count(&self, key: &StateKey) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn distinct_states(&self) -> usize {
        self.counts.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn bonus_examples() {
        let mut c = VisitCounts::new();
        let key = vec![1, 2];
        let bonuses: Vec<f64> = (0..100).map(|_| c.bonus(key.clone())).collect();
        assert_eq!(bonuses[0], 1.0);
        assert_eq!(bonuses[3], 0.5);
        assert_eq!(bonuses[99], 0.1);
        assert_eq!(c.count(&key), 100);
    }

    proptest::proptest! {
        #[test]
        fn kth_visit_pays_inverse_sqrt_k(keys in proptest::collection::vec(0i64..6, 0..200)) {
            let mut counts = VisitCounts::new();
            let mut reference: BTreeMap<i64, u64> = BTreeMap::new();
            for k in keys {
                let seen = reference.entry(k).or_insert(0);
                *seen += 1;
                let expected = 1.0 / (*seen as f64).sqrt();
                proptest::prop_assert_eq!(counts.bonus(vec![k]), expected);
            }
        }
    }
}
