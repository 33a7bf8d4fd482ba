//! Intrinsic reward generators and the reward combiner.
//!
//! Every learning signal goes through [`combine`] (or [`combine_stacked`]
//! when a rating bonus is stacked with a second generator):
//!
//! ```text
//! r_c = r_e + λ · r_i · w(t),   w(t) = max(0, 1 - t / T)  (or 1 without decay)
//! ```

pub mod count;
pub mod icm;
pub mod rnd;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use count::{state_key, VisitCounts};
pub use icm::{IcmConfig, IcmFeatures, IcmLosses, IcmNets};
pub use rnd::{RndConfig, RndNets, RunningStd};

use crate::error::{Error, Result};

/// One environment transition, on network-input features.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub extrinsic_reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinerConfig {
    /// Intrinsic scale λ.
    pub lambda: f64,
    /// Step at which the decay weight reaches zero.
    pub decay_steps: u64,
    pub decay_enabled: bool,
}

impl CombinerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.decay_enabled && self.decay_steps == 0 {
            return Err(Error::Config("decay_steps must be >= 1 when decay is enabled".into()));
        }
        Ok(())
    }

    pub fn weight(&self, global_step: u64) -> f64 {
        if self.decay_enabled {
            (1.0 - global_step as f64 / self.decay_steps as f64).max(0.0)
        } else {
            1.0
        }
    }
}

pub fn combine(r_e: f64, r_i: f64, cfg: &CombinerConfig, global_step: u64) -> f64 {
    r_e + cfg.lambda * r_i * cfg.weight(global_step)
}

/// Rating bonus plus a second generator, each with its own scale and decay.
pub fn combine_stacked(
    r_e: f64,
    rating: (f64, &CombinerConfig),
    other: (f64, &CombinerConfig),
    global_step: u64,
) -> f64 {
    combine(r_e, rating.0, rating.1, global_step) + other.1.lambda * other.0 * other.1.weight(global_step)
}

/// Looks up the rating of `action`. Out-of-range ratings are clamped into
/// `[0, 1]` and reported through the second tuple field.
pub fn ige_bonus(ratings: &[f64], action: usize) -> Result<(f64, bool)> {
    let raw = *ratings.get(action).ok_or_else(|| {
        Error::Dimension(format!("action {action} outside {} ratings", ratings.len()))
    })?;
    if raw.is_nan() {
        log::warn!("rating for action {action} is NaN, using 0");
        return Ok((0.0, true));
    }
    let clamped = raw.clamp(0.0, 1.0);
    if clamped != raw {
        log::warn!("rating {raw} for action {action} clamped to {clamped}");
    }
    Ok((clamped, clamped != raw))
}

/// Which intrinsic generators feed the combiner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum IntrinsicMethod {
    None,
    Count,
    Icm,
    Rnd,
    Ige,
    IgeCount,
    IgeIcm,
    IgeRnd,
}

impl IntrinsicMethod {
    pub const ALL: [IntrinsicMethod; 8] = [
        IntrinsicMethod::None,
        IntrinsicMethod::Count,
        IntrinsicMethod::Icm,
        IntrinsicMethod::Rnd,
        IntrinsicMethod::Ige,
        IntrinsicMethod::IgeCount,
        IntrinsicMethod::IgeIcm,
        IntrinsicMethod::IgeRnd,
    ];

    pub fn uses_rater(self) -> bool {
        matches!(
            self,
            IntrinsicMethod::Ige
                | IntrinsicMethod::IgeCount
                | IntrinsicMethod::IgeIcm
                | IntrinsicMethod::IgeRnd
        )
    }

    /// The non-rating generator, if any.
    pub fn other(self) -> Option<OtherBonus> {
        match self {
            IntrinsicMethod::Count | IntrinsicMethod::IgeCount => Some(OtherBonus::Count),
            IntrinsicMethod::Icm | IntrinsicMethod::IgeIcm => Some(OtherBonus::Icm),
            IntrinsicMethod::Rnd | IntrinsicMethod::IgeRnd => Some(OtherBonus::Rnd),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IntrinsicMethod::None => "none",
            IntrinsicMethod::Count => "count",
            IntrinsicMethod::Icm => "icm",
            IntrinsicMethod::Rnd => "rnd",
            IntrinsicMethod::Ige => "ige",
            IntrinsicMethod::IgeCount => "ige+count",
            IntrinsicMethod::IgeIcm => "ige+icm",
            IntrinsicMethod::IgeRnd => "ige+rnd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtherBonus {
    Count,
    Icm,
    Rnd,
}

impl fmt::Display for IntrinsicMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IntrinsicMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IntrinsicMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown intrinsic method '{s}'")))
    }
}

impl TryFrom<String> for IntrinsicMethod {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<IntrinsicMethod> for String {
    fn from(m: IntrinsicMethod) -> String {
        m.as_str().to_string()
    }
}

fn default_lambda() -> f64 {
    0.1
}

fn default_true() -> bool {
    true
}

/// `[intrinsic]` section of the experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicConfig {
    #[serde(default = "default_method")]
    pub method: IntrinsicMethod,
    /// Scale of the rating bonus (and of a lone baseline generator).
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Scale of the second generator when stacked with ratings; defaults to `lambda`.
    #[serde(default)]
    pub secondary_lambda: Option<f64>,
    /// Defaults to half of the training budget.
    #[serde(default)]
    pub decay_steps: Option<u64>,
    /// Linear decay of the rating bonus.
    #[serde(default = "default_true")]
    pub decay_enabled: bool,
    /// Linear decay of count/ICM/RND bonuses.
    #[serde(default)]
    pub baseline_decay: bool,
    #[serde(default)]
    pub icm: IcmConfig,
    #[serde(default)]
    pub rnd: RndConfig,
}

fn default_method() -> IntrinsicMethod {
    IntrinsicMethod::None
}

impl Default for IntrinsicConfig {
    fn default() -> Self {
        Self {
            method: IntrinsicMethod::None,
            lambda: default_lambda(),
            secondary_lambda: None,
            decay_steps: None,
            decay_enabled: true,
            baseline_decay: false,
            icm: IcmConfig::default(),
            rnd: RndConfig::default(),
        }
    }
}

impl IntrinsicConfig {
    pub fn with_method(method: IntrinsicMethod, lambda: f64) -> Self {
        Self {
            method,
            lambda,
            ..Self::default()
        }
    }

    pub fn decay_horizon(&self, total_steps: u64) -> u64 {
        self.decay_steps.unwrap_or(total_steps / 2).max(1)
    }

    /// Combiner for the rating bonus.
    pub fn rating_combiner(&self, total_steps: u64) -> CombinerConfig {
        CombinerConfig {
            lambda: self.lambda,
            decay_steps: self.decay_horizon(total_steps),
            decay_enabled: self.decay_enabled,
        }
    }

    /// Combiner for the count/ICM/RND bonus.
    pub fn other_combiner(&self, total_steps: u64) -> CombinerConfig {
        let lambda = if self.method.uses_rater() {
            self.secondary_lambda.unwrap_or(self.lambda)
        } else {
            self.lambda
        };
        CombinerConfig {
            lambda,
            decay_steps: self.decay_horizon(total_steps),
            decay_enabled: self.baseline_decay,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rating_combiner(1).validate()?;
        self.other_combiner(1).validate()?;
        self.icm.validate()?;
        self.rnd.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lambda: f64, t: u64, decay: bool) -> CombinerConfig {
        CombinerConfig {
            lambda,
            decay_steps: t,
            decay_enabled: decay,
        }
    }

    #[test]
    fn combine_examples() {
        let c = cfg(0.1, 100, true);
        assert!((combine(0.0, 0.8, &c, 50) - 0.04).abs() < 1e-17);
        for step in [100, 101, 10_000] {
            for r_e in [0.0, 1.0, -1.0] {
                assert_eq!(combine(r_e, 0.8, &c, step).to_bits(), r_e.to_bits());
            }
        }
        let zero = cfg(0.0, 100, true);
        assert_eq!(combine(1.0, 123.0, &zero, 3), 1.0);
    }

    #[test]
    fn ige_bonus_lookup_and_clamp() {
        assert_eq!(ige_bonus(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0], 2).unwrap(), (1.0, false));
        assert_eq!(ige_bonus(&[0.5, 0.5], 1).unwrap(), (0.5, false));
        assert_eq!(ige_bonus(&[1.7, 0.0], 0).unwrap(), (1.0, true));
        assert_eq!(ige_bonus(&[-0.2, 0.0], 0).unwrap(), (0.0, true));
        assert!(ige_bonus(&[0.5], 1).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in IntrinsicMethod::ALL {
            assert_eq!(m.as_str().parse::<IntrinsicMethod>().unwrap(), m);
        }
        assert!("curiosity".parse::<IntrinsicMethod>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(cfg(-0.1, 1, false).validate().is_err());
        assert!(cfg(0.1, 0, true).validate().is_err());
        assert!(cfg(0.1, 0, false).validate().is_ok());
    }

    proptest::proptest! {
        #[test]
        fn decay_is_monotone(r_e in -1.0f64..1.0, r_i in 0.0f64..1.0, lambda in 0.0f64..2.0,
                             t in 1u64..1000, a in 0u64..2000, b in 0u64..2000) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let c = cfg(lambda, t, true);
            proptest::prop_assert!(combine(r_e, r_i, &c, lo) >= combine(r_e, r_i, &c, hi));
            let flat = cfg(lambda, t, false);
            proptest::prop_assert_eq!(combine(r_e, r_i, &flat, lo), combine(r_e, r_i, &flat, hi));
        }

        #[test]
        fn stacking_with_zero_scale_is_bit_identical(r_e in -1.0f64..1.0, r_i in 0.0f64..1.0,
                                                     other in 0.0f64..10.0, step in 0u64..500) {
            let rating = cfg(0.1, 200, true);
            let off = cfg(0.0, 200, false);
            let alone = combine(r_e, r_i, &rating, step);
            let stacked = combine_stacked(r_e, (r_i, &rating), (other, &off), step);
            proptest::prop_assert_eq!(alone.to_bits(), stacked.to_bits());
        }
    }
}
