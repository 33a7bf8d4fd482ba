use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments for one flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(param_count: usize, config: AdamConfig) -> Self {
        Self {
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
            step_count: 0,
            config,
        }
    }
}

/// One Adam update. A non-finite gradient leaves parameters and state untouched.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(Error::Dimension(format!(
            "adam: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient entry {i} is {}", grads[i])));
    }
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    state.step_count += 1;
    let t = state.step_count as i32;
    let correction1 = 1.0 - beta1.powi(t);
    let correction2 = 1.0 - beta2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / correction1;
        let v_hat = *v / correction2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(lr: f64) -> AdamConfig {
        AdamConfig {
            learning_rate: lr,
            ..AdamConfig::default()
        }
    }

    #[test]
    fn zero_gradient_keeps_params_and_counts_step() {
        let mut params = vec![1.0, -2.0];
        let mut state = AdamState::new(2, config(0.1));
        adam_step(&mut params, &[0.0, 0.0], &mut state).unwrap();
        assert_eq!(params, vec![1.0, -2.0]);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn first_step_has_closed_form() {
        let (lr, g) = (0.01, 0.37);
        let mut params = vec![0.5];
        let mut state = AdamState::new(1, config(lr));
        adam_step(&mut params, &[g], &mut state).unwrap();
        let expected = 0.5 - lr * g / (g.abs() + 1e-8);
        assert!((params[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn minimises_a_quadratic() {
        let mut w = vec![1.0];
        let mut state = AdamState::new(1, config(0.1));
        for _ in 0..100 {
            let grad = [2.0 * w[0]];
            adam_step(&mut w, &grad, &mut state).unwrap();
        }
        assert!(w[0].abs() < 0.5, "w = {}", w[0]);
    }

    #[test]
    fn non_finite_gradient_aborts_update() {
        let mut params = vec![1.0, 2.0];
        let mut state = AdamState::new(2, config(0.1));
        let err = adam_step(&mut params, &[0.1, f64::NAN], &mut state).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        assert_eq!(params, vec![1.0, 2.0]);
        assert_eq!(state.step_count, 0);
    }
}
