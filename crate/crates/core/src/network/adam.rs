use serde::{Deserialize, Serialize};

use crate::error::{config, usage, Result};

/// Piecewise-constant learning rate: `(start_step, eta)` pairs, sorted by
/// start. Step `t` (zero-based) uses the last entry with `start <= t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule(Vec<(usize, f64)>);

impl LrSchedule {
    pub fn new(entries: Vec<(usize, f64)>) -> Result<Self> {
        if entries.first().map(|e| e.0) != Some(0) {
            return config("learning-rate schedule must start at step 0");
        }
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return config("learning-rate schedule must be strictly increasing in step");
        }
        if let Some((_, eta)) = entries.iter().find(|(_, eta)| !eta.is_finite() || *eta < 0.0) {
            return config(format!("invalid learning rate {eta}"));
        }
        Ok(Self(entries))
    }

    pub fn constant(eta: f64) -> Result<Self> {
        Self::new(vec![(0, eta)])
    }

    /// `first` until `switch_at`, `second` afterwards.
    pub fn two_phase(first: f64, second: f64, switch_at: usize) -> Result<Self> {
        if switch_at == 0 {
            return Self::constant(second);
        }
        Self::new(vec![(0, first), (switch_at, second)])
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.0
    }

    pub fn eta_at(&self, step: usize) -> f64 {
        self.0
            .iter()
            .take_while(|(start, _)| *start <= step)
            .last()
            .map_or(self.0[0].1, |e| e.1)
    }
}

/// Adam moments and hyperparameters for a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl AdamState {
    pub const DEFAULT_BETA1: f64 = 0.9;
    pub const DEFAULT_BETA2: f64 = 0.999;
    pub const DEFAULT_EPSILON: f64 = 1e-8;

    pub fn new(num_params: usize) -> Self {
        Self::with_hyperparameters(num_params, Self::DEFAULT_BETA1, Self::DEFAULT_BETA2, Self::DEFAULT_EPSILON)
    }

    pub fn with_hyperparameters(num_params: usize, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            beta1,
            beta2,
            epsilon,
            step: 0,
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], eta: f64) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return usage(format!(
                "Adam state holds {} parameters, got {} params and {} grads",
                self.first_moment.len(),
                params.len(),
                grads.len()
            ));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= eta * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}
