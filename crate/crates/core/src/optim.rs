//! Adam optimiser over a flat parameter vector.

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
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if !ok {
            return Err(Error::InvalidParameter(format!("invalid Adam settings {self:?}")));
        }
        Ok(())
    }
}

/// First and second moment estimates for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl Adam {
    pub fn new(len: usize, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        })
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update. Non-finite gradients abort without
    /// touching the parameters or the moments.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::ShapeMismatch(format!(
                "optimiser holds {} parameters, got {} values and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(g) = grads.iter().find(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient contains {g}")));
        }
        let c = self.config;
        self.step += 1;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * grads[i];
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut adam = Adam::new(2, AdamConfig::with_learning_rate(0.1)).unwrap();
        let mut p = [1.0, -1.0];
        adam.step(&mut p, &[3.0, -0.001]).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-7);
        assert!((p[1] + 0.9).abs() < 1e-4);
    }

    #[test]
    fn matches_hand_rolled_reference() {
        let c = AdamConfig::default();
        let mut adam = Adam::new(1, c).unwrap();
        let mut p = [0.5];
        let (mut m, mut v, mut q) = (0.0, 0.0, 0.5f64);
        for t in 1..=20 {
            let g = 2.0 * q - 0.3;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            q -= 0.01 * mh / (vh.sqrt() + 1e-8);
            let gp = [2.0 * p[0] - 0.3];
            adam.step(&mut p, &gp).unwrap();
        }
        assert!((p[0] - q).abs() < 1e-15);
    }

    #[test]
    fn converges_on_quadratic_bowl() {
        let centre = [3.0, -2.0, 0.5];
        let mut adam = Adam::new(3, AdamConfig::with_learning_rate(0.05)).unwrap();
        let mut p = [0.0; 3];
        for _ in 0..2000 {
            let g: Vec<f64> = p.iter().zip(&centre).map(|(x, c)| 2.0 * (x - c)).collect();
            adam.step(&mut p, &g).unwrap();
        }
        for (x, c) in p.iter().zip(&centre) {
            assert!((x - c).abs() < 1e-3);
        }
    }

    #[test]
    fn rejects_nan_and_shape_errors() {
        let mut adam = Adam::new(2, AdamConfig::default()).unwrap();
        let mut p = [1.0, 2.0];
        assert!(matches!(adam.step(&mut p, &[f64::NAN, 0.0]), Err(Error::NonFinite(_))));
        assert_eq!(p, [1.0, 2.0]);
        assert_eq!(adam.steps_taken(), 0);
        assert!(adam.step(&mut p, &[1.0]).is_err());
        assert!(Adam::new(1, AdamConfig::with_learning_rate(-1.0)).is_err());
    }
}
