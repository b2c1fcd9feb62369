use serde::{Deserialize, Serialize};

use super::RlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonDecay {
    Linear,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqnHyperparameters {
    pub decay: EpsilonDecay,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub gamma: f64,
    pub epsilon_initial: f64,
    pub epsilon_final: f64,
    pub exploration_fraction: f64,
    pub buffer_size: usize,
    pub total_iterations: usize,
    /// Environment steps between hard copies into the target network.
    pub target_update: usize,
    pub hidden: Vec<usize>,
    pub log_every: usize,
}

impl DqnHyperparameters {
    pub fn linear() -> Self {
        Self {
            decay: EpsilonDecay::Linear,
            learning_rate: 2.74e-3,
            batch_size: 256,
            gamma: 0.99,
            epsilon_initial: 1.0,
            epsilon_final: 9.19e-4,
            exploration_fraction: 0.22,
            buffer_size: 1_000,
            total_iterations: 70_000,
            target_update: 500,
            hidden: vec![64, 64],
            log_every: 100,
        }
    }

    pub fn exponential() -> Self {
        Self {
            decay: EpsilonDecay::Exponential,
            learning_rate: 1.15e-3,
            epsilon_final: 8.67e-4,
            exploration_fraction: 0.49,
            buffer_size: 100_000,
            ..Self::linear()
        }
    }

    pub fn epsilon(&self, t: usize) -> f64 {
        match self.decay {
            EpsilonDecay::Linear => epsilon_linear(t, self),
            EpsilonDecay::Exponential => epsilon_exponential(t, self),
        }
    }

    /// Check every tuned value against its published search range.
    pub fn validate(&self) -> Result<(), RlError> {
        check("batch_size", self.batch_size as f64, 32.0, 256.0)?;
        check("learning_rate", self.learning_rate, 1e-4, 1e-2)?;
        check("epsilon_final", self.epsilon_final, 1e-5, 1e-2)?;
        check("exploration_fraction", self.exploration_fraction, 1e-2, 1.0)?;
        check("buffer_size", self.buffer_size as f64, 1e3, 1e5)?;
        check("gamma", self.gamma, 0.0, 1.0)?;
        check("epsilon_initial", self.epsilon_initial, self.epsilon_final, 1.0)?;
        positive("total_iterations", self.total_iterations)?;
        positive("target_update", self.target_update)?;
        positive("log_every", self.log_every)?;
        hidden_ok(&self.hidden)
    }
}

impl Default for DqnHyperparameters {
    fn default() -> Self {
        Self::linear()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoHyperparameters {
    pub learning_rate: f64,
    /// Minibatch size.
    pub batch_size: usize,
    pub gamma: f64,
    pub clip: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub rollout: usize,
    pub epochs: usize,
    pub total_iterations: usize,
    pub hidden: Vec<usize>,
    pub log_every: usize,
}

impl Default for PpoHyperparameters {
    fn default() -> Self {
        Self {
            learning_rate: 2.42e-3,
            batch_size: 256,
            gamma: 0.99,
            clip: 0.14,
            entropy_coef: 5.53e-2,
            value_coef: 0.89,
            rollout: 256,
            epochs: 4,
            total_iterations: 70_000,
            hidden: vec![64, 64],
            log_every: 100,
        }
    }
}

impl PpoHyperparameters {
    pub fn validate(&self) -> Result<(), RlError> {
        check("batch_size", self.batch_size as f64, 32.0, 256.0)?;
        check("learning_rate", self.learning_rate, 1e-4, 1e-2)?;
        check("clip", self.clip, 0.1, 0.4)?;
        check("entropy_coef", self.entropy_coef, 1e-6, 1e-1)?;
        check("value_coef", self.value_coef, 0.1, 0.9)?;
        check("gamma", self.gamma, 0.0, 1.0)?;
        positive("rollout", self.rollout)?;
        positive("epochs", self.epochs)?;
        positive("total_iterations", self.total_iterations)?;
        positive("log_every", self.log_every)?;
        hidden_ok(&self.hidden)
    }
}

/// Hyperparameters of the three agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RlHyperparameters {
    pub dqn_linear: DqnHyperparameters,
    pub dqn_exp: DqnHyperparameters,
    pub ppo: PpoHyperparameters,
}

impl Default for RlHyperparameters {
    fn default() -> Self {
        Self {
            dqn_linear: DqnHyperparameters::linear(),
            dqn_exp: DqnHyperparameters::exponential(),
            ppo: PpoHyperparameters::default(),
        }
    }
}

impl RlHyperparameters {
    pub fn validate(&self) -> Result<(), RlError> {
        self.dqn_linear.validate()?;
        self.dqn_exp.validate()?;
        self.ppo.validate()
    }

    /// Same total iteration count for every agent.
    pub fn with_iterations(mut self, t: usize) -> Self {
        self.dqn_linear.total_iterations = t;
        self.dqn_exp.total_iterations = t;
        self.ppo.total_iterations = t;
        self
    }
}

fn check(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), RlError> {
    if value.is_finite() && (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(RlError::Hyperparameter { name, value })
    }
}

fn positive(name: &'static str, value: usize) -> Result<(), RlError> {
    if value > 0 {
        Ok(())
    } else {
        Err(RlError::Hyperparameter { name, value: 0.0 })
    }
}

fn hidden_ok(hidden: &[usize]) -> Result<(), RlError> {
    match hidden.iter().find(|&&h| h == 0) {
        Some(_) => Err(RlError::Hyperparameter { name: "hidden", value: 0.0 }),
        None => Ok(()),
    }
}

fn decay_steps(hp: &DqnHyperparameters) -> f64 {
    hp.exploration_fraction * hp.total_iterations as f64
}

/// `ε(t) = max(ε_final, ε_0 − (ε_0 − ε_final)·t / (fraction·T))`.
pub fn epsilon_linear(t: usize, hp: &DqnHyperparameters) -> f64 {
    let progress = t as f64 / decay_steps(hp);
    let eps = hp.epsilon_initial - (hp.epsilon_initial - hp.epsilon_final) * progress;
    eps.max(hp.epsilon_final)
}

/// Geometric decay from `ε_0` reaching `ε_final` at `fraction·T`.
pub fn epsilon_exponential(t: usize, hp: &DqnHyperparameters) -> f64 {
    let rate = (hp.epsilon_initial / hp.epsilon_final).ln() / decay_steps(hp);
    (hp.epsilon_initial * (-rate * t as f64).exp()).max(hp.epsilon_final)
}
