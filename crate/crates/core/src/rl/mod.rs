//! Neural function approximation and the DQN / PPO agents.
//!
//! Everything is written against [`crate::environment::Environment`], so the
//! same training loop runs on the inrush table and on the small synthetic
//! [`MatchingEnvironment`].

mod dqn;
mod evaluate;
mod hyper;
mod mlp;
mod optim;
mod ppo;
mod replay;
mod synthetic;
mod train;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use dqn::{dqn_select_action, dqn_targets, dqn_train_step};
pub use evaluate::{
    evaluate_policy, write_results, Evaluation, EvaluationRow, SummaryStats, RESULTS_HEADER,
};
pub use hyper::{
    epsilon_exponential, epsilon_linear, DqnHyperparameters, EpsilonDecay, PpoHyperparameters, RlHyperparameters,
};
pub use mlp::{argmax, Activation, Gradients, Layer, Mlp, Tape};
pub use optim::{adam_update, Adam};
pub use ppo::{
    categorical_entropy, log_softmax, ppo_clip, ppo_loss_gradients, ppo_losses, ppo_ratio, PpoBatch,
    PpoLosses,
};
pub use replay::{ReplayBuffer, Transition};
pub use synthetic::MatchingEnvironment;
pub use train::{
    train, train_dqn, train_ppo, write_training_log, LogRow, Policy, TrainedAgent, LOG_HEADER,
};

use crate::environment::EnvError;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("PPO update on an empty rollout")]
    EmptyRollout,
    #[error("network file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown agent `{0}` (expected dqn-linear, dqn-exp or ppo)")]
    UnknownAgent(String),
    #[error("hyperparameter {name} = {value} is outside its allowed range")]
    Hyperparameter { name: &'static str, value: f64 },
    #[error("training diverged at iteration {0}")]
    Diverged(usize),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Circuit(#[from] crate::circuit::CircuitError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    DqnLinear,
    DqnExponential,
    Ppo,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [AgentKind::DqnLinear, AgentKind::DqnExponential, AgentKind::Ppo];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::DqnLinear => "dqn-linear",
            AgentKind::DqnExponential => "dqn-exp",
            AgentKind::Ppo => "ppo",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = RlError;
    fn from_str(s: &str) -> Result<Self, RlError> {
        match s {
            "dqn-linear" => Ok(AgentKind::DqnLinear),
            "dqn-exp" | "dqn-exponential" => Ok(AgentKind::DqnExponential),
            "ppo" => Ok(AgentKind::Ppo),
            other => Err(RlError::UnknownAgent(other.to_string())),
        }
    }
}
