use std::collections::VecDeque;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dqn::{dqn_select_action, dqn_train_step};
use super::mlp::{argmax, Mlp};
use super::optim::Adam;
use super::ppo::{categorical_entropy, ppo_update, sample_action, PpoBatch};
use super::replay::{ReplayBuffer, Transition};
use super::{AgentKind, DqnHyperparameters, PpoHyperparameters, RlError, RlHyperparameters};
use crate::environment::Environment;

pub const LOG_HEADER: &str = "iteration,mean_episode_reward,explore_metric";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub iteration: usize,
    /// Mean reward of the trailing 100 episodes.
    pub mean_reward: f64,
    /// ε for DQN, mean policy entropy of the trailing 100 episodes for PPO.
    pub explore: f64,
}

/// A trained greedy decision rule.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Dqn { q: Mlp },
    Ppo { actor: Mlp, critic: Mlp },
}

impl Policy {
    /// DQN: argmax Q. PPO: mode of the categorical.
    pub fn greedy_action(&self, features: &[f64]) -> Result<usize, RlError> {
        let net = match self {
            Policy::Dqn { q } => q,
            Policy::Ppo { actor, .. } => actor,
        };
        Ok(argmax(&net.forward(features)?))
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Policy::Dqn { q } => q.input_dim(),
            Policy::Ppo { actor, .. } => actor.input_dim(),
        }
    }

    /// Where a PPO critic is stored next to the actor file.
    pub fn critic_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".critic");
        PathBuf::from(s)
    }

    /// Writes the Q-network or the actor to `path`, and a PPO critic next to it.
    pub fn save(&self, path: &Path) -> Result<(), RlError> {
        match self {
            Policy::Dqn { q } => fs::write(path, q.to_text())?,
            Policy::Ppo { actor, critic } => {
                fs::write(path, actor.to_text())?;
                fs::write(Self::critic_path(path), critic.to_text())?;
            }
        }
        Ok(())
    }

    pub fn load(kind: AgentKind, path: &Path) -> Result<Self, RlError> {
        let first = Mlp::parse_text(&fs::read_to_string(path)?)?;
        Ok(match kind {
            AgentKind::Ppo => Policy::Ppo {
                actor: first,
                critic: Mlp::parse_text(&fs::read_to_string(Self::critic_path(path))?)?,
            },
            _ => Policy::Dqn { q: first },
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrainedAgent {
    pub kind: AgentKind,
    pub policy: Policy,
    pub log: Vec<LogRow>,
}

struct Trailing {
    rewards: VecDeque<f64>,
    extra: VecDeque<f64>,
}

impl Trailing {
    const WINDOW: usize = 100;

    fn new() -> Self {
        Self {
            rewards: VecDeque::with_capacity(Self::WINDOW),
            extra: VecDeque::with_capacity(Self::WINDOW),
        }
    }

    fn push(&mut self, r: f64, extra: f64) {
        if self.rewards.len() == Self::WINDOW {
            self.rewards.pop_front();
            self.extra.pop_front();
        }
        self.rewards.push_back(r);
        self.extra.push_back(extra);
    }

    fn mean(v: &VecDeque<f64>) -> f64 {
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }
}

fn hidden_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

/// Train `kind` on `env` for the agent's configured number of iterations.
pub fn train<E: Environment + ?Sized>(
    kind: AgentKind,
    env: &mut E,
    hp: &RlHyperparameters,
    seed: u64,
) -> Result<TrainedAgent, RlError> {
    match kind {
        AgentKind::DqnLinear => train_dqn(env, &hp.dqn_linear, seed),
        AgentKind::DqnExponential => train_dqn(env, &hp.dqn_exp, seed),
        AgentKind::Ppo => train_ppo(env, &hp.ppo, seed),
    }
    .map(|(policy, log)| TrainedAgent { kind, policy, log })
}

pub fn train_dqn<E: Environment + ?Sized>(
    env: &mut E,
    hp: &DqnHyperparameters,
    seed: u64,
) -> Result<(Policy, Vec<LogRow>), RlError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = hidden_sizes(env.feature_dim(), &hp.hidden, env.n_actions());
    let mut net = Mlp::new(&sizes, 1.0, &mut rng);
    let mut target = net.clone();
    let mut adam = Adam::new(&net, hp.learning_rate);
    let mut buffer = ReplayBuffer::new(hp.buffer_size);
    let mut trailing = Trailing::new();
    let mut log = Vec::with_capacity(hp.total_iterations / hp.log_every);

    for t in 0..hp.total_iterations {
        let s = env.reset(&mut rng)?;
        let eps = hp.epsilon(t);
        let a = dqn_select_action(&net, &s, eps, &mut rng)?;
        let r = env.step(a)?;
        buffer.push(Transition::terminal(s, a, r));
        if buffer.len() >= hp.batch_size {
            let batch = buffer.sample(hp.batch_size, &mut rng);
            let loss = dqn_train_step(&mut net, &target, &batch, hp, &mut adam)?;
            if !loss.is_finite() {
                return Err(RlError::Diverged(t + 1));
            }
        }
        if (t + 1) % hp.target_update == 0 {
            target.clone_from(&net);
        }
        trailing.push(r, eps);
        if (t + 1) % hp.log_every == 0 {
            log.push(LogRow {
                iteration: t + 1,
                mean_reward: Trailing::mean(&trailing.rewards),
                explore: eps,
            });
            if (t + 1) % 10_000 == 0 {
                log::info!("iteration {}: mean reward {:.4}, ε {:.3e}", t + 1, Trailing::mean(&trailing.rewards), eps);
            }
        }
    }
    Ok((Policy::Dqn { q: net }, log))
}

pub fn train_ppo<E: Environment + ?Sized>(
    env: &mut E,
    hp: &PpoHyperparameters,
    seed: u64,
) -> Result<(Policy, Vec<LogRow>), RlError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = env.feature_dim();
    let mut actor = Mlp::new(&hidden_sizes(dim, &hp.hidden, env.n_actions()), 0.01, &mut rng);
    let mut critic = Mlp::new(&hidden_sizes(dim, &hp.hidden, 1), 1.0, &mut rng);
    let mut adam_actor = Adam::new(&actor, hp.learning_rate);
    let mut adam_critic = Adam::new(&critic, hp.learning_rate);
    let mut trailing = Trailing::new();
    let mut log = Vec::with_capacity(hp.total_iterations / hp.log_every);

    let mut t = 0;
    while t < hp.total_iterations {
        let len = hp.rollout.min(hp.total_iterations - t);
        let mut states = Array2::zeros((len, dim));
        let mut actions = Vec::with_capacity(len);
        let mut logp_old = Vec::with_capacity(len);
        let mut advantages = Vec::with_capacity(len);
        let mut returns = Vec::with_capacity(len);
        for i in 0..len {
            let s = env.reset(&mut rng)?;
            let logits = actor.forward(&s)?;
            let (a, lp) = sample_action(&logits, &mut rng);
            let v = critic.forward(&s)?[0];
            let r = env.step(a)?;
            states.row_mut(i).assign(&ArrayView1::from(s.as_slice()));
            actions.push(a);
            logp_old.push(lp);
            advantages.push(r - v);
            returns.push(r);
            t += 1;
            trailing.push(r, categorical_entropy(ArrayView1::from(logits.as_slice())));
            if t % hp.log_every == 0 {
                log.push(LogRow {
                    iteration: t,
                    mean_reward: Trailing::mean(&trailing.rewards),
                    explore: Trailing::mean(&trailing.extra),
                });
                if t % 10_000 == 0 {
                    log::info!("iteration {t}: mean reward {:.4}", Trailing::mean(&trailing.rewards));
                }
            }
        }
        let mut rollout = PpoBatch {
            states,
            actions,
            logp_old,
            advantages,
            returns,
        };
        rollout.normalize_advantages();
        let losses = ppo_update(&rollout, &mut actor, &mut critic, &mut adam_actor, &mut adam_critic, hp, &mut rng)?;
        if !losses.total.is_finite() {
            return Err(RlError::Diverged(t));
        }
    }
    Ok((Policy::Ppo { actor, critic }, log))
}

pub fn write_training_log<W: Write>(mut w: W, rows: &[LogRow]) -> std::io::Result<()> {
    writeln!(w, "{LOG_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.iteration, r.mean_reward, r.explore)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::MatchingEnvironment;

    fn short() -> RlHyperparameters {
        RlHyperparameters::default().with_iterations(3_000)
    }

    #[test]
    fn log_cadence_and_header() {
        let mut env = MatchingEnvironment::new(4);
        let agent = train(AgentKind::DqnLinear, &mut env, &short(), 1).unwrap();
        assert_eq!(agent.log.len(), 30);
        assert_eq!(agent.log[0].iteration, 100);
        assert_eq!(agent.log.last().unwrap().iteration, 3_000);
        let mut buf = Vec::new();
        write_training_log(&mut buf, &agent.log).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,mean_episode_reward,explore_metric\n100,"));
        assert_eq!(text.lines().count(), 31);
    }

    #[test]
    fn same_seed_same_weights() {
        for kind in [AgentKind::DqnExponential, AgentKind::Ppo] {
            let a = train(kind, &mut MatchingEnvironment::new(4), &short(), 7).unwrap();
            let b = train(kind, &mut MatchingEnvironment::new(4), &short(), 7).unwrap();
            assert_eq!(a.policy, b.policy);
            assert_eq!(a.log, b.log);
        }
    }

    #[test]
    fn policy_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for kind in AgentKind::ALL {
            let hp = RlHyperparameters::default().with_iterations(300);
            let agent = train(kind, &mut MatchingEnvironment::new(3), &hp, 2).unwrap();
            let path = dir.path().join(format!("{kind}.net"));
            agent.policy.save(&path).unwrap();
            assert_eq!(Policy::load(kind, &path).unwrap(), agent.policy);
        }
        assert!(dir.path().join("ppo.net.critic").exists());
    }
}
