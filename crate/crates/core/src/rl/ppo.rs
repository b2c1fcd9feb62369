use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use super::mlp::{Gradients, Mlp};
use super::optim::Adam;
use super::{PpoHyperparameters, RlError};

/// `exp(logp_new − logp_old)`.
pub fn ppo_ratio(logp_new: f64, logp_old: f64) -> f64 {
    (logp_new - logp_old).exp()
}

/// Clamp `p` to `[1 − ε, 1 + ε]`.
pub fn ppo_clip(p: f64, eps: f64) -> f64 {
    if p < 1.0 - eps {
        1.0 - eps
    } else if p > 1.0 + eps {
        1.0 + eps
    } else {
        p
    }
}

pub fn log_softmax(logits: ArrayView1<f64>) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

pub fn categorical_entropy(logits: ArrayView1<f64>) -> f64 {
    -log_softmax(logits).iter().map(|lp| lp.exp() * lp).sum::<f64>()
}

/// One-step transitions collected under the old policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoBatch {
    pub states: Array2<f64>,
    pub actions: Vec<usize>,
    pub logp_old: Vec<f64>,
    pub advantages: Vec<f64>,
    /// Value targets; the episode reward for single-step episodes.
    pub returns: Vec<f64>,
}

impl PpoBatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> PpoBatch {
        PpoBatch {
            states: self.states.select(Axis(0), idx),
            actions: idx.iter().map(|&i| self.actions[i]).collect(),
            logp_old: idx.iter().map(|&i| self.logp_old[i]).collect(),
            advantages: idx.iter().map(|&i| self.advantages[i]).collect(),
            returns: idx.iter().map(|&i| self.returns[i]).collect(),
        }
    }

    /// Shift and scale advantages to zero mean and unit variance.
    pub fn normalize_advantages(&mut self) {
        let n = self.advantages.len() as f64;
        if n == 0.0 {
            return;
        }
        let mean = self.advantages.iter().sum::<f64>() / n;
        let var = self.advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        let scale = 1.0 / (var.sqrt() + 1e-8);
        self.advantages.iter_mut().for_each(|a| *a = (*a - mean) * scale);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpoLosses {
    pub clip: f64,
    pub value: f64,
    pub entropy: f64,
    /// Maximized objective `L_CLIP + h·H − v·L_V`.
    pub total: f64,
}

fn check(batch: &PpoBatch, actor: &Mlp, critic: &Mlp) -> Result<(), RlError> {
    if batch.is_empty() {
        return Err(RlError::EmptyRollout);
    }
    let n = batch.len();
    for len in [batch.states.nrows(), batch.logp_old.len(), batch.advantages.len(), batch.returns.len()] {
        if len != n {
            return Err(RlError::ShapeMismatch { expected: n, found: len });
        }
    }
    if critic.output_dim() != 1 {
        return Err(RlError::ShapeMismatch { expected: 1, found: critic.output_dim() });
    }
    if let Some(&a) = batch.actions.iter().find(|&&a| a >= actor.output_dim()) {
        return Err(RlError::ShapeMismatch { expected: actor.output_dim(), found: a });
    }
    Ok(())
}

pub fn ppo_losses(batch: &PpoBatch, actor: &Mlp, critic: &Mlp, hp: &PpoHyperparameters) -> Result<PpoLosses, RlError> {
    Ok(evaluate(batch, actor, critic, hp, false)?.0)
}

/// Losses plus the gradients of `−L_total` for the actor and the critic.
pub fn ppo_loss_gradients(
    batch: &PpoBatch,
    actor: &Mlp,
    critic: &Mlp,
    hp: &PpoHyperparameters,
) -> Result<(PpoLosses, Gradients, Gradients), RlError> {
    let (losses, grads) = evaluate(batch, actor, critic, hp, true)?;
    let (ga, gc) = grads.expect("requested");
    Ok((losses, ga, gc))
}

#[allow(clippy::type_complexity)]
fn evaluate(
    batch: &PpoBatch,
    actor: &Mlp,
    critic: &Mlp,
    hp: &PpoHyperparameters,
    want_grads: bool,
) -> Result<(PpoLosses, Option<(Gradients, Gradients)>), RlError> {
    check(batch, actor, critic)?;
    let n = batch.len() as f64;
    let x = batch.states.view();
    let actor_tape = actor.forward_tape(x, actor.layers.len())?;
    let critic_tape = critic.forward_tape(x, critic.layers.len())?;
    let logits = actor_tape.output();
    let values = critic_tape.output();

    let mut up_actor = Array2::zeros(logits.raw_dim());
    let mut up_critic = Array2::zeros(values.raw_dim());
    let (mut l_clip, mut l_v, mut ent) = (0.0, 0.0, 0.0);
    for i in 0..batch.len() {
        let logp = log_softmax(logits.row(i));
        let h_i = -logp.iter().map(|lp| lp.exp() * lp).sum::<f64>();
        let a = batch.actions[i];
        let adv = batch.advantages[i];
        let p = ppo_ratio(logp[a], batch.logp_old[i]);
        let unclipped = p * adv;
        let clipped = ppo_clip(p, hp.clip) * adv;
        l_clip += unclipped.min(clipped) / n;
        ent += h_i / n;
        let err = values[[i, 0]] - batch.returns[i];
        l_v += err * err / n;

        if want_grads {
            // d objective / d logp_new
            let g_logp = if unclipped <= clipped { unclipped / n } else { 0.0 };
            let mut row = up_actor.row_mut(i);
            for (j, &lp) in logp.iter().enumerate() {
                let pi = lp.exp();
                let d_logp = if j == a { 1.0 - pi } else { -pi };
                let d_ent = -pi * (lp + h_i);
                row[j] = -(g_logp * d_logp + hp.entropy_coef * d_ent / n);
            }
            up_critic[[i, 0]] = hp.value_coef * 2.0 * err / n;
        }
    }
    let losses = PpoLosses {
        clip: l_clip,
        value: l_v,
        entropy: ent,
        total: l_clip + hp.entropy_coef * ent - hp.value_coef * l_v,
    };
    if !want_grads {
        return Ok((losses, None));
    }
    let mut ga = Gradients::zeros_like(actor);
    actor.backward(&actor_tape, up_actor, &mut ga)?;
    let mut gc = Gradients::zeros_like(critic);
    critic.backward(&critic_tape, up_critic, &mut gc)?;
    Ok((losses, Some((ga, gc))))
}

/// Sample from the softmax of `logits`; returns the action and its log-probability.
pub(crate) fn sample_action<R: Rng + ?Sized>(logits: &[f64], rng: &mut R) -> (usize, f64) {
    let logp = log_softmax(ArrayView1::from(logits));
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, lp) in logp.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            return (j, *lp);
        }
    }
    let last = logp.len() - 1;
    (last, logp[last])
}

/// Several epochs of shuffled minibatch ascent on the rollout; returns the
/// losses of the last minibatch.
pub(crate) fn ppo_update<R: Rng + ?Sized>(
    rollout: &PpoBatch,
    actor: &mut Mlp,
    critic: &mut Mlp,
    adam_actor: &mut Adam,
    adam_critic: &mut Adam,
    hp: &PpoHyperparameters,
    rng: &mut R,
) -> Result<PpoLosses, RlError> {
    if rollout.is_empty() {
        return Err(RlError::EmptyRollout);
    }
    let mut idx: Vec<usize> = (0..rollout.len()).collect();
    let mut last = None;
    for _ in 0..hp.epochs {
        idx.shuffle(rng);
        for chunk in idx.chunks(hp.batch_size) {
            let mb = rollout.select(chunk);
            let (losses, ga, gc) = ppo_loss_gradients(&mb, actor, critic, hp)?;
            adam_actor.apply(actor, &ga);
            adam_critic.apply(critic, &gc);
            last = Some(losses);
        }
    }
    Ok(last.expect("at least one minibatch"))
}
