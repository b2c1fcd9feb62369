use ndarray::{Array2, Axis};
use rand::Rng;

use super::mlp::{argmax, Gradients, Mlp};
use super::optim::Adam;
use super::replay::Transition;
use super::{DqnHyperparameters, RlError};

/// ε-greedy action: uniform with probability ε, otherwise the greedy head.
pub fn dqn_select_action<R: Rng + ?Sized>(
    net: &Mlp,
    state: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize, RlError> {
    if rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..net.output_dim()));
    }
    Ok(argmax(&net.forward(state)?))
}

/// Bellman targets `r + γ(1 − done)·max_a Q_target(s', a)`. The target network
/// is only evaluated on non-terminal samples.
pub fn dqn_targets(target: &Mlp, batch: &[&Transition], gamma: f64) -> Result<Vec<f64>, RlError> {
    let mut y: Vec<f64> = batch.iter().map(|t| t.reward).collect();
    let live: Vec<usize> = (0..batch.len()).filter(|&i| !batch[i].done).collect();
    if live.is_empty() {
        return Ok(y);
    }
    let dim = target.input_dim();
    let mut x = Array2::zeros((live.len(), dim));
    for (row, &i) in live.iter().enumerate() {
        let s = &batch[i].next_state;
        if s.len() != dim {
            return Err(RlError::ShapeMismatch { expected: dim, found: s.len() });
        }
        x.row_mut(row).assign(&ndarray::ArrayView1::from(s.as_slice()));
    }
    let q = target.forward_batch(x.view())?;
    for (row, &i) in live.iter().enumerate() {
        let best = q.row(row).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        y[i] += gamma * best;
    }
    Ok(y)
}

fn states(batch: &[&Transition], dim: usize) -> Result<Array2<f64>, RlError> {
    let mut x = Array2::zeros((batch.len(), dim));
    for (mut row, t) in x.axis_iter_mut(Axis(0)).zip(batch) {
        if t.state.len() != dim {
            return Err(RlError::ShapeMismatch { expected: dim, found: t.state.len() });
        }
        row.assign(&ndarray::ArrayView1::from(t.state.as_slice()));
    }
    Ok(x)
}

/// Mean squared TD error of the batch and its parameter gradients. Only the
/// output heads of the sampled actions receive gradient.
pub fn dqn_loss_gradients(
    net: &Mlp,
    target: &Mlp,
    batch: &[&Transition],
    gamma: f64,
) -> Result<(f64, Gradients), RlError> {
    if batch.is_empty() {
        return Err(RlError::ShapeMismatch { expected: 1, found: 0 });
    }
    let y = dqn_targets(target, batch, gamma)?;
    let x = states(batch, net.input_dim())?;
    let depth = net.layers.len() - 1;
    let tape = net.forward_tape(x.view(), depth)?;
    let h = tape.output();
    let out = &net.layers[depth];
    let n = batch.len() as f64;

    let mut grads = Gradients::zeros_like(net);
    let mut upstream = Array2::zeros(h.raw_dim());
    let mut loss = 0.0;
    for (i, t) in batch.iter().enumerate() {
        let a = t.action;
        if a >= out.outputs() {
            return Err(RlError::ShapeMismatch { expected: out.outputs(), found: a });
        }
        let col = out.w.column(a);
        let q = h.row(i).dot(&col) + out.b[a];
        let err = q - y[i];
        loss += err * err / n;
        let g = 2.0 * err / n;
        grads.w[depth].column_mut(a).scaled_add(g, &h.row(i));
        grads.b[depth][a] += g;
        upstream.row_mut(i).scaled_add(g, &col);
    }
    net.backward(&tape, upstream, &mut grads)?;
    Ok((loss, grads))
}

/// One Adam step on the TD loss; returns the loss before the step.
pub fn dqn_train_step(
    net: &mut Mlp,
    target: &Mlp,
    batch: &[&Transition],
    hp: &DqnHyperparameters,
    adam: &mut Adam,
) -> Result<f64, RlError> {
    let (loss, grads) = dqn_loss_gradients(net, target, batch, hp.gamma)?;
    adam.apply(net, &grads);
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::{Activation, Layer};
    use ndarray::Array1;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bias_net(n_in: usize, biases: Vec<f64>) -> Mlp {
        Mlp::from_layers(vec![Layer {
            w: Array2::zeros((n_in, biases.len())),
            b: Array1::from(biases),
            activation: Activation::Identity,
        }])
        .unwrap()
    }

    fn poisoned(net: &Mlp) -> Mlp {
        let mut bad = net.clone();
        for l in &mut bad.layers {
            l.w.fill(f64::NAN);
            l.b.fill(f64::NAN);
        }
        bad
    }

    #[test]
    fn terminal_targets_never_read_the_target_network() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::new(&[5, 8, 6], 1.0, &mut rng);
        let ts: Vec<Transition> = (0..6)
            .map(|a| Transition::terminal(vec![0.1 * a as f64; 5], a, a as f64 - 2.0))
            .collect();
        let batch: Vec<&Transition> = ts.iter().collect();
        let y = dqn_targets(&poisoned(&net), &batch, 0.99).unwrap();
        assert_eq!(y, vec![-2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        let (loss, _) = dqn_loss_gradients(&net, &poisoned(&net), &batch, 0.99).unwrap();
        assert!(loss.is_finite());
    }

    #[test]
    fn hand_evaluated_squared_error() {
        let net = bias_net(2, vec![0.0, 0.3, 0.0]);
        let t = Transition::terminal(vec![1.0, -1.0], 1, 0.72);
        let (loss, grads) = dqn_loss_gradients(&net, &net, &[&t], 0.99).unwrap();
        assert!((loss - 0.1764).abs() < 1e-12);
        assert!((grads.b[0][1] - 2.0 * (0.3 - 0.72)).abs() < 1e-12);
        assert_eq!(grads.b[0][0], 0.0);
        assert_eq!(grads.b[0][2], 0.0);
    }

    #[test]
    fn non_terminal_target_discounts_next_value() {
        let target = bias_net(1, vec![0.2, 1.0, -3.0]);
        let t = Transition {
            state: vec![0.0],
            action: 0,
            reward: 0.0,
            next_state: vec![0.5],
            done: false,
        };
        let y = dqn_targets(&target, &[&t], 0.99).unwrap();
        assert!((y[0] - 0.99).abs() < 1e-15);
    }

    #[test]
    fn gradients_only_touch_sampled_heads_and_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut net = Mlp::new(&[5, 12, 12, 9], 1.0, &mut rng);
        let ts: Vec<Transition> = (0..7)
            .map(|i| {
                let s: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
                Transition::terminal(s, (i * 2) % 5, rng.random_range(-1.0..1.0))
            })
            .collect();
        let batch: Vec<&Transition> = ts.iter().collect();
        let target = net.clone();
        let (_, grads) = dqn_loss_gradients(&net, &target, &batch, 0.99).unwrap();
        for a in [5, 6, 7, 8] {
            assert!(grads.w[2].column(a).iter().all(|&g| g == 0.0));
            assert_eq!(grads.b[2][a], 0.0);
        }
        let flat = grads.flat();
        for _ in 0..60 {
            let idx = rng.random_range(0..net.n_params());
            let orig = *net.param_mut(idx);
            let h = 1e-5;
            *net.param_mut(idx) = orig + h;
            let lp = dqn_loss_gradients(&net, &target, &batch, 0.99).unwrap().0;
            *net.param_mut(idx) = orig - h;
            let lm = dqn_loss_gradients(&net, &target, &batch, 0.99).unwrap().0;
            *net.param_mut(idx) = orig;
            let fd = (lp - lm) / (2.0 * h);
            assert!((fd - flat[idx]).abs() <= 1e-4 * fd.abs().max(flat[idx].abs()).max(1e-6));
        }
    }

    #[test]
    fn greedy_and_uniform_selection() {
        let net = bias_net(1, (0..360).map(|a| if a == 42 { 1.0 } else { 0.0 }).collect());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            assert_eq!(dqn_select_action(&net, &[0.0], 0.0, &mut rng).unwrap(), 42);
        }
        let mut counts = vec![0usize; 360];
        for _ in 0..36_000 {
            counts[dqn_select_action(&net, &[0.0], 1.0, &mut rng).unwrap()] += 1;
        }
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 100.0).powi(2) / 100.0).sum();
        assert!(chi2 < 450.0, "χ² = {chi2}");
        assert!(counts.iter().all(|&c| (c as f64 - 100.0).abs() <= 35.0));
        let draw = |seed| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            (0..20).map(|_| dqn_select_action(&net, &[0.0], 0.5, &mut r).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
    }

    #[test]
    fn train_step_reduces_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut net = Mlp::new(&[3, 16, 4], 1.0, &mut rng);
        let ts: Vec<Transition> = (0..32)
            .map(|i| Transition::terminal(vec![(i % 4) as f64, 1.0, -1.0], i % 4, (i % 4) as f64 * 0.25))
            .collect();
        let batch: Vec<&Transition> = ts.iter().collect();
        let hp = DqnHyperparameters { learning_rate: 1e-2, ..DqnHyperparameters::linear() };
        let mut adam = Adam::new(&net, hp.learning_rate);
        let target = net.clone();
        let first = dqn_train_step(&mut net, &target, &batch, &hp, &mut adam).unwrap();
        let mut last = first;
        for _ in 0..200 {
            last = dqn_train_step(&mut net, &target, &batch, &hp, &mut adam).unwrap();
        }
        assert!(last < 0.05 * first, "{first} → {last}");
    }
}
