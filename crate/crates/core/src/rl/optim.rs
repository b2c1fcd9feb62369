use super::mlp::{Gradients, Mlp};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// One bias-corrected Adam step (`step` ≥ 1) on flat parameter slices.
/// `m` and `v` hold the running first and second moments.
pub fn adam_update(params: &mut [f64], grads: &[f64], m: &mut [f64], v: &mut [f64], step: u64, lr: f64) {
    assert!(step >= 1, "Adam steps are counted from 1");
    assert!(params.len() == grads.len() && m.len() == grads.len() && v.len() == grads.len());
    let c1 = 1.0 - BETA1.powi(step as i32);
    let c2 = 1.0 - BETA2.powi(step as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g;
        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
    }
}

/// Adam state for one network.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    step: u64,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        Self {
            lr,
            step: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Descend along `grads`.
    pub fn apply(&mut self, net: &mut Mlp, grads: &Gradients) {
        self.step += 1;
        for (l, layer) in net.layers.iter_mut().enumerate() {
            adam_update(
                layer.w.as_slice_mut().expect("standard layout"),
                grads.w[l].as_slice().expect("standard layout"),
                self.m.w[l].as_slice_mut().expect("standard layout"),
                self.v.w[l].as_slice_mut().expect("standard layout"),
                self.step,
                self.lr,
            );
            adam_update(
                layer.b.as_slice_mut().expect("contiguous"),
                grads.b[l].as_slice().expect("contiguous"),
                self.m.b[l].as_slice_mut().expect("contiguous"),
                self.v.b[l].as_slice_mut().expect("contiguous"),
                self.step,
                self.lr,
            );
        }
    }
}
