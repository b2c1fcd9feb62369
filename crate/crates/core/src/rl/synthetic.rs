use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::environment::{EnvError, Environment};

/// `n` one-hot states; action `a` earns 1 when it equals the state index.
#[derive(Debug, Clone)]
pub struct MatchingEnvironment {
    n: usize,
    current: Option<usize>,
}

impl MatchingEnvironment {
    pub fn new(n: usize) -> Self {
        assert!(n > 0);
        Self { n, current: None }
    }

    pub fn features(&self, state: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        x[state] = 1.0;
        x
    }

    /// Fraction of states whose chosen action is optimal.
    pub fn optimal_rate(&self, mut policy: impl FnMut(&[f64]) -> usize) -> f64 {
        let hits = (0..self.n).filter(|&s| policy(&self.features(s)) == s).count();
        hits as f64 / self.n as f64
    }
}

impl Environment for MatchingEnvironment {
    fn feature_dim(&self) -> usize {
        self.n
    }

    fn n_actions(&self) -> usize {
        self.n
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, EnvError> {
        let s = rng.random_range(0..self.n);
        self.current = Some(s);
        Ok(self.features(s))
    }

    fn step(&mut self, action: usize) -> Result<f64, EnvError> {
        if action >= self.n {
            return Err(EnvError::InvalidAction(action));
        }
        let s = self.current.take().ok_or(EnvError::InvalidAction(action))?;
        Ok(if action == s { 1.0 } else { 0.0 })
    }
}
