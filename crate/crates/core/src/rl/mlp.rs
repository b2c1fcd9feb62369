use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::RlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        })
    }
}

impl FromStr for Activation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(format!("unknown activation `{other}`")),
        }
    }
}

/// Affine map `x·W + b` followed by an activation; `W` is `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.w.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.w.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Per-layer parameter gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w: Vec<Array2<f64>>,
    pub b: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            w: net.layers.iter().map(|l| Array2::zeros(l.w.raw_dim())).collect(),
            b: net.layers.iter().map(|l| Array1::zeros(l.b.raw_dim())).collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.w.iter().zip(&self.b) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }
}

/// Layer inputs and pre-activations of a batched forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    /// `inputs[l]` feeds layer `l`; the last entry is the network output.
    pub inputs: Vec<Array2<f64>>,
    pub pre: Vec<Array2<f64>>,
}

impl Tape {
    pub fn output(&self) -> &Array2<f64> {
        self.inputs.last().expect("tape holds the input")
    }
}

fn activate(z: &mut Array2<f64>, act: Activation) {
    if act == Activation::Relu {
        z.mapv_inplace(|v| v.max(0.0));
    }
}

impl Mlp {
    /// Fully connected network with ReLU hidden layers and an identity output.
    /// Weights are uniform in ±√(6/in) (±√(1/in) and scaled by `output_scale`
    /// on the output layer); biases start at zero.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output_scale: f64, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|l| {
                let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
                let last = l + 1 == n;
                let bound = if last {
                    output_scale * (1.0 / fan_in as f64).sqrt()
                } else {
                    (6.0 / fan_in as f64).sqrt()
                };
                Layer {
                    w: Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-1.0..1.0) * bound),
                    b: Array1::zeros(fan_out),
                    activation: if last { Activation::Identity } else { Activation::Relu },
                }
            })
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self, RlError> {
        if layers.is_empty() {
            return Err(RlError::ShapeMismatch { expected: 1, found: 0 });
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(RlError::ShapeMismatch {
                    expected: pair[0].outputs(),
                    found: pair[1].inputs(),
                });
            }
        }
        for l in &layers {
            if l.b.len() != l.outputs() {
                return Err(RlError::ShapeMismatch {
                    expected: l.outputs(),
                    found: l.b.len(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Mutable reference to the `idx`-th parameter in [`Gradients::flat`] order.
    pub fn param_mut(&mut self, mut idx: usize) -> &mut f64 {
        for l in &mut self.layers {
            if idx < l.w.len() {
                let cols = l.w.ncols();
                return &mut l.w[[idx / cols, idx % cols]];
            }
            idx -= l.w.len();
            if idx < l.b.len() {
                return &mut l.b[idx];
            }
            idx -= l.b.len();
        }
        panic!("parameter index out of range");
    }

    fn check_input(&self, cols: usize) -> Result<(), RlError> {
        if cols != self.input_dim() {
            return Err(RlError::ShapeMismatch {
                expected: self.input_dim(),
                found: cols,
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, RlError> {
        self.check_input(x.len())?;
        let mut h = x.to_vec();
        for l in &self.layers {
            let mut z = l.b.to_vec();
            for (i, &xi) in h.iter().enumerate() {
                if xi != 0.0 {
                    for (zj, wij) in z.iter_mut().zip(l.w.row(i)) {
                        *zj += xi * wij;
                    }
                }
            }
            if l.activation == Activation::Relu {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            h = z;
        }
        Ok(h)
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, RlError> {
        self.check_input(x.ncols())?;
        let mut h = x.to_owned();
        for l in &self.layers {
            let mut z = h.dot(&l.w) + &l.b;
            activate(&mut z, l.activation);
            h = z;
        }
        Ok(h)
    }

    /// Forward pass through the first `depth` layers, recording what backprop needs.
    pub fn forward_tape(&self, x: ArrayView2<f64>, depth: usize) -> Result<Tape, RlError> {
        self.check_input(x.ncols())?;
        let mut inputs = vec![x.to_owned()];
        let mut pre = Vec::with_capacity(depth);
        for l in &self.layers[..depth] {
            let z = inputs.last().unwrap().dot(&l.w) + &l.b;
            let mut a = z.clone();
            activate(&mut a, l.activation);
            pre.push(z);
            inputs.push(a);
        }
        Ok(Tape { inputs, pre })
    }

    /// Accumulate into `grads` the parameter gradients of a scalar loss whose
    /// gradient with respect to the output of layer `tape.pre.len() - 1` is `upstream`.
    pub fn backward(&self, tape: &Tape, upstream: Array2<f64>, grads: &mut Gradients) -> Result<(), RlError> {
        let depth = tape.pre.len();
        let out = tape.output();
        if upstream.dim() != out.dim() {
            return Err(RlError::ShapeMismatch {
                expected: out.ncols(),
                found: upstream.ncols(),
            });
        }
        let mut g = upstream;
        for l in (0..depth).rev() {
            if self.layers[l].activation == Activation::Relu {
                ndarray::Zip::from(&mut g).and(&tape.pre[l]).for_each(|gi, &z| {
                    if z <= 0.0 {
                        *gi = 0.0;
                    }
                });
            }
            grads.w[l] += &tape.inputs[l].t().dot(&g);
            grads.b[l] += &g.sum_axis(Axis(0));
            if l > 0 {
                g = g.dot(&self.layers[l].w.t());
            }
        }
        Ok(())
    }

    /// Full-depth tape plus gradients for an output gradient.
    pub fn gradient(&self, x: ArrayView2<f64>, upstream: Array2<f64>) -> Result<Gradients, RlError> {
        let tape = self.forward_tape(x, self.layers.len())?;
        let mut grads = Gradients::zeros_like(self);
        self.backward(&tape, upstream, &mut grads)?;
        Ok(grads)
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }

    /// `mlp <n>` then, per layer, `layer <in> <out> <activation>`, the weight
    /// rows (one input unit per line) and a line of biases.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "mlp {}", self.layers.len())?;
        for l in &self.layers {
            writeln!(w, "layer {} {} {}", l.inputs(), l.outputs(), l.activation)?;
            for row in l.w.rows() {
                let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                writeln!(w, "{}", line.join(" "))?;
            }
            let line: Vec<String> = l.b.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }

    pub fn parse_text(text: &str) -> Result<Self, RlError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let err = |line: usize, message: String| RlError::Parse { line: line + 1, message };
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| RlError::Parse {
                    line: 0,
                    message: format!("unexpected end of file, expected {what}"),
                })
        };
        let (ln, header) = next("header")?;
        let n: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["mlp", n] => n.parse().map_err(|e| err(ln, format!("{e}")))?,
            _ => return Err(err(ln, "expected `mlp <n_layers>`".into())),
        };
        let numbers = |ln: usize, s: &str, count: usize| -> Result<Vec<f64>, RlError> {
            let v: Vec<f64> = s
                .split_whitespace()
                .map(f64::from_str)
                .collect::<Result<_, _>>()
                .map_err(|e| err(ln, format!("{e}")))?;
            if v.len() != count {
                return Err(err(ln, format!("expected {count} values, found {}", v.len())));
            }
            Ok(v)
        };
        let mut layers = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, spec) = next("layer header")?;
            let parts: Vec<&str> = spec.split_whitespace().collect();
            let (fan_in, fan_out, act) = match parts[..] {
                ["layer", i, o, a] => (
                    i.parse::<usize>().map_err(|e| err(ln, format!("{e}")))?,
                    o.parse::<usize>().map_err(|e| err(ln, format!("{e}")))?,
                    a.parse::<Activation>().map_err(|e| err(ln, e))?,
                ),
                _ => return Err(err(ln, "expected `layer <in> <out> <activation>`".into())),
            };
            let mut w = Vec::with_capacity(fan_in * fan_out);
            for _ in 0..fan_in {
                let (ln, row) = next("weight row")?;
                w.extend(numbers(ln, row, fan_out)?);
            }
            let (ln, row) = next("biases")?;
            let b = numbers(ln, row, fan_out)?;
            layers.push(Layer {
                w: Array2::from_shape_vec((fan_in, fan_out), w).expect("sized above"),
                b: Array1::from(b),
                activation: act,
            });
        }
        Self::from_layers(layers)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naive_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        for l in &net.layers {
            let mut out = vec![0.0; l.outputs()];
            for j in 0..l.outputs() {
                let mut acc = l.b[j];
                for i in 0..l.inputs() {
                    acc += h[i] * l.w[[i, j]];
                }
                out[j] = match l.activation {
                    Activation::Relu => acc.max(0.0),
                    Activation::Identity => acc,
                };
            }
            h = out;
        }
        h
    }

    #[test]
    fn zero_weights_output_biases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = Mlp::new(&[3, 4, 2], 1.0, &mut rng);
        for l in &mut net.layers {
            l.w.fill(0.0);
        }
        net.layers[1].b = array![0.5, -1.5];
        assert_eq!(net.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![0.5, -1.5]);
    }

    #[test]
    fn identity_layer_passes_input() {
        let net = Mlp::from_layers(vec![Layer {
            w: Array2::eye(3),
            b: Array1::zeros(3),
            activation: Activation::Identity,
        }])
        .unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.5]).unwrap(), vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn forward_matches_naive_evaluator() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Mlp::new(&[5, 64, 64, 360], 1.0, &mut rng);
        for _ in 0..10 {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = net.forward(&x).unwrap();
            let b = naive_forward(&net, &x);
            let batch = net
                .forward_batch(Array2::from_shape_vec((1, 5), x.clone()).unwrap().view())
                .unwrap();
            for j in 0..360 {
                assert!((a[j] - b[j]).abs() < 1e-12);
                assert!((batch[[0, j]] - b[j]).abs() < 1e-12);
            }
        }
        assert!(matches!(net.forward(&[1.0; 4]), Err(RlError::ShapeMismatch { expected: 5, found: 4 })));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut net = Mlp::new(&[5, 16, 16, 7], 1.0, &mut rng);
        let x = Array2::from_shape_fn((6, 5), |_| rng.random_range(-1.0..1.0));
        let c = Array2::from_shape_fn((6, 7), |_| rng.random_range(-1.0..1.0));
        // loss = Σ c ⊙ out²/2, d loss / d out = c ⊙ out
        let loss = |net: &Mlp| -> f64 {
            let out = net.forward_batch(x.view()).unwrap();
            (&c * &out * &out).sum() / 2.0
        };
        let out = net.forward_batch(x.view()).unwrap();
        let grads = net.gradient(x.view(), &c * &out).unwrap().flat();
        for _ in 0..100 {
            let idx = rng.random_range(0..net.n_params());
            let h = 1e-5;
            let orig = *net.param_mut(idx);
            *net.param_mut(idx) = orig + h;
            let lp = loss(&net);
            *net.param_mut(idx) = orig - h;
            let lm = loss(&net);
            *net.param_mut(idx) = orig;
            let fd = (lp - lm) / (2.0 * h);
            let g = grads[idx];
            assert!((fd - g).abs() <= 1e-4 * fd.abs().max(g.abs()).max(1e-6), "{idx}: {fd} vs {g}");
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::new(&[4, 8, 3], 1.0, &mut rng);
        let x = Array2::from_shape_fn((5, 4), |_| rng.random_range(-1.0..1.0));
        let g = net.gradient(x.view(), Array2::zeros((5, 3))).unwrap();
        assert!(g.flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_net_weight_gradient_is_input_times_upstream() {
        let net = Mlp::from_layers(vec![Layer {
            w: array![[0.3, -0.2], [0.1, 0.4], [0.0, 1.0]],
            b: array![0.1, 0.2],
            activation: Activation::Identity,
        }])
        .unwrap();
        let x = array![[1.5, -2.0, 0.5]];
        let up = array![[0.7, -1.1]];
        let g = net.gradient(x.view(), up.clone()).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert!((g.w[0][[i, j]] - x[[0, i]] * up[[0, j]]).abs() < 1e-15);
            }
        }
        assert_eq!(g.b[0], array![0.7, -1.1]);
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::new(&[5, 64, 64, 360], 1.0, &mut rng);
        let text = net.to_text();
        assert!(text.starts_with("mlp 3\nlayer 5 64 relu\n"));
        let back = Mlp::parse_text(&text).unwrap();
        assert_eq!(back, net);
        assert!(matches!(Mlp::parse_text("mlp 1\nlayer 2 2 relu\n1 2\n"), Err(RlError::Parse { .. })));
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[0.0]), 0);
    }
}
