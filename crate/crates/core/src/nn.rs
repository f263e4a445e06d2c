//! Dense networks with hand-written backpropagation, Adam, replay buffers and
//! the exploration-noise schedule.
//!
//! Batches are row-major: a batch of `B` inputs is a `B × in` matrix.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("input has {got} columns, network expects {expected}")]
    Shape { expected: usize, got: usize },
    #[error("networks have different architectures")]
    Architecture,
    #[error("replay buffer holds {len} of {capacity} records; sampling needs a full buffer")]
    BufferNotFull { len: usize, capacity: usize },
    #[error("parameter vector has {got} entries, network has {expected}")]
    ParamCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Identity => z.clone(),
            Activation::Relu => z.mapv(|v| v.max(0.0)),
            Activation::Tanh => z.mapv(f64::tanh),
            Activation::Sigmoid => z.mapv(sigmoid),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: &Array2<f64>, a: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Identity => Array2::ones(z.raw_dim()),
            Activation::Relu => z.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 }),
            Activation::Tanh => a.mapv(|t| 1.0 - t * t),
            Activation::Sigmoid => a.mapv(|s| s * (1.0 - s)),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `in × out`.
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Layer inputs and pre-activations kept by [`Mlp::forward_cached`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

/// Parameter-shaped buffers (gradients, Adam moments).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            biases: net.layers.iter().map(|l| Array1::zeros(l.biases.raw_dim())).collect(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

impl Mlp {
    /// Builds a network with layer widths `sizes` (input first). Hidden layers
    /// use `hidden`, the last layer `output`. Weights and biases are uniform in
    /// `±1/√fan_in`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "a network needs at least input and output widths");
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                Layer {
                    weights: Array2::from_shape_simple_fn((w[0], w[1]), || rng.random_range(-bound..bound)),
                    biases: Array1::from_shape_simple_fn(w[1], || rng.random_range(-bound..bound)),
                    activation: if i == last { output } else { hidden },
                }
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].weights.ncols()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        self.check_input(x)?;
        let mut a = x.clone();
        for l in &self.layers {
            let z = a.dot(&l.weights) + &l.biases;
            a = l.activation.apply(&z);
        }
        Ok(a)
    }

    pub fn forward_cached(&self, x: &Array2<f64>) -> Result<ForwardCache, NnError> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.clone();
        for l in &self.layers {
            let z = a.dot(&l.weights) + &l.biases;
            let next = l.activation.apply(&z);
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        Ok(ForwardCache { inputs, pre, output: a })
    }

    /// Single-sample convenience wrapper.
    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        let x = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
        Ok(self.forward(&x)?.into_raw_vec_and_offset().0)
    }

    /// Gradients of `Σ grad_out ⊙ output` with respect to every parameter and
    /// to the input. Losses that average over the batch fold the `1/B` into
    /// `grad_out`.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Array2<f64>) -> (Gradients, Array2<f64>) {
        assert_eq!(grad_out.raw_dim(), cache.output.raw_dim(), "upstream gradient shape");
        let n = self.layers.len();
        let mut weights = Vec::with_capacity(n);
        let mut biases = Vec::with_capacity(n);
        let mut upstream = grad_out.clone();
        let mut a_out = cache.output.clone();
        for i in (0..n).rev() {
            let l = &self.layers[i];
            let delta = upstream * &l.activation.derivative(&cache.pre[i], &a_out);
            weights.push(cache.inputs[i].t().dot(&delta));
            biases.push(delta.sum_axis(Axis(0)));
            upstream = delta.dot(&l.weights.t());
            a_out = cache.inputs[i].clone();
        }
        weights.reverse();
        biases.reverse();
        (Gradients { weights, biases }, upstream)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Parameters flattened layer by layer: weights row-major, then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.biases.iter());
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<(), NnError> {
        if flat.len() != self.num_params() {
            return Err(NnError::ParamCount {
                expected: self.num_params(),
                got: flat.len(),
            });
        }
        let mut it = flat.iter();
        for l in &mut self.layers {
            for v in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *v = *it.next().expect("length checked");
            }
        }
        Ok(())
    }

    pub fn same_architecture(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.weights.raw_dim() == b.weights.raw_dim() && a.activation == b.activation
            })
    }

    /// `θ' ← (1−τ)θ' + τθ` with `self` as the target.
    pub fn soft_update(&mut self, source: &Mlp, tau: f64) -> Result<(), NnError> {
        if !self.same_architecture(source) {
            return Err(NnError::Architecture);
        }
        for (t, s) in self.layers.iter_mut().zip(&source.layers) {
            t.weights.zip_mut_with(&s.weights, |a, &b| *a = (1.0 - tau) * *a + tau * b);
            t.biases.zip_mut_with(&s.biases, |a, &b| *a = (1.0 - tau) * *a + tau * b);
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.biases.iter()).all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<(), NnError> {
        if x.ncols() != self.input_dim() {
            return Err(NnError::Shape {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub t: u64,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            epsilon,
            t: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    pub fn step(&mut self, net: &mut Mlp, g: &Gradients) {
        self.t += 1;
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.epsilon, self.lr);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        };
        for (i, layer) in net.layers.iter_mut().enumerate() {
            ndarray::Zip::from(&mut layer.weights)
                .and(&g.weights[i])
                .and(&mut self.m.weights[i])
                .and(&mut self.v.weights[i])
                .for_each(|p, &g, m, v| update(p, g, m, v));
            ndarray::Zip::from(&mut layer.biases)
                .and(&g.biases[i])
                .and(&mut self.m.biases[i])
                .and(&mut self.v.biases[i])
                .for_each(|p, &g, m, v| update(p, g, m, v));
        }
    }
}

/// Fixed-capacity ring of records; the oldest record is overwritten first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayBuffer<T> {
    items: Vec<T>,
    capacity: usize,
    cursor: usize,
}

impl<T: Clone> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: Vec::with_capacity(capacity),
            capacity,
            cursor: 0,
        }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.cursor] = item;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_full(&self) -> bool {
        self.items.len() == self.capacity
    }

    pub fn get(&self, i: usize) -> Option<&T> {
        self.items.get(i)
    }

    /// `batch` uniform draws with replacement from whatever the buffer holds,
    /// which must be at least `batch` records.
    pub fn sample_filled<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&T>, NnError> {
        if self.items.len() < batch.max(1) {
            return Err(NnError::BufferNotFull {
                len: self.items.len(),
                capacity: self.capacity,
            });
        }
        Ok((0..batch).map(|_| &self.items[rng.random_range(0..self.items.len())]).collect())
    }

    /// `batch` uniform draws with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&T>, NnError> {
        if !self.is_full() {
            return Err(NnError::BufferNotFull {
                len: self.items.len(),
                capacity: self.capacity,
            });
        }
        Ok((0..batch).map(|_| &self.items[rng.random_range(0..self.capacity)]).collect())
    }
}

/// Per-channel Gaussian exploration noise on the normalized action scale,
/// decayed stepwise once training passes `decay_start` episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub sigma0: Vec<f64>,
    pub decay_rate: f64,
    pub decay_every: usize,
    pub decay_start: usize,
    pub sigma: Vec<f64>,
}

impl NoiseSchedule {
    pub fn new(sigma0: Vec<f64>, decay_rate: f64, decay_every: usize, decay_start: usize) -> Self {
        Self {
            sigma: sigma0.clone(),
            sigma0,
            decay_rate,
            decay_every: decay_every.max(1),
            decay_start,
        }
    }

    pub fn set_episode(&mut self, episode: usize) {
        let k = episode.saturating_sub(self.decay_start) / self.decay_every;
        let factor = self.decay_rate.powi(k as i32);
        self.sigma = self.sigma0.iter().map(|s| s * factor).collect();
    }

    pub fn zero(&mut self) {
        self.sigma.iter_mut().for_each(|s| *s = 0.0);
    }

    /// `a + N(0, σ²)` per channel, clipped to `[-1, 1]`.
    pub fn perturb<R: Rng + ?Sized>(&self, a: &[f64], rng: &mut R) -> Vec<f64> {
        assert_eq!(a.len(), self.sigma.len(), "one sigma per action channel");
        a.iter()
            .zip(&self.sigma)
            .map(|(&x, &s)| {
                let noisy = if s > 0.0 {
                    x + Normal::new(0.0, s).expect("positive sigma").sample(rng)
                } else {
                    x
                };
                noisy.clamp(-1.0, 1.0)
            })
            .collect()
    }
}

/// Stacks equally sized rows into a batch matrix.
pub fn stack_rows<'a, I>(rows: I, width: usize) -> Array2<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut data = Vec::new();
    let mut n = 0;
    for r in rows {
        assert_eq!(r.len(), width, "row width");
        data.extend_from_slice(r);
        n += 1;
    }
    Array2::from_shape_vec((n, width), data).expect("rows have equal width")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn zero_net_gives_zero_preactivations() {
        let mut net = Mlp::new(&[3, 4, 2], Activation::Relu, Activation::Identity, &mut rng());
        let n = net.num_params();
        net.set_params(&vec![0.0; n]).unwrap();
        let c = net.forward_cached(&array![[1.0, -2.0, 3.0]]).unwrap();
        assert!(c.pre.iter().all(|z| z.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn single_linear_layer_is_matrix_product() {
        let mut net = Mlp::new(&[2, 2], Activation::Relu, Activation::Identity, &mut rng());
        net.set_params(&[1.0, 2.0, 3.0, 4.0, 0.5, -0.5]).unwrap();
        // W = [[1, 2], [3, 4]] (in × out), so out = x·W + b.
        let y = net.forward_one(&[1.0, 1.0]).unwrap();
        assert_eq!(y, vec![4.5, 5.5]);
    }

    #[test]
    fn two_layer_matches_hand_composition() {
        let net = Mlp::new(&[4, 3, 2], Activation::Tanh, Activation::Sigmoid, &mut rng());
        let x = [0.3, -0.7, 1.1, 0.05];
        let (w1, b1) = (&net.layers[0].weights, &net.layers[0].biases);
        let (w2, b2) = (&net.layers[1].weights, &net.layers[1].biases);
        let mut h = [0.0; 3];
        for j in 0..3 {
            let mut z = b1[j];
            for i in 0..4 {
                z += x[i] * w1[[i, j]];
            }
            h[j] = z.tanh();
        }
        let y = net.forward_one(&x).unwrap();
        for k in 0..2 {
            let mut z = b2[k];
            for j in 0..3 {
                z += h[j] * w2[[j, k]];
            }
            assert!((y[k] - 1.0 / (1.0 + (-z).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let net = Mlp::new(&[3, 2], Activation::Relu, Activation::Identity, &mut rng());
        assert_eq!(
            net.forward(&Array2::zeros((1, 4))).unwrap_err(),
            NnError::Shape { expected: 3, got: 4 }
        );
    }

    #[test]
    fn linear_layer_weight_gradient() {
        let net = Mlp::new(&[3, 2], Activation::Relu, Activation::Identity, &mut rng());
        let x = array![[1.0, 2.0, -1.0]];
        let g = array![[0.5, -2.0]];
        let c = net.forward_cached(&x).unwrap();
        let (grads, dx) = net.backward(&c, &g);
        assert_eq!(grads.weights[0], x.t().dot(&g));
        assert_eq!(grads.biases[0], array![0.5, -2.0]);
        assert_eq!(dx, g.dot(&net.layers[0].weights.t()));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = Mlp::new(&[5, 8, 3], Activation::Relu, Activation::Tanh, &mut rng());
        let c = net.forward_cached(&Array2::ones((4, 5))).unwrap();
        let (g, dx) = net.backward(&c, &Array2::zeros((4, 3)));
        assert!(g.flatten().iter().all(|&v| v == 0.0));
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn finite_difference_gradients() {
        let mut r = rng();
        for (out_act, seed) in [(Activation::Tanh, 1), (Activation::Sigmoid, 2), (Activation::Identity, 3)] {
            let net = Mlp::new(&[6, 7, 5, 3], Activation::Relu, out_act, &mut ChaCha8Rng::seed_from_u64(seed));
            let x = Array2::from_shape_simple_fn((4, 6), || r.random_range(-1.0..1.0));
            let up = Array2::from_shape_simple_fn((4, 3), || r.random_range(-1.0..1.0));
            let loss = |n: &Mlp| (n.forward(&x).unwrap() * &up).sum();
            let (g, _) = net.backward(&net.forward_cached(&x).unwrap(), &up);
            let analytic = g.flatten();
            let theta = net.params();
            let mut probe = net.clone();
            for i in 0..theta.len() {
                let h = 1e-6;
                let mut p = theta.clone();
                p[i] += h;
                probe.set_params(&p).unwrap();
                let plus = loss(&probe);
                p[i] -= 2.0 * h;
                probe.set_params(&p).unwrap();
                let minus = loss(&probe);
                let fd = (plus - minus) / (2.0 * h);
                let scale = fd.abs().max(analytic[i].abs()).max(1e-6);
                assert!((fd - analytic[i]).abs() / scale < 1e-4, "param {i}: fd {fd} vs {}", analytic[i]);
            }
        }
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut net = Mlp::new(&[2, 1], Activation::Relu, Activation::Identity, &mut rng());
        let before = net.params();
        let mut opt = Adam::new(&net, 1e-3, 0.9, 0.999, 1e-8);
        let mut g = Gradients::zeros_like(&net);
        g.weights[0].fill(0.7);
        g.biases[0].fill(-2.0);
        opt.step(&mut net, &g);
        // m̂ = g, v̂ = g², so the step is lr·g/(|g| + ε).
        let after = net.params();
        let expect = [-1e-3 * 0.7 / (0.7 + 1e-8), -1e-3 * 0.7 / (0.7 + 1e-8), 1e-3 * 2.0 / (2.0 + 1e-8)];
        for i in 0..3 {
            assert!((after[i] - before[i] - expect[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn adam_zero_gradient_and_zero_lr_are_identity() {
        let mut net = Mlp::new(&[3, 4, 2], Activation::Relu, Activation::Identity, &mut rng());
        let before = net.clone();
        let mut opt = Adam::new(&net, 1e-3, 0.9, 0.999, 1e-8);
        let zero = Gradients::zeros_like(&net);
        opt.step(&mut net, &zero);
        assert_eq!(net, before);
        let mut g = Gradients::zeros_like(&net);
        g.weights[1].fill(3.0);
        let mut frozen = Adam::new(&net, 0.0, 0.9, 0.999, 1e-8);
        frozen.step(&mut net, &g);
        assert_eq!(net, before);
    }

    #[test]
    fn soft_update_cases() {
        let src = Mlp::new(&[2, 3, 1], Activation::Relu, Activation::Identity, &mut rng());
        let mut tgt = Mlp::new(&[2, 3, 1], Activation::Relu, Activation::Identity, &mut ChaCha8Rng::seed_from_u64(5));
        let orig = tgt.clone();
        tgt.soft_update(&src, 0.0).unwrap();
        assert_eq!(tgt, orig);
        tgt.soft_update(&src, 1.0).unwrap();
        assert_eq!(tgt, src);

        let n = src.num_params();
        let mut ones = src.clone();
        ones.set_params(&vec![1.0; n]).unwrap();
        let mut zeros = src.clone();
        zeros.set_params(&vec![0.0; n]).unwrap();
        zeros.soft_update(&ones, 0.001).unwrap();
        assert!(zeros.params().iter().all(|&v| v == 0.001));

        let other = Mlp::new(&[2, 4, 1], Activation::Relu, Activation::Identity, &mut rng());
        assert_eq!(tgt.soft_update(&other, 0.5), Err(NnError::Architecture));
    }

    #[test]
    fn replay_ring_and_sampling() {
        let mut buf = ReplayBuffer::new(3);
        for i in 0..2 {
            buf.push(i);
        }
        assert!(matches!(buf.sample(2, &mut rng()), Err(NnError::BufferNotFull { len: 2, capacity: 3 })));
        for i in 2..5 {
            buf.push(i);
        }
        assert_eq!(buf.len(), 3);
        // 0 and 1 were overwritten by 3 and 4.
        assert_eq!((buf.get(0), buf.get(1), buf.get(2)), (Some(&3), Some(&4), Some(&2)));
        let a: Vec<i32> = buf.sample(128, &mut rng()).unwrap().into_iter().copied().collect();
        let b: Vec<i32> = buf.sample(128, &mut rng()).unwrap().into_iter().copied().collect();
        assert_eq!(a, b);
        assert_eq!(a.len(), 128);

        let mut partial = ReplayBuffer::new(10);
        partial.push(7);
        assert!(partial.sample_filled(2, &mut rng()).is_err());
        partial.push(8);
        let got = partial.sample_filled(2, &mut rng()).unwrap();
        assert!(got.iter().all(|&&v| v == 7 || v == 8));
    }

    #[test]
    fn noise_schedule_decay() {
        let mut s = NoiseSchedule::new(vec![0.15, 0.3, 0.15], 0.99, 2, 1000);
        s.set_episode(999);
        assert_eq!(s.sigma, vec![0.15, 0.3, 0.15]);
        s.set_episode(1004);
        assert!((s.sigma[1] - 0.3 * 0.99 * 0.99).abs() < 1e-15);
        s.set_episode(1005);
        assert!((s.sigma[1] - 0.3 * 0.99 * 0.99).abs() < 1e-15);
    }

    #[test]
    fn zero_noise_is_identity() {
        let mut s = NoiseSchedule::new(vec![0.2; 4], 0.99, 2, 0);
        s.zero();
        let a = [0.1, -0.5, 0.99, -1.0];
        assert_eq!(s.perturb(&a, &mut rng()), a.to_vec());
    }

    proptest! {
        #[test]
        fn perturbed_actions_stay_in_bounds(seed in 0u64..10_000, a in proptest::collection::vec(-1.0f64..=1.0, 5)) {
            let s = NoiseSchedule::new(vec![0.15, 0.3, 0.15, 0.15, 0.3], 0.99, 2, 0);
            let out = s.perturb(&a, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert!(out.iter().all(|v| (-1.0..=1.0).contains(v)));
        }

        #[test]
        fn soft_update_contracts(tau in 0.0f64..=1.0, seed in 0u64..1000) {
            let src = Mlp::new(&[3, 4, 2], Activation::Relu, Activation::Identity, &mut ChaCha8Rng::seed_from_u64(seed));
            let mut tgt = Mlp::new(&[3, 4, 2], Activation::Relu, Activation::Identity, &mut ChaCha8Rng::seed_from_u64(seed + 1));
            let old = tgt.params();
            tgt.soft_update(&src, tau).unwrap();
            for ((n, o), s) in tgt.params().iter().zip(&old).zip(src.params()) {
                prop_assert!(((n - s).abs() - (1.0 - tau) * (o - s).abs()).abs() < 1e-12);
            }
        }

        #[test]
        fn ring_never_exceeds_capacity(cap in 1usize..50, pushes in 0usize..200) {
            let mut buf = ReplayBuffer::new(cap);
            for i in 0..pushes {
                buf.push(i);
                prop_assert!(buf.len() <= cap);
            }
            if pushes >= cap {
                // The newest `cap` records survive.
                let mut kept: Vec<usize> = (0..cap).map(|i| *buf.get(i).unwrap()).collect();
                kept.sort();
                prop_assert_eq!(kept, ((pushes - cap)..pushes).collect::<Vec<_>>());
            }
        }
    }
}
