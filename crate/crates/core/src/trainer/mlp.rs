//! Fully connected ReLU network with exact backpropagation.
//!
//! Parameters live in one flat vector (per layer: weights row-major out x in,
//! then biases), so SGD updates, gradient logging, and finite-difference
//! checks all operate on plain slices.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::indicators::WeightMatrix;

use super::data::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
}

/// Network architecture and initialization recipe.
#[derive(Debug, Clone)]
pub struct MlpSpec {
    /// Input, hidden..., output sizes; at least two entries.
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub init_seed: u64,
    /// Multiplier on the He standard deviation sqrt(2 / fan_in).
    pub init_scale: f64,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, init_seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::domain("network needs at least input and output layers"));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::domain("layer sizes must be positive"));
        }
        Ok(Self {
            layer_sizes,
            activation: Activation::Relu,
            init_seed,
            init_scale: 1.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
    /// Per layer: (weight offset, bias offset) into `params`.
    offsets: Vec<(usize, usize)>,
}

impl Mlp {
    pub fn init(spec: &MlpSpec) -> Result<Self> {
        if spec.layer_sizes.len() < 2 || spec.layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::domain("invalid layer sizes"));
        }
        let sizes = spec.layer_sizes.clone();
        let mut offsets = Vec::new();
        let mut total = 0;
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            offsets.push((total, total + fan_in * fan_out));
            total += fan_in * fan_out + fan_out;
        }

        let mut rng = ChaCha12Rng::seed_from_u64(spec.init_seed);
        let mut params = vec![0.0; total];
        for l in 0..sizes.len() - 1 {
            let (w_off, b_off) = offsets[l];
            let std = (2.0 / sizes[l] as f64).sqrt() * spec.init_scale;
            for w in &mut params[w_off..b_off] {
                let z: f64 = StandardNormal.sample(&mut rng);
                *w = std * z;
            }
            // biases start at zero
        }
        Ok(Self { sizes, params, offsets })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn layer(&self, l: usize) -> (&[f64], &[f64], usize, usize) {
        let (w_off, b_off) = self.offsets[l];
        let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
        (
            &self.params[w_off..b_off],
            &self.params[b_off..b_off + fan_out],
            fan_in,
            fan_out,
        )
    }

    /// Forward pass for one example; returns all activations (input first,
    /// logits last). Hidden layers apply ReLU, the last layer is linear.
    fn forward_example(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(x.to_vec());
        for l in 0..self.n_layers() {
            let (w, b, fan_in, fan_out) = self.layer(l);
            let input = &acts[l];
            let mut out = vec![0.0; fan_out];
            for i in 0..fan_out {
                let row = &w[i * fan_in..(i + 1) * fan_in];
                let z = b[i] + row.iter().zip(input).map(|(a, v)| a * v).sum::<f64>();
                out[i] = if l + 1 < self.n_layers() { z.max(0.0) } else { z };
            }
            acts.push(out);
        }
        acts
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward_example(x).pop().unwrap()
    }

    /// Numerically stable cross-entropy losses and logits for a batch of
    /// example indices into the dataset.
    pub fn forward_loss(&self, data: &Dataset, indices: &[usize]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        if indices.is_empty() {
            return Err(Error::domain("batch must be nonempty"));
        }
        let mut losses = Vec::with_capacity(indices.len());
        let mut all_logits = Vec::with_capacity(indices.len());
        for &i in indices {
            let logits = self.logits(data.features(i));
            let loss = cross_entropy(&logits, data.label(i));
            if !loss.is_finite() {
                return Err(Error::numerical(format!("non-finite loss on example {i}")));
            }
            losses.push(loss);
            all_logits.push(logits);
        }
        Ok((losses, all_logits))
    }

    /// Exact gradient of the mean cross-entropy over the batch, flattened in
    /// parameter order. Also returns the mean batch loss.
    pub fn grad(&self, data: &Dataset, indices: &[usize]) -> Result<(Vec<f64>, f64)> {
        if indices.is_empty() {
            return Err(Error::domain("batch must be nonempty"));
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut total_loss = 0.0;
        let inv = 1.0 / indices.len() as f64;

        for &idx in indices {
            let acts = self.forward_example(data.features(idx));
            let logits = acts.last().unwrap();
            let label = data.label(idx);
            total_loss += cross_entropy(logits, label);

            // delta at the output: softmax(logits) - onehot(label), scaled
            // by 1/batch for the mean loss.
            let mut delta: Vec<f64> = softmax(logits);
            delta[label] -= 1.0;
            delta.iter_mut().for_each(|d| *d *= inv);

            for l in (0..self.n_layers()).rev() {
                let (w_off, b_off) = self.offsets[l];
                let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
                let input = &acts[l];
                for i in 0..fan_out {
                    let di = delta[i];
                    if di != 0.0 {
                        let row = &mut grad[w_off + i * fan_in..w_off + (i + 1) * fan_in];
                        for (g, &a) in row.iter_mut().zip(input) {
                            *g += di * a;
                        }
                    }
                    grad[b_off + i] += di;
                }
                if l > 0 {
                    let (w, _, _, _) = self.layer(l);
                    let mut prev = vec![0.0; fan_in];
                    for i in 0..fan_out {
                        let di = delta[i];
                        if di != 0.0 {
                            let row = &w[i * fan_in..(i + 1) * fan_in];
                            for (p, &wv) in prev.iter_mut().zip(row) {
                                *p += di * wv;
                            }
                        }
                    }
                    // ReLU derivative through the stored activation.
                    for (p, &a) in prev.iter_mut().zip(&acts[l]) {
                        if a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }

        let mean_loss = total_loss * inv;
        if !mean_loss.is_finite() {
            return Err(Error::numerical("non-finite batch loss"));
        }
        Ok((grad, mean_loss))
    }

    pub fn accuracy(&self, data: &Dataset) -> f64 {
        let mut correct = 0usize;
        for i in 0..data.len() {
            let logits = self.logits(data.features(i));
            if argmax(&logits) == data.label(i) {
                correct += 1;
            }
        }
        correct as f64 / data.len() as f64
    }

    /// Weight matrices (biases excluded) for the norm and spectral measures.
    pub fn weight_matrices(&self) -> Vec<WeightMatrix> {
        (0..self.n_layers())
            .map(|l| {
                let (w, _, fan_in, fan_out) = self.layer(l);
                WeightMatrix::new(fan_out, fan_in, l, w.to_vec())
                    .expect("trained weights are finite")
            })
            .collect()
    }
}

/// log-sum-exp cross-entropy of one logit vector against a label.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    lse - logits[label]
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::data::Dataset;

    fn tiny_dataset() -> Dataset {
        Dataset::from_raw(vec![0.5, -1.0, 1.0, 2.0], vec![0, 1], 2, 2).unwrap()
    }

    #[test]
    fn uniform_logits_give_log_c() {
        // Zero-initialized network: logits are all zero.
        let spec = MlpSpec {
            layer_sizes: vec![2, 3],
            activation: Activation::Relu,
            init_seed: 0,
            init_scale: 0.0,
        };
        let mlp = Mlp::init(&spec).unwrap();
        let data = tiny_dataset();
        let (losses, _) = mlp.forward_loss(&data, &[0, 1]).unwrap();
        for loss in losses {
            assert!((loss - 3f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn dominant_margin_drives_loss_to_zero() {
        let logits = vec![50.0, 0.0, 0.0];
        let loss = cross_entropy(&logits, 0);
        assert!(loss < 1e-20, "loss {loss}");
    }

    #[test]
    fn empty_batch_is_rejected() {
        let spec = MlpSpec::new(vec![2, 2], 1).unwrap();
        let mlp = Mlp::init(&spec).unwrap();
        let data = tiny_dataset();
        assert!(mlp.forward_loss(&data, &[]).is_err());
        assert!(mlp.grad(&data, &[]).is_err());
    }

    #[test]
    fn duplicated_example_matches_single() {
        let spec = MlpSpec::new(vec![2, 4, 2], 7).unwrap();
        let mlp = Mlp::init(&spec).unwrap();
        let data = tiny_dataset();
        let (g1, l1) = mlp.grad(&data, &[0]).unwrap();
        let (g4, l4) = mlp.grad(&data, &[0, 0, 0, 0]).unwrap();
        assert!((l1 - l4).abs() < 1e-12);
        for (a, b) in g1.iter().zip(&g4) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_network_output_bias_gradient_is_softmax_minus_onehot() {
        let spec = MlpSpec {
            layer_sizes: vec![2, 2],
            activation: Activation::Relu,
            init_seed: 0,
            init_scale: 0.0,
        };
        let mlp = Mlp::init(&spec).unwrap();
        let data = tiny_dataset();
        let (grad, _) = mlp.grad(&data, &[0]).unwrap();
        // Parameters: 4 weights then 2 biases. Uniform softmax is 1/2.
        assert!((grad[4] - (0.5 - 1.0)).abs() < 1e-12);
        assert!((grad[5] - 0.5).abs() < 1e-12);
    }
}
