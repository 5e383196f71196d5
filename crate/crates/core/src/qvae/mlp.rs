use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Fully connected layer, `weights` stored `n_out × n_in` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            bias: vec![0.0; n_out],
        }
    }

    /// Weights N(0, gain²/n_in), zero bias.
    pub fn random<R: Rng + ?Sized>(n_in: usize, n_out: usize, gain: f64, rng: &mut R) -> Self {
        let dist = Normal::new(0.0, gain / (n_in as f64).sqrt()).expect("positive stdev");
        let mut layer = Self::zeros(n_in, n_out);
        layer.weights.iter_mut().for_each(|w| *w = dist.sample(rng));
        layer
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_out)
            .map(|o| {
                let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
                self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }
}

/// Rectifier network: ReLU after every layer except the last.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Layer inputs kept for the backward pass.
pub struct MlpCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Mlp {
    /// He-initialized hidden layers and a final layer scaled by `final_gain`.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], final_gain: f64, rng: &mut R) -> Self {
        let n = widths.len() - 1;
        let layers = (0..n)
            .map(|k| {
                let gain = if k + 1 == n { final_gain } else { 2f64.sqrt() };
                Dense::random(widths[k], widths[k + 1], gain, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn n_in(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_out(&self) -> usize {
        self.layers.last().expect("at least one layer").n_out
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward_cached(x).map(|(y, _)| y)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        if x.len() != self.n_in() {
            return Err(Error::Decoder {
                expected: self.n_in(),
                got: x.len(),
            });
        }
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
        };
        let mut h = x.to_vec();
        for (k, layer) in self.layers.iter().enumerate() {
            let pre = layer.apply(&h);
            cache.inputs.push(h);
            h = if k + 1 < self.layers.len() {
                pre.iter().map(|v| v.max(0.0)).collect()
            } else {
                pre.clone()
            };
            cache.pre.push(pre);
        }
        Ok((h, cache))
    }

    /// Accumulates parameter gradients into `grads` (same layout as
    /// [`Mlp::params_flat`]) and returns the input cotangent.
    pub fn backward(&self, cache: &MlpCache, g_out: &[f64], grads: &mut [f64]) -> Vec<f64> {
        let offsets = self.offsets();
        let mut g = g_out.to_vec();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            if k + 1 < self.layers.len() {
                for (gi, p) in g.iter_mut().zip(&cache.pre[k]) {
                    if *p <= 0.0 {
                        *gi = 0.0;
                    }
                }
            }
            let x = &cache.inputs[k];
            let (gw, gb) = grads[offsets[k]..offsets[k + 1]].split_at_mut(layer.n_in * layer.n_out);
            let mut g_in = vec![0.0; layer.n_in];
            for o in 0..layer.n_out {
                if g[o] == 0.0 {
                    continue;
                }
                gb[o] += g[o];
                let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                let grow = &mut gw[o * layer.n_in..(o + 1) * layer.n_in];
                for i in 0..layer.n_in {
                    grow[i] += g[o] * x[i];
                    g_in[i] += g[o] * row[i];
                }
            }
            g = g_in;
        }
        g
    }

    fn offsets(&self) -> Vec<usize> {
        let mut out = vec![0];
        for l in &self.layers {
            out.push(out.last().unwrap() + l.weights.len() + l.bias.len());
        }
        out
    }

    pub fn n_params(&self) -> usize {
        *self.offsets().last().unwrap()
    }

    /// Per layer: weights then bias.
    pub fn params_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        let mut k = 0;
        for l in &mut self.layers {
            for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *v = flat[k];
                k += 1;
            }
        }
    }
}
