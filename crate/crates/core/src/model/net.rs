//! Fully connected network over a flat parameter slice.
//!
//! Each layer stores its weight matrix (`out × in`, row-major) followed by
//! its bias. Hidden layers use ReLU; the output layer is affine.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Dense {
    /// Layer widths from input to output.
    dims: Vec<usize>,
}

/// Per-layer activations retained for backpropagation.
pub(crate) struct Trace {
    /// `acts[0]` is the input, `acts[l]` the post-activation output of layer l.
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub(crate) fn output(&self) -> &[f64] {
        self.acts.last().expect("at least the input layer")
    }
}

impl Dense {
    pub(crate) fn new(dims: Vec<usize>) -> Self {
        debug_assert!(dims.len() >= 2);
        Self { dims }
    }

    pub(crate) fn param_len(&self) -> usize {
        self.dims.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    /// Glorot-uniform weights, zero biases.
    pub(crate) fn glorot(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_len());
        for w in self.dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            out.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)));
            out.extend(core::iter::repeat_n(0.0, fan_out));
        }
        out
    }

    pub(crate) fn forward(&self, params: &[f64], input: Vec<f64>) -> Trace {
        let mut acts = Vec::with_capacity(self.dims.len());
        acts.push(input);
        let mut offset = 0;
        let last = self.dims.len() - 2;
        for (layer, w) in self.dims.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &params[offset..offset + n_in * n_out];
            let bias = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_out * (n_in + 1);
            let x = acts.last().expect("input present");
            let mut z: Vec<f64> = weights
                .chunks_exact(n_in)
                .zip(bias)
                .map(|(row, b)| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b)
                .collect();
            if layer != last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        Trace { acts }
    }

    /// Accumulates `scale · ∂(grad_out · output)/∂params` into `grad`.
    pub(crate) fn backward(&self, params: &[f64], trace: &Trace, grad_out: &[f64], scale: f64, grad: &mut [f64]) {
        let mut offsets = Vec::with_capacity(self.dims.len() - 1);
        let mut offset = 0;
        for w in self.dims.windows(2) {
            offsets.push(offset);
            offset += w[1] * (w[0] + 1);
        }

        let mut delta: Vec<f64> = grad_out.iter().map(|g| g * scale).collect();
        for layer in (0..self.dims.len() - 1).rev() {
            let (n_in, n_out) = (self.dims[layer], self.dims[layer + 1]);
            let base = offsets[layer];
            let x = &trace.acts[layer];
            for (j, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                let row = &mut grad[base + j * n_in..base + (j + 1) * n_in];
                row.iter_mut().zip(x).for_each(|(g, xi)| *g += d * xi);
                grad[base + n_in * n_out + j] += d;
            }
            if layer == 0 {
                break;
            }
            let weights = &params[base..base + n_in * n_out];
            let mut prev = vec![0.0; n_in];
            for (row, d) in weights.chunks_exact(n_in).zip(&delta) {
                prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
            }
            // ReLU derivative of the previous layer's output
            for (p, a) in prev.iter_mut().zip(x) {
                if *a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
    }
}
