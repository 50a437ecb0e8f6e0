//! A small fully connected network with hand-written backpropagation.
//!
//! Parameters live in one flat `Vec<f64>`. Layer `l` stores its weight matrix
//! row-major (`out x in`) followed by its bias vector, so optimizers, soft
//! target updates, finite-difference checks and checkpoints all work on a
//! single slice.

mod adam;
mod io;

pub use adam::Adam;
pub(crate) use io::read_u32;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RngHandle;

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
    offsets: Vec<usize>,
}

/// Activations kept from a batched forward pass, needed by [`Mlp::backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    batch: usize,
    /// `acts[0]` is the input; `acts[l + 1]` the (post-ReLU) output of layer `l`.
    acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Raw outputs of the last layer, `batch x out` row-major.
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("cache holds at least the input")
    }
}

fn layer_offsets(sizes: &[usize]) -> Vec<usize> {
    let mut offsets = vec![0];
    for w in sizes.windows(2) {
        let last = *offsets.last().unwrap();
        offsets.push(last + w[0] * w[1] + w[1]);
    }
    offsets
}

impl Mlp {
    /// He-style uniform fan-in initialization, zero biases.
    pub fn new(sizes: &[usize], rng: &mut RngHandle) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for l in 0..net.num_layers() {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            let off = net.offsets[l];
            for w in &mut net.params[off..off + fan_in * fan_out] {
                *w = rng.gen_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Spec(format!("invalid layer sizes {sizes:?}")));
        }
        let offsets = layer_offsets(sizes);
        Ok(Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; *offsets.last().unwrap()],
            offsets,
        })
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        if params.len() != net.params.len() {
            return Err(Error::Dimension {
                expected: net.params.len(),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("parameters"));
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// `target <- rate * self + (1 - rate) * target`.
    pub fn soft_update_into(&self, target: &mut Mlp, rate: f64) {
        assert_eq!(
            self.sizes, target.sizes,
            "soft update between mismatched networks"
        );
        if rate == 1.0 {
            target.params.copy_from_slice(&self.params);
            return;
        }
        for (t, s) in target.params.iter_mut().zip(&self.params) {
            *t += rate * (s - *t);
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        if input.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        Ok(self.forward_batch(input, 1))
    }

    /// Outputs for a row-major `batch x in` matrix, without keeping activations.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Vec<f64> {
        debug_assert_eq!(inputs.len(), batch * self.input_dim());
        let mut x = inputs.to_vec();
        for l in 0..self.num_layers() {
            x = self.layer(l, &x, batch);
        }
        x
    }

    pub fn forward_cached(&self, inputs: &[f64], batch: usize) -> Result<ForwardCache> {
        if inputs.len() != batch * self.input_dim() {
            return Err(Error::Dimension {
                expected: batch * self.input_dim(),
                got: inputs.len(),
            });
        }
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(inputs.to_vec());
        for l in 0..self.num_layers() {
            let next = self.layer(l, acts.last().unwrap(), batch);
            acts.push(next);
        }
        Ok(ForwardCache { batch, acts })
    }

    fn layer(&self, l: usize, x: &[f64], batch: usize) -> Vec<f64> {
        let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
        let off = self.offsets[l];
        let w = &self.params[off..off + n_in * n_out];
        let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
        let hidden = l + 1 < self.num_layers();
        let mut y = vec![0.0; batch * n_out];
        for (xr, yr) in x.chunks_exact(n_in).zip(y.chunks_exact_mut(n_out)) {
            for ((yo, wr), bo) in yr.iter_mut().zip(w.chunks_exact(n_in)).zip(b) {
                let z = bo + dot(wr, xr);
                *yo = if hidden { z.max(0.0) } else { z };
            }
        }
        y
    }

    /// Backpropagates `grad_out` (dLoss/dOutput, `batch x out`) through a
    /// cached forward pass. Returns parameter gradients and dLoss/dInput.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let batch = cache.batch;
        assert_eq!(grad_out.len(), batch * self.output_dim());
        let mut grads = vec![0.0; self.params.len()];
        let mut delta = grad_out.to_vec();
        for l in (0..self.num_layers()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.offsets[l];
            let x = &cache.acts[l];
            let w = &self.params[off..off + n_in * n_out];
            let (gw, rest) = grads[off..].split_at_mut(n_in * n_out);
            let gb = &mut rest[..n_out];
            let mut dx = vec![0.0; batch * n_in];
            for ((xr, dr), dxr) in x
                .chunks_exact(n_in)
                .zip(delta.chunks_exact(n_out))
                .zip(dx.chunks_exact_mut(n_in))
            {
                for (o, &d) in dr.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    axpy(d, xr, &mut gw[o * n_in..(o + 1) * n_in]);
                    axpy(d, &w[o * n_in..(o + 1) * n_in], dxr);
                }
            }
            if l > 0 {
                // ReLU gate: x here is the post-activation output of layer l-1
                for (g, &a) in dx.iter_mut().zip(x.iter()) {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            delta = dx;
        }
        (grads, delta)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Row-major stacking of equally sized input rows.
pub fn stack_rows(rows: &[Vec<f64>], dim: usize) -> Result<Vec<f64>> {
    let mut flat = Vec::with_capacity(rows.len() * dim);
    for r in rows {
        if r.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: r.len(),
            });
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        flat.extend_from_slice(r);
    }
    Ok(flat)
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// Mean softmax cross-entropy over a batch, with parameter gradients.
pub fn backward_cross_entropy(
    net: &Mlp,
    inputs: &[Vec<f64>],
    labels: &[usize],
) -> Result<(f64, Vec<f64>)> {
    if inputs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if inputs.len() != labels.len() {
        return Err(Error::Dimension {
            expected: inputs.len(),
            got: labels.len(),
        });
    }
    let classes = net.output_dim();
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::Label { label, classes });
    }
    let flat = stack_rows(inputs, net.input_dim())?;
    cross_entropy_flat(net, &flat, labels)
}

pub(crate) fn cross_entropy_flat(
    net: &Mlp,
    flat: &[f64],
    labels: &[usize],
) -> Result<(f64, Vec<f64>)> {
    let n = labels.len();
    let classes = net.output_dim();
    let cache = net.forward_cached(flat, n)?;
    let mut grad_out = vec![0.0; n * classes];
    let mut loss = 0.0;
    for ((logits, g), &label) in cache
        .output()
        .chunks_exact(classes)
        .zip(grad_out.chunks_exact_mut(classes))
        .zip(labels)
    {
        let lp = log_softmax(logits);
        loss -= lp[label];
        for (gi, l) in g.iter_mut().zip(&lp) {
            *gi = l.exp() / n as f64;
        }
        g[label] -= 1.0 / n as f64;
    }
    let (grads, _) = net.backward(&cache, &grad_out);
    Ok((loss / n as f64, grads))
}

/// Mean squared error over batch and output dimensions, with gradients.
pub fn backward_mse(
    net: &Mlp,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    if inputs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if inputs.len() != targets.len() {
        return Err(Error::Dimension {
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    let n = inputs.len();
    let flat = stack_rows(inputs, net.input_dim())?;
    let flat_targets = stack_rows(targets, net.output_dim())?;
    let cache = net.forward_cached(&flat, n)?;
    let scale = 1.0 / (n * net.output_dim()) as f64;
    let mut loss = 0.0;
    let grad_out: Vec<f64> = cache
        .output()
        .iter()
        .zip(&flat_targets)
        .map(|(y, t)| {
            loss += (y - t) * (y - t);
            2.0 * (y - t) * scale
        })
        .collect();
    let (grads, _) = net.backward(&cache, &grad_out);
    Ok((loss * scale, grads))
}
